"""Command-line entry point.

Subcommands:
    simulate   run a scenario file, write trace.csv + summary.json
    phase1     run the bundled grasp-and-carry scenario
    phase2     run the bundled painting scenario
    analyze    compare two recordings column by column
    selftest   run the numerical invariant suite

Exit codes: 0 success, 1 usage error, 2 input error, 3 numerical failure.
Set WBCTL_LOG=DEBUG (or INFO, WARNING) for logging verbosity.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis
from .errors import ConfigError, ContractError, DecodeError, SingularityError, WbctlError
from .kernels import backend_name

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

log = logging.getLogger("wbctl")

# --set keys applied to the scenario dict; eta_b/eta_a touch the initial mode
_OVERRIDE_KEYS = (
    "duration", "seed", "payload_mass", "eta_b", "eta_a",
    "eta_b_manipulation", "eta_a_manipulation", "eta_b_locomotion", "eta_a_locomotion",
    "k_cart", "d_cart", "k_joint", "d_joint", "m_adm", "d_adm", "admittance_level",
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="wbctl", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command")

    def add_run_args(p, scenario_required):
        if scenario_required:
            p.add_argument("--scenario", required=True, help="scenario YAML file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override a scenario value (repeatable)")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        p.add_argument("--write-scenario", default=None, metavar="PATH",
                       help="also dump the effective scenario YAML")

    add_run_args(sub.add_parser("simulate", help="run a scenario file"), True)
    add_run_args(sub.add_parser("phase1", help="bundled grasp-and-carry scenario"), False)
    add_run_args(sub.add_parser("phase2", help="bundled painting scenario"), False)

    pa = sub.add_parser("analyze", help="compare two recordings")
    pa.add_argument("--with", dest="with_csv", required=True, help="assisted recording CSV")
    pa.add_argument("--without", dest="without_csv", required=True, help="unassisted recording CSV")
    pa.add_argument("--columns", default=None,
                    help="comma-separated column names (default: all shared columns)")
    pa.add_argument("--out", default=None, help="output directory (default: print JSON)")

    ps = sub.add_parser("selftest", help="run the numerical invariant suite")
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--chain", default=None, help="chain YAML to validate and test")
    ps.add_argument("--trials", type=int, default=200)
    return parser


def _parse_overrides(pairs) -> dict:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override '{pair}' is not KEY=VALUE")
        key, value = pair.split("=", 1)
        key = key.strip()
        if key not in _OVERRIDE_KEYS:
            raise ConfigError(f"unknown override key '{key}' (known: {', '.join(_OVERRIDE_KEYS)})")
        out[key] = value
    return out


def _apply_overrides(data: dict, overrides: dict) -> dict:
    def floats(text):
        return [float(v) for v in str(text).split(",")]

    for key, value in overrides.items():
        if key == "duration":
            data["duration"] = float(value)
        elif key == "seed":
            data["seed"] = int(value)
        elif key == "payload_mass":
            data.setdefault("payload", {})["mass"] = float(value)
        elif key == "admittance_level":
            level = int(value)
            if level not in (0, 1, 2):
                raise ConfigError("admittance_level must be 0, 1 or 2")
            presets = data.get("admittance", {}).get("level_presets")
            if presets is None:
                from .admittance import AdmittanceParams
                presets = [
                    {"lambda": lam.tolist(), "damping": d.tolist()}
                    for lam, d in AdmittanceParams.default().level_presets
                ]
            data.setdefault("admittance", {})["level_presets"] = presets
            data["admittance"]["lambda_d"] = presets[level]["lambda"]
            data["admittance"]["d_d"] = presets[level]["damping"]
        elif key in ("m_adm", "d_adm"):
            data.setdefault("base_admittance", {})[key] = floats(value)
        elif key in ("k_cart", "d_cart"):
            vals = floats(value)
            data.setdefault("gains", {})[key] = vals * 6 if len(vals) == 1 else vals
        elif key in ("k_joint", "d_joint"):
            vals = floats(value)
            data.setdefault("gains", {})[key] = vals[0] if len(vals) == 1 else vals
        elif key.startswith("eta_"):
            parts = key.split("_")
            which = parts[1]                      # 'b' or 'a'
            mode = parts[2] if len(parts) > 2 else data.get("priority", {}).get("initial", "manipulation")
            from .controller import ETA_LOCOMOTION, ETA_MANIPULATION
            defaults = {"manipulation": list(ETA_MANIPULATION), "locomotion": list(ETA_LOCOMOTION)}
            prio = data.setdefault("priority", {})
            pair = list(prio.get(mode, defaults[mode]))
            pair[0 if which == "b" else 1] = float(value)
            prio[mode] = pair
    return data


def _run_and_write(scenario_dict: dict, args, base_dir=None) -> int:
    from .scenarios import scenario_from_dict, scenario_to_dict
    from .simulator import run

    overrides = _parse_overrides(args.overrides)
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    scenario_dict = _apply_overrides(scenario_dict, overrides)
    scenario = scenario_from_dict(scenario_dict, base_dir=base_dir)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.write_scenario:
        import yaml
        with open(args.write_scenario, "w", encoding="utf-8") as fh:
            yaml.safe_dump(scenario_to_dict(scenario), fh, sort_keys=False)

    trace = run(scenario)
    trace.to_csv(out_dir / "trace.csv")
    summary = trace.summary()
    summary["overrides"] = overrides
    with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    log.info("wrote %s and %s", out_dir / "trace.csv", out_dir / "summary.json")
    if trace.truncated:
        print(f"run truncated at t={trace.truncation['t']:.3f}: {trace.truncation['reason']}",
              file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"{scenario.name}: {len(trace)} records -> {out_dir}")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    import yaml
    path = Path(args.scenario)
    if not path.exists():
        print(f"scenario file not found: {path}", file=sys.stderr)
        return EXIT_INPUT
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = f" at line {mark.line + 1}" if mark is not None else ""
        print(f"{path}: invalid YAML{line}", file=sys.stderr)
        return EXIT_INPUT
    return _run_and_write(data, args, base_dir=path.parent)


def _cmd_phase(name: str, args) -> int:
    from .scenarios import bundled_scenario, scenario_to_dict
    return _run_and_write(scenario_to_dict(bundled_scenario(name)), args)


def _cmd_analyze(args) -> int:
    for path in (args.with_csv, args.without_csv):
        if not Path(path).exists():
            print(f"input file not found: {path}", file=sys.stderr)
            return EXIT_INPUT
    if args.columns:
        columns = [c.strip() for c in args.columns.split(",") if c.strip()]
    else:
        import csv as _csv
        def header_of(path):
            with open(path, newline="", encoding="utf-8") as fh:
                return [h.strip() for h in next(_csv.reader(fh))]
        ha = header_of(args.with_csv)
        hb = header_of(args.without_csv)
        columns = [c for c in ha[1:] if c in hb]
        if not columns:
            print("no shared columns to analyze", file=sys.stderr)
            return EXIT_INPUT

    report = {"with": str(args.with_csv), "without": str(args.without_csv), "columns": {}}
    for column in columns:
        sa = analysis.read_signal_csv(args.with_csv, column)
        sb = analysis.read_signal_csv(args.without_csv, column)
        corr = analysis.cross_correlation(sa, sb)
        entry = {"r_peak": corr.r_peak, "tau_peak": corr.tau_peak}
        try:
            entry.update(analysis.reduction_stats(sa, sb).as_dict())
        except ContractError as exc:
            entry["reduction_error"] = str(exc)
        report["columns"][column] = entry

    text = json.dumps(report, indent=2)
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "stats.json").write_text(text + "\n", encoding="utf-8")
        print(f"wrote {out_dir / 'stats.json'}")
    else:
        print(text)
    return EXIT_OK


def _selftest_checks(rng: np.ndarray, trials: int, chain) -> list:
    from . import dynamics
    from .admittance import AdmittanceParams, AdmittanceState, FRAME_EE, WrenchReading, step
    from .chain import JointState
    from .controller import PriorityWeights, _weight_inverse
    from .hmi import InterfaceState, decode, encode

    results = []

    def record(name, ok, detail=""):
        results.append((name, bool(ok), detail))

    def random_state():
        while True:
            q = np.concatenate([rng.uniform(-1, 1, 3), rng.uniform(-1.4, 1.4, chain.arm_dofs)])
            state = JointState(q, rng.uniform(-0.5, 0.5, chain.dofs))
            jac = dynamics.jacobian_ee(chain, state)
            if np.linalg.svd(jac, compute_uv=False).min() > 0.02:
                return state

    sym_err = pd_ok = cons_err = null_err = 0.0
    for _ in range(trials):
        state = random_state()
        mass = dynamics.mass_matrix(chain, state)
        sym_err = max(sym_err, float(np.max(np.abs(mass - mass.T))))
        try:
            np.linalg.cholesky(mass)
            pd_ok += 1
        except np.linalg.LinAlgError:
            pass
        jac = dynamics.jacobian_ee(chain, state)
        m_inv = np.linalg.inv(mass)
        a = jac @ m_inv
        lam = np.linalg.inv(a @ jac.T)
        force = rng.uniform(-30, 30, 6)
        weights = PriorityWeights.manipulation()
        w_inv = _weight_inverse(weights, mass)
        gram_w = a @ w_inv @ a.T
        tau_task = w_inv @ a.T @ np.linalg.solve(gram_w, (a @ jac.T) @ force)
        jbar = m_inv @ jac.T @ lam
        cons_err = max(cons_err, float(np.linalg.norm(jbar.T @ tau_task - force) / np.linalg.norm(force)))
        tau_0 = rng.uniform(-10, 10, chain.dofs)
        tau_null = tau_0 - w_inv @ a.T @ np.linalg.solve(gram_w, a @ tau_0)
        null_err = max(null_err, float(np.linalg.norm(lam @ a @ tau_null)))
    record("mass matrix symmetric", sym_err < 1e-12, f"max asym {sym_err:.2e}")
    record("mass matrix positive definite", pd_ok == trials, f"{int(pd_ok)}/{trials}")
    record("Cartesian consistency", cons_err < 1e-9, f"max rel err {cons_err:.2e}")
    record("null-space decoupling", null_err < 1e-9, f"max norm {null_err:.2e}")

    params = AdmittanceParams.default()
    st = AdmittanceState.from_pose(np.zeros(3), np.array([1.0, 0.0, 0.0, 0.0]))
    wrench = WrenchReading(np.array([5.0, 0.0, 0.0]), np.zeros(3), FRAME_EE)
    for _ in range(5000):
        st = step(st, params, wrench, 1e-3)
    target = 5.0 / params.d_d[0]
    record("admittance steady state", abs(st.xd_d[0] - target) <= 0.01 * target,
           f"v {st.xd_d[0]:.4f} vs {target:.4f}")

    states = [InterfaceState(bool(a), l, bool(g), m)
              for a in (0, 1) for l in (0, 1, 2) for g in (0, 1)
              for m in ("manipulation", "locomotion")]
    record("HMI round-trip", all(decode(encode(s)) == s for s in states), f"{len(states)} states")
    return results


def _cmd_selftest(args) -> int:
    from .chain import load_chain, named_chain

    if args.chain is not None:
        if not Path(args.chain).exists():
            print(f"chain file not found: {args.chain}", file=sys.stderr)
            return EXIT_INPUT
        try:
            chain = load_chain(args.chain)
        except ConfigError as exc:
            print(f"FAIL chain config: {exc}")
            return EXIT_INPUT
        print(f"PASS chain config: {args.chain}")
    else:
        chain = named_chain("default")

    rng = np.random.default_rng(args.seed)
    results = _selftest_checks(rng, args.trials, chain)
    failed = 0
    for name, ok, detail in results:
        status = "PASS" if ok else "FAIL"
        failed += 0 if ok else 1
        print(f"{status} {name}" + (f": {detail}" if detail else ""))
    print(f"selftest: {len(results) - failed}/{len(results)} checks passed "
          f"(backend: {backend_name()})")
    return EXIT_OK if failed == 0 else EXIT_NUMERICAL


def main(argv=None) -> int:
    level = os.environ.get("WBCTL_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "phase1":
            return _cmd_phase("phase1", args)
        if args.command == "phase2":
            return _cmd_phase("phase2", args)
        if args.command == "analyze":
            return _cmd_analyze(args)
        if args.command == "selftest":
            return _cmd_selftest(args)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except (ConfigError, DecodeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SingularityError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except WbctlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
