"""Compiled vs pure-numpy kernel backends must agree numerically."""

import numpy as np
import pytest

from wbctl import _kernels_py
from wbctl.chain import named_chain
from wbctl.kernels import backend_name

compiled = pytest.importorskip("wbctl._speedups", reason="compiled kernels not built")

CHAINS = ["default", "two_link", "six_dof"]


@pytest.mark.parametrize("name", CHAINS)
def test_backends_agree(name, rng):
    chain = named_chain(name)
    n = chain.arm_dofs
    for _ in range(40):
        q = rng.uniform(-2.0, 2.0, n)
        qd = rng.uniform(-1.5, 1.5, n)
        qdd = rng.uniform(-1.5, 1.5, n)

        r_a, p_a = _kernels_py.ee_pose(chain.packed, q)
        r_b, p_b = compiled.ee_pose(chain.packed, q)
        assert np.max(np.abs(r_a - r_b)) < 1e-12
        assert np.max(np.abs(p_a - p_b)) < 1e-12

        assert np.max(np.abs(_kernels_py.com_positions(chain.packed, q)
                             - compiled.com_positions(chain.packed, q))) < 1e-12
        assert np.max(np.abs(_kernels_py.jacobian_arm(chain.packed, q)
                             - compiled.jacobian_arm(chain.packed, q))) < 1e-12
        assert np.max(np.abs(_kernels_py.mass_matrix_arm(chain.packed, q)
                             - compiled.mass_matrix_arm(chain.packed, q))) < 1e-12

        for grav in (chain.gravity, np.zeros(3)):
            tau_a = _kernels_py.rnea_arm(chain.packed, q, qd, qdd, grav)
            tau_b = compiled.rnea_arm(chain.packed, q, qd, qdd, grav)
            assert np.max(np.abs(tau_a - tau_b)) < 1e-12


def test_backend_is_reported():
    assert backend_name() in ("compiled", "python")


def test_python_fallback_forced_by_env():
    import subprocess
    import sys

    out = subprocess.run(
        [sys.executable, "-c", "from wbctl.kernels import backend_name; print(backend_name())"],
        env={"PATH": "/usr/bin:/bin", "WBCTL_PURE_PYTHON": "1"},
        capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
