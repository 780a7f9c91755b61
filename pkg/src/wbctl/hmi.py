"""Button-board interface: four buttons, four-element messages, 200 Hz loop.

Button map:
    1  toggle the admittance interface on/off
    2  cycle the admittance level 0 -> 1 -> 2 -> 0
    3  open/close the gripper
    4  toggle the priority mode (manipulation <-> locomotion)

Each press produces exactly one message, stamped at the next loop tick.
Messages also have a byte-level framing for the virtual serial wire:

    0xB7 | payload[0..3] | XOR(payload)

one byte per message element, checksum over the four payload bytes only.
"""

import math
from dataclasses import dataclass

from .errors import ContractError, DecodeError

LOOP_RATE_HZ = 200.0
DEBOUNCE_S = 0.05
FRAME_MAGIC = 0xB7
FRAME_LENGTH = 6

BUTTON_ADMITTANCE = 1
BUTTON_LEVEL = 2
BUTTON_GRIPPER = 3
BUTTON_PRIORITY = 4

MODE_MANIPULATION = "manipulation"
MODE_LOCOMOTION = "locomotion"
_MODES = (MODE_MANIPULATION, MODE_LOCOMOTION)

_RANGES = ((0, 1), (0, 2), (0, 1), (0, 1))


@dataclass(frozen=True)
class InterfaceState:
    admittance_active: bool = False
    admittance_level: int = 0
    gripper_closed: bool = False
    priority_mode: str = MODE_MANIPULATION

    def __post_init__(self):
        if self.admittance_level not in (0, 1, 2):
            raise ContractError("admittance level must be 0, 1 or 2")
        if self.priority_mode not in _MODES:
            raise ContractError(f"unknown priority mode '{self.priority_mode}'")

    @classmethod
    def default(cls) -> "InterfaceState":
        return cls()


@dataclass(frozen=True)
class ButtonMessage:
    values: tuple   # (admittance, level, gripper, priority)
    stamp: float = 0.0

    def __post_init__(self):
        values = tuple(int(v) for v in self.values)
        if len(values) != 4:
            raise DecodeError("button message must have exactly four elements")
        for i, (v, (lo, hi)) in enumerate(zip(values, _RANGES)):
            if not lo <= v <= hi:
                raise DecodeError(f"element {i} out of range [{lo}, {hi}]: {v}")
        object.__setattr__(self, "values", values)


def on_button_press(state: InterfaceState, button_id: int) -> InterfaceState:
    if button_id == BUTTON_ADMITTANCE:
        return InterfaceState(not state.admittance_active, state.admittance_level,
                              state.gripper_closed, state.priority_mode)
    if button_id == BUTTON_LEVEL:
        return InterfaceState(state.admittance_active, (state.admittance_level + 1) % 3,
                              state.gripper_closed, state.priority_mode)
    if button_id == BUTTON_GRIPPER:
        return InterfaceState(state.admittance_active, state.admittance_level,
                              not state.gripper_closed, state.priority_mode)
    if button_id == BUTTON_PRIORITY:
        other = MODE_LOCOMOTION if state.priority_mode == MODE_MANIPULATION else MODE_MANIPULATION
        return InterfaceState(state.admittance_active, state.admittance_level,
                              state.gripper_closed, other)
    raise ContractError(f"button id must be 1..4, got {button_id}")


def encode(state: InterfaceState, stamp: float = 0.0) -> ButtonMessage:
    return ButtonMessage(
        (
            int(state.admittance_active),
            state.admittance_level,
            int(state.gripper_closed),
            _MODES.index(state.priority_mode),
        ),
        stamp,
    )


def decode(msg: ButtonMessage) -> InterfaceState:
    v = msg.values
    return InterfaceState(bool(v[0]), v[1], bool(v[2]), _MODES[v[3]])


def encode_frame(msg: ButtonMessage) -> bytes:
    payload = bytes(msg.values)
    checksum = 0
    for b in payload:
        checksum ^= b
    return bytes([FRAME_MAGIC]) + payload + bytes([checksum])


def decode_frame(data: bytes, stamp: float = 0.0) -> ButtonMessage:
    if len(data) != FRAME_LENGTH:
        raise DecodeError(f"frame must be {FRAME_LENGTH} bytes, got {len(data)}")
    if data[0] != FRAME_MAGIC:
        raise DecodeError(f"bad magic byte 0x{data[0]:02X}")
    checksum = 0
    for b in data[1:5]:
        checksum ^= b
    if checksum != data[5]:
        raise DecodeError("frame checksum mismatch")
    return ButtonMessage(tuple(data[1:5]), stamp)


def poll_loop(press_events, loop_rate: float = LOOP_RATE_HZ,
              debounce_s: float = DEBOUNCE_S,
              initial: InterfaceState | None = None) -> list:
    """Run the press script through the polling loop.

    Presses of the same button closer than ``debounce_s`` collapse to one
    (pass 0 to disable). Each surviving press yields one message, stamped at
    the next tick of the loop; presses inside one tick stay in order.
    """
    if not loop_rate > 0.0:
        raise ContractError("loop rate must be > 0")
    period = 1.0 / loop_rate
    state = initial if initial is not None else InterfaceState.default()
    messages = []
    last_accepted = {}
    prev_t = None
    for t, button in press_events:
        t = float(t)
        if prev_t is not None and t < prev_t:
            raise ContractError("press events must be sorted by time")
        prev_t = t
        if debounce_s > 0.0 and button in last_accepted and t - last_accepted[button] < debounce_s:
            continue
        last_accepted[button] = t
        state = on_button_press(state, button)
        tick = math.ceil(t / period - 1e-9) * period
        messages.append(encode(state, stamp=tick))
    return messages


def parse_press_script(text: str):
    """Press script: one `<time_s> <button_id>` pair per line.

    Blank lines and lines starting with '#' are ignored.
    """
    events = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        if len(parts) != 2:
            raise ContractError(f"line {lineno}: expected '<time_s> <button_id>'")
        try:
            t = float(parts[0])
            button = int(parts[1])
        except ValueError:
            raise ContractError(f"line {lineno}: malformed numbers") from None
        if button not in (1, 2, 3, 4):
            raise ContractError(f"line {lineno}: button id must be 1..4")
        events.append((t, button))
    return events
