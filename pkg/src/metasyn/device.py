"""Threshold memristor model used as the physical carrier of the synapse chain.

The device follows the VTEAM template: the internal state x = w/D moves only
while the applied voltage exceeds one of two polarity thresholds, at a rate
shaped by a smooth boundary window that pins x inside [0, 1].  Conductance
interpolates linearly between the off and on limits.

Metastates are realised as points along the pulse response: repeated
identical programming pulses from the bottom anchor visit the chain states
one per pulse.  The anchor is placed so the chain is symmetric about
x = 0.5, which makes a depressing pulse retrace a potentiating one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .synapse import Efficacy, MetaState, UpdateDirection, transition

# Pulse rate constants frozen by tune_pulse_rate() for the default pulse
# shape (1.2 V, 15 us, 0.1 us steps) and window (delta=0.5, tau=2.0, p=2).
# The default profile hits a (high,0)/(low,0) conductance ratio of 4.5;
# the idealized profile pushes the low plateaus under x = 0.003 so that
# column currents separate high-efficacy counts exactly.
_DEFAULT_K_OFF = 7006346.8122965945
_IDEAL_K_OFF = 34098014.14676426


class CalibrationError(RuntimeError):
    """Raised when the pulse-train calibration cannot produce a valid chain."""


@dataclass(frozen=True)
class DeviceParams:
    """Physical constants of one memristive device.

    Conductance limits correspond to 100 kOhm (on) and 10 MOhm (off).
    k_off > 0 drives x up for v > v_off; k_on < 0 drives x down for
    v < v_on.  Thickness D only rescales the k constants, so it defaults
    to 1 and x coincides with w.
    """

    g_on: float = 1.0e-5
    g_off: float = 1.0e-7
    v_off: float = 1.0
    v_on: float = -1.0
    k_off: float = _DEFAULT_K_OFF
    k_on: float = -_DEFAULT_K_OFF
    alpha_off: float = 3.0
    alpha_on: float = 3.0
    d_thickness: float = 1.0
    delta: float = 0.5
    tau: float = 2.0
    p_exp: float = 2.0

    def __post_init__(self) -> None:
        if not self.g_on > self.g_off >= 0.0:
            raise ValueError("need g_on > g_off >= 0")
        if not (self.v_on < 0.0 < self.v_off):
            raise ValueError("need v_on < 0 < v_off")
        if not (self.k_off > 0.0 > self.k_on):
            raise ValueError("need k_off > 0 > k_on")
        if self.d_thickness <= 0.0:
            raise ValueError("need d_thickness > 0")
        # window must vanish at both ends of the state range
        if abs(window(0.0, self)) > 0.0 or abs(window(1.0, self)) > 0.0:
            raise ValueError("window must be exactly zero at x = 0 and x = 1")

    @classmethod
    def default(cls) -> "DeviceParams":
        return cls()

    @classmethod
    def idealized(cls) -> "DeviceParams":
        """Limit profile for reduction checks: no off-state conduction and a
        chain spread wide enough that column currents count high-efficacy
        devices exactly."""
        return cls(g_off=0.0, k_off=_IDEAL_K_OFF, k_on=-_IDEAL_K_OFF)


@dataclass(frozen=True)
class DeviceState:
    """Normalised internal state of one device."""

    x: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.x <= 1.0:
            raise ValueError(f"x must lie in [0, 1], got {self.x}")


@dataclass(frozen=True)
class PulseSpec:
    """Rectangular programming pulse: amplitude held for duration, integrated
    with fixed steps of width dt."""

    amplitude: float
    duration: float = 15.0e-6
    dt: float = 0.1e-6

    def __post_init__(self) -> None:
        if self.duration <= 0.0 or self.dt <= 0.0:
            raise ValueError("duration and dt must be positive")
        if self.dt > self.duration:
            raise ValueError("dt must not exceed the pulse duration")


@dataclass
class NoiseModel:
    """Multiplicative Gaussian programming noise on each integration step.

    Each step's state increment is scaled by (1 + N(0, sigma)).  The
    generator is created lazily from rng_seed so a run owns one stream.
    """

    sigma: float = 0.25
    enabled: bool = True
    rng_seed: int | np.random.SeedSequence = 0
    _rng: np.random.Generator | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.sigma < 0.0:
            raise ValueError("sigma must be >= 0")

    @property
    def active(self) -> bool:
        return self.enabled and self.sigma > 0.0

    def rng(self) -> np.random.Generator:
        if self._rng is None:
            self._rng = np.random.default_rng(self.rng_seed)
        return self._rng

    @classmethod
    def off(cls) -> "NoiseModel":
        return cls(enabled=False)


def window(x, params: DeviceParams):
    """Boundary window (1 - 4(x - delta)^2) / exp(tau (x - delta)^p).

    With delta = 0.5 the numerator vanishes exactly at x = 0 and x = 1, so
    a device parked at either end cannot move regardless of drive.
    """
    shifted = np.asarray(x, dtype=float) - params.delta
    value = (1.0 - 4.0 * shifted * shifted) * np.exp(-params.tau * shifted**params.p_exp)
    return value if value.ndim else float(value)


def conductance(x, params: DeviceParams):
    """Linear mix of the conduction limits: x*g_on + (1 - x)*g_off."""
    xa = np.asarray(x, dtype=float)
    value = xa * params.g_on + (1.0 - xa) * params.g_off
    return value if value.ndim else float(value)


def state_derivative(x, v, params: DeviceParams):
    """dx/dt under applied voltage v.

    Zero between the thresholds; above v_off (below v_on) the rate scales
    as k * (v/v_thresh - 1)^alpha times the boundary window.  Both branch
    bases are clamped at zero so the inactive branch contributes exactly 0.
    """
    xa = np.asarray(x, dtype=float)
    va = np.asarray(v, dtype=float)
    up = params.k_off * np.maximum(va / params.v_off - 1.0, 0.0) ** params.alpha_off
    down = params.k_on * np.maximum(va / params.v_on - 1.0, 0.0) ** params.alpha_on
    value = (up + down) * window(xa, params) / params.d_thickness
    return value if value.ndim else float(value)


def integrate_pulse(
    x,
    pulse: PulseSpec,
    params: DeviceParams,
    noise: NoiseModel | None = None,
):
    """Drive an array (or scalar) of states through one rectangular pulse.

    Fixed-step two-stage explicit (Heun) integration with the pulse's dt;
    a shorter final step covers any remainder.  Each step's increment
    picks up multiplicative noise when enabled, and the state is clamped
    to [0, 1] after every step.  Sub-threshold drive gives a derivative of
    exactly zero in both stages, so the state is left bit-identical.
    """
    xa = np.asarray(x, dtype=float).copy()
    scalar = xa.ndim == 0
    if scalar:
        xa = xa.reshape(1)
    n_full, remainder = divmod(pulse.duration, pulse.dt)
    steps = [pulse.dt] * int(round(n_full))
    if remainder > 1e-12 * pulse.dt:
        steps.append(remainder)
    noisy = noise is not None and noise.active
    rng = noise.rng() if noisy else None
    for dt in steps:
        k1 = state_derivative(xa, pulse.amplitude, params)
        k2 = state_derivative(np.clip(xa + k1 * dt, 0.0, 1.0), pulse.amplitude, params)
        dx = 0.5 * (k1 + k2) * dt
        if noisy:
            dx = dx * (1.0 + noise.sigma * rng.standard_normal(xa.shape))
        xa = np.clip(xa + dx, 0.0, 1.0)
    return float(xa[0]) if scalar else xa


def apply_pulse(
    state: DeviceState,
    pulse: PulseSpec,
    params: DeviceParams,
    noise: NoiseModel | None = None,
) -> DeviceState:
    """Single-device wrapper around :func:`integrate_pulse`."""
    return DeviceState(x=integrate_pulse(state.x, pulse, params, noise))


@dataclass(frozen=True)
class MetastateTable:
    """Calibrated map between chain states and device state plateaus.

    Plateaus ascend along the chain: deepest low metalevel first, then up
    through (low, 0) and (high, 0) to the deepest high metalevel.
    """

    n_levels: int
    plateaus: np.ndarray  # ascending x, length 2*n_levels
    pulse: PulseSpec  # calibrated programming pulse (potentiating sign)

    def __post_init__(self) -> None:
        if len(self.plateaus) != 2 * self.n_levels:
            raise ValueError("need exactly 2*n_levels plateaus")

    def chain_states(self) -> list[MetaState]:
        n = self.n_levels
        lows = [MetaState(Efficacy.LOW, n - 1 - i, n) for i in range(n)]
        highs = [MetaState(Efficacy.HIGH, i, n) for i in range(n)]
        return lows + highs

    def index_of(self, state: MetaState) -> int:
        if state.efficacy is Efficacy.LOW:
            return self.n_levels - 1 - state.metalevel
        return self.n_levels + state.metalevel

    def state_at(self, index: int) -> MetaState:
        n = self.n_levels
        if index < n:
            return MetaState(Efficacy.LOW, n - 1 - index, n)
        return MetaState(Efficacy.HIGH, index - n, n)

    def x_for(self, state: MetaState) -> float:
        return float(self.plateaus[self.index_of(state)])

    def decode_index(self, x):
        """Nearest plateau; exact midpoint ties resolve to the lower plateau."""
        mids = (self.plateaus[1:] + self.plateaus[:-1]) / 2.0
        idx = np.searchsorted(mids, np.asarray(x, dtype=float), side="left")
        return idx if np.ndim(x) else int(idx)


def decode_metastate(state: DeviceState | float, table: MetastateTable) -> MetaState:
    x = state.x if isinstance(state, DeviceState) else float(state)
    return table.state_at(table.decode_index(x))


def _pulse_train(
    x0: float, count: int, pulse: PulseSpec, params: DeviceParams
) -> np.ndarray:
    """Noise-free plateau sequence: x0 plus the state after each pulse."""
    out = np.empty(count + 1)
    out[0] = x0
    x = x0
    for i in range(count):
        x = integrate_pulse(x, pulse, params, None)
        out[i + 1] = x
    return out


def _find_anchor(n_levels: int, pulse: PulseSpec, params: DeviceParams) -> float:
    """Bottom-of-chain state such that 2n-1 pulses end at its mirror image.

    The window is symmetric about x = 0.5, so anchoring the train this way
    yields a chain symmetric about 0.5 and a depressing pulse of equal
    magnitude retraces one potentiating step.  Solved by bisection; the
    mismatch g(x0) = train(x0) - (1 - x0) is increasing in x0.
    """
    span = 2 * n_levels - 1

    def mismatch(x0: float) -> float:
        return _pulse_train(x0, span, pulse, params)[-1] - (1.0 - x0)

    lo, hi = 1.0e-30, 0.5
    if mismatch(hi) < 0.0:
        raise CalibrationError("pulse too weak: chain does not span the midpoint")
    if mismatch(lo) > 0.0:
        raise CalibrationError("pulse too strong: chain collapses to the ends")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if mismatch(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return hi


def calibrate_metastate_table(
    params: DeviceParams,
    n_levels: int = 3,
    pulse: PulseSpec | None = None,
    ratio_bounds: tuple[float, float] | None = (3.5, 5.5),
) -> MetastateTable:
    """Derive the plateau table from a noise-free train of programming pulses.

    Starting at the bottom anchor, each pulse lands on the next plateau, so
    the chain adjacency holds for potentiation by construction.  Fails when
    the plateaus are not strictly increasing or when the conductance ratio
    between (high, 0) and (low, 0) leaves ratio_bounds.
    """
    if n_levels < 1:
        raise CalibrationError(f"n_levels must be >= 1, got {n_levels}")
    if pulse is None:
        pulse = PulseSpec(amplitude=1.2)
    if pulse.amplitude <= params.v_off:
        raise CalibrationError("programming amplitude must exceed v_off")
    anchor = _find_anchor(n_levels, pulse, params)
    plateaus = _pulse_train(anchor, 2 * n_levels - 1, pulse, params)
    if not np.all(np.diff(plateaus) > 0.0):
        raise CalibrationError("plateaus are not strictly increasing")
    table = MetastateTable(n_levels=n_levels, plateaus=plateaus, pulse=pulse)
    if ratio_bounds is not None:
        g_high = conductance(table.x_for(MetaState(Efficacy.HIGH, 0, n_levels)), params)
        g_low = conductance(table.x_for(MetaState(Efficacy.LOW, 0, n_levels)), params)
        ratio = g_high / g_low
        if not ratio_bounds[0] <= ratio <= ratio_bounds[1]:
            raise CalibrationError(
                f"conductance ratio {ratio:.3f} outside {ratio_bounds}"
            )
    return table


def metastate_ratio(table: MetastateTable, params: DeviceParams) -> float:
    """Conductance ratio between the (high, 0) and (low, 0) plateaus."""
    n = table.n_levels
    g_high = conductance(table.x_for(MetaState(Efficacy.HIGH, 0, n)), params)
    g_low = conductance(table.x_for(MetaState(Efficacy.LOW, 0, n)), params)
    return float(g_high / g_low)


def program_transition(
    state: DeviceState,
    direction: UpdateDirection,
    params: DeviceParams,
    table: MetastateTable,
    noise: NoiseModel | None = None,
) -> DeviceState:
    """Program one chain step with a read-verify guard.

    The device is read (decoded) first; when the requested step saturates
    at a chain end the pulse is withheld, since the window cannot make the
    end plateaus both absorbing and one-pulse reversible.  Otherwise one
    programming pulse of the calibrated shape and polarity is applied.
    """
    current = decode_metastate(state, table)
    if transition(current, direction) == current:
        return state
    sign = 1.0 if direction is UpdateDirection.POTENTIATE else -1.0
    pulse = replace(table.pulse, amplitude=sign * abs(table.pulse.amplitude))
    return apply_pulse(state, pulse, params, noise)


def tune_pulse_rate(
    params: DeviceParams,
    n_levels: int = 3,
    pulse: PulseSpec | None = None,
    target_ratio: float | None = 4.5,
    target_low_x: float | None = None,
    iterations: int = 80,
) -> DeviceParams:
    """Find k_off (with k_on = -k_off) meeting a calibration target.

    Either the (high,0)/(low,0) conductance ratio or the x plateau of the
    (low, 0) state can be targeted; both are monotone in k_off, so a
    bisection on log k_off converges.  Returns params with the tuned rates.
    """
    if (target_ratio is None) == (target_low_x is None):
        raise ValueError("specify exactly one of target_ratio / target_low_x")
    if pulse is None:
        pulse = PulseSpec(amplitude=1.2)

    def objective(log_k: float) -> float:
        k = math.exp(log_k)
        trial = replace(params, k_off=k, k_on=-k)
        try:
            table = calibrate_metastate_table(trial, n_levels, pulse, ratio_bounds=None)
        except CalibrationError:
            # overshoot collapse at large k: past the target for either goal
            return math.inf
        if table.plateaus[0] < 1e-12 or 1.0 - table.plateaus[-1] < 1e-12:
            # chain ends pinned at the float floor: also too strong
            return math.inf
        if target_ratio is not None:
            return metastate_ratio(table, trial) - target_ratio
        low0 = table.x_for(MetaState(Efficacy.LOW, 0, n_levels))
        return target_low_x - low0  # low0 decreases as k grows

    lo, hi = math.log(1.0e4), math.log(1.0e9)
    f_lo, f_hi = objective(lo), objective(hi)
    if not f_lo < 0.0 < f_hi:
        raise CalibrationError("tuning target not bracketed by the k range")
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if objective(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    k = math.exp(0.5 * (lo + hi))
    return replace(params, k_off=k, k_on=-k)
