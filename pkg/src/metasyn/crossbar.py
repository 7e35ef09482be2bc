"""Hardware twin of the behavioral network on a memristive crossbar.

Inputs drive rows through ideal diodes, so only active rows inject current.
Every crosspoint holds a device: connected synapses sit on calibrated
metastate plateaus, pruned ones are parked at x = 0 where they still leak
the off conductance under read.  Column neurons are current comparators,
either against a fixed calibrated reference or against a reference that
tracks the column's own total conductance.  Training applies one
potentiation phase and one depression phase per pattern; unselected rows
are held at half the programming voltage, which is below the device
threshold and therefore moves nothing.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .device import (
    DeviceParams,
    MetastateTable,
    NoiseModel,
    calibrate_metastate_table,
    conductance,
    integrate_pulse,
)
from .network import (
    AccuracyTrace,
    BehavioralNetwork,
    Model,
    NetworkConfig,
    Pattern,
    lifetime_loop,
    make_pattern_set,
    seed_streams,
)
from .synapse import Efficacy, MetaState


class ComparatorMode(str, Enum):
    FIXED_REFERENCE = "fixed_reference"
    COLUMN_TRACKING = "column_tracking"


@dataclass(frozen=True)
class ComparatorConfig:
    """Decision rule of the column neurons.

    FixedReference holds each column against one calibrated current level;
    it preserves the analog margin a trained pattern leaves between its
    column current and the reference, which is what lets the crossbar
    retain patterns as long as the abstract model does.  ColumnTracking
    lets the reference follow the column's own conductance instead: the
    neuron's input resistance moves with the column resistance, scaled by
    tracking_gain (gain 1 tracks fully, lower gains couple the reference
    to the column only partially).  A tracking reference rides up with
    every potentiation stored in its column and thereby consumes stored
    patterns' margins, so it shortens retention at any gain; it is kept
    to quantify exactly that cost.

    Leaving kappa / i_ref unset defers to calibration at crossbar init,
    which places the reference at the current level separating theta from
    theta + 1 active high-efficacy synapses on the expected background of
    active low-efficacy devices and pruned leakage.
    """

    mode: ComparatorMode = ComparatorMode.FIXED_REFERENCE
    kappa: float | None = None
    i_ref: float | None = None
    tracking_gain: float = 1.0

    def __post_init__(self) -> None:
        if self.kappa is not None and not 0.0 < self.kappa < 1.0:
            raise ValueError(f"kappa must lie in (0, 1), got {self.kappa}")
        if self.i_ref is not None and self.i_ref <= 0.0:
            raise ValueError(f"i_ref must be positive, got {self.i_ref}")
        if not 0.0 <= self.tracking_gain <= 1.0:
            raise ValueError(
                f"tracking_gain must lie in [0, 1], got {self.tracking_gain}"
            )


@dataclass(frozen=True)
class ProgramEvent:
    """One device programming event, for pulse-by-pulse training traces."""

    step: int
    phase: str
    row: int
    col: int
    x_before: float
    x_after: float
    meta_before: MetaState
    meta_after: MetaState


class Crossbar:
    """Device matrix plus read/program circuitry parameters."""

    def __init__(
        self,
        cfg: NetworkConfig,
        x: np.ndarray,
        mask: np.ndarray,
        params: DeviceParams,
        table: MetastateTable,
        comparator: ComparatorConfig,
        v_read: float = 0.3,
        noise: NoiseModel | None = None,
    ):
        self.cfg = cfg
        self.x = x
        self.mask = mask
        self.params = params
        self.table = table
        self.comparator = comparator
        self.v_read = v_read
        self.v_program = abs(table.pulse.amplitude)
        self.v_half = self.v_program / 2.0
        self.noise = noise
        if not abs(v_read) < params.v_off:
            raise ValueError("v_read would disturb the devices")
        if not self.v_half < params.v_off:
            raise ValueError("half-select voltage must stay below v_off")
        # Resolve the reference operating point once, at the initial state.
        # Calibrated values live on the instance, not the config: at extreme
        # connectivity/activity corners the calibrated ratio can exceed the
        # usual (0, 1) range, which simply marks a column whose conductance
        # cannot reach the discrimination level.
        level = reference_current_level(table, params, cfg, v_read)
        if comparator.mode is ComparatorMode.FIXED_REFERENCE:
            self.i_ref = comparator.i_ref if comparator.i_ref is not None else level
            self.kappa = None
            self.tracking_base = None
        else:
            base = float(self.connected_column_conductance().mean())
            self.tracking_base = base
            self.kappa = (
                comparator.kappa
                if comparator.kappa is not None
                else level / (v_read * base)
            )
            self.i_ref = None

    # ---- read path -----------------------------------------------------

    def conductance_matrix(self) -> np.ndarray:
        return conductance(self.x, self.params)

    def connected_column_conductance(self) -> np.ndarray:
        return (self.conductance_matrix() * self.mask).sum(axis=0)

    def column_currents(self, input_bits: np.ndarray) -> np.ndarray:
        """I_j = v_read * sum of G over active rows; inactive rows are
        blocked by their diode and contribute exactly zero."""
        return self.column_currents_batch(input_bits[np.newaxis, :])[0]

    def column_currents_batch(self, inputs: np.ndarray) -> np.ndarray:
        return self.v_read * (inputs.astype(np.float64) @ self.conductance_matrix())

    def references(self) -> np.ndarray:
        """Per-column comparator reference currents at the present state."""
        if self.comparator.mode is ComparatorMode.FIXED_REFERENCE:
            return np.full(self.cfg.n_out, self.i_ref)
        gamma = self.comparator.tracking_gain
        tracked = (1.0 - gamma) * self.tracking_base + gamma * self.connected_column_conductance()
        return self.kappa * self.v_read * tracked

    def infer(self, input_bits: np.ndarray) -> np.ndarray:
        return self.infer_batch(input_bits[np.newaxis, :])[0]

    def infer_batch(self, inputs: np.ndarray) -> np.ndarray:
        currents = self.column_currents_batch(inputs)
        return (currents > self.references()[np.newaxis, :]).astype(np.uint8)

    # ---- program path ----------------------------------------------------

    def _phase_select(self, active: np.ndarray, err_cols: np.ndarray, top: bool) -> np.ndarray:
        """Devices to pulse in one phase: connected, on an active row, in an
        erroneous column, and not already decoded at the chain end the pulse
        pushes toward (the read-verify guard that realizes saturation)."""
        sel = self.mask & active[:, np.newaxis] & err_cols[np.newaxis, :]
        if not sel.any():
            return sel
        idx = self.table.decode_index(self.x[sel])
        end = 2 * self.table.n_levels - 1 if top else 0
        keep = idx != end
        out = np.zeros_like(sel)
        out[sel] = keep
        return out

    def _pulse_selected(self, sel: np.ndarray, amplitude: float) -> None:
        if not sel.any():
            return
        pulse = replace(self.table.pulse, amplitude=amplitude)
        self.x[sel] = integrate_pulse(self.x[sel], pulse, self.params, self.noise)

    def train_two_phase(
        self,
        pat: Pattern,
        log: list[ProgramEvent] | None = None,
        step: int = 0,
    ) -> None:
        """One training presentation: potentiation phase on +1-error columns,
        then depression phase on -1-error columns, with inactive rows held at
        v_half.  Repeats up to updates_per_pattern times, stopping early once
        the pattern reads back correctly."""
        active = pat.input_bits.astype(bool)
        for _ in range(self.cfg.updates_per_pattern):
            y = self.infer(pat.input_bits)
            err = pat.target_bits.astype(np.int8) - y.astype(np.int8)
            if not err.any():
                break
            for phase, col_err, sign, top in (
                ("potentiate", 1, 1.0, True),
                ("depress", -1, -1.0, False),
            ):
                sel = self._phase_select(active, err == col_err, top)
                before = self.x[sel] if log is not None else None
                self._pulse_selected(sel, sign * self.v_program)
                if log is not None and sel.any():
                    rows, cols = np.nonzero(sel)
                    after = self.x[sel]
                    for r, c, xb, xa in zip(rows, cols, before, after):
                        log.append(
                            ProgramEvent(
                                step=step,
                                phase=phase,
                                row=int(r),
                                col=int(c),
                                x_before=float(xb),
                                x_after=float(xa),
                                meta_before=self.table.state_at(
                                    int(self.table.decode_index(float(xb)))
                                ),
                                meta_after=self.table.state_at(
                                    int(self.table.decode_index(float(xa)))
                                ),
                            )
                        )


def reference_current_level(
    table: MetastateTable,
    params: DeviceParams,
    cfg: NetworkConfig,
    v_read: float,
) -> float:
    """Column current that separates theta from theta+1 active high synapses.

    A column at the firing margin does not carry high-device current alone:
    the remaining active connected devices conduct at the low plateau and
    every active pruned crosspoint leaks the off conductance.  The reference
    therefore sits theta-and-a-half conductance gaps above that expected
    background; the half gap keeps the decision aligned with the strict
    count > theta rule of the behavioral model.
    """
    n = table.n_levels
    g_high = conductance(table.x_for(MetaState(Efficacy.HIGH, 0, n)), params)
    g_low = conductance(table.x_for(MetaState(Efficacy.LOW, 0, n)), params)
    n_active = cfg.n_ones_in
    density = cfg.n_connected / (cfg.n_in * cfg.n_out)
    active_connected = n_active * density
    active_pruned = n_active - active_connected
    background = active_connected * g_low + active_pruned * params.g_off
    return v_read * ((cfg.theta + 0.5) * (g_high - g_low) + background)


def calibrate_tracking_kappa(
    mask: np.ndarray,
    x: np.ndarray,
    table: MetastateTable,
    params: DeviceParams,
    cfg: NetworkConfig,
    v_read: float,
) -> float:
    """Decision ratio placing the mean tracking reference at the separating
    current level, measured on the initial column conductances."""
    col_g = (conductance(x, params) * mask).sum(axis=0)
    level = reference_current_level(table, params, cfg, v_read)
    return float(level / (v_read * col_g.mean()))


def init_crossbar(
    cfg: NetworkConfig,
    params: DeviceParams | None = None,
    table: MetastateTable | None = None,
    comparator: ComparatorConfig | None = None,
    v_read: float = 0.3,
    noise: NoiseModel | None = None,
) -> Crossbar:
    """Build a crossbar mirroring the behavioral network's initial state.

    The mask and the random high/low efficacy assignment are drawn from the
    same config-derived stream the behavioral model uses, so both paths
    start from identical synapses.  Connected devices are programmed to
    their metalevel-0 plateau; pruned crosspoints sit at x = 0.
    """
    if cfg.model is Model.GRADIENT:
        raise ValueError("the gradient model has no crossbar realization")
    if params is None:
        params = DeviceParams.default()
    if table is None:
        table = calibrate_metastate_table(
            params, n_levels=cfg.effective_levels, ratio_bounds=None
        )
    if table.n_levels != cfg.effective_levels:
        raise ValueError("table level count does not match the config")
    net = BehavioralNetwork.initialize(cfg)
    n = table.n_levels
    x = np.zeros((cfg.n_in, cfg.n_out))
    x_low = table.x_for(MetaState(Efficacy.LOW, 0, n))
    x_high = table.x_for(MetaState(Efficacy.HIGH, 0, n))
    x[net.mask] = np.where(net.eff[net.mask] == 1, x_high, x_low)

    cmp = comparator if comparator is not None else ComparatorConfig()
    return Crossbar(cfg, x, net.mask, params, table, cmp, v_read, noise)


def column_currents(xb: Crossbar, input_bits: np.ndarray) -> np.ndarray:
    return xb.column_currents(input_bits)


def infer(xb: Crossbar, input_bits: np.ndarray) -> np.ndarray:
    return xb.infer(input_bits)


def train_two_phase(xb: Crossbar, pat: Pattern) -> Crossbar:
    xb.train_two_phase(pat)
    return xb


def run_lifetime_hw(
    cfg: NetworkConfig,
    n_patterns: int = 100,
    params: DeviceParams | None = None,
    comparator: ComparatorConfig | None = None,
    noise: NoiseModel | str = "default",
    event_log: list[ProgramEvent] | None = None,
) -> AccuracyTrace:
    """Hardware lifetime run under the same protocol as the behavioral path.

    Patterns and the initial synapse assignment are identical to the
    behavioral run with the same config; only inference and updates go
    through the device model.  Programming noise defaults to sigma = 0.25
    on a stream derived from cfg.seed; pass NoiseModel.off() to disable.
    """
    if noise == "default":
        noise = NoiseModel(rng_seed=seed_streams(cfg.seed)["noise"])
    xb = init_crossbar(cfg, params=params, comparator=comparator, noise=noise)
    patterns = make_pattern_set(cfg, n_patterns)
    counter = iter(range(n_patterns))

    def step(pat: Pattern) -> None:
        xb.train_two_phase(pat, log=event_log, step=next(counter))

    return lifetime_loop(step, xb.infer_batch, patterns)
