"""Acceptance criteria for the full simulator, one test per criterion.

Each test prints a single PASS/FAIL line (straight to the terminal, past
pytest's capture) with the measured quantities, then asserts.  Expensive
run sets are shared through session-scoped fixtures.
"""

import time
from dataclasses import replace

import numpy as np
import pytest

from metasyn.crossbar import ComparatorConfig, ComparatorMode, run_lifetime_hw
from metasyn.device import (
    DeviceParams,
    DeviceState,
    NoiseModel,
    PulseSpec,
    calibrate_metastate_table,
    decode_metastate,
    integrate_pulse,
    metastate_ratio,
    program_transition,
    window,
)
from metasyn.network import Model, NetworkConfig, make_pattern_set, run_lifetime
from metasyn.crossbar import init_crossbar
from metasyn.experiments import threshold_crossing
from metasyn.synapse import Efficacy, MetaState, UpdateDirection, transition

SEEDS = tuple(range(10))
N_PATTERNS = 100
THRESHOLD = 0.75


def report(capsys, number: int, ok: bool, detail: str) -> None:
    with capsys.disabled():
        print(f"[criterion {number:2d}] {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, f"criterion {number}: {detail}"


def mean_crossing(traces) -> float:
    xs = [threshold_crossing(t, THRESHOLD) for t in traces]
    return float(np.mean([N_PATTERNS + 1 if x is None else x for x in xs]))


@pytest.fixture(scope="session")
def sw_runs():
    cfgs = {
        "binary": NetworkConfig(model=Model.BINARY),
        "multistate": NetworkConfig(model=Model.MULTISTATE),
    }
    start = time.perf_counter()
    traces = {
        name: [run_lifetime(replace(cfg, seed=s), N_PATTERNS) for s in SEEDS]
        for name, cfg in cfgs.items()
    }
    elapsed = time.perf_counter() - start
    return traces, elapsed


@pytest.fixture(scope="session")
def hw_runs():
    cfgs = {
        "binary": NetworkConfig(model=Model.BINARY),
        "multistate": NetworkConfig(model=Model.MULTISTATE),
    }
    return {
        name: [run_lifetime_hw(replace(cfg, seed=s), N_PATTERNS) for s in SEEDS]
        for name, cfg in cfgs.items()
    }


@pytest.fixture(scope="session")
def device_and_table():
    params = DeviceParams.default()
    return params, calibrate_metastate_table(params)


def test_criterion_01_capacity_ratio(sw_runs, capsys):
    traces, elapsed = sw_runs
    binary = mean_crossing(traces["binary"])
    multi = mean_crossing(traces["multistate"])
    ratio = multi / binary
    ok = (
        1.7 <= ratio <= 2.6
        and 15 <= binary <= 30
        and 35 <= multi <= 60
        and elapsed < 120.0
    )
    report(
        capsys,
        1,
        ok,
        f"ratio={ratio:.2f} (binary={binary:.1f}, multistate={multi:.1f}, "
        f"runtime={elapsed:.1f}s)",
    )


def test_criterion_02_hardware_crossings(sw_runs, hw_runs, capsys):
    sw_traces, _ = sw_runs
    binary = mean_crossing(hw_runs["binary"])
    multi = mean_crossing(hw_runs["multistate"])
    ordered = all(
        hw.learning[-1] <= sw.learning[-1] + 1e-12
        for name in ("binary", "multistate")
        for hw, sw in zip(hw_runs[name], sw_traces[name])
    )
    ok = 16 <= binary <= 30 and 38 <= multi <= 58 and ordered
    report(
        capsys,
        2,
        ok,
        f"hw binary={binary:.1f}, hw multistate={multi:.1f}, "
        f"learning[100] hw<=sw per seed: {ordered}",
    )


def test_criterion_03_learning_accuracy_ordering(sw_runs, capsys):
    traces, _ = sw_runs
    binary = float(np.mean([t.learning[-1] for t in traces["binary"]]))
    multi = float(np.mean([t.learning[-1] for t in traces["multistate"]]))
    ok = binary >= multi and binary >= 0.95 and 0.84 <= multi <= 0.97
    report(capsys, 3, ok, f"binary learning={binary:.3f}, multistate={multi:.3f}")


def test_criterion_04_half_activity_dip(capsys):
    f_values = (0.1, 0.5, 0.9)
    means = {}
    for f in f_values:
        cfg = NetworkConfig(connectivity=0.25, activity=f)
        means[f] = float(
            np.mean(
                [
                    run_lifetime(replace(cfg, seed=s), N_PATTERNS).mean[-1]
                    for s in SEEDS
                ]
            )
        )
    ok = means[0.5] < means[0.1] and means[0.5] < means[0.9]
    report(
        capsys,
        4,
        ok,
        f"mean[100] f=0.1: {means[0.1]:.3f}, f=0.5: {means[0.5]:.3f}, "
        f"f=0.9: {means[0.9]:.3f}",
    )


def test_criterion_05_hardware_dense_activity_failure(capsys):
    cells = {}
    for c, f in ((0.1, 0.25), (0.5, 0.9)):
        cfg = NetworkConfig(connectivity=c, activity=f)
        cells[(c, f)] = float(
            np.mean(
                [
                    run_lifetime_hw(replace(cfg, seed=s), N_PATTERNS).mean[-1]
                    for s in SEEDS
                ]
            )
        )
    sparse, dense = cells[(0.1, 0.25)], cells[(0.5, 0.9)]
    ok = dense <= sparse - 0.10
    report(
        capsys,
        5,
        ok,
        f"hw mean[100] at (C=0.5,f=0.9)={dense:.3f} vs (C=0.1,f=0.25)={sparse:.3f} "
        f"(needs dense <= sparse - 0.10)",
    )


def test_criterion_06_device_calibration(device_and_table, capsys):
    params, table = device_and_table
    n = table.n_levels
    ordered = bool(np.all(np.diff(table.plateaus) > 0)) and len(table.plateaus) == 2 * n
    ratio = metastate_ratio(table, params)
    up = PulseSpec(abs(table.pulse.amplitude), table.pulse.duration, table.pulse.dt)
    down = PulseSpec(-abs(table.pulse.amplitude), table.pulse.duration, table.pulse.dt)
    adjacency = all(
        int(table.decode_index(integrate_pulse(float(table.plateaus[k]), up, params)))
        == k + 1
        for k in range(2 * n - 1)
    ) and all(
        int(table.decode_index(integrate_pulse(float(table.plateaus[k]), down, params)))
        == k - 1
        for k in range(1, 2 * n)
    )
    ok = ordered and 4.0 <= ratio <= 5.0 and adjacency
    report(
        capsys,
        6,
        ok,
        f"plateaus ordered={ordered}, ratio={ratio:.4f}, one-pulse adjacency={adjacency}",
    )


def test_criterion_07_half_select_immunity(device_and_table, capsys):
    params, _ = device_and_table
    xs = np.linspace(0.0, 1.0, 101)
    hold = xs.copy()
    for amplitude in (0.6, -0.6, 0.6):
        hold = integrate_pulse(hold, PulseSpec(amplitude=amplitude), params)
    pulses_ok = np.array_equal(hold, xs)

    cfg = NetworkConfig(n_in=32, n_out=32, seed=1)
    xb = init_crossbar(cfg)
    rows_ok = True
    for pat in make_pattern_set(cfg, 10):
        before = xb.x.copy()
        xb.train_two_phase(pat)
        inactive = ~pat.input_bits.astype(bool)
        rows_ok = rows_ok and np.array_equal(xb.x[inactive, :], before[inactive, :])
    ok = pulses_ok and rows_ok
    report(
        capsys,
        7,
        ok,
        f"0.6V pulse train bit-identical={pulses_ok}, "
        f"inactive rows untouched during training={rows_ok}",
    )


def test_criterion_08_window_and_boundedness(device_and_table, capsys):
    params, _ = device_and_table
    endpoints = window(0.0, params) == 0.0 and window(1.0, params) == 0.0
    rng = np.random.default_rng(0)
    x = rng.random(100)
    bounded = True
    for _ in range(100):  # 100 pulses x 100 devices = 10^4 random pulses
        pulse = PulseSpec(
            amplitude=float(rng.uniform(-2.0, 2.0)),
            duration=float(rng.uniform(1e-6, 30e-6)),
            dt=0.5e-6,
        )
        x = integrate_pulse(x, pulse, params)
        bounded = bounded and bool(np.all((x >= 0.0) & (x <= 1.0)))
    ok = endpoints and bounded
    report(
        capsys,
        8,
        ok,
        f"window(0)=window(1)=0 exact: {endpoints}, state bounded over 1e4 pulses: {bounded}",
    )


def test_criterion_09_reduction_properties(capsys):
    seed = 3
    tb = run_lifetime(NetworkConfig(model=Model.BINARY, seed=seed), N_PATTERNS)
    tm = run_lifetime(
        NetworkConfig(model=Model.MULTISTATE, n_levels=1, seed=seed), N_PATTERNS
    )
    binary_eq = np.array_equal(tb.learning, tm.learning) and np.array_equal(
        tb.mean, tm.mean
    )

    cfg = NetworkConfig(seed=seed)
    hw = run_lifetime_hw(
        cfg,
        N_PATTERNS,
        params=DeviceParams.idealized(),
        comparator=ComparatorConfig(mode=ComparatorMode.FIXED_REFERENCE),
        noise=NoiseModel.off(),
    )
    sw = run_lifetime(cfg, N_PATTERNS)
    ideal_eq = np.array_equal(hw.learning, sw.learning) and np.array_equal(
        hw.mean, sw.mean
    )
    ok = binary_eq and ideal_eq
    report(
        capsys,
        9,
        ok,
        f"binary==n_levels-1 multistate: {binary_eq}, ideal hardware==behavioral: {ideal_eq}",
    )


def test_criterion_10_device_behavior_equivalence(device_and_table, capsys):
    params, table = device_and_table
    n = table.n_levels
    ok = True
    for seed in range(20):
        rng = np.random.default_rng(seed)
        start = MetaState(Efficacy.LOW, n - 1, n)
        dev = DeviceState(x=table.x_for(start))
        ref = start
        for _ in range(100):
            d = (
                UpdateDirection.POTENTIATE
                if rng.random() < 0.5
                else UpdateDirection.DEPRESS
            )
            dev = program_transition(dev, d, params, table)
            ref = transition(ref, d)
            if decode_metastate(dev, table) != ref:
                ok = False
                break
        if not ok:
            break
    report(capsys, 10, ok, "100-step random walks decode identically for 20 seeds")
