import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isoloewner.errors import IndexOutOfRange, InvalidSpec
from isoloewner.loewner import (
    SWALLOW,
    DrivingKind,
    DrivingSpec,
    advance_flow,
    evolve_birkhoff_general,
    initial_state,
    run_trajectory,
    sample_driving,
    sample_driving_batch,
    trajectory_csv,
)

# closed form for Z = 0: g_t(z) = sqrt(z^2 + 4t)
G1 = 2 / math.sqrt(8)
PRE1 = 0.25
SCHW1 = -0.28125


def zero_spec(T=1.0, dt=1e-4):
    return DrivingSpec(DrivingKind.ZERO, dt, T)


def test_zero_driving_grid():
    p = sample_driving(zero_spec(1.0, 0.01))
    assert p.Z.size == 101 and np.all(p.Z == 0)


def test_brownian_deterministic():
    spec = DrivingSpec(DrivingKind.BROWNIAN, 1e-3, 1.0, seed=11)
    assert np.array_equal(sample_driving(spec).Z, sample_driving(spec).Z)
    other = DrivingSpec(DrivingKind.BROWNIAN, 1e-3, 1.0, seed=12)
    assert not np.array_equal(sample_driving(spec).Z, sample_driving(other).Z)


def test_brownian_increment_variance():
    spec = DrivingSpec(DrivingKind.BROWNIAN, 1e-5, 1.0, seed=3, kappa=4.0)
    dZ = np.diff(sample_driving(spec).Z)
    var = dZ.var()
    # chi-square: var of sample variance is 2 sigma^4 / n
    se = math.sqrt(2 / dZ.size) * 4 * spec.dt
    assert abs(var - 4 * spec.dt) <= 3 * se


def test_brownian_bridge_refinement_consistent():
    coarse = sample_driving(DrivingSpec(DrivingKind.BROWNIAN, 1e-2, 1.0, seed=5))
    fine = sample_driving(DrivingSpec(DrivingKind.BROWNIAN, 5e-3, 1.0, seed=5))
    assert np.allclose(fine.Z[::2], coarse.Z, atol=1e-15)


@pytest.mark.parametrize("kind,extra", [("BROWNIAN", {}), ("SLE_KAPPA_RHO", {"xi0": 1.0, "rho": -2.0})])
def test_batch_matches_single(kind, extra):
    spec = DrivingSpec(DrivingKind(kind), 1e-3, 0.3, seed=9, **extra)
    batch = sample_driving_batch(spec, 5)
    for p in range(5):
        one = sample_driving(spec, p)
        assert np.array_equal(batch.Z[p], one.Z)
        assert np.array_equal(batch.dB[p], one.dB)
        if one.Xi is not None:
            assert np.array_equal(batch.Xi[p], one.Xi)


def test_force_point_threshold_freezes():
    spec = DrivingSpec(DrivingKind.SLE_KAPPA_RHO, 1e-3, 2.0, seed=1, xi0=0.2, rho=-2.0)
    b = sample_driving_batch(spec, 50)
    hit = b.threshold_index < spec.n_steps + 1
    assert hit.any()
    p = int(np.argmax(hit))
    k = b.threshold_index[p]
    assert np.all(b.Z[p, k:] == b.Z[p, k])


def test_one_step_closed_form():
    st0 = initial_state([2.0], [1.0])
    st1 = advance_flow(st0, 0.0, 0.0, 1e-4)
    assert abs(st1.Lam[0] - math.sqrt(4 + 4e-4)) < 1e-10


def test_geometric_derivatives_closed_form():
    last = run_trajectory(zero_spec(), [2.0], [1.0])[-1]
    assert abs(last.gprime[0] - G1) < 1e-7
    assert abs(last.pre[0] - PRE1) < 1e-7
    assert abs(last.schw[0] - SCHW1) < 1e-7
    assert abs(last.S[0] - G1) < 1e-8


def test_zero_dt_is_identity():
    st0 = initial_state([2.0 + 1j], [1.0])
    st1 = advance_flow(st0, 0.0, 0.0, 0.0)
    assert np.array_equal(st1.Lam, st0.Lam) and np.array_equal(st1.S, st0.S)


def test_general_rank():
    last = run_trajectory(zero_spec(), [2.0], [1.0])[-1]
    assert evolve_birkhoff_general(last, 0, 1, 1.0) == last.S[0]
    assert abs(evolve_birkhoff_general(last, 0, 2, 1.0) - 0.5) < 1e-8
    first = initial_state([2.0], [1.0])
    assert evolve_birkhoff_general(first, 0, 3, 0.7 + 0.1j) == 0.7 + 0.1j
    with pytest.raises(IndexOutOfRange):
        evolve_birkhoff_general(last, 1, 1, 1.0)


def test_general_rank_matches_power_of_gprime():
    for seed in range(10):
        spec = DrivingSpec(DrivingKind.BROWNIAN, 1e-4, 0.3, seed=seed)
        last = run_trajectory(spec, [1 + 1j], [1.0])[-1]
        for k in (2, 3):
            assert abs(evolve_birkhoff_general(last, 0, k, 1.0) - last.gprime[0] ** k) < 1e-8


def test_no_punctures_never_stops():
    states = run_trajectory(DrivingSpec(DrivingKind.BROWNIAN, 1e-2, 1.0, seed=2), [], [])
    assert len(states) == 101 and not states[-1].stopped


def test_swallow_near_analytic_time():
    states = run_trajectory(DrivingSpec(DrivingKind.ZERO, 1e-3, 1.5), [2j], [1.0])
    last = states[-1]
    assert last.stopped and last.stop_reason == SWALLOW
    assert abs(last.t - 1.0) < 1e-2


def test_trajectory_csv_deterministic():
    spec = DrivingSpec(DrivingKind.BROWNIAN, 1e-3, 0.2, seed=4)
    a = trajectory_csv(run_trajectory(spec, [1j, 2 + 1j], [1.0, 0.5j]))
    b = trajectory_csv(run_trajectory(spec, [1j, 2 + 1j], [1.0, 0.5j]))
    assert a == b


def test_invalid_specs():
    with pytest.raises(InvalidSpec):
        DrivingSpec(DrivingKind.BROWNIAN, 0.0, 1.0)
    with pytest.raises(InvalidSpec):
        DrivingSpec(DrivingKind.SLE_KAPPA_RHO, 1e-3, 1.0)
    with pytest.raises(InvalidSpec):
        DrivingSpec(DrivingKind.BROWNIAN, 0.3, 1.0).n_steps


@settings(max_examples=25, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(0.5, 2.0))
def test_reflection_symmetry(x, y):
    # z -> -conj(z) together with Z -> -Z conjugates the flow
    spec = DrivingSpec(DrivingKind.BROWNIAN, 1e-2, 0.2, seed=0)
    path = sample_driving(spec)
    a = run_trajectory(spec, [complex(x, y)], [1.0], path=path)[-1]
    mirror = type(path)(t=path.t, Z=-path.Z, B=-path.B, dB=-path.dB)
    b = run_trajectory(spec, [complex(-x, y)], [1.0], path=mirror)[-1]
    assert abs(a.Lam[0] + np.conj(b.Lam[0])) < 1e-12
    assert abs(a.gprime[0] - np.conj(b.gprime[0])) < 1e-12
    assert abs(a.schw[0] - np.conj(b.schw[0])) < 1e-12
