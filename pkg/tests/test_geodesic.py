import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sobgeo import geodesic as gd
from sobgeo import geometry as geo
from sobgeo import grid
from sobgeo.errors import ConvergenceError, ImmersionLostError, TrustRegionError, ValidationError
from sobgeo.operator import OperatorSpec

from conftest import theta, wobbly_loop

seeds = st.integers(0, 2**32 - 1)


def random_pair(seed, n=33):
    rng = np.random.default_rng(seed)
    f = geo.circle(n) + grid.random_smooth_field(n, 2, rng, amplitude=0.08, max_mode=5)
    return f, grid.random_smooth_field(n, 2, rng, max_mode=5)


def bump_velocity(n, amp=0.1):
    th = theta(n)
    return amp * np.column_stack([np.cos(2 * th), np.sin(3 * th)])


def test_spray_vanishes_at_rest():
    f = wobbly_loop(33)
    assert np.max(np.abs(gd.spray_rhs(f, OperatorSpec(1.5), np.zeros_like(f)))) == 0.0


def test_spray_requires_order_one():
    f = wobbly_loop(17)
    with pytest.raises(ValidationError):
        gd.spray_rhs(f, OperatorSpec(0.5), f)
    with pytest.raises(ValidationError):
        gd.exp_map(f, f, OperatorSpec(0.75))


def test_spray_rejects_bad_form_and_shape():
    f = wobbly_loop(17)
    with pytest.raises(ValidationError):
        gd.spray_rhs(f, OperatorSpec(), f, form="other")
    with pytest.raises(ValidationError):
        gd.spray_rhs(f, OperatorSpec(), f[:-1])


@settings(max_examples=10)
@given(seeds, st.sampled_from([1.0, 1.5, 2.0]), st.floats(-4, 4).filter(lambda c: abs(c) > 1e-3))
def test_spray_quadratic(seed, p, c):
    f, h = random_pair(seed)
    spec = OperatorSpec(p)
    base = gd.spray_rhs(f, spec, h)
    assert np.max(np.abs(gd.spray_rhs(f, spec, c * h) - c * c * base)) <= 1e-11 * c * c * np.max(np.abs(base))


@settings(max_examples=10)
@given(seeds, st.floats(0, 2 * np.pi), st.sampled_from(["standard", "scale_invariant"]))
def test_spray_euclidean_equivariance(seed, angle, family):
    f, h = random_pair(seed)
    spec = OperatorSpec(1.5, family)
    shift = np.array([0.3, -1.2])
    base = gd.spray_rhs(f, spec, h)
    moved = gd.spray_rhs(geo.rotate(f, angle) + shift, spec, geo.rotate(h, angle))
    assert np.max(np.abs(moved - geo.rotate(base, angle))) <= 1e-10 * np.max(np.abs(base))


@pytest.mark.parametrize("spec", [OperatorSpec(1.0), OperatorSpec(2.0), OperatorSpec(1.5, "scale_invariant")])
def test_spray_forms_agree(spec):
    n = 129
    f = wobbly_loop(n)
    h = bump_velocity(n, 1.0)
    a = gd.spray_rhs(f, spec, h, form="geometric")
    b = gd.spray_rhs(f, spec, h, form="variational")
    assert np.max(np.abs(a - b)) <= 1e-10 * np.max(np.abs(a))


def test_exp_zero_velocity_is_constant():
    f = wobbly_loop(17)
    traj = gd.exp_map(f, np.zeros_like(f), OperatorSpec(), t_end=0.1, dt=0.05)
    assert all(np.array_equal(st.f, f) for st in traj.states)
    assert np.all(traj.energies == 0.0)
    assert traj.max_energy_drift() == 0.0


def test_exp_homogeneity():
    n = 33
    f = wobbly_loop(n)
    h = bump_velocity(n)
    spec = OperatorSpec(1.5)
    a = gd.exp_map(f, h, spec, t_end=2.0, dt=0.02).final.f
    b = gd.exp_map(f, 2 * h, spec, t_end=1.0, dt=0.01).final.f
    assert np.max(np.abs(a - b)) <= 1e-7


def test_exp_time_reversal():
    n = 33
    f = wobbly_loop(n)
    spec = OperatorSpec(2.0)
    end = gd.exp_map(f, bump_velocity(n), spec, t_end=1.0, dt=0.01).final
    back = gd.exp_map(end.f, -end.ft, spec, t_end=1.0, dt=0.01).final
    assert np.max(np.abs(back.f - f)) <= 1e-6


def test_radial_geodesic_of_circle_stays_circular():
    n = 33
    f = geo.circle(n)
    traj = gd.exp_map(f, 0.3 * f, OperatorSpec(1.0), t_end=1.0, dt=0.01, record_every=25)
    for st in traj.states:
        r = np.linalg.norm(st.f, axis=1)
        assert np.ptp(r) <= 1e-12
    assert traj.final.f[0, 0] > 1.2
    assert traj.max_energy_drift() <= 1e-8
    # constant-speed parametrization: path energy is E0 t_end / 2
    assert gd.path_energy(traj) == pytest.approx(0.5 * traj.energies[0], rel=1e-3)
    assert np.all(gd.regularity_diagnostic(traj, 2) <= 1e-24)


def test_path_energy_single_state():
    f = wobbly_loop(17)
    traj = gd.exp_map(f, bump_velocity(17), OperatorSpec(), t_end=0.0)
    assert len(traj.states) == 1
    assert gd.path_energy(traj) == 0.0


def test_recording_and_grid_rotation():
    n = 33
    f = wobbly_loop(n)
    h = bump_velocity(n)
    spec = OperatorSpec(1.5)
    traj = gd.exp_map(f, h, spec, t_end=0.3, dt=0.01, record_every=7)
    assert np.allclose(traj.times, [0.0, 0.07, 0.14, 0.21, 0.28, 0.3])
    rolled = gd.exp_map(np.roll(f, -5, axis=0), np.roll(h, -5, axis=0), spec, t_end=0.3, dt=0.01, record_every=7)
    for a, b in zip(traj.states, rolled.states):
        assert np.max(np.abs(np.roll(a.f, -5, axis=0) - b.f)) <= 1e-11


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_immersion_loss_carries_partial_trajectory():
    n = 17
    f = geo.circle(n)
    with pytest.raises(ImmersionLostError) as info:
        gd.exp_map(f, -3.0 * f, OperatorSpec(1.0), t_end=2.0, dt=0.01, floor=1e-2)
    err = info.value
    assert 0 < err.time < 2.0
    traj = err.trajectory
    assert len(traj.states) == len(traj.energies) >= 2
    assert traj.times[-1] < err.time


def test_drift_warning(caplog):
    n = 17
    f = wobbly_loop(n)
    with caplog.at_level(logging.WARNING):
        traj = gd.exp_map(f, bump_velocity(n, 0.5), OperatorSpec(), t_end=0.5, dt=0.25, energy_drift_warn=1e-14)
    assert traj.warnings and "energy drift" in traj.warnings[0]
    assert any("energy drift" in r.message for r in caplog.records)


def test_stale_operator_is_close():
    n = 33
    f = wobbly_loop(n)
    h = bump_velocity(n)
    spec = OperatorSpec(1.0)
    exact = gd.exp_map(f, h, spec, t_end=0.2, dt=0.01).final.f
    stale = gd.exp_map(f, h, spec, t_end=0.2, dt=0.01, stale_operator=True).final.f
    gap = np.max(np.abs(exact - stale))
    assert 0.0 < gap <= 1e-4


def test_bad_time_step():
    f = wobbly_loop(17)
    with pytest.raises(ValidationError):
        gd.exp_map(f, f, OperatorSpec(), dt=0.0)
    with pytest.raises(ValidationError):
        gd.exp_map(f, f, OperatorSpec(), t_end=-1.0)


def test_log_of_identical_loops_is_zero():
    f = wobbly_loop(17)
    assert np.array_equal(gd.log_map(f, f, OperatorSpec()), np.zeros_like(f))


def test_log_recovers_velocity():
    n = 17
    f = wobbly_loop(n)
    th = theta(n)
    h = 0.05 * np.column_stack([np.cos(th), np.sin(2 * th)])
    spec = OperatorSpec(1.0)
    f1, _ = gd.integrate(f, h, spec, 1.0, 0.02)
    got = gd.log_map(f, f1, spec, tol=1e-11, dt=0.02)
    assert np.max(np.abs(got - h)) <= 1e-6 * np.max(np.abs(h))


def test_log_trust_region():
    f = wobbly_loop(17)
    with pytest.raises(TrustRegionError) as info:
        gd.log_map(f, 3.0 * f, OperatorSpec())
    assert info.value.best is not None


def test_log_reports_best_iterate_on_stall():
    n = 17
    f = wobbly_loop(n)
    f1, _ = gd.integrate(f, bump_velocity(n, 0.05), OperatorSpec(), 1.0, 0.05)
    with pytest.raises(ConvergenceError) as info:
        gd.log_map(f, f1, OperatorSpec(), dt=0.05, max_iter=0)
    best = info.value.best
    assert not best.converged and np.isfinite(best.residual)
