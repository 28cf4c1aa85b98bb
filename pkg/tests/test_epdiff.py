import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sobgeo import epdiff as ep
from sobgeo import grid
from sobgeo.errors import BlowUpError, ImmersionError, ValidationError
from sobgeo.operator import OperatorSpec

from conftest import theta


def test_order_and_family_requirements():
    u = np.sin(theta(17))
    for spec in (OperatorSpec(0.4), OperatorSpec(1.0, "scale_invariant")):
        with pytest.raises(ValidationError):
            ep.lagrangian_geodesic(u, spec, 0.1, 0.05)
        with pytest.raises(ValidationError):
            ep.eulerian_solve(u, spec, 0.1, 0.05)
    ep.lagrangian_geodesic(u, OperatorSpec(0.5), 0.1, 0.05)


def test_circle_diffeo():
    th = theta(33)
    g = ep.CircleDiffeo(0.3 * np.sin(th))
    assert np.allclose(g.angles, th + 0.3 * np.sin(th))
    assert np.max(np.abs(g.derivative - (1 + 0.3 * np.cos(th)))) <= 1e-12
    with pytest.raises(ImmersionError, match="particle crossing"):
        ep.CircleDiffeo(1.5 * np.sin(th))
    with pytest.raises(ValidationError):
        ep.CircleDiffeo(np.zeros((33, 1)))


@pytest.mark.parametrize("p", [0.5, 1.0, 2.0])
def test_rigid_rotation_is_steady(p):
    n = 33
    spec = OperatorSpec(p)
    u0 = np.full(n, 0.7)
    run = ep.eulerian_solve(u0, spec, 1.0, 0.1)
    assert np.max(np.abs(run.states[-1].u - 0.7)) <= 1e-14
    lag = ep.lagrangian_geodesic(u0, spec, 1.0, 0.1)
    assert np.max(np.abs(lag.phi[-1] - 0.7)) <= 1e-13
    assert np.max(np.abs(lag.phi_t[-1] - 0.7)) <= 1e-13


def test_momentum_multiplier():
    th = theta(33)
    spec = OperatorSpec(1.5)
    u = np.sin(2 * th) + 0.5
    m = ep.momentum(u, spec)
    assert np.max(np.abs(m - (5**1.5 * np.sin(2 * th) + 0.5))) <= 1e-12
    assert np.max(np.abs(ep.velocity(m, spec) - u)) <= 1e-14


def test_h1_energy_at_order_one():
    # for p = 1 the energy is int u^2 + u_theta^2
    th = theta(33)
    u = np.sin(th) + 0.2 * np.cos(3 * th)
    spec = OperatorSpec(1.0)
    want = np.pi * (2 + 0.04 * 10)
    assert ep.EulerianState.from_velocity(u, spec).energy() == pytest.approx(want, rel=1e-13)
    assert ep.lagrangian_energy(np.zeros(33), spec, u) == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("p", [0.75, 1.0, 2.0])
def test_formulations_agree_and_conserve_energy(p):
    n = 65
    u0 = 0.2 * np.sin(theta(n)) + 0.05 * np.cos(2 * theta(n))
    check = ep.compare_formulations(u0, OperatorSpec(p), 1.0, 0.01, record_every=25)
    assert check.discrepancy <= 1e-8
    for e in (check.lagrangian_energies, check.eulerian_energies):
        assert np.ptp(e) <= 1e-10 * e[0]
    assert abs(check.lagrangian_energies[0] - check.eulerian_energies[0]) <= 1e-12 * check.eulerian_energies[0]


def test_lagrangian_momentum_is_transported():
    # (m o phi) (phi')^2 is constant in time along the flow
    n = 65
    spec = OperatorSpec(1.0)
    th = theta(n)
    u0 = 0.3 * np.sin(th)
    check = ep.compare_formulations(u0, spec, 0.8, 0.01)
    phi = check.lagrangian.phi[-1]
    m_t = ep.momentum(check.u_eulerian, spec)
    pulled = grid.trig_interpolate(m_t, th + phi) * (1 + grid.diff_theta(phi)) ** 2
    assert np.max(np.abs(pulled - ep.momentum(u0, spec))) <= 1e-8


def test_time_step_refinement():
    n = 33
    u0 = 0.3 * np.sin(theta(n))
    spec = OperatorSpec(1.0)
    ref = ep.eulerian_solve(u0, spec, 1.0, 0.0125).states[-1].u
    e1 = np.max(np.abs(ep.eulerian_solve(u0, spec, 1.0, 0.1).states[-1].u - ref))
    e2 = np.max(np.abs(ep.eulerian_solve(u0, spec, 1.0, 0.05).states[-1].u - ref))
    assert np.log2(e1 / e2) > 3.5


def test_inverse_angles():
    th = theta(33)
    phi = 0.4 * np.sin(th) + 0.1 * np.cos(2 * th)
    y = ep.inverse_angles(phi)
    assert np.max(np.abs(y + grid.trig_interpolate(phi, y) - th)) <= 1e-13


def test_blow_up_guard():
    u0 = np.sin(theta(17))
    with pytest.raises(BlowUpError):
        ep.eulerian_solve(u0, OperatorSpec(1.0), 0.2, 0.1, u_bound=0.5)


def test_breaking_wave_reports_particle_crossing():
    # steep H^1 data steepens until neighbouring particles collide
    n = 33
    u0 = -1.5 * np.sin(theta(n))
    with pytest.raises(ImmersionError, match="particle crossing"):
        ep.lagrangian_geodesic(u0, OperatorSpec(1.0), 5.0, 0.01, floor=1e-2)


def test_spectral_filter_profile():
    f = ep._spectral_filter(65)
    nu = np.abs(grid.get_grid(65).wavenumbers)
    assert np.all(f[nu <= 26] == 1.0)
    assert f[nu == 32][0] < 1e-15
    u = np.sin(theta(65))
    state = ep.EulerianState.from_velocity(u, OperatorSpec())
    a = ep.epdiff_eulerian_step(state, OperatorSpec(), 0.01).u
    b = ep.epdiff_eulerian_step(state, OperatorSpec(), 0.01, spectral_filter=True).u
    assert np.max(np.abs(a - b)) <= 1e-14


@settings(max_examples=10)
@given(st.integers(0, 2**32 - 1), st.integers(0, 32))
def test_grid_rotation_of_eulerian_step(seed, k):
    rng = np.random.default_rng(seed)
    u = grid.random_smooth_field(33, 1, rng, amplitude=0.3, max_mode=4)[:, 0]
    spec = OperatorSpec(1.0)
    a = ep.epdiff_eulerian_step(ep.EulerianState.from_velocity(u, spec), spec, 0.05).u
    b = ep.epdiff_eulerian_step(ep.EulerianState.from_velocity(np.roll(u, -k), spec), spec, 0.05).u
    assert np.max(np.abs(np.roll(a, -k) - b)) <= 1e-13
