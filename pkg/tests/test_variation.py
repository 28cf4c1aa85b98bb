import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sobgeo import geometry as geo
from sobgeo import grid, operator, variation
from sobgeo.errors import ValidationError
from sobgeo.operator import OperatorSpec

from conftest import gentle_loop, theta, wobbly_loop

seeds = st.integers(0, 2**32 - 1)
specs = st.builds(OperatorSpec, st.sampled_from([1.0, 1.5, 2.0]), st.sampled_from(["standard", "scale_invariant"]))


def random_instance(seed, n=33):
    rng = np.random.default_rng(seed)
    f = geo.circle(n) + grid.random_smooth_field(n, 2, rng, amplitude=0.08, max_mode=5)
    h, k, m = (grid.random_smooth_field(n, 2, rng, max_mode=5) for _ in range(3))
    return f, h, k, m


def gentle_fields(n):
    th = theta(n)
    h = np.column_stack([0.3 * np.cos(th), 0.2 * np.sin(2 * th)])
    k = np.column_stack([0.1 * np.sin(th), 0.25 * np.cos(th)])
    return h, k


def test_divided_differences():
    lam = np.array([1.0, 2.0, 2.0 + 1e-13, 5.0])
    g = variation.divided_differences(lam, 1.5)
    assert np.allclose(np.diag(g), 1.5 * lam**0.5, rtol=1e-14)
    assert g[0, 3] == pytest.approx((5.0**1.5 - 1.0) / 4.0, rel=1e-14)
    assert g[1, 2] == pytest.approx(1.5 * 2.0**0.5, rel=1e-10)
    assert np.array_equal(g, g.T)


def test_derivative_zero_direction_and_constants():
    f, h, _, m = random_instance(0)
    spec = OperatorSpec(1.5)
    assert np.array_equal(variation.derivative_P(f, spec, np.zeros_like(f), h), np.zeros_like(h))
    const = np.tile([1.0, -2.0], (33, 1))
    assert np.max(np.abs(variation.derivative_P(f, spec, m, const))) <= 1e-8
    assert np.max(np.abs(variation.derivative_P_exact(f, spec, m, const))) <= 1e-10


def test_derivative_richardson_ratio_and_exact_route():
    f, h, _, m = random_instance(1)
    spec = OperatorSpec(1.5)
    exact = variation.derivative_P_exact(f, spec, m, h)
    e1 = np.max(np.abs(variation.derivative_P(f, spec, m, h, eps=1e-2) - exact))
    e2 = np.max(np.abs(variation.derivative_P(f, spec, m, h, eps=5e-3) - exact))
    assert 3.5 < e1 / e2 < 4.5
    rich = variation.derivative_P(f, spec, m, h, eps=1e-3, richardson=True)
    assert np.max(np.abs(rich - exact)) <= 1e-8 * np.max(np.abs(exact))


def test_derivative_shape_errors():
    f, h, _, m = random_instance(2)
    with pytest.raises(ValidationError):
        variation.derivative_P(f, OperatorSpec(), m[:, :1], h)


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0])
def test_tangential_variation_identity(p):
    # moving the foot point along f_theta is a reparametrization
    n = 129
    f = wobbly_loop(n)
    th = theta(n)
    h = np.column_stack([np.cos(2 * th), 0.5 * np.sin(th)])
    spec = OperatorSpec(p)
    op = operator.assemble(f, spec)
    rhs = grid.diff_theta(op.apply(h)) - op.apply(grid.diff_theta(h))
    exact = variation.derivative_P_exact(f, spec, grid.diff_theta(f), h)
    fd = variation.derivative_P(f, spec, grid.diff_theta(f), h, eps=1e-3, richardson=True)
    scale = np.max(np.abs(rhs))
    assert np.max(np.abs(exact - rhs)) <= 1e-9 * scale
    assert np.max(np.abs(fd - rhs)) <= 1e-7 * scale


@pytest.mark.parametrize("method", variation.METHODS)
def test_adjoint_vanishes_on_zero_fields(method):
    n = 17
    f = wobbly_loop(n)
    h = np.ones((n, 2))
    zero = np.zeros((n, 2))
    spec = OperatorSpec(1.0)
    for a, b in ((zero, h), (h, zero), (zero, zero)):
        assert np.max(np.abs(variation.adjoint_normal(f, spec, a, b, method=method).value)) <= 1e-14


def test_unknown_method():
    with pytest.raises(ValidationError):
        variation.adjoint_normal(wobbly_loop(17), OperatorSpec(), np.ones((17, 2)), np.ones((17, 2)), method="magic")


def test_closed_form_preconditions():
    f = wobbly_loop(17)
    h = np.ones((17, 2))
    for spec in (OperatorSpec(1.5), OperatorSpec(1.0, "scale_invariant"), OperatorSpec(0.0)):
        with pytest.raises(ValidationError):
            variation.adjoint_normal_closed_form(f, spec, h, h)


@pytest.mark.parametrize("p", [1.0, 2.0, 3.0])
def test_closed_form_matches_exact_discrete_adjoint(p):
    n = 129
    f = gentle_loop(n)
    h, k = gentle_fields(n)
    spec = OperatorSpec(p)
    a = variation.adjoint_normal_closed_form(f, spec, h, k).value
    b = variation.adjoint_normal_spectral(f, spec, h, k).value
    assert np.max(np.abs(a - b)) <= 1e-7 * np.max(np.abs(b))


def test_closed_form_on_circle_matches_fd():
    n = 129
    th = theta(n)
    h = np.column_stack([np.cos(th), np.zeros(n)])
    spec = OperatorSpec(1.0)
    cf = variation.adjoint_normal_closed_form(geo.circle(n), spec, h, h).value
    fd = variation.adjoint_normal_fd(geo.circle(n), spec, h, h, eps=1e-4, richardson=True).value
    assert np.max(np.abs(cf - fd)) <= 1e-6


def test_fd_dualization_matches_spectral():
    n = 33
    f = wobbly_loop(n)
    h, k = gentle_fields(n)
    spec = OperatorSpec(1.5)
    fd = variation.adjoint_normal_fd(f, spec, h, k, eps=1e-4, richardson=True).value
    sp = variation.adjoint_normal_spectral(f, spec, h, k).value
    assert np.max(np.abs(fd - sp)) <= 1e-7 * np.max(np.abs(sp))


def test_fd_threads_do_not_change_bits():
    n = 17
    f = wobbly_loop(n)
    h, k = gentle_fields(n)
    spec = OperatorSpec(1.5)
    one = variation.adjoint_normal_fd(f, spec, h, k, threads=1).value
    many = variation.adjoint_normal_fd(f, spec, h, k, threads=3).value
    assert np.array_equal(one, many)


def test_swap_identity_replaces_symmetry():
    # Adj(h,k) - Adj(k,h) = (s^-1 D(q v))^perp with q = <Ph,k> - <h,Pk>,
    # which tends to q H; it does not vanish because P is self-adjoint only
    # after integrating against the (varying) arclength
    n = 65
    f = wobbly_loop(n)
    h, k = gentle_fields(n)
    spec = OperatorSpec(1.0)
    op = operator.assemble(f, spec)
    s, v = variation.frame(grid.diff_theta(f))
    q = np.sum(op.apply(h) * k, axis=1) - np.sum(h * op.apply(k), axis=1)
    want = geo._normal_part(grid.diff_theta(q[:, None] * v) / s[:, None], v)
    hk = variation.adjoint_normal_spectral(f, spec, h, k).value
    kh = variation.adjoint_normal_spectral(f, spec, k, h).value
    assert np.max(np.abs(want)) > 1e-3
    assert np.max(np.abs(hk - kh - want)) <= 1e-12 * np.max(np.abs(hk))
    fd_hk = variation.adjoint_normal_fd(f, spec, h, k, eps=1e-4, richardson=True).value
    fd_kh = variation.adjoint_normal_fd(f, spec, k, h, eps=1e-4, richardson=True).value
    assert np.max(np.abs(fd_hk - fd_kh - want)) <= 1e-6 * np.max(np.abs(hk))
    # continuum limit, up to discretization error
    assert np.max(np.abs(want - q[:, None] * geo.curvature(f))) <= 1e-5 * np.max(np.abs(want))


@given(seeds, specs)
def test_defining_relation_second_order(seed, spec):
    f, h, k, m = random_instance(seed)
    adj = variation.adjoint_normal_spectral(f, spec, h, k).value
    rhs = operator.assemble(f, spec).l2_inner(m, adj)
    res = [abs(variation.adjoint_pairing(f, spec, m, h, k, eps=e) - rhs) for e in (1e-2, 1e-3)]
    # second order until rounding takes over
    assert res[1] <= max(res[0] / 10**1.8, 1e-9 * max(abs(rhs), 1.0))


@given(seeds, specs, st.floats(-3, 3))
def test_normality_and_bilinearity(seed, spec, alpha):
    f, h, k, m = random_instance(seed)
    s, v = variation.frame(grid.diff_theta(f))
    a1 = variation.adjoint_normal_spectral(f, spec, h, k).value
    a2 = variation.adjoint_normal_spectral(f, spec, m, k).value
    comb = variation.adjoint_normal_spectral(f, spec, alpha * h + m, k).value
    scale = max(np.max(np.abs(a1)), np.max(np.abs(a2)), 1e-300)
    assert np.max(np.abs(np.sum(a1 * v, axis=1))) <= 1e-8 * max(scale, 1.0)
    assert np.max(np.abs(comb - alpha * a1 - a2)) <= 1e-10 * max(1.0, abs(alpha)) * scale
