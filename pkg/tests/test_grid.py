import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sobgeo import grid
from sobgeo.errors import ValidationError

from conftest import theta

odd_n = st.integers(min_value=4, max_value=40).map(lambda k: 2 * k + 1)
finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def test_grid_requires_odd_n():
    with pytest.raises(ValidationError):
        grid.get_grid(32)
    with pytest.raises(ValidationError):
        grid.get_grid(7)
    g = grid.get_grid(33)
    assert g.spacing == 2 * np.pi / 33
    assert np.allclose(np.diff(g.theta), g.spacing, atol=1e-15)


def test_diff_theta_examples():
    th = theta(33)
    assert np.max(np.abs(grid.diff_theta(np.sin(th)) - np.cos(th))) <= 1e-12
    assert np.max(np.abs(grid.diff_theta(np.ones(33)))) <= 1e-13
    assert np.max(np.abs(grid.diff_theta(np.sin(5 * th)) - 5 * np.cos(5 * th))) <= 1e-11


def test_diff_theta_length_mismatch():
    with pytest.raises(ValidationError):
        grid.diff_theta(np.ones(10), grid.get_grid(33))


def test_diff_matrix_exactly_antisymmetric():
    d = grid.get_grid(65).diff_matrix
    assert np.array_equal(d, -d.T)


@pytest.mark.parametrize("n", [9, 33, 65])
def test_exact_on_all_resolved_modes(n):
    th = theta(n)
    for nu in range(grid.get_grid(n).max_mode + 1):
        assert np.max(np.abs(grid.diff_theta(np.cos(nu * th)) + nu * np.sin(nu * th))) <= 1e-11


def test_matrix_and_fft_routes_agree(rng):
    u = rng.standard_normal((65, 3))
    a = grid.diff_theta(u, method="matrix")
    b = grid.diff_theta(u, method="fft")
    assert np.max(np.abs(a - b)) <= 1e-12 * max(1.0, np.max(np.abs(a)))


def test_quadrature_examples():
    assert grid.quadrature(np.ones(33)) == pytest.approx(2 * np.pi, abs=1e-14)
    assert abs(grid.quadrature(np.cos(theta(33)) ** 2) - np.pi) <= 1e-13
    ref = grid.quadrature(np.exp(np.sin(theta(4097))))
    val = grid.quadrature(np.exp(np.sin(theta(65))))
    assert abs(val - ref) / ref <= 1e-10


def test_resample_examples():
    n = 129
    th = theta(n)
    u = np.cos(th)
    assert np.max(np.abs(grid.resample(u, th) - u)) <= 1e-13
    for k in (1, 5, 128):
        assert np.array_equal(grid.resample(u, grid.rotation_map(k, n)), np.roll(u, -k))
    phi = th + 0.3 * np.sin(th)
    assert np.max(np.abs(grid.resample(u, phi) - np.cos(phi))) <= 1e-10


def test_resample_rejects_folding_map():
    th = theta(33)
    with pytest.raises(ValidationError):
        grid.resample(np.cos(th), th + 1.5 * np.sin(th))


def test_fourier_tail_examples():
    th = theta(33)
    u = np.sin(3 * th)
    assert grid.fourier_tail_energy(u, 5) <= 1e-24
    assert grid.fourier_tail_energy(u, 3) == pytest.approx(grid.total_energy(u), rel=1e-12)
    assert grid.total_energy(u) == pytest.approx(grid.quadrature(u * u), rel=1e-12)
    assert grid.fourier_tail_energy(np.zeros(33), 2) == 0.0
    with pytest.raises(ValidationError):
        grid.fourier_tail_energy(u, 17)


@given(odd_n.flatmap(lambda n: st.tuples(arrays(float, n, elements=finite), arrays(float, n, elements=finite))))
def test_antisymmetry_property(pair):
    u, v = pair
    lhs = grid.quadrature(u * grid.diff_theta(v))
    rhs = -grid.quadrature(v * grid.diff_theta(u))
    scale = max(1.0, np.sum(np.abs(u)) * np.sum(np.abs(v)))
    assert abs(lhs - rhs) <= 1e-12 * scale


@given(odd_n.flatmap(lambda n: arrays(float, n, elements=finite)))
def test_parseval_property(u):
    q = grid.quadrature(u * u)
    assert abs(q - grid.total_energy(u)) <= 1e-12 * max(q, 1e-300) + 1e-300


@given(odd_n.flatmap(lambda n: st.tuples(arrays(float, n, elements=finite), st.integers(0, n - 1))))
def test_grid_rotation_commutes_with_diff(args):
    u, k = args
    n = u.shape[0]
    phi = grid.rotation_map(k, n)
    a = grid.diff_theta(grid.resample(u, phi))
    b = grid.resample(grid.diff_theta(u), phi)
    assert np.max(np.abs(a - b)) <= 1e-13 * max(1.0, np.max(np.abs(b)))
