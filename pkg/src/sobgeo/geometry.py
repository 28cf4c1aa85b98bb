"""Differential geometry of sampled immersed loops f: S^1 -> R^d.

A loop is an array of shape ``(n, d)``; tangent fields along it share that
shape. Everything is recomputed from ``f`` on demand.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ImmersionError, ValidationError
from .grid import diff_theta, get_grid, quadrature

IMMERSION_FLOOR = 1e-8


def as_loop(f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.ndim != 2 or f.shape[1] < 1:
        raise ValidationError(f"loop must have shape (n, d), got {f.shape}")
    get_grid(f.shape[0])
    return f


def _as_field(f, h) -> np.ndarray:
    h = np.asarray(h, dtype=float)
    if h.shape != f.shape:
        raise ValidationError(f"tangent field shape {h.shape} does not match loop {f.shape}")
    return h


def check_speed(speed, floor=IMMERSION_FLOOR):
    """Raise ImmersionError unless ``speed > floor * mean(speed)`` at every node."""
    if not np.all(np.isfinite(speed)):
        raise ImmersionError("non-finite speed: the loop has left the immersion set")
    mean = float(np.mean(np.abs(speed)))
    bad = np.flatnonzero(speed <= floor * mean)
    if mean == 0.0 or bad.size:
        j = int(bad[0]) if bad.size else 0
        raise ImmersionError(
            f"immersion floor violated at node {j}: |f_theta| = {speed[j]:.3e}, "
            f"floor = {floor:g} x mean speed {mean:.3e}"
        )


def speed(f, floor=IMMERSION_FLOOR) -> np.ndarray:
    """|d f / d theta| at the nodes, validated against the immersion floor."""
    f = as_loop(f)
    s = np.linalg.norm(diff_theta(f), axis=1)
    check_speed(s, floor)
    return s


def pullback_metric(f, floor=IMMERSION_FLOOR) -> np.ndarray:
    """Induced metric coefficient ``g = |f_theta|^2``."""
    return speed(f, floor) ** 2


def volume_density(f, floor=IMMERSION_FLOOR) -> np.ndarray:
    """Arclength density ``sqrt(g) = |f_theta|`` against d theta."""
    return speed(f, floor)


def length(f, floor=IMMERSION_FLOOR) -> float:
    return float(quadrature(speed(f, floor)))


def unit_tangent(f, floor=IMMERSION_FLOOR) -> np.ndarray:
    f = as_loop(f)
    ft = diff_theta(f)
    s = np.linalg.norm(ft, axis=1)
    check_speed(s, floor)
    return ft / s[:, None]


def arclength_derivative(f, h, floor=IMMERSION_FLOOR) -> np.ndarray:
    """d/ds h = |f_theta|^{-1} d/dtheta h."""
    f = as_loop(f)
    h = np.asarray(h, dtype=float)
    if h.shape[0] != f.shape[0]:
        raise ValidationError("field and loop live on different grids")
    s = speed(f, floor)
    dh = diff_theta(h)
    return dh / s[:, None] if dh.ndim == 2 else dh / s


def _dot(a, b):
    return np.einsum("ij,ij->i", a, b)


def _normal_part(h, v):
    return h - _dot(h, v)[:, None] * v


def project(f, h, floor=IMMERSION_FLOOR):
    """Split ``h = coeff * f_theta + h_normal``.

    Returns
    -------
    coeff : (n,) array
        Tangential coefficient ``<h, v> / |f_theta|`` against ``f_theta``.
    normal : (n, d) array
        Pointwise normal part ``h - <h, v> v``.
    """
    f = as_loop(f)
    h = _as_field(f, h)
    ft = diff_theta(f)
    s = np.linalg.norm(ft, axis=1)
    check_speed(s, floor)
    v = ft / s[:, None]
    hv = _dot(h, v)
    return hv / s, h - hv[:, None] * v


def normal_part(f, h, floor=IMMERSION_FLOOR) -> np.ndarray:
    return project(f, h, floor)[1]


def _curvature_from(ftheta, s, v):
    # d_s d_s f = (1/s) D((1/s) D f); D f / s is v
    dss = diff_theta(v) / s[:, None]
    return _normal_part(dss, v)


def curvature(f, floor=IMMERSION_FLOOR) -> np.ndarray:
    """Vector-valued curvature ``H = (d_s d_s f)^perp``."""
    f = as_loop(f)
    ft = diff_theta(f)
    s = np.linalg.norm(ft, axis=1)
    check_speed(s, floor)
    return _curvature_from(ft, s, ft / s[:, None])


def second_fundamental_form(f, floor=IMMERSION_FLOOR) -> np.ndarray:
    """Normal part of ``f_theta_theta`` (coefficient of d theta (x) d theta)."""
    f = as_loop(f)
    return normal_part(f, diff_theta(diff_theta(f)), floor)


def metric_variation(f, m, floor=IMMERSION_FLOOR) -> np.ndarray:
    """First variation of ``g = |f_theta|^2`` in direction ``m``: ``2 <m_theta, f_theta>``."""
    f = as_loop(f)
    m = _as_field(f, m)
    speed(f, floor)
    return 2.0 * _dot(diff_theta(m), diff_theta(f))


def volume_variation(f, m, floor=IMMERSION_FLOOR) -> np.ndarray:
    """First variation of the density ``|f_theta|``: ``<d_s m, v> |f_theta|``."""
    f = as_loop(f)
    m = _as_field(f, m)
    ft = diff_theta(f)
    s = np.linalg.norm(ft, axis=1)
    check_speed(s, floor)
    # <D m, v> equals <d_s m, v> * s
    return _dot(diff_theta(m), ft / s[:, None])


@dataclass(frozen=True)
class MetricData:
    g: np.ndarray
    sqrt_g: np.ndarray
    v: np.ndarray
    H: np.ndarray


def metric_data(f, floor=IMMERSION_FLOOR) -> MetricData:
    """Bundle of pull-back metric, density, unit tangent and curvature."""
    f = as_loop(f)
    ft = diff_theta(f)
    s = np.linalg.norm(ft, axis=1)
    check_speed(s, floor)
    v = ft / s[:, None]
    return MetricData(g=s * s, sqrt_g=s, v=v, H=_curvature_from(ft, s, v))


def circle(n, radius=1.0, center=(0.0, 0.0)) -> np.ndarray:
    th = get_grid(n).theta
    return np.column_stack([center[0] + radius * np.cos(th), center[1] + radius * np.sin(th)])


def ellipse(n, a=2.0, b=1.0) -> np.ndarray:
    th = get_grid(n).theta
    return np.column_stack([a * np.cos(th), b * np.sin(th)])


def rotate(f, angle) -> np.ndarray:
    """Rigid rotation in the (x, y) plane of a planar loop or field."""
    c, s = np.cos(angle), np.sin(angle)
    r = np.array([[c, -s], [s, c]])
    return np.asarray(f) @ r.T
