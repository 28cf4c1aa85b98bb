"""Geodesics on Diff(S^1): Lagrangian flow and the Eulerian EPDiff equation.

A diffeomorphism is stored by its displacement ``phi`` with
``varphi(theta) = theta + phi(theta)``. The Lagrangian solver integrates the
same spray as the loop engine with ``f_theta = 1 + phi_theta`` (d = 1, so the
normal adjoint and curvature vanish). The Eulerian solver integrates

    m_t + u m_theta + 2 u_theta m = 0,      m = (1 - d_theta^2)^p u

pseudospectrally; at p = 1 this is the Camassa-Holm equation.
"""

from dataclasses import dataclass

import numpy as np

from .errors import BlowUpError, ImmersionError, ValidationError
from .geodesic import _rk4_step, _step_count, spray_from_derivative
from .geometry import IMMERSION_FLOOR, check_speed
from .grid import diff_theta, get_grid, quadrature, trig_interpolate
from .operator import OperatorSpec, WeightedOperator


def _require(spec: OperatorSpec):
    spec.require_order(0.5, "the Diff(S^1) geodesic equation")
    if spec.family != "standard":
        raise ValidationError("Diff(S^1) routines support the standard family only")


@dataclass(frozen=True)
class CircleDiffeo:
    """Orientation-preserving circle diffeomorphism ``theta + phi(theta)``."""

    phi: np.ndarray

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        if phi.ndim != 1:
            raise ValidationError("displacement must be a scalar field")
        object.__setattr__(self, "phi", phi)
        check_diffeo(phi)

    @property
    def angles(self) -> np.ndarray:
        return get_grid(self.phi.shape[0]).theta + self.phi

    @property
    def derivative(self) -> np.ndarray:
        return 1.0 + diff_theta(self.phi)


def check_diffeo(phi, floor=IMMERSION_FLOOR):
    dphi = 1.0 + diff_theta(np.asarray(phi, dtype=float))
    try:
        check_speed(dphi, floor)
    except ImmersionError as exc:
        raise ImmersionError(f"particle crossing: {exc}") from exc
    return dphi


def diffeo_spray_rhs(phi, spec: OperatorSpec, phi_t, floor=IMMERSION_FLOOR):
    """Lagrangian geodesic acceleration ``phi_tt``; needs ``p >= 1/2``."""
    _require(spec)
    dphi = check_diffeo(phi, floor)
    phi_t = np.asarray(phi_t, dtype=float)
    return spray_from_derivative(dphi[:, None], phi_t[:, None], spec, floor)[:, 0]


def lagrangian_energy(phi, spec, phi_t) -> float:
    """``G_phi(phi_t, phi_t) = int (P_phi phi_t) phi_t phi' d theta``."""
    dphi = 1.0 + diff_theta(phi)
    return WeightedOperator(dphi, spec).inner(phi_t, phi_t)


@dataclass
class LagrangianRun:
    times: np.ndarray
    phi: list
    phi_t: list
    energies: np.ndarray


def lagrangian_geodesic(u0, spec, t_end, dt, phi0=None, floor=IMMERSION_FLOOR, record_every=None):
    """Integrate the Diff(S^1) geodesic from ``(phi0, u0)`` (default ``phi0 = Id``)."""
    _require(spec)
    u0 = np.asarray(u0, dtype=float)
    phi = np.zeros_like(u0) if phi0 is None else np.asarray(phi0, dtype=float).copy()
    steps, dt = _step_count(t_end, dt)
    every = steps if record_every is None else record_every

    def accel(x, xt):
        return diffeo_spray_rhs(x[:, 0], spec, xt[:, 0], floor)[:, None]

    x, xt = phi[:, None], u0.copy()[:, None]
    run = LagrangianRun([0.0], [x[:, 0].copy()], [xt[:, 0].copy()], None)
    energies = [lagrangian_energy(x[:, 0], spec, xt[:, 0])]
    for i in range(1, steps + 1):
        x, xt = _rk4_step(x, xt, dt, accel)
        if i % max(every, 1) == 0 or i == steps:
            run.times.append(i * dt)
            run.phi.append(x[:, 0].copy())
            run.phi_t.append(xt[:, 0].copy())
            energies.append(lagrangian_energy(x[:, 0], spec, xt[:, 0]))
    run.times = np.array(run.times)
    run.energies = np.array(energies)
    return run


def _multiplier(n, p):
    return (1.0 + get_grid(n).wavenumbers ** 2) ** p


def momentum(u, spec) -> np.ndarray:
    """``m = P_Id u`` as a Fourier multiplier ``(1 + nu^2)^p``."""
    u = np.asarray(u, dtype=float)
    return np.fft.ifft(_multiplier(u.shape[0], spec.p) * np.fft.fft(u)).real


def velocity(m, spec) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    return np.fft.ifft(np.fft.fft(m) / _multiplier(m.shape[0], spec.p)).real


@dataclass(frozen=True)
class EulerianState:
    u: np.ndarray
    m: np.ndarray
    t: float = 0.0

    @classmethod
    def from_velocity(cls, u, spec, t=0.0):
        u = np.asarray(u, dtype=float)
        return cls(u, momentum(u, spec), t)

    def energy(self) -> float:
        return float(quadrature(self.u * self.m))


def epdiff_rhs(u, spec) -> np.ndarray:
    """``u_t = -P^{-1}(u m_theta + 2 u_theta m)``."""
    m = momentum(u, spec)
    mt = -(u * diff_theta(m, method="fft") + 2.0 * diff_theta(u, method="fft") * m)
    return velocity(mt, spec)


def _spectral_filter(n):
    nu = np.abs(get_grid(n).wavenumbers)
    top = get_grid(n).max_mode
    start = top * 5.0 / 6.0
    x = np.clip((nu - start) / (top - start), 0.0, None)
    return np.exp(-36.0 * x**4)


def epdiff_eulerian_step(state: EulerianState, spec, dt, u_bound=1e3, spectral_filter=False):
    """One RK4 step of the Eulerian equation."""
    _require(spec)
    u = state.u
    k1 = epdiff_rhs(u, spec)
    k2 = epdiff_rhs(u + 0.5 * dt * k1, spec)
    k3 = epdiff_rhs(u + 0.5 * dt * k2, spec)
    k4 = epdiff_rhs(u + dt * k3, spec)
    u_new = u + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if spectral_filter:
        u_new = np.fft.ifft(_spectral_filter(u.shape[0]) * np.fft.fft(u_new)).real
    peak = float(np.max(np.abs(u_new)))
    if not np.isfinite(peak) or peak > u_bound:
        raise BlowUpError(f"|u| = {peak:.3e} exceeds bound {u_bound:g} at t = {state.t + dt:.6g}")
    return EulerianState.from_velocity(u_new, spec, state.t + dt)


@dataclass
class EulerianRun:
    states: list
    energies: np.ndarray

    @property
    def times(self):
        return np.array([s.t for s in self.states])


def eulerian_solve(u0, spec, t_end, dt, u_bound=1e3, spectral_filter=False, record_every=None):
    _require(spec)
    steps, dt = _step_count(t_end, dt)
    every = steps if record_every is None else record_every
    state = EulerianState.from_velocity(u0, spec)
    states = [state]
    for i in range(1, steps + 1):
        state = epdiff_eulerian_step(state, spec, dt, u_bound, spectral_filter)
        state = EulerianState(state.u, state.m, i * dt)
        if i % max(every, 1) == 0 or i == steps:
            states.append(state)
    return EulerianRun(states, np.array([s.energy() for s in states]))


def inverse_angles(phi, tol=1e-14, max_iter=60) -> np.ndarray:
    """Points ``y_j`` with ``y_j + phi(y_j) = theta_j`` (Newton on the interpolant)."""
    phi = np.asarray(phi, dtype=float)
    th = get_grid(phi.shape[0]).theta
    dphi = diff_theta(phi)
    y = th - phi
    for _ in range(max_iter):
        g = y + trig_interpolate(phi, y) - th
        step = g / (1.0 + trig_interpolate(dphi, y))
        y = y - step
        if np.max(np.abs(step)) < tol:
            break
    return y


def eulerian_velocity(phi, phi_t) -> np.ndarray:
    """``u = phi_t o phi^{-1}`` at the grid nodes."""
    return trig_interpolate(phi_t, inverse_angles(phi))


@dataclass
class CrossCheck:
    discrepancy: float
    u_eulerian: np.ndarray
    u_lagrangian: np.ndarray
    lagrangian_energies: np.ndarray
    eulerian_energies: np.ndarray
    lagrangian: LagrangianRun
    eulerian: EulerianRun


def compare_formulations(
    u0, spec, t_end, dt, record_every=None, floor=IMMERSION_FLOOR, **eulerian_kwargs
) -> CrossCheck:
    """Run both formulations from ``u0`` and compare velocities at ``t_end``."""
    _require(spec)
    lag = lagrangian_geodesic(u0, spec, t_end, dt, floor=floor, record_every=record_every)
    eul = eulerian_solve(u0, spec, t_end, dt, record_every=record_every, **eulerian_kwargs)
    u_lag = eulerian_velocity(lag.phi[-1], lag.phi_t[-1])
    u_eul = eul.states[-1].u
    return CrossCheck(
        float(np.max(np.abs(u_lag - u_eul))), u_eul, u_lag, lag.energies, eul.energies, lag, eul
    )


def lagrangian_vs_eulerian(u0, spec, t_end, dt) -> float:
    """Sup-norm gap between the Eulerian ``u(t_end)`` and ``phi_t o phi^{-1}``."""
    return compare_formulations(u0, spec, t_end, dt).discrepancy
