"""Geodesic spray, exponential map and shooting log map on Imm(S^1, R^d).

The spray implements the flat-ambient geodesic equation

    f_tt = 1/2 P^{-1} ( Adj^perp(f_t, f_t) - 2 <P f_t, d_s f_t> v - <P f_t, f_t> H )
           - P^{-1} ( (d_{f_t} P) f_t + <d_s f_t, v> P f_t )

with the normal adjoint and the foot-point derivative of P taken from the
exact derivative of the discrete operator.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConvergenceError,
    ImmersionError,
    ImmersionLostError,
    TrustRegionError,
    ValidationError,
)
from .geometry import IMMERSION_FLOOR, _normal_part, as_loop, check_speed
from .grid import diff_theta, fourier_tail_energy, get_grid
from .operator import OperatorSpec, WeightedOperator
from .variation import calculus, frame

log = logging.getLogger(__name__)


def _einsum_dot(a, b):
    return np.einsum("ij,ij->i", a, b)


SPRAY_FORMS = ("geometric", "variational")


def spray_from_derivative(f_theta, ft, spec: OperatorSpec, floor=IMMERSION_FLOOR, op=None, form="geometric"):
    """Spray evaluated from ``f_theta`` rather than ``f``.

    Shared by loops (``f_theta = D f``) and circle diffeomorphisms
    (``f_theta = 1 + D phi``, d = 1, where every normal term vanishes).
    ``op`` overrides the operator (stale-operator approximation).

    ``form="geometric"`` evaluates the normal/tangential split of the
    geodesic equation term by term. ``form="variational"`` is the
    Euler-Lagrange equation of the discrete energy itself; the two agree to
    spectral accuracy.
    """
    s, v = frame(f_theta)
    check_speed(s, floor)
    if op is None:
        op = WeightedOperator(s, spec)
    calc = calculus(op)
    pft = op.apply(ft)
    ds_ft = diff_theta(ft) / s[:, None]
    trace = _einsum_dot(ds_ft, v)
    q = _einsum_dot(pft, ft)
    dp = calc.derivative(trace * s, ft)
    if form == "geometric":
        tangential = _einsum_dot(pft, ds_ft)
        curv = _normal_part(diff_theta(v) / s[:, None], v)
        adj = _normal_part(calc.adjoint_full(v, ft, ft), v)
        force = 0.5 * adj - tangential[:, None] * v - 0.5 * q[:, None] * curv
    elif form == "variational":
        beta = calc.speed_gradient(ft, ft) + op.grid.spacing * q
        force = 0.5 * (op.grid.diff_matrix.T @ (beta[:, None] * v)) / op.weight[:, None]
    else:
        raise ValidationError(f"unknown spray form {form!r}; expected one of {SPRAY_FORMS}")
    return op.apply_inverse(force - dp - trace[:, None] * pft)


def spray_rhs(f, spec: OperatorSpec, ft, floor=IMMERSION_FLOOR, form="geometric"):
    """Geodesic acceleration ``f_tt`` at ``(f, f_t)``.

    Quadratic in ``ft``; requires ``p >= 1``. See :func:`spray_from_derivative`
    for ``form``.
    """
    spec.require_order(1.0, "the immersion geodesic equation")
    f = as_loop(f)
    ft = np.asarray(ft, dtype=float)
    if ft.shape != f.shape:
        raise ValidationError("velocity must match the loop shape")
    return spray_from_derivative(diff_theta(f), ft, spec, floor, form=form)


def energy(f, spec, ft, floor=IMMERSION_FLOOR) -> float:
    """``G_f(f_t, f_t)``."""
    f = as_loop(f)
    s = np.linalg.norm(diff_theta(f), axis=1)
    check_speed(s, floor)
    return WeightedOperator(s, spec).inner(ft, ft)


@dataclass(frozen=True)
class GeodesicState:
    f: np.ndarray
    ft: np.ndarray
    t: float


@dataclass
class Trajectory:
    states: list
    energies: np.ndarray
    step: float
    spec: OperatorSpec
    warnings: list = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([st.t for st in self.states])

    @property
    def final(self) -> GeodesicState:
        return self.states[-1]

    def max_energy_drift(self) -> float:
        e0 = self.energies[0]
        if e0 == 0.0:
            return float(np.max(np.abs(self.energies)))
        return float(np.max(np.abs(self.energies - e0)) / abs(e0))


def _rk4_step(f, ft, dt, accel):
    k1f, k1v = ft, accel(f, ft)
    k2f, k2v = ft + 0.5 * dt * k1v, accel(f + 0.5 * dt * k1f, ft + 0.5 * dt * k1v)
    k3f, k3v = ft + 0.5 * dt * k2v, accel(f + 0.5 * dt * k2f, ft + 0.5 * dt * k2v)
    k4f, k4v = ft + dt * k3v, accel(f + dt * k3f, ft + dt * k3v)
    f_new = f + dt / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f)
    ft_new = ft + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return f_new, ft_new


def _step_count(t_end, dt):
    if dt <= 0 or not np.isfinite(dt):
        raise ValidationError(f"time step must be positive, got {dt}")
    if t_end < 0:
        raise ValidationError("t_end must be non-negative")
    steps = int(np.ceil(t_end / dt - 1e-9))
    return steps, (t_end / steps if steps else dt)


def _loop_accel(spec, floor, stale_operator):
    if not stale_operator:
        return lambda f, ft: spray_from_derivative(diff_theta(f), ft, spec, floor)
    cache = {"op": None}

    def accel(f, ft):
        # first stage of each step refreshes the operator, later stages reuse it
        if cache["op"] is None:
            s = np.linalg.norm(diff_theta(f), axis=1)
            check_speed(s, floor)
            cache["op"] = WeightedOperator(s, spec)
        return spray_from_derivative(diff_theta(f), ft, spec, floor, op=cache["op"])

    accel.new_step = lambda: cache.update(op=None)
    return accel


def integrate(f0, h0, spec, t_end=1.0, dt=1e-3, floor=IMMERSION_FLOOR):
    """Endpoint ``(f, f_t)`` of the geodesic without storing the path."""
    spec.require_order(1.0, "the immersion geodesic equation")
    f = as_loop(f0).copy()
    ft = np.asarray(h0, dtype=float).copy()
    steps, dt = _step_count(t_end, dt)
    accel = _loop_accel(spec, floor, False)
    for _ in range(steps):
        f, ft = _rk4_step(f, ft, dt, accel)
    return f, ft


def exp_map(
    f0,
    h0,
    spec: OperatorSpec,
    t_end=1.0,
    dt=1e-3,
    floor=IMMERSION_FLOOR,
    energy_drift_warn=1e-6,
    record_every=1,
    stale_operator=False,
) -> Trajectory:
    """Integrate the geodesic from ``(f0, h0)`` with classical RK4.

    Returns the trajectory (every ``record_every`` steps plus the endpoint)
    with ``G_f(f_t, f_t)`` at each recorded state. Leaving the immersion set
    raises :class:`ImmersionLostError` carrying the partial trajectory.
    ``stale_operator`` reuses the step's first-stage operator in all four
    stages; it is a fast approximation for exploratory runs only.
    """
    spec.require_order(1.0, "the immersion geodesic equation")
    f = as_loop(f0).copy()
    ft = np.asarray(h0, dtype=float).copy()
    if ft.shape != f.shape:
        raise ValidationError("initial velocity must match the loop shape")
    steps, dt = _step_count(t_end, dt)
    accel = _loop_accel(spec, floor, stale_operator)
    traj = Trajectory(states=[GeodesicState(f, ft, 0.0)], energies=None, step=dt, spec=spec)
    energies = [energy(f, spec, ft, floor)]
    for i in range(1, steps + 1):
        if stale_operator:
            accel.new_step()
        try:
            f, ft = _rk4_step(f, ft, dt, accel)
            if i % record_every == 0 or i == steps:
                e = energy(f, spec, ft, floor)
        except ImmersionError as exc:
            traj.energies = np.array(energies)
            t_fail = i * dt
            raise ImmersionLostError(
                f"immersion lost during step ending at t = {t_fail:.6g}: {exc}",
                time=t_fail,
                trajectory=traj,
            ) from exc
        if i % record_every == 0 or i == steps:
            traj.states.append(GeodesicState(f, ft, i * dt))
            energies.append(e)
    traj.energies = np.array(energies)
    drift = traj.max_energy_drift()
    if energy_drift_warn is not None and drift > energy_drift_warn:
        msg = f"relative energy drift {drift:.3e} exceeds {energy_drift_warn:g}"
        traj.warnings.append(msg)
        log.warning(msg)
    return traj


def path_energy(traj: Trajectory, spec: OperatorSpec = None, floor=IMMERSION_FLOOR) -> float:
    """``1/2 int G_f(f_t, f_t) dt`` by the trapezoidal rule over the recorded states."""
    spec = traj.spec if spec is None else spec
    if len(traj.states) < 2:
        return 0.0
    g = np.array([energy(st.f, spec, st.ft, floor) for st in traj.states])
    return 0.5 * float(np.trapezoid(g, traj.times))


def regularity_diagnostic(traj: Trajectory, cutoff: int) -> np.ndarray:
    """Fourier tail energy of ``f(t)`` above ``cutoff`` for every recorded state."""
    return np.array([fourier_tail_energy(st.f, cutoff) for st in traj.states])


def fourier_basis(n, modes) -> np.ndarray:
    """Columns ``1, cos(theta), sin(theta), ..., cos(K theta), sin(K theta)``."""
    th = get_grid(n).theta
    cols = [np.ones(n)]
    for k in range(1, modes + 1):
        cols += [np.cos(k * th), np.sin(k * th)]
    return np.column_stack(cols)


@dataclass
class LogResult:
    velocity: np.ndarray
    residual: float
    iterations: int
    converged: bool
    modes: int


def _weighted_norm(x, w):
    return float(np.sqrt(np.sum(w[:, None] * x * x)))


def shoot(
    f0,
    f1,
    spec: OperatorSpec,
    tol=1e-10,
    dt=0.02,
    radius=0.5,
    modes=(4, 8, 16),
    max_iter=12,
    threads=None,
    floor=IMMERSION_FLOOR,
) -> LogResult:
    """Damped Gauss-Newton shooting for the initial velocity joining ``f0`` to ``f1``.

    The velocity is expanded in the lowest ``2K+1`` Fourier modes per
    component with ``K`` escalating through ``modes``; the Jacobian is built
    by forward differences (one geodesic per column). ``radius`` bounds
    ``|f1 - f0| / |f0 - mean(f0)|`` in the weighted L2 norm of ``f0``.
    Returns the best iterate whether or not it converged.
    """
    spec.require_order(1.0, "the immersion geodesic equation")
    f0 = as_loop(f0)
    f1 = as_loop(f1)
    if f1.shape != f0.shape:
        raise ValidationError("both loops must share grid size and dimension")
    n, d = f0.shape
    s0 = np.linalg.norm(diff_theta(f0), axis=1)
    check_speed(s0, floor)
    check_speed(np.linalg.norm(diff_theta(f1), axis=1), floor)
    w = get_grid(n).spacing * s0
    scale = _weighted_norm(f0 - np.average(f0, axis=0, weights=w), w)
    dist = _weighted_norm(f1 - f0, w)
    if dist > radius * scale:
        raise TrustRegionError(
            f"target at relative distance {dist / scale:.3g} exceeds trust radius {radius:g}",
            best=LogResult(np.zeros_like(f0), dist, 0, False, 0),
        )
    if dist <= tol:
        return LogResult(np.zeros_like(f0), dist, 0, True, 0)

    def residual(h):
        try:
            end, _ = integrate(f0, h, spec, 1.0, dt, floor)
        except ImmersionError:
            return None
        return (np.sqrt(w)[:, None] * (end - f1)).ravel()

    def rnorm(r):
        return np.inf if r is None else float(np.linalg.norm(r))

    best = LogResult(np.zeros_like(f0), dist, 0, False, 0)

    def consider(h, res, its, k):
        nonlocal best
        hn = float(np.linalg.norm(h))
        bn = float(np.linalg.norm(best.velocity))
        if res < best.residual or (res == best.residual and hn < bn):
            best = LogResult(h.copy(), res, its, res <= tol, k)

    coef = None
    iterations = 0
    for k in modes:
        k = min(k, get_grid(n).max_mode)
        basis = fourier_basis(n, k)
        if coef is None:
            coef = np.linalg.lstsq(basis, f1 - f0, rcond=None)[0]
        else:
            coef = np.vstack([coef, np.zeros((basis.shape[1] - coef.shape[0], d))])
        r = residual(basis @ coef)
        for _ in range(max_iter):
            res = rnorm(r)
            consider(basis @ coef, res, iterations, k)
            if res <= tol:
                return best
            flat = coef.ravel()
            delta = 1e-7 * max(1.0, float(np.max(np.abs(flat))))

            def column(i):
                c = flat.copy()
                c[i] += delta
                ri = residual(basis @ c.reshape(coef.shape))
                return None if ri is None else (ri - r) / delta

            if threads and threads > 1:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    cols = list(pool.map(column, range(flat.size)))
            else:
                cols = [column(i) for i in range(flat.size)]
            if any(c is None for c in cols):
                break
            jac = np.column_stack(cols)
            step = np.linalg.lstsq(jac, -r, rcond=None)[0]
            iterations += 1
            alpha = 1.0
            accepted = False
            while alpha >= 1.0 / 64:
                trial = (flat + alpha * step).reshape(coef.shape)
                rt = residual(basis @ trial)
                if rnorm(rt) < res:
                    coef, r, accepted = trial, rt, True
                    break
                alpha *= 0.5
            if not accepted:
                break
        consider(basis @ coef, rnorm(r), iterations, k)
        if best.converged:
            return best
    return best


def log_map(f0, f1, spec: OperatorSpec, tol=1e-10, **kwargs) -> np.ndarray:
    """Initial velocity ``h`` with ``exp_{f0}(h) = f1`` (to ``tol``); see :func:`shoot`."""
    result = shoot(f0, f1, spec, tol=tol, **kwargs)
    if not result.converged:
        raise ConvergenceError(
            f"shooting stalled at residual {result.residual:.3e} (tol {tol:g})", best=result
        )
    return result.velocity
