"""Foot-point derivatives of P_f and the normal part of its adjoint.

P_f depends on the loop only through the speed ``s = |f_theta|``; a variation
``m`` of the loop moves the speed by ``ds = <D m, v>``. Three routes to the
normal adjoint ``Adj(dP)^perp(h, k)``, defined by

    int <(d_{m^perp} P) h, k> ds  =  int <m, Adj^perp(h, k)> ds   for all m,

are provided:

* ``fd_dual``: central differences of assembled operators probed on every
  nodal basis field (ground truth, O(n d) assemblies).
* ``spectral``: the exact derivative of the discrete operator via the
  Daleckii-Krein formula for ``d(S^p)`` (used by the geodesic solvers).
* ``closed_form``: the integer-order formula written with arclength
  derivatives and the curvature vector.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .geometry import IMMERSION_FLOOR, _normal_part, as_loop, check_speed
from .grid import diff_theta
from .operator import OperatorSpec, WeightedOperator, assemble, assemble_from_speed

METHODS = ("fd_dual", "spectral", "closed_form")


@dataclass(frozen=True)
class AdjointResult:
    value: np.ndarray
    method: str


def frame(f_theta):
    """Speed and unit tangent from ``f_theta`` of shape ``(n, d)``."""
    s = np.linalg.norm(f_theta, axis=1)
    return s, f_theta / s[:, None]


def speed_variation(f_theta, m):
    """First variation of ``|f_theta|`` in direction ``m``: ``<D m, v>``."""
    _, v = frame(f_theta)
    return np.einsum("ij,ij->i", diff_theta(m), v)


def divided_differences(lam, order):
    """Matrix of ``(lam_i**p - lam_j**p) / (lam_i - lam_j)`` with diagonal ``p lam**(p-1)``."""
    log_lam = np.log(lam)
    dl = log_lam[:, None] - log_lam[None, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.expm1(order * dl) / np.expm1(dl)
    ratio[dl == 0.0] = order
    gamma = lam[None, :] ** (order - 1.0) * ratio
    return 0.5 * (gamma + gamma.T)


class _Calculus:
    """Derivative machinery bound to one assembled operator."""

    def __init__(self, op: WeightedOperator):
        self.op = op
        parts = op._parts
        self.a, self.b, self.k = parts["a"], parts["b"], parts["k"]
        self.lap = parts["lap"]
        self.d = op.grid.diff_matrix
        self.gamma = divided_differences(op.lam, op.spec.p)
        q = op.q
        self.kaq = self.k @ (self.a[:, None] * q)
        self.daq = self.d @ (self.a[:, None] * q)

    def rotated_sym_variation(self, dsigma):
        """``Q^T dS Q`` for a speed perturbation ``dsigma``."""
        op, q = self.op, self.op.q
        r = dsigma / op.speed
        da = -0.5 * self.a * r
        db = -self.b * r
        t = (da[:, None] * q).T @ self.kaq
        out = t + t.T + self.daq.T @ (db[:, None] * self.daq)
        if op.spec.family == "scale_invariant":
            vol = op.volume
            dvol = op.grid.spacing * float(np.sum(dsigma))
            # S_si = vol^-3 I + vol^-1 (S - I)
            qlq = q.T @ self.lap @ q
            out = out / vol - 3.0 * dvol / vol**4 * np.eye(op.n) - dvol / vol**2 * qlq
        return out

    def derivative(self, dsigma, h):
        """``(dP) h`` for the speed perturbation ``dsigma``."""
        op = self.op
        h = np.asarray(h, dtype=float)
        vec = h.ndim == 2
        r = dsigma / op.speed
        rr = r[:, None] if vec else r
        sw = op.sqrt_weight[:, None] if vec else op.sqrt_weight
        ph = op.apply(h)
        out = -0.5 * rr * ph + 0.5 * op.apply(rr * h)
        rot = self.gamma * self.rotated_sym_variation(dsigma)
        out = out + (op.q @ (rot @ (op.q.T @ (sw * h)))) / sw
        return out

    def speed_gradient(self, h, k):
        """Gradient in the speed of ``sum_j w_j <P h, k>_j`` at fixed weights."""
        op = self.op
        h = np.asarray(h, dtype=float).reshape(op.n, -1)
        k = np.asarray(k, dtype=float).reshape(op.n, -1)
        c = op.grid.spacing
        s = op.speed
        ph = op.apply(h)
        pk = op.apply(k)
        beta = 0.5 * c * (np.sum(pk * h, axis=1) - np.sum(ph * k, axis=1))
        sw = op.sqrt_weight[:, None]
        qu = op.q.T @ (sw * h)
        qz = op.q.T @ (sw * k)
        x = 0.5 * (qz @ qu.T + qu @ qz.T)
        y = op.q @ (self.gamma * x) @ op.q.T
        a = self.a
        diag_kay = np.einsum("jk,k,kj->j", self.k, a, y)
        m1 = self.d @ (a[:, None] * y)
        diag_dyd = np.einsum("jk,k,jk->j", m1, a, self.d)
        std = 2.0 * (-0.5 * a / s) * diag_kay + (-1.0 / s**2) * diag_dyd
        if op.spec.family == "scale_invariant":
            vol = op.volume
            std = std / vol - 3.0 * c / vol**4 * np.trace(y) - c / vol**2 * np.sum(self.lap * y)
        return beta + std

    def adjoint_full(self, v, h, k):
        """Weighted dual of ``m -> sum_j w_j <(d_m P) h, k>_j`` (all directions)."""
        beta = self.speed_gradient(h, k)
        return (self.d.T @ (beta[:, None] * v)) / self.op.weight[:, None]


def calculus(op: WeightedOperator) -> _Calculus:
    return _Calculus(op)


def _default_eps(f, m):
    mn = float(np.max(np.abs(m)))
    return 1e-4 * float(np.max(np.abs(f))) / mn if mn > 0 else 1e-4


def derivative_P(f, spec: OperatorSpec, m, h, eps=None, richardson=False, floor=IMMERSION_FLOOR):
    """Central-difference directional derivative of ``P_f h`` in the foot point.

    ``(P_{f + eps m} h - P_{f - eps m} h) / (2 eps)``; with ``richardson``
    the ``eps`` and ``eps/2`` quotients are combined to fourth order.
    """
    f = as_loop(f)
    m = np.asarray(m, dtype=float)
    h = np.asarray(h, dtype=float)
    if m.shape != f.shape or h.shape != f.shape:
        raise ValidationError("m and h must match the loop shape")
    if not np.any(m):
        return np.zeros_like(h)
    if eps is None:
        eps = _default_eps(f, m)

    def quotient(e):
        plus = assemble(f + e * m, spec, floor).apply(h)
        minus = assemble(f - e * m, spec, floor).apply(h)
        return (plus - minus) / (2.0 * e)

    if not richardson:
        return quotient(eps)
    return (4.0 * quotient(eps / 2.0) - quotient(eps)) / 3.0


def derivative_P_exact(f, spec: OperatorSpec, m, h, floor=IMMERSION_FLOOR):
    """Exact derivative of the discrete operator (Daleckii-Krein)."""
    f = as_loop(f)
    op = assemble(f, spec, floor)
    return calculus(op).derivative(speed_variation(diff_theta(f), m), h)


def adjoint_pairing(f, spec, m, h, k, eps=None, floor=IMMERSION_FLOOR):
    """Left side of the defining relation: ``int <(d_{m^perp} P) h, k> ds`` by differences."""
    f = as_loop(f)
    m_perp = _normal_part(np.asarray(m, dtype=float), frame(diff_theta(f))[1])
    dph = derivative_P(f, spec, m_perp, h, eps=eps, floor=floor)
    op = assemble(f, spec, floor)
    return op.l2_inner(dph, k)


def adjoint_normal_fd(
    f, spec: OperatorSpec, h, k, eps=None, threads=None, richardson=False, floor=IMMERSION_FLOOR
):
    """Normal adjoint by finite-difference dualization over the nodal basis.

    Central differences are O(eps^2); ``richardson`` cancels that term.
    """
    f = as_loop(f)
    h = np.asarray(h, dtype=float)
    k = np.asarray(k, dtype=float)
    n, d = f.shape
    op = assemble(f, spec, floor)
    _, v = frame(diff_theta(f))
    if eps is None:
        eps = 1e-4 * float(np.max(np.abs(f)))
    if not np.any(h) or not np.any(k):
        return AdjointResult(np.zeros_like(f), "fd_dual")

    def probe(idx):
        j, a = divmod(idx, d)
        m = np.zeros_like(f)
        m[j, a] = 1.0
        m = _normal_part(m, v)

        def quotient(e):
            plus = assemble_from_speed(np.linalg.norm(diff_theta(f + e * m), axis=1), spec, floor)
            minus = assemble_from_speed(np.linalg.norm(diff_theta(f - e * m), axis=1), spec, floor)
            return (plus.apply(h) - minus.apply(h)) / (2.0 * e)

        dph = quotient(eps)
        if richardson:
            dph = (4.0 * quotient(eps / 2.0) - dph) / 3.0
        return op.l2_inner(dph, k)

    idx = range(n * d)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            vals = list(pool.map(probe, idx))
    else:
        vals = [probe(i) for i in idx]
    dual = np.array(vals).reshape(n, d) / op.weight[:, None]
    return AdjointResult(_normal_part(dual, v), "fd_dual")


def adjoint_normal_spectral(f, spec: OperatorSpec, h, k, floor=IMMERSION_FLOOR):
    """Normal adjoint of the exact discrete derivative of P."""
    f = as_loop(f)
    op = assemble(f, spec, floor)
    _, v = frame(diff_theta(f))
    full = calculus(op).adjoint_full(v, h, k)
    return AdjointResult(_normal_part(full, v), "spectral")


def adjoint_normal_closed_form(f, spec: OperatorSpec, h, k, floor=IMMERSION_FLOOR):
    """Integer-order closed form for flat ambient space and curves.

    With ``A = 1 + Lap``, ``a_i = A^(p-1-i) h`` and ``b_i = A^i k``::

        Adj^perp(h, k) = sum_{i<p} (2 <d_s a_i, d_s b_i> - d_s <d_s a_i, b_i>) H
    """
    p = spec.p
    if spec.family != "standard" or p != int(p) or p < 1:
        raise ValidationError("closed-form adjoint needs the standard family and integer p >= 1")
    f = as_loop(f)
    h = np.asarray(h, dtype=float)
    k = np.asarray(k, dtype=float)
    op = assemble(f, spec, floor)
    s, v = frame(diff_theta(f))
    curv = _normal_part(diff_theta(v) / s[:, None], v)

    def ds(x):
        return diff_theta(x) / (s[:, None] if x.ndim == 2 else s)

    total = np.zeros(f.shape[0])
    for i in range(int(p)):
        a_i = op.power(h, p - 1 - i)
        b_i = op.power(k, i)
        da = ds(a_i)
        total += 2.0 * np.sum(da * ds(b_i), axis=1) - ds(np.sum(da * b_i, axis=1))
    return AdjointResult(total[:, None] * curv, "closed_form")


def adjoint_normal(f, spec, h, k, method="spectral", **kwargs):
    if method == "spectral":
        return adjoint_normal_spectral(f, spec, h, k, **kwargs)
    if method == "fd_dual":
        return adjoint_normal_fd(f, spec, h, k, **kwargs)
    if method == "closed_form":
        return adjoint_normal_closed_form(f, spec, h, k, **kwargs)
    raise ValidationError(f"unknown adjoint method {method!r}; expected one of {METHODS}")
