"""Inertia operators P_f = (1 + Laplacian of f*g)^p and their functional calculus.

The discrete Laplacian of a loop with speed ``s`` is ``A = I - D_s D_s`` with
``D_s = diag(1/s) D``. With quadrature weights ``w = (2 pi / n) s`` the matrix
``W A`` is symmetric, so ``A`` is self-adjoint in the weighted inner product
and

    S = W^{1/2} A W^{-1/2} = I + diag(s^{-1/2}) D^T diag(1/s) D diag(s^{-1/2})

is a symmetric positive definite matrix with the same spectrum. Powers of
``A`` are applied through the eigendecomposition of ``S``.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import SobgeoError, ValidationError
from .geometry import IMMERSION_FLOOR, as_loop, check_speed, speed as loop_speed
from .grid import TWO_PI, diff_theta, get_grid

FAMILIES = ("standard", "scale_invariant")


@dataclass(frozen=True)
class OperatorSpec:
    """Order ``p`` and operator family.

    ``standard`` is ``(1 + Lap)^p``; ``scale_invariant`` is
    ``(Vol^-3 + Vol^-1 Lap)^p`` with ``Vol`` the total length of the loop.
    """

    p: float = 1.0
    family: str = "standard"

    def __post_init__(self):
        if not np.isfinite(self.p) or self.p < 0:
            raise ValidationError(f"operator order must be finite and >= 0, got {self.p!r}")
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown operator family {self.family!r}; expected one of {FAMILIES}")

    def require_order(self, minimum, what="this routine"):
        if self.p < minimum:
            raise ValidationError(f"{what} requires p >= {minimum}, got p = {self.p}")


def _symmetric_parts(s):
    """Pieces of ``S`` for the standard family: ``a = s^-1/2``, ``b = 1/s``, ``K``, ``S - I``."""
    d = get_grid(s.shape[0]).diff_matrix
    a = 1.0 / np.sqrt(s)
    b = 1.0 / s
    k = d.T @ (b[:, None] * d)
    s_minus_i = a[:, None] * k * a[None, :]
    return a, b, k, 0.5 * (s_minus_i + s_minus_i.T)


@lru_cache(maxsize=64)
def _decompose(key: bytes, n: int, family: str):
    s = np.frombuffer(key, dtype=float, count=n)
    a, b, k, lap = _symmetric_parts(s)
    vol = TWO_PI / n * float(s.sum())
    if family == "standard":
        sym = lap + np.eye(n)
    else:
        sym = lap / vol + np.eye(n) / vol**3
    try:
        lam, q = np.linalg.eigh(sym)
    except np.linalg.LinAlgError as exc:
        raise SobgeoError(f"eigendecomposition failed: {exc}") from exc
    if lam[0] <= 0.0:
        raise SobgeoError("assembled operator is not positive definite (degenerate weights)")
    parts = dict(a=a, b=b, k=k, lap=lap, vol=vol)
    for arr in (sym, lam, q, *(v for v in parts.values() if isinstance(v, np.ndarray))):
        arr.setflags(write=False)
    return sym, lam, q, parts


class WeightedOperator:
    """Assembled operator for one loop and one :class:`OperatorSpec`.

    Instances are immutable; eigendecompositions are shared through a cache
    keyed on the exact bit pattern of the speed array.
    """

    def __init__(self, speed, spec: OperatorSpec, base_loop=None):
        s = np.ascontiguousarray(speed, dtype=float)
        self.n = s.shape[0]
        self.grid = get_grid(self.n)
        self.spec = spec
        self.base_loop = base_loop
        self.speed = s
        self.weight = self.grid.spacing * s
        self.sqrt_weight = np.sqrt(self.weight)
        self.sym, self.lam, self.q, self._parts = _decompose(s.tobytes(), self.n, spec.family)

    @property
    def eigenvalues(self) -> np.ndarray:
        """Spectrum of ``P = A**p`` in ascending order."""
        return self.lam**self.spec.p

    @property
    def base_eigenvalues(self) -> np.ndarray:
        """Spectrum of the base operator ``A``."""
        return self.lam

    @property
    def eigenvectors(self) -> np.ndarray:
        """Eigenvectors of ``A``, orthonormal in the weighted inner product."""
        return self.q / self.sqrt_weight[:, None]

    @property
    def laplacian(self) -> np.ndarray:
        """Dense base operator ``A`` (``1 + Lap`` or its scale-invariant analogue)."""
        return self.sym * (self.sqrt_weight[None, :] / self.sqrt_weight[:, None])

    @property
    def volume(self) -> float:
        return self._parts["vol"]

    def base_apply(self, h) -> np.ndarray:
        """One application of ``A`` by direct differentiation (no eigenbasis)."""
        h = np.asarray(h, dtype=float)
        inv = 1.0 / self.speed if h.ndim == 1 else 1.0 / self.speed[:, None]
        lap = -inv * diff_theta(inv * diff_theta(h, self.grid), self.grid)
        if self.spec.family == "standard":
            return h + lap
        vol = self.volume
        return h / vol**3 + lap / vol

    def power(self, h, order) -> np.ndarray:
        """Apply ``A**order`` componentwise to a scalar or vector field.

        For ``order >= 0`` the integer part is applied first by repeated
        direct products and only the fractional remainder goes through the
        eigenbasis, so eigenbasis rounding is never amplified by ``lam**k``.
        """
        h = np.asarray(h, dtype=float)
        if h.shape[0] != self.n:
            raise ValidationError(f"field has {h.shape[0]} samples, operator has {self.n}")
        whole = int(np.floor(order)) if order >= 0 else 0
        frac = order - whole
        out = h
        for _ in range(whole):
            out = self.base_apply(out)
        return out if frac == 0.0 else self._spectral_power(out, frac)

    def _spectral_power(self, h, order):
        sw = self.sqrt_weight if h.ndim == 1 else self.sqrt_weight[:, None]
        lam = self.lam**order
        coef = self.q.T @ (sw * h)
        coef = coef * (lam if h.ndim == 1 else lam[:, None])
        return (self.q @ coef) / sw

    def apply(self, h) -> np.ndarray:
        return self.power(h, self.spec.p)

    def apply_inverse(self, h) -> np.ndarray:
        return self.power(h, -self.spec.p)

    def inner(self, h, k) -> float:
        """``G(h, k) = sum_j w_j <P h, k>_j``."""
        ph = self.apply(h)
        k = np.asarray(k, dtype=float)
        w = self.weight if k.ndim == 1 else self.weight[:, None]
        return float(np.sum(w * ph * k))

    def l2_inner(self, h, k) -> float:
        k = np.asarray(k, dtype=float)
        w = self.weight if k.ndim == 1 else self.weight[:, None]
        return float(np.sum(w * np.asarray(h) * k))


def assemble_from_speed(speed, spec: OperatorSpec, floor=IMMERSION_FLOOR) -> WeightedOperator:
    s = np.asarray(speed, dtype=float)
    check_speed(s, floor)
    return WeightedOperator(s, spec)


def assemble(f, spec: OperatorSpec, floor=IMMERSION_FLOOR) -> WeightedOperator:
    """Assemble ``P_f`` for a loop ``f`` of shape ``(n, d)``."""
    f = as_loop(f)
    return WeightedOperator(loop_speed(f, floor), spec, base_loop=f)


def apply(op: WeightedOperator, h) -> np.ndarray:
    return op.apply(h)


def apply_inverse(op: WeightedOperator, h) -> np.ndarray:
    return op.apply_inverse(h)


def metric_inner(f, spec: OperatorSpec, h, k, floor=IMMERSION_FLOOR) -> float:
    """Sobolev inner product ``G_f(h, k) = int <P_f h, k> ds``."""
    f = as_loop(f)
    h = np.asarray(h, dtype=float)
    k = np.asarray(k, dtype=float)
    if h.shape != f.shape or k.shape != f.shape:
        raise ValidationError("tangent fields must match the loop shape")
    return assemble(f, spec, floor).inner(h, k)


def circle_multiplier(n, radius=1.0, spec=OperatorSpec()) -> np.ndarray:
    """Analytic spectrum of the operator on a constant-speed circle, FFT mode order."""
    nu = get_grid(n).wavenumbers
    if spec.family == "standard":
        base = 1.0 + (nu / radius) ** 2
    else:
        vol = TWO_PI * radius
        base = vol**-3 + (nu / radius) ** 2 / vol
    return base**spec.p
