"""Run configuration: JSON file plus overrides, validated before any work starts."""

import json
from dataclasses import asdict, dataclass, fields, replace

from .errors import ValidationError
from .operator import FAMILIES, OperatorSpec

# minimum order per solver; the circle-diffeomorphism path tolerates p >= 1/2
MIN_ORDER = {"loop": 1.0, "diffeo": 0.5}


@dataclass(frozen=True)
class RunConfig:
    n: int = 65
    d: int = 2
    p: float = 1.0
    family: str = "standard"
    dt: float = 1e-2
    t_end: float = 1.0
    immersion_floor: float = 1e-8
    fd_eps: float = 1e-4
    shooting_tol: float = 1e-8
    energy_drift_warn: float = 1e-6
    seed: int = 0
    threads: int = 1
    log_dt: float = 0.02
    trust_radius: float = 0.5
    record_every: int = 1
    tail_cutoff: int = 0
    u_bound: float = 1e3
    spectral_filter: bool = False

    @property
    def spec(self) -> OperatorSpec:
        return OperatorSpec(self.p, self.family)

    @property
    def cutoff(self) -> int:
        """Fourier tail cutoff; ``0`` means ``n // 3``."""
        return self.tail_cutoff or self.n // 3

    def validate(self, solver="loop") -> "RunConfig":
        if not isinstance(self.n, int) or isinstance(self.n, bool) or self.n < 9 or self.n % 2 == 0:
            raise ValidationError(f"n must be an odd integer >= 9, got {self.n!r}")
        if self.family not in FAMILIES:
            raise ValidationError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if solver == "diffeo":
            if self.family != "standard":
                raise ValidationError("the circle-diffeomorphism solvers use the standard family")
        elif self.d < 2:
            raise ValidationError(f"ambient dimension must be >= 2 for loops, got {self.d}")
        minimum = MIN_ORDER[solver]
        if not self.p >= minimum:
            raise ValidationError(f"p must be >= {minimum} for this command, got {self.p}")
        for name in ("dt", "log_dt", "trust_radius", "u_bound"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive, got {getattr(self, name)}")
        if not self.t_end >= 0:
            raise ValidationError(f"t_end must be non-negative, got {self.t_end}")
        if not 0 < self.immersion_floor:
            raise ValidationError("immersion_floor must be positive")
        if not 0 < self.fd_eps < 1 or not self.shooting_tol > 0 or not self.energy_drift_warn > 0:
            raise ValidationError("tolerances must be positive (fd_eps < 1)")
        if self.threads < 1 or self.record_every < 1:
            raise ValidationError("threads and record_every must be >= 1")
        if not 0 <= self.tail_cutoff < self.n / 2:
            raise ValidationError(f"tail_cutoff must lie in [0, n/2), got {self.tail_cutoff}")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


_TYPES = {f.name: getattr(f.type, "__name__", f.type) for f in fields(RunConfig)}


def _coerce(name, value):
    kind = _TYPES[name]
    if kind == "bool":
        if not isinstance(value, bool):
            raise ValidationError(f"{name} must be true or false")
        return value
    if kind == "int":
        if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
            raise ValidationError(f"{name} must be an integer, got {value!r}")
        try:
            return int(value)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"{name} must be an integer, got {value!r}") from exc
    if kind == "float":
        try:
            return float(value)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"{name} must be a number, got {value!r}") from exc
    if not isinstance(value, str):
        raise ValidationError(f"{name} must be a string")
    return value


def from_mapping(data: dict, base: RunConfig = None) -> RunConfig:
    if not isinstance(data, dict):
        raise ValidationError("config must be a JSON object")
    unknown = sorted(set(data) - set(_TYPES))
    if unknown:
        raise ValidationError(f"unknown config keys: {', '.join(unknown)}")
    values = {k: _coerce(k, v) for k, v in data.items()}
    return replace(base or RunConfig(), **values)


def load(path=None, overrides=None) -> RunConfig:
    """Config from an optional JSON file, then non-None ``overrides`` on top."""
    cfg = RunConfig()
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"config {path} is not valid JSON: {exc}") from exc
        cfg = from_mapping(data, cfg)
    if overrides:
        cfg = from_mapping({k: v for k, v in overrides.items() if v is not None}, cfg)
    return cfg
