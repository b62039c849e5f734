"""Run configuration: a flat ``key = value`` text format with ``#`` comments."""
from dataclasses import asdict, dataclass, field, fields, replace
import os

from .errors import ConfigError

MODELS = ("quadratic", "hybrid", "bgk")
EXPERIMENTS = ("bkw", "bigaussian", "discontinuous", "custom")
CACHE_ENV = "HERMITE_BOLTZMANN_CACHE"


def default_cache_dir():
    return os.environ.get(CACHE_ENV, "cache")


@dataclass(frozen=True)
class RunConfig:
    eta: float = 5.0
    M: int = 10
    M0: int = 5
    model: str = "hybrid"
    experiment: str = "bkw"
    dt: float = 0.01
    t_end: float = 1.0
    coeff_file: str = ""
    quad_abs_tol: float = 1e-12
    quad_rel_tol: float = 1e-10
    quad_max_subdivisions: int = 200
    drop_floor: float = 1e-14
    memory_cap_gib: float = 16.0
    cache_dir: str = field(default_factory=default_cache_dir)
    output: str = "trajectory.csv"
    marginal_g: str = ""
    marginal_h: str = ""
    marginal_every: int = 10
    marginal_vmax: float = 5.0
    marginal_points: int = 101

    def validate(self):
        if not self.eta > 3:
            raise ConfigError(f"eta must exceed 3, got {self.eta}")
        if self.M0 < 2:
            raise ConfigError(f"M0 must be at least 2, got {self.M0}")
        if self.M0 > self.M:
            raise ConfigError(f"M0={self.M0} must not exceed M={self.M}")
        if not self.dt > 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.t_end < 0:
            raise ConfigError(f"t_end must be non-negative, got {self.t_end}")
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {', '.join(MODELS)}, got {self.model!r}")
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {', '.join(EXPERIMENTS)}, "
                              f"got {self.experiment!r}")
        if self.marginal_every < 1:
            raise ConfigError("marginal_every must be at least 1")
        return self

    def validate_run(self):
        """Checks that only matter when an experiment is actually run."""
        if self.experiment == "custom" and not self.coeff_file:
            raise ConfigError("experiment 'custom' needs coeff_file")
        if self.experiment == "bkw" and self.eta != 5.0:
            raise ConfigError("the bkw experiment requires eta = 5")
        return self

    def updated(self, **overrides):
        clean = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **_coerce_all(clean)).validate()

    def to_text(self):
        return "".join(f"{k} = {_format(v)}\n" for k, v in asdict(self).items())

    @property
    def memory_cap(self):
        return int(self.memory_cap_gib * 2 ** 30)


_TYPES = {f.name: f.type if isinstance(f.type, str) else f.type.__name__
          for f in fields(RunConfig)}


def _format(v):
    return repr(v) if isinstance(v, float) else str(v)


def _coerce(key, raw):
    if key not in _TYPES:
        raise ConfigError(f"unknown configuration key {key!r}")
    kind = _TYPES[key]
    if isinstance(raw, str) and kind != "str":
        raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return str(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def _coerce_all(values):
    return {k: _coerce(k, v) for k, v in values.items()}


def parse_config(text, base=None):
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key] = value
    return replace(base or RunConfig(), **_coerce_all(values)).validate()


def load_config(path, base=None):
    try:
        with open(path) as fh:
            return parse_config(fh.read(), base)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
