"""Run configuration: ``key = value`` text with ``#`` comments."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .algebra import GROUPS, Group
from .energy import MAX_K, FlowParams
from .errors import ConfigError
from .lattice import LatticeShape

INTEGRATORS = ("euler", "backtracking")


@dataclass(frozen=True)
class RunConfig:
    n: int = 2
    extents: tuple[int, ...] = (8, 8)
    h: float = 1.0
    group: str = "u1"
    k: int = 1
    lam: float = 0.0
    init: str = "cold"
    seed: int = 0
    integrator: str = "backtracking"
    dt_safety: float = 0.1
    t_max: float = 1.0
    max_steps: int = 0  # 0 means unlimited
    record_every: int = 1
    snapshot_every: int = 0  # 0 disables periodic snapshots
    record_derivatives: bool = False
    blowup_ceiling: float = 1e6
    out_dir: str = "out"
    source: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        try:
            self.lattice
        except ValueError as exc:
            raise ConfigError(str(exc), "extents") from None
        if self.group not in GROUPS:
            raise ConfigError(f"group must be one of {sorted(GROUPS)}, got {self.group!r}", "group")
        if not 0 <= self.k <= MAX_K:
            raise ConfigError(f"k must be in 0..{MAX_K}, got {self.k}", "k")
        if not self.lam >= 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}", "lambda")
        if self.integrator not in INTEGRATORS:
            raise ConfigError(f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}", "integrator")
        if not 0 < self.dt_safety <= 1:
            raise ConfigError(f"dt_safety must be in (0, 1], got {self.dt_safety}", "dt_safety")
        if not self.t_max >= 0:
            raise ConfigError(f"t_max must be >= 0, got {self.t_max}", "t_max")
        for key in ("max_steps", "snapshot_every"):
            if getattr(self, key) < 0:
                raise ConfigError(f"{key} must be >= 0", key)
        if self.record_every < 1:
            raise ConfigError("record_every must be >= 1", "record_every")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer", "seed")
        if not self.blowup_ceiling > 0:
            raise ConfigError("blowup_ceiling must be positive", "blowup_ceiling")
        self.init_mode  # validates

    @property
    def lattice(self) -> LatticeShape:
        return LatticeShape(self.n, self.extents, self.h)

    @property
    def group_obj(self) -> Group:
        return GROUPS[self.group]

    @property
    def params(self) -> FlowParams:
        return FlowParams(self.k, self.lam)

    @property
    def dt(self) -> float:
        """Base step ``dt_safety * h^(2(k+1))``, matching the flow's parabolic order."""
        return self.dt_safety * self.h ** (2 * (self.k + 1))

    @property
    def init_mode(self) -> tuple[str, str | float | None]:
        kind, _, arg = self.init.partition(":")
        if kind == "cold" and not arg:
            return "cold", None
        if kind == "hot":
            try:
                amp = float(arg) if arg else 0.5
            except ValueError:
                raise ConfigError(f"bad hot-start amplitude {arg!r}", "init") from None
            if not amp >= 0:
                raise ConfigError("hot-start amplitude must be >= 0", "init")
            return "hot", amp
        if kind == "file" and arg:
            return "file", arg
        raise ConfigError(f"init must be cold, hot:<amplitude> or file:<path>, got {self.init!r}", "init")

    def with_(self, **kw) -> "RunConfig":
        return replace(self, **kw)

    def to_text(self) -> str:
        lines = []
        for key, attr in _KEYS.items():
            v = getattr(self, attr)
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{key} = {v}")
        return "\n".join(lines) + "\n"


# file key -> attribute
_KEYS = {
    "n": "n", "extents": "extents", "h": "h", "group": "group", "k": "k", "lambda": "lam",
    "init": "init", "seed": "seed", "integrator": "integrator", "dt_safety": "dt_safety",
    "t_max": "t_max", "max_steps": "max_steps", "record_every": "record_every",
    "snapshot_every": "snapshot_every", "record_derivatives": "record_derivatives",
    "blowup_ceiling": "blowup_ceiling", "out_dir": "out_dir",
}
_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key: str, attr: str, raw: str):
    typ = _TYPES[attr]
    try:
        if typ == "int":
            return int(raw, 0)
        if typ == "float":
            return float(raw)
        if typ == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ == "tuple[int, ...]":
            return tuple(int(x) for x in raw.replace(" ", "").strip("[]").split(",") if x)
        return raw
    except ValueError:
        raise ConfigError(f"cannot parse value {raw!r} for key {key!r}", key) from None


def parse_config(text: str) -> RunConfig:
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value'", key or None)
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}", key)
        if _KEYS[key] in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}", key)
        values[_KEYS[key]] = _convert(key, _KEYS[key], raw.strip())
    if "extents" in values and "n" not in values:
        values["n"] = len(values["extents"])
    if "n" in values and "extents" not in values:
        raise ConfigError("key 'extents' is required when 'n' is given", "extents")
    return RunConfig(**values, source=dict(values))


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
