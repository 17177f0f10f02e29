"""Run configuration: YAML in, validated frozen dataclasses out.

Grammar (YAML mapping; unknown keys are rejected)::

    protocol: storage        # verify-algebra | storage | split | entangle
                             # | spectrum | validate-bosonization
    family: mlevel           # mlevel | ensemble
    m: 4                     # mlevel only
    k: 3                     # ensemble only
    g: [0.1, 0.1]            # one per probe (m-2) or per ensemble (k); a scalar is broadcast
    N: 100                   # scalar; ensembles also accept one value per ensemble
    input:
      kind: coherent         # coherent | cat | single-photon
      alpha0: 2.0
      beta0: -2.0            # cat only (default -alpha0)
      sign: -1               # cat only
    schedule:
      sweep_T: null          # default 200 / min(g sqrt(N))
      omega_max: null        # default 1e7 max(g sqrt(N))
      phi_e: [0.7853981634]  # release angles (m-3) or ensemble storage angles (k-1)
      omega_shape: null      # ensemble storage ratios (alternative to phi_e)
      omega: [3.0, 4.0, 0.0] # spectrum only: fixed Rabi frequencies
    numerics:
      n_cap: 12
      dt: null
      tail_tol: 1.0e-10
      seed: 0
      record_every: null
      draws: 50              # verify-algebra random parameter draws
      max_quanta: 5          # spectrum
    bosonization:
      atoms: [8, 16, 32]
      excitations: [0, 1, 2, 3]
    output:
      dir: out

Parse errors carry line and column; semantic errors name the field.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any

import yaml

from .dicke import MAX_ATOMS

__all__ = [
    "ConfigError",
    "RunConfig",
    "InputSpec",
    "ScheduleSpec",
    "Numerics",
    "BosonizationSpec",
    "PROTOCOLS",
    "parse_config",
    "emit_config",
    "load_config",
    "validate",
]

PROTOCOLS = ("verify-algebra", "storage", "split", "entangle", "spectrum", "validate-bosonization")


class ConfigError(ValueError):
    """A config problem; ``field`` names the offending key (dotted path)."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None, column: int | None = None):
        self.field = field
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}, column {column}: "
        prefix = f"{field}: " if field else ""
        super().__init__(f"{where}{prefix}{message}")


@dataclass(frozen=True)
class InputSpec:
    kind: str = "coherent"
    alpha0: float = 1.0
    beta0: float | None = None
    sign: int = 1


@dataclass(frozen=True)
class ScheduleSpec:
    sweep_T: float | None = None
    omega_max: float | None = None
    phi_e: tuple[float, ...] | None = None
    omega_shape: tuple[float, ...] | None = None
    omega: tuple[float, ...] | None = None


@dataclass(frozen=True)
class Numerics:
    n_cap: int = 12
    dt: float | None = None
    tail_tol: float = 1e-10
    seed: int = 0
    record_every: int | None = None
    draws: int = 50
    max_quanta: int = 5


@dataclass(frozen=True)
class BosonizationSpec:
    atoms: tuple[int, ...] = (8, 16, 32)
    excitations: tuple[int, ...] = (0, 1, 2, 3)


@dataclass(frozen=True)
class RunConfig:
    protocol: str
    family: str = "mlevel"
    m: int | None = None
    k: int | None = None
    g: tuple[float, ...] = ()
    N: tuple[float, ...] = ()
    input: InputSpec = field(default_factory=InputSpec)
    schedule: ScheduleSpec = field(default_factory=ScheduleSpec)
    numerics: Numerics = field(default_factory=Numerics)
    bosonization: BosonizationSpec = field(default_factory=BosonizationSpec)
    output_dir: str = "out"

    @property
    def n_channels(self) -> int:
        return self.m - 2 if self.family == "mlevel" else self.k

    def build_system(self):
        from .models import EnsembleChain, MLevelSystem

        if self.family == "mlevel":
            return MLevelSystem(self.m, self.g, self.N[0])
        return EnsembleChain(self.k, self.g, self.N, (0.0,) * self.k)

    def with_seed(self, seed: int) -> "RunConfig":
        return validate(replace(self, numerics=replace(self.numerics, seed=int(seed))))


# ---------------------------------------------------------------------------
# parsing helpers


_TOP = {"protocol", "family", "m", "k", "g", "N", "input", "schedule", "numerics", "bosonization", "output"}
_SECTIONS = {
    "input": {"kind", "alpha0", "beta0", "sign"},
    "schedule": {"sweep_T", "omega_max", "phi_e", "omega_shape", "omega"},
    "numerics": {"n_cap", "dt", "tail_tol", "seed", "record_every", "draws", "max_quanta"},
    "bosonization": {"atoms", "excitations"},
    "output": {"dir"},
}


def _real(value, name, *, positive=False, nonneg=False, optional=False):
    if value is None:
        if optional:
            return None
        raise ConfigError("is required", name)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", name)
    x = float(value)
    if not math.isfinite(x):
        raise ConfigError("must be finite", name)
    if positive and not x > 0:
        raise ConfigError("must be > 0", name)
    if nonneg and x < 0:
        raise ConfigError("must be >= 0", name)
    return x


def _integer(value, name, *, minimum=None, optional=False):
    if value is None:
        if optional:
            return None
        raise ConfigError("is required", name)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", name)
    if minimum is not None and value < minimum:
        raise ConfigError(f"must be >= {minimum}", name)
    return int(value)


def _real_list(value, name, length=None, **kw):
    if value is None:
        return None
    if not isinstance(value, (list, tuple)):
        value = [value] if length is None else [value] * length
    out = tuple(_real(v, f"{name}[{i}]", **kw) for i, v in enumerate(value))
    if length is not None and len(out) != length:
        raise ConfigError(f"expected {length} values, got {len(out)}", name)
    return out


def _section(data, name):
    sec = data.get(name, {})
    if sec is None:
        return {}
    if not isinstance(sec, dict):
        raise ConfigError("must be a mapping", name)
    unknown = set(sec) - _SECTIONS[name]
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)}", name)
    return sec


def parse_config(text: str) -> RunConfig:
    """Parse and validate YAML text.  Raises :class:`ConfigError`."""
    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        raise ConfigError(str(exc.problem), None, mark.line + 1, mark.column + 1) from None
    except yaml.YAMLError as exc:  # pragma: no cover - unmarked errors are rare
        raise ConfigError(str(exc)) from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a YAML mapping")
    return from_mapping(data)


def from_mapping(data: dict[str, Any]) -> RunConfig:
    unknown = set(data) - _TOP
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)}", "config")
    protocol = data.get("protocol")
    if protocol not in PROTOCOLS:
        raise ConfigError(f"must be one of {', '.join(PROTOCOLS)}", "protocol")
    family = data.get("family", "mlevel")
    if family not in ("mlevel", "ensemble"):
        raise ConfigError("must be 'mlevel' or 'ensemble'", "family")

    m = k = None
    if family == "mlevel":
        if "k" in data:
            raise ConfigError("only valid for family 'ensemble'", "k")
        m = _integer(data.get("m", 3 if protocol != "spectrum" else 5), "m", minimum=3)
        n = m - 2
    else:
        if "m" in data:
            raise ConfigError("only valid for family 'mlevel'", "m")
        k = _integer(data.get("k", 2), "k", minimum=1)
        n = k
    g = _real_list(data.get("g", 1.0), "g", None, positive=True)
    if len(g) == 1 and n > 1 and not isinstance(data.get("g", 1.0), (list, tuple)):
        g = g * n
    if len(g) != n:
        raise ConfigError(f"expected {n} values, got {len(g)}", "g")
    N = _real_list(data.get("N", 100), "N", None, positive=True)
    if family == "mlevel" and len(N) != 1:
        raise ConfigError("must be a single atom number for family 'mlevel'", "N")
    if family == "ensemble":
        if len(N) == 1:
            N = N * k
        if len(N) != k:
            raise ConfigError(f"expected {k} values, got {len(N)}", "N")
    if any(x < 1 for x in N):
        raise ConfigError("atom numbers must be >= 1", "N")

    sec = _section(data, "input")
    kind = sec.get("kind", "coherent")
    if kind not in ("coherent", "cat", "single-photon"):
        raise ConfigError("must be coherent, cat or single-photon", "input.kind")
    alpha0 = _real(sec.get("alpha0", 1.0), "input.alpha0")
    beta0 = _real(sec.get("beta0"), "input.beta0", optional=True)
    sign = _integer(sec.get("sign", 1), "input.sign")
    if sign not in (1, -1):
        raise ConfigError("must be +1 or -1", "input.sign")
    inp = InputSpec(kind, alpha0, beta0, sign)

    sec = _section(data, "schedule")
    sched = ScheduleSpec(
        sweep_T=_real(sec.get("sweep_T"), "schedule.sweep_T", positive=True, optional=True),
        omega_max=_real(sec.get("omega_max"), "schedule.omega_max", positive=True, optional=True),
        phi_e=_real_list(sec.get("phi_e"), "schedule.phi_e", nonneg=True),
        omega_shape=_real_list(sec.get("omega_shape"), "schedule.omega_shape", positive=True),
        omega=_real_list(sec.get("omega"), "schedule.omega", nonneg=True),
    )

    sec = _section(data, "numerics")
    num = Numerics(
        n_cap=_integer(sec.get("n_cap", 12), "numerics.n_cap", minimum=1),
        dt=_real(sec.get("dt"), "numerics.dt", positive=True, optional=True),
        tail_tol=_real(sec.get("tail_tol", 1e-10), "numerics.tail_tol", positive=True),
        seed=_integer(sec.get("seed", 0), "numerics.seed", minimum=0),
        record_every=_integer(sec.get("record_every"), "numerics.record_every", minimum=1, optional=True),
        draws=_integer(sec.get("draws", 50), "numerics.draws", minimum=1),
        max_quanta=_integer(sec.get("max_quanta", 5), "numerics.max_quanta", minimum=0),
    )

    sec = _section(data, "bosonization")
    atoms = sec.get("atoms", [8, 16, 32])
    excitations = sec.get("excitations", [0, 1, 2, 3])
    for name, vals in (("bosonization.atoms", atoms), ("bosonization.excitations", excitations)):
        if not isinstance(vals, (list, tuple)) or not vals:
            raise ConfigError("must be a nonempty list of integers", name)
    bos = BosonizationSpec(
        tuple(_integer(v, f"bosonization.atoms[{i}]", minimum=1) for i, v in enumerate(atoms)),
        tuple(_integer(v, f"bosonization.excitations[{i}]", minimum=0) for i, v in enumerate(excitations)),
    )

    sec = _section(data, "output")
    out_dir = sec.get("dir", "out")
    if not isinstance(out_dir, str) or not out_dir:
        raise ConfigError("must be a nonempty string", "output.dir")

    cfg = RunConfig(protocol, family, m, k, g, N, inp, sched, num, bos, out_dir)
    return validate(cfg)


def validate(cfg: RunConfig) -> RunConfig:
    """Protocol-specific preconditions.  Returns ``cfg`` unchanged."""
    p, fam, n = cfg.protocol, cfg.family, cfg.n_channels
    num, sch, inp = cfg.numerics, cfg.schedule, cfg.input
    if not num.tail_tol < 1:
        raise ConfigError("must be < 1", "numerics.tail_tol")
    if inp.kind == "cat":
        beta0 = -inp.alpha0 if inp.beta0 is None else inp.beta0
        if beta0 == inp.alpha0 and inp.sign == -1:
            raise ConfigError("cat with beta0 == alpha0 and sign -1 vanishes", "input.beta0")
        if inp.alpha0 == 0 and beta0 == 0:
            raise ConfigError("cat needs a nonzero amplitude", "input.alpha0")
    if sch.phi_e is not None:
        want = n - 1
        if len(sch.phi_e) != want:
            raise ConfigError(f"expected {want} angles", "schedule.phi_e")
        if any(x > math.pi / 2 for x in sch.phi_e):
            raise ConfigError("angles must lie in [0, pi/2]", "schedule.phi_e")
    if sch.omega_shape is not None:
        if fam != "ensemble" or p not in ("storage", "entangle"):
            raise ConfigError("only used by ensemble storage", "schedule.omega_shape")
        if len(sch.omega_shape) != n:
            raise ConfigError(f"expected {n} values", "schedule.omega_shape")
        if sch.phi_e is not None:
            raise ConfigError("give phi_e or omega_shape, not both", "schedule.omega_shape")

    if p == "split":
        if fam != "mlevel":
            raise ConfigError("split-release needs family 'mlevel'", "family")
    if p == "storage" and fam == "mlevel" and sch.phi_e is not None:
        raise ConfigError("m-level storage takes no angles (they apply to split)", "schedule.phi_e")
    if p in ("storage", "split") and inp.kind == "single-photon" and num.n_cap < 1:
        raise ConfigError("must be >= 1 for a photon", "numerics.n_cap")
    if p == "entangle":
        if fam == "mlevel" and cfg.m not in (4, 5):
            raise ConfigError("entangle needs m = 4 or 5", "m")
        if fam == "ensemble" and cfg.k not in (2, 3):
            raise ConfigError("entangle needs k = 2 or 3", "k")
        if inp.kind == "coherent":
            raise ConfigError("entangle needs a cat or single-photon input", "input.kind")
        if inp.kind == "single-photon" and not (fam == "mlevel" and cfg.m == 4):
            raise ConfigError("single-photon entanglement runs on m = 4", "input.kind")
    if p == "spectrum":
        if fam != "mlevel" or cfg.m != 5:
            raise ConfigError("spectrum needs family 'mlevel' with m = 5", "m")
        if len(set(cfg.g)) != 1:
            raise ConfigError("spectrum needs equal couplings", "g")
        if sch.omega is None or len(sch.omega) != 3:
            raise ConfigError("spectrum needs three Rabi frequencies", "schedule.omega")
        if num.n_cap < num.max_quanta + 1:
            raise ConfigError(f"must be >= max_quanta + 1 = {num.max_quanta + 1}", "numerics.n_cap")
    if sch.omega is not None and p != "spectrum":
        raise ConfigError("only used by spectrum", "schedule.omega")
    if p == "validate-bosonization":
        bos = cfg.bosonization
        for i, a in enumerate(bos.atoms):
            if a > MAX_ATOMS:
                raise ConfigError(f"must be <= {MAX_ATOMS}", f"bosonization.atoms[{i}]")
        for i, e in enumerate(bos.excitations):
            if e > min(bos.atoms):
                raise ConfigError("exceeds the smallest atom number", f"bosonization.excitations[{i}]")
    return cfg


# ---------------------------------------------------------------------------
# emission


def to_mapping(cfg: RunConfig) -> dict[str, Any]:
    def clean(v):
        if isinstance(v, tuple):
            return [clean(x) for x in v]
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        return v

    out: dict[str, Any] = {"protocol": cfg.protocol, "family": cfg.family}
    if cfg.family == "mlevel":
        out["m"] = cfg.m
    else:
        out["k"] = cfg.k
    out["g"] = list(cfg.g)
    out["N"] = cfg.N[0] if cfg.family == "mlevel" else list(cfg.N)
    out["input"] = clean(asdict(cfg.input))
    out["schedule"] = clean(asdict(cfg.schedule))
    out["numerics"] = clean(asdict(cfg.numerics))
    out["bosonization"] = clean(asdict(cfg.bosonization))
    out["output"] = {"dir": cfg.output_dir}
    return out


def emit_config(cfg: RunConfig) -> str:
    """YAML text with every default filled in; parses back to an equal config."""
    return yaml.safe_dump(to_mapping(cfg), sort_keys=False, default_flow_style=False)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
