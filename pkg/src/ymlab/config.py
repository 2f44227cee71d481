"""Strict line-oriented experiment configuration.

Format: `[section]` headers and `key = value` lines; `#` starts a comment.
Unknown sections or keys are errors in strict mode (silent typos in N or
sigma would invalidate an experiment), warnings otherwise.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

KINDS = ("evolve", "heatflow", "tension", "acl-sweep", "mkg", "invariants")
FAMILIES = ("abelian-wave", "random", "pulses", "mkg-random", "mkg-wave")
GROUPS = ("su2", "u1")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    kind: str = "evolve"
    # grid
    n: int = 16
    L: float = 6.283185307179586
    # physics
    group: str = "su2"
    N: float = 8.0
    sigma: float = 5.0 / 6.0
    s0: float | None = None          # defaults to N^-2
    # integrator
    dt: float = 2e-3
    T: float = 0.5
    cfl: float = 0.5
    substeps: int = 4
    # data recipe
    family: str = "random"
    amplitude: float = 0.1
    seed: int = 1
    mode_cut: float = 3.0
    decay: float = 1e6
    # sweep / diagnostics
    N_list: tuple = (4.0, 8.0, 16.0, 32.0)
    time_samples: int = 5
    s_samples: int = 32
    # output
    out_dir: str = "out"
    write_checkpoints: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self):
        problems = []
        if self.kind not in KINDS:
            problems.append(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.group not in GROUPS:
            problems.append(f"group must be one of {GROUPS}")
        if self.family not in FAMILIES:
            problems.append(f"family must be one of {FAMILIES}")
        if self.n < 8 or (self.n & (self.n - 1)) != 0:
            problems.append("n must be a power of two >= 8")
        if not 0.5 < self.sigma < 1.0:
            problems.append(f"sigma must lie in (1/2, 1), got {self.sigma}")
        if self.N <= 0 or self.L <= 0 or self.dt <= 0 or self.T < 0:
            problems.append("N, L, dt must be positive and T nonnegative")
        if self.cfl > 1.0:
            problems.append("cfl must not exceed 1")
        if problems:
            raise ConfigError("; ".join(problems))

    @property
    def s0_value(self) -> float:
        return self.s0 if self.s0 is not None else 1.0 / (self.N * self.N)


_SCHEMA = {
    "experiment": {"kind": str},
    "grid": {"n": int, "L": float},
    "physics": {"group": str, "N": float, "sigma": float, "s0": float},
    "integrator": {"dt": float, "T": float, "cfl": float, "substeps": int},
    "data": {"family": str, "amplitude": float, "seed": int,
             "mode_cut": float, "decay": float},
    "sweep": {"N_list": tuple, "time_samples": int, "s_samples": int},
    "output": {"dir": str, "checkpoints": bool},
}

_FIELD_OF = {
    ("experiment", "kind"): "kind",
    ("grid", "n"): "n", ("grid", "L"): "L",
    ("physics", "group"): "group", ("physics", "N"): "N",
    ("physics", "sigma"): "sigma", ("physics", "s0"): "s0",
    ("integrator", "dt"): "dt", ("integrator", "T"): "T",
    ("integrator", "cfl"): "cfl", ("integrator", "substeps"): "substeps",
    ("data", "family"): "family", ("data", "amplitude"): "amplitude",
    ("data", "seed"): "seed", ("data", "mode_cut"): "mode_cut",
    ("data", "decay"): "decay",
    ("sweep", "N_list"): "N_list", ("sweep", "time_samples"): "time_samples",
    ("sweep", "s_samples"): "s_samples",
    ("output", "dir"): "out_dir", ("output", "checkpoints"): "write_checkpoints",
}


def _convert(raw: str, typ, where: str):
    raw = raw.strip()
    try:
        if typ is bool:
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if typ is tuple:
            return tuple(float(tok) for tok in raw.replace(",", " ").split())
        return typ(raw)
    except ValueError as exc:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {typ.__name__}") from exc


def parse_config(text: str, strict: bool = True) -> ExperimentConfig:
    values = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if body.startswith("[") and body.endswith("]"):
            section = body[1:-1].strip()
            if section not in _SCHEMA:
                msg = f"line {lineno}: unknown section [{section}]"
                if strict:
                    raise ConfigError(msg)
                warnings.warn(msg)
                section = None
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected key = value, got {body!r}")
        if section is None:
            msg = f"line {lineno}: key outside any known section"
            if strict:
                raise ConfigError(msg)
            warnings.warn(msg)
            continue
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in _SCHEMA[section]:
            msg = f"line {lineno}: unknown key {key!r} in section [{section}]"
            if strict:
                raise ConfigError(msg)
            warnings.warn(msg)
            continue
        values[_FIELD_OF[(section, key)]] = _convert(
            raw, _SCHEMA[section][key], f"line {lineno}")
    return ExperimentConfig(**values)


def load_config(path: str, strict: bool = True) -> ExperimentConfig:
    with open(path, "r", encoding="ascii") as fh:
        return parse_config(fh.read(), strict=strict)


def emit_config(cfg: ExperimentConfig) -> str:
    """Serialize a config so that parse(emit(c)) == c."""
    lines = [
        "[experiment]", f"kind = {cfg.kind}", "",
        "[grid]", f"n = {cfg.n}", f"L = {cfg.L!r}", "",
        "[physics]", f"group = {cfg.group}", f"N = {cfg.N!r}",
        f"sigma = {cfg.sigma!r}",
    ]
    if cfg.s0 is not None:
        lines.append(f"s0 = {cfg.s0!r}")
    lines += [
        "", "[integrator]", f"dt = {cfg.dt!r}", f"T = {cfg.T!r}",
        f"cfl = {cfg.cfl!r}", f"substeps = {cfg.substeps}",
        "", "[data]", f"family = {cfg.family}", f"amplitude = {cfg.amplitude!r}",
        f"seed = {cfg.seed}", f"mode_cut = {cfg.mode_cut!r}",
        f"decay = {cfg.decay!r}",
        "", "[sweep]",
        "N_list = " + " ".join(repr(x) for x in cfg.N_list),
        f"time_samples = {cfg.time_samples}", f"s_samples = {cfg.s_samples}",
        "", "[output]", f"dir = {cfg.out_dir}",
        f"checkpoints = {str(cfg.write_checkpoints).lower()}",
    ]
    return "\n".join(lines) + "\n"
