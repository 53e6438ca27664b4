"""Run configuration: flat ``section.key = value`` files with documented defaults."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

from .grid import Grid, build_grid
from .kernels import KernelBank, build_bank
from .spaces import MorreyParams
from .sqfn import ConeSpec, GStarSpec, covering_shells
from .weights import BallFamily


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _strs(text: str) -> tuple:
    return tuple(v for v in text.replace(",", " ").split())


def _auto(conv):
    def parse(text: str):
        return None if text.strip().lower() in ("auto", "none", "") else conv(text)
    return parse


# key -> (attribute path, parser, default, doc)
KEYS = {
    "grid.dim": ("dim", int, 1, "spatial dimension n (1 or 2)"),
    "grid.L": ("half_width", float, 1.0, "box half width; the box is [-L, L)^n"),
    "grid.N": ("points", int, 256, "cells per axis (power of two >= 8)"),
    "bank.alpha": ("alpha", float, 1.0, "Hölder order of the kernel family, in (0, 1]"),
    "bank.size": ("bank_size", int, 16, "number of kernels approximating the supremum"),
    "bank.seed": ("bank_seed", int, 7, "seed of the randomized kernels"),
    "cone.t_min": ("t_min", _auto(float), None, "smallest scale (auto: 4h)"),
    "cone.t_max": ("t_max", _auto(float), None, "largest scale (auto: L/2)"),
    "cone.m": ("scales_per_octave", int, 4, "scales per octave of the log-uniform ladder"),
    "cone.apertures": ("apertures", _floats, (2.0, 4.0, 8.0, 16.0), "apertures 2^j used by L4.1"),
    "morrey.p": ("p", float, 1.0, "Morrey exponent"),
    "morrey.kappa": ("kappa", float, 0.5, "Morrey parameter kappa in (0, 1)"),
    "gstar.lambda": ("lam", float, 6.0, "g* damping exponent lambda > 1"),
    "gstar.J": ("shells", _auto(int), None, "shell count (auto: covers the box)"),
    "family.stride": ("stride", _auto(int), None, "ball-center stride in cells (auto: N/16)"),
    "family.k_min": ("k_min", int, 0, "smallest radius h*2^k_min"),
    "family.k_max": ("k_max", _auto(int), None, "largest radius h*2^k_max (auto: <= L/2)"),
    "corpus.seed": ("corpus_seed", int, 0, "master seed for every random choice"),
    "corpus.exponents": ("exponents", _auto(_floats), None, "power-weight exponents (auto: 0, -n/4, -n/2)"),
    "weights.p": ("weight_p", float, 1.0, "A_p exponent for weights-report"),
    "weights.r": ("weight_r", float, 1.5, "reverse Hölder exponent for weights-report"),
    "weights.q": ("weight_q", float, 2.0, "tail exponent q for weights-report"),
    "search.budget": ("budget", int, 50, "evaluations for the search subcommand"),
    "search.family": ("search_family", str, "bump_pair", "instance family for the search"),
    "experiments": ("experiments", _strs, ("T1.1",), "experiments run by check"),
    "output.path": ("output_path", str, "morreylab-report.json", "report file"),
    "output.format": ("output_format", str, "json", "csv or json"),
}

_ATTR_TO_KEY = {v[0]: k for k, v in KEYS.items()}


@dataclass(frozen=True)
class RunConfig:
    dim: int = 1
    half_width: float = 1.0
    points: int = 256
    alpha: float = 1.0
    bank_size: int = 16
    bank_seed: int = 7
    t_min: Optional[float] = None
    t_max: Optional[float] = None
    scales_per_octave: int = 4
    apertures: tuple = (2.0, 4.0, 8.0, 16.0)
    p: float = 1.0
    kappa: float = 0.5
    lam: float = 6.0
    shells: Optional[int] = None
    stride: Optional[int] = None
    k_min: int = 0
    k_max: Optional[int] = None
    corpus_seed: int = 0
    exponents: Optional[tuple] = None
    weight_p: float = 1.0
    weight_r: float = 1.5
    weight_q: float = 2.0
    budget: int = 50
    search_family: str = "bump_pair"
    experiments: tuple = ("T1.1",)
    output_path: str = "morreylab-report.json"
    output_format: str = "json"

    def __post_init__(self):
        self.validate()

    def _fail(self, attr: str, message: str):
        raise ConfigError(_ATTR_TO_KEY[attr], message)

    def validate(self):
        if self.dim not in (1, 2):
            self._fail("dim", "unsupported dimension (must be 1 or 2)")
        if not self.half_width > 0:
            self._fail("half_width", "must be positive")
        N = self.points
        if N < 8 or N & (N - 1):
            self._fail("points", "must be a power of two >= 8")
        if not 0 < self.alpha <= 1:
            self._fail("alpha", "must lie in (0, 1]")
        if self.bank_size < 1:
            self._fail("bank_size", "must be >= 1")
        h = 2 * self.half_width / N
        if self.t_min is not None and self.t_min < 2 * h * (1 - 1e-12):
            self._fail("t_min", "must be >= 2h")
        tmin = 4 * h if self.t_min is None else self.t_min
        tmax = self.half_width / 2 if self.t_max is None else self.t_max
        if not tmin < tmax:
            self._fail("t_max", "must exceed t_min")
        if self.scales_per_octave < 2:
            self._fail("scales_per_octave", "must be >= 2")
        if any(b < 1 for b in self.apertures):
            self._fail("apertures", "apertures must be >= 1")
        if self.p < 1:
            self._fail("p", "must be >= 1")
        if not 0 < self.kappa < 1:
            self._fail("kappa", "must lie in (0, 1)")
        if not self.lam > 1:
            self._fail("lam", "must exceed 1")
        if self.shells is not None and self.shells < 1:
            self._fail("shells", "must be >= 1")
        if self.stride is not None and self.stride < 1:
            self._fail("stride", "must be >= 1")
        if self.exponents is not None:
            if not self.exponents or any(a <= -self.dim for a in self.exponents):
                self._fail("exponents", "exponents must exceed -n")
        if self.weight_p < 1:
            self._fail("weight_p", "must be >= 1")
        if not self.weight_r > 1:
            self._fail("weight_r", "must exceed 1")
        if not self.weight_q > 1:
            self._fail("weight_q", "must exceed 1")
        if self.budget < 1:
            self._fail("budget", "must be >= 1")
        if self.output_format not in ("csv", "json"):
            self._fail("output_format", "must be csv or json")

    # builders ------------------------------------------------------------

    def grid(self) -> Grid:
        return build_grid(self.dim, self.half_width, self.points)

    def bank(self, grid: Optional[Grid] = None) -> KernelBank:
        return build_bank(self.alpha, self.bank_size, self.bank_seed, grid or self.grid())

    def cone(self, grid: Optional[Grid] = None, aperture: float = 1.0) -> ConeSpec:
        g = grid or self.grid()
        tmin = 4 * g.spacing if self.t_min is None else self.t_min
        tmax = g.half_width / 2 if self.t_max is None else self.t_max
        return ConeSpec(aperture, tmin, tmax, self.scales_per_octave)

    def gstar(self, grid: Optional[Grid] = None) -> GStarSpec:
        g = grid or self.grid()
        cone = self.cone(g)
        J = covering_shells(g, cone.t_min) if self.shells is None else self.shells
        return GStarSpec(self.lam, J, cone)

    def family(self, grid: Optional[Grid] = None) -> BallFamily:
        return BallFamily.lattice(grid or self.grid(), self.stride, self.k_min, self.k_max)

    def morrey(self) -> MorreyParams:
        return MorreyParams(self.p, self.kappa)

    def weight_exponents(self) -> tuple:
        if self.exponents is not None:
            return tuple(self.exponents)
        return (0.0, -self.dim / 4, -self.dim / 2)

    def with_key(self, key: str, value) -> "RunConfig":
        """Copy with one dotted key replaced (value already parsed or as text)."""
        if key not in KEYS:
            raise ConfigError(key, "unknown key")
        attr, conv, _, _ = KEYS[key]
        if isinstance(value, str):
            value = _parse_value(key, conv, value)
        return replace(self, **{attr: value})

    def as_dict(self) -> dict:
        out = {}
        for k, (attr, _, _, _) in KEYS.items():
            v = getattr(self, attr)
            out[k] = list(v) if isinstance(v, tuple) else v
        return out


def _parse_value(key: str, conv, text: str):
    try:
        return conv(text.strip())
    except (TypeError, ValueError) as exc:
        raise ConfigError(key, f"cannot parse {text.strip()!r} ({exc})") from None


def parse_config(text: str) -> RunConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw.strip()!r}")
        key, _, val = (s.strip() for s in line.partition("="))
        if key not in KEYS:
            raise ConfigError(key, "unknown key")
        attr, conv, _, _ = KEYS[key]
        values[attr] = _parse_value(key, conv, val)
    return RunConfig(**values)


def load_config(path) -> RunConfig:
    if path is None:
        return RunConfig()
    return parse_config(Path(path).read_text())


def default_config_text() -> str:
    lines = []
    for key, (_, _, default, doc) in KEYS.items():
        if isinstance(default, tuple):
            default = ", ".join(str(v) for v in default)
        lines.append(f"# {doc}")
        lines.append(f"{key} = {'auto' if default is None else default}")
    return "\n".join(lines) + "\n"


assert {f.name for f in fields(RunConfig)} == set(_ATTR_TO_KEY), "config keys out of sync"
