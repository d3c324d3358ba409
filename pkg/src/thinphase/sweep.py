"""Parameter sweeps over the interphase conductivity, with CSV output.

A sweep holds the geometry (``r1``, ``r3``, ``theta2``) and the neighbour
conductivities fixed and samples ``sigma2`` on a logarithmic grid.  The
phase conductivities ``sigma1`` and ``sigma3`` are always added to the grid
when they fall inside the range, so crossings at ``sigma2 = sigma3`` are
sampled exactly.

CSV layout: ``#``-prefixed ``key: value`` metadata lines (the full config as
compact JSON, derived ``h`` and volume fractions), one header row, then one
comma-separated row per sample with floats printed to 17 significant digits.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .assemblage import (
    DomainError,
    approx_sigma_star,
    exact_sigma_star,
    high_contrast_limit,
    is_intermediate,
    low_contrast_limit,
    radius_from_fraction,
    reference_sigma_star,
)

SELECTORS = ("exact", "approx", "reference", "high_limit", "low_limit")
COLUMN = {
    "exact": "sigma_star_exact",
    "approx": "sigma_star_approx",
    "reference": "sigma_star_reference",
    "high_limit": "sigma_star_high",
    "low_limit": "sigma_star_low",
}
THREADS_ENV = "THINPHASE_NUM_THREADS"
THETA_TOL = 1e-12


class ConfigError(ValueError):
    pass


class CSVParseError(ValueError):
    def __init__(self, path, lineno, message):
        super().__init__(f"{path}:{lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class SweepConfig:
    r1: float
    r3: float
    theta2: float
    sigma1: float
    sigma3: float
    lo: float
    hi: float
    points: int
    outputs: tuple = SELECTORS
    theta1: float | None = None
    name: str = "sweep"
    csv: str | None = None
    svg: str | None = None
    style: str = "log-x"

    def __post_init__(self):
        if not self.outputs:
            raise ConfigError("curve selection is empty")
        bad = [s for s in self.outputs if s not in SELECTORS]
        if bad:
            raise ConfigError(f"unknown curve selectors {bad}; choose from {list(SELECTORS)}")
        if not (self.lo > 0 and self.hi > self.lo):
            raise ConfigError(f"sigma2 range needs 0 < lo < hi, got [{self.lo}, {self.hi}]")
        if int(self.points) != self.points or self.points < 2:
            raise ConfigError(f"point count must be an integer >= 2, got {self.points}")
        if not (0 < self.r1 < self.r3):
            raise ConfigError(f"radii must satisfy 0 < r1 < r3, got {self.r1}, {self.r3}")
        if not (self.sigma1 > 0 and self.sigma3 > 0):
            raise ConfigError("sigma1 and sigma3 must be positive")
        if self.theta1 is not None and abs(self.theta1 - (self.r1 / self.r3) ** 3) > THETA_TOL:
            raise ConfigError(f"theta1={self.theta1} is inconsistent with (r1/r3)^3={(self.r1 / self.r3) ** 3}")
        if self.style not in ("log-x", "log-log"):
            raise ConfigError(f"style must be 'log-x' or 'log-log', got {self.style!r}")

    @property
    def core_fraction(self) -> float:
        return (self.r1 / self.r3) ** 3

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        d = dict(data)
        rng = d.pop("sigma2_range", None)
        if rng is not None:
            d.setdefault("lo", rng["lo"])
            d.setdefault("hi", rng["hi"])
            d.setdefault("points", rng["points"])
        if "outputs" in d:
            d["outputs"] = tuple(d["outputs"])
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config fields {sorted(extra)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "SweepConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["outputs"] = list(self.outputs)
        return d

    def override(self, **changes) -> "SweepConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


@dataclass(frozen=True)
class SweepRow:
    sigma2: float
    sigma_star_exact: float | None = None
    sigma_star_approx: float | None = None
    sigma_star_reference: float | None = None
    sigma_star_high: float | None = None
    sigma_star_low: float | None = None
    warnings: tuple = field(default_factory=tuple)


def sample_sigma2(config: SweepConfig) -> np.ndarray:
    """Log-spaced samples of ``sigma2``, plus ``sigma1``/``sigma3`` when in range."""
    grid = np.logspace(math.log10(config.lo), math.log10(config.hi), int(config.points))
    grid[0], grid[-1] = config.lo, config.hi
    extra = [s for s in (config.sigma1, config.sigma3) if config.lo <= s <= config.hi]
    for s in extra:
        near = np.abs(grid / s - 1.0) < 1e-9
        grid = np.where(near, s, grid)
    return np.unique(np.concatenate([grid, extra]))


def wiener_bounds(sigmas, fractions):
    s = np.asarray(sigmas, dtype=float)
    f = np.asarray(fractions, dtype=float)
    return 1.0 / np.sum(f / s), float(np.sum(f * s))


def _row(config: SweepConfig, geometry, s2: float) -> SweepRow:
    t1, t2, t3, h = geometry
    s1, s3 = config.sigma1, config.sigma3
    vals = {}
    flags = []
    if "exact" in config.outputs:
        vals["sigma_star_exact"] = exact_sigma_star(s1, s2, s3, t1, t2)
    if "approx" in config.outputs:
        vals["sigma_star_approx"] = approx_sigma_star(s1, s2, s3, t1, config.r1, h, warn=False)
    if "reference" in config.outputs:
        vals["sigma_star_reference"] = reference_sigma_star(s1, s3, t1)
    if "high_limit" in config.outputs:
        vals["sigma_star_high"] = high_contrast_limit(s1, s3, t3, t2 * s2)
    if "low_limit" in config.outputs:
        vals["sigma_star_low"] = low_contrast_limit(s1, s3, t3, s2 / t2) if t2 > 0 else \
            low_contrast_limit(s1, s3, t3, math.inf)
    if not is_intermediate(s1, s2, s3):
        flags.append("outside-intermediate-band")
    return SweepRow(sigma2=float(s2), warnings=tuple(flags), **{k: float(v) for k, v in vals.items()})


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def sweep_geometry(config: SweepConfig):
    """``(theta1, theta2, theta3, h)``; raises before any curve is evaluated."""
    try:
        r2 = radius_from_fraction(config.r1, config.r3, config.theta2)
    except DomainError as exc:
        raise ConfigError(f"infeasible theta2: {exc}") from None
    t1 = config.core_fraction
    t2 = config.theta2
    return t1, t2, 1.0 - t1 - t2, r2 - config.r1


def run_sweep(config: SweepConfig, csv_path=None) -> list[SweepRow]:
    """Evaluate the selected curves at every sample; write CSV if a path is given.

    ``csv_path`` defaults to ``config.csv``.  Parallelism follows the
    ``THINPHASE_NUM_THREADS`` environment variable; rows come back ordered
    by ``sigma2`` either way.
    """
    geometry = sweep_geometry(config)
    samples = sample_sigma2(config)
    n = _threads()
    if n > 1:
        with ThreadPoolExecutor(max_workers=n) as pool:
            rows = list(pool.map(lambda s: _row(config, geometry, s), samples))
    else:
        rows = [_row(config, geometry, s) for s in samples]
    rows.sort(key=lambda r: r.sigma2)
    path = csv_path if csv_path is not None else config.csv
    if path is not None:
        write_csv(config, rows, path)
    return rows


def _fmt(x: float) -> str:
    return "%.17g" % x


def format_csv(config: SweepConfig, rows) -> str:
    t1, t2, t3, h = sweep_geometry(config)
    cols = ["sigma2"] + [COLUMN[s] for s in config.outputs] + ["warnings"]
    lines = [
        f"# config: {json.dumps(config.to_dict(), sort_keys=True, separators=(',', ':'))}",
        f"# h: {_fmt(h)}",
        f"# theta1: {_fmt(t1)}",
        f"# theta2: {_fmt(t2)}",
        f"# theta3: {_fmt(t3)}",
        ",".join(cols),
    ]
    for r in rows:
        cells = [_fmt(r.sigma2)] + [_fmt(getattr(r, COLUMN[s])) for s in config.outputs]
        cells.append(";".join(r.warnings))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_csv(config: SweepConfig, rows, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_csv(config, rows))
    return path


@dataclass(frozen=True)
class SweepTable:
    metadata: dict
    columns: tuple
    data: dict  # column name -> float array
    warnings: tuple  # per-row tuples of flags

    @property
    def config(self) -> SweepConfig | None:
        raw = self.metadata.get("config")
        return None if raw is None else SweepConfig.from_dict(json.loads(raw))

    @property
    def curves(self) -> list[str]:
        return [c for c in self.columns if c not in ("sigma2", "warnings")]

    def __len__(self):
        return len(self.data["sigma2"])


def read_csv(path) -> SweepTable:
    """Parse a sweep CSV; malformed input raises :class:`CSVParseError` with a line number."""
    path = Path(path)
    meta = {}
    header = None
    body = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            if header is not None:
                raise CSVParseError(path, lineno, "metadata line after the header row")
            key, sep, value = line[1:].partition(":")
            if not sep:
                raise CSVParseError(path, lineno, "metadata line must look like '# key: value'")
            meta[key.strip()] = value.strip()
            continue
        cells = line.split(",")
        if header is None:
            if cells[0] != "sigma2" or len(set(cells)) != len(cells):
                raise CSVParseError(path, lineno, "header row must start with 'sigma2' and have unique names")
            header = cells
            continue
        if len(cells) != len(header):
            raise CSVParseError(path, lineno, f"expected {len(header)} fields, found {len(cells)}")
        row = []
        for name, cell in zip(header, cells):
            if name == "warnings":
                row.append(tuple(w for w in cell.split(";") if w))
                continue
            try:
                row.append(float(cell))
            except ValueError:
                raise CSVParseError(path, lineno, f"column {name!r}: not a number: {cell!r}") from None
        body.append(row)
    if header is None:
        raise CSVParseError(path, 1, "no header row")
    data = {}
    flags = tuple(r[header.index("warnings")] for r in body) if "warnings" in header else tuple(() for _ in body)
    for j, name in enumerate(header):
        if name != "warnings":
            data[name] = np.array([r[j] for r in body], dtype=float)
    return SweepTable(meta, tuple(header), data, flags)


def figure_names() -> list[str]:
    """Names of the bundled figure configurations (``fig5`` ... ``fig10``)."""
    from importlib.resources import files

    names = [p.name[:-5] for p in files("thinphase").joinpath("figures").iterdir() if p.name.endswith(".json")]
    return sorted(names, key=lambda s: (len(s), s))


def resolve_config(name_or_path) -> SweepConfig:
    """Load a config file, or a bundled figure config by name."""
    p = Path(name_or_path)
    if p.exists():
        return SweepConfig.load(p)
    from importlib.resources import files

    res = files("thinphase").joinpath("figures", f"{name_or_path}.json")
    if res.is_file():
        return SweepConfig.from_dict(json.loads(res.read_text()))
    raise ConfigError(f"no config file {name_or_path!r} and no bundled figure of that name "
                      f"(bundled: {', '.join(figure_names())})")
