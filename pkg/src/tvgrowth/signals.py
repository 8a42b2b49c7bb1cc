"""Data functions, grid sampling and CSV input/output."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .grid_energy import Grid, Signal


@dataclass(frozen=True)
class StepDatum:
    """f = 0 on [0, at], 1 on (at, 1]."""

    at: float = 0.5

    @property
    def breakpoints(self) -> tuple:
        return (self.at,)

    def __call__(self, t):
        return (np.asarray(t, dtype=float) > self.at).astype(float)


@dataclass(frozen=True)
class TriangleDatum:
    """Hat of given height centred at ``center`` with half-width ``half_width``."""

    center: float = 0.5
    half_width: float = 0.5
    height: float = 1.0

    def __post_init__(self):
        if self.half_width <= 0 or not 0 <= self.height <= 1:
            raise ValueError("triangle needs half_width > 0 and height in [0, 1]")

    @property
    def breakpoints(self) -> tuple:
        pts = (self.center - self.half_width, self.center, self.center + self.half_width)
        return tuple(p for p in pts if 0 < p < 1)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.height * np.clip(1.0 - np.abs(t - self.center) / self.half_width, 0.0, None)


@dataclass(frozen=True)
class RectangleDatum:
    """Indicator (times ``height``) of the half-open intervals (a, b]."""

    intervals: tuple = ((0.25, 0.75),)
    height: float = 1.0

    def __post_init__(self):
        for a, b in self.intervals:
            if not 0 <= a < b <= 1:
                raise ValueError(f"bad rectangle interval ({a}, {b})")
        if not 0 <= self.height <= 1:
            raise ValueError("rectangle height must lie in [0, 1]")

    @property
    def breakpoints(self) -> tuple:
        pts = sorted({p for ab in self.intervals for p in ab})
        return tuple(p for p in pts if 0 < p < 1)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for a, b in self.intervals:
            out = np.where((t > a) & (t <= b), self.height, out)
        return out


@dataclass(frozen=True)
class GridDatum:
    """Piecewise-linear interpolant of a sampled signal."""

    signal: Signal

    @property
    def breakpoints(self) -> tuple:
        return tuple(self.signal.grid.nodes[1:-1])

    def __call__(self, t):
        return np.interp(t, self.signal.grid.nodes, self.signal.values)


def as_datum(f):
    """Callable datum with ``breakpoints`` from a Signal or a datum object."""
    if isinstance(f, Signal):
        return GridDatum(f)
    if not callable(f):
        raise TypeError(f"cannot interpret {type(f).__name__} as a datum")
    return f


def make_datum(kind: str, **params):
    kind = kind.lower()
    if kind == "step":
        return StepDatum(params.get("at", 0.5))
    if kind == "triangle":
        return TriangleDatum(
            params.get("center", 0.5), params.get("half_width", 0.5), params.get("height", 1.0)
        )
    if kind == "rectangle":
        a, b = params.get("a", 0.25), params.get("b", 0.75)
        return RectangleDatum(((a, b),), params.get("height", 1.0))
    raise ValueError(f"unknown datum kind {kind!r}")


def gen_signal(kind: str, params: dict | None = None, grid: Grid | int = 1001) -> Signal:
    """Sample a datum on the grid.

    ``kind`` is one of step, triangle, rectangle, noisy-<base>.  Noisy variants
    add uniform noise of half-width ``amplitude`` (seeded) and clamp to [0, 1].
    """
    params = dict(params or {})
    grid = grid if isinstance(grid, Grid) else Grid(int(grid))
    if kind.startswith("noisy"):
        base = kind.split("-", 1)[1] if "-" in kind else params.pop("base", "step")
        amplitude = float(params.pop("amplitude", 0.1))
        seed = int(params.pop("seed", 0))
        if amplitude < 0:
            raise ValueError("noise amplitude must be nonnegative")
        clean = make_datum(base, **params)(grid.nodes)
        rng = np.random.default_rng(seed)
        noisy = clean + rng.uniform(-amplitude, amplitude, size=grid.n)
        return Signal(grid, np.clip(noisy, 0.0, 1.0))
    return Signal(grid, make_datum(kind, **params)(grid.nodes))


# ---------------------------------------------------------------------------
# CSV


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def csv_text(columns: dict[str, Sequence[float]]) -> str:
    names = list(columns)
    rows = zip(*(columns[k] for k in names))
    buf = io.StringIO()
    buf.write(",".join(names) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(x) for x in row) + "\n")
    return buf.getvalue()


def write_csv(path, columns: dict[str, Sequence[float]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(csv_text(columns))
    return path


def read_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        rows = [[float(x) for x in r] for r in reader if r]
    data = np.array(rows, dtype=float).reshape(-1, len(header))
    return {name: data[:, j] for j, name in enumerate(header)}


def write_signal(path, t, values) -> Path:
    return write_csv(path, {"t": t, "value": values})


def read_signal(path) -> Signal:
    """Read a ``t,value`` CSV on a uniform grid of [0, 1]."""
    cols = read_csv(path)
    if "t" not in cols or "value" not in cols:
        raise ValueError(f"{path}: expected header 't,value'")
    t, v = cols["t"], cols["value"]
    grid = Grid(len(t))
    if not np.allclose(t, grid.nodes, rtol=0, atol=1e-9):
        raise ValueError(f"{path}: nodes are not the uniform grid of [0, 1]")
    return Signal(grid, v)
