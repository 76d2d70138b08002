"""Grids, wavefunctions and the half-line <-> odd full-line dictionary.

Conventions
-----------
* Uniform grids only.  A half-line grid samples {0, dx, ..., xmax}; a
  full-line grid samples {-xmax, ..., -dx, 0, dx, ..., xmax}.
* All norms and inner products use the rectangle rule with weight dx at
  every point, matching the reference numerics; no trapezoid correction.
* States in the Dirichlet domain vanish at x = 0.  Sampling forces the
  x = 0 value to exactly zero to suppress rounding noise at the boundary.
* The odd-extension isometry W maps a half-line state to the odd full-line
  state sgn(x) psi(|x|) / sqrt(2).
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .wavexpr import WaveExpr

__all__ = [
    "Line",
    "Grid",
    "GridError",
    "GridMismatchError",
    "WaveFunction",
    "QubitBathState",
    "build_grid",
    "snapped_grid",
    "sample",
    "normalize",
    "inner_product",
    "odd_extend",
    "restrict",
    "tail_mass",
    "tail_overlap",
    "tail_start_index",
    "cat_state",
    "wavefunction_to_csv",
    "wavefunction_from_csv",
]

INTEGRALITY_TOL = 1e-9


class Line(str, Enum):
    HALF = "half"     # [0, xmax]
    FULL = "full"     # [-xmax, xmax]


class GridError(ValueError):
    pass


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform spatial grid on the half-line or the full line."""

    dx: float
    xmax: float
    line: Line
    points: np.ndarray = field(repr=False)

    @property
    def npoints(self) -> int:
        return len(self.points)

    def key(self) -> tuple:
        return (self.line.value, round(self.dx, 15), round(self.xmax, 15))

    def __eq__(self, other) -> bool:
        return isinstance(other, Grid) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())


def build_grid(dx: float, xmax: float, line: Line = Line.HALF) -> Grid:
    """Build a uniform grid; xmax/dx must be integral within 1e-9.

    The full line has 2*xmax/dx + 1 points, the half-line xmax/dx + 1.
    """
    if dx <= 0 or xmax <= 0:
        raise GridError(f"dx and xmax must be positive, got dx={dx} xmax={xmax}")
    if xmax < 10 * dx:
        raise GridError(f"xmax={xmax} too small for dx={dx} (need xmax >= 10*dx)")
    ratio = xmax / dx
    n = round(ratio)
    if abs(ratio - n) > INTEGRALITY_TOL * max(1.0, ratio):
        raise GridError(f"xmax/dx = {ratio} is not an integer within tolerance")
    line = Line(line)
    pos = np.linspace(0.0, xmax, n + 1)
    if line is Line.HALF:
        points = pos
    else:
        # Bitwise mirror-symmetric by construction: x[i] == -x[-1-i] exactly.
        points = np.concatenate([-pos[:0:-1], pos])
    points.flags.writeable = False
    return Grid(dx=dx, xmax=xmax, line=line, points=points)


def snapped_grid(dx: float, xmax: float, line: Line = Line.HALF) -> Grid:
    """Grid with xmax snapped down to the nearest multiple of dx.

    Mirrors colon-range semantics (``0:dx:xmax`` keeps the last sample at or
    below xmax), which is how non-commensurate published cutoffs such as
    xmax=5.5 at dx=0.003 are to be read.
    """
    n = int(math.floor(xmax / dx + INTEGRALITY_TOL))
    return build_grid(dx, n * dx, line)


@dataclass(frozen=True, eq=False)
class WaveFunction:
    """Complex samples on a grid with the dx-weighted discrete L2 norm."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.complex128)
        if values.shape != (self.grid.npoints,):
            raise GridMismatchError(
                f"values shape {values.shape} does not match grid "
                f"({self.grid.npoints} points)")
        object.__setattr__(self, "values", values)

    def norm2(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.dx)

    def norm(self) -> float:
        return math.sqrt(self.norm2())

    def with_values(self, values: np.ndarray) -> "WaveFunction":
        return WaveFunction(self.grid, values)


def sample(expr: WaveExpr, grid: Grid, odd: bool = False) -> WaveFunction:
    """Sample an expression on a grid (not normalized).

    On the half-line the x=0 sample is forced to exactly 0 (Dirichlet
    boundary; every expression-family state vanishes there analytically).
    With ``odd=True`` on a full-line grid the samples are
    sgn(x) * expr(|x|) / sqrt(2), the odd-extension rule.
    """
    x = grid.points
    if grid.line is Line.HALF:
        if odd:
            raise ValueError("odd sampling is only meaningful on a full-line grid")
        values = expr(x).astype(np.complex128)
        values[0] = 0.0
    elif odd:
        values = (np.sign(x) * expr(np.abs(x)) / np.sqrt(2.0)).astype(np.complex128)
    else:
        values = expr(np.abs(x)).astype(np.complex128)
    return WaveFunction(grid, values)


def normalize(psi: WaveFunction) -> WaveFunction:
    """Scale to unit discrete norm; direction (phase) preserved."""
    n = psi.norm()
    if n == 0.0:
        raise ValueError("cannot normalize the zero function")
    return psi.with_values(psi.values / n)


def inner_product(phi: WaveFunction, psi: WaveFunction) -> complex:
    """<phi|psi> = sum conj(phi_i) psi_i dx (conjugate linear in phi)."""
    if phi.grid != psi.grid:
        raise GridMismatchError("inner product requires a common grid")
    return complex(np.sum(np.conj(phi.values) * psi.values) * phi.grid.dx)


def odd_extend(psi: WaveFunction) -> WaveFunction:
    """The isometry W: psi(x) -> sgn(x) psi(|x|) / sqrt(2) on the full line."""
    if psi.grid.line is not Line.HALF:
        raise GridMismatchError("odd_extend expects a half-line wavefunction")
    full = build_grid(psi.grid.dx, psi.grid.xmax, Line.FULL)
    v = psi.values
    left = -v[:0:-1] / np.sqrt(2.0)
    right = v[1:] / np.sqrt(2.0)
    values = np.concatenate([left, [0.0], right])
    return WaveFunction(full, values)


def restrict(psi: WaveFunction, tol: float = 1e-9) -> WaveFunction:
    """Inverse of :func:`odd_extend`; rejects inputs that are not odd.

    Oddness is checked in the sup norm relative to the largest sample.
    """
    if psi.grid.line is not Line.FULL:
        raise GridMismatchError("restrict expects a full-line wavefunction")
    v = psi.values
    scale = float(np.max(np.abs(v))) or 1.0
    defect = float(np.max(np.abs(v + v[::-1]))) / scale
    if defect > tol:
        raise ValueError(f"wavefunction is not odd (defect {defect:.3g} > {tol:g})")
    half = build_grid(psi.grid.dx, psi.grid.xmax, Line.HALF)
    mid = psi.grid.npoints // 2
    values = np.sqrt(2.0) * v[mid:].copy()
    values[0] = 0.0
    return WaveFunction(half, values)


def tail_start_index(grid: Grid, a: float) -> int:
    """First index with x >= a - dx/2 (midpoint rule for cut-offs that fall
    between samples)."""
    if grid.line is not Line.HALF:
        raise GridMismatchError("tail operations act on half-line grids")
    return int(np.searchsorted(grid.points, a - grid.dx / 2))


def tail_mass(psi: WaveFunction, a: float) -> float:
    """sum_{x_i >= a} |psi_i|^2 dx, the discrete integral of |psi|^2 over [a, inf).

    Monotone non-increasing in a.  For a beyond the grid a warning is issued
    and 0 is returned.
    """
    if a < 0:
        raise ValueError("tail cut-off must be non-negative")
    grid = psi.grid
    if grid.line is not Line.HALF:
        raise GridMismatchError("tail_mass expects a half-line wavefunction")
    if a > grid.xmax:
        warnings.warn(f"tail cut-off a={a} beyond grid xmax={grid.xmax}; returning 0")
        return 0.0
    k = int(np.searchsorted(grid.points, a - INTEGRALITY_TOL))
    return float(np.sum(np.abs(psi.values[k:]) ** 2) * grid.dx)


def tail_overlap(phi: WaveFunction, psi: WaveFunction, a: float) -> complex:
    """sum_{x_i >= a - dx/2} conj(phi_i) psi_i dx (midpoint-rule cut)."""
    if phi.grid != psi.grid:
        raise GridMismatchError("tail overlap requires a common grid")
    k = tail_start_index(phi.grid, a)
    dx = phi.grid.dx
    return complex(np.sum(np.conj(phi.values[k:]) * psi.values[k:]) * dx)


@dataclass(frozen=True)
class QubitBathState:
    """Separable qubit + bath state (beta0, beta1) (x) (psi0, psi1)."""

    beta0: complex
    beta1: complex
    psi0: WaveFunction
    psi1: WaveFunction

    def __post_init__(self):
        if self.psi0.grid != self.psi1.grid:
            raise GridMismatchError("psi0 and psi1 must share a grid")

    @property
    def grid(self) -> Grid:
        return self.psi0.grid

    def total_norm2(self) -> float:
        return (abs(self.beta0) ** 2 * self.psi0.norm2()
                + abs(self.beta1) ** 2 * self.psi1.norm2())

    def check_normalized(self, tol: float = 1e-10):
        err = abs(self.total_norm2() - 1.0)
        if err > tol:
            raise ValueError(f"state norm deviates from 1 by {err:.3g}")


def cat_state(psi: WaveFunction) -> QubitBathState:
    """Equal-amplitude qubit superposition with a common normalized bath state."""
    psi = normalize(psi)
    b = 1.0 / np.sqrt(2.0)
    return QubitBathState(beta0=b, beta1=b, psi0=psi, psi1=psi)


def wavefunction_to_csv(psi: WaveFunction, path=None) -> str:
    """Serialize as CSV with header ``x,re,im``, one row per point, ascending x."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["x", "re", "im"])
    for x, v in zip(psi.grid.points, psi.values):
        writer.writerow([repr(float(x)), repr(float(v.real)), repr(float(v.imag))])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def wavefunction_from_csv(source) -> WaveFunction:
    """Read a ``x,re,im`` CSV produced by :func:`wavefunction_to_csv`.

    The grid (half-line vs full-line, dx, xmax) is reconstructed from the x
    column, which must be ascending and uniformly spaced.
    """
    if hasattr(source, "read"):
        rows = list(csv.reader(source))
    else:
        with open(source, "r", encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    rows = [r for r in rows if r and not r[0].lstrip().startswith("#")]
    if not rows or [c.strip() for c in rows[0]] != ["x", "re", "im"]:
        raise ValueError("expected CSV header 'x,re,im'")
    data = np.array([[float(c) for c in row] for row in rows[1:]], dtype=float)
    if len(data) < 2:
        raise ValueError("need at least two samples")
    x = data[:, 0]
    steps = np.diff(x)
    dx = steps[0]
    if dx <= 0 or np.max(np.abs(steps - dx)) > 1e-9 * max(1.0, dx):
        raise ValueError("x column must be ascending and uniformly spaced")
    if abs(x[0]) < 1e-12:
        grid = build_grid(dx, x[-1], Line.HALF)
    elif abs(x[0] + x[-1]) < 1e-9:
        grid = build_grid(dx, x[-1], Line.FULL)
    else:
        raise ValueError("x range is neither [0, xmax] nor [-xmax, xmax]")
    if grid.npoints != len(x):
        raise ValueError("sample count inconsistent with reconstructed grid")
    return WaveFunction(grid, data[:, 1] + 1j * data[:, 2])
