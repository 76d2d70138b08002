"""One-step unitaries for the half-line model and their full-line twins.

Units: hbar = 1, kinetic term p^2 (mass 1/2).  The half-line Hamiltonian is
H_alpha = p^2 + 2 alpha p on the Dirichlet domain psi(0) = 0.

Two discretizations are provided and kept deliberately faithful to the
reference numerics, including their artifacts:

``Scheme.KERNEL``
    The exact image-method propagator on the half-line,

        (U_a(tau) psi)(x) = -i e^{i a^2 tau} / sqrt(pi i tau)
            * int_0^inf e^{i(x^2+y^2)/(4 tau)} e^{-i a (x-y)}
                        sin(x y / (2 tau)) psi(y) dy,

    discretized by the rectangle rule on the grid itself.  The matrix obeys
    U_a = e^{i a^2 tau} D(e^{-i a x}) U_0 D(e^{i a x}) exactly, and U_0 is
    symmetric.  Reliable while dx * xmax / tau stays small (roughly <= 4);
    at coarse dx high matrix powers amplify aliased modes and diverge, which
    is a documented property of this discretization, not a bug to be hidden.

``Scheme.FOURIER``
    The full-line quadrature pair built from F[j,k] = exp(-i x_j x_k) dx /
    sqrt(2 pi), using the SAME grid for position and frequency:

        ua = D(e^{-i a |x|}) F^H D(e^{-i tau x^2}) F D(e^{i a |x|})
        u0 = F^H D(e^{+i tau x^2}) F

    ua approximates e^{-i tau (p + a sgn x)^2}; the global phase
    e^{i a^2 tau} is omitted (includes_alpha2_phase=False).  A conventional
    FFT-conjugate frequency grid is deliberately NOT used: reproducing the
    published numbers, discretization artifacts included, outranks spectral
    elegance.  Note u0 = ua(alpha=0)^H exactly, so one dense product
    F^H D(e^{-i tau x^2}) F yields the whole pair.

Matrix products use BLAS GEMM; with a fixed BLAS build and thread count the
reduction order, and therefore every bit of the results, is deterministic.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .grids import Grid, GridMismatchError, Line, WaveFunction, build_grid

__all__ = [
    "Scheme",
    "PropagatorMatrix",
    "DFTMatrix",
    "kernel_propagator",
    "dft_matrix",
    "fourier_cycle_core",
    "fourier_step_pair",
    "shift_left",
    "shift_right",
    "apply_hamiltonian",
    "derivative",
    "second_derivative",
    "free_evolve_line",
    "free_evolve_monopole",
    "matrix_power",
    "save_propagator",
    "load_propagator",
    "cache_dir",
    "propagator_cache_path",
]

CACHE_ENV_VAR = "HALFLINE_DD_CACHE_DIR"
CACHE_FORMAT = "halfline-dd-propcache-1"

_BLOCK_ROWS = 512


class Scheme(str, Enum):
    KERNEL = "kernel"
    FOURIER = "fourier"


@dataclass(frozen=True, eq=False)
class PropagatorMatrix:
    """Dense one-step propagator on a grid.

    Unitarity of the discretized matrices is only approximate and is
    quantified in action on states (norm drift per application), not as a
    matrix-element bound: both schemes are exactly unitary only on the
    subspaces they resolve (Dirichlet sector resp. band-limited states).
    """

    grid: Grid
    entries: np.ndarray
    alpha: float
    tau: float
    scheme: Scheme
    includes_alpha2_phase: bool

    def apply(self, psi: WaveFunction) -> WaveFunction:
        if psi.grid != self.grid:
            raise GridMismatchError("propagator and state grids differ")
        return psi.with_values(self.entries @ psi.values)

    def adjoint_apply(self, psi: WaveFunction) -> WaveFunction:
        if psi.grid != self.grid:
            raise GridMismatchError("propagator and state grids differ")
        return psi.with_values(np.conj(self.entries.T) @ psi.values)

    def norm_drift(self, psi: WaveFunction) -> float:
        """|  ||M psi|| / ||psi||  -  1 |, the unitarity defect on a state."""
        return abs(self.apply(psi).norm() / psi.norm() - 1.0)


def _kernel_base(tau: float, grid: Grid) -> np.ndarray:
    """Symmetric alpha=0 kernel matrix, built in row blocks to bound memory."""
    x = grid.points
    n = len(x)
    out = np.empty((n, n), dtype=np.complex128)
    pref = (-1j / np.sqrt(np.pi * 1j * tau)) * grid.dx
    x2 = x * x
    for i0 in range(0, n, _BLOCK_ROWS):
        i1 = min(i0 + _BLOCK_ROWS, n)
        xs = x[i0:i1, None]
        block = np.exp(1j * ((x2[i0:i1, None] + x2[None, :]) / (4.0 * tau)))
        block *= np.sin(xs * x[None, :] / (2.0 * tau))
        block *= pref
        out[i0:i1] = block
    return out


def kernel_propagator(alpha: float, tau: float, grid: Grid) -> PropagatorMatrix:
    """Exact-solution propagator U_alpha(tau) on a half-line grid.

    tau = 0 returns the identity (the 1/sqrt(tau) prefactor is singular; the
    limit is the identity by strong continuity).  For tau > 0 the x = 0 row
    and column vanish identically, so every step preserves the Dirichlet
    boundary condition exactly.
    """
    if grid.line is not Line.HALF:
        raise GridMismatchError("kernel propagator lives on the half-line")
    if tau < 0:
        raise ValueError("tau must be non-negative")
    if tau == 0:
        entries = np.eye(grid.npoints, dtype=np.complex128)
    else:
        entries = _kernel_base(tau, grid)
        if alpha != 0.0:
            gauge = np.exp(-1j * alpha * grid.points)
            entries *= gauge[:, None]
            entries *= np.conj(gauge)[None, :]
            entries *= np.exp(1j * alpha**2 * tau)
    return PropagatorMatrix(grid=grid, entries=entries, alpha=alpha, tau=tau,
                            scheme=Scheme.KERNEL, includes_alpha2_phase=True)


@dataclass(frozen=True, eq=False)
class DFTMatrix:
    """Quadrature Fourier matrix F[j,k] = exp(-i x_j x_k) dx / sqrt(2 pi).

    F is symmetric, so F^H = conj(F).  It approximates the continuum Fourier
    transform on states that are concentrated well inside [-xmax, xmax] in
    both position and frequency; F^H F acts as a band-limit projector.
    """

    grid: Grid
    entries: np.ndarray

    def apply(self, values: np.ndarray) -> np.ndarray:
        return self.entries @ values

    def adjoint_apply(self, values: np.ndarray) -> np.ndarray:
        return np.conj(self.entries) @ values


def dft_matrix(grid: Grid) -> DFTMatrix:
    if grid.line is not Line.FULL:
        raise GridMismatchError("the quadrature DFT is defined on the full line")
    x = grid.points
    n = len(x)
    entries = np.empty((n, n), dtype=np.complex128)
    scale = grid.dx / np.sqrt(2.0 * np.pi)
    for i0 in range(0, n, _BLOCK_ROWS):
        i1 = min(i0 + _BLOCK_ROWS, n)
        entries[i0:i1] = np.exp(-1j * (x[i0:i1, None] * x[None, :]))
        entries[i0:i1] *= scale
    return DFTMatrix(grid=grid, entries=entries)


def fourier_cycle_core(tau: float, grid: Grid, dft: DFTMatrix | None = None) -> np.ndarray:
    """Dense core C = F^H D(e^{-i tau x^2}) F; one GEMM per (tau, grid).

    The step pair derives from it by diagonal scalings: u0 = C^H and
    ua = D(e^{-i a |x|}) C D(e^{i a |x|}).
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    if dft is None:
        dft = dft_matrix(grid)
    F = dft.entries
    phase = np.exp(-1j * tau * grid.points**2)
    return np.conj(F) @ (phase[:, None] * F)


def fourier_step_pair(
    alpha: float,
    tau: float,
    grid: Grid,
    dft: DFTMatrix | None = None,
    core: np.ndarray | None = None,
) -> tuple[PropagatorMatrix, PropagatorMatrix]:
    """The (ua, u0) quadrature pair on a full-line grid.

    ua approximates e^{-i tau (p + alpha sgn x)^2} (alpha^2 phase omitted),
    u0 approximates e^{+i tau p^2}.
    """
    if grid.line is not Line.FULL:
        raise GridMismatchError("the Fourier pair is defined on the full line")
    if core is None:
        core = fourier_cycle_core(tau, grid, dft)
    u0 = np.conj(core.T)
    da = np.exp(-1j * alpha * np.abs(grid.points))
    ua = da[:, None] * core * np.conj(da)[None, :]
    mk = lambda m, a: PropagatorMatrix(grid=grid, entries=m, alpha=a, tau=tau,
                                       scheme=Scheme.FOURIER,
                                       includes_alpha2_phase=False)
    return mk(ua, alpha), mk(u0, 0.0)


def _shift_steps(s: float, dx: float) -> int:
    if s < 0:
        raise ValueError("shift must be non-negative")
    k = round(s / dx)
    if abs(s / dx - k) > 1e-9 * max(1.0, s / dx):
        raise ValueError(f"shift s={s} is not a multiple of dx={dx}")
    return int(k)


def shift_left(psi: WaveFunction, s: float) -> WaveFunction:
    """(L(s) psi)(x) = psi(x + s); mass below s leaves through the origin."""
    if psi.grid.line is not Line.HALF:
        raise GridMismatchError("shifts act on half-line wavefunctions")
    k = _shift_steps(s, psi.grid.dx)
    out = np.zeros_like(psi.values)
    if k < len(out):
        out[: len(out) - k] = psi.values[k:]
    return psi.with_values(out)


def shift_right(psi: WaveFunction, s: float) -> WaveFunction:
    """(R(s) psi)(x) = psi(x - s) for x >= s, else 0.

    Isometric on the half-line; on a finite grid the top s-worth of samples
    falls off the cut-off, so isometry holds for states that vanish there.
    """
    if psi.grid.line is not Line.HALF:
        raise GridMismatchError("shifts act on half-line wavefunctions")
    k = _shift_steps(s, psi.grid.dx)
    out = np.zeros_like(psi.values)
    if k < len(out):
        out[k:] = psi.values[: len(out) - k]
    return psi.with_values(out)


# Fourth-order finite-difference stencils (uniform grid).
_C1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_C2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_F1 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_F2 = np.array([45.0, -154.0, 214.0, -156.0, 61.0, -10.0]) / 12.0


def _apply_stencil(values: np.ndarray, dx: float, central, forward, power: int) -> np.ndarray:
    n = len(values)
    if n < len(forward) + 2:
        raise ValueError("grid too small for fourth-order stencils")
    out = np.empty_like(values)
    half = len(central) // 2
    acc = np.zeros(n - 2 * half, dtype=values.dtype)
    for j, c in enumerate(central):
        if c != 0.0:
            acc += c * values[j: n - 2 * half + j]
    out[half:n - half] = acc
    w = len(forward)
    for i in range(half):
        out[i] = np.dot(forward, values[i: i + w])
        sign = -1.0 if power % 2 else 1.0
        out[n - 1 - i] = sign * np.dot(forward, values[n - 1 - i - w + 1: n - i][::-1])
    out /= dx**power
    return out


def derivative(values: np.ndarray, dx: float) -> np.ndarray:
    """Fourth-order first derivative; one-sided stencils at the edges."""
    return _apply_stencil(values, dx, _C1, _F1, 1)


def second_derivative(values: np.ndarray, dx: float) -> np.ndarray:
    """Fourth-order second derivative; one-sided stencils at the edges."""
    return _apply_stencil(values, dx, _C2, _F2, 2)


def apply_hamiltonian(psi: WaveFunction, alpha: float) -> WaveFunction:
    """H_alpha psi = -psi'' - 2 i alpha psi' for Dirichlet psi.

    Realized by two fourth-order finite-difference passes.  Interior stencils
    never touch the boundary kink of the odd extension, so the error is
    O(dx^4) uniformly for states smooth on the closed half-line; a same-grid
    spectral application would be polluted by the slowly decaying momentum
    tail that the boundary induces.
    """
    if psi.grid.line is not Line.HALF:
        raise GridMismatchError("apply_hamiltonian expects a half-line state")
    scale = float(np.max(np.abs(psi.values))) or 1.0
    if abs(psi.values[0]) > 1e-8 * scale:
        raise ValueError("state does not satisfy the Dirichlet condition psi(0)=0")
    dx = psi.grid.dx
    d1 = derivative(psi.values, dx)
    d2 = second_derivative(psi.values, dx)
    return psi.with_values(-d2 - 2j * alpha * d1)


def free_evolve_line(values: np.ndarray, dx: float, t: float) -> np.ndarray:
    """e^{-i t p^2} on a full-line sample vector via the FFT.

    Band-limited (k_max = pi/dx) and exact in time; used for free evolution
    where the quadrature schemes' artifacts are unwanted (short-time
    coherence profiles).  Assumes the state is negligible near the grid ends
    (periodic wrap-around).
    """
    n = len(values)
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=dx)
    return np.fft.ifft(np.exp(-1j * t * k**2) * np.fft.fft(values))


def free_evolve_monopole(values: np.ndarray, x: np.ndarray, dx: float,
                         alpha: float, t: float) -> np.ndarray:
    """e^{-i t H_alpha} on odd full-line samples, via the gauge identity
    e^{-it(p + alpha sgn x)^2} = e^{-i alpha |x|} e^{-it p^2} e^{i alpha |x|}
    and the alpha^2 phase."""
    gauge = np.exp(1j * alpha * np.abs(x))
    out = free_evolve_line(gauge * values, dx, t)
    return np.exp(1j * alpha**2 * t) * np.conj(gauge) * out


def matrix_power(matrix: np.ndarray, n: int) -> np.ndarray:
    """Binary exponentiation (square and multiply), as in the reference runs.

    High powers of the coarsely discretized kernel legitimately blow up;
    callers treat that as data (divergence) rather than as an error here.
    """
    if n < 0:
        raise ValueError("power must be non-negative")
    with np.errstate(over="ignore", invalid="ignore"):
        return np.linalg.matrix_power(matrix, n)


def cache_dir() -> Path:
    override = os.environ.get(CACHE_ENV_VAR)
    if override:
        return Path(override)
    return Path.home() / ".cache" / "halfline-dd"


def propagator_cache_path(scheme: Scheme, alpha: float, tau: float,
                          dx: float, xmax: float, base: Path | None = None) -> Path:
    base = base or cache_dir()
    name = f"{Scheme(scheme).value}_a{alpha:+.6g}_tau{tau:.6g}_dx{dx:.6g}_xmax{xmax:.6g}.prop"
    return base / name


def save_propagator(matrix: PropagatorMatrix, path) -> None:
    """Binary cache: one JSON header line, then row-major little-endian
    float64 interleaved re/im."""
    header = {
        "format": CACHE_FORMAT,
        "scheme": matrix.scheme.value,
        "alpha": matrix.alpha,
        "tau": matrix.tau,
        "dx": matrix.grid.dx,
        "xmax": matrix.grid.xmax,
        "line": matrix.grid.line.value,
        "n": matrix.grid.npoints,
        "includes_alpha2_phase": matrix.includes_alpha2_phase,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode("ascii"))
        interleaved = np.empty(matrix.entries.shape + (2,), dtype="<f8")
        interleaved[..., 0] = matrix.entries.real
        interleaved[..., 1] = matrix.entries.imag
        fh.write(interleaved.tobytes())


def load_propagator(path) -> PropagatorMatrix:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("ascii"))
        if header.get("format") != CACHE_FORMAT:
            raise ValueError(f"unrecognized propagator cache format in {path}")
        n = header["n"]
        raw = np.frombuffer(fh.read(), dtype="<f8")
    if raw.size != 2 * n * n:
        raise ValueError("propagator cache payload size mismatch")
    raw = raw.reshape(n, n, 2)
    entries = raw[..., 0] + 1j * raw[..., 1]
    grid = build_grid(header["dx"], header["xmax"], Line(header["line"]))
    return PropagatorMatrix(grid=grid, entries=entries, alpha=header["alpha"],
                            tau=header["tau"], scheme=Scheme(header["scheme"]),
                            includes_alpha2_phase=header["includes_alpha2_phase"])
