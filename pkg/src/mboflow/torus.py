"""Periodic scalar fields on the unit torus [0,1)^d.

Cell-centered rasters: cell j along an axis with n cells is centered at
(j + 1/2)/n.  All quadrature is plain cell averaging, which on the unit
torus is just the mean times 1.  The discrete Fourier transform uses the
convention

    F(k) = dV * sum_j f_j exp(-i k . x_j),   k = 2*pi*m,  m integer,

so that coefficients approximate Fourier-series coefficients and Parseval
holds exactly as  sum_k |F(k)|^2 = integrate(f^2).  Spectral operators
(convolutions, shifts, derivatives) act as plain multipliers and do not
depend on the phase convention.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "GridSpec",
    "ScalarField",
    "make_grid",
    "make_small_grid",
    "frequencies",
    "k_squared",
    "integrate",
    "inner",
    "dft",
    "idft",
    "shift",
    "evaluate_at_points",
    "Stripe",
    "Disc",
    "Dumbbell",
    "RandomBinary",
    "FullTorus",
    "sample_shape",
    "cell_centers",
    "meshgrid",
    "is_indicator",
    "save_snapshot",
    "load_snapshot",
]


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic raster of [0,1)^d; shape holds cells per axis."""

    shape: tuple[int, ...]

    def __post_init__(self):
        if not 1 <= len(self.shape) <= 3:
            raise ValueError(f"dimension must be 1, 2 or 3, got {len(self.shape)}")
        for n in self.shape:
            if not _is_power_of_two(n) or n < 2:
                raise ValueError(f"cells per axis must be a power of two >= 2, got {n}")

    @property
    def d(self) -> int:
        return len(self.shape)

    @property
    def n(self) -> int:
        """Cells per axis for isotropic grids."""
        if len(set(self.shape)) != 1:
            raise ValueError(f"grid is anisotropic: {self.shape}")
        return self.shape[0]

    @property
    def cell_count(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return 1.0 / self.cell_count

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple(1.0 / n for n in self.shape)

    @property
    def dx(self) -> float:
        """Largest cell spacing (the resolution that matters for pinning)."""
        return max(self.spacings)


def make_grid(d: int, n: int) -> GridSpec:
    """Isotropic simulation grid: d in {1,2,3}, n a power of two >= 8."""
    if d not in (1, 2, 3):
        raise ValueError(f"dimension must be 1, 2 or 3, got {d}")
    if not _is_power_of_two(n) or n < 8:
        raise ValueError(f"cells per axis must be a power of two >= 8, got {n}")
    return GridSpec((n,) * d)


def make_small_grid(shape: tuple[int, ...]) -> GridSpec:
    """Tiny (possibly anisotropic) grid for exhaustive-enumeration oracles.

    Relaxes the n >= 8 floor of make_grid; each axis still a power of two.
    """
    return GridSpec(tuple(int(n) for n in shape))


@dataclass(frozen=True)
class ScalarField:
    """Real raster on a grid.  Values are immutable after construction.

    Indicator fields take values in {0,1}; phase fields in [0,1].
    """

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def with_values(self, values: np.ndarray) -> "ScalarField":
        return ScalarField(self.grid, values)


IndicatorField = ScalarField  # {0,1}-valued special case
PhaseField = ScalarField  # [0,1]-valued special case


def is_indicator(f: ScalarField, tol: float = 0.0) -> bool:
    v = f.values
    return bool(np.all((np.abs(v) <= tol) | (np.abs(v - 1.0) <= tol)))


def cell_centers(grid: GridSpec, axis: int) -> np.ndarray:
    n = grid.shape[axis]
    return (np.arange(n) + 0.5) / n


def meshgrid(grid: GridSpec) -> list[np.ndarray]:
    """Cell-center coordinate arrays, broadcast to the full raster shape."""
    axes = [cell_centers(grid, ax) for ax in range(grid.d)]
    return list(np.meshgrid(*axes, indexing="ij"))


def frequencies(grid: GridSpec) -> list[np.ndarray]:
    """Angular frequencies k = 2*pi*m per axis, broadcastable to the raster.

    Integer lattice coordinates m run over (-n/2, n/2] up to the usual FFT
    ordering; |k|^2 is even in m so the Nyquist mode enters once.
    """
    out = []
    for ax, n in enumerate(grid.shape):
        k = 2.0 * np.pi * np.fft.fftfreq(n, d=1.0 / n)
        shape = [1] * grid.d
        shape[ax] = n
        out.append(k.reshape(shape))
    return out


def k_squared(grid: GridSpec) -> np.ndarray:
    ks = frequencies(grid)
    out = np.zeros(grid.shape)
    for k in ks:
        out = out + k * k
    return out


def integrate(f: ScalarField) -> float:
    """Cell-average quadrature of the integral over the torus."""
    return float(f.values.mean())


def inner(f: ScalarField, g: ScalarField) -> float:
    if f.grid != g.grid:
        raise ValueError("grid mismatch")
    return float((f.values * g.values).mean())


def _center_phase(grid: GridSpec, sign: float) -> np.ndarray:
    """exp(sign * i k . x0) with x0 the half-cell offset, broadcast product."""
    ph = np.ones(grid.shape, dtype=complex)
    for ax, k in enumerate(frequencies(grid)):
        ph = ph * np.exp(sign * 1j * k * (0.5 / grid.shape[ax]))
    return ph


def dft(f: ScalarField) -> np.ndarray:
    """Forward transform with the cell-centered, Parseval normalization."""
    return np.fft.fftn(f.values) * f.grid.cell_volume * _center_phase(f.grid, -1.0)


def idft(grid: GridSpec, spectrum: np.ndarray) -> ScalarField:
    """Inverse of dft; imaginary round-off is discarded."""
    if spectrum.shape != grid.shape:
        raise ValueError(f"spectrum shape {spectrum.shape} does not match grid {grid.shape}")
    vals = np.fft.ifftn(spectrum * _center_phase(grid, 1.0)) / grid.cell_volume
    return ScalarField(grid, np.real(vals))


def shift(f: ScalarField, offset) -> ScalarField:
    """f(x - offset) via spectral phase; exact for band-limited content."""
    offset = np.atleast_1d(np.asarray(offset, dtype=float))
    if offset.size != f.grid.d:
        raise ValueError("offset dimension mismatch")
    F = np.fft.fftn(f.values)
    for k, a in zip(frequencies(f.grid), offset):
        F = F * np.exp(-1j * k * a)
    return ScalarField(f.grid, np.real(np.fft.ifftn(F)))


def evaluate_at_points(f: ScalarField, points: np.ndarray) -> np.ndarray:
    """Evaluate the band-limited interpolant of f at arbitrary points.

    points: (P, d) absolute torus coordinates.  The interpolant matches the
    raster at cell centers; for even n the Nyquist mode is evaluated as a
    cosine so the result is real.  Cost is O(P * prod(n)) via one
    dimension-factorized dense transform, intended for moderate grids.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != f.grid.d:
        raise ValueError("points dimension mismatch")
    F = np.fft.fftn(f.values)
    shape = f.grid.shape
    phases = []
    for ax, n in enumerate(shape):
        m = np.rint(n * np.fft.fftfreq(n)).astype(int)
        y = pts[:, ax] - 0.5 / n
        P = np.exp(2j * np.pi * np.outer(m, y))
        if n % 2 == 0:
            P[np.nonzero(m == -n // 2)[0][0]] = np.cos(np.pi * n * y)
        phases.append(P)
    if f.grid.d == 1:
        vals = phases[0].T @ F.ravel() / shape[0]
        return np.real(vals)
    if f.grid.d == 2:
        T = F @ phases[1]
        vals = np.einsum("mp,mp->p", phases[0], T)
        return np.real(vals) / f.grid.cell_count
    # d == 3: contract innermost axes first, chunk over points to cap memory
    out = np.empty(len(pts), dtype=complex)
    step = max(1, 2**22 // (shape[0] * shape[1]))
    for lo in range(0, len(pts), step):
        sl = slice(lo, lo + step)
        T = np.tensordot(F, phases[2][:, sl], axes=(2, 0))  # (n0, n1, p)
        T = np.einsum("abp,bp->ap", T, phases[1][:, sl])
        out[sl] = np.einsum("ap,ap->p", T, phases[0][:, sl])
    return np.real(out) / f.grid.cell_count


# ---------------------------------------------------------------------------
# shape library


@dataclass(frozen=True)
class Stripe:
    """{x_1 < width}."""

    width: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.width < 1.0:
            raise ValueError(f"stripe width must lie in (0,1), got {self.width}")


@dataclass(frozen=True)
class Disc:
    """Ball of given radius under the torus distance."""

    radius: float
    center: tuple[float, ...] | None = None

    def __post_init__(self):
        if not 0.0 < self.radius < 0.5:
            raise ValueError(f"disc radius must lie in (0, 0.5), got {self.radius}")


@dataclass(frozen=True)
class Dumbbell:
    """Two discs joined by an axis-aligned bar along x_1."""

    radius: float = 0.12
    separation: float = 0.4
    bar_halfwidth: float = 0.03
    center: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError("dumbbell disc radius must be positive")
        if not 0.0 < self.separation < 1.0 - 2 * self.radius:
            raise ValueError("dumbbell separation out of range")
        if self.bar_halfwidth <= 0.0:
            raise ValueError("bar halfwidth must be positive")


@dataclass(frozen=True)
class RandomBinary:
    """Independent per-cell coin flips with the given fill fraction."""

    fill: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.fill < 1.0:
            raise ValueError(f"fill fraction must lie in (0,1), got {self.fill}")


@dataclass(frozen=True)
class FullTorus:
    """All ones."""


ShapeSpec = Stripe | Disc | Dumbbell | RandomBinary | FullTorus

# Generic off-lattice default center; breaks grid symmetries so threshold
# ties and commensurability artifacts stay non-generic.
DEFAULT_CENTER = (0.512317, 0.483643, 0.476191)


def _torus_dist_sq(grid: GridSpec, center) -> np.ndarray:
    coords = meshgrid(grid)
    total = np.zeros(grid.shape)
    for x, c in zip(coords, center):
        delta = np.abs(x - c)
        delta = np.minimum(delta, 1.0 - delta)
        total = total + delta * delta
    return total


def sample_shape(shape: ShapeSpec, grid: GridSpec) -> IndicatorField:
    """Indicator raster: 1 exactly at cell centers inside the shape."""
    if isinstance(shape, FullTorus):
        return ScalarField(grid, np.ones(grid.shape))
    if isinstance(shape, Stripe):
        x1 = meshgrid(grid)[0]
        return ScalarField(grid, (x1 < shape.width).astype(float))
    if isinstance(shape, Disc):
        center = shape.center or DEFAULT_CENTER[: grid.d]
        inside = _torus_dist_sq(grid, center) < shape.radius**2
        return ScalarField(grid, inside.astype(float))
    if isinstance(shape, Dumbbell):
        center = shape.center or DEFAULT_CENTER[: grid.d]
        half = shape.separation / 2.0
        c_left = (center[0] - half,) + tuple(center[1:])
        c_right = (center[0] + half,) + tuple(center[1:])
        inside = (_torus_dist_sq(grid, c_left) < shape.radius**2) | (
            _torus_dist_sq(grid, c_right) < shape.radius**2
        )
        coords = meshgrid(grid)
        in_bar = np.ones(grid.shape, dtype=bool)
        d1 = np.abs(coords[0] - center[0])
        in_bar &= np.minimum(d1, 1.0 - d1) <= half
        for x, c in zip(coords[1:], center[1:]):
            dd = np.abs(x - c)
            in_bar &= np.minimum(dd, 1.0 - dd) < shape.bar_halfwidth
        return ScalarField(grid, (inside | in_bar).astype(float))
    if isinstance(shape, RandomBinary):
        rng = np.random.default_rng(shape.seed)
        return ScalarField(grid, (rng.random(grid.shape) < shape.fill).astype(float))
    raise TypeError(f"unsupported shape spec: {shape!r}")


# ---------------------------------------------------------------------------
# snapshot files: little-endian float64 raster, row-major, with JSON sidecar


def save_snapshot(f: ScalarField, path: str | Path, name: str, time: float) -> None:
    path = Path(path)
    raw = np.ascontiguousarray(f.values, dtype="<f8")
    raw.tofile(path)
    sidecar = {"d": f.grid.d, "n": list(f.grid.shape), "name": name, "time": time}
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar, indent=2))


def load_snapshot(path: str | Path) -> tuple[ScalarField, dict]:
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    shape = tuple(meta["n"])
    raw = np.fromfile(path, dtype="<f8").reshape(shape)
    return ScalarField(GridSpec(shape), raw), meta
