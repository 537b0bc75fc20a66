"""Threshold dynamics: convolve with G_h, threshold at 1/2, repeat.

Each step is equivalently the minimizer of the movement functional

    (1/2h) d_h(u, chi_prev)^2 + E_h(u)   over [0,1]-valued u,

which is affine in u, so a binary minimizer exists and is produced by the
threshold rule (strictly above 1/2 maps to 1, everything else to 0).  The
exhaustive enumeration over all binary rasters on tiny grids is kept as an
oracle for this equivalence.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .energy import LedgerEntry, energy, metric_sq
from .kernel import HeatMultiplier, convolve_array, heat_multiplier
from .torus import GridSpec, ScalarField, integrate, is_indicator

__all__ = [
    "threshold_step",
    "mm_functional",
    "brute_force_step",
    "BruteForceResult",
    "Trajectory",
    "run",
    "PinningWarning",
    "BRUTE_FORCE_CELL_LIMIT",
]

BRUTE_FORCE_CELL_LIMIT = 16


class PinningWarning(UserWarning):
    """Raised when sqrt(h) is so close to the cell size that interfaces freeze."""


def threshold_step(chi: ScalarField, kernel: HeatMultiplier) -> ScalarField:
    """One update: 1 where G_h * chi > 1/2, else 0 (ties go to 0)."""
    if chi.grid != kernel.grid:
        raise ValueError("field and kernel live on different grids")
    conv = convolve_array(chi.values, kernel.h)
    return ScalarField(chi.grid, (conv > 0.5).astype(float))


def mm_functional(u: ScalarField, chi_prev: ScalarField, h: float) -> float:
    """Movement objective (1/2h) d_h(u, chi_prev)^2 + E_h(u)."""
    if u.grid != chi_prev.grid:
        raise ValueError("grid mismatch")
    return metric_sq(u, chi_prev, h) / (2.0 * h) + energy(u, h)


@dataclass(frozen=True)
class BruteForceResult:
    minimizer: ScalarField
    objective: float
    num_minimizers: int
    matches_threshold: bool


def brute_force_step(chi: ScalarField, h: float, tie_tol: float = 1e-11) -> BruteForceResult:
    """Exhaustive global minimizer of the movement objective over binary fields.

    Enumerates all 2^(cell count) binary rasters, so the grid must have at
    most BRUTE_FORCE_CELL_LIMIT cells.  Among objective ties (within
    tie_tol relative) the returned state is the threshold output when it is
    itself a minimizer, else the first tie found.
    """
    grid = chi.grid
    cells = grid.cell_count
    if cells > BRUTE_FORCE_CELL_LIMIT:
        raise ValueError(f"brute force enumeration limited to {BRUTE_FORCE_CELL_LIMIT} cells, grid has {cells}")
    if not is_indicator(chi):
        raise ValueError("brute force step requires an indicator field")

    # dense matrix of the convolution operator in the cell basis
    K = np.empty((cells, cells))
    for j in range(cells):
        e = np.zeros(cells)
        e[j] = 1.0
        K[:, j] = convolve_array(e.reshape(grid.shape), h).ravel()

    states = ((np.arange(2**cells)[:, None] >> np.arange(cells)) & 1).astype(float)
    vol = grid.cell_volume
    sqh = math.sqrt(h)
    conv_states = states @ K.T
    energies = (states.sum(axis=1) * vol - np.einsum("sc,sc->s", states, conv_states) * vol) / sqh
    delta = states - chi.values.ravel()
    dists = np.einsum("sc,sc->s", delta, delta @ K.T) * vol / sqh  # (1/2h) d_h^2
    objectives = dists + energies

    best = float(objectives.min())
    tol = tie_tol * max(1.0, abs(best))
    tie_idx = np.nonzero(objectives <= best + tol)[0]

    thr = threshold_step(chi, heat_multiplier(grid, h))
    thr_index = int(thr.values.ravel() @ (2.0 ** np.arange(cells)))
    matches = thr_index in set(int(i) for i in tie_idx)
    pick = thr_index if matches else int(tie_idx[0])
    minimizer = ScalarField(grid, states[pick].reshape(grid.shape))
    return BruteForceResult(minimizer, best, len(tie_idx), matches)


@dataclass(frozen=True)
class Trajectory:
    """Threshold-dynamics states chi^0..chi^N with their per-step ledger.

    Piecewise-constant in time: chi(t) = chi^n on [nh, (n+1)h) and
    chi(t) = chi^0 for t <= 0.
    """

    h: float
    grid: GridSpec
    fields: tuple[ScalarField, ...]
    ledger: tuple[LedgerEntry, ...]
    duration: float
    pinning_ratio: float  # sqrt(h) / dx, recorded for convergence studies

    @property
    def steps(self) -> int:
        return len(self.ledger) - 1

    def field_at(self, t: float) -> ScalarField:
        idx = 0 if t < 0 else min(int(math.floor(t / self.h)), self.steps)
        return self.fields[idx]

    def energy_drop(self) -> float:
        return self.ledger[0].energy - self.ledger[-1].energy

    def dissipation_sum(self) -> float:
        """sum_n (1/2h) d_h^2(chi^n, chi^{n-1}); bounded by E_h(chi^0) - E_h(chi^N)."""
        return sum(e.dissipation * self.h for e in self.ledger[1:])


def run(chi0: ScalarField, h: float, T: float, keep_fields: bool = True) -> Trajectory:
    """Iterate threshold steps until ceil(T/h) steps are done.

    Warns (does not fail) when sqrt(h) < 4 dx, the regime where thresholding
    pins to the grid.  With keep_fields=False only chi^0 and chi^N are
    retained (the ledger is always complete).
    """
    if T <= 0:
        raise ValueError("time horizon must be positive")
    if not is_indicator(chi0):
        raise ValueError("initial data must be an indicator field")
    grid = chi0.grid
    ratio = math.sqrt(h) / grid.dx
    if ratio < 4.0:
        warnings.warn(
            f"sqrt(h)/dx = {ratio:.2f} < 4: thresholding may pin to the grid",
            PinningWarning,
            stacklevel=2,
        )
    kernel = heat_multiplier(grid, h)
    steps = int(math.ceil(T / h))
    fields = [chi0]
    ledger = [LedgerEntry(0, 0.0, energy(chi0, h), 0.0, 0.0, integrate(chi0))]
    current = chi0
    for n in range(1, steps + 1):
        nxt = threshold_step(current, kernel)
        d2 = metric_sq(nxt, current, h)
        ledger.append(
            LedgerEntry(
                step=n,
                time=n * h,
                energy=energy(nxt, h),
                metric_increment=math.sqrt(max(d2, 0.0)),
                dissipation=d2 / (2.0 * h * h),
                volume=integrate(nxt),
            )
        )
        if keep_fields or n == steps:
            fields.append(nxt)
        current = nxt
    if not keep_fields:
        fields = [fields[0], current]
    return Trajectory(
        h=h,
        grid=grid,
        fields=tuple(fields),
        ledger=tuple(ledger),
        duration=float(T),
        pinning_ratio=ratio,
    )
