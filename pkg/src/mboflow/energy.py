"""Approximate interfacial energy, induced metric, and their inequality suite.

For a [0,1]-valued configuration u and kernel time h,

    energy:  E_h(u)     = (1/sqrt(h)) int (1-u) (G_h * u) dx
    metric:  d_h(u,u')  = (2 sqrt(h) int |G_{h/2}*(u-u')|^2 dx)^(1/2)

The metric is evaluated spectrally from one transform of u - u'; the
literal convolve-then-integrate path is kept in the tests as an oracle.
Per-step dissipation is (1/(2 h^2)) d_h^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernel import convolve_array, _multiplier_array
from .torus import ScalarField, is_indicator

__all__ = [
    "energy",
    "metric",
    "metric_sq",
    "dissipation_step",
    "LedgerEntry",
    "SlackEntry",
    "InequalityReport",
    "inequality_suite",
    "time_modulus",
    "ModulusResult",
]

_RANGE_TOL = 1e-12


def _check_unit_range(values: np.ndarray, who: str) -> None:
    if values.min() < -_RANGE_TOL or values.max() > 1.0 + _RANGE_TOL:
        raise ValueError(
            f"{who} requires values in [0,1]; got range "
            f"[{values.min():.3e}, {values.max():.3e}]"
        )


def energy(u: ScalarField, h: float) -> float:
    """E_h(u); nonnegative, zero for constant 0/1, symmetric under u -> 1-u."""
    if h <= 0:
        raise ValueError("h must be positive")
    _check_unit_range(u.values, "energy")
    v = np.clip(u.values, 0.0, 1.0)
    return float(((1.0 - v) * convolve_array(v, h)).mean()) / math.sqrt(h)


def metric_sq(u: ScalarField, uprime: ScalarField, h: float) -> float:
    """d_h(u,u')^2 = 2 sqrt(h) sum_k exp(-h|k|^2/2) |F(u-u')(k)|^2."""
    if u.grid != uprime.grid:
        raise ValueError("grid mismatch")
    if h <= 0:
        raise ValueError("h must be positive")
    delta = u.values - uprime.values
    # |F|^2 with the Parseval normalization: sum equals integrate(delta^2)
    spec = np.abs(np.fft.fftn(delta)) ** 2 / delta.size**2
    m = _multiplier_array(delta.shape, h)
    return 2.0 * math.sqrt(h) * float(np.sum(m * spec))


def metric(u: ScalarField, uprime: ScalarField, h: float) -> float:
    return math.sqrt(max(metric_sq(u, uprime, h), 0.0))


def dissipation_step(chi: ScalarField, chi_prime: ScalarField, h: float) -> float:
    """(1/(2 h^2)) d_h(chi, chi')^2, the per-unit-time dissipation of a step."""
    return metric_sq(chi, chi_prime, h) / (2.0 * h * h)


@dataclass(frozen=True)
class LedgerEntry:
    """Per-step budget row of a trajectory."""

    step: int
    time: float
    energy: float
    metric_increment: float
    dissipation: float
    volume: float

    def __post_init__(self):
        if self.energy < 0 or self.metric_increment < 0:
            raise ValueError("ledger entries require nonnegative energy and metric increment")


# ---------------------------------------------------------------------------
# inequality suite


@dataclass(frozen=True)
class SlackEntry:
    name: str
    slack: float

    def ok(self, tol: float = -1e-10) -> bool:
        return self.slack >= tol


@dataclass(frozen=True)
class InequalityReport:
    entries: tuple[SlackEntry, ...]
    skipped: tuple[str, ...] = ()

    def slack(self, name: str) -> float:
        for e in self.entries:
            if e.name == name:
                return e.slack
        raise KeyError(name)

    @property
    def worst(self) -> float:
        return min(e.slack for e in self.entries)

    def all_ok(self, tol: float = -1e-10) -> bool:
        return all(e.ok(tol) for e in self.entries)


def inequality_suite(u: ScalarField, uprime: ScalarField, h: float, h0: float) -> InequalityReport:
    """Signed slacks of the six comparison inequalities between E_h and d_h.

    All hold with slack >= 0 in exact arithmetic:

      smoothing_l1        2 sqrt(h) E_h(u) - int |u - G_h*u|
      coarser_energy      E_h(u) - E_{h0}(u)                 [h0/h a square]
      energy_subadditive  sqrt(h)E_h + sqrt(h')E_{h'} - sqrt(h0)E_{h0},
                          with sqrt(h0) = sqrt(h) + sqrt(h')
      smoothing_l2        4 sqrt(h0) E_h(u) - int (u - G_{h0}*u)^2   [h0 >= h]
      l1_vs_metric        (1/2 sqrt(h)) d_h^2 + 2 sqrt(h)(E_h(u)+E_h(u'))
                          - int |u - u'|                     [indicators]
      pointwise_overlap   min over cells of (1-u)u' + u(1-u') - |u-u'|

    l1_vs_metric only holds for indicator inputs; with phase-field inputs it
    is omitted and recorded in the report's skipped tuple.
    """
    if u.grid != uprime.grid:
        raise ValueError("grid mismatch")
    if h <= 0 or h0 <= 0:
        raise ValueError("kernel times must be positive")
    if h0 < h:
        raise ValueError("coarser_energy / smoothing_l2 require h0 >= h")
    ratio_root = math.sqrt(h0 / h)
    if abs(ratio_root - round(ratio_root)) > 1e-9:
        raise ValueError(
            f"coarser_energy requires h0/h to be a perfect square, got h0/h = {h0 / h}"
        )
    binary_inputs = is_indicator(u, tol=_RANGE_TOL) and is_indicator(uprime, tol=_RANGE_TOL)

    uv, upv = u.values, uprime.values
    sq_h, sq_h0 = math.sqrt(h), math.sqrt(h0)
    E_h_u = energy(u, h)
    E_h0_u = energy(u, h0)

    s_smooth1 = 2.0 * sq_h * E_h_u - float(np.abs(uv - convolve_array(uv, h)).mean())
    s_coarser = E_h_u - E_h0_u

    hp = (sq_h0 - sq_h) ** 2
    if hp <= 0:
        raise ValueError("energy_subadditive requires h0 > h")
    s_subadd = sq_h * E_h_u + math.sqrt(hp) * energy(u, hp) - sq_h0 * E_h0_u

    s_smooth2 = 4.0 * sq_h0 * E_h_u - float(((uv - convolve_array(uv, h0)) ** 2).mean())

    s_pw = float(np.min((1.0 - uv) * upv + uv * (1.0 - upv) - np.abs(uv - upv)))

    entries = [
        SlackEntry("smoothing_l1", s_smooth1),
        SlackEntry("coarser_energy", s_coarser),
        SlackEntry("energy_subadditive", s_subadd),
        SlackEntry("smoothing_l2", s_smooth2),
        SlackEntry("pointwise_overlap", s_pw),
    ]
    skipped: tuple[str, ...] = ()
    if binary_inputs:
        s_l1 = (
            metric_sq(u, uprime, h) / (2.0 * sq_h)
            + 2.0 * sq_h * (E_h_u + energy(uprime, h))
            - float(np.abs(uv - upv).mean())
        )
        entries.insert(4, SlackEntry("l1_vs_metric", s_l1))
    else:
        skipped = ("l1_vs_metric",)
    return InequalityReport(tuple(entries), skipped)


# ---------------------------------------------------------------------------
# modulus of continuity in time


@dataclass(frozen=True)
class ModulusResult:
    value: float  # I(s) = int int |chi(t) - chi(t-s)| dx dt over t in (s, T)
    bound: float  # 4 C0 sqrt(s)
    c0_const: float  # trajectory constant C0


def time_modulus(traj, s: float) -> ModulusResult:
    """Exact I(s) for a piecewise-constant-in-time trajectory and its bound.

    The bound constant is computed from the same trajectory:
    C0 = int_h^T (1/2h^2) d_h^2(chi(t), chi(t-h)) dt + 4 int_0^T E_h(chi(t)) dt.
    """
    h, T = traj.h, traj.duration
    if not 0.0 <= s <= min(1.0, T):
        raise ValueError(f"time shift must lie in [0, min(1,T)], got {s}")
    if len(traj.fields) != traj.steps + 1:
        raise ValueError("time_modulus needs a trajectory with all fields retained")

    # trajectory constant, exact piecewise integration
    diss_int = 0.0
    energy_int = 0.0
    for entry in traj.ledger:
        lo, hi = entry.step * h, (entry.step + 1) * h
        energy_int += max(0.0, min(hi, T) - lo) * entry.energy if lo < T else 0.0
        if entry.step >= 1:
            seg = max(0.0, min(hi, T) - max(lo, h))
            diss_int += seg * entry.dissipation
    c0_const = diss_int + 4.0 * energy_int

    bound = 4.0 * c0_const * math.sqrt(s)
    if s == 0.0:
        return ModulusResult(0.0, bound, c0_const)

    # exact breakpoints of t -> (floor(t/h), floor((t-s)/h)) on (s, T)
    n_max = int(math.ceil(T / h)) + 1
    cuts = {s, T}
    for k in range(0, n_max + 1):
        for t in (k * h, k * h + s):
            if s < t < T:
                cuts.add(t)
    cuts = sorted(cuts)

    cache: dict[tuple[int, int], float] = {}

    def l1_pair(i: int, j: int) -> float:
        if i == j:
            return 0.0
        key = (min(i, j), max(i, j))
        if key not in cache:
            cache[key] = float(np.abs(traj.fields[key[0]].values - traj.fields[key[1]].values).mean())
        return cache[key]

    total = 0.0
    last = len(traj.fields) - 1
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (lo + hi)
        i = min(int(math.floor(mid / h)), last)
        j = min(max(int(math.floor((mid - s) / h)), 0), last)
        total += (hi - lo) * l1_pair(i, j)
    return ModulusResult(total, bound, c0_const)
