"""Figure builders over the simulator's CSV files.

Four figure kinds are supported, each re-validating the inequalities it
displays before anything is drawn:

    radius_time     extracted radius vs time with the exact-law overlay
    energy_budget   energy and cumulative dissipation vs time
    convergence     log-log radius error vs step size with a fitted slope
    slope_sandwich  metric-slope lower/upper bounds vs intra-step time

Validation failures raise ValidationError (schema problems) or
InvariantViolation (the data contradicts an inequality it is supposed to
satisfy); the latter can be overridden with force=True.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

__all__ = [
    "FigureSpec",
    "ValidationError",
    "InvariantViolation",
    "read_table",
    "plot",
    "FIGURE_KINDS",
]

_RC = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 120,
    "font.family": "DejaVu Sans",
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.hashsalt": "analysis-plots",
}


class ValidationError(ValueError):
    """Input file is missing, empty, or does not match the expected schema."""


class InvariantViolation(ValueError):
    """The data violates an inequality the figure is meant to illustrate."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: tuple[str, ...]
    output: str  # path stem; .png and .svg are appended
    title: str = ""
    force: bool = False
    labels: dict = field(default_factory=dict)


def read_table(path: str | Path) -> dict[str, np.ndarray]:
    """Read a hash-commented CSV into named float columns."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"input file {path} does not exist")
    header: list[str] | None = None
    rows: list[list[str]] = []
    for line in path.read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        if header is None:
            header = line.split(",")
        else:
            rows.append(line.split(","))
    if header is None or not rows:
        raise ValidationError(f"{path} holds no data rows")
    table = {}
    for j, name in enumerate(header):
        try:
            table[name] = np.array([float(r[j]) for r in rows])
        except (ValueError, IndexError) as exc:
            raise ValidationError(f"{path}: column {name!r} is not numeric") from exc
    return table


def _need(table: dict, columns: list[str], path: str) -> None:
    missing = [c for c in columns if c not in table]
    if missing:
        raise ValidationError(f"{path}: missing columns {missing}")


def _check(ok: bool, message: str, force: bool) -> None:
    if not ok and not force:
        raise InvariantViolation(message + " (use force to render anyway)")


def _save(fig, stem: str) -> list[str]:
    out = []
    for ext in ("png", "svg"):
        target = f"{stem}.{ext}"
        fig.savefig(target, metadata={"Date": None} if ext == "svg" else None)
        out.append(target)
    plt.close(fig)
    return out


def _fig_radius_time(spec: FigureSpec) -> list[str]:
    table = read_table(spec.inputs[0])
    _need(table, ["time", "radius_est", "radius_ref", "energy"], spec.inputs[0])
    energies = table["energy"]
    _check(
        bool(np.all(np.diff(energies) <= 1e-12)),
        "energy column is not nonincreasing",
        spec.force,
    )
    fig, ax = plt.subplots()
    ax.plot(table["time"], table["radius_est"], "o-", ms=3, lw=1, label="extracted radius")
    ref = table["radius_ref"]
    if np.all(np.isfinite(ref)):
        ax.plot(table["time"], ref, "k--", lw=1, label="exact law")
    ax.set_xlabel(spec.labels.get("x", "time"))
    ax.set_ylabel(spec.labels.get("y", "radius"))
    ax.set_title(spec.title or "interface radius vs time")
    ax.legend()
    return _save(fig, spec.output)


def _fig_energy_budget(spec: FigureSpec) -> list[str]:
    table = read_table(spec.inputs[0])
    _need(table, ["time", "energy", "dissipation"], spec.inputs[0])
    energies = table["energy"]
    _check(bool(np.all(np.diff(energies) <= 1e-12)), "energy column is not nonincreasing", spec.force)
    _check(bool(np.all(table["dissipation"] >= 0.0)), "negative dissipation entry", spec.force)
    times = table["time"]
    if len(times) > 1:
        h = times[1] - times[0]
        cumulative = np.cumsum(table["dissipation"] * h)
        _check(
            bool(energies[-1] + cumulative[-1] <= energies[0] + 1e-10),
            "dissipation total exceeds the energy drop",
            spec.force,
        )
    else:
        cumulative = np.zeros_like(times)
    fig, ax = plt.subplots()
    ax.plot(times, energies, "o-", ms=3, lw=1, label="energy")
    ax.plot(times, energies[0] - cumulative, "s--", ms=3, lw=1, label="initial energy - dissipation")
    ax.set_xlabel(spec.labels.get("x", "time"))
    ax.set_ylabel(spec.labels.get("y", "energy"))
    ax.set_title(spec.title or "energy budget")
    ax.legend()
    return _save(fig, spec.output)


def _fig_convergence(spec: FigureSpec) -> list[str]:
    table = read_table(spec.inputs[0])
    _need(table, ["h", "rel_err"], spec.inputs[0])
    order = np.argsort(table["h"])[::-1]
    hs, errs = table["h"][order], table["rel_err"][order]
    _check(bool(np.all(hs > 0) and np.all(errs > 0)), "nonpositive entries in log-log data", spec.force)
    _check(bool(np.all(np.diff(errs) < 0)), "radius error is not monotone in h", spec.force)
    slope, intercept = np.polyfit(np.log(hs), np.log(errs), 1)
    fig, ax = plt.subplots()
    ax.loglog(hs, errs, "o-", lw=1, label="radius error")
    ax.loglog(hs, np.exp(intercept) * hs**slope, "k:", lw=1, label=f"fit: slope {slope:.2f}")
    ax.set_xlabel(spec.labels.get("x", "step size h"))
    ax.set_ylabel(spec.labels.get("y", "relative radius error"))
    ax.set_title(spec.title or "convergence of the extracted radius")
    ax.legend()
    return _save(fig, spec.output)


def _fig_slope_sandwich(spec: FigureSpec) -> list[str]:
    table = read_table(spec.inputs[0])
    _need(table, ["r", "slope_upper", "slope_lower"], spec.inputs[0])
    lower, upper = table["slope_lower"], table["slope_upper"]
    finite = np.isfinite(lower)
    _check(
        bool(np.all(lower[finite] <= upper[finite] + 1e-8)),
        "slope lower bound exceeds the upper bound",
        spec.force,
    )
    fig, ax = plt.subplots()
    ax.semilogx(table["r"], upper, "o-", ms=3, lw=1, label="upper bound (distance / r)")
    if finite.any():
        ax.semilogx(table["r"][finite], lower[finite], "s-", ms=3, lw=1, label="lower bound (first variation)")
        ax.fill_between(table["r"][finite], lower[finite], upper[finite], alpha=0.2)
    ax.set_xlabel(spec.labels.get("x", "intra-step time r"))
    ax.set_ylabel(spec.labels.get("y", "metric slope"))
    ax.set_title(spec.title or "metric-slope sandwich")
    ax.legend()
    return _save(fig, spec.output)


FIGURE_KINDS = {
    "radius_time": _fig_radius_time,
    "energy_budget": _fig_energy_budget,
    "convergence": _fig_convergence,
    "slope_sandwich": _fig_slope_sandwich,
}


def plot(spec: FigureSpec) -> list[str]:
    """Render one figure; returns the written file paths (png and svg)."""
    if spec.kind not in FIGURE_KINDS:
        raise ValidationError(f"unknown figure kind {spec.kind!r}; choose from {sorted(FIGURE_KINDS)}")
    if not spec.inputs:
        raise ValidationError("figure spec needs at least one input CSV")
    with plt.rc_context(_RC):
        return FIGURE_KINDS[spec.kind](spec)
