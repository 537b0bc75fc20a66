"""First variations of the energy and the metric along vector-field flows.

delta_energy and delta_metric_sq evaluate the integrated-by-parts
representations that only ever convolve the configuration (never
differentiate it), so indicator rasters are legal inputs:

    dE(u).xi      = (1/sqrt h) int [ div(xi) ((1-u) G_h*u + u G_h*(1-u))
                                     + u [xi, grad G_h*](1-u) ]
    (1/2)(dd.xi)^2 = sqrt(h) int [ u xi . hess G_h*((1-u) xi)
                                   - u xi . grad G_h*((1-u) div xi)
                                   + u div xi  grad G_h*((1-u) xi)
                                   - u div xi  G_h*((1-u) div xi) ]

where [xi, grad G_h*] v = sum_i (xi_i d_i G_h * v - d_i G_h * (xi_i v)).

The metric-slope lower bound is assembled from box-feasible variations
instead: directions w = u(1-u) (-xi . grad u~) (u~ the band-limited
interpolant) vanish at the active bounds, so u + s w stays admissible, the
energy restricted to the line is exactly quadratic, and the induced
distance is exactly linear.  The resulting value of

    max_c  b.c - (1/2) c.Q c,   b_j = descent rate along w_j,
                                Q_jk = paired metric speed,

is a certified lower bound on (1/2)|grad E_h|^2 in exact arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .kernel import C0, convolve_array, deriv_convolve_array, _multiplier_array
from .torus import Disc, GridSpec, ScalarField, Stripe, evaluate_at_points, frequencies, meshgrid

__all__ = [
    "AnalyticVectorField",
    "constant_field",
    "trig_mode_field",
    "dilationlike_field",
    "VectorFieldBasis",
    "make_trig_basis",
    "transport",
    "delta_energy",
    "delta_metric_sq",
    "slope_lower",
    "SlopeLowerResult",
    "gram_matrix",
    "continuum_comparators",
]


@dataclass(frozen=True)
class AnalyticVectorField:
    """Smooth periodic vector field with closed-form derivatives.

    value(points) -> (P, d); divergence(points) -> (P,);
    jacobian(points) -> (P, d, d) with J[p, a, b] = d_b xi_a.
    """

    d: int
    value: Callable[[np.ndarray], np.ndarray]
    divergence: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray] | None = None

    def on_grid(self, grid: GridSpec) -> tuple[list[np.ndarray], np.ndarray]:
        pts = np.stack([x.ravel() for x in meshgrid(grid)], axis=-1)
        vals = self.value(pts)
        comps = [vals[:, ax].reshape(grid.shape) for ax in range(grid.d)]
        div = self.divergence(pts).reshape(grid.shape)
        return comps, div

    def max_norm(self, grid: GridSpec) -> float:
        comps, _ = self.on_grid(grid)
        return float(np.sqrt(sum(c * c for c in comps)).max())


def constant_field(direction) -> AnalyticVectorField:
    e = np.asarray(direction, dtype=float)
    d = e.size

    return AnalyticVectorField(
        d=d,
        value=lambda p: np.tile(e, (len(p), 1)),
        divergence=lambda p: np.zeros(len(p)),
        jacobian=lambda p: np.zeros((len(p), d, d)),
    )


def trig_mode_field(mode: tuple[int, ...], axis: int, phase: str = "cos") -> AnalyticVectorField:
    """xi = cos/sin(2 pi m . x) e_axis."""
    m = np.asarray(mode, dtype=float)
    d = m.size
    two_pi = 2.0 * np.pi

    def scalar(p):
        arg = two_pi * (p @ m)
        return np.cos(arg) if phase == "cos" else np.sin(arg)

    def dscalar(p):
        arg = two_pi * (p @ m)
        base = -np.sin(arg) if phase == "cos" else np.cos(arg)
        return two_pi * base[:, None] * m[None, :]  # (P, d): gradient of the scalar

    def value(p):
        out = np.zeros((len(p), d))
        out[:, axis] = scalar(p)
        return out

    def divergence(p):
        return dscalar(p)[:, axis]

    def jacobian(p):
        J = np.zeros((len(p), d, d))
        J[:, axis, :] = dscalar(p)
        return J

    return AnalyticVectorField(d=d, value=value, divergence=divergence, jacobian=jacobian)


def dilationlike_field(center, amplitude: float = 1.0) -> AnalyticVectorField:
    """Periodic field sin(2 pi (x_i - c_i))/(2 pi) per axis; near the center it
    matches the dilation x - c to cubic order."""
    c = np.asarray(center, dtype=float)
    d = c.size
    two_pi = 2.0 * np.pi

    def value(p):
        return amplitude * np.sin(two_pi * (p - c)) / two_pi

    def divergence(p):
        return amplitude * np.cos(two_pi * (p - c)).sum(axis=1)

    def jacobian(p):
        J = np.zeros((len(p), d, d))
        diag = amplitude * np.cos(two_pi * (p - c))
        for a in range(d):
            J[:, a, a] = diag[:, a]
        return J

    return AnalyticVectorField(d=d, value=value, divergence=divergence, jacobian=jacobian)


# ---------------------------------------------------------------------------
# transport


def transport(u: ScalarField, xi: AnalyticVectorField, s: float) -> ScalarField:
    """Pull u back along the flow of xi for time s (semi-Lagrangian).

    Backward characteristics are integrated with two midpoint (RK2)
    substeps; u is evaluated at the feet through its band-limited
    interpolant, so constant xi acting on a trigonometric field is exact.
    """
    if xi.d != u.grid.d:
        raise ValueError("vector field dimension mismatch")
    max_xi = xi.max_norm(u.grid)
    if abs(s) * max_xi > 0.25:
        raise ValueError(
            f"transport step too large: |s| max|xi| = {abs(s) * max_xi:.3f} > 0.25"
        )
    pts = np.stack([x.ravel() for x in meshgrid(u.grid)], axis=-1)
    y = pts.copy()
    dt = s / 2.0
    for _ in range(2):
        k1 = xi.value(y)
        y = y - dt * xi.value(y - 0.5 * dt * k1)
    vals = evaluate_at_points(u, y)
    return ScalarField(u.grid, vals.reshape(u.grid.shape))


# ---------------------------------------------------------------------------
# first variations (weak form: only convolutions of u appear)


def delta_energy(u: ScalarField, h: float, xi: AnalyticVectorField) -> float:
    """First variation of the energy along the flow of xi."""
    comps, div = xi.on_grid(u.grid)
    uv = u.values
    one_u = 1.0 - uv
    bulk = one_u * convolve_array(uv, h) + uv * convolve_array(one_u, h)
    comm = np.zeros_like(uv)
    for ax, xic in enumerate(comps):
        comm += xic * deriv_convolve_array(one_u, h, ax) - deriv_convolve_array(xic * one_u, h, ax)
    return float((div * bulk + uv * comm).mean()) / math.sqrt(h)


def delta_metric_sq(u: ScalarField, h: float, xi: AnalyticVectorField) -> float:
    """Half the squared first variation of the induced distance along xi.

    A quadratic form value; tiny negative round-off is possible.
    """
    grid = u.grid
    comps, div = xi.on_grid(grid)
    uv = u.values
    one_u = 1.0 - uv
    ks = frequencies(grid)
    m = _multiplier_array(grid.shape, h)
    spectrum = sum(np.fft.fftn(one_u * comps[ax]) * (1j * ks[ax]) for ax in range(grid.d))
    spectrum = (spectrum - np.fft.fftn(one_u * div)) * m
    total = 0.0
    for ax in range(grid.d):
        part = np.real(np.fft.ifftn(spectrum * (1j * ks[ax])))
        total += float((uv * comps[ax] * part).mean())
    scalar_part = np.real(np.fft.ifftn(spectrum))
    total += float((uv * div * scalar_part).mean())
    return math.sqrt(h) * total


# ---------------------------------------------------------------------------
# slope lower bound


@dataclass(frozen=True)
class VectorFieldBasis:
    """Finite family of smooth periodic vector fields."""

    fields: tuple[AnalyticVectorField, ...]

    def __post_init__(self):
        if not self.fields:
            raise ValueError("basis must be nonempty")

    def __len__(self) -> int:
        return len(self.fields)


def make_trig_basis(d: int, K: int = 4) -> VectorFieldBasis:
    """Trigonometric modes cos/sin(2 pi m . x) e_i, |m|_inf <= K, half lattice.

    Opposite modes span the same fields, so only one of {m, -m} is kept;
    the zero mode contributes the constant fields.
    """
    if K < 0:
        raise ValueError("mode cutoff must be nonnegative")
    fields: list[AnalyticVectorField] = []
    half_lattice = []
    for m in np.ndindex(*(2 * K + 1,) * d):
        mode = tuple(int(c) - K for c in m)
        # lexicographically positive representative of each {m, -m} pair
        if mode <= (0,) * d:
            continue
        half_lattice.append(mode)
    for axis in range(d):
        fields.append(constant_field(np.eye(d)[axis]))
        for mode in half_lattice:
            fields.append(trig_mode_field(mode, axis, "cos"))
            fields.append(trig_mode_field(mode, axis, "sin"))
    return VectorFieldBasis(tuple(fields))


@dataclass(frozen=True)
class SlopeLowerResult:
    value: float  # certified lower bound for |grad E_h(u)|
    objective: float  # the attained value of b.c - (1/2) c.Q c
    coefficients: np.ndarray
    gram_trace: float
    ridge: float


def _feasible_directions(u: ScalarField, basis: VectorFieldBasis) -> np.ndarray:
    """Directions w = u(1-u) (-xi . grad u~), normalized to unit L2 norm.

    Normalization only rescales coefficients (the spanned cone is the same)
    but keeps the Gram system well conditioned.  Rows that vanish, as they
    all do for binary u, are dropped.
    """
    grid = u.grid
    F = np.fft.fftn(u.values)
    ks = frequencies(grid)
    grad_u = [np.real(np.fft.ifftn(F * (1j * k))) for k in ks]
    mask = u.values * (1.0 - u.values)
    pts = np.stack([x.ravel() for x in meshgrid(grid)], axis=-1)
    rows = []
    for xi in basis.fields:
        vals = xi.value(pts)
        w = np.zeros(grid.shape)
        for ax in range(grid.d):
            w -= vals[:, ax].reshape(grid.shape) * grad_u[ax]
        rows.append((mask * w).ravel())
    W = np.array(rows)
    norms = np.sqrt((W * W).mean(axis=1))
    keep = norms > 1e-14 * max(float(norms.max(initial=0.0)), 1e-300)
    return W[keep] / norms[keep][:, None]


def gram_matrix(u: ScalarField, h: float, basis: VectorFieldBasis) -> tuple[np.ndarray, np.ndarray]:
    """(b, Q) of the slope bound: descent rates and paired metric speeds."""
    W = _feasible_directions(u, basis)
    grid = u.grid
    sqh = math.sqrt(h)
    if W.size == 0:
        return np.zeros(0), np.zeros((0, 0))
    drive = (1.0 - 2.0 * convolve_array(u.values, h)).ravel()
    cells = grid.cell_count
    b = -(W @ drive) / (cells * sqh)
    GW = np.empty_like(W)
    for j in range(W.shape[0]):
        GW[j] = convolve_array(W[j].reshape(grid.shape), h).ravel()
    Q = 2.0 * sqh * (W @ GW.T) / cells
    return b, 0.5 * (Q + Q.T)


def slope_lower(
    u: ScalarField,
    h: float,
    basis: VectorFieldBasis,
    ridge: float | None = None,
) -> SlopeLowerResult:
    """Certified lower bound for the metric slope of the energy at u.

    Maximizes the descent-versus-speed value over coefficient vectors; the
    value is evaluated with the assembled (b, Q) themselves, so any ridge
    only lowers the bound.  Binary u has no interior cells, hence no
    admissible directions in this family, and the bound degenerates to 0.

    The default ridge, 1e-5 trace(Q)/dim on unit-norm directions, sits on
    the flat plateau of the bound value while keeping the maximizing
    coefficients small; large coefficients would amplify the anchor
    solver's residual when the bound is compared against the interpolation
    upper bound.
    """
    b, Q = gram_matrix(u, h, basis)
    trace = float(np.trace(Q)) if Q.size else 0.0
    if ridge is None:
        ridge = 1e-5 * trace / len(b) if trace > 0 else 0.0
    if trace <= 0.0:
        return SlopeLowerResult(0.0, 0.0, np.zeros_like(b), trace, ridge)
    try:
        c = np.linalg.solve(Q + ridge * np.eye(len(b)), b)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"gram system singular beyond ridge {ridge:.3e}") from exc
    value = float(b @ c - 0.5 * c @ Q @ c)
    return SlopeLowerResult(math.sqrt(max(2.0 * value, 0.0)), value, c, trace, ridge)


# ---------------------------------------------------------------------------
# sharp-interface comparators on analytic shapes


def continuum_comparators(
    shape: Disc | Stripe,
    xi: AnalyticVectorField,
    points: int = 512,
) -> tuple[float, float]:
    """Sharp-interface limits of the two first variations on an analytic shape.

    Returns (a, b) with
        a = c0 * oint (div xi - nu . (grad xi) nu) ds
        b = c0 * oint (xi . nu)^2 ds
    by periodic trapezoid quadrature over the boundary parameterization
    (spectrally accurate for smooth integrands).
    """
    if xi.jacobian is None:
        raise ValueError("comparators need a vector field with a closed-form jacobian")
    if isinstance(shape, Disc):
        center = np.asarray(shape.center if shape.center is not None else (0.5, 0.5), dtype=float)
        theta = np.arange(points) * (2.0 * np.pi / points)
        nu = np.stack([np.cos(theta), np.sin(theta)], axis=-1)  # orientation drops out
        pts = center[None, :] + shape.radius * nu
        ds = 2.0 * np.pi * shape.radius / points
    elif isinstance(shape, Stripe):
        t = (np.arange(points) + 0.5) / points
        pts = np.concatenate(
            [np.stack([np.zeros(points), t], axis=-1), np.stack([np.full(points, shape.width), t], axis=-1)]
        )
        nu = np.concatenate([np.tile([1.0, 0.0], (points, 1)), np.tile([1.0, 0.0], (points, 1))])
        ds = 1.0 / points
    else:
        raise TypeError(f"unsupported analytic shape: {shape!r}")

    vals = xi.value(pts)
    div = xi.divergence(pts)
    J = xi.jacobian(pts)
    nuJnu = np.einsum("pa,pab,pb->p", nu, J, nu)
    a = C0 * float(np.sum(div - nuJnu)) * ds
    xi_nu = np.einsum("pa,pa->p", vals, nu)
    b = C0 * float(np.sum(xi_nu**2)) * ds
    return a, b
