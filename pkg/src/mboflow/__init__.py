"""Threshold dynamics for mean curvature flow on the periodic unit torus,
instrumented with minimizing-movement diagnostics: interfacial energy,
induced metric, intermediate-time minimizers, slope bounds, per-step
descent inequalities, and interfacial pair-correlation estimators.
"""

__version__ = "0.1.0"

from .energy import (
    InequalityReport,
    LedgerEntry,
    ModulusResult,
    dissipation_step,
    energy,
    inequality_suite,
    metric,
    metric_sq,
    time_modulus,
)
from .interpolate import (
    BudgetReport,
    InterpolationRecord,
    StepCheckReport,
    default_r_grid,
    degiorgi_step_check,
    interpolate,
    interpolation_budget,
)
from .kernel import C0, HeatMultiplier, convolve, gaussian_identity_suite, heat_multiplier
from .measures import (
    ZQuadSpec,
    dissipation_density,
    interface_distance,
    mass_fraction_within,
    pair_measure,
    perimeter_estimate,
    sample_pair_measure,
)
from .reference import ExtinctionReached, ReferenceSolution, disc_dissipation_rate, reference_radius
from .scheme import (
    BruteForceResult,
    PinningWarning,
    Trajectory,
    brute_force_step,
    mm_functional,
    run,
    threshold_step,
)
from .torus import (
    Disc,
    Dumbbell,
    FullTorus,
    GridSpec,
    RandomBinary,
    ScalarField,
    Stripe,
    dft,
    evaluate_at_points,
    idft,
    integrate,
    is_indicator,
    load_snapshot,
    make_grid,
    make_small_grid,
    sample_shape,
    save_snapshot,
    shift,
)
from .variation import (
    AnalyticVectorField,
    SlopeLowerResult,
    VectorFieldBasis,
    constant_field,
    continuum_comparators,
    delta_energy,
    delta_metric_sq,
    dilationlike_field,
    make_trig_basis,
    slope_lower,
    transport,
    trig_mode_field,
)

__all__ = [name for name in dir() if not name.startswith("_")]
