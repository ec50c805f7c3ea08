"""Data-driven reachability of nonlinear systems via lifted linear models and zonotopes."""

from ._kernels import backend_name
from .dictionary import (
    Dictionary,
    builtin_dictionaries,
    estimate_L_psi,
    get_dictionary,
    identity_lti,
    poly2_exogenous,
    poly2_nonaffine,
    unicycle_trig,
)
from .errorsets import (
    ErrorSets,
    ResidualBank,
    epsilon_zonotope,
    estimate_lipschitz_and_delta,
    lifted_noise_zonotope,
    multi_step_residuals,
    residual_zonotopes,
)
from .identify import (
    Dataset,
    KoopmanModel,
    Trajectory,
    build_snapshots,
    fit_koopman,
    identify_model,
    split_AB,
)
from .reach import (
    ReachOptions,
    ReachResult,
    ReachStepError,
    lagrange_remainder,
    lift_initial_set,
    linearize,
    project_and_inflate,
    propagate_step,
    reach,
)
from .scenario import Scenario, default_scenario
from .sets import (
    IntervalBox,
    Zonotope,
    cartesian_product,
    contains_point,
    interval_eval,
    interval_hull,
    linear_map,
    minkowski_sum,
    reduce_order,
    sample_points,
    translate,
    zonotope_from_interval,
)
from .verify import (
    ComparisonResult,
    ContainmentReport,
    compare_pipelines,
    contains_points,
    interval_width_metrics,
    monte_carlo_containment,
    run_pipeline,
)

__version__ = "0.1.0"
