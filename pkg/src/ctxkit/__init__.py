"""Contextuality as a resource: scenarios, behaviors, quantifiers and wirings."""

from .boxes import chain_scenario, chsh_scenario, cycle_scenario, pr_box, uniform_behavior
from .lp import LinearProgram, LPSolution, check_feasible, solve_lp
from .quantifiers import (
    NCModel,
    QuantifierResult,
    check_noncontextual,
    contextual_fraction,
    kl_divergence,
    l1_max_distance,
    l1_uniform_distance,
    mbqc_failure_bound,
    nu_linear_distance,
    quantify,
    relative_entropy_max,
    relative_entropy_uniform,
)
from .scenario import (
    Behavior,
    GlobalAssignment,
    NumericMode,
    Scenario,
    assignment_to_behavior,
    check_nondisturbance,
    controlled_choice,
    enumerate_global_assignments,
    marginalize,
    mix_behaviors,
    product_box,
    validate_scenario,
)
from .wirings import (
    NCWiring,
    PostProcessing,
    PreProcessing,
    apply_ncwiring,
    apply_postprocessing,
    apply_preprocessing,
    run_monotonicity_suite,
    run_preservation_suite,
    sample_random_ncwiring,
    validate_wiring,
)

__version__ = "0.1.0"
