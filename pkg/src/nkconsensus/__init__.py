"""Collective decision-making on NK fitness landscapes.

A group of M members forms opinions on N coupled binary decisions. Opinions
flip in continuous time at rates that combine consensus seeking on a
multiplex social network with self-interested payoff improvement on a random
rugged landscape. The package simulates the chain exactly, measures group
fitness and consensus, checks itself against exact enumeration on tiny
systems, and provides the mean-field consensus threshold.
"""

from .dynamics import (
    RateVector,
    TrajectoryRecord,
    compute_rates,
    gillespie_step,
    glauber_factor,
    payoff_delta,
    simulate_trajectory,
    transition_rate,
)
from .exact_oracle import (
    ExactModel,
    analytic_stationary,
    build_generator,
    check_detailed_balance,
    stationary_distribution,
    total_variation,
)
from .experiment import (
    ConfigError,
    ExperimentConfig,
    run_ensemble,
    sweep,
    validate,
)
from .landscape import (
    CompetenceMatrix,
    Landscape,
    fitness,
    generate_competence,
    generate_landscape,
    global_max,
    perceived_fitness,
)
from .meanfield import (
    MeanFieldSolution,
    critical_coupling,
    integrate_mean_field,
    magnetization_fixed_points,
)
from .metrics import (
    ObservableCurve,
    consensus,
    ensemble_average,
    group_fitness,
    majority_decision,
    steady_state_value,
)
from .multiplex import (
    Coupling,
    GroupState,
    Multiplex,
    build_complete_multiplex,
    index_to_member_decision,
    layer_conflict,
    member_decision_to_index,
    random_group_state,
    total_conflict,
)

__version__ = "0.1.0"
