"""Exact-arithmetic toolkit for concurrent stochastic games with reach and safety objectives."""

__version__ = "0.1.0"

from .analysis import (
    GapReport,
    mirror_strategy,
    nash_gap,
    optimality_gap,
    round_distribution,
    round_profile,
    strategy_patience,
)
from .bounds import BoundReport, bounds
from .families import (
    DuelValueTable,
    exact_duel_values,
    lift_strategy,
    project_strategy,
    purgatory,
    purgatory_duel,
    restricted_three_state_duel,
    safety_duel,
    three_state_duel,
)
from .game_model import (
    Distribution,
    DomainError,
    GameStructure,
    PlayerStationaryStrategy,
    StationaryStrategy,
    StrategyProfile,
    delta_min,
    distribution_patience,
    distribution_roundedness,
    validate_game,
    variation_distance,
)
from .matrix_game import MatrixGame, MatrixSolution, build_tri_matrix, closed_form_tri, solve_matrix_game
from .mdp import (
    InducedMDP,
    MarkovChain,
    absorption_probabilities,
    apply_replacement_set,
    fix_strategies,
    optimal_value,
)
from .simulate import simulate_play
from .value_iteration import greedy_strategy_from_values, local_matrix, value_iterate
