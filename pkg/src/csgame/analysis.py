"""Strategy measurement and certification.

Every gap reported here is measured by solving an exact best-reply MDP; no
optimality claim is taken from a construction on trust.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Mapping, Sequence

from .game_model import (
    REACH,
    SAFETY,
    Distribution,
    DomainError,
    GameStructure,
    PlayerStationaryStrategy,
    StationaryStrategy,
    Strategy,
    StrategyProfile,
    as_rational,
    distribution_patience,
    distribution_roundedness,
)
from .families import duel_shape
from .mdp import (
    MarkovChain,
    absorption_probabilities,
    fix_strategies,
    initial_alive,
    optimal_value,
)
from .value_iteration import fixpoint_residual


def strategy_patience(sigma: Strategy) -> tuple[Fraction, int]:
    dists = sigma.distributions()
    if isinstance(sigma, PlayerStationaryStrategy):
        dists += [Distribution.point(a) for a in sigma.fallback.values()]
    if not dists:
        return Fraction(1), 1
    return (
        max(distribution_patience(d) for d in dists),
        max(distribution_roundedness(d) for d in dists),
    )


def mirror_strategy(g: GameStructure, sigma: StationaryStrategy) -> StationaryStrategy:
    """Hand a duel strategy to the other player, swapping the two chains.

    The duel is symmetric under exchanging players, chains and ``top``/``bot``
    together with reversing the action numbering, so action a at v{i}_{j}
    becomes action m+1-a at v{3-i}_{j}.
    """
    n, m = duel_shape(g)
    choice = {s: Distribution.point(0) for s in g.states}
    for side in (1, 2):
        for j in range(1, n + 1):
            source = sigma.at(g.state(f"v{side}_{j}"))
            choice[g.state(f"v{3 - side}_{j}")] = Distribution((m - 1 - a, p) for a, p in source.items())
    return StationaryStrategy(3 - sigma.player, choice)


# ---------------------------------------------------------------- gap reports


@dataclass(frozen=True)
class GapRow:
    player: int
    state: str
    value_claim: Fraction
    best_reply_value: Fraction
    gap: Fraction


@dataclass(frozen=True)
class GapReport:
    rows: tuple[GapRow, ...]
    witnesses: Mapping[int, Mapping[Hashable, int]] = field(default_factory=dict)

    @property
    def max_gap(self) -> Fraction:
        return max((row.gap for row in self.rows), default=Fraction(0))

    def gap(self, player: int, state: str) -> Fraction:
        for row in self.rows:
            if row.player == player and row.state == state:
                return row.gap
        raise KeyError((player, state))


def _label_name(g: GameStructure, label) -> str:
    if isinstance(label, tuple):
        s, alive = label
        return f"{g.name(s)}|{','.join(map(str, sorted(alive)))}"
    return g.name(label)


def optimality_gap(
    g: GameStructure, player: int, sigma: StationaryStrategy, reference: Sequence[Fraction]
) -> GapReport:
    """Gap between the reference value and what ``sigma`` guarantees, per state.

    Claims and guarantees are expressed in the evaluated player's own payoff.
    """
    if not g.is_zero_sum():
        raise DomainError("optimality gaps need a zero-sum game")
    if sigma.player != player:
        raise DomainError(f"strategy belongs to player {sigma.player}, not {player}")
    reference = tuple(as_rational(x) for x in reference)
    broken = [g.name(s) for s, r in fixpoint_residual(g, reference).items() if r != 0]
    if broken:
        raise DomainError("reference vector is not a fixpoint of the local games", broken)
    mdp = fix_strategies(g, {player: sigma})
    opponent_value, policy = optimal_value(mdp)
    rows = []
    for s in g.states:
        if player == 1:
            claim = reference[s]
            guaranteed = 1 - opponent_value[s]
        else:
            claim = 1 - reference[s]
            guaranteed = 1 - opponent_value[s]
        rows.append(GapRow(player, g.name(s), claim, guaranteed, max(Fraction(0), claim - guaranteed)))
    witness = {g.name(s): policy[s] for s in g.states}
    return GapReport(tuple(rows), {3 - player: witness})


def _objective_values(g: GameStructure, chain: MarkovChain, player: int) -> tuple[Fraction, ...]:
    objective = g.objective(player)
    labels = chain.labels
    product = bool(labels) and isinstance(labels[0], tuple)
    if objective.kind == REACH:
        hits = {i for i, lab in enumerate(labels) if (lab[0] if product else lab) in objective.targets}
        return absorption_probabilities(chain, hits)
    if product:
        lost = {i for i, (_, alive) in enumerate(labels) if player not in alive}
    else:
        lost = {i for i, s in enumerate(labels) if s not in objective.targets}
    return tuple(1 - x for x in absorption_probabilities(chain, lost))


def profile_payoffs(g: GameStructure, profile: StrategyProfile) -> dict[int, dict[int, Fraction]]:
    """u(G, s, profile, i) for every player i and game state s."""
    chain = fix_strategies(g, list(profile.strategies))
    out = {}
    for player in range(1, g.players + 1):
        values = _objective_values(g, chain, player)
        out[player] = {s: values[chain.index(_start_label(g, profile, s))] for s in g.states}
    return out


def _start_label(g: GameStructure, profile: StrategyProfile, s: int):
    return (s, initial_alive(g, s)) if profile.is_player_stationary else s


def nash_gap(g: GameStructure, profile: StrategyProfile, from_state: int | None = None) -> GapReport:
    """Best unilateral improvement of each player, measured exactly.

    Player-stationary profiles are evaluated on the (state, alive-set) product,
    where a pure player-stationary deviation is optimal.
    """
    all_safety = all(obj.kind == SAFETY for obj in g.objectives)
    if not (all_safety or g.is_zero_sum()):
        raise DomainError("Nash gaps are supported for all-safety or zero-sum games")
    if profile.players != g.players:
        raise DomainError(f"profile has {profile.players} players, game has {g.players}")
    payoffs = profile_payoffs(g, profile)
    states = list(g.states) if from_state is None else [from_state]
    rows = []
    witnesses = {}
    for player in range(1, g.players + 1):
        others = [sigma for sigma in profile.strategies if sigma.player != player]
        mdp = fix_strategies(g, others)
        best, policy = optimal_value(mdp)
        witnesses[player] = {_label_name(g, lab): policy[i] for i, lab in enumerate(mdp.labels)}
        for s in states:
            deviation = best[mdp.index(_start_label(g, profile, s))]
            current = payoffs[player][s]
            rows.append(GapRow(player, g.name(s), current, deviation, max(Fraction(0), deviation - current)))
    return GapReport(tuple(rows), witnesses)


# ---------------------------------------------------------------- rounding


def round_distribution(d: Distribution, q: int) -> Distribution:
    """Round to multiples of 1/q with every coordinate moving by less than 1/q.

    Coordinates are floored, then the missing mass is handed out one 1/q at a
    time: first to coordinates that would otherwise vanish, then by largest
    remainder, ties toward the smaller id. The support only shrinks when
    there is not enough missing mass to keep every tiny coordinate alive.
    """
    if q < len(d):
        raise DomainError(f"q = {q} is smaller than the support size {len(d)}")
    scaled = [(o, p * q) for o, p in d.items()]
    floors = {o: math.floor(x) for o, x in scaled}
    deficit = q - sum(floors.values())
    candidates = sorted(
        (o for o, x in scaled if x != floors[o]),
        key=lambda o: (floors[o] > 0, -(dict(scaled)[o] - floors[o]), o),
    )
    for o in candidates[:deficit]:
        floors[o] += 1
    return Distribution((o, Fraction(k, q)) for o, k in floors.items())


def round_strategy(sigma: Strategy, q: int) -> Strategy:
    if isinstance(sigma, StationaryStrategy):
        return StationaryStrategy(sigma.player, {s: round_distribution(d, q) for s, d in sigma.choice.items()})
    return PlayerStationaryStrategy(
        sigma.player,
        {key: round_distribution(d, q) for key, d in sigma.choice.items()},
        dict(sigma.fallback),
    )


def round_profile(profile: StrategyProfile, q: int) -> StrategyProfile:
    widest = max(len(d) for sigma in profile.strategies for d in sigma.distributions())
    if q < widest:
        raise DomainError(f"q = {q} is smaller than the largest support size {widest}")
    return StrategyProfile(tuple(round_strategy(sigma, q) for sigma in profile.strategies))
