"""Monte Carlo play of a fixed profile, as a statistical cross-check only.

Randomness comes from SplitMix64 (Steele, Lea and Flood 2014): a 64-bit
state advanced by the golden-ratio increment 0x9E3779B97F4A7C15 and mixed
with the multipliers 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB. Each episode
seeds its own generator from (seed, episode index), so totals do not depend
on the order in which episodes run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .game_model import REACH, DomainError, GameStructure, StrategyProfile
from .mdp import fix_strategies, initial_alive

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return _mix64(self.state)

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection, exact for any bound."""
        bits = bound.bit_length()
        while True:
            value = 0
            for _ in range((bits + 63) // 64):
                value = (value << 64) | self.next64()
            value >>= (-bits) % 64
            if value < bound:
                return value


def episode_seed(seed: int, episode: int) -> int:
    return _mix64((seed * GOLDEN_GAMMA + episode) & MASK64)


@dataclass(frozen=True)
class PlayerEstimate:
    player: int
    wins: int
    episodes: int
    undecided: int

    @property
    def frequency(self) -> float:
        return self.wins / self.episodes

    @property
    def standard_error(self) -> float:
        p = self.frequency
        return math.sqrt(p * (1 - p) / self.episodes)


def simulate_play(
    g: GameStructure,
    profile: StrategyProfile,
    horizon: int,
    episodes: int,
    seed: int,
    start: int | None = None,
) -> list[PlayerEstimate]:
    """Play ``episodes`` runs of at most ``horizon`` steps from ``start`` (default ``vs`` or state 0).

    A reach player wins on visiting a target; a safety player wins unless it
    leaves its safe set. Runs still open at the horizon count as undecided,
    which is a loss for reach players and a win for safety players.
    """
    if horizon < 0 or episodes < 1:
        raise DomainError("horizon must be >= 0 and episodes >= 1")
    if start is None:
        start = g.state("vs") if "vs" in g.state_names else 0
    chain = fix_strategies(g, list(profile.strategies))
    labels = chain.labels
    product = profile.is_player_stationary
    game_state = [lab[0] if product else lab for lab in labels]
    tables = []
    for i, d in enumerate(chain.transition):
        denominator = math.lcm(*(p.denominator for _, p in d.items()))
        cumulative, running = [], 0
        for outcome, p in d.items():
            running += p.numerator * (denominator // p.denominator)
            cumulative.append((running, outcome))
        tables.append((denominator, cumulative, d.support == (i,)))
    objectives = [g.objective(i) for i in range(1, g.players + 1)]
    wins = [0] * g.players
    undecided = [0] * g.players
    first = chain.index((start, initial_alive(g, start)) if product else start)
    for episode in range(episodes):
        rng = SplitMix64(episode_seed(seed, episode))
        current = first
        open_ = [True] * g.players
        won = [obj.kind != REACH for obj in objectives]

        def observe(index: int) -> None:
            s = game_state[index]
            for p, obj in enumerate(objectives):
                if not open_[p]:
                    continue
                if obj.kind == REACH and s in obj.targets:
                    won[p], open_[p] = True, False
                elif obj.kind != REACH and s not in obj.targets:
                    won[p], open_[p] = False, False

        observe(current)
        for _ in range(horizon):
            if not any(open_):
                break
            denominator, cumulative, absorbing = tables[current]
            if absorbing:
                break
            draw = rng.below(denominator)
            current = next(outcome for bound, outcome in cumulative if draw < bound)
            observe(current)
        for p in range(g.players):
            wins[p] += won[p]
            if open_[p] and not tables[current][2]:
                undecided[p] += 1
    return [PlayerEstimate(p + 1, wins[p], episodes, undecided[p]) for p in range(g.players)]
