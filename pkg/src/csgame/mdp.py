"""Induced MDPs and Markov chains, exact absorption and exact optimal values.

Chains and MDPs index their states 0..N-1 and keep a ``labels`` tuple mapping
each index back to a game state, or to a (state, alive-set) pair for the
alive-set product used by player-stationary strategies.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Hashable, Mapping, Sequence

from .game_model import (
    MAX_ALIVE_PLAYERS,
    REACH,
    SAFETY,
    CapacityError,
    Distribution,
    DomainError,
    GameStructure,
    PlayerStationaryStrategy,
    StationaryStrategy,
    Strategy,
    check_strategy,
    mix,
)


@dataclass(frozen=True)
class MarkovChain:
    labels: tuple[Hashable, ...]
    transition: tuple[Distribution, ...]

    def index(self, label: Hashable) -> int:
        return self.labels.index(label)


@dataclass(frozen=True)
class InducedMDP:
    """One controlling player; ``maximize`` says whether it pushes the objective up or down."""

    labels: tuple[Hashable, ...]
    controller: int
    actions: tuple[int, ...]
    transition: Mapping[tuple[int, int], Distribution]
    kind: str
    targets: frozenset[int]
    maximize: bool = True

    def index(self, label: Hashable) -> int:
        return self.labels.index(label)

    @property
    def num_states(self) -> int:
        return len(self.labels)

    def with_objective(self, kind: str, targets, maximize: bool) -> "InducedMDP":
        return replace(self, kind=kind, targets=frozenset(targets), maximize=maximize)


PositionalPolicy = tuple[int, ...]
ReplacementSet = tuple[tuple[int, int, Distribution], ...]


# ---------------------------------------------------------------- construction


def alive_after(g: GameStructure, alive: frozenset[int], s: int) -> frozenset[int]:
    """Players still in the running after visiting s. Reach players never drop out."""
    return frozenset(
        i for i in alive if g.objective(i).kind == REACH or s in g.objective(i).targets
    )


def initial_alive(g: GameStructure, s: int) -> frozenset[int]:
    return alive_after(g, frozenset(range(1, g.players + 1)), s)


def _fixed_mixture(
    g: GameStructure,
    s: int,
    alive: frozenset[int] | None,
    fixed: Mapping[int, Strategy],
    free: int | None,
    free_action: int,
) -> Distribution:
    per_player = []
    for i in range(1, g.players + 1):
        if i == free:
            per_player.append(((free_action, Fraction(1)),))
        else:
            sigma = fixed[i]
            d = sigma.at(alive, s) if alive is not None else sigma.at(s)
            per_player.append(d.items())
    weighted = []
    for combo in itertools.product(*per_player):
        weight = Fraction(1)
        for _, p in combo:
            weight *= p
        weighted.append((weight, g.delta(s, tuple(a for a, _ in combo))))
    return mix(weighted)


def fix_strategies(
    g: GameStructure, fixed: Mapping[int, Strategy] | Sequence[Strategy]
) -> InducedMDP | MarkovChain:
    """Fix the given players' strategies.

    With every player fixed the result is a Markov chain; with exactly one free
    player it is an MDP for that player with the player's own objective,
    maximized. Player-stationary inputs produce the (state, alive-set) product,
    restricted to what is reachable from each state's initial alive-set.
    """
    if not isinstance(fixed, Mapping):
        fixed = {sigma.player: sigma for sigma in fixed}
    free_players = [i for i in range(1, g.players + 1) if i not in fixed]
    if len(free_players) > 1:
        raise DomainError(f"players {free_players} are unfixed; at most one may stay free")
    free = free_players[0] if free_players else None
    kinds = {type(sigma) for sigma in fixed.values()}
    if len(kinds) > 1:
        raise DomainError("cannot mix stationary and player-stationary strategies")
    for sigma in fixed.values():
        check_strategy(g, sigma)
    product = kinds == {PlayerStationaryStrategy}
    if product and g.players > MAX_ALIVE_PLAYERS:
        raise CapacityError(f"alive-set product supports at most {MAX_ALIVE_PLAYERS} players")

    def actions_at(s: int) -> int:
        return g.action_count(s, free) if free is not None else 1

    if product:
        start = [(s, initial_alive(g, s)) for s in g.states]
        labels: list[tuple[int, frozenset[int]]] = []
        position: dict = {}
        raw: dict[tuple[int, int], Distribution] = {}
        queue = list(start)
        for label in queue:
            if label in position:
                continue
            position[label] = len(labels)
            labels.append(label)
        cursor = 0
        while cursor < len(labels):
            s, alive = labels[cursor]
            for a in range(actions_at(s)):
                d = _fixed_mixture(g, s, alive, fixed, free, a)
                raw[(cursor, a)] = d
                for t in d:
                    nxt = (t, alive_after(g, alive, t))
                    if nxt not in position:
                        position[nxt] = len(labels)
                        labels.append(nxt)
            cursor += 1
        transition = {
            key: Distribution(
                (position[(t, alive_after(g, labels[key[0]][1], t))], p) for t, p in d.items()
            )
            for key, d in raw.items()
        }
        label_tuple = tuple(labels)
    else:
        label_tuple = tuple(g.states)
        transition = {
            (s, a): _fixed_mixture(g, s, None, fixed, free, a) for s in g.states for a in range(actions_at(s))
        }

    if free is None:
        return MarkovChain(label_tuple, tuple(transition[(i, 0)] for i in range(len(label_tuple))))

    objective = g.objective(free)
    if product:
        if objective.kind == SAFETY:
            targets = frozenset(i for i, (_, alive) in enumerate(label_tuple) if free in alive)
        else:
            targets = frozenset(i for i, (s, _) in enumerate(label_tuple) if s in objective.targets)
        counts = tuple(g.action_count(s, free) for s, _ in label_tuple)
    else:
        targets = objective.targets
        counts = tuple(g.action_count(s, free) for s in g.states)
    return InducedMDP(label_tuple, free, counts, transition, objective.kind, targets, True)


def chain_of_policy(mdp: InducedMDP, policy: Sequence[int]) -> MarkovChain:
    return MarkovChain(mdp.labels, tuple(mdp.transition[(s, policy[s])] for s in range(mdp.num_states)))


# ---------------------------------------------------------------- exact linear algebra


def solve_linear(matrix: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    """Gauss-Jordan elimination over the rationals for a nonsingular system."""
    n = len(matrix)
    rows = [matrix[i][:] + [rhs[i]] for i in range(n)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if rows[r][col] != 0), None)
        if pivot is None:
            raise ArithmeticError("singular linear system")
        rows[col], rows[pivot] = rows[pivot], rows[col]
        lead = rows[col][col]
        if lead != 1:
            rows[col] = [x / lead for x in rows[col]]
        for r in range(n):
            factor = rows[r][col]
            if r != col and factor != 0:
                base = rows[col]
                rows[r] = [x - factor * y if y else x for x, y in zip(rows[r], base)]
    return [rows[i][n] for i in range(n)]


# ---------------------------------------------------------------- graph analysis


def strongly_connected_components(successors: Sequence[Sequence[int]]) -> list[list[int]]:
    """Tarjan's algorithm, iterative; components are returned in reverse topological order."""
    n = len(successors)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    components: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, child = work.pop()
            if child == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            succ = successors[v]
            if child < len(succ):
                work.append((v, child + 1))
                w = succ[child]
                if index[w] == -1:
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
                continue
            if low[v] == index[v]:
                component = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    component.append(w)
                    if w == v:
                        break
                components.append(sorted(component))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    return components


def closed_classes(mc: MarkovChain) -> list[list[int]]:
    """Closed recurrent classes: strongly connected components with no exit."""
    successors = [list(d.support) for d in mc.transition]
    out = []
    for component in strongly_connected_components(successors):
        members = set(component)
        if all(t in members for s in component for t in successors[s]):
            out.append(component)
    return sorted(out)


def _can_reach(successors: Sequence[Sequence[int]], target: frozenset[int]) -> set[int]:
    predecessors: list[list[int]] = [[] for _ in successors]
    for s, succ in enumerate(successors):
        for t in succ:
            predecessors[t].append(s)
    seen = set(target)
    frontier = list(target)
    while frontier:
        t = frontier.pop()
        for s in predecessors[t]:
            if s not in seen:
                seen.add(s)
                frontier.append(s)
    return seen


def absorption_probabilities(mc: MarkovChain, target) -> tuple[Fraction, ...]:
    """Exact probability of ever visiting ``target`` from each state.

    States whose closed recurrent class misses the target, and more generally
    states with no positive path to it, get 0; the remaining transient
    states solve (I - P) x = P·1_target exactly.
    """
    target = frozenset(target)
    n = len(mc.labels)
    successors = [list(d.support) for d in mc.transition]
    zero = set()
    for component in closed_classes(mc):
        if not target.intersection(component):
            zero.update(component)
    reaching = _can_reach(successors, target) - zero
    transient = sorted(reaching - target)
    slot = {s: i for i, s in enumerate(transient)}
    matrix = [[Fraction(0)] * len(transient) for _ in transient]
    rhs = [Fraction(0)] * len(transient)
    for s in transient:
        row = slot[s]
        matrix[row][row] += 1
        for t, p in mc.transition[s].items():
            if t in target:
                rhs[row] += p
            elif t in slot:
                matrix[row][slot[t]] -= p
    solution = solve_linear(matrix, rhs) if transient else []
    values = [Fraction(0)] * n
    for s in target:
        values[s] = Fraction(1)
    for s in transient:
        values[s] = solution[slot[s]]
    return tuple(values)


# ---------------------------------------------------------------- optimal values


def _expected(d: Distribution, values: Sequence[Fraction]) -> Fraction:
    return sum((p * values[t] for t, p in d.items()), Fraction(0))


def _avoidable(mdp: InducedMDP, target: frozenset[int]) -> set[int]:
    """Greatest set of non-target states where some action keeps play inside the set."""
    keep = set(range(mdp.num_states)) - target
    changed = True
    while changed:
        changed = False
        for s in sorted(keep):
            if not any(set(mdp.transition[(s, a)].support) <= keep for a in range(mdp.actions[s])):
                keep.discard(s)
                changed = True
    return keep


def _reach_policy_iteration(mdp: InducedMDP, target: frozenset[int], maximize: bool):
    n = mdp.num_states
    policy = [0] * n
    frozen: set[int] = set(target)
    if not maximize:
        # States that can avoid the target forever have minimal value 0;
        # pin a staying action there so the remaining system has a unique fixpoint.
        avoid = _avoidable(mdp, target)
        for s in sorted(avoid):
            policy[s] = next(
                a for a in range(mdp.actions[s]) if set(mdp.transition[(s, a)].support) <= avoid
            )
        frozen |= avoid
    while True:
        values = absorption_probabilities(chain_of_policy(mdp, policy), target)
        changed = False
        for s in range(n):
            if s in frozen:
                continue
            current = _expected(mdp.transition[(s, policy[s])], values)
            best_action, best_value = policy[s], current
            for a in range(mdp.actions[s]):
                q = _expected(mdp.transition[(s, a)], values)
                better = q > best_value if maximize else q < best_value
                if better:
                    best_action, best_value = a, q
            if best_action != policy[s]:
                # Lexicographic tie-break among equally good strict improvements.
                best_action = min(
                    a for a in range(mdp.actions[s]) if _expected(mdp.transition[(s, a)], values) == best_value
                )
                policy[s] = best_action
                changed = True
        if not changed:
            return values, tuple(policy)


def optimal_value(mdp: InducedMDP) -> tuple[tuple[Fraction, ...], PositionalPolicy]:
    """Exact optimal value of the MDP objective and a positional witness.

    Safety is solved through reachability of the unsafe complement.
    """
    if mdp.kind == REACH:
        return _reach_policy_iteration(mdp, mdp.targets, mdp.maximize)
    unsafe = frozenset(range(mdp.num_states)) - mdp.targets
    reach, policy = _reach_policy_iteration(mdp, unsafe, not mdp.maximize)
    return tuple(1 - x for x in reach), policy


def policy_value(mdp: InducedMDP, policy: Sequence[int]) -> tuple[Fraction, ...]:
    chain = chain_of_policy(mdp, policy)
    if mdp.kind == REACH:
        return absorption_probabilities(chain, mdp.targets)
    unsafe = frozenset(range(mdp.num_states)) - mdp.targets
    return tuple(1 - x for x in absorption_probabilities(chain, unsafe))


# ---------------------------------------------------------------- replacement sets


def apply_replacement_set(mdp: InducedMDP, q: ReplacementSet) -> InducedMDP:
    seen = set()
    transition = dict(mdp.transition)
    for s, a, d in q:
        if (s, a) not in transition:
            raise DomainError(f"replacement names unknown state/action ({s}, {a})")
        if (s, a) in seen:
            raise DomainError(f"replacement lists ({s}, {a}) twice")
        seen.add((s, a))
        transition[(s, a)] = d
    return replace(mdp, transition=transition)


def finite_horizon_values(mdp: InducedMDP, horizon: int) -> list[tuple[Fraction, ...]]:
    """Backward induction v^0..v^horizon for the MDP objective and optimization sense."""
    n = mdp.num_states
    good = mdp.targets
    values = [tuple(Fraction(int(s in good)) for s in range(n))]
    pick = max if mdp.maximize else min
    for _ in range(horizon):
        prev = values[-1]
        nxt = []
        for s in range(n):
            if mdp.kind == REACH and s in good:
                nxt.append(Fraction(1))
            elif mdp.kind == SAFETY and s not in good:
                nxt.append(Fraction(0))
            else:
                nxt.append(pick(_expected(mdp.transition[(s, a)], prev) for a in range(mdp.actions[s])))
        values.append(tuple(nxt))
    return values


def replacement_premise_holds(mdp: InducedMDP, q: ReplacementSet, horizon: int) -> bool:
    """Check that every replacement weakly raises the expected horizon-t value for all t <= horizon.

    A True result means "verified up to the horizon", not a proof for all t.
    """
    for values in finite_horizon_values(mdp, horizon):
        for s, a, d in q:
            if _expected(mdp.transition[(s, a)], values) > _expected(d, values):
                return False
    return True
