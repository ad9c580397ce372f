import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csgame.analysis import mirror_strategy
from csgame.families import exact_duel_values, purgatory, purgatory_duel, safe_optimal_profile, safety_duel
from csgame.game_model import (
    REACH,
    SAFETY,
    CapacityError,
    DomainError,
    Distribution,
    PlayerStationaryStrategy,
    StationaryStrategy,
    mix,
)
from csgame.mdp import (
    InducedMDP,
    MarkovChain,
    absorption_probabilities,
    alive_after,
    apply_replacement_set,
    chain_of_policy,
    closed_classes,
    finite_horizon_values,
    fix_strategies,
    initial_alive,
    optimal_value,
    policy_value,
    replacement_premise_holds,
    solve_linear,
    strongly_connected_components,
)
from oracles import chain_reach, mdp_value_by_enumeration


def uniform(g, player):
    return StationaryStrategy(player, {s: Distribution.uniform(range(g.action_count(s, player))) for s in g.states})


def test_uniform_purgatory_chain():
    g = purgatory(1, 2)
    chain = fix_strategies(g, [uniform(g, 1), uniform(g, 2)])
    assert isinstance(chain, MarkovChain)
    v1, top, bot = g.state("v1"), g.state("top"), g.state("bot")
    assert chain.transition[v1] == Distribution({v1: Fraction(1, 4), bot: Fraction(1, 4), top: Fraction(1, 2)})
    probs = absorption_probabilities(chain, {top})
    assert probs[v1] == Fraction(2, 3)
    assert probs[top] == 1 and probs[bot] == 0


def test_fixing_one_player_gives_mdp_for_the_other():
    table = exact_duel_values(1, 2)
    g = table.game
    mdp = fix_strategies(g, {2: table.player2})
    assert isinstance(mdp, InducedMDP)
    assert mdp.controller == 1
    assert mdp.actions[g.state("v1_1")] == 2 and mdp.actions[g.state("v2_1")] == 2
    assert mdp.kind == REACH and mdp.maximize


def test_player_stationary_profile_builds_alive_product():
    g = safety_duel(1, Fraction(1, 216))
    s1, s2 = safe_optimal_profile(1, Fraction(1, 216))
    chain = fix_strategies(g, [PlayerStationaryStrategy.from_stationary(s, 2) for s in (s1, s2)])
    labels = set(chain.labels)
    assert (g.state("vs"), frozenset({1, 2})) in labels
    assert (g.state("top"), frozenset({1})) in labels
    assert (g.state("bot"), frozenset({2})) in labels
    assert all(isinstance(lab, tuple) for lab in labels)


def test_alive_sets():
    g = safety_duel(1, Fraction(1, 216))
    assert initial_alive(g, g.state("vs")) == frozenset({1, 2})
    assert initial_alive(g, g.state("top")) == frozenset({1})
    assert alive_after(g, frozenset({1, 2}), g.state("bot")) == frozenset({2})
    assert alive_after(g, frozenset({2}), g.state("top")) == frozenset()


def test_fix_rejects_mixed_kinds_and_two_free_players():
    g = purgatory(1, 2)
    s1 = uniform(g, 1)
    s2 = PlayerStationaryStrategy.from_stationary(uniform(g, 2), 2)
    with pytest.raises(DomainError):
        fix_strategies(g, [s1, s2])
    with pytest.raises(DomainError):
        fix_strategies(g, [])


def test_product_capacity_limit():
    with pytest.raises(CapacityError):
        PlayerStationaryStrategy.from_stationary(StationaryStrategy(1, {}), 17)


def test_mirror_optimal_sigma1_holds_duel_to_half():
    table = exact_duel_values(1, 2)
    g = table.game
    sigma1 = mirror_strategy(g, table.player2)
    mdp = fix_strategies(g, {1: sigma1}).with_objective(REACH, {g.state("top")}, maximize=False)
    values, _ = optimal_value(mdp)
    assert values[g.state("vs")] == Fraction(1, 2)


def test_safety_duel_four_policies():
    g = safety_duel(1, Fraction(1, 216))
    s1, _ = safe_optimal_profile(1, Fraction(1, 216))
    mdp = fix_strategies(g, {1: s1})
    assert mdp.kind == SAFETY
    vs = g.state("vs")
    policies = [
        tuple(a if s == g.state("v1") else b if s == g.state("v2") else 0 for s in g.states)
        for a in range(2)
        for b in range(2)
    ]
    assert max(policy_value(mdp, p)[vs] for p in policies) == Fraction(1, 2)
    assert optimal_value(mdp)[0][vs] == Fraction(1, 2)


def test_single_action_mdp_equals_absorption():
    g = purgatory(1, 2)
    chain = fix_strategies(g, [uniform(g, 1), uniform(g, 2)])
    mdp = InducedMDP(
        chain.labels, 1, (1,) * len(chain.labels),
        {(i, 0): d for i, d in enumerate(chain.transition)}, REACH, frozenset({g.state("top")}),
    )
    assert optimal_value(mdp)[0] == absorption_probabilities(chain, {g.state("top")})


def test_closed_classes_and_components():
    succ = [[1], [0], [2, 3], [3]]
    components = sorted(sorted(c) for c in strongly_connected_components(succ))
    assert components == [[0, 1], [2], [3]]
    chain = MarkovChain(
        (0, 1, 2, 3),
        (
            Distribution.point(1),
            Distribution.point(0),
            Distribution({2: Fraction(1, 2), 3: Fraction(1, 2)}),
            Distribution.point(3),
        ),
    )
    assert sorted(sorted(c) for c in closed_classes(chain)) == [[0, 1], [3]]
    assert absorption_probabilities(chain, {3}) == (0, 0, 1, 1)


def test_solve_linear():
    x = solve_linear([[Fraction(2), Fraction(1)], [Fraction(1), Fraction(3)]], [Fraction(3), Fraction(5)])
    assert x == [Fraction(4, 5), Fraction(7, 5)]


def test_replacement_examples():
    table = exact_duel_values(1, 2)
    g = table.game
    mdp = fix_strategies(g, {1: table.player1})
    assert apply_replacement_set(mdp, ()) == mdp
    v, bot, vs = g.state("v2_1"), g.state("bot"), g.state("vs")
    action = next(a for a in range(mdp.actions[v]) if bot in mdp.transition[(v, a)])
    d = mdp.transition[(v, action)]
    weights = dict(d.items())
    weights[vs] = weights.get(vs, Fraction(0)) + weights.pop(bot)
    moved = apply_replacement_set(mdp, [(v, action, Distribution(weights))])
    assert moved.transition[(v, action)][bot] == 0
    assert all(moved.transition[k] == mdp.transition[k] for k in mdp.transition if k != (v, action))
    with pytest.raises(DomainError):
        apply_replacement_set(mdp, [(v, 9, Distribution.point(vs))])
    with pytest.raises(DomainError):
        apply_replacement_set(mdp, [(v, action, d), (v, action, d)])


def test_finite_horizon_values_match_value_iteration_direction():
    table = exact_duel_values(1, 2)
    g = table.game
    mdp = fix_strategies(g, {2: table.player2})
    horizon = finite_horizon_values(mdp, 40)
    best = optimal_value(mdp)[0]
    assert all(a <= b for v, w in zip(horizon, horizon[1:]) for a, b in zip(v, w))
    assert all(a <= b for a, b in zip(horizon[-1], best))


@st.composite
def random_mdps(draw):
    n = draw(st.integers(1, 5))
    actions = tuple(draw(st.integers(1, 3)) for _ in range(n))
    transition = {}
    for s in range(n):
        for a in range(actions[s]):
            succ = draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=3, unique=True))
            weights = draw(st.lists(st.integers(1, 4), min_size=len(succ), max_size=len(succ)))
            transition[(s, a)] = Distribution((t, Fraction(w, sum(weights))) for t, w in zip(succ, weights))
    targets = frozenset(draw(st.sets(st.integers(0, n - 1), max_size=n)))
    kind = draw(st.sampled_from((REACH, SAFETY)))
    return InducedMDP(tuple(range(n)), 1, actions, transition, kind, targets, draw(st.booleans()))


@given(random_mdps())
def test_policy_iteration_matches_enumeration(mdp):
    plain = {key: dict(d.items()) for key, d in mdp.transition.items()}
    expected = mdp_value_by_enumeration(mdp.actions, plain, mdp.kind, mdp.targets, mdp.maximize)
    values, policy = optimal_value(mdp)
    assert list(values) == expected
    assert policy_value(mdp, policy) == values
    assert all(0 <= a < k for a, k in zip(policy, mdp.actions))


@given(random_mdps(), st.integers(0, 2**32))
@settings(max_examples=40)
def test_positional_reply_beats_random_mixtures(mdp, seed):
    values, _ = optimal_value(mdp)
    rng = random.Random(seed)
    for _ in range(3):
        rows = []
        for s in range(mdp.num_states):
            weights = [rng.randint(0, 3) for _ in range(mdp.actions[s])]
            if not any(weights):
                weights[0] = 1
            total = sum(weights)
            d = mix((Fraction(w, total), mdp.transition[(s, a)]) for a, w in enumerate(weights) if w)
            rows.append(dict(d.items()))
        if mdp.kind == REACH:
            mixed = chain_reach(rows, set(mdp.targets))
        else:
            mixed = [1 - x for x in chain_reach(rows, set(range(mdp.num_states)) - mdp.targets)]
        if mdp.maximize:
            assert all(m <= v for m, v in zip(mixed, values))
        else:
            assert all(m >= v for m, v in zip(mixed, values))


@given(random_mdps(), st.integers(0, 2**32))
@settings(max_examples=40)
def test_replacement_monotone_when_premise_holds(mdp, seed):
    rng = random.Random(seed)
    mdp = mdp.with_objective(SAFETY, mdp.targets, maximize=True)
    horizon = finite_horizon_values(mdp, 12)
    final = horizon[-1]
    q = []
    for s in range(mdp.num_states):
        a = rng.randrange(mdp.actions[s])
        best = max(range(mdp.num_states), key=lambda t: final[t])
        q.append((s, a, Distribution.point(best)))
    if not replacement_premise_holds(mdp, q, 12):
        return
    before = optimal_value(mdp)[0]
    after = optimal_value(apply_replacement_set(mdp, q))[0]
    assert all(a <= b for a, b in zip(before, after))


def test_policy_chain_shape():
    g = purgatory_duel(1, 2)
    table = exact_duel_values(1, 2)
    mdp = fix_strategies(g, {2: table.player2})
    chain = chain_of_policy(mdp, (0,) * mdp.num_states)
    assert len(chain.transition) == mdp.num_states
