from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from csgame.analysis import mirror_strategy, optimality_gap, strategy_patience
from csgame.families import (
    FAMILY_NAMES,
    BitSizeExceeded,
    duel_shape,
    exact_duel_values,
    lift_strategy,
    low_outcome_reply,
    pair_of_action,
    project_strategy,
    purgatory,
    purgatory_duel,
    restricted_three_state_duel,
    safe_optimal_profile,
    safety_duel,
    three_state_duel,
)
from csgame.game_model import (
    REACH,
    SAFETY,
    DomainError,
    Distribution,
    StationaryStrategy,
    delta_min,
    mix,
    validate_game,
)


def names(g, d):
    return {g.name(t): p for t, p in d.items()}


def test_family_names():
    assert set(FAMILY_NAMES) == {
        "purgatory", "purgatory-duel", "three-state-duel", "restricted-three-state-duel", "safety-duel",
    }


def test_purgatory_one_two_pattern():
    g = purgatory(1, 2)
    assert g.state_names == ("v1", "top", "bot")
    v1 = g.state("v1")
    table = [[names(g, g.delta(v1, (a1, a2))) for a2 in range(2)] for a1 in range(2)]
    assert table == [[{"top": 1}, {"bot": 1}], [{"v1": 1}, {"top": 1}]]
    assert delta_min(g) == 1
    assert g.objective(1).kind == REACH and g.objective(1).targets == {g.state("top")}


def test_purgatory_two_two():
    g = purgatory(2, 2)
    assert g.num_states == 4 and not validate_game(g)
    assert names(g, g.delta(g.state("v1"), (1, 1))) == {"v2": 1}
    assert names(g, g.delta(g.state("v2"), (0, 0))) == {"top": 1}
    assert names(g, g.delta(g.state("v2"), (1, 0))) == {"v1": 1}


def _duel_expected(j, side, n, a1, a2):
    low = "bot" if side == 1 else "top"
    high = "top" if side == 1 else "bot"
    if a1 == a2:
        return high if j == n else f"v{side}_{j + 1}"
    return "vs" if a1 < a2 else low


@pytest.mark.parametrize("n, m", [(1, 2), (2, 2), (2, 3)])
def test_purgatory_duel_case_table(n, m):
    g = purgatory_duel(n, m)
    assert g.num_states == 2 * n + 3 and not validate_game(g)
    assert duel_shape(g) == (n, m)
    assert names(g, g.delta(g.state("vs"), (0, 0))) == {"v1_1": Fraction(1, 2), "v2_1": Fraction(1, 2)}
    for side in (1, 2):
        for j in range(1, n + 1):
            s = g.state(f"v{side}_{j}")
            for a1 in range(m):
                for a2 in range(m):
                    assert names(g, g.delta(s, (a1, a2))) == {_duel_expected(j, side, n, a1, a2): 1}


def test_duel_shape_rejects_other_games():
    with pytest.raises(DomainError):
        duel_shape(purgatory(2, 2))


def _three_state_expected(m, p1, p2):
    (a1, b1), (a2, b2) = p1, p2
    side1 = _duel_expected(1, 1, 1, a1, a2)
    side2 = _duel_expected(1, 2, 1, b1, b2)
    out = {}
    for name in (side1, side2):
        out[name] = out.get(name, 0) + Fraction(1, 2)
    return out


@pytest.mark.parametrize("m", [1, 2, 3])
def test_three_state_duel_composes_two_duel_steps(m):
    g = three_state_duel(m)
    assert g.state_names == ("vs", "top", "bot")
    vs = g.state("vs")
    assert g.action_count(vs, 1) == m * m == g.action_count(vs, 2)
    for x in range(m * m):
        for y in range(m * m):
            p1, p2 = pair_of_action(g, 1, x), pair_of_action(g, 2, y)
            assert names(g, g.delta(vs, (x, y))) == _three_state_expected(m, p1, p2)


def test_three_state_action_order_is_lexicographic():
    g = three_state_duel(2)
    assert g.actions[g.state("vs")][0] == ("(1,1)", "(1,2)", "(2,1)", "(2,2)")


@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_restricted_three_state_duel(m):
    g = restricted_three_state_duel(m)
    vs = g.state("vs")
    assert g.action_count(vs, 1) == 2 * m - 1 == g.action_count(vs, 2)
    for x in range(g.action_count(vs, 1)):
        a, b = pair_of_action(g, 1, x)
        assert a == 0 or b == 0
    for y in range(g.action_count(vs, 2)):
        a, b = pair_of_action(g, 2, y)
        assert a == m - 1 or b == m - 1
    full = three_state_duel(m)
    for x in range(g.action_count(vs, 1)):
        for y in range(g.action_count(vs, 2)):
            p1, p2 = pair_of_action(g, 1, x), pair_of_action(g, 2, y)
            assert names(g, g.delta(vs, (x, y))) == _three_state_expected(m, p1, p2)
    assert not validate_game(full) and not validate_game(g)


def test_safety_duel_shapes():
    g = safety_duel(2, Fraction(1, 1000))
    assert g.num_states == 11 and not validate_game(g)
    assert delta_min(g) == Fraction(1, 1000)
    g = safety_duel(1, Fraction(1, 216))
    assert g.num_states == 7
    assert g.objective(1).kind == SAFETY
    assert g.objective(1).targets == frozenset(s for s in g.states if g.name(s) != "bot")
    assert g.objective(2).targets == frozenset(s for s in g.states if g.name(s) != "top")


def test_safety_duel_transitions():
    d = Fraction(1, 216)
    g = safety_duel(1, d)
    v1, v2 = g.state("v1"), g.state("v2")
    assert names(g, g.delta(v1, (0, 0))) == {"vs": 1 - d, "top": d}
    assert names(g, g.delta(v1, (0, 1))) == {"vs": 1 - d, "v2_1": d}
    assert names(g, g.delta(v1, (1, 0))) == {"bot": 1}
    assert names(g, g.delta(v2, (0, 0))) == {"vs": 1 - d, "bot": d}
    assert names(g, g.delta(v2, (1, 0))) == {"top": 1}
    assert names(g, g.delta(g.state("v1_1"), (0, 0))) == {"vs": 1 - d, "top": d}


@pytest.mark.parametrize("delta", [0, Fraction(1, 100), 1])
def test_safety_duel_rejects_delta(delta):
    with pytest.raises(DomainError):
        safety_duel(1, delta)


@pytest.mark.parametrize("bad", [(0, 2), (2, 0)])
def test_size_checks(bad):
    with pytest.raises(DomainError):
        purgatory(*bad)
    with pytest.raises(DomainError):
        purgatory_duel(*bad)


def test_duel_value_examples():
    t = exact_duel_values(1, 2)
    assert (t.value("vs"), t.value("v1_1"), t.value("v2_1")) == (Fraction(1, 2), Fraction(2, 3), Fraction(1, 3))
    t = exact_duel_values(2, 2)
    assert [t.value(x) for x in ("v1_2", "v1_1", "v2_1", "v2_2")] == [
        Fraction(2, 3), Fraction(8, 15), Fraction(7, 15), Fraction(1, 3),
    ]
    assert strategy_patience(t.player2) == (5, 5)
    assert strategy_patience(exact_duel_values(1, 2).player2) == (3, 3)


@pytest.mark.parametrize("n, m", [(n, m) for n in (1, 2, 3) for m in (2, 3)])
def test_duel_table_invariants(n, m):
    t = exact_duel_values(n, m)
    g = t.game
    floor = Fraction(1, m ** (n + 2))
    for j in range(1, n + 1):
        assert t.value(f"v1_{j}") > Fraction(1, 2) > t.value(f"v2_{j}")
    assert mirror_strategy(g, t.player2) == t.player1
    assert mirror_strategy(g, t.player1) == t.player2
    for s in g.states:
        if not g.is_absorbing(s):
            assert floor <= t.values[s] <= 1 - floor


def test_duel_bit_cap():
    with pytest.raises(BitSizeExceeded, match="bits"):
        exact_duel_values(3, 3, max_bits=20)


def test_project_uniform_gives_uniform_marginals():
    g3 = three_state_duel(3)
    tau = StationaryStrategy(2, {s: Distribution.uniform(range(g3.action_count(s, 2))) for s in g3.states})
    sigma = project_strategy(g3, tau)
    duel = purgatory_duel(1, 3)
    assert sigma.at(duel.state("v1_1")) == Distribution.uniform(range(3))
    assert sigma.at(duel.state("v2_1")) == Distribution.uniform(range(3))


@st.composite
def duel_one_strategies(draw, m=3):
    duel = purgatory_duel(1, m)
    choice = {s: Distribution.point(0) for s in duel.states}
    for name in ("v1_1", "v2_1"):
        weights = draw(st.lists(st.integers(0, 6), min_size=m, max_size=m).filter(any))
        choice[duel.state(name)] = Distribution(
            (a, Fraction(w, sum(weights))) for a, w in enumerate(weights) if w
        )
    return StationaryStrategy(draw(st.sampled_from((1, 2))), choice)


@given(duel_one_strategies())
def test_project_inverts_lift(sigma):
    assert project_strategy(three_state_duel(3), lift_strategy(sigma, 3)) == sigma


@st.composite
def three_state_strategies(draw, m=2):
    g3 = three_state_duel(m)
    optimal = lift_strategy(exact_duel_values(1, m).player1, m)
    player = draw(st.sampled_from((1, 2)))
    if player == 2:
        t = exact_duel_values(1, m)
        optimal = lift_strategy(t.player2, m)
    vs = g3.state("vs")
    k = g3.action_count(vs, player)
    weights = draw(st.lists(st.integers(1, 5), min_size=k, max_size=k))
    noise = Distribution((a, Fraction(w, sum(weights))) for a, w in enumerate(weights))
    eta = draw(st.fractions(0, Fraction(1, 5), max_denominator=20))
    choice = {s: Distribution.point(0) for s in g3.states}
    choice[vs] = mix([(1 - eta, optimal.at(vs)), (eta, noise)])
    return StationaryStrategy(player, choice)


@given(three_state_strategies())
def test_eps_optimality_transfers_through_projection(tau):
    m = 2
    g3 = three_state_duel(m)
    reference3 = (Fraction(1, 2), Fraction(1), Fraction(0))
    eps = optimality_gap(g3, tau.player, tau, reference3).gap(tau.player, "vs")
    table = exact_duel_values(1, m)
    projected = project_strategy(g3, tau)
    gap = optimality_gap(table.game, tau.player, projected, table.values).gap(tau.player, "vs")
    assert gap <= eps


def test_safe_optimal_weights():
    d = Fraction(1, 216)
    s1, s2 = safe_optimal_profile(1, d)
    g = safety_duel(1, d)
    heavy = (1 + 216) / Fraction(2 + 216 + d)
    assert s1.at(g.state("v1"))[0] == heavy
    assert s2.at(g.state("v1"))[1] == heavy
    assert s1.at(g.state("v1")) == s1.at(g.state("v2"))


def test_low_outcome_reply_rules():
    g = safety_duel(1, Fraction(1, 216))
    v1, v2 = g.state("v1"), g.state("v2")
    mixed = StationaryStrategy(1, {v1: Distribution.two_point(0, 1), v2: Distribution.point(0)})
    reply = low_outcome_reply(g, mixed)
    assert reply.at(v1) == Distribution.point(0)
    assert reply.at(v2) == Distribution.point(0)
    with pytest.raises(DomainError):
        low_outcome_reply(g, StationaryStrategy(2, {}))
