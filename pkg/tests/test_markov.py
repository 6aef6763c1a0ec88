from collections import Counter

import numpy as np
import pytest

from models.markov import (CandidateSet, Scenario, TransitionTable, estimate_transitions,
                           generalized_chain, next_state_candidates, predict_states,
                           resolve_state, rollout, select_state)
from models.quantizer import StateSequence
from utils.errors import DomainError, SizeError


def _sequence(states, s=None):
    return StateSequence(np.array(states), s or max(states), 1)


def _candidates(*states):
    return CandidateSet(tuple(states), 1.0, 1)


def test_alternating_order_one():
    table = estimate_transitions(_sequence([1, 2, 1, 2, 1]), 1)
    np.testing.assert_array_equal(table.probabilities((1,)), [0, 1])
    np.testing.assert_array_equal(table.probabilities((2,)), [1, 0])


def test_alternating_order_two():
    table = estimate_transitions(_sequence([1, 2, 1, 2, 1]), 2)
    np.testing.assert_array_equal(table.probabilities((1, 2)), [1, 0])
    np.testing.assert_array_equal(table.probabilities((2, 1)), [0, 1])
    assert table.history_totals == {(1, 2): 2, (2, 1): 1}


def test_split_history():
    table = estimate_transitions(_sequence([1, 1, 2, 2]), 1)
    np.testing.assert_array_equal(table.probabilities((1,)), [0.5, 0.5])


def test_unobserved_history():
    table = estimate_transitions(_sequence([1, 2, 1, 2, 1]), 1)
    with pytest.raises(DomainError):
        table.probabilities((3,))


def test_sequence_too_short():
    with pytest.raises(SizeError):
        estimate_transitions(_sequence([1, 2]), 2)


def test_rows_are_stochastic(rng):
    for _ in range(50):
        states = rng.integers(1, 5, size=60)
        table = estimate_transitions(StateSequence(states, 4, 1), 3)
        for history in table.counts:
            assert table.probabilities(history).sum() == pytest.approx(1.0, abs=1e-12)


def test_counts_match_brute_force(rng):
    for _ in range(200):
        s = int(rng.integers(2, 5))
        order = int(rng.integers(1, 4))
        length = int(rng.integers(order + 1, 51))
        states = [int(x) for x in rng.integers(1, s + 1, size=length)]
        expected = Counter(tuple(states[i:i + order + 1]) for i in range(length - order))
        table = estimate_transitions(StateSequence(np.array(states), s, 1), order)
        observed = Counter()
        for history, row in table.counts.items():
            for index in np.flatnonzero(row):
                observed[history + (int(index) + 1,)] = int(row[index])
        assert observed == expected
        np.testing.assert_array_equal(table.marginal, np.bincount(states, minlength=s + 1)[1:])


def test_generalized_chain_matches_tuple_chain(rng):
    states = [int(x) for x in rng.integers(1, 4, size=120)]
    order = 2
    table = estimate_transitions(StateSequence(np.array(states), 3, 1), order)
    graph = generalized_chain(table)

    # first-order chain over the encoded r-tuples
    tuples = [tuple(states[i:i + order]) for i in range(len(states) - order + 1)]
    pairs = Counter(zip(tuples[:-1], tuples[1:]))
    assert {(a, b): c for (a, b), c in pairs.items()} == \
        {(a, b): data['count'] for a, b, data in graph.edges(data=True)}
    for node in table.counts:
        assert sum(d['probability'] for _, _, d in graph.out_edges(node, data=True)) == \
            pytest.approx(1.0, abs=1e-12)


def _chain_rollout(graph, seed, horizon, delta, center, scenario):
    """Most-probable-state walk over the first-order chain, up to the first unseen node"""
    node = tuple(seed)
    states = []
    for _ in range(horizon):
        if node not in graph or graph.out_degree(node) == 0:
            break
        probs = {target[-1]: data['probability']
                 for _, target, data in graph.out_edges(node, data=True)}
        top = max(probs.values())
        members = tuple(sorted(j for j, p in probs.items() if p >= top - delta - 1e-12))
        state = select_state(CandidateSet(members, top, len(node)), center, scenario)
        states.append(state)
        node = node[1:] + (state,)
    return states


def test_generalized_chain_predicts_like_order_r_table(rng):
    compared = 0
    for _ in range(200):
        s = int(rng.integers(2, 5))
        order = int(rng.integers(1, 4))
        length = int(rng.integers(order + 1, 51))
        states = rng.integers(1, s + 1, size=length)
        table = estimate_transitions(StateSequence(states, s, 1), order)
        graph = generalized_chain(table)
        delta = float(rng.choice([0.0, 0.05, 0.1]))
        center = int(rng.integers(1, s + 1))
        seeds = [tuple(int(x) for x in states[-order:])] + sorted(table.counts)
        for seed in seeds:
            for scenario in Scenario:
                expected = _chain_rollout(graph, seed, 10, delta, center, scenario)
                predicted = predict_states(table, seed, 10, delta, 1, center, scenario)
                assert predicted.states[:len(expected)].tolist() == expected
                compared += len(expected)
    assert compared > 0


def test_candidates_deterministic():
    table = estimate_transitions(_sequence([1, 2, 1, 2, 1]), 1)
    candidates = next_state_candidates(table, (1,), 0.0)
    assert candidates.states == (2,)
    assert candidates.max_prob == 1.0
    assert candidates.order_used == 1


def test_candidates_within_delta():
    row = np.array([8, 7, 5])
    table = TransitionTable(1, 3, ({(): row}, {(1,): row}))
    assert next_state_candidates(table, (1,), 0.05).states == (1, 2)
    assert next_state_candidates(table, (1,), 0.0).states == (1,)
    assert next_state_candidates(table, (1,), 0.15).states == (1, 2, 3)


def test_back_off_to_shorter_history():
    table = estimate_transitions(_sequence([1, 2, 1, 2, 1]), 2)
    candidates = next_state_candidates(table, (2, 2), 0.0)
    assert candidates.states == (1,)
    assert candidates.order_used == 1


def test_back_off_to_marginal():
    table = estimate_transitions(_sequence([1, 2, 1, 2, 1]), 2)
    candidates = next_state_candidates(table, (1, 2), 0.0, n_min=100)
    assert candidates.order_used == 0
    assert candidates.states == (1,)
    assert candidates.max_prob == pytest.approx(0.6)


def test_invalid_delta():
    table = estimate_transitions(_sequence([1, 2, 1, 2, 1]), 1)
    with pytest.raises(DomainError):
        next_state_candidates(table, (1,), 1.5)


def test_select_examples():
    assert select_state(_candidates(3), 3, Scenario.LOWER) == 3
    assert select_state(_candidates(1, 2, 3), 3, Scenario.LOWER) == 2
    assert select_state(_candidates(1, 3), 2, Scenario.LOWER) == 1
    assert select_state(_candidates(1, 3), 2, Scenario.UPPER) == 3
    assert resolve_state(_candidates(1, 3), 2, Scenario.UPPER).bifurcated


# (centre, candidates, lower, upper) for s = 5
SELECTION_TABLE = [
    # centre 1
    (1, (1,), 1, 1), (1, (2,), 2, 2), (1, (3,), 3, 3), (1, (4,), 4, 4), (1, (5,), 5, 5),
    (1, (1, 2), 1, 1), (1, (1, 3), 1, 1), (1, (1, 4), 1, 1), (1, (1, 5), 1, 1), (1, (2, 3), 2, 2),
    (1, (2, 4), 2, 2), (1, (2, 5), 2, 2), (1, (3, 4), 3, 3), (1, (3, 5), 3, 3), (1, (4, 5), 4, 4),
    (1, (1, 2, 3), 2, 2), (1, (1, 2, 4), 1, 1), (1, (1, 2, 5), 1, 1), (1, (1, 3, 4), 3, 3),
    (1, (1, 3, 5), 3, 3), (1, (1, 4, 5), 4, 4), (1, (2, 3, 4), 3, 3), (1, (2, 3, 5), 2, 2),
    (1, (2, 4, 5), 4, 4), (1, (3, 4, 5), 4, 4),
    (1, (1, 2, 3, 4), 2, 2), (1, (1, 2, 3, 5), 2, 2), (1, (1, 2, 4, 5), 1, 1),
    (1, (1, 3, 4, 5), 4, 4), (1, (2, 3, 4, 5), 3, 3),
    (1, (1, 2, 3, 4, 5), 3, 3),
    # centre 2
    (2, (1,), 1, 1), (2, (2,), 2, 2), (2, (3,), 3, 3), (2, (4,), 4, 4), (2, (5,), 5, 5),
    (2, (1, 2), 2, 2), (2, (1, 3), 1, 3), (2, (1, 4), 1, 1), (2, (1, 5), 1, 1), (2, (2, 3), 2, 2),
    (2, (2, 4), 2, 2), (2, (2, 5), 2, 2), (2, (3, 4), 3, 3), (2, (3, 5), 3, 3), (2, (4, 5), 4, 4),
    (2, (1, 2, 3), 2, 2), (2, (1, 2, 4), 2, 2), (2, (1, 2, 5), 2, 2), (2, (1, 3, 4), 3, 3),
    (2, (1, 3, 5), 3, 3), (2, (1, 4, 5), 4, 4), (2, (2, 3, 4), 3, 3), (2, (2, 3, 5), 2, 2),
    (2, (2, 4, 5), 4, 4), (2, (3, 4, 5), 4, 4),
    (2, (1, 2, 3, 4), 2, 2), (2, (1, 2, 3, 5), 2, 2), (2, (1, 2, 4, 5), 2, 2),
    (2, (1, 3, 4, 5), 4, 4), (2, (2, 3, 4, 5), 3, 3),
    (2, (1, 2, 3, 4, 5), 3, 3),
    # centre 3
    (3, (1,), 1, 1), (3, (2,), 2, 2), (3, (3,), 3, 3), (3, (4,), 4, 4), (3, (5,), 5, 5),
    (3, (1, 2), 2, 2), (3, (1, 3), 3, 3), (3, (1, 4), 4, 4), (3, (1, 5), 1, 5), (3, (2, 3), 3, 3),
    (3, (2, 4), 2, 4), (3, (2, 5), 2, 2), (3, (3, 4), 3, 3), (3, (3, 5), 3, 3), (3, (4, 5), 4, 4),
    (3, (1, 2, 3), 2, 2), (3, (1, 2, 4), 2, 2), (3, (1, 2, 5), 2, 2), (3, (1, 3, 4), 3, 3),
    (3, (1, 3, 5), 3, 3), (3, (1, 4, 5), 4, 4), (3, (2, 3, 4), 3, 3), (3, (2, 3, 5), 3, 3),
    (3, (2, 4, 5), 4, 4), (3, (3, 4, 5), 4, 4),
    (3, (1, 2, 3, 4), 3, 3), (3, (1, 2, 3, 5), 2, 2), (3, (1, 2, 4, 5), 2, 4),
    (3, (1, 3, 4, 5), 4, 4), (3, (2, 3, 4, 5), 3, 3),
    (3, (1, 2, 3, 4, 5), 3, 3),
    # centre 4
    (4, (1,), 1, 1), (4, (2,), 2, 2), (4, (3,), 3, 3), (4, (4,), 4, 4), (4, (5,), 5, 5),
    (4, (1, 2), 2, 2), (4, (1, 3), 3, 3), (4, (1, 4), 4, 4), (4, (1, 5), 5, 5), (4, (2, 3), 3, 3),
    (4, (2, 4), 4, 4), (4, (2, 5), 5, 5), (4, (3, 4), 4, 4), (4, (3, 5), 3, 5), (4, (4, 5), 4, 4),
    (4, (1, 2, 3), 2, 2), (4, (1, 2, 4), 2, 2), (4, (1, 2, 5), 2, 2), (4, (1, 3, 4), 4, 4),
    (4, (1, 3, 5), 3, 3), (4, (1, 4, 5), 4, 4), (4, (2, 3, 4), 3, 3), (4, (2, 3, 5), 3, 3),
    (4, (2, 4, 5), 4, 4), (4, (3, 4, 5), 4, 4),
    (4, (1, 2, 3, 4), 3, 3), (4, (1, 2, 3, 5), 2, 2), (4, (1, 2, 4, 5), 4, 4),
    (4, (1, 3, 4, 5), 4, 4), (4, (2, 3, 4, 5), 4, 4),
    (4, (1, 2, 3, 4, 5), 3, 3),
    # centre 5
    (5, (1,), 1, 1), (5, (2,), 2, 2), (5, (3,), 3, 3), (5, (4,), 4, 4), (5, (5,), 5, 5),
    (5, (1, 2), 2, 2), (5, (1, 3), 3, 3), (5, (1, 4), 4, 4), (5, (1, 5), 5, 5), (5, (2, 3), 3, 3),
    (5, (2, 4), 4, 4), (5, (2, 5), 5, 5), (5, (3, 4), 4, 4), (5, (3, 5), 5, 5), (5, (4, 5), 5, 5),
    (5, (1, 2, 3), 2, 2), (5, (1, 2, 4), 2, 2), (5, (1, 2, 5), 2, 2), (5, (1, 3, 4), 4, 4),
    (5, (1, 3, 5), 3, 3), (5, (1, 4, 5), 5, 5), (5, (2, 3, 4), 3, 3), (5, (2, 3, 5), 3, 3),
    (5, (2, 4, 5), 5, 5), (5, (3, 4, 5), 4, 4),
    (5, (1, 2, 3, 4), 3, 3), (5, (1, 2, 3, 5), 2, 2), (5, (1, 2, 4, 5), 5, 5),
    (5, (1, 3, 4, 5), 4, 4), (5, (2, 3, 4, 5), 4, 4),
    (5, (1, 2, 3, 4, 5), 3, 3),
]


@pytest.mark.parametrize("center, states, lower, upper", SELECTION_TABLE)
def test_selection_table(center, states, lower, upper):
    candidates = _candidates(*states)
    assert select_state(candidates, center, Scenario.LOWER) == lower
    assert select_state(candidates, center, Scenario.UPPER) == upper
    assert resolve_state(candidates, center, Scenario.LOWER).bifurcated == (lower != upper)


def test_selection_is_a_candidate(rng):
    for _ in range(300):
        s = int(rng.integers(1, 9))
        size = int(rng.integers(1, s + 1))
        states = tuple(sorted(int(x) for x in rng.choice(np.arange(1, s + 1), size, replace=False)))
        center = int(rng.integers(1, s + 1))
        for scenario in Scenario:
            assert select_state(_candidates(*states), center, scenario) in states


def test_periodic_rollout():
    table = estimate_transitions(_sequence([1, 2, 3] * 4), 2)
    predicted = predict_states(table, (2, 3), 6, 0.0, 1, 2, Scenario.LOWER)
    np.testing.assert_array_equal(predicted.states, [1, 2, 3, 1, 2, 3])


@pytest.mark.parametrize("scenario", list(Scenario))
def test_period_continues_when_order_covers_it(scenario):
    pattern = [1, 3, 2, 4]
    table = estimate_transitions(_sequence(pattern * 10), 3)
    predicted = predict_states(table, (3, 2, 4), 16, 0.0, 1, 3, scenario)
    np.testing.assert_array_equal(predicted.states, pattern * 4)


def test_rollout_is_deterministic(rng):
    states = StateSequence(rng.integers(1, 5, size=200), 4, 1)
    table = estimate_transitions(states, 2)
    seed = states.tail(2)
    first = rollout(table, seed, 30, 0.1, 2, 3, Scenario.UPPER)
    second = rollout(table, seed, 30, 0.1, 2, 3, Scenario.UPPER)
    np.testing.assert_array_equal(first.states.states, second.states.states)
    assert first.bifurcations == second.bifurcations


def test_rollout_records_bifurcations():
    # state 1 is followed by 1 and 3 equally often
    table = estimate_transitions(_sequence([1, 1, 2, 1, 3, 2, 1, 1, 3]), 1)
    result = rollout(table, (1,), 1, 0.0, 1, 2, Scenario.UPPER)
    assert result.states.states[0] == 3
    assert result.bifurcations == (0,)


def test_zero_horizon():
    table = estimate_transitions(_sequence([1, 2, 1, 2, 1]), 1)
    with pytest.raises(DomainError):
        predict_states(table, (1,), 0, 0.0, 1, 1, Scenario.LOWER)


def test_table_json_form():
    data = estimate_transitions(_sequence([1, 2, 1, 2, 1]), 1).to_dict()
    assert data == {'order': 1, 's': 2,
                    'transitions': [{'history': [1], 'counts': [0, 2]},
                                    {'history': [2], 'counts': [2, 0]}]}
