import logging
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Mapping, NamedTuple, Sequence, Tuple

import networkx as nx
import numpy as np

from models.quantizer import StateSequence
from utils.errors import ContractError, DomainError, SizeError

logger = logging.getLogger(__name__)

History = Tuple[int, ...]

# absolute slack on the delta comparison so decimal-exact thresholds hold
PROBABILITY_TOLERANCE = 1e-12


class Scenario(Enum):
    LOWER = "lower"
    UPPER = "upper"


@dataclass(frozen=True)
class TransitionTable:
    """Sparse next-state counts for generalized states (r-tuples)

    `by_order[k]` holds the counts for histories of length k, k = 0..order;
    order 0 has the single key () with the marginal state counts.
    """
    order: int
    s: int
    by_order: Tuple[Mapping[History, np.ndarray], ...]

    @property
    def counts(self) -> Mapping[History, np.ndarray]:
        """Counts of the full-order histories"""
        return self.by_order[self.order]

    @property
    def history_totals(self) -> Dict[History, int]:
        """Number of times each full-order history was followed by a state"""
        return {h: int(c.sum()) for h, c in self.counts.items()}

    @property
    def marginal(self) -> np.ndarray:
        """State counts over the whole training sequence"""
        return self.by_order[0][()]

    def total(self, history: History) -> int:
        """Observations of a history of any length up to the order, 0 if unseen"""
        row = self.by_order[len(history)].get(tuple(history))
        return 0 if row is None else int(row.sum())

    def probabilities(self, history: Sequence[int]) -> np.ndarray:
        """Next-state distribution for an observed history of length 0..order"""
        history = tuple(int(x) for x in history)
        if len(history) > self.order:
            raise ContractError(f"History length {len(history)} exceeds order {self.order}")
        row = self.by_order[len(history)].get(history)
        if row is None:
            raise DomainError(f"History {history} was never observed", {"history": list(history)})
        return row / row.sum()

    def to_dict(self) -> Dict[str, Any]:
        return {
            'order': self.order,
            's': self.s,
            'transitions': [
                {'history': list(h), 'counts': self.counts[h].tolist()}
                for h in sorted(self.counts)
            ],
        }


@dataclass(frozen=True)
class CandidateSet:
    states: Tuple[int, ...]
    max_prob: float
    order_used: int


class Selection(NamedTuple):
    state: int
    bifurcated: bool


class Rollout(NamedTuple):
    states: StateSequence
    bifurcations: Tuple[int, ...]


def estimate_transitions(states: StateSequence, order: int) -> TransitionTable:
    """Count transitions from every r-window to the state that follows it"""
    if order < 1:
        raise DomainError(f"Markov order must be at least 1, got {order}")
    sequence = [int(x) for x in states.states]
    if len(sequence) < order + 1:
        raise SizeError(f"Need at least {order + 1} states for order {order}, got {len(sequence)}",
                        {"order": order, "length": len(sequence)})

    by_order = []
    marginal = np.bincount(np.asarray(sequence) - 1, minlength=states.s)
    by_order.append({(): marginal})
    for k in range(1, order + 1):
        rows: Dict[History, np.ndarray] = defaultdict(lambda: np.zeros(states.s, dtype=int))
        for i in range(k, len(sequence)):
            rows[tuple(sequence[i - k:i])][sequence[i] - 1] += 1
        by_order.append(dict(rows))
    return TransitionTable(order, states.s, tuple(by_order))


def next_state_candidates(table: TransitionTable, history: Sequence[int], delta: float,
                          n_min: int = 1) -> CandidateSet:
    """States within `delta` of the most probable next state

    Histories observed fewer than `n_min` times back off by dropping their
    oldest element, down to the marginal distribution.
    """
    if not 0.0 <= delta <= 1.0:
        raise DomainError(f"Delta must lie in [0, 1], got {delta}")
    if n_min < 1:
        raise DomainError(f"Minimal transition count must be at least 1, got {n_min}")
    history = tuple(int(x) for x in history)[-table.order:]
    for k in range(len(history), -1, -1):
        effective = history[len(history) - k:]
        if k == 0 or table.total(effective) >= n_min:
            break
    if k < len(history):
        logger.debug(f"Backed off from history {history} to {effective}")
    probs = table.probabilities(effective)
    max_prob = float(probs.max())
    members = np.flatnonzero(probs >= max_prob - delta - PROBABILITY_TOLERANCE) + 1
    return CandidateSet(tuple(int(x) for x in members), max_prob, k)


def _clusters(elements: Sequence[int]) -> List[List[int]]:
    """Maximal runs of consecutive indices"""
    clusters: List[List[int]] = []
    for e in sorted(elements):
        if clusters and e == clusters[-1][-1] + 1:
            clusters[-1].append(e)
        else:
            clusters.append([e])
    return clusters


def _central(group: Sequence[int], center: int, scenario: Scenario) -> Selection:
    """Central element of a group; equidistant central pair is a bifurcation"""
    size = len(group)
    if size % 2 == 1:
        return Selection(group[size // 2], False)
    left, right = group[size // 2 - 1], group[size // 2]
    if abs(left - center) < abs(right - center):
        return Selection(left, False)
    if abs(right - center) < abs(left - center):
        return Selection(right, False)
    return Selection(left if scenario is Scenario.LOWER else right, True)


def resolve_state(candidates: CandidateSet, center: int, scenario: Scenario) -> Selection:
    """Five-step cluster procedure choosing one state from the candidate set"""
    elements = sorted(set(candidates.states))
    if not elements:
        raise ContractError("Candidate set is empty")
    bifurcated = False
    while True:
        clusters = _clusters(elements)
        largest = max(len(c) for c in clusters)
        if largest == 1 and len(clusters) > 1:
            # isolated states only: take them together as one group
            choice = _central(elements, center, scenario)
            return Selection(choice.state, bifurcated or choice.bifurcated)
        representatives = []
        for cluster in clusters:
            if len(cluster) == largest:
                choice = _central(cluster, center, scenario)
                bifurcated = bifurcated or choice.bifurcated
                representatives.append(choice.state)
        if len(representatives) == 1:
            return Selection(representatives[0], bifurcated)
        elements = representatives


def select_state(candidates: CandidateSet, center: int, scenario: Scenario) -> int:
    """State chosen from the candidates for one scenario"""
    return resolve_state(candidates, center, scenario).state


def rollout(table: TransitionTable, seed: Sequence[int], horizon: int, delta: float,
            n_min: int, center: int, scenario: Scenario, step: int = 1) -> Rollout:
    """Most-probable-state rollout with the positions of bifurcations"""
    if horizon < 1:
        raise DomainError(f"Horizon must be at least 1, got {horizon}")
    if len(seed) < table.order:
        raise ContractError(f"Seed needs {table.order} states, got {len(seed)}")
    if not 1 <= center <= table.s:
        raise DomainError(f"Center state {center} outside [1..{table.s}]")
    history = [int(x) for x in seed][len(seed) - table.order:]
    predicted: List[int] = []
    bifurcations: List[int] = []
    for position in range(horizon):
        candidates = next_state_candidates(table, history, delta, n_min)
        choice = resolve_state(candidates, center, scenario)
        if choice.bifurcated:
            bifurcations.append(position)
        predicted.append(choice.state)
        # slide the r-window
        history = history[1:] + [choice.state]
    return Rollout(StateSequence(np.array(predicted), table.s, step), tuple(bifurcations))


def predict_states(table: TransitionTable, seed: Sequence[int], horizon: int, delta: float,
                   n_min: int, center: int, scenario: Scenario) -> StateSequence:
    """Predicted state sequence of `horizon` steps following the seed"""
    return rollout(table, seed, horizon, delta, n_min, center, scenario).states


def generalized_chain(table: TransitionTable) -> nx.DiGraph:
    """First-order chain over generalized states (r-tuples)"""
    graph = nx.DiGraph()
    for history, row in table.counts.items():
        total = row.sum()
        graph.add_node(history, total=int(total))
        for index in np.flatnonzero(row):
            target = history[1:] + (int(index) + 1,)
            graph.add_edge(history, target, count=int(row[index]),
                           probability=float(row[index] / total))
    return graph
