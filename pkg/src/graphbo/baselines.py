"""Population baselines over bit-vector-encoded candidate sets.

Both optimizers cache objective values by candidate, so revisiting a
candidate costs nothing: the budget counts distinct evaluations, which is
the honest accounting when evaluations are expensive.
"""

from __future__ import annotations

import math

import numpy as np

from .bo import RunRecord, _check_budget, _Tracker, initial_indices

__all__ = ["power_set_encoding", "run_ga", "run_sa"]

# Give up after this many consecutive generations/proposals that visit
# only cached candidates; converged populations stop producing new points.
_STAGNATION_LIMIT = 200


def power_set_encoding(n_candidates: int) -> np.ndarray:
    """Identity encoding for candidate sets with power-set structure.

    Candidate ``i`` maps to the binary digits of ``i`` (least significant
    bit first).
    """
    bits = int(round(math.log2(n_candidates)))
    if 2**bits != n_candidates:
        raise ValueError(
            "candidate set has no power-set structure; provide an explicit encoding"
        )
    idx = np.arange(n_candidates, dtype=np.int64)
    return ((idx[:, None] >> np.arange(bits)[None, :]) & 1).astype(np.uint8)


class _CachedObjective:
    """Evaluation cache; only misses consume budget and produce rows."""

    def __init__(self, candidates, objective, tracker, record, budget):
        self.candidates = candidates
        self.objective = objective
        self.tracker = tracker
        self.record = record
        self.budget = budget
        self.cache: dict[int, float] = {}

    @property
    def spent(self) -> int:
        return len(self.tracker.rows)

    @property
    def exhausted(self) -> bool:
        return self.record.aborted or self.spent >= self.budget

    def __call__(self, index: int):
        if index in self.cache:
            return self.cache[index]
        if self.exhausted:
            return None
        try:
            value = float(self.objective(index, self.candidates.graphs[index]))
        except Exception as exc:  # noqa: BLE001 - objective is user code
            self.record.aborted = True
            self.record.error = f"objective failed at candidate {index}: {exc}"
            return None
        self.cache[index] = value
        self.tracker.record(index, value, None)
        return value


def _index_lookup(encoding: np.ndarray) -> dict[bytes, int]:
    encoding = np.ascontiguousarray(encoding.astype(np.uint8))
    lookup = {encoding[i].tobytes(): i for i in range(encoding.shape[0])}
    if len(lookup) != encoding.shape[0]:
        raise ValueError("encoding rows must be distinct")
    if len(lookup) != 2 ** encoding.shape[1]:
        raise ValueError("encoding must cover every bit vector of its length")
    return lookup


def run_ga(candidates, objective, budget, n_init, seed, config, encoding) -> RunRecord:
    """Generational GA with tournament selection and single-point crossover."""
    _check_budget(candidates, budget, n_init)
    params = config.ga
    encoding = np.asarray(encoding, dtype=np.uint8)
    lookup = _index_lookup(encoding)
    n_bits = encoding.shape[1]
    rng = np.random.default_rng(seed)
    record = RunRecord(strategy="ga", seed=seed)
    tracker = _Tracker(candidates, config.optimum_value)
    evaluate = _CachedObjective(candidates, objective, tracker, record, budget)

    init = initial_indices(len(candidates), n_init, seed)
    pop = [encoding[i].copy() for i in init[: params.population]]
    while len(pop) < params.population:
        pop.append(rng.integers(0, 2, size=n_bits, dtype=np.uint8))

    def fitness_of(member) -> float:
        value = evaluate(lookup[member.tobytes()])
        return -math.inf if value is None else value

    stagnant = 0
    while not evaluate.exhausted and stagnant < _STAGNATION_LIMIT:
        before = evaluate.spent
        fitness = np.array([fitness_of(m) for m in pop])
        if evaluate.exhausted:
            break
        children = []
        for _ in range(params.population):
            picks = rng.integers(0, len(pop), size=params.tournament)
            p1 = pop[picks[int(np.argmax(fitness[picks]))]]
            picks = rng.integers(0, len(pop), size=params.tournament)
            p2 = pop[picks[int(np.argmax(fitness[picks]))]]
            if n_bits >= 2 and rng.random() < params.crossover_rate:
                point = int(rng.integers(1, n_bits))
                child = np.concatenate([p1[:point], p2[point:]])
            else:
                child = p1.copy()
            flips = rng.random(n_bits) < params.mutation_rate
            child = child ^ flips.astype(np.uint8)
            children.append(child)
        pop = children
        stagnant = stagnant + 1 if evaluate.spent == before else 0

    record.rows = tracker.rows
    record.evaluations_to_optimum = tracker.evaluations_to_optimum
    return record


def run_sa(candidates, objective, budget, n_init, seed, config, encoding) -> RunRecord:
    """Simulated annealing on bit flips with a geometric temperature schedule.

    Start and end temperatures are calibrated so a solution worse by the
    initial-sample standard deviation is accepted with the configured
    probabilities.
    """
    _check_budget(candidates, budget, n_init)
    params = config.sa
    encoding = np.asarray(encoding, dtype=np.uint8)
    lookup = _index_lookup(encoding)
    n_bits = encoding.shape[1]
    rng = np.random.default_rng(seed)
    record = RunRecord(strategy="sa", seed=seed)
    tracker = _Tracker(candidates, config.optimum_value)
    evaluate = _CachedObjective(candidates, objective, tracker, record, budget)

    init = initial_indices(len(candidates), n_init, seed)
    init_values = []
    for index in init:
        value = evaluate(int(index))
        if value is None:
            break
        init_values.append(value)
    if record.aborted or not init_values:
        record.rows = tracker.rows
        record.evaluations_to_optimum = tracker.evaluations_to_optimum
        return record

    current = int(init[int(np.argmax(init_values))])
    current_y = max(init_values)
    delta0 = max(float(np.std(init_values)), 1e-12)
    t_start = -delta0 / math.log(params.p_start)
    t_end = -delta0 / math.log(params.p_end)
    n_cycles = max(1, math.ceil((budget - len(init_values)) / params.trials_per_cycle))

    cycle = 0
    stagnant = 0
    while not evaluate.exhausted and stagnant < _STAGNATION_LIMIT:
        frac = cycle / max(n_cycles - 1, 1)
        temperature = t_start * (t_end / t_start) ** min(frac, 1.0)
        before = evaluate.spent
        for _ in range(params.trials_per_cycle):
            decision = encoding[current].copy()
            flip = int(rng.integers(0, n_bits))
            decision[flip] ^= 1
            proposal = lookup[decision.tobytes()]
            value = evaluate(proposal)
            if value is None:
                break
            if value >= current_y or rng.random() < math.exp(
                (value - current_y) / temperature
            ):
                current, current_y = proposal, value
        cycle += 1
        stagnant = stagnant + 1 if evaluate.spent == before else 0

    record.rows = tracker.rows
    record.evaluations_to_optimum = tracker.evaluations_to_optimum
    return record
