"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The two big sweeps (criteria 1-4) run once per session, parallelized over
disjoint configurations; every other criterion is self-contained. Run with
``pytest tests/test_acceptance.py -s`` to see the per-criterion lines live.

Criterion 6 is implemented exactly as specified (memory multiplier c=1
against every learner in the suite). The three majority-vote learners hold
up to twice the per-expert capacity, so on power-of-two panels each fact
block is backed by exactly half the experts, ties persist facts, and the
adversary's pigeonhole has nothing to pick: those parametrizations fail
honestly. The matching-memory-class demonstration (c=2) passes in
tests/test_adversaries.py.
"""

from __future__ import annotations

import itertools
import random
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import pytest

from factgame.adversaries import (
    LowerBoundAdversary,
    PigeonholeError,
    build_lower_bound_instance,
    random_stream,
)
from factgame.experts import (
    SimulatedValueSuite,
    ThresholdValueSuite,
    ValueBasedExpertState,
    ValueFunction,
    random_value_suite,
    vb_offer,
)
from factgame.harness import RunConfig, run_game
from factgame.learners import kth_largest
from factgame.model import Fact

GRID_N = (2, 8, 64)
GRID_M = (1, 4, 16)
SWEEP_T = 100_000
TEACH_FRACTION = 0.5
SCRIPTED_SUITES = ("recency", "first-vs-last", "striped")
SCRIPTED_SEEDS = (101, 102, 103, 104)
VALUE_SEEDS = tuple(range(201, 213))

_stream_cache: dict = {}


def _universe(capacity: int) -> int:
    return max(16, 8 * capacity)


def _cached_stream(universe: int, seed: int):
    key = (universe, SWEEP_T, TEACH_FRACTION, seed)
    if key not in _stream_cache:
        _stream_cache[key] = random_stream(universe, SWEEP_T, TEACH_FRACTION, seed)
    return _stream_cache[key]


def _run_scripted(task):
    n, capacity, suite, seed = task
    config = RunConfig(
        learner="lazy",
        adversary=_cached_stream(_universe(capacity), seed),
        experts=f"scripted:{suite},N={n}",
        capacity=capacity,
        seed=seed,
    )
    ledger, report = run_game(config)
    return {
        "n": n,
        "m": capacity,
        "suite": suite,
        "seed": seed,
        "L": ledger.learner_mistakes,
        "opt": ledger.opt,
        "max_fact": ledger.max_fact_memory(),
        "fact_ok": report.check("fact_memory").passed,
        "aux_ok": report.check("aux_state").passed,
        "derived_ok": report.check("mistake_derived").passed,
        "literal_ok": report.check("mistake_literal").passed,
    }


def _run_value(task):
    n, capacity, seed = task
    universe = _universe(capacity)
    config = RunConfig(
        learner="value-lazy",
        adversary=_cached_stream(universe, seed),
        experts=f"values:N={n},universe={universe},seed={seed + 5000}",
        capacity=capacity,
        seed=seed,
        verify_soundness=True,
    )
    ledger, report = run_game(config)
    return {
        "n": n,
        "m": capacity,
        "seed": seed,
        "L": ledger.learner_mistakes,
        "opt": ledger.opt,
        "max_fact": ledger.max_fact_memory(),
        "max_question": ledger.max_question_memory(),
        "fact_ok": report.check("fact_memory").passed,
        "question_ok": report.check("question_memory").passed,
        "aux_ok": report.check("aux_state").passed,
        "derived_ok": report.check("mistake_derived").passed,
        "literal_ok": report.check("mistake_literal").passed,
        "t_sound": report.check("threshold_underestimates").passed,
        "tpre_sound": report.check("pre_threshold_underestimates").passed,
        "err_sound": report.check("perceived_errors_underestimate").passed,
    }


def _parallel(worker, tasks):
    tasks = sorted(tasks, key=lambda t: -(t[0] * t[1]))  # heavy cells first
    with ProcessPoolExecutor(max_workers=2) as pool:
        return list(pool.map(worker, tasks, chunksize=1))


@pytest.fixture(scope="session")
def scripted_sweep():
    tasks = [
        (n, m, suite, seed)
        for n, m, suite, seed in itertools.product(
            GRID_N, GRID_M, SCRIPTED_SUITES, SCRIPTED_SEEDS
        )
    ]
    start = time.perf_counter()
    results = _parallel(_run_scripted, tasks)
    elapsed = time.perf_counter() - start
    return results, elapsed


@pytest.fixture(scope="session")
def value_sweep():
    tasks = [
        (n, m, seed) for n, m, seed in itertools.product(GRID_N, GRID_M, VALUE_SEEDS)
    ]
    start = time.perf_counter()
    results = _parallel(_run_value, tasks)
    elapsed = time.perf_counter() - start
    return results, elapsed


def _report(criterion: str, ok: bool, detail: str) -> None:
    print(f"[acceptance] {criterion}: {'PASS' if ok else 'FAIL'} ({detail})")


def test_criterion_1_memory_bound_oracle_learner(scripted_sweep) -> None:
    results, elapsed = scripted_sweep
    assert len(results) >= 100
    bad = [r for r in results if not r["fact_ok"] or r["max_fact"] > 2 * r["m"]]
    ok = not bad and elapsed < 120.0
    _report(
        "criterion 1 (fact memory <= 2M, oracle learner)",
        ok,
        f"{len(results)} runs of T={SWEEP_T}, max |mem|/2M = "
        f"{max(r['max_fact'] / (2 * r['m']) for r in results):.2f}, {elapsed:.0f}s",
    )
    assert not bad, f"fact memory exceeded 2M in: {bad[:3]}"
    assert elapsed < 120.0, f"sweep took {elapsed:.0f}s, budget is 120s"


def test_criterion_2_memory_bound_value_learner(value_sweep) -> None:
    results, elapsed = value_sweep
    assert len(results) >= 100
    bad = [
        r
        for r in results
        if not r["fact_ok"]
        or not r["question_ok"]
        or r["max_fact"] > 2 * r["m"]
        or r["max_question"] > 2 * r["m"]
    ]
    _report(
        "criterion 2 (fact memory <= 2M and parked questions <= 2M, value learner)",
        not bad,
        f"{len(results)} runs, max facts {max(r['max_fact'] for r in results)}, "
        f"max parked {max(r['max_question'] for r in results)}, {elapsed:.0f}s",
    )
    assert not bad, f"memory class exceeded in: {bad[:3]}"


def test_criterion_3_mistake_bounds(scripted_sweep, value_sweep) -> None:
    scripted, _ = scripted_sweep
    value, _ = value_sweep
    bad = [r for r in scripted + value if not r["derived_ok"]]
    literal_holds = sum(1 for r in scripted + value if r["literal_ok"])
    total = len(scripted) + len(value)
    _report(
        "criterion 3 (mistake bound, safe form; literal form reported)",
        not bad,
        f"safe form on {total}/{total} runs; literal base-2 form on "
        f"{literal_holds}/{total} runs",
    )
    assert not bad, f"derived-safe mistake bound failed in: {bad[:3]}"


def test_criterion_4_threshold_soundness(value_sweep) -> None:
    results, _ = value_sweep
    bad = [
        r
        for r in results
        if not (r["t_sound"] and r["tpre_sound"] and r["err_sound"])
    ]
    _report(
        "criterion 4 (estimated cutoffs and error counts never exceed truth)",
        not bad,
        f"{len(results)} runs, three per-step checks each",
    )
    assert not bad, f"soundness violated in: {bad[:3]}"


def _threshold_answers(vfs, seen, capacity):
    """Reference oracle: membership iff seen and valued at or above the
    capacity-th largest seen value (recomputed by sorting, independent of the
    eviction-based route)."""
    out = []
    for vf in vfs:
        cutoff = kth_largest([vf[q] for q in seen], capacity)
        out.append(tuple(q in seen and vf[q] >= cutoff for q in sorted(vf.domain)))
    return tuple(out)


def _sim_answers(states):
    return tuple(
        tuple(q in s.stored_questions() for q in sorted(s.values.domain))
        for s in states
    )


def test_criterion_5_oracle_equivalence() -> None:
    # Exhaustive over every stream of length <= 8 on a 3-question universe,
    # with six experts covering all value orderings. Offers are pure, so two
    # prefixes reaching the same (memories, seen) state have identical
    # subtrees; memoizing on that state walks the full 6^8 event tree while
    # comparing each distinct reachable state once per depth. Teach children
    # mutate state; evaluate children re-offer a seen fact, which is asserted
    # to be a no-op, and continue on the unchanged state.
    universe = ("q0", "q1", "q2")
    vfs = [
        ValueFunction(dict(zip(universe, perm)))
        for perm in itertools.permutations((1, 2, 3))
    ]
    checked = 0
    for capacity in (1, 2, 3):
        verified: dict[tuple, int] = {}

        def compare(states, seen) -> None:
            nonlocal checked
            assert _sim_answers(states) == _threshold_answers(vfs, seen, capacity)
            checked += 1

        def walk(states, seen, depth) -> None:
            key = (tuple(s.memory for s in states), seen)
            if verified.get(key, -1) >= depth:
                return
            verified[key] = depth
            if depth == 0:
                return
            for q in universe:
                fact = Fact(q, f"a-{q}")
                taught = tuple(vb_offer(s, fact) for s in states)
                compare(taught, seen | {q})
                walk(taught, seen | {q}, depth - 1)
                if q in seen:  # evaluating a taught question re-offers its fact
                    again = tuple(vb_offer(s, fact) for s in states)
                    assert all(a is s for a, s in zip(again, states))
                compare(states, seen)
                walk(states, seen, depth - 1)

        start = tuple(ValueBasedExpertState(vf, capacity) for vf in vfs)
        compare(start, frozenset())
        walk(start, frozenset(), 8)

    rng = random.Random(55)
    random_checked = 0
    for _ in range(10_000):
        size = rng.randrange(3, 21)
        n = rng.randrange(1, 7)
        capacity = rng.randrange(1, 6)
        qs = [f"q{i}" for i in range(size)]
        vfs_r = random_value_suite(n, qs, rng.randrange(10**9))
        sim = SimulatedValueSuite(vfs_r, capacity)
        thr = ThresholdValueSuite(vfs_r, capacity)
        taught: list[str] = []
        for _ in range(rng.randrange(8, 24)):
            if taught and rng.random() < 0.4:
                q = rng.choice(taught)  # evaluate: re-offer of a seen fact
            else:
                q = rng.choice(qs)
                taught.append(q)
            fact = Fact(q, f"a-{q}")
            sim.offer(fact)
            thr.offer(fact)
            assert np.array_equal(sim.knows_many(qs), thr.knows_many(qs))
            random_checked += 1
    _report(
        "criterion 5 (simulation vs cutoff oracle backings agree)",
        True,
        f"{checked} exhaustive states, {random_checked} random stream steps",
    )


FLOOR_CASES = [
    (n, m, opt) for n in (4, 8, 16) for m in (2, 4) for opt in (0, 2)
]


@pytest.mark.parametrize("learner", ["random-evict", "mwu", "lazy", "value-lazy"])
def test_criterion_6_lower_bound(learner: str) -> None:
    failures = []
    for n, capacity, opt in FLOOR_CASES:
        instance = build_lower_bound_instance(1, n, capacity, opt)
        adversary = LowerBoundAdversary(instance)
        config = RunConfig(
            learner=learner, adversary=adversary, capacity=capacity, seed=13
        )
        floor = instance.depth * (capacity // 2) + opt
        try:
            ledger, _ = run_game(config)
        except PigeonholeError as err:
            failures.append(f"N={n} M={capacity} opt={opt}: {err}")
            continue
        survivors = adversary.surviving_experts()
        best = min(int(ledger.expert_mistakes[e]) for e in survivors)
        if ledger.learner_mistakes < floor:
            failures.append(
                f"N={n} M={capacity} opt={opt}: L={ledger.learner_mistakes} < {floor}"
            )
        if best > opt:
            failures.append(f"N={n} M={capacity} opt={opt}: survivor made {best} > {opt}")
    _report(
        f"criterion 6 (forced-mistake floor at c=1, learner={learner})",
        not failures,
        f"{len(FLOOR_CASES)} instances"
        + ("" if not failures else f"; first failure: {failures[0]}"),
    )
    assert not failures, (
        "The c=1 construction cannot corner this learner: it may hold 2M facts "
        "while each collection block is backed by exactly half of a power-of-two "
        "panel, and ties persist facts. The floor does hold at the learner's own "
        "memory class (c=2), see tests/test_adversaries.py. Failures:\n"
        + "\n".join(failures)
    )


def test_criterion_7_majority_kept_set_cap() -> None:
    rng = random.Random(77)
    worst = 0.0
    for _ in range(10_000):
        n = rng.randrange(1, 12)
        capacity = rng.randrange(1, 7)
        n_facts = rng.randrange(0, 4 * capacity + 10)
        weights = [rng.randrange(2) for _ in range(n)]
        if not any(weights):
            weights[rng.randrange(n)] = 1  # an all-zero weighting has no majority
        stores = []
        for _ in range(n):
            k = min(rng.randrange(0, capacity + 1), n_facts)
            stores.append(set(rng.sample(range(n_facts), k)))
        total = sum(weights)
        kept = sum(
            1
            for f in range(n_facts)
            if 2 * sum(w for w, s in zip(weights, stores) if f in s) >= total
        )
        assert kept <= 2 * capacity, (n, capacity, n_facts, kept)
        worst = max(worst, kept / (2 * capacity))
    _report(
        "criterion 7 (weighted-majority kept set <= 2M)",
        True,
        f"10000 instances, tightest ratio {worst:.2f}",
    )


def test_criterion_8_value_expert_semantics() -> None:
    # Exhaustive: all teach orders over a 5-question universe, every prefix,
    # against the sort-based replay oracle.
    questions = [f"q{i}" for i in range(5)]
    exhaustive_checked = 0
    for capacity in (1, 2, 3, 4, 5):
        values = ValueFunction({q: 2 * i + 1 for i, q in enumerate(questions)})
        for order in itertools.permutations(questions):
            state = ValueBasedExpertState(values, capacity)
            offered: list[str] = []
            for q in order:
                state = vb_offer(state, Fact(q, "a"))
                offered.append(q)
                replay = set(
                    sorted(offered, key=lambda x: values[x], reverse=True)[:capacity]
                )
                assert state.stored_questions() == replay
                exhaustive_checked += 1
    # Random: universes up to 20 questions, capacities up to 5, with re-offers.
    rng = random.Random(88)
    random_checked = 0
    for _ in range(2_000):
        size = rng.randrange(2, 21)
        capacity = rng.randrange(1, 6)
        qs = [f"q{i}" for i in range(size)]
        vf = random_value_suite(1, qs, rng.randrange(10**9))[0]
        state = ValueBasedExpertState(vf, capacity)
        offered: list[str] = []
        for _ in range(rng.randrange(1, 40)):
            q = rng.choice(qs)
            state = vb_offer(state, Fact(q, "a"))
            if q not in offered:
                offered.append(q)
            replay = set(sorted(offered, key=lambda x: vf[x], reverse=True)[:capacity])
            assert state.stored_questions() == replay
            random_checked += 1
    _report(
        "criterion 8 (retention equals top-M-by-value replay)",
        True,
        f"{exhaustive_checked} exhaustive prefixes, {random_checked} random steps",
    )


def test_criterion_9_deterministic_outputs(tmp_path) -> None:
    from factgame.cli import main

    contents = []
    for attempt in range(2):
        csv_path = tmp_path / f"run{attempt}.csv"
        sum_path = tmp_path / f"run{attempt}.txt"
        code = main(
            [
                "run",
                "--learner",
                "value-lazy",
                "--adversary",
                "random:universe=32,T=5000,teach=0.5,seed=42",
                "--experts",
                "values:N=8,universe=32,seed=6",
                "--M",
                "4",
                "--seed",
                "42",
                "--csv",
                str(csv_path),
                "--summary",
                str(sum_path),
            ]
        )
        assert code == 0
        contents.append((csv_path.read_bytes(), sum_path.read_bytes()))
    ok = contents[0] == contents[1]
    _report(
        "criterion 9 (identical seeds give byte-identical outputs)",
        ok,
        f"{len(contents[0][0])} CSV bytes compared",
    )
    assert ok
