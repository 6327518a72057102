"""Game-loop driver, bound checking, and file outputs.

``run_game`` wires one adversary, one expert suite, and one learner through
the step protocol:

1. the adversary emits the next event (adaptive adversaries see the event
   history and a read-only view of the learner's stored questions);
2. on an evaluate, costs are assessed for the learner and every expert
   against the memories as they stand, and the learner's evaluation phase
   runs against those same memories;
3. every expert is offered the step's fact and updates its memory;
4. the learner's memory phase runs.

Budgets are asserted per step, never silently truncated: a learner holding
more facts than its declared class is a bug and the run dies loudly.
"""

from __future__ import annotations

import itertools
import json
import random
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import adversaries as adv
from . import experts as exp
from . import learners as lrn
from .model import (
    EVALUATE,
    Event,
    Fact,
    GameLedger,
    QuestionId,
    Stream,
    load_stream,
    validate_sequential,
)

AUX_CAP_FACTOR = 8  # auxiliary scalar entries allowed per expert

LEARNER_NAMES = ("mwu", "lazy", "value-lazy", "full-sim", "random-evict")


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


class BudgetViolationError(RuntimeError):
    """A learner exceeded its declared memory class."""


def ceil_log2(n: int) -> int:
    if n < 1:
        raise ValueError("n must be >= 1")
    return (n - 1).bit_length()


def ceil_log_3_2(n: int) -> int:
    """Smallest k with (3/2)**k >= n, computed exactly in integers."""
    if n < 1:
        raise ValueError("n must be >= 1")
    k = 0
    num, den = 1, 1  # (3/2)**k as num/den
    while num < n * den:
        num *= 3
        den *= 2
        k += 1
    return k


def derived_mistake_cap(opt: int | np.ndarray, capacity: int, n_experts: int):
    """Mistake allowance in the safe form: each block of 6M mistakes retires
    a third of the active experts, so a reset cycle spans at most
    ceil(log_{3/2} N) + 1 blocks."""
    return 6 * (opt + capacity) * (ceil_log_3_2(n_experts) + 1)


def literal_mistake_cap(opt: int | np.ndarray, capacity: int, n_experts: int):
    """Mistake allowance in the literal base-2 form (reported, not gating)."""
    return 6 * opt * ceil_log2(n_experts) + 6 * capacity * ceil_log2(n_experts)


@dataclass(frozen=True)
class BoundCheck:
    name: str
    passed: bool
    worst_slack: int
    first_violation: int | None
    gating: bool = True


@dataclass
class BoundReport:
    params: dict
    checks: list[BoundCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.gating)

    def check(self, name: str) -> BoundCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def format_lines(self) -> list[str]:
        lines = []
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            where = "" if c.first_violation is None else f" first violation at t={c.first_violation}"
            tag = "" if c.gating else " (report only)"
            lines.append(f"{c.name}: {status} worst slack {c.worst_slack}{where}{tag}")
        return lines


def _trace_check(name: str, values: np.ndarray, cap: np.ndarray | int, gating: bool = True) -> BoundCheck:
    slack = np.asarray(cap) - values
    if slack.size == 0:
        return BoundCheck(name, True, 0, None, gating)
    worst = int(slack.min())
    bad = np.flatnonzero(slack < 0)
    first = int(bad[0]) + 1 if bad.size else None
    return BoundCheck(name, first is None, worst, first, gating)


def check_bounds(
    ledger: GameLedger,
    *,
    n_experts: int,
    capacity: int,
    learner: str,
    fact_cap: int | None = None,
    question_cap: int | None = None,
) -> BoundReport:
    """Evaluate every bound at every prefix of the ledger.

    Memory caps are exact; the mistake allowance is checked in its safe form
    and additionally reported in the literal base-2 form.
    """
    if fact_cap is None:
        fact_cap = n_experts * capacity if learner == "full-sim" else 2 * capacity
    if question_cap is None:
        question_cap = 2 * capacity if learner == "value-lazy" else 0
    report = BoundReport(
        params={
            "learner": learner,
            "N": n_experts,
            "M": capacity,
            "T": len(ledger),
            "fact_cap": fact_cap,
            "question_cap": question_cap,
        }
    )
    fact_mem = np.asarray(ledger.fact_memory_trace, dtype=np.int64)
    question_mem = np.asarray(ledger.question_memory_trace, dtype=np.int64)
    aux = np.asarray(ledger.aux_trace, dtype=np.int64)
    report.checks.append(_trace_check("fact_memory", fact_mem, fact_cap))
    report.checks.append(_trace_check("question_memory", question_mem, question_cap))
    report.checks.append(_trace_check("aux_state", aux, AUX_CAP_FACTOR * n_experts))
    if learner in ("lazy", "value-lazy", "full-sim"):
        L = np.asarray(ledger.learner_trace, dtype=np.int64)
        opt = np.asarray(ledger.opt_trace, dtype=np.int64)
        report.checks.append(
            _trace_check("mistake_derived", L, derived_mistake_cap(opt, capacity, n_experts))
        )
        report.checks.append(
            _trace_check(
                "mistake_literal",
                L,
                literal_mistake_cap(opt, capacity, n_experts),
                gating=False,
            )
        )
    return report


@dataclass
class RunConfig:
    """One game run: learner, adversary, expert suite, and output options."""

    learner: str
    adversary: str | Stream | adv.Adversary
    experts: str | None = None
    capacity: int = 1
    seed: int = 0
    gamma: float = 0.5
    oracle_backing: str = "auto"  # auto | simulation | threshold
    check_bounds: bool = True
    verify_soundness: bool = False
    csv_path: str | None = None
    summary_path: str | None = None

    def __post_init__(self) -> None:
        if self.learner not in LEARNER_NAMES:
            raise ConfigError(
                f"unknown learner {self.learner!r}; choose from {LEARNER_NAMES}"
            )
        if self.capacity < 1:
            raise ConfigError("M must be >= 1")
        if self.oracle_backing not in ("auto", "simulation", "threshold"):
            raise ConfigError("oracle backing must be auto, simulation, or threshold")


def _parse_kv(body: str, spec: str) -> dict[str, str]:
    out: dict[str, str] = {}
    if not body:
        return out
    for part in body.split(","):
        if "=" not in part:
            raise ConfigError(f"malformed option {part!r} in {spec!r}")
        key, value = part.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _int_opt(options: dict[str, str], key: str, spec: str, default: int | None = None) -> int:
    if key not in options:
        if default is None:
            raise ConfigError(f"{spec!r} is missing required option {key}=")
        return default
    try:
        return int(options[key])
    except ValueError:
        raise ConfigError(f"option {key} in {spec!r} must be an integer") from None


def build_adversary(config: RunConfig) -> adv.Adversary:
    spec = config.adversary
    if isinstance(spec, adv.Adversary):
        return spec
    if isinstance(spec, Stream):
        return adv.FixedStreamAdversary(spec)
    if not isinstance(spec, str):
        raise ConfigError(f"unsupported adversary spec {spec!r}")
    kind, _, body = spec.partition(":")
    if kind == "random":
        options = _parse_kv(body, spec)
        universe = _int_opt(options, "universe", spec)
        length = _int_opt(options, "T", spec)
        seed = _int_opt(options, "seed", spec, default=config.seed)
        try:
            teach_fraction = float(options.get("teach", "0.5"))
        except ValueError:
            raise ConfigError(f"option teach in {spec!r} must be a float") from None
        return adv.FixedStreamAdversary(
            adv.random_stream(universe, length, teach_fraction, seed)
        )
    if kind == "lowerbound":
        options = _parse_kv(body, spec)
        c = _int_opt(options, "c", spec)
        n = _int_opt(options, "N", spec)
        m = _int_opt(options, "M", spec)
        opt = _int_opt(options, "opt", spec)
        if m != config.capacity:
            raise ConfigError(
                f"lowerbound M={m} disagrees with the run's M={config.capacity}"
            )
        try:
            instance = adv.build_lower_bound_instance(c, n, m, opt)
        except ValueError as err:
            raise ConfigError(str(err)) from None
        return adv.LowerBoundAdversary(instance)
    if kind == "file":
        try:
            with open(body, encoding="utf-8") as handle:
                stream = load_stream(handle)
        except OSError as err:
            raise ConfigError(f"cannot read stream file {body!r}: {err}") from None
        return adv.FixedStreamAdversary(stream)
    raise ConfigError(f"unknown adversary spec {spec!r}")


def _value_suite(
    value_functions: Sequence[exp.ValueFunction], capacity: int, backing: str
) -> exp.SimulatedValueSuite | exp.ThresholdValueSuite:
    if backing == "simulation":
        return exp.SimulatedValueSuite(value_functions, capacity)
    domains = {vf.domain for vf in value_functions}
    if backing == "auto" and len(domains) > 1:
        return exp.SimulatedValueSuite(value_functions, capacity)
    return exp.ThresholdValueSuite(value_functions, capacity)


def build_suite(config: RunConfig, adversary: adv.Adversary):
    """Returns (suite, expert_ids, value_functions or None)."""
    if isinstance(adversary, adv.LowerBoundAdversary):
        if config.experts is not None:
            raise ConfigError("lowerbound adversaries define their own expert suite")
        vfs = list(adversary.value_functions)
        suite = _value_suite(vfs, config.capacity, config.oracle_backing)
        return suite, [f"e{i}" for i in range(len(vfs))], vfs
    if config.experts is None:
        raise ConfigError("an expert suite is required (file path or scripted:<name>,N=<int>)")
    spec = config.experts
    kind, _, body = spec.partition(":")
    if kind == "scripted":
        name, _, rest = body.partition(",")
        options = _parse_kv(rest, spec)
        n = _int_opt(options, "N", spec)
        try:
            suite = exp.build_scripted_suite(name, n, config.capacity)
        except ValueError as err:
            raise ConfigError(str(err)) from None
        if config.oracle_backing == "threshold":
            raise ConfigError("scripted suites have no threshold backing")
        return suite, [f"e{i}" for i in range(n)], None
    if kind == "values":
        options = _parse_kv(body, spec)
        n = _int_opt(options, "N", spec)
        universe = _int_opt(options, "universe", spec)
        seed = _int_opt(options, "seed", spec, default=config.seed + 1)
        vfs = exp.random_value_suite(n, [f"q{i}" for i in range(universe)], seed)
        suite = _value_suite(vfs, config.capacity, config.oracle_backing)
        return suite, [f"e{i}" for i in range(n)], vfs
    path = body if kind == "file" else spec
    try:
        with open(path, encoding="utf-8") as handle:
            table = exp.load_expert_suite(handle)
    except OSError as err:
        raise ConfigError(f"cannot read expert suite {path!r}: {err}") from None
    except ValueError as err:
        raise ConfigError(str(err)) from None
    ids = sorted(table)
    vfs = [exp.ValueFunction(table[eid]) for eid in ids]
    suite = _value_suite(vfs, config.capacity, config.oracle_backing)
    return suite, ids, vfs


def build_learner(
    config: RunConfig,
    suite,
    oracle: exp.OracleHandle,
    value_functions: Sequence[exp.ValueFunction] | None,
    adversary: adv.Adversary,
) -> lrn.Learner:
    name = config.learner
    if name == "mwu":
        return lrn.MwuLearner(oracle, config.capacity, gamma=config.gamma)
    if name == "lazy":
        return lrn.LazyLearner(oracle, config.capacity)
    if name == "value-lazy":
        if value_functions is None:
            raise ConfigError("value-lazy requires a value-based expert suite")
        universe = suite.universe if isinstance(suite, exp.ThresholdValueSuite) else None
        return lrn.ValueLazyLearner(value_functions, config.capacity, universe=universe)
    if name == "full-sim":
        return lrn.FullSimLearner(suite)
    if name == "random-evict":
        budget = config.capacity
        if isinstance(adversary, adv.LowerBoundAdversary):
            budget = adversary.instance.c * config.capacity
        return lrn.RandomEvictLearner(suite.n, config.capacity, budget, seed=config.seed)
    raise ConfigError(f"unknown learner {name!r}")


def run_game(config: RunConfig) -> tuple[GameLedger, BoundReport]:
    """Play one full game; returns the ledger and the bound report.

    Deterministic given the config (all randomness is seeded). Raises
    :class:`BudgetViolationError` if the learner ever ends a step holding
    more facts or parked questions than its declared class.
    """
    adversary = build_adversary(config)
    suite, expert_ids, value_functions = build_suite(config, adversary)
    oracle = exp.OracleHandle(suite, expert_ids)
    learner = build_learner(config, suite, oracle, value_functions, adversary)
    if config.learner == "value-lazy" and not adversary.sequential:
        warnings.warn(
            "value-lazy guarantees assume evaluates only hit previously "
            "taught questions; this adversary is not declared sequential",
            stacklevel=2,
        )

    soundness = (
        config.verify_soundness
        and isinstance(learner, lrn.ValueLazyLearner)
        and hasattr(suite, "true_thresholds")
    )
    t_bad = tpre_bad = err_bad = None
    tpre_star = np.zeros(suite.n, dtype=np.int64)
    last_generation = learner.generation

    ledger = GameLedger(suite.n)
    phi: dict[QuestionId, object] = {}
    history: list[Event] = []
    memory_view = learner.memory.keys()  # live read-only view for the adversary

    while True:
        event = adversary.next_event(history, memory_view)
        if event is None:
            break
        question = event.question
        answer = event.answer
        if answer is None:
            answer = phi.get(question)
        elif phi.setdefault(question, answer) != answer:
            raise ConfigError(
                f"stream rebinds question {question!r}: "
                f"{phi[question]!r} vs {answer!r}"
            )
        violation = False
        if event.kind == EVALUATE:
            know = suite.knows(question)
            expert_costs = ~know
            cost = 0 if question in learner.memory else 1
            if answer is None:
                violation = True  # never-taught question: everyone errs, nothing to store
            learner.observe_evaluation(question, know=know)
            if soundness and learner.generation != last_generation:
                # Snapshot the true cutoffs as they stood when the active set
                # changed, before this step's memory updates.
                tpre_star = suite.true_thresholds()
                last_generation = learner.generation
        else:
            expert_costs = None
            cost = 0
        if answer is not None:
            changed = suite.offer(Fact(question, answer))
        else:
            changed = ()
        learner.update_memory(question, answer, changed)
        history.append(event)
        fact_mem = len(learner.memory)
        question_mem = learner.question_memory_size
        ledger.record_step(
            kind=event.kind,
            question=question,
            cost=cost,
            expert_costs=expert_costs,
            fact_memory=fact_mem,
            question_memory=question_mem,
            aux_state=learner.aux_state_count,
            active_experts=learner.active_count,
        )
        if violation:
            ledger.flag_violation()
        if fact_mem > learner.fact_budget:
            raise BudgetViolationError(
                f"step {len(ledger)}: learner {learner.name} holds {fact_mem} "
                f"facts, beyond its declared budget {learner.fact_budget}"
            )
        if question_mem > learner.question_budget:
            raise BudgetViolationError(
                f"step {len(ledger)}: learner {learner.name} parks {question_mem} "
                f"questions, beyond its declared budget {learner.question_budget}"
            )
        if soundness:
            if t_bad is None and (learner.threshold_values() > suite.true_thresholds()).any():
                t_bad = step
            if tpre_bad is None and (learner.pre_threshold_values() > tpre_star).any():
                tpre_bad = step
            if err_bad is None and (learner.errors > ledger.expert_mistakes).any():
                err_bad = step

    report = check_bounds(
        ledger,
        n_experts=suite.n,
        capacity=config.capacity,
        learner=config.learner,
        fact_cap=learner.fact_budget,
        question_cap=learner.question_budget,
    )
    if soundness:
        for name, bad in (
            ("threshold_underestimates", t_bad),
            ("pre_threshold_underestimates", tpre_bad),
            ("perceived_errors_underestimate", err_bad),
        ):
            report.checks.append(BoundCheck(name, bad is None, 0, bad))
    return ledger, report


def emit_outputs(ledger: GameLedger, report: BoundReport, config: RunConfig) -> list[str]:
    """Write the CSV trace and/or the summary file; returns the paths written."""
    written: list[str] = []
    if config.csv_path:
        try:
            with open(config.csv_path, "w", encoding="utf-8", newline="\n") as out:
                ledger.to_csv(out)
        except OSError as err:
            raise RuntimeError(f"cannot write CSV to {config.csv_path!r}: {err}") from err
        written.append(config.csv_path)
    if config.summary_path:
        try:
            with open(config.summary_path, "w", encoding="utf-8", newline="\n") as out:
                out.write(format_summary(ledger, report))
        except OSError as err:
            raise RuntimeError(
                f"cannot write summary to {config.summary_path!r}: {err}"
            ) from err
        written.append(config.summary_path)
    return written


def format_summary(ledger: GameLedger, report: BoundReport) -> str:
    params = report.params
    lines = [
        f"learner: {params['learner']}",
        f"N: {params['N']}",
        f"M: {params['M']}",
        f"T: {len(ledger)}",
        f"L: {ledger.learner_mistakes}",
        f"OPT: {ledger.opt}",
        f"max_fact_mem: {ledger.max_fact_memory()}",
        f"max_question_mem: {ledger.max_question_memory()}",
        f"max_aux: {ledger.max_aux_state()}",
        f"bounds_passed: {'yes' if report.passed else 'no'}",
    ]
    if ledger.violations:
        lines.append(f"sequential_violations: {len(ledger.violations)}")
    return "\n".join(lines) + "\n"


def sweep(grid: dict, *, on_result=None) -> list[tuple[RunConfig, GameLedger, BoundReport]]:
    """Run the cartesian product of a parameter grid, serially and in a
    deterministic order. Grid values may be scalars or lists."""
    keys = sorted(grid)
    lists = [grid[k] if isinstance(grid[k], list) else [grid[k]] for k in keys]
    results = []
    for combo in itertools.product(*lists):
        options = dict(zip(keys, combo))
        config = RunConfig(
            learner=options.get("learner", "lazy"),
            adversary=options.get("adversary", "random:universe=16,T=1000"),
            experts=options.get("experts"),
            capacity=int(options.get("M", 1)),
            seed=int(options.get("seed", 0)),
        )
        ledger, report = run_game(config)
        results.append((config, ledger, report))
        if on_result is not None:
            on_result(config, ledger, report)
    return results


def load_grid(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as handle:
            grid = json.load(handle)
    except OSError as err:
        raise ConfigError(f"cannot read grid file {path!r}: {err}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"grid file {path!r} is not valid JSON: {err}") from None
    if not isinstance(grid, dict):
        raise ConfigError("grid file must hold a JSON object of parameter lists")
    return grid


# --- invariant battery (CLI `verify`) ---------------------------------------


def _verify_sequential_scan(rng: random.Random, rounds: int) -> tuple[bool, str]:
    for _ in range(rounds):
        length = rng.randrange(0, 200)
        events = []
        for _ in range(length):
            q = f"q{rng.randrange(8)}"
            if rng.random() < 0.6:
                events.append(Event("T", q, "a"))
            else:
                events.append(Event("E", q))
        ok, idx = validate_sequential(events)
        # quadratic reference: scan all earlier events for a matching teach
        expect_ok, expect_idx = True, None
        for i, event in enumerate(events):
            if event.is_evaluate and not any(
                e.kind == "T" and e.question == event.question for e in events[:i]
            ):
                expect_ok, expect_idx = False, i
                break
        if (ok, idx) != (expect_ok, expect_idx):
            return False, f"scan disagrees with quadratic reference on {events}"
    return True, f"{rounds} random streams"


def _verify_replay_equivalence(rng: random.Random, rounds: int) -> tuple[bool, str]:
    for _ in range(rounds):
        universe = [f"q{i}" for i in range(rng.randrange(2, 12))]
        capacity = rng.randrange(1, 5)
        vf = exp.random_value_suite(1, universe, rng.randrange(10**6))[0]
        state = exp.ValueBasedExpertState(vf, capacity)
        offered: list[str] = []
        for _ in range(rng.randrange(1, 30)):
            q = universe[rng.randrange(len(universe))]
            state = exp.vb_offer(state, Fact(q, f"a-{q}"))
            if q not in offered:
                offered.append(q)
            expected = set(sorted(offered, key=lambda x: vf[x], reverse=True)[:capacity])
            if state.stored_questions() != expected:
                return False, f"memory diverged from top-{capacity} replay"
    return True, f"{rounds} random offer sequences"


def _verify_oracle_equivalence(rng: random.Random, rounds: int) -> tuple[bool, str]:
    for _ in range(rounds):
        universe = [f"q{i}" for i in range(rng.randrange(3, 10))]
        n = rng.randrange(1, 5)
        capacity = rng.randrange(1, 4)
        vfs = exp.random_value_suite(n, universe, rng.randrange(10**6))
        sim = exp.SimulatedValueSuite(vfs, capacity)
        thr = exp.ThresholdValueSuite(vfs, capacity)
        for _ in range(rng.randrange(1, 25)):
            q = universe[rng.randrange(len(universe))]
            fact = Fact(q, f"a-{q}")
            sim.offer(fact)
            thr.offer(fact)
            for probe in universe:
                if not np.array_equal(sim.knows(probe), thr.knows(probe)):
                    return False, f"backings disagree on {probe}"
    return True, f"{rounds} random suites"


def _verify_majority_cap(rng: random.Random, rounds: int) -> tuple[bool, str]:
    for _ in range(rounds):
        n = rng.randrange(1, 10)
        capacity = rng.randrange(1, 6)
        n_facts = rng.randrange(0, 4 * capacity + 8)
        weights = [rng.randrange(2) for _ in range(n)]
        if not any(weights):
            weights[rng.randrange(n)] = 1
        stores = []
        for _ in range(n):
            k = rng.randrange(0, capacity + 1)
            stores.append(set(rng.sample(range(n_facts), min(k, n_facts))))
        total = sum(weights)
        kept = [
            f
            for f in range(n_facts)
            if 2 * sum(w for w, s in zip(weights, stores) if f in s) >= total
        ]
        if len(kept) > 2 * capacity:
            return False, f"kept {len(kept)} facts with capacity {capacity}"
    return True, f"{rounds} random majority instances"


def _verify_run_bounds(seed: int, quick: bool) -> tuple[bool, str]:
    length = 4000 if quick else 20000
    failures = []
    for learner, experts in (
        ("lazy", "scripted:striped,N=8"),
        ("lazy", "values:N=8,universe=32"),
        ("value-lazy", "values:N=8,universe=32"),
    ):
        config = RunConfig(
            learner=learner,
            adversary=f"random:universe=32,T={length},teach=0.5,seed={seed}",
            experts=experts,
            capacity=4,
            seed=seed,
            verify_soundness=(learner == "value-lazy"),
        )
        _, report = run_game(config)
        if not report.passed:
            failed = [c.name for c in report.checks if c.gating and not c.passed]
            failures.append(f"{learner}/{experts}: {failed}")
    if failures:
        return False, "; ".join(failures)
    return True, f"3 seeded runs of length {length}"


def _verify_lower_bound(seed: int) -> tuple[bool, str]:
    # The construction's memory class must match the learner: the lazy
    # learners hold up to 2M facts, so they face c=2 instances; the budgeted
    # strawman faces c=1.
    for learner, c, n in (("lazy", 2, 16), ("value-lazy", 2, 16), ("random-evict", 1, 8)):
        capacity = 2
        opt = 1
        config = RunConfig(
            learner=learner,
            adversary=f"lowerbound:c={c},N={n},M={capacity},opt={opt}",
            capacity=capacity,
            seed=seed,
        )
        adversary = build_adversary(config)
        config = RunConfig(
            learner=learner, adversary=adversary, capacity=capacity, seed=seed
        )
        ledger, _ = run_game(config)
        need = _floor_log(2 * c, n) * (capacity // 2) + opt
        survivors = adversary.surviving_experts()
        best = int(min(ledger.expert_mistakes[e] for e in survivors))
        if ledger.learner_mistakes < need:
            return False, f"{learner}: {ledger.learner_mistakes} mistakes < {need}"
        if best > opt:
            return False, f"{learner}: surviving expert made {best} > {opt} mistakes"
    return True, "forced-mistake floor holds at matching memory class"


def _floor_log(base: int, n: int) -> int:
    k, power = 0, 1
    while power * base <= n:
        power *= base
        k += 1
    return k


def _verify_determinism(seed: int) -> tuple[bool, str]:
    import io

    outs = []
    for _ in range(2):
        config = RunConfig(
            learner="lazy",
            adversary=f"random:universe=16,T=2000,teach=0.5,seed={seed}",
            experts="scripted:recency,N=4",
            capacity=2,
            seed=seed,
        )
        ledger, _ = run_game(config)
        buf = io.StringIO()
        ledger.to_csv(buf)
        outs.append(buf.getvalue())
    if outs[0] != outs[1]:
        return False, "identical configs produced different CSVs"
    return True, "byte-identical repeat run"


def verify(seed: int = 0, quick: bool = False) -> tuple[bool, list[str]]:
    """Run the invariant battery; returns (all passed, report lines)."""
    rng = random.Random(seed)
    rounds = 40 if quick else 200
    battery = [
        ("sequential-scan", lambda: _verify_sequential_scan(rng, rounds)),
        ("value-expert-replay", lambda: _verify_replay_equivalence(rng, rounds)),
        ("oracle-backings", lambda: _verify_oracle_equivalence(rng, max(20, rounds // 4))),
        ("majority-memory-cap", lambda: _verify_majority_cap(rng, rounds * 10)),
        ("run-bounds", lambda: _verify_run_bounds(seed, quick)),
        ("lower-bound", lambda: _verify_lower_bound(seed)),
        ("determinism", lambda: _verify_determinism(seed)),
    ]
    lines = []
    all_ok = True
    for name, check in battery:
        ok, detail = check()
        all_ok &= ok
        lines.append(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return all_ok, lines
