"""Bounded-memory experts and the membership oracle that learners query.

Two families of experts:

* **Value-based** experts rank every question with a per-expert injective
  score and always retain the ``capacity`` highest-scoring facts seen so far.
  They admit two interchangeable representations: an explicit eviction-based
  simulation (:class:`SimulatedValueSuite`) and a vectorized form that keeps
  only the shared seen-set plus each expert's running retention cutoff
  (:class:`ThresholdValueSuite`). Membership answers must agree; the test
  suite checks this exhaustively at small scale.

* **Scripted** experts follow deterministic stream-order policies (recency,
  first-seen, stride). Policies depend only on the stream, never on expert
  identity, so experts sharing a policy share one state machine.

Expert-suite files list one value per line: ``expert <id> value <qid> <nat>``.
Querying an (expert, question) pair the file never listed is an error.
"""

from __future__ import annotations

import random
from collections import OrderedDict
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .model import Answer, Fact, QuestionId

SENTINEL_VALUE = 0  # below every legal score; legal scores are integers >= 1


@dataclass(frozen=True)
class ValueFunction:
    """An injective question -> natural-number scoring, total on its domain."""

    values: Mapping[QuestionId, int]

    def __post_init__(self) -> None:
        seen: dict[int, QuestionId] = {}
        for q, v in self.values.items():
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ValueError(f"value for {q!r} must be an integer >= 1, got {v!r}")
            if v in seen:
                raise ValueError(
                    f"value function not injective: {q!r} and {seen[v]!r} share {v}"
                )
            seen[v] = q

    def __getitem__(self, question: QuestionId) -> int:
        try:
            return self.values[question]
        except KeyError:
            raise KeyError(f"value function undefined on question {question!r}") from None

    def __contains__(self, question: QuestionId) -> bool:
        return question in self.values

    @property
    def domain(self) -> frozenset[QuestionId]:
        return frozenset(self.values)


@dataclass(frozen=True)
class ValueBasedExpertState:
    """Explicit memory of a value-based expert: the top-``capacity`` facts
    seen so far, maintained by insert-or-evict."""

    values: ValueFunction
    capacity: int
    memory: frozenset[Fact] = frozenset()

    def __post_init__(self) -> None:
        if self.capacity < 1:
            raise ValueError("capacity must be >= 1")

    def stored_questions(self) -> frozenset[QuestionId]:
        return frozenset(f.question for f in self.memory)


def vb_offer(state: ValueBasedExpertState, fact: Fact) -> ValueBasedExpertState:
    """Offer one fact for storage; returns the successor state.

    Keeps the highest-valued facts: while under capacity everything is
    stored, afterwards the newcomer evicts the minimum-valued stored fact
    iff it outranks it. Re-offering a stored fact is a no-op; re-offering a
    stored question with a different answer is rejected.
    """
    value = state.values[fact.question]
    for stored in state.memory:
        if stored.question == fact.question:
            if stored.answer != fact.answer:
                raise ValueError(
                    f"conflicting answer for {fact.question!r}: "
                    f"stored {stored.answer!r}, offered {fact.answer!r}"
                )
            return state
    if len(state.memory) < state.capacity:
        return ValueBasedExpertState(state.values, state.capacity, state.memory | {fact})
    weakest = min(state.memory, key=lambda f: state.values[f.question])
    if value > state.values[weakest.question]:
        return ValueBasedExpertState(
            state.values, state.capacity, (state.memory - {weakest}) | {fact}
        )
    return state


def vb_true_threshold(state: ValueBasedExpertState) -> int:
    """The retention cutoff: the capacity-th largest value among questions
    shown so far, or the sentinel 0 while fewer have been seen.

    Because memory always holds exactly the top-``capacity`` seen facts, the
    cutoff equals the minimum stored value once memory is full.
    """
    if len(state.memory) < state.capacity:
        return SENTINEL_VALUE
    return min(state.values[f.question] for f in state.memory)


class ScriptedPolicy:
    """Deterministic retention rule over at most ``capacity`` facts.

    Policies see the identical stream every expert sees, so one instance can
    back any number of experts. ``offer`` returns the questions whose
    membership changed, which lets learners keep saver counts incremental.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._memory: "OrderedDict[QuestionId, Fact]" = OrderedDict()
        self._shown = 0

    def offer(self, fact: Fact) -> tuple[QuestionId, ...]:
        raise NotImplementedError

    def knows(self, question: QuestionId) -> bool:
        return question in self._memory

    def memory(self) -> frozenset[Fact]:
        return frozenset(self._memory.values())

    def size(self) -> int:
        return len(self._memory)


class KeepLastPolicy(ScriptedPolicy):
    """Retain the most recently shown distinct facts; re-shows refresh."""

    def offer(self, fact: Fact) -> tuple[QuestionId, ...]:
        self._shown += 1
        if fact.question in self._memory:
            self._memory.move_to_end(fact.question)
            return ()
        self._memory[fact.question] = fact
        if len(self._memory) > self.capacity:
            evicted, _ = self._memory.popitem(last=False)
            return (fact.question, evicted)
        return (fact.question,)


class KeepFirstPolicy(ScriptedPolicy):
    """Retain the first distinct facts shown; never evict."""

    def offer(self, fact: Fact) -> tuple[QuestionId, ...]:
        self._shown += 1
        if fact.question in self._memory or len(self._memory) >= self.capacity:
            return ()
        self._memory[fact.question] = fact
        return (fact.question,)


class StridePolicy(ScriptedPolicy):
    """Retain facts arriving at show-indices congruent to ``offset`` modulo
    ``stride``, evicting the oldest stored fact when full."""

    def __init__(self, capacity: int, stride: int, offset: int = 0):
        super().__init__(capacity)
        if stride < 1:
            raise ValueError("stride must be >= 1")
        self.stride = stride
        self.offset = offset % stride

    def offer(self, fact: Fact) -> tuple[QuestionId, ...]:
        index = self._shown
        self._shown += 1
        if index % self.stride != self.offset:
            return ()
        if fact.question in self._memory:
            self._memory.move_to_end(fact.question)
            return ()
        self._memory[fact.question] = fact
        if len(self._memory) > self.capacity:
            evicted, _ = self._memory.popitem(last=False)
            return (fact.question, evicted)
        return (fact.question,)


class SimulatedValueSuite:
    """Reference value-based suite: one eviction-based expert state each."""

    backing = "simulation"

    def __init__(self, value_functions: Sequence[ValueFunction], capacity: int):
        if not value_functions:
            raise ValueError("need at least one expert")
        self.capacity = capacity
        self.states = [ValueBasedExpertState(vf, capacity) for vf in value_functions]
        self._question_sets: list[frozenset[QuestionId]] = [
            frozenset() for _ in value_functions
        ]

    @property
    def n(self) -> int:
        return len(self.states)

    def offer(self, fact: Fact) -> tuple[QuestionId, ...] | None:
        changed: set[QuestionId] = set()
        for i, state in enumerate(self.states):
            nxt = vb_offer(state, fact)
            if nxt is not state:
                before = self._question_sets[i]
                self.states[i] = nxt
                after = nxt.stored_questions()
                self._question_sets[i] = after
                changed.update(before ^ after)
        return tuple(changed)

    def knows_one(self, expert: int, question: QuestionId) -> bool:
        if question not in self.states[expert].values:
            raise KeyError(
                f"expert {expert} declares no value for question {question!r}; "
                "the pair is illegal to query"
            )
        return question in self._question_sets[expert]

    def knows(self, question: QuestionId) -> np.ndarray:
        # A vector query touches every (expert, question) pair, so every
        # expert must declare the question.
        return np.fromiter(
            (self.knows_one(i, question) for i in range(self.n)),
            dtype=bool,
            count=self.n,
        )

    def knows_many(self, questions: Sequence[QuestionId]) -> np.ndarray:
        rows = [[self.knows_one(i, q) for i in range(self.n)] for q in questions]
        return np.asarray(rows, dtype=bool).reshape(len(questions), self.n)

    def count_active(self, question: QuestionId, active, token: object = None) -> int:
        return sum(
            1 for i in range(self.n) if active[i] and self.knows_one(i, question)
        )

    def memories(self) -> list[frozenset[Fact]]:
        return [state.memory for state in self.states]

    def union_memory(self) -> set[Fact]:
        out: set[Fact] = set()
        for state in self.states:
            out.update(state.memory)
        return out

    def true_thresholds(self) -> np.ndarray:
        return np.fromiter(
            (vb_true_threshold(s) for s in self.states), dtype=np.int64, count=self.n
        )


class ThresholdValueSuite:
    """Vectorized value-based suite over a declared finite universe.

    Holds the value matrix, the shared seen-mask, and each expert's running
    top-``capacity`` seen values (ascending; column 0 is the retention
    cutoff, 0 while under-full). Membership is
    ``seen(q) and value(e, q) >= cutoff(e)``.
    """

    backing = "threshold"

    def __init__(self, value_functions: Sequence[ValueFunction], capacity: int):
        if not value_functions:
            raise ValueError("need at least one expert")
        universe = sorted(value_functions[0].domain, key=str)
        for i, vf in enumerate(value_functions):
            if vf.domain != value_functions[0].domain:
                raise ValueError(
                    f"expert {i} declares a different question universe; "
                    "the vectorized suite needs a rectangular value table"
                )
        self.capacity = capacity
        self.universe: list[QuestionId] = universe
        self._col = {q: i for i, q in enumerate(universe)}
        self.values = np.array(
            [[vf[q] for q in universe] for vf in value_functions], dtype=np.int64
        )
        n = len(value_functions)
        self._seen = np.zeros(len(universe), dtype=bool)
        self._top = np.zeros((n, capacity), dtype=np.int64)
        self._answers: dict[int, Answer] = {}
        self._active_mask: np.ndarray | None = None  # cached per active-set version
        self._active_token: object = object()

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def _column(self, question: QuestionId) -> int:
        try:
            return self._col[question]
        except KeyError:
            raise KeyError(
                f"question {question!r} is outside the declared universe"
            ) from None

    def offer(self, fact: Fact) -> tuple[QuestionId, ...] | None:
        col = self._column(fact.question)
        if self._seen[col]:
            if self._answers[col] != fact.answer:
                raise ValueError(
                    f"conflicting answer for {fact.question!r}: "
                    f"stored {self._answers[col]!r}, offered {fact.answer!r}"
                )
            return ()  # re-shows never move a value-based memory
        self._seen[col] = True
        self._answers[col] = fact.answer
        v = self.values[:, col]
        improves = v > self._top[:, 0]
        if improves.any():
            block = self._top[improves]
            block[:, 0] = v[improves]
            block.sort(axis=1)
            self._top[improves] = block
        # First shows can raise cutoffs and so evict unknown other questions.
        return None

    def knows(self, question: QuestionId) -> np.ndarray:
        col = self._column(question)
        if not self._seen[col]:
            return np.zeros(self.n, dtype=bool)
        return self.values[:, col] >= self._top[:, 0]

    def knows_many(self, questions: Sequence[QuestionId]) -> np.ndarray:
        cols = np.fromiter(
            (self._column(q) for q in questions), dtype=np.int64, count=len(questions)
        )
        member = self.values[:, cols] >= self._top[:, :1]
        return member.T & self._seen[cols][:, None]

    def count_active(self, question: QuestionId, active, token: object = None) -> int:
        col = self._column(question)
        if not self._seen[col]:
            return 0
        if token is None or token != self._active_token:
            self._active_mask = np.asarray(active, dtype=bool)
            self._active_token = token
        return int(((self.values[:, col] >= self._top[:, 0]) & self._active_mask).sum())

    def true_thresholds(self) -> np.ndarray:
        return self._top[:, 0].copy()

    def memories(self) -> list[frozenset[Fact]]:
        seen_cols = np.flatnonzero(self._seen)
        out = []
        for e in range(self.n):
            cutoff = self._top[e, 0]
            kept = seen_cols[self.values[e, seen_cols] >= cutoff]
            out.append(
                frozenset(Fact(self.universe[c], self._answers[c]) for c in kept)
            )
        return out

    def union_memory(self) -> set[Fact]:
        seen_cols = np.flatnonzero(self._seen)
        if not seen_cols.size:
            return set()
        anyone = (self.values[:, seen_cols] >= self._top[:, :1]).any(axis=0)
        return {
            Fact(self.universe[c], self._answers[c]) for c in seen_cols[anyone]
        }


class ScriptedSuite:
    """Suite of policy-driven experts; ``expert_policy[i]`` names the policy
    backing expert ``i``."""

    backing = "scripted"

    def __init__(self, policies: Sequence[ScriptedPolicy], expert_policy: Sequence[int]):
        if not policies or not expert_policy:
            raise ValueError("need at least one policy and one expert")
        for p in expert_policy:
            if not 0 <= p < len(policies):
                raise ValueError(f"policy index {p} out of range")
        self.policies = list(policies)
        self.expert_policy = np.asarray(expert_policy, dtype=np.int64)
        self._expert_policy_list = list(expert_policy)
        self.capacity = max(p.capacity for p in policies)
        self._mult: list[int] | None = None  # active experts per policy
        self._mult_token: object = object()

    @property
    def n(self) -> int:
        return len(self.expert_policy)

    def offer(self, fact: Fact) -> tuple[QuestionId, ...] | None:
        changed = None
        for policy in self.policies:
            delta = policy.offer(fact)
            if delta:
                if changed is None:
                    changed = list(delta)
                else:
                    changed.extend(delta)
        return changed if changed is not None else ()

    def knows(self, question: QuestionId) -> np.ndarray:
        bits = np.fromiter(
            (question in p._memory for p in self.policies),
            dtype=bool,
            count=len(self.policies),
        )
        return bits[self.expert_policy]

    def knows_many(self, questions: Sequence[QuestionId]) -> np.ndarray:
        n_pol = len(self.policies)
        memories = [p._memory for p in self.policies]
        bits = np.fromiter(
            (q in mem for q in questions for mem in memories),
            dtype=bool,
            count=len(questions) * n_pol,
        ).reshape(len(questions), n_pol)
        return bits[:, self.expert_policy]

    def count_active(self, question: QuestionId, active, token: object = None) -> int:
        if token is None or token != self._mult_token:
            mult = [0] * len(self.policies)
            for e, p in enumerate(self._expert_policy_list):
                if active[e]:
                    mult[p] += 1
            self._mult = mult
            self._mult_token = token
        total = 0
        for i, policy in enumerate(self.policies):
            if question in policy._memory:
                total += self._mult[i]
        return total

    def memories(self) -> list[frozenset[Fact]]:
        per_policy = [p.memory() for p in self.policies]
        return [per_policy[p] for p in self.expert_policy]

    def union_memory(self) -> set[Fact]:
        out: set[Fact] = set()
        for policy in self.policies:
            out.update(policy.memory())
        return out


ExpertSuite = SimulatedValueSuite | ThresholdValueSuite | ScriptedSuite


class OracleHandle:
    """Membership queries against a live expert suite.

    Answers reflect the suite's current memories; the game loop controls when
    those memories advance, so query timing is the caller's contract.
    """

    def __init__(self, suite: ExpertSuite, expert_ids: Sequence[str] | None = None):
        self.suite = suite
        self.backing = suite.backing
        ids = list(expert_ids) if expert_ids is not None else [str(i) for i in range(suite.n)]
        if len(ids) != suite.n:
            raise ValueError("expert id list does not match suite size")
        self._index = {eid: i for i, eid in enumerate(ids)}
        self.expert_ids = ids

    @property
    def n(self) -> int:
        return self.suite.n

    def query(self, expert: str | int, question: QuestionId) -> bool:
        if isinstance(expert, int):
            if not 0 <= expert < self.suite.n:
                raise KeyError(f"unknown expert index {expert}")
            idx = expert
        else:
            try:
                idx = self._index[expert]
            except KeyError:
                raise KeyError(f"unknown expert id {expert!r}") from None
        single = getattr(self.suite, "knows_one", None)
        if single is not None:
            return bool(single(idx, question))
        return bool(self.suite.knows(question)[idx])

    def knows(self, question: QuestionId) -> np.ndarray:
        return self.suite.knows(question)

    def knows_many(self, questions: Sequence[QuestionId]) -> np.ndarray:
        return self.suite.knows_many(questions)

    def count_active(self, question: QuestionId, active, token: object = None) -> int:
        """How many experts under the ``active`` mask (array or list of
        bools) store the fact for ``question``. ``token`` identifies the
        mask's version so suites can cache per-mask aggregates."""
        counter = getattr(self.suite, "count_active", None)
        if counter is not None:
            return counter(question, active, token)
        know = self.suite.knows(question)
        return sum(1 for i in range(self.n) if active[i] and know[i])


def oracle_query(oracle: OracleHandle, expert: str | int, question: QuestionId) -> bool:
    return oracle.query(expert, question)


def true_mistake_update(suite: ExpertSuite, question: QuestionId) -> np.ndarray:
    """Per-expert 0/1 cost vector for an evaluate of ``question`` against the
    suite's current memories (ground truth for the ledger, never fed back
    into learners except through the oracle)."""
    return ~suite.knows(question)


def random_value_suite(
    n_experts: int, universe: Sequence[QuestionId], seed: int
) -> list[ValueFunction]:
    """One independent random injective scoring per expert (a permutation of
    1..|universe|), deterministic in the seed."""
    rng = random.Random(seed)
    out = []
    for _ in range(n_experts):
        scores = list(range(1, len(universe) + 1))
        rng.shuffle(scores)
        out.append(ValueFunction(dict(zip(universe, scores))))
    return out


def _scripted_recency(n: int, capacity: int) -> ScriptedSuite:
    return ScriptedSuite([KeepLastPolicy(capacity)], [0] * n)


def _scripted_first_vs_last(n: int, capacity: int) -> ScriptedSuite:
    policies = [KeepFirstPolicy(capacity), KeepLastPolicy(capacity)]
    return ScriptedSuite(policies, [i % 2 for i in range(n)])


def _scripted_striped(n: int, capacity: int) -> ScriptedSuite:
    policies: list[ScriptedPolicy] = [
        KeepLastPolicy(capacity),
        StridePolicy(capacity, 2, 0),
        StridePolicy(capacity, 3, 1),
        KeepFirstPolicy(capacity),
    ]
    return ScriptedSuite(policies, [i % len(policies) for i in range(n)])


SCRIPTED_SUITES = {
    "recency": _scripted_recency,
    "first-vs-last": _scripted_first_vs_last,
    "striped": _scripted_striped,
}


def build_scripted_suite(name: str, n_experts: int, capacity: int) -> ScriptedSuite:
    try:
        builder = SCRIPTED_SUITES[name]
    except KeyError:
        raise ValueError(
            f"unknown scripted suite {name!r}; registered: {sorted(SCRIPTED_SUITES)}"
        ) from None
    return builder(n_experts, capacity)


def dump_expert_suite(
    table: Mapping[str, Mapping[QuestionId, int]], out: IO[str]
) -> None:
    for expert_id in table:
        eid = str(expert_id)
        if any(ch.isspace() for ch in eid) or not eid:
            raise ValueError(f"expert id {eid!r} is empty or contains whitespace")
        for q, v in table[expert_id].items():
            qid = str(q)
            if any(ch.isspace() for ch in qid) or not qid:
                raise ValueError(f"question id {qid!r} is empty or contains whitespace")
            out.write(f"expert {eid} value {qid} {int(v)}\n")


def load_expert_suite(lines: Iterable[str]) -> dict[str, dict[str, int]]:
    """Parse ``expert <id> value <qid> <natural>`` lines into per-expert value
    tables. Duplicate (expert, qid) pairs and non-natural values are errors;
    unlisted pairs stay illegal to query."""
    table: dict[str, dict[str, int]] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) != 5 or tokens[0] != "expert" or tokens[2] != "value":
            raise ValueError(f"line {lineno}: malformed suite entry {line!r}")
        eid, qid, value_token = tokens[1], tokens[3], tokens[4]
        try:
            value = int(value_token)
        except ValueError:
            raise ValueError(f"line {lineno}: value {value_token!r} is not an integer") from None
        if value < 1:
            raise ValueError(f"line {lineno}: values must be >= 1, got {value}")
        per = table.setdefault(eid, {})
        if qid in per:
            raise ValueError(f"line {lineno}: duplicate entry for expert {eid} question {qid}")
        per[qid] = value
    if not table:
        raise ValueError("expert suite file declares no experts")
    return table
