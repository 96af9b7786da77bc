"""Instance generators and the staged attack on online rules.

The constructions here come in two flavors. The generators build fixed
instances: the hard 4-agent families around ambiguous (tie) columns, the
large family separating maximum Nash welfare from the adaptive share,
and a handful of small named examples. The adaptive attack is different:
it plays against a live online rule, feeding columns one at a time and
branching on the decisions it observes, until it can exhibit a concrete
violation of the rule's adaptive-share guarantee.

Attack columns always put the minority on bit 0. Agent arguments such as
``ell`` and ``mu`` are 1-based throughout this module, matching how they
appear in reports; column indices inside certificates are 0-based in
memory and 1-based in JSON.

The attack's violation test is exact: after every fed column it evaluates
a small catalog of witness partitions with ``partition_guarantee`` and
compares against realized utilities. A returned certificate is therefore
sound by construction, independent of any bookkeeping along the way.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .model import (
    CanonicalType,
    Partition,
    PreferenceMatrix,
    canonicalize,
    parse_matrix,
    utility,
)
from .rules import DecisionRecord, Rule, RuleTranscript, build_rule
from .shares import partition_guarantee

__all__ = [
    "gen_stage1",
    "gen_stage2",
    "gen_stage3",
    "gen_ambiguity_instances",
    "gen_mnw_gap",
    "gen_named_examples",
    "all_consensus",
    "all_opposed",
    "NamedInstance",
    "AttackState",
    "ViolationCertificate",
    "AttackExhausted",
    "CertificateError",
    "adaptive_attack",
    "ATTACK_COLUMN_CAP_FACTOR",
]

ATTACK_COLUMN_CAP_FACTOR = 4


def _minority_column(n: int, minority: Iterable[int]) -> tuple[int, ...]:
    """Column with bit 0 exactly for the given 1-based agents."""
    col = [1] * n
    for a in minority:
        if not 1 <= a <= n:
            raise ValueError(f"agent {a} out of range for n={n}")
        col[a - 1] = 0
    return tuple(col)


def gen_stage1(n: int) -> list[tuple[int, ...]]:
    """Opening script: agent 1 in the minority on every column.

    Column i pairs agent 1 with agent i+1 in the minority; the last
    column leaves agent 1 alone there. Any rule that never sides with
    the minority hands agent 1 zero utility across all n columns.
    """
    if n < 3:
        raise ValueError(f"stage 1 needs n >= 3, got {n}")
    cols = [_minority_column(n, (1, i + 1)) for i in range(1, n)]
    cols.append(_minority_column(n, (1,)))
    return cols


def gen_stage2(n: int, ell: int | None, mu: int) -> list[tuple[int, ...]]:
    """Second forcing script, aimed at agent ``mu``.

    The first n-3 columns pair ``mu`` with each agent outside
    {1, ell, mu} in ascending order, then ``mu`` pairs with agent 1, and
    the final column has ``mu`` alone in the minority. ``ell`` may be
    None when the first stage ended on the solo column.
    """
    if n < 7:
        raise ValueError(f"stage 2 needs n >= 7, got {n}")
    excluded = {1, mu} if ell is None else {1, ell, mu}
    if mu in (1, ell):
        raise ValueError(f"mu={mu} must differ from agent 1 and ell={ell}")
    if ell is not None and not 2 <= ell <= n:
        raise ValueError(f"ell={ell} out of range")
    partners = [a for a in range(2, n + 1) if a not in excluded]
    cols = [_minority_column(n, (mu, x)) for x in partners[: n - 3]]
    cols.append(_minority_column(n, (mu, 1)))
    cols.append(_minority_column(n, (mu,)))
    return cols


def gen_stage3(
    n: int, ell: int | None, mu: int
) -> tuple[list[tuple[int, ...]], list[tuple[int, ...]]]:
    """Cascade scripts: the targeted opener and one full cycle.

    The first block pairs agent 1 with each agent outside {1, ell, mu}
    (n-3 columns); the cycle block pairs agent 1 with agents 2..n in
    order (n-1 columns) and is meant to be repeated.
    """
    if n < 7:
        raise ValueError(f"stage 3 needs n >= 7, got {n}")
    excluded = {1, mu} if ell is None else {1, ell, mu}
    partners = [a for a in range(2, n + 1) if a not in excluded]
    s3a = [_minority_column(n, (1, j)) for j in partners[: n - 3]]
    s3b = [_minority_column(n, (1, i + 1)) for i in range(1, n)]
    return s3a, s3b


# ---------------------------------------------------------------------------
# fixed instance families


@dataclass(frozen=True)
class NamedInstance:
    """A generated instance together with the share facts it was built
    to exhibit (1-based agent -> claimed lower bound on the adaptive
    share). The claims are verified against the solver in the tests."""

    name: str
    matrix: PreferenceMatrix
    mms_claims: Mapping[int, int]


_T2 = (0, 0, 1, 1)
_T3 = (0, 1, 0, 1)
_T4 = (0, 1, 1, 0)
_A2 = (0, 1, 0, 0)
_A3 = (0, 0, 1, 0)
_A4 = (0, 0, 0, 1)


def gen_ambiguity_instances() -> tuple[NamedInstance, ...]:
    """The 4-agent families that make tie columns genuinely hard.

    Three instances: one of each tie type; a tie mix padded with three
    columns opposing agent 2; and the heavy family of three columns
    opposing each of agents 3 and 4 plus one tie with each.
    """
    triple = PreferenceMatrix.from_columns([_T2, _T3, _T4])
    heavy2 = PreferenceMatrix.from_columns([_T2, _T2, _T3, _T4] + [_A2] * 3)
    final = PreferenceMatrix.from_columns([_A3] * 3 + [_A4] * 3 + [_T3, _T4])
    return (
        NamedInstance("ambiguous-triple", triple, {1: 1, 2: 1, 3: 1, 4: 1}),
        NamedInstance("alpha2-heavy", heavy2, {2: 2}),
        NamedInstance("final-45", final, {2: 5}),
    )


def gen_mnw_gap(n: int) -> PreferenceMatrix:
    """Family separating maximum Nash welfare from the adaptive share.

    Builds an (n+1)-agent instance with m = (n+k)(n+1) columns for
    k = n(n-3)/2: each agent except the first is the sole minority on
    n+1 columns, and agent 1 sits in the minority on k(n+1) columns,
    one third of them alongside each third of the other agents. The
    divisibility constraints keep every block size integral.
    """
    if n < 9:
        raise ValueError(f"gap construction needs n >= 9, got {n}")
    if n % 3 != 0 or n % 2 != 1:
        raise ValueError(f"gap construction needs n divisible by 3 and odd, got {n}")
    agents = n + 1
    k = n * (n - 3) // 2
    cols: list[tuple[int, ...]] = []
    for i in range(2, agents + 1):
        cols.extend([_minority_column(agents, (i,))] * agents)
    third = n // 3
    block = k * agents // 3
    for r in range(3):
        group = range(2 + r * third, 2 + (r + 1) * third)
        col = _minority_column(agents, (1, *group))
        cols.extend([col] * block)
    return PreferenceMatrix.from_columns(cols, n_agents=agents)


def all_consensus(n: int, m: int) -> PreferenceMatrix:
    """Everyone wants 1 on every decision."""
    return PreferenceMatrix.from_rows([(1,) * m] * n)


def all_opposed(n: int, m: int) -> PreferenceMatrix:
    """Agent 1 wants 0 everywhere; everyone else wants 1."""
    return PreferenceMatrix.from_rows([(0,) * m] + [(1,) * m] * (n - 1))


def gen_named_examples() -> dict[str, PreferenceMatrix]:
    """Small named instances used throughout the documentation and tests."""
    jr_vs_mms = PreferenceMatrix.from_rows(
        [
            (1, 1, 0, 1, 1, 0, 1, 1, 0),
            (1, 1, 1, 1, 1, 1, 1, 1, 1),
            (0, 0, 1, 0, 0, 1, 0, 0, 1),
        ]
    )
    mms_vs_rds = PreferenceMatrix.from_rows([(1, 1), (1, 0), (0, 1), (0, 0)])
    mnw_vs_mms = PreferenceMatrix.from_columns(
        [(0, 1, 1)] * 9 + [(1, 0, 1)] * 3 + [(1, 1, 0)] * 3
    )
    return {
        "jr_vs_mms": jr_vs_mms,
        "mms_vs_rds": mms_vs_rds,
        "mnw_vs_mms": mnw_vs_mms,
    }


# ---------------------------------------------------------------------------
# the adaptive attack


@dataclass
class AttackState:
    """Mutable bookkeeping for one attack run.

    ``t`` and ``tau`` are the 1-based script positions of the first and
    second observed minority decisions; ``ell``, ``mu``, ``mu_prime``
    the agents the script singles out; ``majority_counts`` the per-type
    majority-decision tally. The log keeps (stage, column, bit) rows.
    """

    stage: str = "I1"
    t: int | None = None
    tau: int | None = None
    ell: int | None = None
    mu: int | None = None
    mu_prime: int | None = None
    majority_counts: dict[CanonicalType, int] = field(default_factory=dict)
    log: list[tuple[str, tuple[int, ...], int]] = field(default_factory=list)


@dataclass(frozen=True)
class ViolationCertificate:
    """Proof that a rule fell short of an adaptive-share guarantee.

    The witness partition certifies ``guarantee <= mms_adapt`` for the
    victim on the recorded instance, while ``achieved`` is the victim's
    realized utility; validity means ``achieved < guarantee``, and both
    numbers can be recomputed from the other fields alone.
    """

    rule: str
    instance: PreferenceMatrix
    transcript: RuleTranscript
    victim: int
    witness: Partition
    guarantee: int
    achieved: int

    def to_dict(self) -> dict:
        return {
            "rule": self.rule,
            "n": self.instance.n,
            "instance": self.instance.to_text(),
            "decisions": "".join(map(str, self.transcript.outcome)),
            "victim": self.victim + 1,
            "witness": [[j + 1 for j in bundle] for bundle in self.witness.bundles],
            "guarantee": self.guarantee,
            "achieved": self.achieved,
        }

    def to_json(self, *, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "ViolationCertificate":
        try:
            blob = json.loads(text)
        except json.JSONDecodeError as exc:
            raise CertificateError(f"certificate is not valid JSON: {exc}") from None
        return cls.from_dict(blob)

    @classmethod
    def from_dict(cls, blob: Mapping) -> "ViolationCertificate":
        for key in ("instance", "decisions", "victim", "witness", "guarantee", "achieved"):
            if key not in blob:
                raise CertificateError(f"certificate is missing field {key!r}")
        try:
            instance = parse_matrix(blob["instance"])
        except ValueError as exc:
            raise CertificateError(f"bad instance: {exc}") from None
        decisions = str(blob["decisions"])
        if not set(decisions) <= {"0", "1"} or len(decisions) != instance.m:
            raise CertificateError(
                f"decision string must be {instance.m} bits, got {decisions!r}"
            )
        outcome = tuple(int(b) for b in decisions)
        victim = blob["victim"]
        if not isinstance(victim, int) or not 1 <= victim <= instance.n:
            raise CertificateError(f"victim {victim!r} out of range")
        try:
            witness = Partition.of(
                [[j - 1 for j in bundle] for bundle in blob["witness"]],
                n_agents=instance.n,
                n_decisions=instance.m,
            )
        except (TypeError, ValueError) as exc:
            raise CertificateError(f"bad witness partition: {exc}") from None
        guarantee, achieved = blob["guarantee"], blob["achieved"]
        if not isinstance(guarantee, int) or not isinstance(achieved, int):
            raise CertificateError("guarantee and achieved must be integers")
        rule_name = str(blob.get("rule", "?"))
        transcript = _replay_transcript(rule_name, instance, outcome)
        return cls(
            rule=rule_name,
            instance=instance,
            transcript=transcript,
            victim=victim - 1,
            witness=witness,
            guarantee=guarantee,
            achieved=achieved,
        )


class CertificateError(ValueError):
    """A serialized certificate is structurally unusable."""


@dataclass(frozen=True)
class AttackExhausted:
    """The full script ran without producing a certificate.

    The staged argument guarantees a violation for every online rule at
    these sizes, so this report signals an implementation inconsistency
    rather than a surviving rule; it carries the evidence for debugging.
    """

    rule: str
    n: int
    instance: PreferenceMatrix
    transcript: RuleTranscript
    reason: str

    def to_dict(self) -> dict:
        return {
            "rule": self.rule,
            "n": self.n,
            "exhausted": True,
            "reason": self.reason,
            "instance": self.instance.to_text(),
            "decisions": "".join(map(str, self.transcript.outcome)),
        }

    def to_json(self, *, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _replay_transcript(
    name: str, matrix: PreferenceMatrix, outcome: Sequence[int]
) -> RuleTranscript:
    counters: dict[CanonicalType, int] = {}
    records = []
    for j in range(matrix.m):
        column = matrix.column(j)
        ctype, flipped = canonicalize(column)
        k = counters.get(ctype, 0)
        counters[ctype] = k + 1
        records.append(
            DecisionRecord(
                column=column,
                type_bits=ctype.bits,
                flipped=flipped,
                counter=k,
                bit=outcome[j],
            )
        )
    return RuleTranscript(
        rule=name,
        n=matrix.n,
        records=tuple(records),
        outcome=tuple(outcome),
        utilities=tuple(utility(matrix, outcome, i) for i in range(matrix.n)),
        counters=counters,
    )


def _minority_pref(column: Sequence[int]) -> int | None:
    """The minority side's preferred bit, or None on ties and consensus."""
    ones = sum(column)
    n = len(column)
    if ones == 0 or ones == n or 2 * ones == n:
        return None
    return 1 if 2 * ones < n else 0


class _ScriptStop(Exception):
    def __init__(self, reason: str):
        self.reason = reason


class _AttackDriver:
    def __init__(self, rule: Rule, n: int, cap: int):
        self.rule = rule
        self.n = n
        self.cap = cap
        self.step = rule.stepper(n)
        self.columns: list[tuple[int, ...]] = []
        self.bits: list[int] = []
        self.state = AttackState()
        self.specials: list[int] = []
        self.stage3_from: int | None = None

    # -- feeding ----------------------------------------------------------

    def feed(self, column: tuple[int, ...], stage: str) -> ViolationCertificate | None:
        if len(self.columns) >= self.cap:
            raise _ScriptStop(f"safety cap of {self.cap} columns reached")
        self.state.stage = stage
        bit = self.step.decide(column)
        if bit not in (0, 1):
            raise _ScriptStop(f"rule produced non-bit decision {bit!r}")
        self.columns.append(column)
        self.bits.append(bit)
        self.state.log.append((stage, column, bit))
        minority = _minority_pref(column)
        if minority is not None and bit != minority:
            ctype, _ = canonicalize(column)
            self.state.majority_counts[ctype] = (
                self.state.majority_counts.get(ctype, 0) + 1
            )
        return self._check_witnesses()

    def decided_minority(self) -> bool:
        minority = _minority_pref(self.columns[-1])
        return minority is not None and self.bits[-1] == minority

    # -- witnesses --------------------------------------------------------

    def _census(self) -> list[list[int]]:
        order: dict[CanonicalType, list[int]] = {}
        for j, column in enumerate(self.columns):
            ctype, _ = canonicalize(column)
            order.setdefault(ctype, []).append(j)
        return list(order.values())

    def _witnesses(self) -> list[Partition]:
        # catalog order: singletons (when every column fits in its own
        # bundle), then the two per-type round-robin spreads (only once
        # some type has repeats to spread), then the cascade split
        n = self.n
        m = len(self.columns)
        census = self._census()
        out = []
        if m <= n:
            bundles = [[j] for j in range(m)] + [[] for _ in range(n - m)]
            out.append(Partition.of(bundles, n_agents=n, n_decisions=m))
        if any(len(occurrences) >= 2 for occurrences in census):
            for offset_per_type in (False, True):
                bundles = [[] for _ in range(n)]
                for c, occurrences in enumerate(census):
                    start = c if offset_per_type else 0
                    for k, j in enumerate(occurrences):
                        bundles[(start + k) % n].append(j)
                out.append(Partition.of(bundles, n_agents=n, n_decisions=m))
        if self.stage3_from is not None:
            head = set(self.specials) | set(range(self.stage3_from, m))
            bundles = [sorted(head)] + [[] for _ in range(n - 1)]
            for occurrences in census:
                k = 0
                for j in occurrences:
                    if j in head:
                        continue
                    bundles[1 + k % (n - 1)].append(j)
                    k += 1
            out.append(Partition.of(bundles, n_agents=n, n_decisions=m))
        return out

    def _check_witnesses(self) -> ViolationCertificate | None:
        matrix = PreferenceMatrix.from_columns(self.columns, n_agents=self.n)
        witnesses = self._witnesses()
        utilities = [utility(matrix, self.bits, i) for i in range(self.n)]
        for i in range(self.n):
            for partition in witnesses:
                guarantee = partition_guarantee(matrix, i, partition)
                if utilities[i] < guarantee:
                    return ViolationCertificate(
                        rule=self.rule.name,
                        instance=matrix,
                        transcript=_replay_transcript(self.rule.name, matrix, self.bits),
                        victim=i,
                        witness=partition,
                        guarantee=guarantee,
                        achieved=utilities[i],
                    )
        return None

    # -- script -----------------------------------------------------------

    def run(self) -> ViolationCertificate | AttackExhausted:
        try:
            return self._script()
        except _ScriptStop as stop:
            matrix = PreferenceMatrix.from_columns(self.columns, n_agents=self.n)
            return AttackExhausted(
                rule=self.rule.name,
                n=self.n,
                instance=matrix,
                transcript=_replay_transcript(self.rule.name, matrix, self.bits),
                reason=stop.reason,
            )

    def _script(self) -> ViolationCertificate:
        n = self.n
        state = self.state
        s1 = gen_stage1(n)
        for position, column in enumerate(s1, start=1):
            cert = self.feed(column, "I1")
            if cert is not None:
                return cert
            if self.decided_minority():
                state.t = position
                self.specials.append(len(self.columns) - 1)
                break
        if state.t is None:
            raise _ScriptStop(
                "opening stage passed with no minority decision and no certificate"
            )
        state.ell = state.t + 1 if state.t <= n - 1 else None
        state.mu = next(a for a in range(2, n + 1) if a != state.ell)

        state.stage = "I2"
        for column in s1[: state.t - 1]:
            for _ in range(n - 1):
                cert = self.feed(column, "I2")
                if cert is not None:
                    return cert

        s2 = gen_stage2(n, state.ell, state.mu)
        for position, column in enumerate(s2, start=1):
            cert = self.feed(column, "II1")
            if cert is not None:
                return cert
            if self.decided_minority():
                state.tau = position
                self.specials.append(len(self.columns) - 1)
                partners = [
                    a for a in range(1, n + 1) if column[a - 1] == 0 and a != state.mu
                ]
                state.mu_prime = partners[0] if partners else None
                break

        if state.tau is not None:
            state.stage = "II2"
            for column in s2[: state.tau - 1]:
                for _ in range(n - 1):
                    cert = self.feed(column, "II2")
                    if cert is not None:
                        return cert

        self.stage3_from = len(self.columns)
        s3a, s3b = gen_stage3(n, state.ell, state.mu)
        for column in s3a:
            cert = self.feed(column, "III-a")
            if cert is not None:
                return cert
        for _ in range(n - 1):
            for column in s3b:
                cert = self.feed(column, "III-b")
                if cert is not None:
                    return cert
        state.stage = "done"
        raise _ScriptStop(
            "script completed without a violation; the staged argument promises "
            "one, so this indicates an inconsistency in the attack implementation"
        )


def adaptive_attack(
    rule: Rule | str, n: int, *, max_columns: int | None = None
) -> ViolationCertificate | AttackExhausted:
    """Attack an online rule with n agents and extract a certificate.

    Plays the staged script: force a minority decision while agent 1
    starves, amplify the forced types, repeat against a second agent,
    then cascade. After every column each catalog witness is evaluated
    exactly for every agent (agent order first, then witness order), and
    the first violation found is returned. A completed script without a
    violation yields an :class:`AttackExhausted` report instead.

    The rule must be online and not horizon-aware; it sees columns
    strictly one at a time. ``max_columns`` overrides the default safety
    cap of 4n².
    """
    if isinstance(rule, str):
        rule = build_rule(rule)
    if n < 7:
        raise ValueError(f"the staged attack needs n >= 7, got {n}")
    if not rule.online or rule.horizon_aware:
        raise ValueError(
            f"rule {rule.name!r} is not attackable: the script requires an online "
            "rule that decides without knowing the horizon"
        )
    if rule.required_agents is not None and rule.required_agents != n:
        raise ValueError(
            f"rule {rule.name!r} is fixed to {rule.required_agents} agents"
        )
    cap = ATTACK_COLUMN_CAP_FACTOR * n * n if max_columns is None else max_columns
    driver = _AttackDriver(rule, n, cap)
    return driver.run()
