"""The recursive commuting-subgroup construction and end-to-end certificates.

A not_type_I certificate exhibits pairs (g_i, h_i) with finite conjugacy
classes, the subgroups generated by those classes (pairwise commuting, each
non-abelian), and a growth witness: the factor decomposition of the closure
of the first N class unions puts measure > 1/2 - epsilon on atoms of
dimension >= 2^(2^(k-1)).  Certificates embed the group spec and replay from
JSON alone, independent of the search path that produced them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Union

from . import jsonutil
from .errors import (
    BudgetExceededError,
    ConsistencyError,
    ParameterError,
    PreconditionError,
    RequiresFiniteError,
)
from .fc_center import DEFAULT_CLASS_BUDGET, ConjugacyClass, conjugacy_class, fc_filter
from .groups import (
    DEFAULT_CLOSURE_BUDGET,
    GroupElement,
    GroupHandle,
    commutator,
    conjugate,
    construct_group,
    generate_closure,
)
from .vn_spectrum import GrowthResult, exact_fraction, factor_spectrum

DEFAULT_STREAM_BUDGET = 50_000


@dataclass(frozen=True)
class AbelianEvidence:
    """All scanned elements commute; a proof if the scan was exhaustive."""

    exhaustive: bool
    scanned: int
    budget: int


def find_noncommuting_pair(
    elements: Iterable[GroupElement],
    budget: int,
    membership=None,
) -> Union[tuple[GroupElement, GroupElement], AbelianEvidence]:
    """First non-commuting pair in enumeration order, or abelian evidence.

    Scans incrementally: each accepted element is tested against all earlier
    accepted elements, so the returned pair minimizes the later element's
    position, then the earlier one's.  `budget` bounds how many stream
    elements are consumed; an exhausted stream yields a proof of abelianness,
    a spent budget only evidence.
    """
    if budget < 1:
        raise ParameterError("scan budget must be >= 1")
    accepted: list[GroupElement] = []
    scanned = 0
    exhausted = True
    for e in elements:
        if scanned >= budget:
            exhausted = False
            break
        scanned += 1
        if membership is not None and not membership(e):
            continue
        for prior in accepted:
            if not commutator(prior, e).is_identity:
                return (prior, e)
        accepted.append(e)
    if scanned == 0:
        raise ParameterError("element stream is empty")
    return AbelianEvidence(exhausted, scanned, budget)


def kernel_membership(g: GroupElement, kernel_set: Iterable[GroupElement]) -> bool:
    """True iff g centralizes every element of the conjugation-stable set K.

    If g fails to centralize some b in K, the stability precondition
    gamma_g(K) = K is verified before returning False; instability raises
    PreconditionError.
    """
    ks = list(kernel_set)
    for b in ks:
        if conjugate(b, g) != b:
            forms = {x.form for x in ks}
            for c in ks:
                if conjugate(c, g).form not in forms:
                    raise PreconditionError(
                        f"K is not stable under conjugation by {g.describe()}: "
                        f"image of {c.describe()} escapes"
                    )
            return False
    return True


@dataclass
class WitnessLevel:
    index: int
    g: GroupElement
    h: GroupElement
    g_class: ConjugacyClass
    h_class: ConjugacyClass

    def generator_set(self) -> list[GroupElement]:
        return list(self.g_class.elements) + list(self.h_class.elements)

    def to_json(self) -> dict:
        return {
            "g": self.g.to_json(),
            "h": self.h.to_json(),
            "g_class": [e.to_json() for e in self.g_class.elements],
            "h_class": [e.to_json() for e in self.h_class.elements],
        }


@dataclass
class WitnessChecks:
    noncommuting_pairs: bool
    classes_conjugation_stable: bool
    pairwise_commuting: bool
    commutation_matrix: list[list[int]]  # checked generator pairs per (i, j)
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (self.noncommuting_pairs and self.classes_conjugation_stable
                and self.pairwise_commuting)


@dataclass
class CommutingWitness:
    handle: GroupHandle
    levels: list[WitnessLevel]
    requested: int
    complete: bool
    checks: Optional[WitnessChecks]
    diagnostics: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "requested": self.requested,
            "complete": self.complete,
            "levels": [lv.to_json() for lv in self.levels],
            "checks": None if self.checks is None else {
                "noncommuting_pairs": self.checks.noncommuting_pairs,
                "classes_conjugation_stable": self.checks.classes_conjugation_stable,
                "pairwise_commuting": self.checks.pairwise_commuting,
                "commutation_matrix": self.checks.commutation_matrix,
                "failures": list(self.checks.failures),
            },
            "diagnostics": list(self.diagnostics),
        }


def verify_witness_levels(handle: GroupHandle, levels: list[WitnessLevel]) -> WitnessChecks:
    """Exhaustive verification of the commuting-witness invariants."""
    failures: list[str] = []
    noncomm = True
    for lv in levels:
        if commutator(lv.g, lv.h).is_identity:
            noncomm = False
            failures.append(f"level {lv.index}: g and h commute")

    stable = True
    for lv in levels:
        for cls in (lv.g_class, lv.h_class):
            members = {e.form for e in cls.elements}
            if cls.representative.form not in members:
                stable = False
                failures.append(f"level {lv.index}: representative missing from its class")
            for c in cls.elements:
                for t in handle.conjugating_elements(cls.representative):
                    if conjugate(c, t).form not in members:
                        stable = False
                        failures.append(
                            f"level {lv.index}: class of {cls.representative.describe()} "
                            f"is not stable under {t.describe()}"
                        )
                        break

    k = len(levels)
    matrix = [[0] * k for _ in range(k)]
    commuting = True
    for i, j in itertools.combinations(range(k), 2):
        checked = 0
        for a in levels[i].generator_set():
            for b in levels[j].generator_set():
                checked += 1
                if not commutator(a, b).is_identity:
                    commuting = False
                    failures.append(
                        f"levels {i} and {j}: [{a.describe()}, {b.describe()}] != e"
                    )
        matrix[i][j] = matrix[j][i] = checked
    return WitnessChecks(noncomm, stable, commuting, matrix, failures)


class _Lemma10Builder:
    """Stateful recursion of the commuting-subgroup construction.

    Each step scans the fair enumeration filtered by kernel membership
    against K (the union of all classes chosen so far), picks the first
    non-commuting pair, and adds both conjugacy classes to K.
    """

    def __init__(self, handle: GroupHandle, *, stream_budget: int, class_budget: int,
                 fc_gate: bool):
        self.handle = handle
        self.stream_budget = stream_budget
        self.class_budget = class_budget
        self.fc_gate = fc_gate
        self.kernel: list[GroupElement] = []
        self.levels: list[WitnessLevel] = []
        self.diagnostics: list[str] = []
        self._fc_cache: dict = {}

    def _stream(self):
        for e in self.handle.iter_elements(self.stream_budget):
            yield e

    def _membership(self, e: GroupElement) -> bool:
        if not kernel_membership(e, self.kernel):
            return False
        if self.fc_gate and not e.is_identity:
            cls = self._class_of(e)
            if cls.exceeded:
                return False
        return True

    def _class_of(self, e: GroupElement) -> ConjugacyClass:
        cached = self._fc_cache.get(e.form)
        if cached is None:
            cached = conjugacy_class(e, self.handle, self.class_budget)
            self._fc_cache[e.form] = cached
        return cached

    def add_level(self) -> Optional[WitnessLevel]:
        result = find_noncommuting_pair(self._stream(), self.stream_budget,
                                        membership=self._membership)
        if isinstance(result, AbelianEvidence):
            kind = "exhaustive scan" if result.exhaustive else f"budget {result.budget}"
            self.diagnostics.append(
                f"step {len(self.levels) + 1}: no non-commuting pair in the filtered "
                f"stream ({kind}, {result.scanned} elements scanned)"
            )
            return None
        g, h = result
        g_cls = self._class_of(g)
        h_cls = self._class_of(h)
        if g_cls.exceeded or h_cls.exceeded:
            bad = g if g_cls.exceeded else h
            self.diagnostics.append(
                f"step {len(self.levels) + 1}: conjugacy class of {bad.describe()} "
                f"exceeded budget {self.class_budget}; element may lie outside G^fin"
            )
            return None
        level = WitnessLevel(len(self.levels), g, h, g_cls, h_cls)
        self.levels.append(level)
        self.kernel.extend(level.generator_set())
        return level


def lemma10_sequence(handle: GroupHandle, count: int, *,
                     stream_budget: int = DEFAULT_STREAM_BUDGET,
                     class_budget: int = DEFAULT_CLASS_BUDGET,
                     assert_hypothesis: bool = False) -> CommutingWitness:
    """Produce `count` non-commuting pairs in pairwise-commuting class subgroups.

    Precondition (family metadata, or `assert_hypothesis=True` from the
    caller): the streamed elements lie in G^fin and G^fin is not
    abelian-by-finite.  Budget exhaustion yields a partial witness flagged
    inconclusive; it never claims disproof.
    """
    if count < 1:
        raise ParameterError("pair count must be >= 1")
    meta = handle.metadata
    if not (meta.not_abelian_by_finite or assert_hypothesis):
        raise PreconditionError(
            "the construction requires G^fin not abelian-by-finite; the family does not "
            "declare it and the caller did not assert it"
        )
    builder = _Lemma10Builder(handle, stream_budget=stream_budget,
                              class_budget=class_budget,
                              fc_gate=meta.fc_all is not True)
    complete = True
    for _ in range(count):
        if builder.add_level() is None:
            complete = False
            break
    checks = verify_witness_levels(handle, builder.levels) if builder.levels else None
    return CommutingWitness(handle, builder.levels, count, complete, checks,
                            builder.diagnostics)


# ---------------------------------------------------------------------------
# classification


@dataclass
class ClassifyOptions:
    k: int = 2
    epsilon: Fraction = Fraction(1, 20)
    seed: int = 0
    closure_budget: int = DEFAULT_CLOSURE_BUDGET
    class_budget: int = DEFAULT_CLASS_BUDGET
    stream_budget: int = DEFAULT_STREAM_BUDGET
    max_levels: int = 8
    max_order: int = 5000
    tolerance: float = 1e-9

    def __post_init__(self):
        # thresholds must never hinge on float rounding; a float epsilon is
        # read as its decimal literal (0.05 -> 1/20)
        self.epsilon = exact_fraction(self.epsilon)
        if not 0 < self.epsilon < 1:
            raise ParameterError("epsilon must satisfy 0 < epsilon < 1")
        if self.k < 1:
            raise ParameterError("k must be >= 1")

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "epsilon": jsonutil.fraction_json(self.epsilon),
            "seed": self.seed,
            "closure_budget": self.closure_budget,
            "class_budget": self.class_budget,
            "stream_budget": self.stream_budget,
            "max_levels": self.max_levels,
            "max_order": self.max_order,
            "tolerance": self.tolerance,
        }


@dataclass
class DichotomyCertificate:
    verdict: str  # "type_I" | "not_type_I" | "inconclusive"
    group_spec: dict
    options: ClassifyOptions
    type_i_witness: Optional[dict] = None
    commuting_witness: Optional[CommutingWitness] = None
    growth: Optional[GrowthResult] = None
    diagnostics: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "format": "groupvna-certificate/1",
            "verdict": self.verdict,
            "group_spec": self.group_spec,
            "spec_digest": jsonutil.spec_digest(self.group_spec),
            "options": self.options.to_json(),
            "type_i_witness": self.type_i_witness,
            "commuting_witness": None if self.commuting_witness is None
            else self.commuting_witness.to_json(),
            "growth": None if self.growth is None else self.growth.to_json(),
            "diagnostics": list(self.diagnostics),
        }

    def to_bytes(self) -> bytes:
        return jsonutil.canonical_dumps(self.to_json()).encode("utf-8")


def _metadata_witness_consistent(handle: GroupHandle, probe: int,
                                 class_budget: int) -> tuple[bool, list[str]]:
    """Cross-check declared FC membership against budgeted class evidence."""
    meta = handle.metadata
    notes = []
    if meta.fc_member is None:
        return True, ["no exact FC-center predicate declared; skipping probe"]
    for v in fc_filter(handle, probe, budget=class_budget):
        declared = bool(meta.fc_member(v.element.form))
        if declared and not v.is_fc:
            return False, [f"{v.element.describe()} declared in G^fin but its class "
                           f"exceeded budget {v.budget}"]
        if not declared and v.is_fc:
            return False, [f"{v.element.describe()} declared outside G^fin but has a "
                           f"finite class of size {v.class_size}"]
        notes.append(f"fc probe {v.element.describe()}: "
                     + (f"fc({v.class_size})" if v.is_fc else "not_fc_evidence")
                     + (" [declared fc]" if declared else " [declared not fc]"))
    return True, notes


def classify(spec, options: Optional[ClassifyOptions] = None) -> DichotomyCertificate:
    """Assemble a dichotomy certificate for one group-spec document.

    Finite groups and groups with a declared abelian-by-finite witness are
    type_I.  Otherwise the commuting-subgroup recursion runs level by level,
    attaching growth evidence as soon as the measure threshold is cleared; any
    failure mode folds into an inconclusive verdict with diagnostics.
    """
    opts = options or ClassifyOptions()
    handle = construct_group(spec)
    spec_doc = handle.spec
    diagnostics: list[str] = []

    if handle.is_finite:
        witness = {
            "kind": "finite_group",
            "abelian_subgroup_generators": [],
            "index": handle.order,
            "note": "every finite group is abelian-by-finite (trivial subgroup)",
        }
        return DichotomyCertificate("type_I", spec_doc, opts, type_i_witness=witness,
                                    diagnostics=["group is finite; G^fin = G"])

    meta = handle.metadata
    if meta.abelian_by_finite is not None:
        ok, notes = _metadata_witness_consistent(handle, probe=6,
                                                 class_budget=opts.class_budget)
        diagnostics.extend(notes)
        if not ok:
            diagnostics.append("family metadata contradicts FC evidence")
            return DichotomyCertificate("inconclusive", spec_doc, opts,
                                        diagnostics=diagnostics)
        w = meta.abelian_by_finite
        gens = [handle.element(f) for f in w.generator_forms]
        for a in gens:
            for b in gens:
                if not commutator(a, b).is_identity:
                    diagnostics.append("declared abelian witness generators do not commute")
                    return DichotomyCertificate("inconclusive", spec_doc, opts,
                                                diagnostics=diagnostics)
        witness = {
            "kind": "family_metadata",
            "abelian_subgroup_generators": [g.to_json() for g in gens],
            "index": w.index,
            "note": w.note,
        }
        return DichotomyCertificate("type_I", spec_doc, opts, type_i_witness=witness,
                                    diagnostics=diagnostics)

    if not meta.not_abelian_by_finite:
        diagnostics.append(
            "no abelian-by-finite witness and the non-abelian-by-finite hypothesis "
            "is not declared for this family"
        )
        if meta.icc:
            diagnostics.append(
                "family metadata declares G^fin = {e} (icc); the infinite-index case "
                "has no finite certificate here - run icc-check for orthonormality evidence"
            )
        return DichotomyCertificate("inconclusive", spec_doc, opts, diagnostics=diagnostics)

    builder = _Lemma10Builder(handle, stream_budget=opts.stream_budget,
                              class_budget=opts.class_budget,
                              fc_gate=meta.fc_all is not True)
    dim_threshold = 2 ** (2 ** (opts.k - 1))
    measure_threshold = max(Fraction(1, 2) - opts.epsilon, Fraction(0))
    history = []
    growth: Optional[GrowthResult] = None
    while len(builder.levels) < opts.max_levels:
        level = builder.add_level()
        if level is None:
            break
        gens = [e for lv in builder.levels for e in lv.generator_set()]
        try:
            closure = generate_closure(gens, opts.closure_budget)
            measure = factor_spectrum(closure, opts.max_order).measure_dim_at_least(dim_threshold)
        except (BudgetExceededError, RequiresFiniteError, ConsistencyError) as e:
            builder.diagnostics.append(f"growth evaluation stopped: {type(e).__name__}: {e}")
            break
        history.append((len(builder.levels), closure.order, measure))
        if measure > measure_threshold:
            growth = GrowthResult(True, len(builder.levels), measure, dim_threshold,
                                  measure_threshold, opts.k, opts.epsilon, history,
                                  opts.max_levels)
            break
    diagnostics.extend(builder.diagnostics)

    if growth is None:
        diagnostics.append(
            f"no growth witness within {opts.max_levels} levels; hypothesis may fail "
            f"or budgets are too small"
        )
        witness = CommutingWitness(handle, builder.levels, opts.max_levels, False,
                                   verify_witness_levels(handle, builder.levels)
                                   if builder.levels else None,
                                   builder.diagnostics)
        return DichotomyCertificate("inconclusive", spec_doc, opts,
                                    commuting_witness=witness, diagnostics=diagnostics)

    checks = verify_witness_levels(handle, builder.levels)
    witness = CommutingWitness(handle, builder.levels, growth.levels_required, True,
                               checks, builder.diagnostics)
    if not checks.passed:
        diagnostics.append("witness invariant verification failed: " + "; ".join(checks.failures))
        return DichotomyCertificate("inconclusive", spec_doc, opts,
                                    commuting_witness=witness, diagnostics=diagnostics)
    return DichotomyCertificate("not_type_I", spec_doc, opts,
                                commuting_witness=witness, growth=growth,
                                diagnostics=diagnostics)


# ---------------------------------------------------------------------------
# certificate replay


@dataclass
class ReplayReport:
    verdict: str
    passed: bool
    checks: list[tuple[str, bool]]
    failures: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "passed": self.passed,
            "checks": [{"name": n, "passed": ok} for n, ok in self.checks],
            "failures": list(self.failures),
        }


def replay_certificate(cert: dict) -> ReplayReport:
    """Re-run every check a certificate claims, from its serialized form alone."""
    if cert.get("format") != "groupvna-certificate/1":
        raise ParameterError("not a recognized certificate document")
    verdict = cert["verdict"]
    handle = construct_group(cert["group_spec"])
    checks: list[tuple[str, bool]] = []
    failures: list[str] = []

    def record(name: str, ok: bool, detail: str = ""):
        checks.append((name, ok))
        if not ok:
            failures.append(detail or name)

    if verdict == "type_I":
        w = cert["type_i_witness"]
        gens = [handle.element_from_json(f) for f in w["abelian_subgroup_generators"]]
        ok = all(commutator(a, b).is_identity for a in gens for b in gens)
        record("witness_generators_commute", ok, "witness generators do not commute")
        if w["kind"] == "finite_group":
            record("index_matches_order", handle.is_finite and w["index"] == handle.order,
                   "declared index does not equal the group order")
        else:
            m = handle.metadata.abelian_by_finite
            ok = (m is not None and m.index == w["index"]
                  and list(m.generator_forms) == [g.form for g in gens])
            record("matches_family_metadata", ok,
                   "witness does not match the family's declared structure")
    elif verdict == "not_type_I":
        witness = cert["commuting_witness"]
        levels = []
        for lv_idx, lv in enumerate(witness["levels"]):
            g = handle.element_from_json(lv["g"])
            h = handle.element_from_json(lv["h"])
            record(f"level{lv_idx}_noncommuting", not commutator(g, h).is_identity,
                   f"level {lv_idx}: pair commutes")
            for name, rep_el in (("g", g), ("h", h)):
                claimed = {handle.element_from_json(f).form for f in lv[f"{name}_class"]}
                cls = conjugacy_class(rep_el, handle,
                                      max(DEFAULT_CLASS_BUDGET, 2 * len(claimed)))
                ok = (not cls.exceeded
                      and {e.form for e in cls.elements} == claimed)
                record(f"level{lv_idx}_{name}_class_exact", ok,
                       f"level {lv_idx}: serialized class of {name} is not the computed class")
            levels.append(WitnessLevel(
                lv_idx, g, h,
                ConjugacyClass(g, tuple(handle.element_from_json(f) for f in lv["g_class"]),
                               DEFAULT_CLASS_BUDGET),
                ConjugacyClass(h, tuple(handle.element_from_json(f) for f in lv["h_class"]),
                               DEFAULT_CLASS_BUDGET),
            ))
        wchecks = verify_witness_levels(handle, levels)
        record("witness_invariants", wchecks.passed, "; ".join(wchecks.failures))

        g = cert["growth"]
        n_req = g["levels_required"]
        gens = [e for lv in levels[:n_req] for e in lv.generator_set()]
        closure = generate_closure(gens)
        measure = factor_spectrum(closure).measure_dim_at_least(g["dim_threshold"])
        claimed = jsonutil.fraction_from_json(g["achieved_measure"])
        record("growth_measure_matches", measure == claimed,
               f"recomputed measure {measure} != claimed {claimed}")
        threshold = jsonutil.fraction_from_json(g["measure_threshold"])
        record("growth_measure_clears_threshold", measure > threshold,
               f"measure {measure} does not exceed {threshold}")
    else:
        record("inconclusive_makes_no_claims", True)

    return ReplayReport(verdict, all(ok for _, ok in checks), checks, failures)


