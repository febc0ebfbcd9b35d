"""Commuting-subgroup recursion, classification, and certificate replay."""

import json
from fractions import Fraction

import pytest

from corpus import SPEC_Q8SUM, SPEC_S3SUM, spec_symmetric
from groupvna.dichotomy import (
    AbelianEvidence,
    ClassifyOptions,
    classify,
    find_noncommuting_pair,
    kernel_membership,
    lemma10_sequence,
    replay_certificate,
)
from groupvna.errors import ParameterError, PreconditionError
from groupvna.fc_center import conjugacy_class
from groupvna.groups import construct_group, generate_closure


# ---------------------------------------------------------------------------
# find_noncommuting_pair


def test_first_pair_in_s3():
    s3 = construct_group(spec_symmetric(3))
    got = find_noncommuting_pair(s3.iter_elements(6), budget=6)
    assert got == (s3.element((1, 0, 2)), s3.element((1, 2, 0)))


def test_cyclic_group_abelian_proof():
    c4 = construct_group({"family": "cyclic", "n": 4})
    got = find_noncommuting_pair(c4.iter_elements(), budget=100)
    assert isinstance(got, AbelianEvidence)
    assert got.exhaustive and got.scanned == 4


def test_budgeted_scan_is_evidence_only():
    dinf = construct_group({"family": "dihedral_infinite"})
    translations = (e for e in dinf.iter_elements(500) if e.form[1] == 0)
    got = find_noncommuting_pair(translations, budget=50)
    assert isinstance(got, AbelianEvidence)
    assert not got.exhaustive


def test_pair_found_in_first_coordinate_of_restricted_sum():
    ss = construct_group(SPEC_S3SUM)
    g, h = find_noncommuting_pair(ss.iter_elements(100), budget=100)
    assert all(c == 0 for c, _ in g.form)
    assert all(c == 0 for c, _ in h.form)


def test_empty_stream_rejected():
    with pytest.raises(ParameterError, match="empty"):
        find_noncommuting_pair(iter(()), budget=5)


# ---------------------------------------------------------------------------
# kernel membership


def test_identity_always_in_kernel():
    ss = construct_group(SPEC_S3SUM)
    k = list(conjugacy_class(ss.element(((0, (1, 0, 2)),))).elements)
    assert kernel_membership(ss.identity, k)


def test_disjoint_coordinates_commute():
    ss = construct_group(SPEC_S3SUM)
    k = list(conjugacy_class(ss.element(((0, (1, 0, 2)),))).elements)
    g = ss.element(((5, (1, 2, 0)),))
    assert kernel_membership(g, k)


def test_same_coordinate_noncentral_fails():
    ss = construct_group(SPEC_S3SUM)
    k = list(conjugacy_class(ss.element(((0, (1, 0, 2)),))).elements)
    g = ss.element(((0, (1, 2, 0)),))
    assert not kernel_membership(g, k)


def test_unstable_set_raises():
    s3 = construct_group(spec_symmetric(3))
    k = [s3.element((1, 0, 2))]  # a single transposition is not conjugation-stable
    with pytest.raises(PreconditionError, match="not stable"):
        kernel_membership(s3.element((1, 2, 0)), k)


# ---------------------------------------------------------------------------
# lemma10_sequence


def test_lemma10_s3sum_five_pairs():
    ss = construct_group(SPEC_S3SUM)
    w = lemma10_sequence(ss, 5)
    assert w.complete and len(w.levels) == 5
    assert w.checks.passed
    coords = [lv.g.form[0][0] for lv in w.levels]
    assert len(set(coords)) == 5
    for lv in w.levels:
        assert lv.h.form[0][0] == lv.g.form[0][0]
        assert len(lv.g_class.elements) == 3  # transpositions at one coordinate
        assert len(lv.h_class.elements) == 2  # 3-cycles at one coordinate


def test_lemma10_q8sum_three_pairs():
    qq = construct_group(SPEC_Q8SUM)
    w = lemma10_sequence(qq, 3)
    assert w.complete and w.checks.passed
    for lv in w.levels:
        # each level carries Q8's non-central classes {+-i}, {+-j}
        assert len(lv.g_class.elements) == 2
        assert len(lv.h_class.elements) == 2
        closure = generate_closure(lv.generator_set())
        assert closure.order == 8


def test_lemma10_k1_reduces_to_pair_search():
    ss = construct_group(SPEC_S3SUM)
    w = lemma10_sequence(ss, 1)
    pair = find_noncommuting_pair(ss.iter_elements(100), budget=100)
    assert (w.levels[0].g, w.levels[0].h) == pair


def test_lemma10_requires_declared_hypothesis():
    free2 = construct_group({"family": "free", "rank": 2})
    with pytest.raises(PreconditionError, match="abelian-by-finite"):
        lemma10_sequence(free2, 2)


def test_lemma10_budget_exhaustion_is_inconclusive():
    dinf = construct_group({"family": "dihedral_infinite"})
    w = lemma10_sequence(dinf, 2, stream_budget=40, class_budget=50,
                         assert_hypothesis=True)
    assert not w.complete
    assert w.diagnostics


def test_lemma10_finite_group_runs_out_of_noncentral_elements():
    # with the hypothesis asserted by the caller, a finite group yields one
    # pair and then an honest partial witness: the kernel is the center
    s3 = construct_group(spec_symmetric(3))
    w = lemma10_sequence(s3, 2, assert_hypothesis=True)
    assert len(w.levels) == 1 and not w.complete
    assert w.checks.passed  # the single level still satisfies its invariants
    assert any("no non-commuting pair" in d for d in w.diagnostics)


def test_lemma10_kernel_recursion_invariant():
    # accepted elements commute with everything in the earlier subgroups
    ss = construct_group(SPEC_S3SUM)
    w = lemma10_sequence(ss, 3)
    from groupvna.groups import commutator
    for i, lv in enumerate(w.levels):
        for earlier in w.levels[:i]:
            closure = generate_closure(earlier.generator_set())
            for member in closure:
                assert commutator(lv.g, member).is_identity
                assert commutator(lv.h, member).is_identity


# ---------------------------------------------------------------------------
# classify


def test_classify_finite_group():
    cert = classify(spec_symmetric(5))
    assert cert.verdict == "type_I"
    assert cert.type_i_witness["index"] == 120
    assert cert.type_i_witness["abelian_subgroup_generators"] == []


def test_classify_infinite_dihedral():
    cert = classify({"family": "dihedral_infinite"})
    assert cert.verdict == "type_I"
    assert cert.type_i_witness["index"] == 2
    assert cert.type_i_witness["abelian_subgroup_generators"] == [[1, 0]]


def test_classify_restricted_sum_s3():
    cert = classify(SPEC_S3SUM)
    assert cert.verdict == "not_type_I"
    assert cert.growth.levels_required == 3
    assert cert.growth.achieved_measure == Fraction(20, 27)
    assert cert.commuting_witness.checks.passed


def test_classify_restricted_sum_q8():
    cert = classify(SPEC_Q8SUM)
    assert cert.verdict == "not_type_I"
    assert cert.growth.levels_required == 3
    assert cert.growth.achieved_measure == Fraction(1, 2)
    assert json.loads(cert.to_bytes())["growth"]["history"][1]["measure"] == {"num": 1, "den": 4}


def test_classify_abelian_restricted_sum():
    cert = classify({"family": "restricted_sum", "factor": {"family": "cyclic", "n": 3}})
    assert cert.verdict == "type_I"
    assert cert.type_i_witness["index"] == 1


def test_classify_icc_group_is_inconclusive():
    cert = classify({"family": "free", "rank": 2})
    assert cert.verdict == "inconclusive"
    assert any("icc" in d for d in cert.diagnostics)


def test_classify_product_of_two_restricted_sums():
    # levels alternate between the factors in enumeration order; the growth
    # closure mixes symmetric and quaternion blocks
    cert = classify({"family": "product", "factors": [SPEC_S3SUM, SPEC_Q8SUM]})
    assert cert.verdict == "not_type_I"
    assert cert.growth.levels_required == 3
    assert cert.growth.achieved_measure == Fraction(2, 3)
    orders = [order for _, order, _ in cert.growth.history]
    assert orders == [6, 48, 288]
    assert replay_certificate(json.loads(cert.to_bytes())).passed


def test_classify_product_with_abelian_by_finite_factors():
    # witness indices multiply across factors: translations x trivial, index 2*6
    cert = classify({"family": "product", "factors": [
        {"family": "dihedral_infinite"}, spec_symmetric(3),
    ]})
    assert cert.verdict == "type_I"
    assert cert.type_i_witness["index"] == 12
    assert cert.type_i_witness["abelian_subgroup_generators"] == [[[1, 0], [0, 1, 2]]]


def test_classify_mixed_product_with_infinite_factor():
    # the recursion draws pairs from whichever part of the FC-center enumerates first
    cert = classify({"family": "product", "factors": [
        SPEC_S3SUM, spec_symmetric(3),
    ]})
    assert cert.verdict == "not_type_I"
    assert cert.growth.levels_required == 3
    assert cert.growth.achieved_measure == Fraction(20, 27)
    report = replay_certificate(json.loads(cert.to_bytes()))
    assert report.passed


def test_classify_options_validate():
    with pytest.raises(ParameterError):
        ClassifyOptions(epsilon=Fraction(3, 2))
    with pytest.raises(ParameterError):
        ClassifyOptions(k=0)
    opts = ClassifyOptions(epsilon=0.05)
    assert opts.epsilon == Fraction(1, 20)  # floats are made exact up front


def test_classify_honors_declared_witness():
    # user metadata is where undecidable hypotheses live; classify cites it
    cert = classify({
        "family": "free", "rank": 2,
        "metadata": {"abelian_by_finite": {"generators": [[1]], "index": 5}},
    })
    assert cert.verdict == "type_I"
    assert cert.type_i_witness["kind"] == "family_metadata"
    assert cert.type_i_witness["index"] == 5


def test_classify_deterministic_bytes():
    opts = ClassifyOptions(seed=3)
    a = classify(SPEC_S3SUM, opts).to_bytes()
    b = classify(SPEC_S3SUM, ClassifyOptions(seed=3)).to_bytes()
    assert a == b


def test_certificate_replay_from_json_alone():
    cert = classify(SPEC_S3SUM)
    doc = json.loads(cert.to_bytes())
    report = replay_certificate(doc)
    assert report.passed
    names = [n for n, _ in report.checks]
    assert "witness_invariants" in names and "growth_measure_matches" in names


def test_replay_detects_tampered_measure():
    cert = classify(SPEC_S3SUM)
    doc = json.loads(cert.to_bytes())
    doc["growth"]["achieved_measure"]["num"] += 1
    report = replay_certificate(doc)
    assert not report.passed
    assert any("growth_measure" in f or "measure" in f for f in report.failures)


def test_replay_detects_tampered_class():
    cert = classify(SPEC_S3SUM)
    doc = json.loads(cert.to_bytes())
    doc["commuting_witness"]["levels"][0]["g_class"].pop()
    report = replay_certificate(doc)
    assert not report.passed


def test_replay_type_i_certificates():
    for spec in (spec_symmetric(5), {"family": "dihedral_infinite"}):
        report = replay_certificate(json.loads(classify(spec).to_bytes()))
        assert report.passed
