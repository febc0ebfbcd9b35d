"""Group families: canonical forms, the group law, closures, fair enumeration."""

import random

import pytest

from corpus import TRACE_FAMILY_SPECS, SPEC_S3SUM
from groupvna.errors import (
    BudgetExceededError,
    DomainMismatchError,
    ParameterError,
    SpecError,
    UnsupportedFamilyError,
)
from groupvna.groups import (
    commutator,
    conjugate,
    construct_group,
    coordinate_subgroup,
    enumerate_elements,
    generate_closure,
    group_law,
)


def _perm(handle, *images):
    return handle.element(tuple(i - 1 for i in images))


# ---------------------------------------------------------------------------
# construction


def test_construct_symmetric3():
    s3 = construct_group({"family": "symmetric", "n": 3})
    assert s3.order == 6
    forms = [g.form for g in s3.generators]
    assert forms == [(1, 0, 2), (1, 2, 0)]  # (1 2) and (1 2 3)


def test_construct_trivial_cyclic():
    c1 = construct_group({"family": "cyclic", "n": 1})
    assert c1.order == 1
    assert enumerate_elements(c1, 5) == [c1.identity]


def test_construct_restricted_sum_is_infinite():
    ss = construct_group(SPEC_S3SUM)
    assert ss.order is None
    g = ss.element(((0, (1, 0, 2)), (3, (1, 2, 0))))
    assert g.describe() == "{0: (1 2), 3: (1 2 3)}"


def test_malformed_spec_names_field():
    with pytest.raises(SpecError, match='"n"'):
        construct_group({"family": "symmetric"})
    with pytest.raises(SpecError, match='"n"'):
        construct_group({"family": "symmetric", "n": 0})
    with pytest.raises(SpecError, match='"table"'):
        construct_group({"family": "cayley", "table": [[0, 1], [1, 1]]})
    with pytest.raises(UnsupportedFamilyError, match="alternating"):
        construct_group({"family": "alternating", "n": 5})


def test_cayley_rejects_nonassociative_loop():
    # a Latin square with identity and two-sided inverses that is not a group
    loop = [[0, 1, 2, 3, 4],
            [1, 0, 3, 4, 2],
            [2, 4, 0, 1, 3],
            [3, 2, 4, 0, 1],
            [4, 3, 1, 2, 0]]
    with pytest.raises(SpecError, match="associative"):
        construct_group({"family": "cayley", "table": loop})


def test_cayley_accepts_group_table():
    klein = [[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 1, 0]]
    handle = construct_group({"family": "cayley", "table": klein})
    assert handle.order == 4
    assert handle.finiteness == "finite(4)"
    els = enumerate_elements(handle, 4)
    assert all((a * a).is_identity for a in els)


def test_spec_accepts_json_string():
    s3 = construct_group('{"family": "symmetric", "n": 3}')
    assert s3.order == 6


def test_user_metadata_declares_hypotheses():
    handle = construct_group({
        "family": "free", "rank": 2,
        "metadata": {"abelian_by_finite": {"generators": [[1]], "index": 5}},
    })
    w = handle.metadata.abelian_by_finite
    assert w.index == 5 and w.generator_forms == ((1,),)

    declared = construct_group({"family": "free", "rank": 2,
                                "metadata": {"fc_center": "trivial"}})
    assert declared.metadata.icc


def test_user_metadata_validation():
    with pytest.raises(SpecError, match="fc_center"):
        construct_group({"family": "free", "rank": 2,
                         "metadata": {"fc_center": "everything"}})
    with pytest.raises(SpecError, match="index"):
        construct_group({"family": "free", "rank": 2,
                         "metadata": {"abelian_by_finite": {"generators": [], "index": 0}}})


# ---------------------------------------------------------------------------
# group law


def test_group_law_examples():
    s3 = construct_group({"family": "symmetric", "n": 3})
    t = _perm(s3, 2, 1, 3)
    assert group_law(t, t, "mul").is_identity
    three = _perm(s3, 2, 3, 1)  # (1 2 3)
    assert group_law(three, op="inv") == _perm(s3, 3, 1, 2)  # (1 3 2)

    free2 = construct_group({"family": "free", "rank": 2})
    x = free2.element((1,))
    xinv_y = free2.element((-1, 2))
    assert group_law(x, xinv_y, "mul") == free2.element((2,))


def test_group_law_rejects_unknown_op():
    c2 = construct_group({"family": "cyclic", "n": 2})
    with pytest.raises(ParameterError, match="mul"):
        group_law(c2.element(1), c2.element(1), "conj")
    with pytest.raises(ParameterError):
        group_law(c2.element(1), op="mul")


def test_group_law_rejects_cross_handle():
    a = construct_group({"family": "cyclic", "n": 4})
    b = construct_group({"family": "cyclic", "n": 4})
    with pytest.raises(DomainMismatchError):
        group_law(a.element(1), b.element(1), "mul")


def test_conjugate_examples():
    s3 = construct_group({"family": "symmetric", "n": 3})
    for h in enumerate_elements(s3, 6):
        assert conjugate(s3.identity, h).is_identity
    assert conjugate(_perm(s3, 2, 1, 3), _perm(s3, 2, 3, 1)) == _perm(s3, 1, 3, 2)  # (2 3)

    dinf = construct_group({"family": "dihedral_infinite"})
    for n in (-4, 1, 7):
        assert conjugate(dinf.element((n, 0)), dinf.element((0, 1))).form == (-n, 0)


def test_commutator_examples():
    s3 = construct_group({"family": "symmetric", "n": 3})
    for g in enumerate_elements(s3, 6):
        assert commutator(g, g).is_identity
    # under left-action composition this commutator is the 3-cycle (1 2 3)
    got = commutator(_perm(s3, 2, 1, 3), _perm(s3, 3, 2, 1))
    assert got == _perm(s3, 2, 3, 1)
    assert not got.is_identity

    ss = construct_group(SPEC_S3SUM)
    a = ss.element(((0, (1, 0, 2)),))
    b = ss.element(((5, (1, 2, 0)),))
    assert commutator(a, b).is_identity


# ---------------------------------------------------------------------------
# closure


def test_closure_of_s3_generators():
    s3 = construct_group({"family": "symmetric", "n": 3})
    sub = generate_closure(s3.generators)
    assert sub.order == 6
    assert {g.form for g in sub} == {g.form for g in enumerate_elements(s3, 6)}


def test_closure_of_identity():
    s3 = construct_group({"family": "symmetric", "n": 3})
    sub = generate_closure([s3.identity])
    assert sub.order == 1


def test_closure_budget_exceeded_in_free_group():
    free2 = construct_group({"family": "free", "rank": 2})
    with pytest.raises(BudgetExceededError) as exc:
        generate_closure([free2.element((1,))], budget=10)
    assert exc.value.budget == 10
    assert exc.value.partial_count == 10


def test_closure_idempotent_and_conjugation_stable():
    s4 = construct_group({"family": "symmetric", "n": 4})
    sub = generate_closure(s4.generators)
    again = generate_closure(list(sub.elements))
    assert {g.form for g in again} == {g.form for g in sub}
    for g in sub:
        for h in sub.elements[:8]:
            assert conjugate(g, h).form in sub


def test_closure_bad_budget():
    c2 = construct_group({"family": "cyclic", "n": 2})
    with pytest.raises(ParameterError):
        generate_closure([c2.element(1)], budget=0)


# ---------------------------------------------------------------------------
# enumeration


def test_enumerate_s3_is_whole_group():
    s3 = construct_group({"family": "symmetric", "n": 3})
    els = enumerate_elements(s3, 6)
    assert len({e.form for e in els}) == 6
    assert enumerate_elements(s3, 100) == els  # no error past the order


def test_enumerate_free2_prefix():
    free2 = construct_group({"family": "free", "rank": 2})
    got = [e.form for e in enumerate_elements(free2, 5)]
    assert got == [(), (1,), (-1,), (2,), (-2,)]


def test_enumeration_prefix_stable():
    ss = construct_group(SPEC_S3SUM)
    first = enumerate_elements(ss, 10)
    longer = enumerate_elements(ss, 50)
    assert longer[:10] == first


def test_enumeration_fairness():
    # every element written as a word of length <= 6 appears in some finite prefix
    rng = random.Random(0)
    for spec in ({"family": "free", "rank": 2}, {"family": "dihedral_infinite"}):
        handle = construct_group(spec)
        alphabet = [g for g in handle.generators] + [g.inv() for g in handle.generators]
        targets = set()
        for _ in range(60):
            w = handle.identity
            for _ in range(rng.randrange(0, 7)):
                w = w * rng.choice(alphabet)
            targets.add(w.form)
        prefix = {e.form for e in enumerate_elements(handle, 4000)}
        assert targets <= prefix


def test_restricted_sum_enumeration_puts_low_coordinates_first():
    ss = construct_group(SPEC_S3SUM)
    els = enumerate_elements(ss, 7)
    assert els[0].is_identity
    assert all(e.form[0][0] == 0 for e in els[1:4])
    assert all(e.form[0][0] == 1 for e in els[4:7])


def test_coordinate_subgroup():
    ss = construct_group(SPEC_S3SUM)
    sub = coordinate_subgroup(ss, 3)
    assert sub.order == 6
    assert all(all(c == 3 for c, _ in g.form) for g in sub if not g.is_identity)


def test_enumerate_zero_and_negative():
    s3 = construct_group({"family": "symmetric", "n": 3})
    assert enumerate_elements(s3, 0) == []
    import groupvna.errors as errors
    with pytest.raises(errors.ParameterError):
        enumerate_elements(s3, -1)


def test_nested_product_of_restricted_sum_enumerates_fairly():
    spec = {"family": "product", "factors": [
        SPEC_S3SUM, {"family": "symmetric", "n": 3},
    ]}
    handle = construct_group(spec)
    els = enumerate_elements(handle, 250)
    sum_coords = {c for e in els for c, _ in e.form[0]}
    assert {0, 1, 2} <= sum_coords  # the infinite factor keeps admitting coordinates
    assert any(e.form[1] != (0, 1, 2) for e in els)  # the finite factor appears too

    from groupvna.fc_center import conjugacy_class
    g = handle.element((((2, (1, 0, 2)),), (0, 1, 2)))
    cls = conjugacy_class(g)
    assert cls.size == 3  # exactly the factor class at that coordinate


# ---------------------------------------------------------------------------
# group axioms, property-style


@pytest.mark.parametrize("name,spec", TRACE_FAMILY_SPECS)
def test_group_axioms_random_triples(name, spec):
    handle = construct_group(spec)
    pool = enumerate_elements(handle, min(handle.order, 64))
    rng = random.Random(hash(name) & 0xFFFF)
    for _ in range(1000):
        a, b, c = (rng.choice(pool) for _ in range(3))
        assert (a * b) * c == a * (b * c)
        assert a * handle.identity == a
        assert handle.identity * a == a
        assert (a * a.inv()).is_identity
        assert (a.inv() * a).is_identity


def test_infinite_family_axioms_sampled():
    rng = random.Random(5)
    for spec in ({"family": "free", "rank": 2}, {"family": "dihedral_infinite"}, SPEC_S3SUM):
        handle = construct_group(spec)
        pool = enumerate_elements(handle, 60)
        for _ in range(1000):
            a, b, c = (rng.choice(pool) for _ in range(3))
            assert (a * b) * c == a * (b * c)
            assert (a * a.inv()).is_identity
