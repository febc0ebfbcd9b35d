"""Concrete countable groups behind one handle abstraction.

Each family fixes a canonical form per element (permutation image tuples,
freely reduced words, (n, s) pairs for the infinite dihedral group, sorted
sparse coordinate maps for restricted direct sums, Cayley-table indices), so
equality and hashing are O(size of the form).  Handles expose the group
oracle: multiplication, inversion, budgeted subgroup closure, and a fair,
prefix-stable enumeration (breadth-first by generator word length, ties broken
by fixed generator order; restricted sums admit coordinate c from stage c+1).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

from .errors import (
    BudgetExceededError,
    DomainMismatchError,
    ParameterError,
    RequiresFiniteError,
    SpecError,
    UnsupportedFamilyError,
)

DEFAULT_CLOSURE_BUDGET = 10**6


@dataclass(frozen=True)
class AbelianByFiniteWitness:
    """Generators of an abelian subgroup plus its (finite) index."""

    generator_forms: tuple
    index: int
    note: str


@dataclass(frozen=True)
class FamilyMetadata:
    """What is known exactly about G^fin and abelian-by-finiteness.

    These carry the hypotheses the dichotomy cannot decide: membership in the
    FC-center when the family structure pins it down, an abelian-by-finite
    witness where one exists, and the declared negation for restricted sums of
    non-abelian finite groups.
    """

    fc_center_note: Optional[str] = None
    fc_all: Optional[bool] = None
    icc: bool = False
    fc_member: Optional[Callable] = field(default=None, compare=False)
    abelian_by_finite: Optional[AbelianByFiniteWitness] = None
    not_abelian_by_finite: bool = False


class GroupElement:
    """An element in canonical form, bound to its handle."""

    __slots__ = ("group", "form")

    def __init__(self, group: "GroupHandle", form):
        self.group = group
        self.form = form

    def __eq__(self, other):
        if not isinstance(other, GroupElement):
            return NotImplemented
        return self.group is other.group and self.form == other.form

    def __hash__(self):
        return hash(self.form)

    def __mul__(self, other):
        return self.group.mul(self, other)

    def inv(self) -> "GroupElement":
        return self.group.inv(self)

    @property
    def is_identity(self) -> bool:
        return self.form == self.group._family.identity

    def describe(self) -> str:
        return self.group._family.describe(self.form)

    def to_json(self):
        return self.group._family.form_to_json(self.form)

    def __repr__(self):
        return f"<{self.group.family}:{self.describe()}>"


# ---------------------------------------------------------------------------
# families


class _Family:
    tag: str = ""
    order: Optional[int] = None  # None = infinite
    spec_doc: dict
    metadata: FamilyMetadata = FamilyMetadata()
    identity = None

    def mul(self, a, b):
        raise NotImplementedError

    def inv(self, a):
        raise NotImplementedError

    def generator_forms(self) -> list:
        raise NotImplementedError

    def alphabet_block(self, gens: list) -> list:
        """Generators interleaved with their inverses, deduplicated, no identity."""
        out, seen = [], set()
        for g in gens:
            for f in (g, self.inv(g)):
                if f != self.identity and f not in seen:
                    seen.add(f)
                    out.append(f)
        return out

    def alphabet_blocks(self) -> Iterator[list]:
        """Blocks admitted to the enumeration window, one per stage."""
        yield self.alphabet_block(self.generator_forms())

    def conjugating_forms(self, form) -> list:
        """A finite set whose conjugations reach the full class of `form`."""
        return self.generator_forms()

    def describe(self, form) -> str:
        return repr(form)

    def form_to_json(self, form):
        raise NotImplementedError

    def form_from_json(self, data):
        raise NotImplementedError


def _perm_describe(form) -> str:
    n = len(form)
    seen = [False] * n
    cycles = []
    for start in range(n):
        if seen[start] or form[start] == start:
            seen[start] = True
            continue
        cur, cyc = start, []
        while not seen[cur]:
            seen[cur] = True
            cyc.append(cur + 1)
            cur = form[cur]
        cycles.append("(" + " ".join(map(str, cyc)) + ")")
    return "".join(cycles) if cycles else "e"


class _Symmetric(_Family):
    def __init__(self, n: int):
        self.tag = "symmetric"
        self.n = n
        self.identity = tuple(range(n))
        order = 1
        for k in range(2, n + 1):
            order *= k
        self.order = order
        self.spec_doc = {"family": "symmetric", "n": n}
        self.metadata = _finite_metadata(order)

    def mul(self, a, b):
        return tuple(a[b[i]] for i in range(self.n))

    def inv(self, a):
        out = [0] * self.n
        for i, j in enumerate(a):
            out[j] = i
        return tuple(out)

    def generator_forms(self):
        if self.n < 2:
            return []
        swap = (1, 0) + tuple(range(2, self.n))
        if self.n == 2:
            return [swap]
        cycle = tuple(range(1, self.n)) + (0,)
        return [swap, cycle]

    def describe(self, form):
        return _perm_describe(form)

    def form_to_json(self, form):
        return list(form)

    def form_from_json(self, data):
        form = tuple(int(x) for x in data)
        if sorted(form) != list(range(self.n)):
            raise SpecError(f"not a permutation of 0..{self.n - 1}: {data}")
        return form


class _Cyclic(_Family):
    def __init__(self, n: int):
        self.tag = "cyclic"
        self.n = n
        self.identity = 0
        self.order = n
        self.spec_doc = {"family": "cyclic", "n": n}
        self.metadata = _finite_metadata(n)

    def mul(self, a, b):
        return (a + b) % self.n

    def inv(self, a):
        return (-a) % self.n

    def generator_forms(self):
        return [] if self.n == 1 else [1]

    def describe(self, form):
        return str(form)

    def form_to_json(self, form):
        return form

    def form_from_json(self, data):
        v = int(data)
        if not 0 <= v < self.n:
            raise SpecError(f"cyclic value out of range: {data}")
        return v


class _Dihedral(_Family):
    """Order 2n: (r, s) means rotation^r * reflection^s with s r s = r^-1."""

    def __init__(self, n: int):
        self.tag = "dihedral"
        self.n = n
        self.identity = (0, 0)
        self.order = 2 * n
        self.spec_doc = {"family": "dihedral", "n": n}
        self.metadata = _finite_metadata(2 * n)

    def mul(self, a, b):
        (x, s), (y, t) = a, b
        return ((x + y) % self.n if s == 0 else (x - y) % self.n, s ^ t)

    def inv(self, a):
        x, s = a
        return ((-x) % self.n, 0) if s == 0 else a

    def generator_forms(self):
        gens = []
        if self.n > 1:
            gens.append((1, 0))
        gens.append((0, 1))
        return gens

    def describe(self, form):
        x, s = form
        rot = "e" if x == 0 else f"r^{x}"
        return rot if s == 0 else (f"{rot} s" if x else "s")

    def form_to_json(self, form):
        return list(form)

    def form_from_json(self, data):
        x, s = int(data[0]), int(data[1])
        if not (0 <= x < self.n and s in (0, 1)):
            raise SpecError(f"dihedral form out of range: {data}")
        return (x, s)


class _DihedralInfinite(_Family):
    """(n, s) with (n,1)(m,s) = (n-m, 1-s); translations form the FC-center."""

    def __init__(self):
        self.tag = "dihedral_infinite"
        self.identity = (0, 0)
        self.order = None
        self.spec_doc = {"family": "dihedral_infinite"}
        self.metadata = FamilyMetadata(
            fc_center_note="translation subgroup {(n, 0)}",
            fc_all=False,
            fc_member=lambda form: form[1] == 0,
            abelian_by_finite=AbelianByFiniteWitness(((1, 0),), 2, "translation subgroup"),
        )

    def mul(self, a, b):
        (x, s), (y, t) = a, b
        return (x + y if s == 0 else x - y, s ^ t)

    def inv(self, a):
        x, s = a
        return (-x, 0) if s == 0 else a

    def generator_forms(self):
        return [(1, 0), (0, 1)]

    def describe(self, form):
        x, s = form
        rot = "e" if x == 0 else f"t^{x}"
        return rot if s == 0 else (f"{rot} s" if x else "s")

    def form_to_json(self, form):
        return list(form)

    def form_from_json(self, data):
        x, s = int(data[0]), int(data[1])
        if s not in (0, 1):
            raise SpecError(f"dihedral_infinite form out of range: {data}")
        return (x, s)


_QUAT_NAMES = {(0, 0): "1", (0, 1): "-1", (1, 0): "i", (1, 1): "-i",
               (2, 0): "j", (2, 1): "-j", (3, 0): "k", (3, 1): "-k"}
_QUAT_CYCLIC = {(1, 2), (2, 3), (3, 1)}


class _Quaternion8(_Family):
    """Q8 = {±1, ±i, ±j, ±k}; forms are (axis, sign) with axis 0 meaning ±1."""

    def __init__(self):
        self.tag = "quaternion8"
        self.identity = (0, 0)
        self.order = 8
        self.spec_doc = {"family": "quaternion8"}
        self.metadata = _finite_metadata(8)

    def mul(self, a, b):
        (ax, sa), (bx, sb) = a, b
        if ax == 0:
            return (bx, sa ^ sb)
        if bx == 0:
            return (ax, sa ^ sb)
        if ax == bx:
            return (0, sa ^ sb ^ 1)
        cx = 6 - ax - bx
        flip = 0 if (ax, bx) in _QUAT_CYCLIC else 1
        return (cx, sa ^ sb ^ flip)

    def inv(self, a):
        ax, s = a
        return a if ax == 0 else (ax, s ^ 1)

    def generator_forms(self):
        return [(1, 0), (2, 0)]

    def describe(self, form):
        return _QUAT_NAMES[form]

    def form_to_json(self, form):
        return list(form)

    def form_from_json(self, data):
        ax, s = int(data[0]), int(data[1])
        if not (0 <= ax <= 3 and s in (0, 1)):
            raise SpecError(f"quaternion form out of range: {data}")
        return (ax, s)


class _Heisenberg(_Family):
    """Upper unitriangular 3x3 matrices over Z/p, as triples (a, b, c)."""

    def __init__(self, p: int):
        self.tag = "heisenberg"
        self.p = p
        self.identity = (0, 0, 0)
        self.order = p**3
        self.spec_doc = {"family": "heisenberg", "p": p}
        self.metadata = _finite_metadata(p**3)

    def mul(self, x, y):
        a1, b1, c1 = x
        a2, b2, c2 = y
        p = self.p
        return ((a1 + a2) % p, (b1 + b2) % p, (c1 + c2 + a1 * b2) % p)

    def inv(self, x):
        a, b, c = x
        p = self.p
        return ((-a) % p, (-b) % p, (a * b - c) % p)

    def generator_forms(self):
        return [(1, 0, 0), (0, 1, 0)]

    def describe(self, form):
        return str(form)

    def form_to_json(self, form):
        return list(form)

    def form_from_json(self, data):
        a, b, c = (int(v) % self.p for v in data)
        return (a, b, c)


class _Cayley(_Family):
    """A finite group given by its full multiplication table."""

    def __init__(self, table: list):
        self.tag = "cayley"
        self._validate(table)
        import numpy as np

        self.table = np.array(table, dtype=np.int64)
        n = len(table)
        self.n = n
        ident = None
        for i in range(n):
            if all(self.table[i, j] == j for j in range(n)) and all(
                self.table[j, i] == j for j in range(n)
            ):
                ident = i
                break
        if ident is None:
            raise SpecError('field "table": no two-sided identity element')
        self.identity = ident
        self._inv = [0] * n
        for i in range(n):
            hits = [j for j in range(n) if self.table[i, j] == ident]
            if len(hits) != 1 or self.table[hits[0], i] != ident:
                raise SpecError(f'field "table": element {i} has no two-sided inverse')
            self._inv[i] = hits[0]
        self._check_associativity()
        self.order = n
        self.spec_doc = {"family": "cayley", "table": [list(map(int, row)) for row in table]}
        self.metadata = _finite_metadata(n)

    @staticmethod
    def _validate(table):
        if not isinstance(table, list) or not table:
            raise SpecError('field "table": expected a nonempty square array of ints')
        n = len(table)
        for i, row in enumerate(table):
            if not isinstance(row, list) or len(row) != n:
                raise SpecError(f'field "table": row {i} is not length {n}')
            vals = sorted(int(v) for v in row)
            if vals != list(range(n)):
                raise SpecError(f'field "table": row {i} is not a permutation of 0..{n - 1}')
        for j in range(n):
            col = sorted(int(table[i][j]) for i in range(n))
            if col != list(range(n)):
                raise SpecError(f'field "table": column {j} is not a permutation of 0..{n - 1}')

    def _check_associativity(self):
        t = self.table
        for i in range(self.n):
            left = t[t[i]]  # left[j, k] = (i*j)*k
            right = t[i][t]  # right[j, k] = i*(j*k)
            if not (left == right).all():
                raise SpecError(f'field "table": multiplication is not associative at row {i}')

    def mul(self, a, b):
        return int(self.table[a, b])

    def inv(self, a):
        return self._inv[a]

    def generator_forms(self):
        # deterministic generating set: greedily add elements until closure is everything
        gens: list[int] = []
        reached = {self.identity}
        for x in range(self.n):
            if x in reached:
                continue
            gens.append(x)
            reached.add(x)
            queue = [x]
            while queue:
                u = queue.pop()
                for v in list(reached):
                    for w in (self.mul(u, v), self.mul(v, u)):
                        if w not in reached:
                            reached.add(w)
                            queue.append(w)
                wi = self.inv(u)
                if wi not in reached:
                    reached.add(wi)
                    queue.append(wi)
            if len(reached) == self.n:
                break
        return gens

    def describe(self, form):
        return f"g{form}"

    def form_to_json(self, form):
        return form

    def form_from_json(self, data):
        v = int(data)
        if not 0 <= v < self.n:
            raise SpecError(f"cayley index out of range: {data}")
        return v


class _Product(_Family):
    def __init__(self, factors: list[_Family]):
        self.tag = "product"
        self.factors = factors
        self.identity = tuple(f.identity for f in factors)
        if all(f.order is not None for f in factors):
            order = 1
            for f in factors:
                order *= f.order
            self.order = order
        else:
            self.order = None
        self.spec_doc = {"family": "product", "factors": [f.spec_doc for f in factors]}
        self.metadata = _product_metadata(factors, self.order)

    def mul(self, a, b):
        return tuple(f.mul(x, y) for f, x, y in zip(self.factors, a, b))

    def inv(self, a):
        return tuple(f.inv(x) for f, x in zip(self.factors, a))

    def generator_forms(self):
        gens = []
        for i, f in enumerate(self.factors):
            for g in f.generator_forms():
                gens.append(self._embed(i, g))
        return gens

    def alphabet_blocks(self):
        # interleave factor blocks so infinite factors stay fairly enumerated
        iters = [f.alphabet_blocks() for f in self.factors]
        while any(it is not None for it in iters):
            block = []
            for i, it in enumerate(iters):
                if it is None:
                    continue
                try:
                    sub = next(it)
                except StopIteration:
                    iters[i] = None
                    continue
                block.extend(self._embed(i, g) for g in sub)
            if any(it is not None for it in iters):
                yield block

    def conjugating_forms(self, form):
        gens = []
        for i, (f, x) in enumerate(zip(self.factors, form)):
            for g in f.conjugating_forms(x):
                gens.append(self._embed(i, g))
        return gens

    def _embed(self, i, g):
        return tuple(g if j == i else f.identity for j, f in enumerate(self.factors))

    def describe(self, form):
        return "(" + ", ".join(f.describe(x) for f, x in zip(self.factors, form)) + ")"

    def form_to_json(self, form):
        return [f.form_to_json(x) for f, x in zip(self.factors, form)]

    def form_from_json(self, data):
        if len(data) != len(self.factors):
            raise SpecError(f"product form needs {len(self.factors)} components")
        return tuple(f.form_from_json(x) for f, x in zip(self.factors, data))


class _RestrictedSum(_Family):
    """Finitely supported maps N -> F; forms are sorted ((coord, factor_form), ...)."""

    def __init__(self, factor: _Family):
        self.tag = "restricted_sum"
        self.factor = factor
        self.identity = ()
        self.order = None if factor.order != 1 else 1
        self.spec_doc = {"family": "restricted_sum", "factor": factor.spec_doc}
        self.metadata = _restricted_sum_metadata(factor)

    def mul(self, a, b):
        acc = dict(a)
        for coord, y in b:
            x = acc.get(coord, self.factor.identity)
            z = self.factor.mul(x, y)
            if z == self.factor.identity:
                acc.pop(coord, None)
            else:
                acc[coord] = z
        return tuple(sorted(acc.items()))

    def inv(self, a):
        return tuple((coord, self.factor.inv(x)) for coord, x in a)

    def generator_forms(self):
        # representative finite set: the coordinate-0 block
        return [((0, g),) for g in self.factor.generator_forms()]

    def alphabet_blocks(self):
        base = self.factor.alphabet_block(self.factor.generator_forms())
        coord = 0
        while True:
            yield [((coord, g),) for g in base]
            coord += 1

    def conjugating_forms(self, form):
        gens = []
        for coord, x in form:
            for g in self.factor.conjugating_forms(x):
                gens.append(((coord, g),))
        return gens

    def describe(self, form):
        if not form:
            return "e"
        return "{" + ", ".join(f"{c}: {self.factor.describe(x)}" for c, x in form) + "}"

    def form_to_json(self, form):
        return [[c, self.factor.form_to_json(x)] for c, x in form]

    def form_from_json(self, data):
        items = []
        for pair in data:
            c = int(pair[0])
            if c < 0:
                raise SpecError(f"restricted_sum coordinate must be >= 0: {pair}")
            x = self.factor.form_from_json(pair[1])
            if x != self.factor.identity:
                items.append((c, x))
        items.sort()
        if len({c for c, _ in items}) != len(items):
            raise SpecError("restricted_sum form repeats a coordinate")
        return tuple(items)


class _Free(_Family):
    """Free group on `rank` letters; forms are reduced words of signed indices."""

    _LETTERS = "xyzwuv"

    def __init__(self, rank: int):
        self.tag = "free"
        self.rank = rank
        self.identity = ()
        self.order = 1 if rank == 0 else None
        self.spec_doc = {"family": "free", "rank": rank}
        if rank >= 2:
            self.metadata = FamilyMetadata(
                fc_center_note="trivial (icc)", fc_all=False, icc=True,
                fc_member=lambda form: form == (),
                not_abelian_by_finite=False,
            )
        else:
            self.metadata = FamilyMetadata(
                fc_center_note="all of G (abelian)", fc_all=True,
                abelian_by_finite=AbelianByFiniteWitness(((1,),) if rank else (), 1, "group is abelian"),
            )

    def mul(self, a, b):
        a = list(a)
        i = 0
        while a and i < len(b) and a[-1] == -b[i]:
            a.pop()
            i += 1
        return tuple(a) + tuple(b[i:])

    def inv(self, a):
        return tuple(-x for x in reversed(a))

    def generator_forms(self):
        return [(k,) for k in range(1, self.rank + 1)]

    def _letter(self, k: int) -> str:
        i = abs(k) - 1
        name = self._LETTERS[i] if i < len(self._LETTERS) else f"g{i + 1}"
        return name if k > 0 else name + "^-1"

    def describe(self, form):
        return "e" if not form else "*".join(self._letter(k) for k in form)

    def form_to_json(self, form):
        return list(form)

    def form_from_json(self, data):
        word = [int(x) for x in data]
        for x in word:
            if x == 0 or abs(x) > self.rank:
                raise SpecError(f"free word letter out of range: {x}")
        for a, b in zip(word, word[1:]):
            if a == -b:
                raise SpecError(f"free word is not reduced: {data}")
        return tuple(word)


def _finite_metadata(order: int) -> FamilyMetadata:
    return FamilyMetadata(
        fc_center_note="all of G (finite group)",
        fc_all=True,
        fc_member=lambda form: True,
        abelian_by_finite=AbelianByFiniteWitness((), order, "trivial subgroup"),
    )


def _product_metadata(factors: list[_Family], order: Optional[int]) -> FamilyMetadata:
    if order is not None:
        return _finite_metadata(order)
    metas = [f.metadata for f in factors]
    fc_all = True if all(m.fc_all for m in metas) else None
    not_abf = any(m.not_abelian_by_finite for m in metas)
    witness = None
    if not not_abf and all(m.abelian_by_finite is not None for m in metas):
        gens = []
        index = 1
        for i, (f, m) in enumerate(zip(factors, metas)):
            for g in m.abelian_by_finite.generator_forms:
                gens.append(tuple(g if j == i else h.identity for j, h in enumerate(factors)))
            index *= m.abelian_by_finite.index
        witness = AbelianByFiniteWitness(tuple(gens), index, "product of factor witnesses")
    return FamilyMetadata(
        fc_center_note="all of G" if fc_all else None,
        fc_all=fc_all,
        abelian_by_finite=witness,
        not_abelian_by_finite=not_abf,
    )


def _restricted_sum_metadata(factor: _Family) -> FamilyMetadata:
    if factor.order is None:
        return FamilyMetadata(fc_center_note=None, fc_all=None)
    abelian = _factor_is_abelian(factor)
    if abelian:
        return FamilyMetadata(
            fc_center_note="all of G (abelian)",
            fc_all=True,
            fc_member=lambda form: True,
            abelian_by_finite=AbelianByFiniteWitness((), 1, "group is abelian"),
        )
    return FamilyMetadata(
        fc_center_note="all of G (every class is finite)",
        fc_all=True,
        fc_member=lambda form: True,
        not_abelian_by_finite=True,
    )


def _factor_is_abelian(factor: _Family) -> bool:
    elements = _enumerate_family(factor, factor.order)
    for i, a in enumerate(elements):
        for b in elements[i + 1 :]:
            if factor.mul(a, b) != factor.mul(b, a):
                return False
    return True


def _enumerate_family(family: _Family, limit: int) -> list:
    """Standalone BFS enumeration of a finite family (no handle involved)."""
    block = family.alphabet_block(family.generator_forms())
    seen = {family.identity}
    out = [family.identity]
    frontier = [family.identity]
    while frontier and len(out) < limit:
        nxt = []
        for u in frontier:
            for a in block:
                w = family.mul(u, a)
                if w not in seen:
                    seen.add(w)
                    out.append(w)
                    nxt.append(w)
        frontier = nxt
    return out


# ---------------------------------------------------------------------------
# handle


class GroupHandle:
    """A group oracle plus fair-enumerator state.

    Elements and the handle itself are immutable; only the enumeration cache
    grows, and it grows append-only, so enumeration prefixes are stable.
    """

    def __init__(self, family: _Family):
        self._family = family
        self.family = family.tag
        self.spec = family.spec_doc
        self.metadata = family.metadata
        self.identity = GroupElement(self, family.identity)
        self.generators = [GroupElement(self, f) for f in family.generator_forms()]
        self._enum: list[GroupElement] = [self.identity]
        self._enum_seen = {family.identity}
        self._enum_blocks: list[list] = []
        self._enum_block_iter: Optional[Iterator] = family.alphabet_blocks()
        self._enum_frontier = 0
        self._enum_exhausted = False

    # -- basic facts ---------------------------------------------------------

    @property
    def order(self) -> Optional[int]:
        return self._family.order

    @property
    def is_finite(self) -> bool:
        return self._family.order is not None

    @property
    def finiteness(self) -> str:
        """Finiteness hint: "finite(<order>)" or "infinite"."""
        return f"finite({self.order})" if self.is_finite else "infinite"

    def describe(self) -> str:
        size = f"order {self.order}" if self.is_finite else "infinite"
        return f"{_spec_label(self.spec)} ({size})"

    # -- group law -----------------------------------------------------------

    def _check(self, *elems: GroupElement):
        for e in elems:
            if not isinstance(e, GroupElement) or e.group is not self:
                raise DomainMismatchError(f"element {e!r} does not belong to {self.describe()}")

    def element(self, form) -> GroupElement:
        return GroupElement(self, form)

    def element_from_json(self, data) -> GroupElement:
        return GroupElement(self, self._family.form_from_json(data))

    def mul(self, a: GroupElement, b: GroupElement) -> GroupElement:
        self._check(a, b)
        return GroupElement(self, self._family.mul(a.form, b.form))

    def inv(self, a: GroupElement) -> GroupElement:
        self._check(a)
        return GroupElement(self, self._family.inv(a.form))

    def conjugating_elements(self, g: GroupElement) -> list[GroupElement]:
        self._check(g)
        fam = self._family
        block = fam.alphabet_block(fam.conjugating_forms(g.form))
        return [GroupElement(self, f) for f in block]

    # -- fair enumeration ------------------------------------------------------

    def _extend_enumeration(self) -> bool:
        """Run one BFS stage; returns False once the group is exhausted."""
        if self._enum_exhausted:
            return False
        fam = self._family
        new_letters: list = []
        if self._enum_block_iter is not None:
            try:
                block = next(self._enum_block_iter)
            except StopIteration:
                self._enum_block_iter = None
            else:
                self._enum_blocks.append(block)
                new_letters = block
        window = [a for blk in self._enum_blocks for a in blk]
        start = self._enum_frontier
        snapshot = len(self._enum)
        added = False

        def push(form):
            nonlocal added
            if form not in self._enum_seen:
                self._enum_seen.add(form)
                self._enum.append(GroupElement(self, form))
                added = True

        if new_letters:
            for u in self._enum[:start]:
                for a in new_letters:
                    push(fam.mul(u.form, a))
        for i in range(start, snapshot):
            u = self._enum[i]
            for a in window:
                push(fam.mul(u.form, a))
        self._enum_frontier = snapshot
        if not added and self._enum_block_iter is None:
            self._enum_exhausted = True
        return not self._enum_exhausted or added

    def iter_elements(self, limit: Optional[int] = None) -> Iterator[GroupElement]:
        """Prefix-stable fair enumeration; stops at `limit` or group exhaustion."""
        i = 0
        while limit is None or i < limit:
            while i >= len(self._enum):
                if not self._extend_enumeration() and i >= len(self._enum):
                    return
            yield self._enum[i]
            i += 1

    def all_elements(self) -> list[GroupElement]:
        if not self.is_finite:
            raise RequiresFiniteError(f"{self.describe()} is not finite")
        return list(self.iter_elements(self.order))


def _spec_label(spec: dict) -> str:
    fam = spec.get("family", "?")
    params = {k: v for k, v in spec.items() if k not in ("family", "metadata", "table")}
    if fam == "cayley":
        return f"cayley[{len(spec.get('table', []))}]"
    if fam == "product":
        return "product(" + ", ".join(_spec_label(f) for f in spec["factors"]) + ")"
    if fam == "restricted_sum":
        return f"restricted_sum({_spec_label(spec['factor'])})"
    if params:
        return fam + "(" + ", ".join(str(v) for v in params.values()) + ")"
    return fam


# ---------------------------------------------------------------------------
# subgroups and closures


class Subgroup:
    """A finite subgroup materialized as an ordered element list (identity first)."""

    __slots__ = ("handle", "elements", "generators", "_index")

    def __init__(self, handle: GroupHandle, elements: list[GroupElement],
                 generators: Optional[list[GroupElement]] = None, _trusted: bool = False):
        self.handle = handle
        self.elements = tuple(elements)
        self.generators = tuple(generators) if generators is not None else None
        self._index = {e.form: i for i, e in enumerate(self.elements)}
        if not _trusted:
            self._validate()

    def _validate(self):
        if not self.elements or not self.elements[0].is_identity:
            raise ParameterError("subgroup element list must start with the identity")
        if len(self._index) != len(self.elements):
            raise ParameterError("subgroup element list has duplicates")
        fam = self.handle._family
        for e in self.elements:
            if fam.inv(e.form) not in self._index:
                raise ParameterError(f"subgroup is not inverse-closed at {e.describe()}")
        if len(self.elements) <= 300:
            for a in self.elements:
                for b in self.elements:
                    if fam.mul(a.form, b.form) not in self._index:
                        raise ParameterError(
                            f"set is not closed: {a.describe()} * {b.describe()} escapes"
                        )

    @property
    def order(self) -> int:
        return len(self.elements)

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, g):
        form = g.form if isinstance(g, GroupElement) else g
        return form in self._index

    def index_of(self, g: GroupElement) -> int:
        return self._index[g.form]

    def conjugation_alphabet(self) -> list[GroupElement]:
        gens = self.generators if self.generators is not None else self.elements
        fam = self.handle._family
        block = fam.alphabet_block([g.form for g in gens])
        return [GroupElement(self.handle, f) for f in block]

    @staticmethod
    def whole_group(handle: GroupHandle) -> "Subgroup":
        return Subgroup(handle, handle.all_elements(), list(handle.generators), _trusted=True)

    def describe(self) -> str:
        return f"subgroup of {self.handle.describe()}, order {self.order}"


def as_subgroup(subject) -> Subgroup:
    """Normalize a GroupHandle, Subgroup, or element iterable to a Subgroup."""
    if isinstance(subject, Subgroup):
        return subject
    if isinstance(subject, GroupHandle):
        return Subgroup.whole_group(subject)
    elems = list(subject)
    if not elems:
        raise ParameterError("empty element collection")
    handle = elems[0].group
    seen, ordered = set(), []
    for e in elems:
        if not isinstance(e, GroupElement) or e.group is not handle:
            raise DomainMismatchError("elements from different handles")
        if e.form not in seen:
            seen.add(e.form)
            ordered.append(e)
    if not ordered[0].is_identity:
        ordered = [handle.identity] + [e for e in ordered if not e.is_identity]
    return Subgroup(handle, ordered)


def generate_closure(gens, budget: int = DEFAULT_CLOSURE_BUDGET) -> Subgroup:
    """Breadth-first closure of `gens` under multiplication and inversion.

    Deterministic insertion order (identity first, then BFS by word length over
    the generators and their inverses).  Raises BudgetExceededError with the
    partial count when the closure grows past `budget` elements.
    """
    gens = list(gens)
    if budget < 1:
        raise ParameterError("closure budget must be >= 1")
    if not gens:
        raise ParameterError("need at least one generator (use the identity for the trivial subgroup)")
    handle = gens[0].group
    handle._check(*gens)
    fam = handle._family
    alphabet = fam.alphabet_block([g.form for g in gens])
    seen = {fam.identity}
    out = [handle.identity]
    frontier = [fam.identity]
    while frontier:
        nxt = []
        for u in frontier:
            for a in alphabet:
                w = fam.mul(u, a)
                if w not in seen:
                    if len(seen) >= budget:
                        raise BudgetExceededError(
                            f"subgroup closure exceeded budget {budget}",
                            budget=budget, partial_count=len(seen),
                        )
                    seen.add(w)
                    out.append(GroupElement(handle, w))
                    nxt.append(w)
        frontier = nxt
    kept = [g for g in gens if not g.is_identity]
    return Subgroup(handle, out, kept or [handle.identity], _trusted=True)


def closure_of_union(parts: list[Subgroup], budget: int = DEFAULT_CLOSURE_BUDGET) -> Subgroup:
    gens: list[GroupElement] = []
    for part in parts:
        gens.extend(part.generators if part.generators is not None else part.elements)
    return generate_closure(gens, budget)


def coordinate_subgroup(handle: GroupHandle, coord: int,
                        budget: int = DEFAULT_CLOSURE_BUDGET) -> Subgroup:
    """The coordinate-`coord` copy of the factor inside a restricted sum."""
    fam = handle._family
    if not isinstance(fam, _RestrictedSum):
        raise ParameterError("coordinate subgroups exist only for restricted_sum handles")
    gens = [GroupElement(handle, ((coord, g),)) for g in fam.factor.generator_forms()]
    return generate_closure(gens, budget)


def factor_subgroup(handle: GroupHandle, i: int,
                    budget: int = DEFAULT_CLOSURE_BUDGET) -> Subgroup:
    """The i-th factor embedded in a direct product."""
    fam = handle._family
    if not isinstance(fam, _Product):
        raise ParameterError("factor subgroups exist only for product handles")
    if not 0 <= i < len(fam.factors):
        raise ParameterError(f"product has no factor {i}")
    gens = [GroupElement(handle, fam._embed(i, g)) for g in fam.factors[i].generator_forms()]
    return generate_closure(gens, budget)


# ---------------------------------------------------------------------------
# spec parsing and the operation surface


def _require_int(spec: dict, field_name: str, minimum: int) -> int:
    if field_name not in spec:
        raise SpecError(f'field "{field_name}": required for family "{spec.get("family")}"')
    v = spec[field_name]
    if not isinstance(v, int) or isinstance(v, bool) or v < minimum:
        raise SpecError(f'field "{field_name}": expected an integer >= {minimum}, got {v!r}')
    return v


def _build_family(spec: dict) -> _Family:
    if not isinstance(spec, dict):
        raise SpecError("group spec must be a JSON object")
    fam = spec.get("family")
    if not isinstance(fam, str):
        raise SpecError('field "family": required string')
    if fam == "symmetric":
        return _Symmetric(_require_int(spec, "n", 1))
    if fam == "cyclic":
        return _Cyclic(_require_int(spec, "n", 1))
    if fam == "dihedral":
        return _Dihedral(_require_int(spec, "n", 1))
    if fam == "dihedral_infinite":
        return _DihedralInfinite()
    if fam == "quaternion8":
        return _Quaternion8()
    if fam == "heisenberg":
        return _Heisenberg(_require_int(spec, "p", 2))
    if fam == "cayley":
        if "table" not in spec:
            raise SpecError('field "table": required for family "cayley"')
        return _Cayley(spec["table"])
    if fam == "product":
        factors = spec.get("factors")
        if not isinstance(factors, list) or not factors:
            raise SpecError('field "factors": expected a nonempty list of group specs')
        return _Product([_build_family(f) for f in factors])
    if fam == "restricted_sum":
        factor = spec.get("factor")
        if factor is None:
            raise SpecError('field "factor": required for family "restricted_sum"')
        return _RestrictedSum(_build_family(factor))
    if fam == "free":
        return _Free(_require_int(spec, "rank", 1))
    raise UnsupportedFamilyError(f'field "family": unsupported family "{fam}"')


def _apply_user_metadata(family: _Family, meta_spec: dict):
    if not isinstance(meta_spec, dict):
        raise SpecError('field "metadata": expected an object')
    m = family.metadata
    fc = meta_spec.get("fc_center")
    if fc is not None:
        if fc == "all":
            m = FamilyMetadata(
                fc_center_note="all of G (declared)", fc_all=True,
                fc_member=lambda form: True,
                abelian_by_finite=m.abelian_by_finite,
                not_abelian_by_finite=m.not_abelian_by_finite,
            )
        elif fc == "trivial":
            m = FamilyMetadata(
                fc_center_note="trivial (declared icc)", fc_all=False, icc=True,
                fc_member=lambda form: form == family.identity,
                abelian_by_finite=m.abelian_by_finite,
                not_abelian_by_finite=m.not_abelian_by_finite,
            )
        else:
            raise SpecError(f'field "metadata.fc_center": expected "all" or "trivial", got {fc!r}')
    abf = meta_spec.get("abelian_by_finite")
    if abf is not None:
        gens = abf.get("generators")
        index = abf.get("index")
        if not isinstance(gens, list):
            raise SpecError('field "metadata.abelian_by_finite.generators": expected a list')
        if not isinstance(index, int) or index < 1:
            raise SpecError('field "metadata.abelian_by_finite.index": expected a positive integer')
        forms = tuple(family.form_from_json(g) for g in gens)
        m = FamilyMetadata(
            fc_center_note=m.fc_center_note, fc_all=m.fc_all, icc=m.icc,
            fc_member=m.fc_member,
            abelian_by_finite=AbelianByFiniteWitness(forms, index, "declared in spec metadata"),
            not_abelian_by_finite=m.not_abelian_by_finite,
        )
    family.metadata = m


def construct_group(spec) -> GroupHandle:
    """Build a GroupHandle from a group-spec document (dict or JSON string)."""
    if isinstance(spec, str):
        try:
            spec = json.loads(spec)
        except json.JSONDecodeError as e:
            raise SpecError(f"spec is not valid JSON: {e}") from e
    family = _build_family(spec)
    if "metadata" in spec:
        _apply_user_metadata(family, spec["metadata"])
        family.spec_doc = dict(family.spec_doc, metadata=spec["metadata"])
    return GroupHandle(family)


def group_law(a: GroupElement, b: Optional[GroupElement] = None, op: str = "mul") -> GroupElement:
    """Canonical form of a*b (op="mul") or a^-1 (op="inv")."""
    if op == "mul":
        if b is None:
            raise ParameterError('group_law(op="mul") needs two elements')
        return a.group.mul(a, b)
    if op == "inv":
        return a.group.inv(a)
    raise ParameterError(f'unknown group_law op {op!r}; expected "mul" or "inv"')


def conjugate(g: GroupElement, h: GroupElement) -> GroupElement:
    """h g h^-1 in canonical form."""
    handle = g.group
    handle._check(g, h)
    return handle.mul(handle.mul(h, g), handle.inv(h))


def commutator(g: GroupElement, h: GroupElement) -> GroupElement:
    """g h g^-1 h^-1; the identity exactly when g and h commute."""
    handle = g.group
    handle._check(g, h)
    return handle.mul(handle.mul(handle.mul(g, h), handle.inv(g)), handle.inv(h))


def enumerate_elements(handle: GroupHandle, n: int) -> list[GroupElement]:
    """First n elements of the fair enumeration (all of them for small finite groups)."""
    if n < 0:
        raise ParameterError("element count must be >= 0")
    return list(handle.iter_elements(n))
