"""The group algebra with its trace, factor spectra, and the lemma verifiers.

S(H) is identified with the group algebra of H carrying the trace that reads
off the identity coefficient; for finite H the trace measure is purely atomic
with one atom per irreducible character, weighted chi(1)^2 / |H|.  Measures
stay exact rationals end to end.  A numerical oracle realizes the same
decomposition inside the right regular representation (center from the linear
commutation equations, eigenprojections of a seeded random self-adjoint
central element, matrix units by compression onto each block) so the two
routes can certify each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt
from typing import Optional, Union

import numpy as np

from .characters import CharacterRow, CharacterTable, class_data, character_table
from .cyclotomic import Cyclo, coeff_to_complex
from .errors import (
    ConsistencyError,
    DegenerateSpectrumError,
    DomainMismatchError,
    ParameterError,
    PreconditionError,
)
from .fc_center import DEFAULT_CLASS_BUDGET, fc_filter
from .groups import (
    DEFAULT_CLOSURE_BUDGET,
    GroupElement,
    GroupHandle,
    Subgroup,
    as_subgroup,
    closure_of_union,
    commutator,
)

ORACLE_MAX_ORDER = 200

Coefficient = Union[Cyclo, complex]


def exact_fraction(x) -> Fraction:
    """Exact rational from int/Fraction/str; floats read as decimal literals."""
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(x)


def _as_coeff(x) -> Coefficient:
    if isinstance(x, Cyclo):
        return x
    if isinstance(x, (int, Fraction)):
        return Cyclo.rational(x)
    if isinstance(x, (float, complex)):
        return complex(x)
    raise ParameterError(f"unsupported coefficient type {type(x).__name__}")


def _coeff_is_zero(x: Coefficient) -> bool:
    return x.is_zero() if isinstance(x, Cyclo) else x == 0


class AlgebraElement:
    """A finite sum of unitaries u_g with exact or complex coefficients."""

    __slots__ = ("group", "terms", "exact")

    def __init__(self, group: GroupHandle, terms: dict):
        coeffs = {g: _as_coeff(c) for g, c in terms.items()}
        exact = all(isinstance(c, Cyclo) for c in coeffs.values())
        if not exact:
            coeffs = {g: coeff_to_complex(c) for g, c in coeffs.items()}
        self.group = group
        self.terms = {g: c for g, c in coeffs.items() if not _coeff_is_zero(c)}
        self.exact = exact

    # -- construction helpers ------------------------------------------------

    @staticmethod
    def zero(group: GroupHandle) -> "AlgebraElement":
        return AlgebraElement(group, {})

    def _check_peer(self, other: "AlgebraElement"):
        if self.group is not other.group:
            raise DomainMismatchError("algebra elements live over different handles")

    # -- linear structure ------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        self._check_peer(other)
        if self.exact and other.exact:
            acc = dict(self.terms)
            for g, c in other.terms.items():
                acc[g] = acc.get(g, Cyclo.zero()) + c
        else:
            acc = {g: coeff_to_complex(c) for g, c in self.terms.items()}
            for g, c in other.terms.items():
                acc[g] = acc.get(g, 0j) + coeff_to_complex(c)
        return AlgebraElement(self.group, acc)

    def __sub__(self, other):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        return self + (-other)

    def __neg__(self):
        return AlgebraElement(self.group, {g: -c for g, c in self.terms.items()})

    def scaled(self, s) -> "AlgebraElement":
        s = _as_coeff(s)
        return AlgebraElement(self.group, {g: c * s for g, c in self.terms.items()})

    def __rmul__(self, s):
        if isinstance(s, (int, Fraction, float, complex, Cyclo)):
            return self.scaled(s)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, float, complex, Cyclo)):
            return self.scaled(other)
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        self._check_peer(other)
        fam = self.group._family
        exact = self.exact and other.exact
        acc: dict = {}
        for g, a in self.terms.items():
            for h, b in other.terms.items():
                key = self.group.element(fam.mul(g.form, h.form))
                prod = a * b if exact else coeff_to_complex(a) * coeff_to_complex(b)
                if key in acc:
                    acc[key] = acc[key] + prod
                else:
                    acc[key] = prod
        return AlgebraElement(self.group, acc)

    def star(self) -> "AlgebraElement":
        """(sum a_g u_g)* = sum conj(a_g) u_{g^-1}."""
        fam = self.group._family
        out = {}
        for g, c in self.terms.items():
            out[self.group.element(fam.inv(g.form))] = c.conj() if isinstance(c, Cyclo) else c.conjugate()
        return AlgebraElement(self.group, out)

    # -- predicates ------------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        self._check_peer(other)
        diff = self - other
        return diff.is_zero()

    __hash__ = None

    def max_coeff_deviation(self, other: "AlgebraElement") -> float:
        """max_g |a_g - b_g| as a float; 0.0 exactly for equal exact elements."""
        diff = self - other
        if not diff.terms:
            return 0.0
        return max(abs(coeff_to_complex(c)) for c in diff.terms.values())

    def support(self) -> list[GroupElement]:
        return list(self.terms.keys())

    def __repr__(self):
        inner = " + ".join(f"({c!r})u[{g.describe()}]" for g, c in list(self.terms.items())[:6])
        more = "" if len(self.terms) <= 6 else f" + ... ({len(self.terms)} terms)"
        return f"<algebra {inner or '0'}{more}>"


def unitary(g: GroupElement) -> AlgebraElement:
    """The canonical unitary u_g."""
    return AlgebraElement(g.group, {g: 1})


def trace(a: AlgebraElement) -> Coefficient:
    """tau(sum a_g u_g) = a_e: linear, tracial, faithful."""
    for g, c in a.terms.items():
        if g.is_identity:
            return c
    return Cyclo.zero() if a.exact else 0j


def trace_of_product(a: AlgebraElement, b: AlgebraElement) -> Coefficient:
    """tau(a b) without materializing the product."""
    a._check_peer(b)
    fam = a.group._family
    if a.exact and b.exact:
        acc = Cyclo.zero()
        for g, c in a.terms.items():
            other = b.terms.get(a.group.element(fam.inv(g.form)))
            if other is not None:
                acc = acc + c * other
        return acc
    acc = 0j
    for g, c in a.terms.items():
        other = b.terms.get(a.group.element(fam.inv(g.form)))
        if other is not None:
            acc += coeff_to_complex(c) * coeff_to_complex(other)
    return acc


def tau_inner_product(a: AlgebraElement, b: AlgebraElement) -> Coefficient:
    """<a, b> = tau(a b*): sesquilinear, positive definite."""
    a._check_peer(b)
    return trace_of_product(a, b.star())


def norm_squared(a: AlgebraElement) -> Coefficient:
    return tau_inner_product(a, a)


# ---------------------------------------------------------------------------
# factor spectra


@dataclass(frozen=True)
class SpectrumAtom:
    label: str
    dimension: int
    measure: Fraction


@dataclass
class FactorSpectrum:
    """Atomic factor decomposition of S(H): one atom per irreducible character."""

    subgroup_order: int
    atoms: list[SpectrumAtom]

    def measure_dim_at_least(self, threshold: int) -> Fraction:
        return sum((a.measure for a in self.atoms if a.dimension >= threshold), Fraction(0))

    def dim_measure_multiset(self) -> list[tuple[int, Fraction]]:
        return sorted((a.dimension, a.measure) for a in self.atoms)

    def to_json(self) -> dict:
        return {
            "order": self.subgroup_order,
            "atoms": [
                {"label": a.label, "dim": a.dimension,
                 "measure_num": a.measure.numerator, "measure_den": a.measure.denominator}
                for a in self.atoms
            ],
        }


def factor_spectrum(subject, max_order: int = 5000,
                    table: Optional[CharacterTable] = None) -> FactorSpectrum:
    """One atom (label, chi(1), chi(1)^2/|H|) per irreducible character of H."""
    H = as_subgroup(subject)
    if table is None:
        table = character_table(class_data(H, max_order))
    n = H.order
    atoms = [SpectrumAtom(row.label, row.degree, Fraction(row.degree**2, n)) for row in table.rows]
    total = sum((a.measure for a in atoms), Fraction(0))
    if total != 1:
        raise ConsistencyError(f"atom measures sum to {total}, not 1")
    return FactorSpectrum(n, atoms)


def nonabelian_measure(subject, max_order: int = 5000) -> Fraction:
    """Trace measure of the non-commutative part {x : F^x has dimension >= 2}."""
    return factor_spectrum(subject, max_order).measure_dim_at_least(2)


def central_projection(H, chi: CharacterRow) -> AlgebraElement:
    """The central primitive idempotent (chi(1)/|H|) sum_h conj(chi(h)) u_h."""
    H = as_subgroup(H)
    cd = chi.class_data
    if cd.subgroup is not H and {e.form for e in cd.subgroup.elements} != {e.form for e in H.elements}:
        raise ParameterError("character row does not belong to this subgroup")
    scale = Fraction(chi.degree, H.order)
    terms = {}
    for h in H.elements:
        v = chi.values[cd.class_of[h.form]]
        conj_v = v.conj() if isinstance(v, Cyclo) else v.conjugate()
        terms[h] = conj_v * scale if isinstance(conj_v, Cyclo) else conj_v * float(scale)
    p = AlgebraElement(H.handle, terms)
    tr = trace(p)
    expected = Fraction(chi.degree**2, H.order)
    if p.exact:
        if tr != expected:
            raise ConsistencyError("central projection has the wrong trace")
    elif abs(coeff_to_complex(tr) - float(expected)) > 1e-9:
        raise ConsistencyError("central projection has the wrong trace")
    return p


# ---------------------------------------------------------------------------
# regular representation and the numerical oracle


class RegularRep:
    """Right regular representation of a finite subgroup on its coordinate space.

    rho(g) delta_x = delta_{x g^-1}, a permutation matrix; the left-handed
    mirror lambda(g) delta_x = delta_{g x} is provided for tests.
    """

    def __init__(self, subgroup: Subgroup):
        self.subgroup = as_subgroup(subgroup)
        self.dimension = self.subgroup.order
        fam = self.subgroup.handle._family
        idx = self.subgroup.index_of
        self._right = {}
        self._left = {}
        for g in self.subgroup.elements:
            ginv = fam.inv(g.form)
            right = np.empty(self.dimension, dtype=np.int64)
            left = np.empty(self.dimension, dtype=np.int64)
            for i, x in enumerate(self.subgroup.elements):
                right[i] = idx(self.subgroup.handle.element(fam.mul(x.form, ginv)))
                left[i] = idx(self.subgroup.handle.element(fam.mul(g.form, x.form)))
            self._right[g.form] = right
            self._left[g.form] = left

    def right_permutation(self, g: GroupElement) -> np.ndarray:
        return self._right[g.form]

    def matrix(self, g: GroupElement) -> np.ndarray:
        m = np.zeros((self.dimension, self.dimension))
        m[self._right[g.form], np.arange(self.dimension)] = 1.0
        return m

    def left_matrix(self, g: GroupElement) -> np.ndarray:
        m = np.zeros((self.dimension, self.dimension))
        m[self._left[g.form], np.arange(self.dimension)] = 1.0
        return m

    def matrix_of(self, a: AlgebraElement) -> np.ndarray:
        out = np.zeros((self.dimension, self.dimension), dtype=complex)
        cols = np.arange(self.dimension)
        for g, c in a.terms.items():
            out[self._right[g.form], cols] += coeff_to_complex(c)
        return out

    def _accumulate(self, coeffs: dict) -> np.ndarray:
        out = np.zeros((self.dimension, self.dimension), dtype=complex)
        cols = np.arange(self.dimension)
        for form, c in coeffs.items():
            out[self._right[form], cols] += c
        return out


@dataclass
class MatrixUnitSystem:
    """Explicit matrix units e_jk inside one block of the regular representation.

    Residuals are Frobenius norms computed in block-compressed coordinates,
    which agree exactly with the full-space Frobenius residuals because the
    compression is an isometry.
    """

    size: int
    units: np.ndarray  # (size, size, N, N)
    residuals: dict = field(default_factory=dict)

    def max_residual(self) -> float:
        return max(self.residuals.values()) if self.residuals else 0.0

    def certified(self, tolerance: float = 1e-6) -> bool:
        return self.max_residual() <= tolerance


@dataclass
class NumericalBlock:
    dimension: int
    multiplicity: int  # rank of the central projection = dimension^2
    measure: Fraction
    projection: np.ndarray
    units: MatrixUnitSystem


@dataclass
class NumericalDecomposition:
    subgroup_order: int
    blocks: list[NumericalBlock]
    seed: int
    attempts: int
    center_dimension: int
    projection_residual: float

    def dim_measure_multiset(self) -> list[tuple[int, Fraction]]:
        return sorted((b.dimension, b.measure) for b in self.blocks)

    def max_unit_residual(self) -> float:
        return max((b.units.max_residual() for b in self.blocks), default=0.0)

    def to_json(self) -> dict:
        return {
            "order": self.subgroup_order,
            "seed": self.seed,
            "attempts": self.attempts,
            "center_dimension": self.center_dimension,
            "projection_residual": self.projection_residual,
            "max_unit_residual": self.max_unit_residual(),
            "blocks": [
                {"dim": b.dimension, "multiplicity": b.multiplicity,
                 "measure_num": b.measure.numerator, "measure_den": b.measure.denominator,
                 "unit_residual": b.units.max_residual()}
                for b in sorted(self.blocks, key=lambda b: (b.dimension, b.measure))
            ],
        }


def _cluster(values: np.ndarray, gap: float) -> list[slice]:
    """Split sorted eigenvalues into runs separated by more than `gap`."""
    slices = []
    start = 0
    for i in range(1, len(values)):
        if values[i] - values[i - 1] > gap:
            slices.append(slice(start, i))
            start = i
    slices.append(slice(start, len(values)))
    return slices


def _random_selfadjoint(rep: RegularRep, coeffs: np.ndarray) -> np.ndarray:
    forms = [g.form for g in rep.subgroup.elements]
    x = rep._accumulate(dict(zip(forms, coeffs)))
    return (x + x.conj().T) / 2


def numerical_decomposition(subject, seed: int = 0, *, gap_tolerance: float = 1e-8,
                            max_attempts: int = 5,
                            max_order: int = ORACLE_MAX_ORDER) -> NumericalDecomposition:
    """Brute-force factor decomposition in the right regular representation.

    Independent of the character engine: the center is solved from the linear
    commutation equations, central projections are eigenprojections of a
    seeded random self-adjoint central element, block dimensions come from the
    rank data, and matrix units are extracted per block.  Eigen-gaps below
    `gap_tolerance` trigger a reseed, up to `max_attempts` times.
    """
    H = as_subgroup(subject)
    n = H.order
    if n > max_order:
        raise ParameterError(f"numerical oracle is limited to order <= {max_order}, got {n}")
    rep = RegularRep(H)
    fam = H.handle._family

    # center of the generated algebra: coefficient functions constant under
    # h -> g h g^-1 for every generator g, solved as a linear system
    gens = H.generators if H.generators is not None else H.elements
    gen_forms = fam.alphabet_block([g.form for g in gens]) or [fam.identity]
    rows = []
    index_of = H.index_of
    elems = H.elements
    for gform in gen_forms:
        ginv = fam.inv(gform)
        for i, h in enumerate(elems):
            j = index_of(H.handle.element(fam.mul(fam.mul(gform, h.form), ginv)))
            if i != j:
                row = np.zeros(n)
                row[i] = 1.0
                row[j] = -1.0
                rows.append(row)
    if rows:
        _, s, vt = np.linalg.svd(np.array(rows))
        rank = int((s > 1e-10 * max(1.0, s[0])).sum())
        center_basis = vt[rank:]
    else:
        center_basis = np.eye(n)
    r = center_basis.shape[0]

    last_error = "never ran"
    for attempt in range(max_attempts):
        rng = np.random.default_rng([seed, attempt])
        alpha = rng.random(r) + 1j * rng.random(r)
        z = _random_selfadjoint(rep, center_basis.T @ alpha)
        eigvals, eigvecs = np.linalg.eigh(z)
        scale = max(1.0, float(np.abs(eigvals).max()))
        clusters = _cluster(eigvals, gap_tolerance * scale)
        if len(clusters) != r:
            last_error = f"{len(clusters)} eigenvalue clusters for a center of dimension {r}"
            continue
        sizes = [sl.stop - sl.start for sl in clusters]
        dims = [isqrt(m) for m in sizes]
        if any(d * d != m for d, m in zip(dims, sizes)):
            last_error = f"cluster sizes {sizes} are not perfect squares"
            continue
        try:
            blocks = _extract_blocks(rep, eigvecs, clusters, dims, rng, gap_tolerance, max_attempts)
        except DegenerateSpectrumError as e:
            last_error = str(e)
            continue
        proj_residual = _projection_residual(rep, blocks, gen_forms)
        return NumericalDecomposition(
            subgroup_order=n,
            blocks=blocks,
            seed=seed,
            attempts=attempt + 1,
            center_dimension=r,
            projection_residual=proj_residual,
        )
    raise DegenerateSpectrumError(
        f"no usable spectrum after {max_attempts} seeds (last failure: {last_error})"
    )


def _extract_blocks(rep: RegularRep, eigvecs: np.ndarray, clusters: list[slice],
                    dims: list[int], rng: np.random.Generator,
                    gap_tolerance: float, max_attempts: int) -> list[NumericalBlock]:
    n = rep.dimension
    blocks = []
    for sl, d in zip(clusters, dims):
        v = eigvecs[:, sl]  # (n, d^2) orthonormal
        m = d * d
        projection = v @ v.conj().T
        if d == 1:
            units = np.empty((1, 1, n, n), dtype=complex)
            units[0, 0] = projection
            system = MatrixUnitSystem(1, units)
            _certify_units(system, np.eye(1, dtype=complex).reshape(1, 1, 1, 1))
        else:
            system = _matrix_units_for_block(rep, v, d, rng, gap_tolerance, max_attempts)
        blocks.append(NumericalBlock(
            dimension=d,
            multiplicity=m,
            measure=Fraction(m, n),
            projection=projection,
            units=system,
        ))
    return blocks


def _matrix_units_for_block(rep: RegularRep, v: np.ndarray, d: int,
                            rng: np.random.Generator, gap_tolerance: float,
                            max_attempts: int) -> MatrixUnitSystem:
    """Extract a d x d system of matrix units inside one block.

    Compressed to the block, a generic self-adjoint algebra element looks like
    y0 (x) I_d, so its spectral projections are d minimal projections e_jj of
    the block algebra; partial isometries e_j1 come from polar-normalizing
    E_j a E_1 for a generic algebra element a (E_j a E_1 spans a line, so the
    normalization is a scalar).
    """
    n = rep.dimension
    m = d * d
    forms = [g.form for g in rep.subgroup.elements]
    for _ in range(max_attempts):
        y = _random_selfadjoint(rep, rng.random(n) + 1j * rng.random(n))
        yc = v.conj().T @ y @ v
        yc = (yc + yc.conj().T) / 2
        w, u = np.linalg.eigh(yc)
        scale = max(1.0, float(np.abs(w).max()))
        clusters = _cluster(w, gap_tolerance * scale)
        if len(clusters) != d or any(sl.stop - sl.start != d for sl in clusters):
            continue
        minimal = [u[:, sl] @ u[:, sl].conj().T for sl in clusters]  # compressed E_j
        a = rep._accumulate(dict(zip(forms, rng.random(n) + 1j * rng.random(n))))
        ac = v.conj().T @ a @ v
        comp = np.empty((d, d, m, m), dtype=complex)
        ok = True
        isoms = [minimal[0]]
        for j in range(1, d):
            c = minimal[j] @ ac @ minimal[0]
            s = float(np.sqrt(max(np.einsum("ij,ij->", c.conj(), c).real, 0.0) / d))
            if s < 1e-10:
                ok = False
                break
            isoms.append(c / s)
        if not ok:
            continue
        for j in range(d):
            for k in range(d):
                comp[j, k] = isoms[j] @ isoms[k].conj().T
        # expand e = V comp V^dagger for every unit at once
        units = np.einsum("ia,jkab,cb->jkic", v, comp, v.conj())
        system = MatrixUnitSystem(d, units)
        _certify_units(system, comp)
        return system
    raise DegenerateSpectrumError(
        f"could not isolate {d} minimal projections in a dimension-{d} block"
    )


def _certify_units(system: MatrixUnitSystem, comp: np.ndarray):
    """Frobenius residuals of the matrix-unit relations, in compressed coordinates."""
    d = system.size
    product = 0.0
    adjoint = 0.0
    mvn = 0.0
    for j in range(d):
        for k in range(d):
            adjoint = max(adjoint, float(np.linalg.norm(comp[j, k].conj().T - comp[k, j])))
            u = comp[j, k]
            mvn = max(mvn, float(np.linalg.norm(u.conj().T @ u - comp[k, k])),
                      float(np.linalg.norm(u @ u.conj().T - comp[j, j])))
            for l in range(d):
                for m_ in range(d):
                    prod = comp[j, k] @ comp[l, m_]
                    expect = comp[j, m_] if k == l else 0.0
                    product = max(product, float(np.linalg.norm(prod - expect)))
    ssum = sum(comp[j, j] for j in range(d))
    unit_sum = float(np.linalg.norm(ssum - np.eye(comp.shape[-1])))
    system.residuals = {
        "product": product,
        "adjoint": adjoint,
        "murray_von_neumann": mvn,
        "sum_vs_projection": unit_sum,
    }


def _projection_residual(rep: RegularRep, blocks: list[NumericalBlock],
                         gen_forms: list) -> float:
    n = rep.dimension
    residual = 0.0
    total = np.zeros((n, n), dtype=complex)
    cols = np.arange(n)
    for b in blocks:
        p = b.projection
        total += p
        residual = max(residual, float(np.abs(p @ p - p).max()))
        for gform in gen_forms:
            perm = rep._right[gform]
            rho = np.zeros((n, n))
            rho[perm, cols] = 1.0
            residual = max(residual, float(np.abs(p @ rho - rho @ p).max()))
    residual = max(residual, float(np.abs(total - np.eye(n)).max()))
    return residual


# ---------------------------------------------------------------------------
# Lemma 6 / 7 verifiers


@dataclass
class Lemma7Report:
    """product_projection_spectrum verification payload."""

    passed: bool
    order: int
    threshold: int  # n0 * n1
    n0: int
    n1: int
    is_projection: bool
    projection_residual: float
    supported_atoms: list[tuple[str, int, Fraction]]  # (label, dim, tau(p p_psi))
    trace_of_projection: Fraction
    consistent_with_decomposition: bool
    unit_residual: Optional[float]
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "order": self.order,
            "threshold": self.threshold,
            "n0": self.n0,
            "n1": self.n1,
            "is_projection": self.is_projection,
            "projection_residual": self.projection_residual,
            "trace_num": self.trace_of_projection.numerator,
            "trace_den": self.trace_of_projection.denominator,
            "supported_atoms": [
                {"label": lab, "dim": dim,
                 "weight_num": w.numerator, "weight_den": w.denominator}
                for lab, dim, w in self.supported_atoms
            ],
            "consistent_with_decomposition": self.consistent_with_decomposition,
            "unit_residual": self.unit_residual,
            "notes": list(self.notes),
        }


def _threshold_projection(H: Subgroup, table: CharacterTable, threshold: int) -> AlgebraElement:
    p = AlgebraElement.zero(H.handle)
    for row in table.rows:
        if row.degree >= threshold:
            p = p + central_projection(H, row)
    return p


def product_projection_spectrum(h0, h1, n0: int = 2, n1: int = 2, *, seed: int = 0,
                                closure_budget: int = DEFAULT_CLOSURE_BUDGET,
                                max_order: int = 5000,
                                with_matrix_units: bool = True,
                                tolerance: float = 1e-9) -> Lemma7Report:
    """Verify that p_0 p_1 is a central projection of S(H_0 H_1) supported on
    atoms of dimension at least n0 * n1.

    p_i sums the central projections of S(H_i) over characters of degree at
    least n_i.  Commutation of the two subgroups is checked exhaustively.
    """
    H0, H1 = as_subgroup(h0), as_subgroup(h1)
    if H0.handle is not H1.handle:
        raise DomainMismatchError("subgroups live in different handles")
    if n0 < 1 or n1 < 1:
        raise ParameterError("dimension thresholds must be >= 1")
    for a in H0.elements:
        for b in H1.elements:
            if not commutator(a, b).is_identity:
                raise PreconditionError(
                    f"subgroups do not commute: [{a.describe()}, {b.describe()}] != e"
                )

    notes: list[str] = []
    t0 = character_table(class_data(H0, max_order))
    t1 = character_table(class_data(H1, max_order))
    p0 = _threshold_projection(H0, t0, n0)
    p1 = _threshold_projection(H1, t1, n1)
    p = p0 * p1
    if p.is_zero():
        notes.append("p_0 p_1 = 0; the claim holds vacuously")

    p_sq = p * p
    p_star = p.star()
    if p.exact:
        is_projection = p_sq == p and p_star == p
        projection_residual = 0.0 if is_projection else max(
            p_sq.max_coeff_deviation(p), p_star.max_coeff_deviation(p))
    else:
        projection_residual = max(p_sq.max_coeff_deviation(p), p_star.max_coeff_deviation(p))
        is_projection = projection_residual <= tolerance

    H = closure_of_union([H0, H1], closure_budget)
    table = character_table(class_data(H, max_order))
    tr = trace(p)
    tr_frac = tr.as_fraction() if isinstance(tr, Cyclo) else Fraction(tr.real).limit_denominator(10**12)

    supported: list[tuple[str, int, Fraction]] = []
    consistent = True
    all_big = True
    for row in table.rows:
        p_psi = central_projection(H, row)
        weight = trace_of_product(p, p_psi)
        if isinstance(weight, Cyclo):
            if weight.is_zero():
                continue
            if not weight.is_rational():
                raise ConsistencyError("tau(p p_psi) is not rational")
            w = weight.as_fraction()
        else:
            if abs(weight) <= tolerance:
                continue
            w = Fraction(weight.real).limit_denominator(10**12)
        supported.append((row.label, row.degree, w))
        if row.degree < n0 * n1:
            all_big = False
        if w != Fraction(row.degree**2, H.order):
            consistent = False
    if sum((w for _, _, w in supported), Fraction(0)) != tr_frac:
        consistent = False

    unit_residual = None
    if with_matrix_units and H.order <= ORACLE_MAX_ORDER:
        oracle = numerical_decomposition(H, seed)
        unit_residual = max(oracle.max_unit_residual(), oracle.projection_residual)
    elif with_matrix_units:
        notes.append(f"matrix units skipped: order {H.order} exceeds the oracle limit")

    passed = is_projection and all_big and consistent and (
        unit_residual is None or unit_residual <= 1e-6
    )
    return Lemma7Report(
        passed=passed,
        order=H.order,
        threshold=n0 * n1,
        n0=n0,
        n1=n1,
        is_projection=is_projection,
        projection_residual=projection_residual,
        supported_atoms=supported,
        trace_of_projection=tr_frac,
        consistent_with_decomposition=consistent,
        unit_residual=unit_residual,
        notes=notes,
    )


# ---------------------------------------------------------------------------
# Lemmas 8-9: dimension growth along a commuting tower


@dataclass
class GrowthResult:
    found: bool
    levels_required: Optional[int]
    achieved_measure: Optional[Fraction]
    dim_threshold: int
    measure_threshold: Fraction
    k: int
    epsilon: Fraction
    history: list[tuple[int, int, Fraction]]  # (levels, closure order, measure)
    cap: int

    def to_json(self) -> dict:
        return {
            "found": self.found,
            "levels_required": self.levels_required,
            "k": self.k,
            "dim_threshold": self.dim_threshold,
            "epsilon": {"num": self.epsilon.numerator, "den": self.epsilon.denominator},
            "measure_threshold": {"num": self.measure_threshold.numerator,
                                  "den": self.measure_threshold.denominator},
            "achieved_measure": None if self.achieved_measure is None else {
                "num": self.achieved_measure.numerator,
                "den": self.achieved_measure.denominator},
            "history": [
                {"levels": lv, "order": od, "measure": {"num": ms.numerator, "den": ms.denominator}}
                for lv, od, ms in self.history
            ],
            "cap": self.cap,
        }


def growth_search(tower: list, k: int = 2, epsilon: Fraction = Fraction(1, 20), *,
                  closure_budget: int = DEFAULT_CLOSURE_BUDGET,
                  max_order: int = 5000) -> GrowthResult:
    """Smallest N with measure{dim >= 2^(2^(k-1))} > 1/2 - epsilon in S(G_1...G_N).

    `tower` is a list of pairwise-commuting finite subgroups; commutation is
    spot-checked on their generators.  Reaching the cap without a witness is
    reported, not raised.
    """
    epsilon = exact_fraction(epsilon)
    if not 0 < epsilon < 1:
        raise ParameterError("epsilon must satisfy 0 < epsilon < 1")
    if k < 1:
        raise ParameterError("k must be >= 1")
    subs = [as_subgroup(t) for t in tower]
    if not subs:
        raise ParameterError("tower is empty")
    for i in range(len(subs)):
        gi = subs[i].generators or subs[i].elements
        for j in range(i + 1, len(subs)):
            gj = subs[j].generators or subs[j].elements
            for a in gi:
                for b in gj:
                    if not commutator(a, b).is_identity:
                        raise PreconditionError(
                            f"tower levels {i} and {j} do not commute at "
                            f"({a.describe()}, {b.describe()})"
                        )

    dim_threshold = 2 ** (2 ** (k - 1))
    measure_threshold = max(Fraction(1, 2) - epsilon, Fraction(0))
    history: list[tuple[int, int, Fraction]] = []
    for n_levels in range(1, len(subs) + 1):
        closure = closure_of_union(subs[:n_levels], closure_budget)
        measure = factor_spectrum(closure, max_order).measure_dim_at_least(dim_threshold)
        history.append((n_levels, closure.order, measure))
        if measure > measure_threshold:
            return GrowthResult(True, n_levels, measure, dim_threshold, measure_threshold,
                                k, epsilon, history, len(subs))
    return GrowthResult(False, None, None, dim_threshold, measure_threshold,
                        k, epsilon, history, len(subs))


# ---------------------------------------------------------------------------
# icc specialization


@dataclass
class IccReport:
    handle_description: str
    sample_size: int
    gram_is_identity: bool
    offending_pairs: list[tuple[str, str]]
    fc_precheck: list[str]
    metadata_icc: bool
    notes: list[str]

    @property
    def passed(self) -> bool:
        return self.gram_is_identity

    def to_json(self) -> dict:
        return {
            "group": self.handle_description,
            "sample_size": self.sample_size,
            "gram_is_identity": self.gram_is_identity,
            "offending_pairs": [list(p) for p in self.offending_pairs],
            "fc_precheck": list(self.fc_precheck),
            "metadata_icc": self.metadata_icc,
            "notes": list(self.notes),
        }


def icc_orthonormality_check(handle: GroupHandle, n: int = 25, *,
                             class_budget: int = DEFAULT_CLASS_BUDGET,
                             precheck: int = 8) -> IccReport:
    """Exact Gram matrix of the first n unitaries in an icc group.

    tau(u_g u_h*) = delta_{g,h} is evaluated by normal-form reduction of
    g h^-1; n pairwise-orthonormal unitaries inside the single factor are the
    reported infinite-dimensionality evidence.  FC evidence contradicting the
    icc hypothesis (any non-identity element with a provably finite class)
    raises ConsistencyError.
    """
    if n < 1:
        raise ParameterError("sample size must be >= 1")
    verdicts = fc_filter(handle, min(precheck, n) if handle.order is None else precheck,
                         budget=class_budget)
    precheck_lines = []
    for v in verdicts:
        if v.is_fc and not v.element.is_identity:
            raise ConsistencyError(
                f"{handle.describe()} is not icc: {v.element.describe()} has a finite "
                f"conjugacy class of size {v.class_size}"
            )
        precheck_lines.append(
            f"{v.element.describe()}: " +
            (f"fc({v.class_size})" if v.is_fc else f"not_fc_evidence(budget {v.budget})")
        )
    meta = handle.metadata
    notes = []
    if meta.icc:
        notes.append("family metadata declares G^fin = {e}")
    else:
        notes.append(f"icc is evidence-level only (per-class budget {class_budget})")

    sample = list(handle.iter_elements(n))
    fam = handle._family
    offending = []
    for i, g in enumerate(sample):
        for j, h in enumerate(sample):
            w = fam.mul(g.form, fam.inv(h.form))
            expected_identity = i == j
            if (w == fam.identity) != expected_identity:
                offending.append((g.describe(), h.describe()))
    ok = not offending
    if ok:
        notes.append(
            f"{len(sample)} pairwise-orthonormal unitaries in the single factor "
            f"(dimension >= {len(sample)} evidence)"
        )
    return IccReport(handle.describe(), len(sample), ok, offending, precheck_lines,
                     meta.icc, notes)
