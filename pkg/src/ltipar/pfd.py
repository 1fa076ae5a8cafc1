"""Partial fraction decomposition of transfer-matrix entries.

Every entry N(s)/D(s) of the transfer matrix is split over the classified
spectrum of the shared denominator into

    N/D = feedthrough + sum_i e_i / s^i
                      + sum_{g,j} f_gj / (s - lambda_g)^j
                      + sum_{g,j} (c1_gj s + c0_gj) / q_g(s)^j

where q_g(s) = (s - re_g)^2 + im_g^2 keeps conjugate pairs in real quadratic
form.  The unknown residues are found by multiplying through by D and
matching coefficients of s^0 .. s^(n-1), which yields one dense n x n linear
solve per entry.  Matrix-valued decompositions apply this cellwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegreeError, SingularSystemError
from .model import Polynomial, PolyMatrix, TransferMatrix
from .spectrum import SpectrumClassification

#: Residues at or below this fraction of the largest residue magnitude are
#: zeroed, pruning spurious channels created by roundoff.
PRUNE_REL = 1e-12


@dataclass(frozen=True)
class Term:
    """One partial-fraction term: a spectrum group at a given power."""

    kind: str  # "zero" | "real" | "complex"
    group: int  # index into the corresponding group tuple (0 for "zero")
    power: int  # 1 .. multiplicity


def ordered_terms(spectrum: SpectrumClassification) -> list[Term]:
    """Deterministic term order: integrator powers, reals, complex pairs."""
    terms = [Term("zero", 0, i) for i in range(1, spectrum.zero_multiplicity + 1)]
    for g, grp in enumerate(spectrum.real_groups):
        terms.extend(Term("real", g, j) for j in range(1, grp.multiplicity + 1))
    for g, grp in enumerate(spectrum.complex_groups):
        terms.extend(Term("complex", g, j) for j in range(1, grp.multiplicity + 1))
    return terms


def base_factor(spectrum: SpectrumClassification, term: Term) -> Polynomial:
    """The linear or quadratic factor the term's denominator is a power of."""
    if term.kind == "zero":
        return Polynomial([0.0, 1.0])
    if term.kind == "real":
        return Polynomial([-spectrum.real_groups[term.group].value, 1.0])
    grp = spectrum.complex_groups[term.group]
    return Polynomial([grp.re**2 + grp.im**2, -2.0 * grp.re, 1.0])


def cofactor(spectrum: SpectrumClassification, term: Term) -> Polynomial:
    """D(s) / factor(s)^power, built from the spectrum's exact factors."""
    poly = Polynomial([1.0])
    groups: list[tuple[Polynomial, int]] = []
    groups.append((Polynomial([0.0, 1.0]), spectrum.zero_multiplicity))
    for grp in spectrum.real_groups:
        groups.append((Polynomial([-grp.value, 1.0]), grp.multiplicity))
    for grp in spectrum.complex_groups:
        groups.append(
            (Polynomial([grp.re**2 + grp.im**2, -2.0 * grp.re, 1.0]), grp.multiplicity)
        )

    own = {"zero": 0}.get(term.kind)
    if own is None:
        own = 1 + term.group if term.kind == "real" else 1 + len(spectrum.real_groups) + term.group
    for idx, (factor, mult) in enumerate(groups):
        count = mult - term.power if idx == own else mult
        for _ in range(count):
            poly = poly * factor
    return poly


@dataclass(frozen=True)
class ResidueSet:
    """Residues of a matrix decomposition, mirroring the spectrum layout.

    integrator_terms[i-1], real_terms[g][j-1] and complex_terms[g][j-1] hold
    the m x r residue matrix for power i (or j); complex entries are the
    (c1, c0) pair of the quadratic numerator c1*s + c0.
    """

    feedthrough: np.ndarray
    integrator_terms: tuple[np.ndarray, ...]
    real_terms: tuple[tuple[np.ndarray, ...], ...]
    complex_terms: tuple[tuple[tuple[np.ndarray, np.ndarray], ...], ...]

    @property
    def shape(self) -> tuple[int, int]:
        return self.feedthrough.shape

    def term_value(self, term: Term):
        if term.kind == "zero":
            return self.integrator_terms[term.power - 1]
        if term.kind == "real":
            return self.real_terms[term.group][term.power - 1]
        return self.complex_terms[term.group][term.power - 1]


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


def _matching_system(
    spectrum: SpectrumClassification, terms: list[Term], n: int
) -> np.ndarray:
    """Columns are the cofactor coefficient vectors of each unknown."""
    columns: list[np.ndarray] = []
    for term in terms:
        cof = cofactor(spectrum, term)
        if term.kind == "complex":
            shifted = cof * Polynomial([0.0, 1.0])  # multiplies the c1 unknown
            columns.append(shifted.padded(n))
            columns.append(cof.padded(n))
        else:
            columns.append(cof.padded(n))
    return np.column_stack(columns)


def decompose_entry(
    num: Polynomial,
    den: Polynomial,
    spectrum: SpectrumClassification,
    prune_rel: float = PRUNE_REL,
) -> ResidueSet:
    """Decompose one scalar entry; returns a 1x1 :class:`ResidueSet`.

    The feedthrough constant is the leading-coefficient ratio when numerator
    and denominator degrees are equal, zero otherwise; the strictly proper
    remainder is decomposed by the coefficient-matching solve.
    """
    lead = den.coeffs[-1]
    if lead == 0.0:
        raise DegreeError("denominator has zero leading coefficient")
    if lead != 1.0:
        den = Polynomial(den.coeffs / lead)
        num = Polynomial(num.coeffs / lead)
    n = den.degree
    if num.degree > n and not num.is_zero():
        raise DegreeError(
            f"numerator degree {num.degree} exceeds denominator degree {n}"
        )
    if spectrum.total_order != n:
        raise SingularSystemError(
            f"spectrum order {spectrum.total_order} does not match denominator degree {n}"
        )

    feedthrough = 0.0
    remainder = num
    if num.degree == n:
        feedthrough = num.coeffs[n]
        remainder = num - feedthrough * den

    terms = ordered_terms(spectrum)
    if remainder.is_zero():
        values = np.zeros(n)
    else:
        system = _matching_system(spectrum, terms, n)
        rhs = remainder.padded(n)
        try:
            values = np.linalg.solve(system, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError(
                f"residue system is singular; spectrum likely misclassified: {exc}"
            ) from exc
        scale = np.max(np.abs(values))
        if scale > 0.0:
            values[np.abs(values) <= prune_rel * scale] = 0.0

    integ: list[np.ndarray] = []
    reals: list[tuple[np.ndarray, ...]] = []
    cplx: list[tuple[tuple[np.ndarray, np.ndarray], ...]] = []
    pos = 0
    for term in terms:
        if term.kind == "complex":
            c1, c0 = values[pos], values[pos + 1]
            pos += 2
        else:
            value = values[pos]
            pos += 1
        if term.kind == "zero":
            integ.append(_freeze([[value]]))
        elif term.kind == "real":
            if term.power == 1:
                reals.append(())
            reals[term.group] = reals[term.group] + (_freeze([[value]]),)
        else:
            if term.power == 1:
                cplx.append(())
            cplx[term.group] = cplx[term.group] + (
                (_freeze([[c1]]), _freeze([[c0]])),
            )

    return ResidueSet(
        feedthrough=_freeze([[feedthrough]]),
        integrator_terms=tuple(integ),
        real_terms=tuple(reals),
        complex_terms=tuple(cplx),
    )


def decompose_matrix(
    tf: TransferMatrix,
    spectrum: SpectrumClassification,
    prune_rel: float = PRUNE_REL,
) -> ResidueSet:
    """Cellwise decomposition assembled into matrix-valued residues.

    Whole terms whose matrices fall below the pruning threshold relative to
    the largest term are zeroed so downstream realization can drop them.
    """
    m, r = tf.shape
    cells: list[list[ResidueSet]] = []
    for i in range(m):
        row = []
        for j in range(r):
            try:
                row.append(
                    decompose_entry(tf.numerator.entry(i, j), tf.denominator, spectrum, prune_rel)
                )
            except (DegreeError, SingularSystemError) as exc:
                raise type(exc)(f"entry ({i},{j}): {exc}") from exc
        cells.append(row)

    def gather(pick) -> np.ndarray:
        out = np.zeros((m, r))
        for i in range(m):
            for j in range(r):
                out[i, j] = pick(cells[i][j])
        return out

    feedthrough = gather(lambda c: c.feedthrough[0, 0])
    integ = [
        gather(lambda c, p=p: c.integrator_terms[p][0, 0])
        for p in range(spectrum.zero_multiplicity)
    ]
    reals = [
        [
            gather(lambda c, g=g, p=p: c.real_terms[g][p][0, 0])
            for p in range(grp.multiplicity)
        ]
        for g, grp in enumerate(spectrum.real_groups)
    ]
    cplx = [
        [
            (
                gather(lambda c, g=g, p=p: c.complex_terms[g][p][0][0, 0]),
                gather(lambda c, g=g, p=p: c.complex_terms[g][p][1][0, 0]),
            )
            for p in range(grp.multiplicity)
        ]
        for g, grp in enumerate(spectrum.complex_groups)
    ]

    # Matrix-level pruning across whole terms.
    mags = [np.max(np.abs(t)) for t in integ]
    mags += [np.max(np.abs(t)) for group in reals for t in group]
    mags += [max(np.max(np.abs(c1)), np.max(np.abs(c0))) for group in cplx for c1, c0 in group]
    scale = max(mags, default=0.0)
    if scale > 0.0:

        def prune(mat: np.ndarray) -> np.ndarray:
            return np.zeros_like(mat) if np.max(np.abs(mat)) <= prune_rel * scale else mat

        integ = [prune(t) for t in integ]
        reals = [[prune(t) for t in group] for group in reals]
        cplx = [[(prune(c1), prune(c0)) for c1, c0 in group] for group in cplx]

    return ResidueSet(
        feedthrough=_freeze(feedthrough),
        integrator_terms=tuple(_freeze(t) for t in integ),
        real_terms=tuple(tuple(_freeze(t) for t in group) for group in reals),
        complex_terms=tuple(
            tuple((_freeze(c1), _freeze(c0)) for c1, c0 in group) for group in cplx
        ),
    )


def recombine(
    residues: ResidueSet,
    spectrum: SpectrumClassification,
    den: Polynomial,
) -> PolyMatrix:
    """Sum all terms back over the common denominator.

    Returns the numerator matrix implied by the residues; tests compare it
    against the original transfer numerator.
    """
    m, r = residues.shape
    n = den.degree
    stack = np.zeros((n + 1, m, r))
    stack += den.padded(n + 1)[:, None, None] * residues.feedthrough[None, :, :]
    for term in ordered_terms(spectrum):
        cof = cofactor(spectrum, term).padded(n + 1)
        if term.kind == "complex":
            c1, c0 = residues.term_value(term)
            shifted = np.zeros(n + 1)
            shifted[1:] = cof[:-1]
            stack += shifted[:, None, None] * c1[None, :, :]
            stack += cof[:, None, None] * c0[None, :, :]
        else:
            stack += cof[:, None, None] * residues.term_value(term)[None, :, :]
    return PolyMatrix.from_stack(stack)
