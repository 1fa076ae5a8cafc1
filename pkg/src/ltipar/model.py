"""State-space models, polynomials, and rational transfer matrices.

The central conversion implemented here takes a validated quadruple
(A, B, C, D) to its matrix transfer function

    W(s) = (C adj(sE - A) B + det(sE - A) D) / det(sE - A)

with the characteristic polynomial and the adjugate of ``sE - A`` computed
jointly by the Faddeev-LeVerrier recursion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NonFiniteError, NonFiniteResultError

#: Trailing coefficients smaller than this (relative to the largest
#: coefficient of the same polynomial) are trimmed to stabilize degree
#: detection.
TRIM_REL = 1e-12


class Polynomial:
    """Real polynomial with coefficients stored in ascending degree order.

    ``coeffs[k]`` multiplies ``s**k``.  The zero polynomial is a single zero
    coefficient.  Exact trailing zeros are stripped on construction; use
    :meth:`trim` to also drop trailing coefficients that are negligible
    relative to the largest one.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs) -> None:
        c = np.atleast_1d(np.asarray(coeffs, dtype=float))
        if c.ndim != 1:
            raise ValueError("coefficients must be one-dimensional")
        nz = np.nonzero(c)[0]
        c = c[: nz[-1] + 1] if nz.size else c[:1]
        self.coeffs = c.copy()
        self.coeffs.setflags(write=False)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return self.degree == 0 and self.coeffs[0] == 0.0

    def __call__(self, x):
        """Evaluate by Horner's scheme; accepts real or complex points."""
        result = np.zeros_like(np.asarray(x, dtype=np.result_type(x, float)))
        for c in self.coeffs[::-1]:
            result = result * x + c
        return result

    def padded(self, length: int) -> np.ndarray:
        """Coefficients zero-padded (or exactly fitting) to ``length``."""
        if length < len(self.coeffs):
            raise ValueError("padding shorter than coefficient count")
        out = np.zeros(length)
        out[: len(self.coeffs)] = self.coeffs
        return out

    def trim(self, rel: float = TRIM_REL) -> "Polynomial":
        """Drop trailing coefficients with |c| <= rel * max|c|."""
        scale = np.max(np.abs(self.coeffs))
        if scale == 0.0:
            return Polynomial([0.0])
        keep = np.nonzero(np.abs(self.coeffs) > rel * scale)[0]
        if keep.size == 0:
            return Polynomial([0.0])
        return Polynomial(self.coeffs[: keep[-1] + 1])

    def monic(self) -> "Polynomial":
        lead = self.coeffs[-1]
        if lead == 0.0:
            raise ValueError("cannot normalize the zero polynomial")
        return Polynomial(self.coeffs / lead)

    def __add__(self, other: "Polynomial") -> "Polynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        return Polynomial(self.padded(n) + other.padded(n))

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        return Polynomial(self.padded(n) - other.padded(n))

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            return Polynomial(np.convolve(self.coeffs, other.coeffs))
        return Polynomial(self.coeffs * float(other))

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"Polynomial({list(self.coeffs)})"


class PolyMatrix:
    """Rectangular matrix of :class:`Polynomial` entries."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, entries) -> None:
        if not entries or not entries[0]:
            raise ValueError("PolyMatrix must have at least one entry")
        cols = len(entries[0])
        for row in entries:
            if len(row) != cols:
                raise ValueError("PolyMatrix rows must have equal length")
        self.rows = len(entries)
        self.cols = cols
        self.entries = tuple(tuple(row) for row in entries)

    @classmethod
    def from_stack(cls, stack: np.ndarray) -> "PolyMatrix":
        """Build from a (degree+1, rows, cols) coefficient stack."""
        _, rows, cols = stack.shape
        return cls(
            [[Polynomial(stack[:, i, j]).trim() for j in range(cols)] for i in range(rows)]
        )

    def entry(self, i: int, j: int) -> Polynomial:
        return self.entries[i][j]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def stack(self, length: int | None = None) -> np.ndarray:
        """Coefficient stack of shape (length, rows, cols)."""
        if length is None:
            length = 1 + max(p.degree for row in self.entries for p in row)
        out = np.zeros((length, self.rows, self.cols))
        for i, row in enumerate(self.entries):
            for j, p in enumerate(row):
                out[: len(p.coeffs), i, j] = p.coeffs
        return out

    def __repr__(self) -> str:
        return f"PolyMatrix({self.rows}x{self.cols})"


@dataclass(frozen=True)
class StateSpaceModel:
    """Validated continuous-time model dx/dt = Ax + Bu, y = Cx + Du.

    A is n x n, B is n x r, C is m x n and D is m x r.  Instances are
    immutable and safe to share across workers; build them through
    :func:`validate_model`.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def r(self) -> int:
        return self.B.shape[1]

    @property
    def m(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True)
class TransferMatrix:
    """m x r numerator over a shared scalar (monic) denominator."""

    numerator: PolyMatrix
    denominator: Polynomial

    @property
    def shape(self) -> tuple[int, int]:
        return self.numerator.shape


def _frozen(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


def validate_model(A, B, C, D) -> StateSpaceModel:
    """Check dimensions and finiteness of the four matrices.

    Raises :class:`DimensionError` naming the offending matrix, or
    :class:`NonFiniteError` when an entry is NaN or infinite.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    D = np.atleast_2d(np.asarray(D, dtype=float))

    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"A must be square, got {A.shape[0]}x{A.shape[1]}")
    n = A.shape[0]
    if B.shape[0] != n:
        raise DimensionError(f"B must have {n} rows to match A, got {B.shape[0]}")
    r = B.shape[1]
    if C.shape[1] != n:
        raise DimensionError(f"C must have {n} columns to match A, got {C.shape[1]}")
    m = C.shape[0]
    if D.shape != (m, r):
        raise DimensionError(f"D must be {m}x{r} to match C and B, got {D.shape[0]}x{D.shape[1]}")

    for name, mat in (("A", A), ("B", B), ("C", C), ("D", D)):
        if not np.all(np.isfinite(mat)):
            raise NonFiniteError(f"matrix {name} contains non-finite entries")

    return StateSpaceModel(_frozen(A), _frozen(B), _frozen(C), _frozen(D))


def charpoly_and_adjugate(model: StateSpaceModel) -> tuple[Polynomial, PolyMatrix]:
    """Characteristic polynomial and adjugate of ``sE - A``.

    Uses the Faddeev-LeVerrier recursion, which yields both objects in a
    single pass:

        M_1 = E,  c_{n-k} = -tr(A M_k) / k,  M_{k+1} = A M_k + c_{n-k} E

    so that det(sE - A) = s^n + c_{n-1} s^{n-1} + ... + c_0 and
    adj(sE - A) = sum_k M_k s^{n-k}.  The product identity
    (sE - A) adj(sE - A) = det(sE - A) E holds to rounding.
    """
    A = model.A
    n = model.n
    coeffs = np.zeros(n + 1)
    coeffs[n] = 1.0
    eye = np.eye(n)
    adj_stack = np.zeros((n, n, n))  # adj_stack[k] multiplies s^k
    Mk = eye.copy()
    # overflow surfaces as the explicit non-finite check below, not a warning
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, n + 1):
            adj_stack[n - k] = Mk
            AM = A @ Mk
            c = -np.trace(AM) / k
            coeffs[n - k] = c
            Mk = AM + c * eye

    if not np.all(np.isfinite(coeffs)) or not np.all(np.isfinite(adj_stack)):
        raise NonFiniteResultError("characteristic polynomial computation overflowed")

    adjugate = PolyMatrix(
        [[Polynomial(adj_stack[:, i, j]) for j in range(n)] for i in range(n)]
    )
    return Polynomial(coeffs), adjugate


def transfer_matrix(model: StateSpaceModel) -> TransferMatrix:
    """Transfer matrix with numerator C adj(sE-A) B + det(sE-A) D.

    The shared denominator is the monic characteristic polynomial; each
    numerator entry is trimmed of trailing negligible coefficients, so the
    entry degree equals the denominator degree only where D is nonzero.
    """
    den, adj = charpoly_and_adjugate(model)
    n = model.n
    num_stack = np.zeros((n + 1, model.m, model.r))
    adj_stack = adj.stack(n + 1)
    for k in range(n + 1):
        num_stack[k] = model.C @ adj_stack[k] @ model.B + den.coeffs[k] * model.D

    if not np.all(np.isfinite(num_stack)):
        raise NonFiniteResultError("transfer numerator computation overflowed")

    return TransferMatrix(PolyMatrix.from_stack(num_stack), den)
