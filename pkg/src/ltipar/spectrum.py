"""Root finding and spectrum classification for the shared denominator.

Roots are found as eigenvalues of the companion matrix of the monic
polynomial, then sorted into three groups: a zero root of some multiplicity,
distinct real roots, and complex-conjugate pairs (stored with positive
imaginary part).  Group multiplicities always add up to the polynomial
degree, counting each conjugate pair twice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegreeError, RootConvergenceError, UnpairedComplexRootError
from .model import Polynomial


@dataclass(frozen=True)
class SpectralConfig:
    """Tolerances for root classification.

    zero_tol scales with the largest root magnitude: a root counts as zero
    when |root| <= zero_tol * (1 + max |root|).  cluster_tol merges roots
    with |a - b| <= cluster_tol * max(1, |a|) into one group, and bounds the
    conjugate-pairing mismatch.
    """

    zero_tol: float = 1e-9
    cluster_tol: float = 1e-8


DEFAULT_CONFIG = SpectralConfig()


@dataclass(frozen=True)
class RealGroup:
    value: float
    multiplicity: int


@dataclass(frozen=True)
class ComplexGroup:
    re: float
    im: float  # strictly positive; the conjugate is implicit
    multiplicity: int


@dataclass(frozen=True)
class SpectrumClassification:
    """Zero / real / complex-pair root groups with multiplicities."""

    zero_multiplicity: int
    real_groups: tuple[RealGroup, ...]
    complex_groups: tuple[ComplexGroup, ...]

    @property
    def total_order(self) -> int:
        return (
            self.zero_multiplicity
            + sum(g.multiplicity for g in self.real_groups)
            + 2 * sum(g.multiplicity for g in self.complex_groups)
        )

    def expand_roots(self) -> np.ndarray:
        """All roots with repetition, conjugates included."""
        roots: list[complex] = [0.0] * self.zero_multiplicity
        for g in self.real_groups:
            roots.extend([g.value] * g.multiplicity)
        for g in self.complex_groups:
            roots.extend([complex(g.re, g.im)] * g.multiplicity)
            roots.extend([complex(g.re, -g.im)] * g.multiplicity)
        return np.asarray(roots, dtype=complex)

    def reconstruct(self) -> Polynomial:
        """Monic polynomial with exactly these roots."""
        poly = Polynomial([1.0])
        for _ in range(self.zero_multiplicity):
            poly = poly * Polynomial([0.0, 1.0])
        for g in self.real_groups:
            for _ in range(g.multiplicity):
                poly = poly * Polynomial([-g.value, 1.0])
        for g in self.complex_groups:
            quad = Polynomial([g.re**2 + g.im**2, -2.0 * g.re, 1.0])
            for _ in range(g.multiplicity):
                poly = poly * quad
        return poly


def find_roots(p: Polynomial, cfg: SpectralConfig = DEFAULT_CONFIG) -> np.ndarray:
    """All deg(p) roots of ``p``, with repetition, in no particular order.

    Eigenvalues of the companion matrix of the monic normalization.  Each
    returned root satisfies |p(root)| <= 1e-6 * max|coeff| * max(1,|root|)^deg,
    otherwise :class:`RootConvergenceError` is raised.
    """
    if p.degree < 1:
        raise DegreeError("cannot root a degree-zero polynomial")
    monic = p.monic()
    n = monic.degree
    companion = np.zeros((n, n))
    if n > 1:
        companion[1:, :-1] = np.eye(n - 1)
    companion[0, :] = -monic.coeffs[-2::-1]
    try:
        roots = np.linalg.eigvals(companion)
    except np.linalg.LinAlgError as exc:
        raise RootConvergenceError(f"eigenvalue iteration failed: {exc}") from exc

    scale = np.max(np.abs(p.coeffs))
    residuals = np.abs(p(roots))
    bounds = 1e-6 * scale * np.maximum(1.0, np.abs(roots)) ** p.degree
    if np.any(residuals > bounds):
        worst = int(np.argmax(residuals / bounds))
        raise RootConvergenceError(
            f"root {roots[worst]} has residual {residuals[worst]:.3e} "
            f"above bound {bounds[worst]:.3e}"
        )
    return roots


def _cluster(roots: np.ndarray, cluster_tol: float) -> list[tuple[complex, int]]:
    # Greedy merge in (re, im) sort order; centers are running means so the
    # result does not depend on float noise in the input ordering.
    order = np.lexsort((roots.imag, roots.real))
    centers: list[complex] = []
    counts: list[int] = []
    for root in roots[order]:
        placed = False
        for idx, center in enumerate(centers):
            if abs(root - center) <= cluster_tol * max(1.0, abs(center)):
                counts[idx] += 1
                centers[idx] = center + (root - center) / counts[idx]
                placed = True
                break
        if not placed:
            centers.append(complex(root))
            counts.append(1)
    return list(zip(centers, counts))


def classify_spectrum(
    roots, cfg: SpectralConfig = DEFAULT_CONFIG
) -> SpectrumClassification:
    """Cluster raw roots into zero / real / conjugate-pair groups.

    Raises :class:`UnpairedComplexRootError` when a complex cluster has no
    matching conjugate cluster, which signals numerically inconsistent input.
    """
    roots = np.asarray(roots, dtype=complex)
    if roots.size == 0:
        raise DegreeError("cannot classify an empty root list")

    max_mag = float(np.max(np.abs(roots)))
    zero_bound = cfg.zero_tol * (1.0 + max_mag)

    zero_mult = 0
    reals: list[RealGroup] = []
    pos: list[tuple[complex, int]] = []
    neg: list[tuple[complex, int]] = []
    for center, count in _cluster(roots, cfg.cluster_tol):
        if abs(center) <= zero_bound:
            zero_mult += count
        elif abs(center.imag) <= cfg.cluster_tol * max(1.0, abs(center)):
            reals.append(RealGroup(center.real, count))
        elif center.imag > 0:
            pos.append((center, count))
        else:
            neg.append((center, count))

    # Pair each positive-imaginary cluster with its nearest conjugate and
    # fold the residual asymmetry by averaging.
    pairs: list[ComplexGroup] = []
    remaining = list(neg)
    for center, count in pos:
        target = center.conjugate()
        best = None
        best_dist = None
        for idx, (cand, cand_count) in enumerate(remaining):
            dist = abs(cand - target)
            if best_dist is None or dist < best_dist:
                best, best_dist = idx, dist
        if (
            best is None
            or best_dist > cfg.cluster_tol * max(1.0, abs(center))
            or remaining[best][1] != count
        ):
            raise UnpairedComplexRootError(
                f"complex root {center} (multiplicity {count}) has no conjugate partner"
            )
        partner = remaining.pop(best)[0]
        pairs.append(
            ComplexGroup(
                re=0.5 * (center.real + partner.real),
                im=0.5 * (center.imag - partner.imag),
                multiplicity=count,
            )
        )
    if remaining:
        raise UnpairedComplexRootError(
            f"complex root {remaining[0][0]} has no conjugate partner"
        )

    reals.sort(key=lambda g: g.value)
    pairs.sort(key=lambda g: (g.re, g.im))
    return SpectrumClassification(zero_mult, tuple(reals), tuple(pairs))
