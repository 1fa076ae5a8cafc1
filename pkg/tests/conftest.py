"""Shared helpers: random stable systems and polynomial test utilities."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

import ltipar as lp


def assert_poly_close(p: lp.Polynomial, expected, rel=1e-9, abs_tol=None):
    expected = np.atleast_1d(np.asarray(expected, dtype=float))
    n = max(len(p.coeffs), len(expected))
    got = p.padded(n)
    want = np.zeros(n)
    want[: len(expected)] = expected
    scale = max(np.max(np.abs(want)), 1e-300)
    tol = abs_tol if abs_tol is not None else rel * scale
    assert np.max(np.abs(got - want)) <= tol, f"{got} != {want} (tol {tol})"


def poly_product_stack(s1: np.ndarray, s2: np.ndarray) -> np.ndarray:
    """Product of two matrix polynomials given as (deg+1, n, k) stacks."""
    out = np.zeros((s1.shape[0] + s2.shape[0] - 1, s1.shape[1], s2.shape[2]))
    for i in range(s1.shape[0]):
        for j in range(s2.shape[0]):
            out[i + j] += s1[i] @ s2[j]
    return out


def random_stable_model(rng: np.random.Generator, n_max: int = 8) -> lp.StateSpaceModel:
    """Random SISO model: stable, strictly proper, distinct eigenvalues.

    Eigenvalues are kept at least 0.12 apart in the complex plane so the
    decomposition stays well conditioned.
    """
    while True:
        n_real = int(rng.integers(0, n_max + 1))
        n_pairs = int(rng.integers(0, (n_max - n_real) // 2 + 1))
        if n_real + 2 * n_pairs >= 1:
            break

    placed: list[complex] = []

    def place(candidate: complex) -> bool:
        if all(abs(candidate - q) >= 0.12 for q in placed):
            placed.append(candidate)
            return True
        return False

    reals: list[float] = []
    while len(reals) < n_real:
        lam = -float(rng.uniform(0.2, 3.0))
        if place(complex(lam, 0.0)):
            reals.append(lam)
    pairs: list[tuple[float, float]] = []
    while len(pairs) < n_pairs:
        re = -float(rng.uniform(0.2, 3.0))
        im = float(rng.uniform(0.3, 3.0))
        if place(complex(re, im)):
            pairs.append((re, im))

    n = n_real + 2 * n_pairs
    A = np.zeros((n, n))
    at = 0
    for lam in reals:
        A[at, at] = lam
        at += 1
    for re, im in pairs:
        A[at : at + 2, at : at + 2] = [[re, im], [-im, re]]
        at += 2
    B = rng.normal(size=(n, 1))
    C = rng.normal(size=(1, n))
    D = np.zeros((1, 1))
    return lp.validate_model(A, B, C, D)


@lru_cache(maxsize=1)
def dc_pipeline():
    """Decomposition of the built-in drive model, shared across tests."""
    from ltipar.fixtures import dc_drive_model

    model = dc_drive_model()
    tf = lp.transfer_matrix(model)
    spectrum = lp.classify_spectrum(lp.find_roots(tf.denominator))
    residues = lp.decompose_matrix(tf, spectrum)
    pm = lp.realize_channels(residues, spectrum)
    return model, tf, spectrum, residues, pm


# Coefficients of the drive model in relative units (1/s).
DC = {"a12": 1.0, "a23": 50.0, "a32": -125.0, "a33": -125.0, "a34": 125.0, "a44": -1000.0, "b4": 1000.0}
