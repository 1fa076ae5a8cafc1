"""Realize partial-fraction terms as independent parallel channels.

Each nonzero residue term becomes one small state-space channel: integrator
chains for powers of 1/s, first-order sections for real poles, and real
second-order sections for conjugate pairs.  Powers above one are realized as
a cascade of identical sections with the residue applied at the final stage.
Channel outputs sum (plus the constant feedthrough) to the original output,
and no channel reads another channel's state.

Quadratic numerators c1*s + c0 use the controllable canonical section

    x1' = x2,   x2' = -q0 x1 - p x2 + u,   y = c0 x1 + c1 x2

so the input is never differentiated; the derivative term lives in the
output map.  For r inputs every stage is widened to an r-vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import StateSpaceModel, TransferMatrix, transfer_matrix, validate_model
from .pfd import ResidueSet, Term, ordered_terms
from .spectrum import SpectrumClassification


@dataclass(frozen=True)
class Channel:
    """One independent channel realizing a single residue term.

    ``order`` counts the term's contribution in denominator-degree units
    (power for integrator chains and real poles, twice the power for
    quadratic sections); the local model carries order * r states.
    """

    index: int
    kind: str  # "integrator" | "first-order" | "second-order"
    term: Term
    order: int
    model: StateSpaceModel
    labels: tuple[str, ...]

    @property
    def states(self) -> int:
        return self.model.n


@dataclass(frozen=True)
class PrunedTerm:
    """A zero-residue term dropped during realization."""

    term: Term
    order: int


@dataclass(frozen=True)
class ParallelModel:
    """Ordered channels plus the direct feedthrough path."""

    channels: tuple[Channel, ...]
    pruned: tuple[PrunedTerm, ...]
    feedthrough: np.ndarray  # (m, r)
    spectrum: SpectrumClassification

    @property
    def m(self) -> int:
        return self.feedthrough.shape[0]

    @property
    def r(self) -> int:
        return self.feedthrough.shape[1]

    @property
    def total_order(self) -> int:
        return sum(c.order for c in self.channels)


def _chain_realization(lam: float, power: int, residue: np.ndarray) -> StateSpaceModel:
    # power cascaded stages of 1/(s - lam); the residue feeds the first stage
    # so the final stage IS the channel output, as in s*y2 = a44 y2 + k1 u
    m, r = residue.shape
    n = power * m
    A = np.zeros((n, n))
    B = np.zeros((n, r))
    C = np.zeros((m, n))
    eye = np.eye(m)
    for stage in range(power):
        sl = slice(stage * m, (stage + 1) * m)
        A[sl, sl] = lam * eye
        if stage == 0:
            B[sl, :] = residue
        else:
            prev = slice((stage - 1) * m, stage * m)
            A[sl, prev] = eye
    C[:, (power - 1) * m :] = eye
    return validate_model(A, B, C, np.zeros((m, r)))


def _quadratic_realization(
    re: float, im: float, power: int, c1: np.ndarray, c0: np.ndarray
) -> StateSpaceModel:
    # cascade of controllable-canonical biquads for 1/q(s)^power with
    # q(s) = s^2 - 2 re s + (re^2 + im^2); output map applies c0, c1
    p = -2.0 * re
    q0 = re**2 + im**2
    m, r = c0.shape
    n = 2 * power * r
    A = np.zeros((n, n))
    B = np.zeros((n, r))
    C = np.zeros((m, n))
    eye = np.eye(r)
    for stage in range(power):
        x1 = slice(2 * stage * r, (2 * stage + 1) * r)
        x2 = slice((2 * stage + 1) * r, (2 * stage + 2) * r)
        A[x1, x2] = eye
        A[x2, x1] = -q0 * eye
        A[x2, x2] = -p * eye
        if stage == 0:
            B[x2, :] = eye
        else:
            prev_x1 = slice(2 * (stage - 1) * r, (2 * stage - 1) * r)
            A[x2, prev_x1] = eye
    last = power - 1
    C[:, 2 * last * r : (2 * last + 1) * r] = c0
    C[:, (2 * last + 1) * r :] = c1
    return validate_model(A, B, C, np.zeros((m, r)))


def realize_channels(
    residues: ResidueSet, spectrum: SpectrumClassification
) -> ParallelModel:
    """Build one channel per nonzero residue term, in deterministic order."""
    channels: list[Channel] = []
    pruned: list[PrunedTerm] = []
    for term in ordered_terms(spectrum):
        value = residues.term_value(term)
        if term.kind == "complex":
            c1, c0 = value
            magnitude = max(np.max(np.abs(c1)), np.max(np.abs(c0)))
            order = 2 * term.power
        else:
            magnitude = np.max(np.abs(value))
            order = term.power
        if magnitude == 0.0:
            pruned.append(PrunedTerm(term, order))
            continue

        if term.kind == "zero":
            kind = "integrator"
            local = _chain_realization(0.0, term.power, value)
        elif term.kind == "real":
            kind = "first-order"
            lam = spectrum.real_groups[term.group].value
            local = _chain_realization(lam, term.power, value)
        else:
            kind = "second-order"
            grp = spectrum.complex_groups[term.group]
            local = _quadratic_realization(grp.re, grp.im, term.power, c1, c0)

        index = len(channels)
        base = f"y{index + 1}"
        if local.n == 1:
            labels = (base,)
        else:
            labels = tuple(f"{base}{k + 1}" for k in range(local.n))
        channels.append(Channel(index, kind, term, order, local, labels))

    return ParallelModel(
        channels=tuple(channels),
        pruned=tuple(pruned),
        feedthrough=residues.feedthrough,
        spectrum=spectrum,
    )


def channel_transfer(channel: Channel) -> TransferMatrix:
    """Transfer matrix of one channel, computed from its local model."""
    return transfer_matrix(channel.model)


@dataclass(frozen=True)
class OrderReport:
    """Order bookkeeping for the parallel realization.

    ``accounted`` counts every term (realized or pruned) once per power in
    denominator-degree units, which must reproduce the original order
    exactly; pruned entries are unobservable directions of the original
    state space.
    """

    passed: bool
    expected: int
    accounted: int
    channel_orders: tuple[int, ...]
    pruned_orders: tuple[int, ...]
    notes: tuple[str, ...]

    def __str__(self) -> str:
        status = "pass" if self.passed else "FAIL"
        lines = [
            f"order check: {status} (accounted {self.accounted} of {self.expected})",
            f"  channel orders: {list(self.channel_orders)}",
        ]
        if self.pruned_orders:
            lines.append(f"  pruned orders:  {list(self.pruned_orders)}")
        lines.extend(f"  note: {n}" for n in self.notes)
        return "\n".join(lines)


def verify_order(pm: ParallelModel, expected: int) -> OrderReport:
    """Check that realized plus pruned terms account for the model order."""
    unit = {"zero": 1, "real": 1, "complex": 2}
    active = sum(unit[c.term.kind] for c in pm.channels)
    dropped = sum(unit[p.term.kind] for p in pm.pruned)
    accounted = active + dropped
    notes: list[str] = []
    for p in pm.pruned:
        notes.append(
            f"term {p.term.kind}[{p.term.group}] power {p.term.power} has zero "
            f"residue; {unit[p.term.kind]} state(s) accounted as unobservable"
        )
    if pm.total_order > active:
        notes.append(
            "repeated-pole cascades duplicate lower-power sections; realized "
            f"state count {pm.total_order} exceeds the accounted {active}"
        )
    return OrderReport(
        passed=accounted == expected,
        expected=expected,
        accounted=accounted,
        channel_orders=tuple(c.order for c in pm.channels),
        pruned_orders=tuple(p.order for p in pm.pruned),
        notes=tuple(notes),
    )


def assemble_serial(pm: ParallelModel) -> StateSpaceModel:
    """Block-diagonal assembly of all channels into one state-space model.

    The result is a (generally non-minimal) realization whose transfer
    matrix equals the original; it also serves as the serial reference for
    plans built without the source model.
    """
    n = sum(c.states for c in pm.channels)
    m, r = pm.feedthrough.shape
    A = np.zeros((n, n))
    B = np.zeros((n, r))
    C = np.zeros((m, n))
    at = 0
    for c in pm.channels:
        k = c.states
        A[at : at + k, at : at + k] = c.model.A
        B[at : at + k, :] = c.model.B
        C[:, at : at + k] = c.model.C
        at += k
    return validate_model(A, B, C, pm.feedthrough)
