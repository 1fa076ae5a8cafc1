"""Substitute a derivative-operator approximation into channel equations.

A :class:`DerivativeRule` represents s ~ N(z^-1) / (T D(z^-1)) (optionally
anchored ``future_depth`` samples ahead, which the simulator rejects).
Substituting it into the local state equations s*x = A x + B u and clearing
the denominator gives, for every state variable, one implicit recurrence

    sum_d N[d] x_j[i-d] - T sum_d D[d] (A_j x[i-d] + B_j u[i-d]) = 0

which is normalized on the variable's own current coefficient
a0 = N[0] - T D[0] A_jj.  Cross-references to other current variables stay
on the right-hand side (second-order sections couple their two states), so
stepping solves the small (I - W0) system once per channel, not per sample.

The stacked explicit recurrences of all channels form the mesh system
Ad Yd + Md Ud = 0 with -1 on every current variable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import Channel, ParallelModel
from .errors import AcausalRuleError, NormalizationError, SingularStepError
from .model import StateSpaceModel

#: An explicit recurrence whose normalizer falls below this is rejected; the
#: sample time collides with a pole of the implicit update.
A0_MIN = 1e-12


@dataclass(frozen=True)
class DerivativeRule:
    """Rational approximation of the derivative operator.

    ``num`` and ``den`` are coefficient lists in ascending powers of z^-1;
    the operator is s ~ z^future_depth * num(z^-1) / (T * den(z^-1)).  Rules
    with ``future_depth > 0`` reference samples ahead of the current one and
    are rejected by the simulator.
    """

    name: str
    num: tuple[float, ...]
    den: tuple[float, ...]
    future_depth: int = 0

    @property
    def past_depth(self) -> int:
        return max(len(self.num), len(self.den)) - 1

    def padded(self) -> tuple[np.ndarray, np.ndarray]:
        p = self.past_depth
        num = np.zeros(p + 1)
        num[: len(self.num)] = self.num
        den = np.zeros(p + 1)
        den[: len(self.den)] = self.den
        return num, den


TUSTIN = DerivativeRule("tustin", (2.0, -2.0), (1.0, 1.0))
BACKWARD_EULER = DerivativeRule("backward-euler", (1.0, -1.0), (1.0,))
#: Classic forward Euler anchored at the upcoming sample; acausal as written.
FORWARD_EULER = DerivativeRule("forward-euler", (1.0, -1.0), (1.0,), future_depth=1)
#: The same operator shifted one sample back, usable as an explicit update.
FORWARD_EULER_SHIFTED = DerivativeRule(
    "forward-euler-shifted", (1.0, -1.0), (0.0, 1.0)
)

BUILTIN_RULES = {
    rule.name: rule
    for rule in (TUSTIN, BACKWARD_EULER, FORWARD_EULER, FORWARD_EULER_SHIFTED)
}


def rule_by_name(name: str) -> DerivativeRule:
    try:
        return BUILTIN_RULES[name]
    except KeyError:
        known = ", ".join(sorted(BUILTIN_RULES))
        raise KeyError(f"unknown derivative rule {name!r}; built-ins: {known}") from None


@dataclass(frozen=True)
class DifferenceEquation:
    """Explicit recurrence for one virtual variable.

    After normalization the equation reads

        x[i] = sum_{(k,d) != (self,0)} rhs_state[k,d] * x_k[i-d]
             + sum_{l,d} rhs_input[l,d] * u_l[i-d]

    where ``rhs_state[self,0]`` is zero by construction.  ``a0`` records the
    pre-normalization coefficient of the variable's own current sample.
    """

    var: str
    var_index: int
    state_labels: tuple[str, ...]
    rhs_state: np.ndarray  # (k, past_depth + 1)
    rhs_input: np.ndarray  # (r, past_depth + 1)
    a0: float


def _state_equations(
    A: np.ndarray,
    B: np.ndarray,
    labels: tuple[str, ...],
    rule: DerivativeRule,
    T: float,
) -> list[DifferenceEquation]:
    if rule.future_depth > 0:
        raise AcausalRuleError(
            f"rule {rule.name!r} needs {rule.future_depth} future sample(s); "
            "only causal rules can be simulated"
        )
    if T <= 0.0:
        raise ValueError(f"sample time must be positive, got {T}")
    num, den = rule.padded()
    k = A.shape[0]
    r = B.shape[1]
    p = rule.past_depth
    equations = []
    for j in range(k):
        # implicit coefficients over lags 0..p
        own = num - T * den * A[j, j]
        a0 = own[0]
        if abs(a0) < A0_MIN:
            raise NormalizationError(
                f"variable {labels[j]}: leading coefficient {a0:.3e} is too "
                f"small; sample time {T} collides with the pole structure"
            )
        rhs_state = np.zeros((k, p + 1))
        rhs_state[j, 1:] = -own[1:] / a0
        for kk in range(k):
            if kk == j:
                continue
            rhs_state[kk, :] = T * den * A[j, kk] / a0
        rhs_input = (T * den[None, :] * B[j, :, None]) / a0
        rhs_state.setflags(write=False)
        rhs_input.setflags(write=False)
        equations.append(
            DifferenceEquation(labels[j], j, labels, rhs_state, rhs_input, a0)
        )
    return equations


def discretize_channel(
    channel: Channel, rule: DerivativeRule, T: float
) -> list[DifferenceEquation]:
    """Explicit recurrences for one channel's virtual variables."""
    return _state_equations(channel.model.A, channel.model.B, channel.labels, rule, T)


def _explicit_matrices(
    equations: list[DifferenceEquation], what: str
) -> tuple[np.ndarray, np.ndarray]:
    """Solve out cross-references to current samples.

    Returns phis (p, k, k) and gammas (p+1, k, r) of the one-step form
    x[i] = sum phis[d-1] x[i-d] + sum gammas[d] u[i-d].
    """
    k = len(equations)
    p = equations[0].rhs_state.shape[1] - 1
    W = np.stack([eq.rhs_state for eq in equations])  # (k, k, p+1)
    V = np.stack([eq.rhs_input for eq in equations])  # (k, r, p+1)
    current = np.eye(k) - W[:, :, 0]
    try:
        if p == 0:
            phis = np.zeros((0, k, k))
        else:
            phis = np.stack([np.linalg.solve(current, W[:, :, d]) for d in range(1, p + 1)])
        gammas = np.stack([np.linalg.solve(current, V[:, :, d]) for d in range(p + 1)])
    except np.linalg.LinAlgError as exc:
        raise SingularStepError(f"{what}: implicit update matrix is singular: {exc}") from exc
    return np.ascontiguousarray(phis), np.ascontiguousarray(gammas)


@dataclass(frozen=True)
class DiscreteChannel:
    channel: Channel
    equations: tuple[DifferenceEquation, ...]
    phis: np.ndarray  # (p, k, k)
    gammas: np.ndarray  # (p+1, k, r)
    output_map: np.ndarray  # (m, k)

    @property
    def labels(self) -> tuple[str, ...]:
        return self.channel.labels


@dataclass(frozen=True)
class DiscreteParallelModel:
    """All channels discretized with one rule and sample time."""

    channels: tuple[DiscreteChannel, ...]
    feedthrough: np.ndarray
    rule: DerivativeRule
    T: float

    @property
    def m(self) -> int:
        return self.feedthrough.shape[0]

    @property
    def r(self) -> int:
        return self.feedthrough.shape[1]

    @property
    def state_labels(self) -> tuple[str, ...]:
        return tuple(lbl for ch in self.channels for lbl in ch.labels)


def discretize_parallel_model(
    pm: ParallelModel, rule: DerivativeRule, T: float
) -> DiscreteParallelModel:
    """Discretize every channel; channels stay mutually independent."""
    discrete = []
    for ch in pm.channels:
        eqs = discretize_channel(ch, rule, T)
        phis, gammas = _explicit_matrices(eqs, f"channel {ch.index + 1}")
        discrete.append(DiscreteChannel(ch, tuple(eqs), phis, gammas, ch.model.C))
    return DiscreteParallelModel(tuple(discrete), pm.feedthrough, rule, T)


@dataclass(frozen=True)
class DiscreteStateModel:
    """The serial reference model discretized with the same machinery."""

    model: StateSpaceModel
    equations: tuple[DifferenceEquation, ...]
    phis: np.ndarray
    gammas: np.ndarray
    rule: DerivativeRule
    T: float


def discretize_state_model(
    model: StateSpaceModel, rule: DerivativeRule, T: float
) -> DiscreteStateModel:
    labels = tuple(f"x{j + 1}" for j in range(model.n))
    eqs = _state_equations(model.A, model.B, labels, rule, T)
    phis, gammas = _explicit_matrices(eqs, "serial model")
    return DiscreteStateModel(model, tuple(eqs), phis, gammas, rule, T)


@dataclass(frozen=True)
class MeshSystem:
    """Stacked recurrences as Ad Yd + Md Ud = 0.

    Yd interleaves every virtual variable with its lags
    (y1[i], y1[i-1], ..., y2[i], ...) and Ud does the same for the inputs.
    Rows carry -1 on the equation's own current variable.  The identity
    holds at every step i >= 1 of a trajectory stepped from rest.
    """

    Ad: np.ndarray
    Md: np.ndarray
    var_labels: tuple[str, ...]
    y_labels: tuple[str, ...]
    u_labels: tuple[str, ...]
    lags: int  # past depth p

    def residual(self, states: np.ndarray, inputs: np.ndarray) -> np.ndarray:
        """Row residuals at steps 1..N for stacked variable series.

        ``states`` is (N+1, total variables) ordered like ``var_labels``;
        ``inputs`` is (N+1, r).  Samples before step 0 are taken as zero.
        """
        p = self.lags
        n_steps = states.shape[0] - 1
        spad = np.vstack([np.zeros((p, states.shape[1])), states])
        upad = np.vstack([np.zeros((p, inputs.shape[1])), inputs])
        steps = np.arange(1, n_steps + 1)
        Y = np.empty((n_steps, states.shape[1] * (p + 1)))
        for v in range(states.shape[1]):
            for d in range(p + 1):
                Y[:, v * (p + 1) + d] = spad[p + steps - d, v]
        U = np.empty((n_steps, inputs.shape[1] * (p + 1)))
        for l in range(inputs.shape[1]):
            for d in range(p + 1):
                U[:, l * (p + 1) + d] = upad[p + steps - d, l]
        return Y @ self.Ad.T + U @ self.Md.T


def build_mesh(
    equation_groups, input_dim: int, input_names: tuple[str, ...] | None = None
) -> MeshSystem:
    """Stack all channels' difference equations into mesh matrices.

    ``equation_groups`` is an iterable of per-channel equation lists (a bare
    list of equations is treated as one group).
    """
    groups = list(equation_groups)
    if groups and isinstance(groups[0], DifferenceEquation):
        groups = [groups]
    if not groups or not any(groups):
        raise ValueError("no difference equations to stack")

    p = groups[0][0].rhs_state.shape[1] - 1
    var_labels: list[str] = []
    offsets: list[int] = []
    for group in groups:
        offsets.append(len(var_labels))
        var_labels.extend(eq.var for eq in group)

    total = len(var_labels)
    Ad = np.zeros((total, total * (p + 1)))
    Md = np.zeros((total, input_dim * (p + 1)))
    row = 0
    for group, offset in zip(groups, offsets):
        k = len(group)
        for eq in group:
            if eq.rhs_state.shape[1] - 1 != p:
                raise ValueError("all equations must share one derivative rule depth")
            Ad[row, (offset + eq.var_index) * (p + 1)] = -1.0
            for kk in range(k):
                for d in range(p + 1):
                    if kk == eq.var_index and d == 0:
                        continue
                    Ad[row, (offset + kk) * (p + 1) + d] += eq.rhs_state[kk, d]
            for l in range(input_dim):
                for d in range(p + 1):
                    Md[row, l * (p + 1) + d] = eq.rhs_input[l, d]
            row += 1

    if input_names is None:
        input_names = tuple(
            "U" if input_dim == 1 else f"U{l + 1}" for l in range(input_dim)
        )
    lag_tag = lambda d: "[i]" if d == 0 else f"[i-{d}]"
    y_labels = tuple(
        f"{v}{lag_tag(d)}" for v in var_labels for d in range(p + 1)
    )
    u_labels = tuple(
        f"{name}{lag_tag(d)}" for name in input_names for d in range(p + 1)
    )
    Ad.setflags(write=False)
    Md.setflags(write=False)
    return MeshSystem(Ad, Md, tuple(var_labels), y_labels, u_labels, p)
