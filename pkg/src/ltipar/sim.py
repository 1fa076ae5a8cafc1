"""Step the serial model and the parallel channel set; compare and time.

Both engines step the explicit recurrence

    x[i] = sum_d phis[d-1] x[i-d] + sum_d gammas[d] u[i-d],   i = 1..N

with sample 0 holding the initial state (zero by default) and all samples
before it taken as zero.  The default kernel keeps only the output series
(state lags live in a small ring); a second kernel materializes the full
state series when per-variable traces are requested, with bitwise-identical
outputs.  Kernels are jit-compiled with the GIL released, so a thread pool
of workers advances disjoint channel subsets truly in parallel; every
channel's arithmetic is identical regardless of the worker count, and the
final outputs are summed in channel-index order, which makes parallel
traces bitwise independent of the partitioning.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channels import ParallelModel
from .discretize import (
    DerivativeRule,
    DiscreteParallelModel,
    discretize_parallel_model,
    discretize_state_model,
)
from .errors import EmptyModelError, NonFiniteResultError, ShapeMismatchError
from .model import StateSpaceModel

#: Environment variable capping the worker count (useful under CI quotas).
WORKER_CAP_ENV = "LTIPAR_MAX_WORKERS"

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        return wrap


@njit(cache=True, nogil=True)
def _step_kernel(phis, gammas, u_pad, x_pad):
    # x_pad and u_pad carry p zero rows in front; row p is sample 0.
    p = phis.shape[0]
    k = phis.shape[1]
    r = gammas.shape[2]
    total = x_pad.shape[0]
    for i in range(p + 1, total):
        for a in range(k):
            acc = 0.0
            for d in range(p):
                row = phis[d, a]
                xprev = x_pad[i - 1 - d]
                for b in range(k):
                    acc += row[b] * xprev[b]
            for d in range(p + 1):
                grow = gammas[d, a]
                urow = u_pad[i - d]
                for c in range(r):
                    acc += grow[c] * urow[c]
            x_pad[i, a] = acc


@njit(cache=True, nogil=True)
def _fold_kernel(states, cmat, y_out):
    # y = C x, summed over states in ascending index order (bitwise-stable)
    for i in range(states.shape[0]):
        for a in range(cmat.shape[0]):
            acc = 0.0
            for b in range(cmat.shape[1]):
                acc += cmat[a, b] * states[i, b]
            y_out[i, a] = acc


@njit(cache=True, nogil=True)
def _step_output_kernel(phis, gammas, cmat, u_pad, hist, work, y_out):
    # Same recurrence as _step_kernel but only the output series is kept;
    # hist[d] holds x[i-1-d] and is shifted in place (lag depth is tiny).
    # The output fold uses the same summation order as _fold_kernel, so both
    # code paths produce bitwise-identical outputs.
    p = phis.shape[0]
    k = phis.shape[1]
    r = gammas.shape[2]
    m = cmat.shape[0]
    n_out = y_out.shape[0]
    for a in range(m):
        acc = 0.0
        for b in range(k):
            acc += cmat[a, b] * hist[0, b]
        y_out[0, a] = acc
    for i in range(1, n_out):
        for a in range(k):
            acc = 0.0
            for d in range(p):
                row = phis[d, a]
                xprev = hist[d]
                for b in range(k):
                    acc += row[b] * xprev[b]
            for d in range(p + 1):
                grow = gammas[d, a]
                urow = u_pad[p + i - d]
                for c in range(r):
                    acc += grow[c] * urow[c]
            work[a] = acc
        for d in range(p - 1, 0, -1):
            for b in range(k):
                hist[d, b] = hist[d - 1, b]
        for b in range(k):
            hist[0, b] = work[b]
        for a in range(m):
            acc = 0.0
            for b in range(k):
                acc += cmat[a, b] * work[b]
            y_out[i, a] = acc


def _padded_input(u: np.ndarray, p: int) -> np.ndarray:
    u_pad = np.zeros((u.shape[0] + p, u.shape[1]))
    u_pad[p:] = u
    return u_pad


def run_recurrence(
    phis: np.ndarray,
    gammas: np.ndarray,
    u: np.ndarray,
    x0: np.ndarray | None = None,
) -> np.ndarray:
    """Step the explicit recurrence over u of shape (N+1, r).

    Returns the state series of shape (N+1, k), sample 0 being the initial
    state (zeros unless ``x0`` is given).
    """
    p, k = phis.shape[0], phis.shape[1]
    u_pad = _padded_input(u, p)
    x_pad = np.zeros((u.shape[0] + p, k))
    if x0 is not None:
        x_pad[p] = np.asarray(x0, dtype=float)
    _step_kernel(
        np.ascontiguousarray(phis),
        np.ascontiguousarray(gammas),
        np.ascontiguousarray(u_pad),
        x_pad,
    )
    return x_pad[p:]


def fold_outputs(states: np.ndarray, output_map: np.ndarray) -> np.ndarray:
    """y = C x per sample, with the engine's fixed summation order."""
    y_out = np.empty((states.shape[0], output_map.shape[0]))
    _fold_kernel(np.ascontiguousarray(states), np.ascontiguousarray(output_map), y_out)
    return y_out


def run_recurrence_outputs(
    phis: np.ndarray,
    gammas: np.ndarray,
    output_map: np.ndarray,
    u_pad: np.ndarray,
    x0: np.ndarray | None = None,
) -> np.ndarray:
    """Step the recurrence keeping only the output series (N+1, m).

    ``u_pad`` must already carry p leading zero rows.  Bitwise identical to
    ``fold_outputs(run_recurrence(...))`` while touching far less memory.
    """
    p, k = phis.shape[0], phis.shape[1]
    hist = np.zeros((max(p, 1), k))
    if x0 is not None:
        hist[0] = np.asarray(x0, dtype=float)
    work = np.empty(k)
    y_out = np.empty((u_pad.shape[0] - p, output_map.shape[0]))
    _step_output_kernel(
        np.ascontiguousarray(phis),
        np.ascontiguousarray(gammas),
        np.ascontiguousarray(output_map),
        np.ascontiguousarray(u_pad),
        hist,
        work,
        y_out,
    )
    return y_out


@dataclass(frozen=True)
class InputSignal:
    """Excitation defined on the sample grid t_i = i*T.

    Kinds: ``step`` (amplitude from ``start`` on), ``ramp`` (slope
    ``amplitude`` per second from ``start``), ``sine``
    (amplitude * sin(2*pi*frequency*(t-start) + phase), gated at ``start``)
    and ``table`` (explicit samples, at least N+1 of them for an N-step run).
    """

    kind: str = "step"
    amplitude: float = 1.0
    frequency: float = 1.0
    phase: float = 0.0
    start: float = 0.0
    samples: np.ndarray | None = None

    def sample(self, T: float, N: int, r: int) -> np.ndarray:
        """Input table of shape (N+1, r)."""
        if self.kind == "table":
            if self.samples is None:
                raise ValueError("table input requires explicit samples")
            table = np.asarray(self.samples, dtype=float)
            if table.ndim == 1:
                table = table[:, None]
            if table.shape[0] < N + 1:
                raise ValueError(
                    f"table supplies {table.shape[0]} samples; an {N}-step run "
                    f"consumes {N + 1} (including t=0)"
                )
            if table.shape[1] == 1 and r > 1:
                table = np.repeat(table, r, axis=1)
            if table.shape[1] != r:
                raise ValueError(
                    f"table has {table.shape[1]} input columns, model expects {r}"
                )
            return np.ascontiguousarray(table[: N + 1])

        t = np.arange(N + 1) * T
        gate = t >= self.start
        if self.kind == "step":
            u = self.amplitude * gate.astype(float)
        elif self.kind == "ramp":
            u = self.amplitude * np.maximum(t - self.start, 0.0)
        elif self.kind == "sine":
            u = self.amplitude * np.sin(
                2.0 * np.pi * self.frequency * (t - self.start) + self.phase
            )
            u = np.where(gate, u, 0.0)
        else:
            raise ValueError(f"unknown input kind {self.kind!r}")
        return np.ascontiguousarray(np.repeat(u[:, None], r, axis=1))


@dataclass(frozen=True)
class Trace:
    """Sampled simulation result including the t=0 sample."""

    T: float
    N: int
    outputs: np.ndarray  # (N+1, m)
    state_labels: tuple[str, ...] = ()
    per_channel: np.ndarray | None = None  # (channels, N+1, m)
    states: np.ndarray | None = None  # (N+1, total states)

    def __post_init__(self):
        if self.outputs.shape[0] != self.N + 1:
            raise ShapeMismatchError(
                f"trace holds {self.outputs.shape[0]} samples for N={self.N}"
            )
        if not np.all(np.isfinite(self.outputs)):
            raise NonFiniteResultError("trace contains non-finite samples")


@dataclass(frozen=True)
class TraceComparison:
    max_abs: float
    rms: float
    argmax_step: int


def compare(a: Trace, b: Trace) -> TraceComparison:
    """Elementwise comparison statistics of two traces."""
    if a.T != b.T or a.N != b.N or a.outputs.shape != b.outputs.shape:
        raise ShapeMismatchError(
            f"traces disagree in layout: T {a.T} vs {b.T}, N {a.N} vs {b.N}, "
            f"outputs {a.outputs.shape} vs {b.outputs.shape}"
        )
    diff = np.abs(a.outputs - b.outputs)
    flat_step = int(np.argmax(np.max(diff, axis=1)))
    return TraceComparison(
        max_abs=float(np.max(diff)),
        rms=float(np.sqrt(np.mean(diff**2))),
        argmax_step=flat_step,
    )


def simulate_serial(
    model: StateSpaceModel,
    rule: DerivativeRule,
    T: float,
    N: int,
    u: InputSignal,
    x0: np.ndarray | None = None,
    keep_states: bool = False,
) -> Trace:
    """Step the reference model with the same rule the channels use.

    For the trapezoid rule this is the implicit update
    (E - (T/2)A) x[i] = (E + (T/2)A) x[i-1] + (T/2) B (u[i] + u[i-1]),
    factored once and stepped N times from the initial state.
    """
    if N < 1:
        raise ValueError(f"step count must be >= 1, got {N}")
    dsm = discretize_state_model(model, rule, T)
    u_arr = u.sample(T, N, model.r)
    states = run_recurrence(dsm.phis, dsm.gammas, u_arr, x0)
    outputs = states @ model.C.T + u_arr @ model.D.T
    return Trace(
        T=T,
        N=N,
        outputs=outputs,
        state_labels=tuple(eq.var for eq in dsm.equations),
        states=states if keep_states else None,
    )


def _worker_cap() -> int | None:
    raw = os.environ.get(WORKER_CAP_ENV)
    if not raw:
        return None
    try:
        return max(1, int(raw))
    except ValueError:
        return None


@dataclass
class _ParallelRun:
    trace: Trace
    stepping_seconds: float
    summation_seconds: float
    channel_seconds: list[float] = field(default_factory=list)


def _run_parallel(
    dpm: DiscreteParallelModel,
    N: int,
    u_arr: np.ndarray,
    workers: int,
    per_channel: bool,
    keep_states: bool,
    initial: list[np.ndarray] | None,
) -> _ParallelRun:
    channels = dpm.channels
    if not channels:
        raise EmptyModelError("parallel model has no channels to simulate")
    if initial is not None and len(initial) != len(channels):
        raise ValueError(
            f"{len(initial)} initial states supplied for {len(channels)} channels"
        )
    cap = _worker_cap()
    if cap is not None:
        workers = min(workers, cap)
    workers = max(1, min(workers, len(channels)))

    n_ch = len(channels)
    m = dpm.m
    p = channels[0].phis.shape[0]
    u_pad = _padded_input(u_arr, p)
    channel_outputs: list[np.ndarray | None] = [None] * n_ch
    channel_states: list[np.ndarray | None] = [None] * n_ch
    channel_seconds = [0.0] * n_ch

    def advance(idx: int) -> None:
        ch = channels[idx]
        x0 = initial[idx] if initial is not None else None
        t0 = time.perf_counter()
        if keep_states:
            states = run_recurrence(ch.phis, ch.gammas, u_arr, x0)
            y_c = fold_outputs(states, ch.output_map)
            channel_states[idx] = states
        else:
            y_c = run_recurrence_outputs(ch.phis, ch.gammas, ch.output_map, u_pad, x0)
        channel_seconds[idx] = time.perf_counter() - t0
        channel_outputs[idx] = y_c

    def advance_chunk(indices: list[int]) -> None:
        for idx in indices:
            advance(idx)

    chunks = [list(range(n_ch))[w::workers] for w in range(workers)]
    t_step0 = time.perf_counter()
    if workers == 1:
        advance_chunk(chunks[0])
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for done in [pool.submit(advance_chunk, c) for c in chunks if c]:
                done.result()
    stepping = time.perf_counter() - t_step0

    # Deterministic reduction: fixed channel-index order, then feedthrough.
    t_sum0 = time.perf_counter()
    outputs = np.zeros((N + 1, m))
    for idx in range(n_ch):
        outputs += channel_outputs[idx]
    outputs += u_arr @ dpm.feedthrough.T
    summation = time.perf_counter() - t_sum0

    trace = Trace(
        T=dpm.T,
        N=N,
        outputs=outputs,
        state_labels=dpm.state_labels,
        per_channel=np.stack(channel_outputs) if per_channel else None,
        states=np.hstack(channel_states) if keep_states else None,
    )
    return _ParallelRun(trace, stepping, summation, channel_seconds)


def simulate_parallel(
    dpm: DiscreteParallelModel,
    N: int,
    u: InputSignal,
    workers: int = 1,
    per_channel: bool = False,
    keep_states: bool = False,
    initial: list[np.ndarray] | None = None,
) -> Trace:
    """Advance all channels over the full input and sum their outputs.

    Channels are partitioned across ``workers`` threads; each owns private
    state and writes into its own buffer, so the result is bitwise identical
    for any worker count.  Per-channel initial states may be supplied
    (the serial initial state does not map uniquely onto channels, so no
    automatic translation is attempted).
    """
    if workers < 1:
        raise ValueError(f"worker count must be >= 1, got {workers}")
    if N < 1:
        raise ValueError(f"step count must be >= 1, got {N}")
    u_arr = u.sample(dpm.T, N, dpm.r)
    return _run_parallel(dpm, N, u_arr, workers, per_channel, keep_states, initial).trace


@dataclass(frozen=True)
class BenchReport:
    """Wall-clock timing of the stepping loops and the summation pass."""

    steps: int
    channels: int
    serial_seconds: float
    worker_counts: tuple[int, ...]
    parallel_seconds: tuple[float, ...]
    per_channel_seconds: tuple[tuple[float, ...], ...]
    summation_seconds: tuple[float, ...]
    speedup_percent: tuple[float, ...]

    def __str__(self) -> str:
        lines = [
            f"steps: {self.steps}, channels: {self.channels}",
            f"serial model: {self.serial_seconds:.4f} s",
        ]
        for wc, total, per_ch, s_sum, gain in zip(
            self.worker_counts,
            self.parallel_seconds,
            self.per_channel_seconds,
            self.summation_seconds,
            self.speedup_percent,
        ):
            lines.append(f"parallel model ({wc} worker{'s' if wc != 1 else ''}): {total:.4f} s")
            for idx, seconds in enumerate(per_ch):
                lines.append(f"  channel {idx + 1}: {seconds:.4f} s")
            lines.append(f"  summation: {s_sum:.4f} s")
            lines.append(f"  time reduction vs serial: {gain:.1f}%")
        return "\n".join(lines)


def benchmark(
    model: StateSpaceModel,
    pm: ParallelModel,
    rule: DerivativeRule,
    T: float,
    N: int,
    u: InputSignal,
    worker_counts: tuple[int, ...] = (1,),
    warmup_steps: int = 256,
) -> BenchReport:
    """Time the serial loop once and the parallel loops per worker count.

    Construction, decomposition and discretization are excluded; warm-up
    runs (which also trigger jit compilation) are discarded.
    """
    dsm = discretize_state_model(model, rule, T)
    dpm = discretize_parallel_model(pm, rule, T)
    u_arr = u.sample(T, N, model.r)

    warm = min(max(2, warmup_steps), N)
    warm_u = np.ascontiguousarray(u_arr[: warm + 1])
    run_recurrence(dsm.phis, dsm.gammas, warm_u)
    for wc in worker_counts:
        _run_parallel(dpm, warm, warm_u, wc, False, False, None)

    t0 = time.perf_counter()
    states = run_recurrence(dsm.phis, dsm.gammas, u_arr)
    outputs = states @ model.C.T + u_arr @ model.D.T
    serial_seconds = time.perf_counter() - t0
    del states, outputs

    totals, per_ch, sums, gains = [], [], [], []
    for wc in worker_counts:
        run = _run_parallel(dpm, N, u_arr, wc, False, False, None)
        total = run.stepping_seconds + run.summation_seconds
        totals.append(total)
        per_ch.append(tuple(run.channel_seconds))
        sums.append(run.summation_seconds)
        gains.append(100.0 * (1.0 - total / serial_seconds))

    return BenchReport(
        steps=N,
        channels=len(dpm.channels),
        serial_seconds=serial_seconds,
        worker_counts=tuple(worker_counts),
        parallel_seconds=tuple(totals),
        per_channel_seconds=tuple(per_ch),
        summation_seconds=tuple(sums),
        speedup_percent=tuple(gains),
    )
