"""Window-by-window fixed-point solver for causal operator equations.

Grows a solution of u = F(u) by certifying a contraction factor on a
candidate window, running Picard iteration there with everything before
the window frozen, and appending the converged segment. The window
length comes from a geometric candidate ladder driven by the operator's
Lipschitz bound and kernel mass; the norm-radius schedule follows the
constructive existence argument: the radius for step k is
(1 - q)^{-1} * ||F(hold-extension of the accepted part)|| + 1.

Outcomes are classified as Global (horizon reached), MaximallyExtended
(norm threshold crossed, or steps collapsed while the norm kept rising:
the reported end time is a lower estimate of the true blow-up time), or
Stalled (numerical failure that should not be read as blow-up).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

logger = logging.getLogger(__name__)


def state_norm(values: np.ndarray) -> float:
    """Max over space of the max-abs component."""
    return float(np.max(np.abs(values)))


class Trajectory(NamedTuple):
    times: np.ndarray
    values: np.ndarray  # (T+1, N, n)

    def sup_norm(self) -> float:
        return state_norm(self.values)


@dataclass(frozen=True)
class TimeWindow:
    start: float
    length: float

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("window length must be positive")

    @property
    def end(self) -> float:
        return self.start + self.length


@dataclass(frozen=True)
class ContractionEstimate:
    q: float
    radius: float
    delta: float


class StepCollapse(RuntimeError):
    """No candidate window length achieves the contraction target."""

    def __init__(self, delta: float, q: float, radius: float):
        super().__init__(
            f"no window length >= {delta:g} achieves the contraction target "
            f"(best q={q:g} at radius {radius:g})")
        self.delta = delta
        self.q = q
        self.radius = radius


class NonConvergence(RuntimeError):
    """Picard iteration missed the tolerance within the iteration budget."""


@dataclass
class SolutionSegment:
    """Converged piece of trajectory on one window, endpoints included."""

    times: np.ndarray
    values: np.ndarray
    sup_norm: float = 0.0

    def __post_init__(self):
        self.sup_norm = state_norm(self.values)

    @property
    def window(self) -> TimeWindow:
        return TimeWindow(float(self.times[0]), float(self.times[-1] - self.times[0]))


@dataclass
class WindowDiagnostics:
    window: TimeWindow
    delta: float
    q_certified: float
    radius: float
    iterations: int
    max_ratio: float
    retries: int
    fast_path: bool


class OutcomeKind(Enum):
    GLOBAL = "global"
    MAXIMALLY_EXTENDED = "maximally-extended"
    STALLED = "stalled"


@dataclass
class SolutionOutcome:
    kind: OutcomeKind
    t_end: float
    segments: list[SolutionSegment]
    diagnostics: list[WindowDiagnostics]
    zeta_hat: float | None = None
    final_norm: float | None = None
    reason: str | None = None

    def trajectory(self) -> Trajectory:
        """Concatenated accepted trajectory (shared endpoints deduplicated)."""
        ts = [self.segments[0].times]
        vs = [self.segments[0].values]
        for seg in self.segments[1:]:
            ts.append(seg.times[1:])
            vs.append(seg.values[1:])
        return Trajectory(np.concatenate(ts), np.concatenate(vs))

    def sup_norm(self) -> float:
        return max(seg.sup_norm for seg in self.segments)


@dataclass
class SolverConfig:
    """Numerical policy of the extension loop. Defaults are the shipped ones."""

    q_target: float = 0.5
    tol: float = 1e-8
    max_iter: int = 200
    delta_max: float = 1.0
    delta_min: float | None = None  # default: delta_max * 2**-20
    blowup_norm_threshold: float = 1e4
    time_step: float = 1e-2
    use_short_memory_path: bool = True
    lookahead_factor: int = 4

    def __post_init__(self):
        if not (0.0 < self.q_target < 1.0):
            raise ValueError("q_target must lie in (0, 1)")
        if self.tol <= 0 or self.time_step <= 0 or self.delta_max <= 0:
            raise ValueError("tol, time_step and delta_max must be positive")
        if self.delta_min is None:
            self.delta_min = self.delta_max * 2.0 ** -20
        if self.max_iter < 2:
            raise ValueError("max_iter must allow at least two iterations")


# ---------------------------------------------------------------------------
# restriction / extension
# ---------------------------------------------------------------------------

def restrict_window(traj: Trajectory, w: TimeWindow, tol: float = 1e-9) -> SolutionSegment:
    """Samples of the trajectory with timestamps inside the window (views)."""
    times = traj.times
    if w.start < times[0] - tol or w.end > times[-1] + tol:
        raise ValueError("window outside trajectory span")
    mask_lo = np.searchsorted(times, w.start - tol, side="left")
    mask_hi = np.searchsorted(times, w.end + tol, side="right")
    return SolutionSegment(times[mask_lo:mask_hi], traj.values[mask_lo:mask_hi])


def extend_window(segment: SolutionSegment, horizon: float) -> Trajectory:
    """Constant-hold extension of a segment out to the horizon.

    Any extension would do for the theory; holding the last state is the
    cheapest one that cannot raise the sup norm.
    """
    if horizon <= segment.times[-1]:
        raise ValueError("horizon must exceed the segment end")
    dt = float(segment.times[1] - segment.times[0]) if segment.times.size > 1 else 1.0
    extra = int(math.ceil((horizon - segment.times[-1]) / dt - 1e-12))
    new_times = np.concatenate([segment.times,
                                segment.times[-1] + dt * np.arange(1, extra + 1)])
    pad = np.repeat(segment.values[-1][None], extra, axis=0)
    return Trajectory(new_times, np.concatenate([segment.values, pad]))


# ---------------------------------------------------------------------------
# contraction-certified step selection
# ---------------------------------------------------------------------------

def estimate_step(op, window_start: float, r: float, q_target: float, *,
                  delta_max: float = 1.0, delta_min: float | None = None,
                  cap: float | None = None) -> ContractionEstimate:
    """Largest ladder step with lipschitz_bound(r) * kernel_mass <= q_target.

    Candidates walk the geometric ladder delta_max, delta_max/2, ... down
    to delta_min; the first satisfying the bound wins, so the returned
    step is within a factor two of the best admissible one.
    """
    if not (0.0 < q_target < 1.0):
        raise ValueError("q_target must lie in (0, 1)")
    if r <= 0:
        raise ValueError("radius must be positive")
    if delta_min is None:
        delta_min = delta_max * 2.0 ** -20
    lip = op.lipschitz_bound(r)
    delta = delta_max
    last_q = math.inf
    while delta >= delta_min * (1.0 - 1e-12):
        candidate = delta if cap is None else min(delta, cap)
        q = lip * op.kernel_mass(window_start, window_start + candidate)
        if q <= q_target:
            return ContractionEstimate(q=float(q), radius=float(r), delta=float(candidate))
        last_q = q
        delta *= 0.5
    raise StepCollapse(delta_min, float(last_q), float(r))


# ---------------------------------------------------------------------------
# Picard iteration on one window
# ---------------------------------------------------------------------------

def _picard_loop(op, u: np.ndarray, k0: int, k1: int, q: float, tol: float,
                 max_iter: int, use_cache: bool):
    """Iterate the windowed operator to its fixed point in place.

    u[:k0+1] is the frozen prior; u[k0+1:k1+1] starts as the constant-hold
    initial iterate and ends as the fixed point. Returns
    (iterations, max_ratio, converged).
    """
    threshold = tol * (1.0 - q)
    prev_diff = None
    max_ratio = 0.0
    for it in range(1, max_iter + 1):
        new = op.apply(u, k0, k1, use_cache=use_cache)
        diff = float(np.max(np.abs(new - u[k0 + 1:k1 + 1])))
        u[k0 + 1:k1 + 1] = new
        if not math.isfinite(diff):
            return it, math.inf, False
        if diff <= threshold:
            return it, max_ratio, True
        if prev_diff is not None and prev_diff > threshold:
            max_ratio = max(max_ratio, diff / prev_diff)
        prev_diff = diff
    return max_iter, max_ratio, False


def picard_solve_window(op, prior: Trajectory | None, w: TimeWindow,
                        tol: float = 1e-8, max_iter: int = 200,
                        q: float = 0.0):
    """Solve u = F(u) on one window with the prior frozen underneath.

    The initial iterate is the constant-hold extension of the prior (or
    of the operator's origin state when there is no prior). Returns
    (segment, diagnostics); raises NonConvergence when the certified
    contraction was optimistic, in which case callers halve the window.
    """
    times = op.times
    k0 = op.time_grid.index_at(w.start)
    k1 = op.time_grid.index_at(w.end)
    if k1 <= k0:
        raise ValueError("window shorter than one grid step")
    u = np.empty((k1 + 1,) + op.state_shape)
    if prior is None:
        if k0 != 0:
            raise ValueError("window must start at the origin when no prior is given")
        u[0] = op.initial_state()
    else:
        if prior.times.size < k0 + 1:
            raise ValueError("prior does not reach the window start")
        u[:k0 + 1] = prior.values[:k0 + 1]
    u[k0 + 1:] = u[k0]
    iters, ratio, converged = _picard_loop(op, u, k0, k1, q, tol, max_iter,
                                           use_cache=False)
    if not converged:
        raise NonConvergence(f"no fixed point within {max_iter} iterations on {w}")
    seg = SolutionSegment(times[k0:k1 + 1].copy(), u[k0:k1 + 1].copy())
    diag = WindowDiagnostics(window=w, delta=w.length, q_certified=q,
                             radius=math.nan, iterations=iters,
                             max_ratio=ratio, retries=0, fast_path=False)
    return seg, diag


# ---------------------------------------------------------------------------
# the extension loop
# ---------------------------------------------------------------------------

def _norms_strictly_increasing(segments, count: int = 3) -> bool:
    if len(segments) < count:
        return False
    tail = [s.sup_norm for s in segments[-count:]]
    return all(b > a for a, b in zip(tail, tail[1:]))


def extend_solution(op, a: float, horizon: float, cfg: SolverConfig) -> SolutionOutcome:
    """Grow the solution window by window until the horizon or breakdown."""
    if horizon <= a:
        raise ValueError("horizon must exceed the start time")
    tg = op.time_grid
    if abs(tg.start - a) > 1e-12:
        raise ValueError("operator grid must start at the requested origin")
    dt = tg.step
    nt = tg.n_nodes
    times = op.times

    u = np.empty((nt,) + op.state_shape)
    u[0] = op.initial_state()
    u[1:] = u[0]
    op.reset_frozen()
    op.advance_frozen(u, 0)

    segments: list[SolutionSegment] = []
    diags: list[WindowDiagnostics] = []
    k = 0
    running_sup = state_norm(u[0])
    inv = 1.0 / (1.0 - cfg.q_target)
    max_steps = max(1, int(math.floor(cfg.delta_max / dt + 1e-9)))
    prev_m = max_steps

    def collapse_outcome(best_delta, best_q):
        if _norms_strictly_increasing(segments):
            logger.info("step collapse with rising norm at t=%.6g: blow-up estimate", times[k])
            return SolutionOutcome(
                kind=OutcomeKind.MAXIMALLY_EXTENDED, t_end=float(times[k]),
                segments=segments, diagnostics=diags, zeta_hat=float(times[k]),
                final_norm=running_sup,
                reason=f"window ladder collapsed (q={best_q:.3g} at delta={best_delta:.3g})")
        return SolutionOutcome(
            kind=OutcomeKind.STALLED, t_end=float(times[k]),
            segments=segments, diagnostics=diags,
            final_norm=running_sup,
            reason="window ladder collapsed without norm growth")

    while k < nt - 1:
        remaining = nt - 1 - k
        fast = False
        if cfg.use_short_memory_path and op.tau_volterra_offset > 0:
            tau_steps = int(math.floor(op.tau_volterra_offset / dt + 1e-12))
            if tau_steps >= 1:
                m = min(tau_steps, remaining)
                est = ContractionEstimate(q=0.0, radius=math.inf, delta=m * dt)
                fast = True
        if not fast:
            look = min(remaining, max(4, cfg.lookahead_factor * prev_m, 1), max_steps)
            ahead = op.apply(u, k, k + look, use_cache=True)
            r = inv * max(running_sup, float(np.max(np.abs(ahead)))) + 1.0
            try:
                est = estimate_step(op, float(times[k]), r, cfg.q_target,
                                    delta_max=cfg.delta_max, delta_min=cfg.delta_min,
                                    cap=look * dt)
            except StepCollapse as sc:
                # the ladder may bottom out below the grid while one grid
                # step is still admissible; test it directly
                q1 = op.lipschitz_bound(r) * op.kernel_mass(float(times[k]),
                                                            float(times[k]) + dt)
                if q1 <= cfg.q_target:
                    est = ContractionEstimate(q=float(q1), radius=float(r), delta=dt)
                else:
                    return collapse_outcome(dt, q1 if math.isfinite(q1) else sc.q)
            m = max(1, int(math.floor(est.delta / dt + 1e-9)))
            m = min(m, remaining, look)

        retries = 0
        while True:
            snapshot = u[k + 1:k + m + 1].copy()
            iters, ratio, converged = _picard_loop(
                op, u, k, k + m, est.q, cfg.tol, cfg.max_iter, use_cache=True)
            if converged:
                break
            u[k + 1:k + m + 1] = snapshot
            if m == 1:
                logger.warning("picard failed to converge at the minimal window, t=%.6g",
                               times[k])
                return SolutionOutcome(
                    kind=OutcomeKind.STALLED, t_end=float(times[k]),
                    segments=segments, diagnostics=diags, final_norm=running_sup,
                    reason="picard iteration failed to converge at the minimal window")
            m //= 2
            retries += 1
            logger.info("halving window at t=%.6g after non-convergence (retry %d)",
                        times[k], retries)

        u[k + m + 1:] = u[k + m]
        op.advance_frozen(u, k + m)
        seg = SolutionSegment(times[k:k + m + 1].copy(), u[k:k + m + 1].copy())
        segments.append(seg)
        diags.append(WindowDiagnostics(
            window=seg.window, delta=m * dt, q_certified=est.q, radius=est.radius,
            iterations=iters, max_ratio=ratio, retries=retries, fast_path=fast))
        running_sup = max(running_sup, seg.sup_norm)
        k += m
        prev_m = m

        if running_sup >= cfg.blowup_norm_threshold:
            return SolutionOutcome(
                kind=OutcomeKind.MAXIMALLY_EXTENDED, t_end=float(times[k]),
                segments=segments, diagnostics=diags, zeta_hat=float(times[k]),
                final_norm=running_sup,
                reason=f"sup norm crossed the blow-up threshold {cfg.blowup_norm_threshold:g}")

    return SolutionOutcome(kind=OutcomeKind.GLOBAL, t_end=float(times[-1]),
                           segments=segments, diagnostics=diags,
                           final_norm=running_sup)


# ---------------------------------------------------------------------------
# causality property check
# ---------------------------------------------------------------------------

@dataclass
class CausalityReport:
    trials: int
    prefix_nodes: int
    max_violation: float
    flagged_trials: int
    tau_extension_nodes: int = 0
    tau_max_violation: float = 0.0
    tolerance: float = 1e-10

    @property
    def causal(self) -> bool:
        return self.flagged_trials == 0


def check_volterra_property(op, trials: int = 100, xi: float | None = None,
                            seed: int = 0, tolerance: float = 1e-10) -> CausalityReport:
    """Probe causality: inputs equal on a prefix must give equal outputs there.

    Draws random trajectory pairs that agree on [a, a+xi] and differ
    afterwards, and compares operator outputs on the prefix (and on the
    prefix extended by the short-memory offset when the operator declares
    one). Violations are report content, not errors.
    """
    rng = np.random.default_rng(seed)
    tg = op.time_grid
    nt = tg.n_nodes
    if xi is None:
        xi = 0.5 * (tg.end - tg.start)
    kxi = max(1, min(nt - 2, int(round(xi / tg.step))))

    tau_nodes = 0
    if op.tau_volterra_offset > 0:
        tau_nodes = int(math.floor(op.tau_volterra_offset / tg.step + 1e-12))
    k_ext = min(nt - 1, kxi + tau_nodes)

    max_violation = 0.0
    tau_violation = 0.0
    flagged = 0
    for _ in range(trials):
        u1 = rng.standard_normal((nt,) + op.state_shape)
        u2 = u1.copy()
        u2[kxi + 1:] += 0.5 + np.abs(rng.standard_normal((nt - kxi - 1,) + op.state_shape))
        f1 = op.apply(u1, 0, k_ext)
        f2 = op.apply(u2, 0, k_ext)
        d_prefix = float(np.max(np.abs(f1[:kxi] - f2[:kxi])))
        max_violation = max(max_violation, d_prefix)
        if d_prefix > tolerance:
            flagged += 1
        if tau_nodes > 0:
            d_ext = float(np.max(np.abs(f1[:k_ext] - f2[:k_ext])))
            tau_violation = max(tau_violation, d_ext)

    return CausalityReport(trials=trials, prefix_nodes=kxi,
                           max_violation=max_violation, flagged_trials=flagged,
                           tau_extension_nodes=tau_nodes,
                           tau_max_violation=tau_violation, tolerance=tolerance)
