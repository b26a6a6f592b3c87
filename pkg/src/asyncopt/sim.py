"""Deterministic single-threaded simulator of asynchronous staleness.

Reconstructs the analysis objects of lock-free execution: the exact "fake"
iterate sequence x_{j+1} = x_j - gamma * g(xhat_j, s_j), and the stale
read iterates xhat_j built from an explicit per-coordinate visibility
schedule.  Because the schedule is data, every identity and bound of the
stale-read analysis becomes directly measurable:

  - the per-step expansion of ||x_{j+1} - x*||^2 (exact algebra),
  - the distance recursion through the error terms R0, R1, R2,
  - window diagnostics G_r / Delta_r for the coordinate-descent and
    sparse-SVRG analyses.

A schedule only marks *earlier* in-window writes as missing.  Making later
writes visible in earlier reads is acausal for a single-pass simulation
(each read would depend on updates that in turn depend on that read), so
staleness is the only deviation modeled; the window bounds cover it the
same way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .objectives import DecomposableObjective
from .serial import (
    SolverConfig,
    draw_coord,
    draw_term,
    resolve_config,
    scd_direction,
    sgm_direction,
    svrg_sparse_direction,
    worker_rng,
)
from .vectors import sq_distance

__all__ = [
    "DelaySchedule",
    "SimTrace",
    "gen_schedule",
    "simulate",
    "check_step_identity",
    "check_recursion",
    "check_hogwild_bounds",
    "check_ascd_windows",
    "check_svrg_variance_window",
    "window_indices",
    "trace_csv",
]

STYLES = ("none", "random", "adversarial_stale")


@dataclass(frozen=True)
class DelaySchedule:
    """Per-coordinate visibility deviations within a staleness window.

    ``missing[j, l-1, v]`` is True when the write of sample ``j - l``
    (lag l in 1..tau) to coordinate v is not yet visible in the read
    xhat_j.  Writes older than the window are always visible; writes at
    j or later are never visible.
    """

    T: int
    tau: int
    d: int
    missing: np.ndarray  # bool, shape (T, tau, d)

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError("tau must be >= 0")
        expect = (self.T, self.tau, self.d)
        if self.missing.shape != expect:
            raise ValueError(f"missing mask must have shape {expect}")

    def save(self, path):
        np.savez_compressed(
            path, T=self.T, tau=self.tau, d=self.d, missing=self.missing
        )

    @classmethod
    def load(cls, path):
        z = np.load(path)
        return cls(
            T=int(z["T"]), tau=int(z["tau"]), d=int(z["d"]),
            missing=z["missing"].astype(bool),
        )


def gen_schedule(T, tau, d, seed=0, style="random") -> DelaySchedule:
    """Generate a visibility schedule.

    none: no deviations (serial).  random: each in-window coordinate write
    is missing independently with probability 1/2.  adversarial_stale: every
    in-window earlier write is missing (maximal staleness).
    """
    if tau < 0:
        raise ValueError("tau must be >= 0")
    if style not in STYLES:
        raise ValueError(f"style must be one of {STYLES}")
    if style == "none" or tau == 0:
        missing = np.zeros((T, tau, d), dtype=bool)
    elif style == "adversarial_stale":
        missing = np.ones((T, tau, d), dtype=bool)
    else:
        rng = np.random.default_rng(seed)
        missing = rng.random((T, tau, d)) < 0.5
    # lags that would reach before sample 0 are not real deviations
    for j in range(min(T, tau)):
        missing[j, j:, :] = False
    return DelaySchedule(T=T, tau=tau, d=d, missing=missing)


@dataclass
class SimTrace:
    """Complete record of one simulated run (one seed)."""

    algo: str
    gamma: float
    tau: int
    seed: int
    X: np.ndarray  # (T+1, d) fake iterates
    Xhat: np.ndarray  # (T, d) read iterates
    U: np.ndarray  # (T, d) dense update directions g_j (x advances by -gamma*U)
    a: np.ndarray  # (T+1,) squared distances to x*
    r0: np.ndarray  # (T,) ||g_j||^2
    r1: np.ndarray  # (T,) ||xhat_j - x_j||^2
    r2: np.ndarray  # (T,) <xhat_j - x_j, g_j>
    q: np.ndarray  # (T,) conditional E_s ||update||^2 at xhat_j
    epoch_start: np.ndarray  # (T,) first sample index of each step's epoch
    snapshot_a: np.ndarray  # (T,) ||y - x*||^2 of the active snapshot (SVRG), else 0
    xstar: np.ndarray

    @property
    def T(self):
        return int(self.U.shape[0])


def _cond_second_moment(obj, algo, xhat, y=None, z=None):
    """E over the sample choice of ||update direction||^2 at a fixed read."""
    if algo == "scd":
        g = obj.full_grad(xhat)
        return float(obj.d * (g @ g))
    total = 0.0
    for i in range(obj.n):
        idx = obj.term_support(i)
        if algo == "sgm":
            v = obj.term_grad_vals(i, xhat[idx])
        else:
            v = svrg_sparse_direction(obj, i, xhat[idx], y[idx], z, idx)
        total += float(v @ v)
    return total / obj.n


def simulate(
    obj: DecomposableObjective,
    cfg: SolverConfig,
    x0,
    schedule: DelaySchedule,
    algo: str,
    xstar=None,
    record_q=True,
) -> SimTrace:
    """Run one seed of {sgm|scd|svrg_sparse} under the given visibility
    schedule.  Projection/clamping is not simulated (the identities being
    checked are for the unconstrained recursions)."""
    if algo not in ("sgm", "scd", "svrg_sparse"):
        raise ValueError(f"unknown algo {algo!r}")
    if xstar is None:
        raise ValueError("simulate needs x* to record distances")
    cfg = resolve_config(cfg, obj, algo)
    if algo == "svrg_sparse":
        T = cfg.epoch_size * cfg.epochs
    else:
        T = cfg.total_iters
    if schedule.T < T or schedule.d != obj.d:
        raise ValueError("schedule does not cover this run (length or dim)")
    tau = schedule.tau
    gamma = cfg.gamma
    rng = worker_rng(cfg.seed, 0)
    d = obj.d
    X = np.zeros((T + 1, d))
    Xhat = np.zeros((T, d))
    U = np.zeros((T, d))
    a = np.zeros(T + 1)
    r0 = np.zeros(T)
    r1 = np.zeros(T)
    r2 = np.zeros(T)
    q = np.zeros(T)
    epoch_start = np.zeros(T, dtype=np.int64)
    snapshot_a = np.zeros(T)
    x = np.array(x0, dtype=np.float64, copy=True)
    X[0] = x
    a[0] = sq_distance(x, xstar)
    y = z = None
    ep0 = 0
    ya = 0.0
    if algo == "svrg_sparse":
        y = x.copy()
        z = obj.full_grad(y)
        ya = sq_distance(y, xstar)
    for j in range(T):
        if algo == "svrg_sparse" and j > 0 and j % cfg.epoch_size == 0:
            k = j // cfg.epoch_size
            ep0 = j
            if k % cfg.snapshot_interval == 0:
                y = x.copy()  # barrier: the fake iterate is the shared state
                z = obj.full_grad(y)
                ya = sq_distance(y, xstar)
        epoch_start[j] = ep0
        snapshot_a[j] = ya
        # read iterate: add back the in-window writes marked missing
        # (staleness does not cross the epoch barrier)
        xhat = x.copy()
        for lag in range(1, min(tau, j) + 1):
            i = j - lag
            if i < ep0:
                break
            mask = schedule.missing[j, lag - 1]
            if mask.any():
                xhat[mask] += gamma * U[i][mask]
        Xhat[j] = xhat
        if algo == "sgm":
            i = draw_term(rng, obj.n)
            idx = obj.term_support(i)
            U[j, idx] = sgm_direction(obj, i, xhat[idx])
        elif algo == "scd":
            v = draw_coord(rng, d)
            U[j, v] = scd_direction(obj, v, xhat)
        else:
            i = draw_term(rng, obj.n)
            idx = obj.term_support(i)
            U[j, idx] = svrg_sparse_direction(obj, i, xhat[idx], y[idx], z, idx)
        if record_q:
            q[j] = _cond_second_moment(obj, algo, xhat, y, z)
        g = U[j]
        nj = xhat - x
        r0[j] = float(g @ g)
        r1[j] = float(nj @ nj)
        r2[j] = float(nj @ g)
        x = x - gamma * g
        X[j + 1] = x
        a[j + 1] = sq_distance(x, xstar)
    return SimTrace(
        algo=algo, gamma=gamma, tau=tau, seed=cfg.seed, X=X, Xhat=Xhat, U=U,
        a=a, r0=r0, r1=r1, r2=r2, q=q, epoch_start=epoch_start,
        snapshot_a=snapshot_a, xstar=np.asarray(xstar, dtype=np.float64),
    )


# ---------------------------------------------------------------------------
# identity / bound checks
# ---------------------------------------------------------------------------

def check_step_identity(trace: SimTrace, tol=1e-9):
    """Exact per-step expansion of the squared distance:

    ||x_{j+1}-x*||^2 = ||x_j-x*||^2 - 2 gamma <xhat_j - x*, g_j>
                       + gamma^2 ||g_j||^2 + 2 gamma <xhat_j - x_j, g_j>
    """
    g = trace.gamma
    errs = np.zeros(trace.T)
    for j in range(trace.T):
        gj = trace.U[j]
        lhs = trace.a[j + 1]
        rhs = (
            trace.a[j]
            - 2.0 * g * float((trace.Xhat[j] - trace.xstar) @ gj)
            + g * g * trace.r0[j]
            + 2.0 * g * trace.r2[j]
        )
        errs[j] = abs(lhs - rhs)
    scale = max(1.0, float(trace.a.max()))
    return {"ok": bool(errs.max() <= tol * scale), "max_error": float(errs.max())}


def _stack(traces, attr):
    return np.stack([getattr(t, attr) for t in traces])


def _require_seeds(traces, k=5):
    if len(traces) < k:
        raise ValueError(f"need at least {k} seeds to estimate expectations")
    seeds = {t.seed for t in traces}
    if len(seeds) != len(traces):
        raise ValueError("traces must come from distinct seeds")


def check_recursion(traces, constants, tol=1e-9):
    """Seed-averaged distance recursion (error terms R0, R1, R2) plus the
    pointwise strong-convexity step with the exact full gradient.

    For each j the statistic Z = a_{j+1} - [(1-gamma*m) a_j + gamma^2 R0
    + 2 gamma m R1 + 2 gamma R2] has nonpositive expectation; we assert
    mean(Z) <= 3 SE(Z) across seeds.
    """
    _require_seeds(traces)
    gamma = traces[0].gamma
    m = constants.m
    A = _stack(traces, "a")
    R0 = _stack(traces, "r0")
    R1 = _stack(traces, "r1")
    R2 = _stack(traces, "r2")
    Z = A[:, 1:] - (
        (1.0 - gamma * m) * A[:, :-1]
        + gamma**2 * R0
        + 2.0 * gamma * m * R1
        + 2.0 * gamma * R2
    )
    n_seeds = Z.shape[0]
    mean = Z.mean(axis=0)
    se = Z.std(axis=0, ddof=1) / math.sqrt(n_seeds)
    scale = max(1.0, float(A.max()))
    slack = 3.0 * se + tol * scale
    margins = slack - mean  # >= 0 when the recursion holds
    return {
        "ok": bool(np.all(mean <= slack)),
        "worst_margin": float(margins.min()),
        "mean": mean,
        "se": se,
    }


def check_strong_convexity_step(traces, obj, constants, tol=1e-9):
    """Pointwise lower bound with the exact gradient at the read:
    <xhat_j - x*, grad f(xhat_j)> >= (m/2)||x_j - x*||^2 - m||xhat_j - x_j||^2.
    Deterministic given the trajectory, so no statistical slack is needed."""
    m = constants.m
    worst = np.inf
    for t in traces:
        for j in range(t.T):
            gf = obj.full_grad(t.Xhat[j])
            lhs = float((t.Xhat[j] - t.xstar) @ gf)
            rhs = 0.5 * m * t.a[j] - m * t.r1[j]
            worst = min(worst, lhs - rhs)
    scale = max(1.0, float(max(t.a.max() for t in traces)))
    return {"ok": bool(worst >= -tol * scale), "worst_margin": float(worst)}


def check_hogwild_bounds(traces, constants, avg_conflict_degree, M=None):
    """Staleness error bounds for SGM traces:

    mean R1 <= gamma^2 M^2 (2 tau + 8 tau^2 dbar/n)  and
    mean R2 <= 4 gamma M^2 tau dbar / n,  each plus 3 standard errors.
    """
    _require_seeds(traces)
    gamma = traces[0].gamma
    tau = traces[0].tau
    n = constants.n
    dbar = avg_conflict_degree
    if M is None:
        M = constants.M
    R1 = _stack(traces, "r1")
    R2 = _stack(traces, "r2")
    k = R1.shape[0]
    r1_bound = gamma**2 * M**2 * (2.0 * tau + 8.0 * tau**2 * dbar / n)
    r2_bound = 4.0 * gamma * M**2 * tau * dbar / n
    m1 = R1.mean(axis=0)
    s1 = R1.std(axis=0, ddof=1) / math.sqrt(k)
    m2 = np.abs(R2).mean(axis=0)
    s2 = np.abs(R2).std(axis=0, ddof=1) / math.sqrt(k)
    ok1 = np.all(m1 <= r1_bound + 3.0 * s1)
    ok2 = np.all(m2 <= r2_bound + 3.0 * s2)
    return {
        "ok": bool(ok1 and ok2),
        "r1_ok": bool(ok1),
        "r2_ok": bool(ok2),
        "r1_bound": r1_bound,
        "r2_bound": r2_bound,
        "r1_worst_margin": float((r1_bound + 3.0 * s1 - m1).min()),
        "r2_worst_margin": float((r2_bound + 3.0 * s2 - m2).min()),
    }


def window_indices(j, r, tau, hi, lo=0):
    """S_r^j: indices within r*tau of j, clipped to [lo, hi).  Cardinality
    is at most 2*r*tau + 1 by construction."""
    return np.arange(max(lo, j - r * tau), min(hi, j + r * tau + 1))


def _window_chain(traces, j_list, r_max, tau, gamma, curvature_bound, extra_a,
                  epoch_size=None):
    """Shared G_r / Delta_r machinery for the SCD and sparse-SVRG chains.

    curvature_bound(j, m_jk_mean) returns the bound on the seed-averaged
    conditional second moment; extra_a(trace, j) adds the snapshot distance
    term for SVRG (0 for SCD).  Returns per-(j, r) margins for both chain
    inequalities.
    """
    T = traces[0].T
    Q = _stack(traces, "q")
    A = _stack(traces, "a")
    U = [t.U for t in traces]
    results = []
    for j in j_list:
        lo = int(traces[0].epoch_start[j])
        hi = min(T, lo + epoch_size) if epoch_size else T
        for r in range(r_max + 1):
            S_r = window_indices(j, r, tau, hi, lo)
            assert S_r.size <= 2 * r * tau + 1
            # G_r: max over the window of the seed-mean conditional moment
            g_hat = float(Q[:, S_r].mean(axis=0).max())
            # Delta_r: max over the window of seed-mean ||x_j - xhat_k||^2
            m_jk = np.zeros((len(traces), S_r.size))
            for s, t in enumerate(traces):
                diff = t.X[j][None, :] - t.Xhat[S_r]
                m_jk[s] = (diff * diff).sum(axis=1)
            delta_hat = float(m_jk.mean(axis=0).max()) if S_r.size else 0.0
            bound_a = curvature_bound(
                float(A[:, j].mean()) + extra_a(traces, j), delta_hat
            )
            margin_g = bound_a - g_hat
            # second chain link: Delta_r vs the realized max gradient norm
            # over the wider window (pointwise Cauchy-Schwarz per seed)
            S_next = window_indices(j, r + 1, tau, hi, lo)
            real_max = np.zeros(len(traces))
            for s in range(len(traces)):
                norms = (U[s][S_next] ** 2).sum(axis=1)
                real_max[s] = norms.max() if norms.size else 0.0
            coef = (3.0 * gamma * tau * (r + 1)) ** 2
            bound_d = coef * float(real_max.mean())
            margin_d = bound_d - delta_hat
            results.append(
                {"j": j, "r": r, "margin_g": margin_g, "margin_d": margin_d,
                 "g_hat": g_hat, "delta_hat": delta_hat}
            )
    return results


def _chain_report(rows, scale, tol):
    worst_g = min(r["margin_g"] for r in rows)
    worst_d = min(r["margin_d"] for r in rows)
    return {
        "ok": bool(worst_g >= -tol * scale and worst_d >= -tol * scale),
        "worst_margin_g": float(worst_g),
        "worst_margin_d": float(worst_d),
        "rows": rows,
    }


def check_ascd_windows(traces, constants, r_max=3, j_stride=1, tol=1e-9):
    """Coordinate-descent window chain: for r <= r_max,

    G_r <= 2 d L^2 (a_j + Delta_r)   and
    Delta_r <= (3 gamma tau (r+1))^2 * (realized max ||g||^2 over S_{r+1}).

    The first link is pointwise (plain smoothness), the second is the
    Cauchy-Schwarz expansion of the mismatch over the wider window.
    """
    _require_seeds(traces)
    if traces[0].algo != "scd":
        raise ValueError("check_ascd_windows expects scd traces")
    d, L = constants.d, constants.L
    tau = traces[0].tau
    gamma = traces[0].gamma
    T = traces[0].T
    j_list = range(0, T, j_stride)
    rows = _window_chain(
        traces, j_list, r_max, tau, gamma,
        curvature_bound=lambda a_j, delta: 2.0 * d * L**2 * (a_j + delta),
        extra_a=lambda ts, j: 0.0,
    )
    scale = max(1.0, max(r["g_hat"] for r in rows))
    return _chain_report(rows, scale, tol)


def check_svrg_variance_window(traces, constants, r_max=3, j_stride=1, tol=1e-9):
    """Sparse-SVRG window chain: G_r <= 4 L^2 (a_j + a_0 + Delta_r) with a_0
    the active snapshot's distance, and the same Delta_r link as ASCD.  Uses
    the per-term Lipschitz constant (the variance bound is per-term)."""
    _require_seeds(traces)
    if traces[0].algo != "svrg_sparse":
        raise ValueError("check_svrg_variance_window expects svrg_sparse traces")
    L = constants.L_term
    tau = traces[0].tau
    gamma = traces[0].gamma
    T = traces[0].T
    snap = _stack(traces, "snapshot_a")
    j_list = range(0, T, j_stride)
    # epoch size: distance between consecutive epoch starts (T if single epoch)
    starts = np.unique(traces[0].epoch_start)
    S = int(starts[1] - starts[0]) if starts.size > 1 else T
    rows = _window_chain(
        traces, j_list, r_max, tau, gamma,
        curvature_bound=lambda a_tot, delta: 4.0 * L**2 * (a_tot + delta),
        extra_a=lambda ts, j: float(snap[:, j].mean()),
        epoch_size=S,
    )
    scale = max(1.0, max(r["g_hat"] for r in rows))
    return _chain_report(rows, scale, tol)


def reconstruct_mismatch(trace: SimTrace, schedule: DelaySchedule, j):
    """Rebuild xhat_j - x_j from the schedule masks and logged updates; the
    simulator constructs it the same way, so agreement must be ~1e-12."""
    d = schedule.d
    out = np.zeros(d)
    lo = int(trace.epoch_start[j])
    for lag in range(1, min(schedule.tau, j) + 1):
        i = j - lag
        if i < lo:
            break
        mask = schedule.missing[j, lag - 1]
        out[mask] += trace.gamma * trace.U[i][mask]
    return out


def trace_csv(trace: SimTrace, path):
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["j", "a_j", "r0", "r1", "r2", "q"])
        for j in range(trace.T):
            w.writerow(
                [j, trace.a[j], trace.r0[j], trace.r1[j], trace.r2[j], trace.q[j]]
            )
