"""Serial baseline solvers: SGM, SCD, dense SVRG, and sparse SVRG.

The per-step update kernels live here and are shared verbatim by the
asynchronous engine and the staleness simulator, so a 1-worker async run or
a zero-delay simulation reproduces the serial trajectory bit for bit.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .hypergraph import CoordinateWeights
from .objectives import DecomposableObjective, solve_reference
from .vectors import LinfBall, sq_distance

__all__ = [
    "SolverConfig",
    "RunResult",
    "worker_rng",
    "resolve_config",
    "run_sgm",
    "run_scd",
    "run_svrg_dense",
    "run_svrg_sparse",
    "svrg_variance_check",
    "enumerated_mean_direction",
    "trace_to_csv",
]

STEP_RULES = ("explicit", "hogwild_theorem1", "scd_theorem2", "svrg_theorem3")


@dataclass(frozen=True)
class SolverConfig:
    """Step size, horizon, and RNG configuration for one run.

    Either set ``gamma`` explicitly (step_rule="explicit") or pick a named
    rule; the rules need ``eps`` and ``a0`` (the target accuracy and the
    initial squared distance) to derive gamma and the horizon.
    """

    gamma: float | None = None
    step_rule: str = "explicit"
    total_iters: int | None = None
    epoch_size: int | None = None
    epochs: int | None = None
    seed: int = 0
    linf: LinfBall = field(default_factory=LinfBall)
    snapshot_interval: int = 1
    eps: float | None = None
    a0: float | None = None
    M: float | None = None  # overrides constants.M in the hogwild_theorem1 rule
    theta: float = 1.0  # O(1) constant in the SCD rule gamma = theta/(6 d L kappa)
    log_every: int = 0  # 0 means log epoch boundaries / final only

    def __post_init__(self):
        if self.step_rule not in STEP_RULES:
            raise ValueError(f"unknown step_rule {self.step_rule!r}")
        if (self.gamma is not None) != (self.step_rule == "explicit"):
            raise ValueError("set gamma exactly when step_rule is 'explicit'")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.snapshot_interval < 1:
            raise ValueError("snapshot_interval must be >= 1")
        for name in ("total_iters", "epoch_size", "epochs"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise ValueError(f"{name} must be >= 1")


@dataclass
class RunResult:
    x: np.ndarray
    iters: int
    gamma: float
    seed: int
    trace_iter: np.ndarray  # checkpoint iteration numbers
    trace_a: np.ndarray | None  # ||x - x*||^2 at checkpoints (when x* known)
    trace_f: np.ndarray | None  # f(x) at checkpoints (when requested)
    epoch_a: np.ndarray | None = None  # per-epoch squared distances (SVRG)
    trace_wall: np.ndarray | None = None  # elapsed seconds at checkpoints
    wall_time: float = 0.0
    diverged: bool = False


def worker_rng(seed, worker=0):
    """Counter-based per-worker stream; worker 0 is the serial stream."""
    return np.random.Generator(np.random.Philox(key=[seed, worker]))


def resolve_config(cfg: SolverConfig, obj: DecomposableObjective, algo: str):
    """Fill in gamma / horizons from the named step rule. Returns a new config."""
    c = obj.constants
    if cfg.step_rule == "explicit":
        out = cfg
    elif cfg.step_rule == "hogwild_theorem1":
        if cfg.eps is None or cfg.a0 is None:
            raise ValueError("hogwild_theorem1 needs eps and a0")
        M = cfg.M if cfg.M is not None else c.M
        gamma = cfg.eps * c.m / (2.0 * M**2)
        T = cfg.total_iters
        if T is None:
            T = math.ceil(
                (2.0 * M**2 / (cfg.eps * c.m**2)) * math.log(2.0 * cfg.a0 / cfg.eps)
            )
        out = replace(cfg, gamma=gamma, step_rule="explicit", total_iters=T)
    elif cfg.step_rule == "scd_theorem2":
        gamma = cfg.theta / (6.0 * c.d * c.L * c.kappa)
        T = cfg.total_iters
        if T is None:
            if cfg.eps is None or cfg.a0 is None:
                raise ValueError("scd_theorem2 needs total_iters or (eps, a0)")
            T = math.ceil(6.0 * c.d * c.kappa**2 * math.log(cfg.a0 / cfg.eps))
        out = replace(cfg, gamma=gamma, step_rule="explicit", total_iters=T)
    else:  # svrg_theorem3
        gamma = 1.0 / (4.0 * c.L * c.kappa)
        S = cfg.epoch_size if cfg.epoch_size is not None else math.ceil(8.0 * c.kappa**2)
        E = cfg.epochs
        if E is None:
            if cfg.eps is None or cfg.a0 is None:
                raise ValueError("svrg_theorem3 needs epochs or (eps, a0)")
            E = math.ceil(math.log(cfg.a0 / cfg.eps) / math.log(4.0 / 3.0))
        out = replace(
            cfg, gamma=gamma, step_rule="explicit", epoch_size=S, epochs=E
        )
    if out.gamma * c.m >= 1.0:
        raise ValueError(
            f"divergent configuration: gamma*m = {out.gamma * c.m:.3g} >= 1"
        )
    if algo in ("svrg_dense", "svrg_sparse", "kromagnon"):
        if out.epoch_size is None or out.epochs is None:
            raise ValueError(f"{algo} needs epoch_size and epochs")
    elif out.total_iters is None:
        raise ValueError(f"{algo} needs total_iters")
    return out


# ---------------------------------------------------------------------------
# update kernels, shared with the async engine and the simulator
# ---------------------------------------------------------------------------

def draw_term(rng, n):
    return int(rng.integers(n))


def draw_coord(rng, d):
    return int(rng.integers(d))


def sgm_direction(obj, i, x_vals):
    """Gradient of term i evaluated at values aligned to its support."""
    return obj.term_grad_vals(i, x_vals)


def scd_direction(obj, v, x_like):
    """d * [full gradient]_v; x_like only needs valid entries on the read set."""
    return obj.d * obj.full_grad_coord(v, x_like)


def svrg_sparse_direction(obj, i, x_vals, y_vals, z, idx):
    """g(x,s) - g(y,s) + D_s z, values aligned to support idx."""
    gx = obj.term_grad_vals(i, x_vals)
    gy = obj.term_grad_vals(i, y_vals)
    return gx - gy + obj.d_inv[idx] * z[idx]


def svrg_dense_direction(obj, i, x_vals, y_vals):
    """Sparse part of the dense SVRG update; the dense z is added by the caller."""
    return obj.term_grad_vals(i, x_vals) - obj.term_grad_vals(i, y_vals)


def _clamp(obj, x, idx, ball: LinfBall):
    if ball.bounded:
        x[idx] = np.clip(x[idx], -ball.radius, ball.radius)
    if obj.box is not None:
        lo, hi = obj.box
        x[idx] = np.clip(x[idx], lo, hi)


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------

class _Tracer:
    """Checkpoint recorder; wall clock excludes the measurement itself."""

    def __init__(self, cfg, total, xstar, obj, track_f=False):
        self.xstar = xstar
        self.obj = obj if track_f else None
        self.every = cfg.log_every if cfg.log_every > 0 else max(1, total)
        self.iters, self.a, self.f, self.wall = [], [], [], []
        self.elapsed = 0.0
        self.seg_start = time.perf_counter()

    def maybe(self, t, x):
        if t % self.every == 0:
            self.record(t, x)

    def record(self, t, x):
        now = time.perf_counter()
        self.elapsed += now - self.seg_start
        self.iters.append(t)
        if self.xstar is not None:
            self.a.append(sq_distance(x, self.xstar))
        if self.obj is not None:
            self.f.append(self.obj.value(x))
        self.wall.append(self.elapsed)
        self.seg_start = time.perf_counter()

    def arrays(self):
        it = np.asarray(self.iters, dtype=np.int64)
        a = np.asarray(self.a) if self.a else None
        f = np.asarray(self.f) if self.f else None
        return it, a, f


def run_sgm(obj, cfg: SolverConfig, x0, xstar=None, track_f=False) -> RunResult:
    cfg = resolve_config(cfg, obj, "sgm")
    rng = worker_rng(cfg.seed, 0)
    x = np.array(x0, dtype=np.float64, copy=True)
    gamma, T = cfg.gamma, cfg.total_iters
    tracer = _Tracer(cfg, T, xstar, obj, track_f=track_f)
    for t in range(T):
        i = draw_term(rng, obj.n)
        idx = obj.term_support(i)
        g = sgm_direction(obj, i, x[idx])
        x[idx] += -gamma * g
        _clamp(obj, x, idx, cfg.linf)
        tracer.maybe(t + 1, x)
    if not tracer.iters or tracer.iters[-1] != T:
        tracer.record(T, x)
    it, a, f = tracer.arrays()
    return RunResult(
        x=x, iters=T, gamma=gamma, seed=cfg.seed, trace_iter=it, trace_a=a,
        trace_f=f, trace_wall=np.asarray(tracer.wall), wall_time=tracer.elapsed,
        diverged=not np.all(np.isfinite(x)),
    )


def run_scd(obj, cfg: SolverConfig, x0, xstar=None, track_f=False) -> RunResult:
    cfg = resolve_config(cfg, obj, "scd")
    rng = worker_rng(cfg.seed, 0)
    x = np.array(x0, dtype=np.float64, copy=True)
    gamma, T = cfg.gamma, cfg.total_iters
    tracer = _Tracer(cfg, T, xstar, obj, track_f=track_f)
    idx1 = np.empty(1, dtype=np.int64)
    for t in range(T):
        v = draw_coord(rng, obj.d)
        u = scd_direction(obj, v, x)
        x[v] += -gamma * u
        idx1[0] = v
        _clamp(obj, x, idx1, cfg.linf)
        tracer.maybe(t + 1, x)
    if not tracer.iters or tracer.iters[-1] != T:
        tracer.record(T, x)
    it, a, f = tracer.arrays()
    return RunResult(
        x=x, iters=T, gamma=gamma, seed=cfg.seed, trace_iter=it, trace_a=a,
        trace_f=f, trace_wall=np.asarray(tracer.wall), wall_time=tracer.elapsed,
        diverged=not np.all(np.isfinite(x)),
    )


def _run_svrg(obj, cfg, x0, xstar, sparse: bool, track_f=False):
    cfg = resolve_config(cfg, obj, "svrg_sparse" if sparse else "svrg_dense")
    if sparse and not obj.weights.all_covered:
        raise ValueError("sparse SVRG requires every coordinate covered")
    rng = worker_rng(cfg.seed, 0)
    x = np.array(x0, dtype=np.float64, copy=True)
    gamma, S, E = cfg.gamma, cfg.epoch_size, cfg.epochs
    tracer = _Tracer(cfg, S * E, xstar, obj, track_f=track_f)
    epoch_a = [] if xstar is not None else None
    y = x.copy()
    z = obj.full_grad(y)
    t = 0
    for k in range(E):
        if k > 0 and k % cfg.snapshot_interval == 0:
            y = x.copy()
            z = obj.full_grad(y)
        for _ in range(S):
            i = draw_term(rng, obj.n)
            idx = obj.term_support(i)
            if sparse:
                g = svrg_sparse_direction(obj, i, x[idx], y[idx], z, idx)
                x[idx] += -gamma * g
                _clamp(obj, x, idx, cfg.linf)
            else:
                g = svrg_dense_direction(obj, i, x[idx], y[idx])
                x[idx] += -gamma * g
                x += -gamma * z
                if cfg.linf.bounded:
                    np.clip(x, -cfg.linf.radius, cfg.linf.radius, out=x)
                if obj.box is not None:
                    np.clip(x, obj.box[0], obj.box[1], out=x)
            t += 1
            tracer.maybe(t, x)
        if epoch_a is not None:
            epoch_a.append(sq_distance(x, xstar))
    if not tracer.iters or tracer.iters[-1] != t:
        tracer.record(t, x)
    it, a, f = tracer.arrays()
    return RunResult(
        x=x, iters=t, gamma=gamma, seed=cfg.seed, trace_iter=it, trace_a=a,
        trace_f=f, epoch_a=np.asarray(epoch_a) if epoch_a is not None else None,
        trace_wall=np.asarray(tracer.wall), wall_time=tracer.elapsed,
        diverged=not np.all(np.isfinite(x)),
    )


def run_svrg_dense(obj, cfg: SolverConfig, x0, xstar=None, track_f=False) -> RunResult:
    return _run_svrg(obj, cfg, x0, xstar, sparse=False, track_f=track_f)


def run_svrg_sparse(
    obj, weights: CoordinateWeights | None, cfg: SolverConfig, x0, xstar=None,
    track_f=False,
) -> RunResult:
    if weights is not None and not weights.all_covered:
        raise ValueError("sparse SVRG requires every coordinate covered")
    return _run_svrg(obj, cfg, x0, xstar, sparse=True, track_f=track_f)


class VarianceCheck(NamedTuple):
    lhs: float
    rhs: float
    dz_quadratic: float  # z^T D z, the subtracted term (always >= 0)


def svrg_variance_check(obj, weights, x, y, xstar=None) -> VarianceCheck:
    """Enumerated second moment of the sparse SVRG update versus its bound.

    lhs = E_s ||g(x,s) - g(y,s) + D_s grad f(y)||^2 by full enumeration;
    rhs = 2 E||g(x,s) - g(x*,s)||^2 + 2 E||g(y,s) - g(x*,s)||^2
          - 2 grad f(y)^T D grad f(y).
    """
    if xstar is None:
        xstar = solve_reference(obj)
    d_inv = weights.d_inv if weights is not None else obj.d_inv
    z = obj.full_grad(y)
    lhs = 0.0
    t1 = 0.0
    t2 = 0.0
    for i in range(obj.n):
        idx = obj.term_support(i)
        gx = obj.term_grad_vals(i, x[idx])
        gy = obj.term_grad_vals(i, y[idx])
        gs = obj.term_grad_vals(i, xstar[idx])
        v = gx - gy + d_inv[idx] * z[idx]
        lhs += float(v @ v)
        dxs = gx - gs
        dys = gy - gs
        t1 += float(dxs @ dxs)
        t2 += float(dys @ dys)
    n = obj.n
    dz = float(z @ (d_inv * z))
    rhs = 2.0 * t1 / n + 2.0 * t2 / n - 2.0 * dz
    return VarianceCheck(lhs=lhs / n, rhs=rhs, dz_quadratic=dz)


def enumerated_mean_direction(obj, x, algo, y=None, weights=None):
    """Average update direction over all samples; equals grad f(x) when unbiased."""
    d_inv = None
    if algo == "svrg_sparse":
        d_inv = weights.d_inv if weights is not None else obj.d_inv
        z = obj.full_grad(y)
    elif algo == "svrg_dense":
        z = obj.full_grad(y)
    out = np.zeros(obj.d)
    if algo == "scd":
        for v in range(obj.d):
            out[v] = obj.d * obj.full_grad_coord(v, x)
        return out / obj.d
    for i in range(obj.n):
        idx = obj.term_support(i)
        if algo == "sgm":
            out[idx] += obj.term_grad_vals(i, x[idx])
        elif algo == "svrg_dense":
            out[idx] += svrg_dense_direction(obj, i, x[idx], y[idx])
            out += z
        elif algo == "svrg_sparse":
            out[idx] += svrg_sparse_direction(obj, i, x[idx], y[idx], z, idx)
        else:
            raise ValueError(f"unknown algo {algo!r}")
    return out / obj.n


def trace_to_csv(result: RunResult, path, epoch_size=None):
    """Write the checkpoint trace as CSV: iter, epoch, seed, a_j, f, wall_ns."""
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "epoch", "seed", "a_j", "f", "wall_ns"])
        for k, it in enumerate(result.trace_iter):
            epoch = it // epoch_size if epoch_size else 0
            a = result.trace_a[k] if result.trace_a is not None else ""
            f = result.trace_f[k] if result.trace_f is not None else ""
            if result.trace_wall is not None:
                wall_ns = int(result.trace_wall[k] * 1e9)
            else:
                wall_ns = int(result.wall_time * 1e9)
            w.writerow([int(it), int(epoch), result.seed, a, f, wall_ns])
