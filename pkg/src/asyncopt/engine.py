"""Lock-free shared-memory execution of Hogwild!, async SCD, and KroMagnon.

"Lock-free" here means no global lock and no multi-coordinate consistency:
workers sample, read, and write concurrently with no coordination beyond
per-coordinate write indivisibility.  Coordinate writes go through a striped
lock table, which is how an indivisible read-modify-write on one float64
cell is realized in Python (the GIL does not make `x[v] += u` atomic).
KroMagnon additionally barriers at epoch boundaries to refresh its snapshot.

With workers=1 every algorithm reduces bit-exactly to its serial
counterpart, because the update kernels are shared with asyncopt.serial and
worker 0 uses the serial RNG stream.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field

import numpy as np

from .hypergraph import CoordinateWeights
from .objectives import DecomposableObjective
from .serial import (
    RunResult,
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
    "ReadMode",
    "SharedIterate",
    "SampleLog",
    "OverlapReport",
    "run_hogwild",
    "run_ascd",
    "run_kromagnon",
    "measure_speedup",
    "overlap_report",
]

SPARSE_INCONSISTENT = "sparse_inconsistent"
FULL_SNAPSHOT = "full_consistent_snapshot"
ReadMode = str  # one of the two constants above

_N_STRIPES = 64


class AtomicCounter:
    """Bounded fetch-and-increment; assigns the global sample order.

    next(limit) returns None without consuming an index once the limit is
    reached, so epoch barriers do not burn sample slots.
    """

    def __init__(self, start=0):
        self._value = start
        self._lock = threading.Lock()

    def next(self, limit=None):
        with self._lock:
            if limit is not None and self._value >= limit:
                return None
            v = self._value
            self._value += 1
            return v


class SharedIterate:
    """Dense shared vector with per-coordinate indivisible updates.

    Reads are plain element loads (inconsistent across coordinates by
    design); writes take the coordinate's stripe lock so concurrent
    read-modify-writes to the same cell never lose an update.
    """

    def __init__(self, x0):
        self.x = np.array(x0, dtype=np.float64, copy=True)
        self._locks = [threading.Lock() for _ in range(_N_STRIPES)]

    def read(self, idx):
        return self.x[idx]

    def snapshot(self):
        return self.x.copy()

    def add_clamped(self, idx, deltas, lo, hi):
        """x[v] += delta per coordinate, clamped; returns applied deltas."""
        x = self.x
        applied = np.empty(len(idx))
        for k, v in enumerate(idx):
            lock = self._locks[v % _N_STRIPES]
            with lock:
                old = x[v]
                new = old + deltas[k]
                if lo is not None:
                    if new < lo:
                        new = lo
                    elif new > hi:
                        new = hi
                x[v] = new
                applied[k] = new - old
        return applied


@dataclass
class SampleLog:
    """Per-sample records in global sample order (dense indices 0..T-1)."""

    edge: np.ndarray  # hyperedge id (or coordinate id for ASCD)
    worker: np.ndarray
    t_sample: np.ndarray
    t_last_write: np.ndarray
    updates: list | None  # applied (idx, deltas) per sample, when logged

    def __len__(self):
        return int(self.edge.size)


@dataclass
class OverlapReport:
    tau_observed: int
    histogram: np.ndarray  # histogram of per-sample overlap counts
    log: SampleLog | None = None


def overlap_report(log: SampleLog) -> OverlapReport:
    """tau = max over samples of how many other samples' [t_sample,
    t_last_write] intervals overlap its own (open-interval overlap)."""
    starts = np.sort(log.t_sample)
    ends = np.sort(log.t_last_write)
    n_before_end = np.searchsorted(starts, log.t_last_write, side="left")
    n_ended = np.searchsorted(ends, log.t_sample, side="right")
    counts = n_before_end - n_ended - 1
    counts = np.maximum(counts, 0)
    tau = int(counts.max()) if counts.size else 0
    return OverlapReport(
        tau_observed=tau,
        histogram=np.bincount(counts, minlength=1),
        log=log,
    )


def _bounds(obj, cfg):
    lo = hi = None
    if cfg.linf.bounded:
        lo, hi = -cfg.linf.radius, cfg.linf.radius
    if obj.box is not None:
        blo, bhi = obj.box
        lo = blo if lo is None else max(lo, blo)
        hi = bhi if hi is None else min(hi, bhi)
    return lo, hi


class _Log:
    def __init__(self, total, log_updates):
        self.edge = np.zeros(total, dtype=np.int64)
        self.worker = np.zeros(total, dtype=np.int32)
        self.t_sample = np.zeros(total)
        self.t_last_write = np.zeros(total)
        self.updates = [None] * total if log_updates else None

    def finish(self, count):
        upd = self.updates[:count] if self.updates is not None else None
        return SampleLog(
            edge=self.edge[:count],
            worker=self.worker[:count],
            t_sample=self.t_sample[:count],
            t_last_write=self.t_last_write[:count],
            updates=upd,
        )


def _hogwild_worker(obj, shared, gamma, lo, hi, counter, limit, rng, wid, log, mode):
    x = shared.x
    while True:
        j = counter.next(limit)
        if j is None:
            return
        t0 = time.perf_counter()
        # the snapshot variant reads the whole vector before sampling
        snap = shared.snapshot() if mode == FULL_SNAPSHOT else None
        i = draw_term(rng, obj.n)
        idx = obj.term_support(i)
        vals = snap[idx] if snap is not None else x[idx]
        g = sgm_direction(obj, i, vals)
        applied = shared.add_clamped(idx, -gamma * g, lo, hi)
        t1 = time.perf_counter()
        log.edge[j] = i
        log.worker[j] = wid
        log.t_sample[j] = t0
        log.t_last_write[j] = t1
        if log.updates is not None:
            log.updates[j] = (idx, applied)


def _ascd_worker(obj, shared, gamma, lo, hi, counter, limit, rng, wid, log, mode, scratch):
    x = shared.x
    while True:
        j = counter.next(limit)
        if j is None:
            return
        t0 = time.perf_counter()
        snap = shared.snapshot() if mode == FULL_SNAPSHOT else None
        v = draw_coord(rng, obj.d)
        if snap is not None:
            point = snap
        else:
            union = obj.coord_read_support(v)
            scratch[union] = x[union]
            point = scratch
        u = scd_direction(obj, v, point)
        idx = np.array([v], dtype=np.int64)
        applied = shared.add_clamped(idx, np.array([-gamma * u]), lo, hi)
        t1 = time.perf_counter()
        log.edge[j] = v
        log.worker[j] = wid
        log.t_sample[j] = t0
        log.t_last_write[j] = t1
        if log.updates is not None:
            log.updates[j] = (idx, applied)


def _kromagnon_worker(obj, shared, gamma, lo, hi, counter, limit, rng, wid, log, mode, y, z):
    x = shared.x
    while True:
        j = counter.next(limit)
        if j is None:
            return
        t0 = time.perf_counter()
        snap = shared.snapshot() if mode == FULL_SNAPSHOT else None
        i = draw_term(rng, obj.n)
        idx = obj.term_support(i)
        vals = snap[idx] if snap is not None else x[idx]
        g = svrg_sparse_direction(obj, i, vals, y[idx], z, idx)
        applied = shared.add_clamped(idx, -gamma * g, lo, hi)
        t1 = time.perf_counter()
        log.edge[j] = i
        log.worker[j] = wid
        log.t_sample[j] = t0
        log.t_last_write[j] = t1
        if log.updates is not None:
            log.updates[j] = (idx, applied)


def _checkpoint(obj, x, xstar, track_f):
    a = sq_distance(x, xstar) if xstar is not None else None
    f = obj.value(x) if track_f else None
    return a, f


def _collect(iters_list, a_list, f_list, walls):
    trace_iter = np.asarray(iters_list, dtype=np.int64)
    trace_a = np.asarray(a_list) if a_list and a_list[0] is not None else None
    trace_f = np.asarray(f_list) if f_list and f_list[0] is not None else None
    return trace_iter, trace_a, trace_f, np.asarray(walls)


def run_hogwild(
    obj, cfg: SolverConfig, x0, workers=1, mode=SPARSE_INCONSISTENT,
    xstar=None, log_updates=True, track_f=False,
):
    cfg = resolve_config(cfg, obj, "sgm")
    return _run_flat(
        obj, cfg, x0, workers, mode, xstar, log_updates, track_f, algo="hogwild"
    )


def run_ascd(
    obj, cfg: SolverConfig, x0, workers=1, mode=SPARSE_INCONSISTENT,
    xstar=None, log_updates=True, track_f=False,
):
    cfg = resolve_config(cfg, obj, "scd")
    return _run_flat(
        obj, cfg, x0, workers, mode, xstar, log_updates, track_f, algo="ascd"
    )


def _run_flat(obj, cfg, x0, workers, mode, xstar, log_updates, track_f, algo):
    if workers < 1:
        raise ValueError("workers must be >= 1")
    T = cfg.total_iters
    gamma = cfg.gamma
    lo, hi = _bounds(obj, cfg)
    shared = SharedIterate(x0)
    counter = AtomicCounter()
    log = _Log(T, log_updates)
    rngs = [worker_rng(cfg.seed, w) for w in range(workers)]
    chunk = cfg.log_every if cfg.log_every > 0 else T
    bounds = list(range(chunk, T, chunk)) + [T]
    iters_list, a_list, f_list, walls = [], [], [], []
    if algo == "hogwild":
        def run_target(bound, rng, wid):
            _hogwild_worker(obj, shared, gamma, lo, hi, counter, bound, rng, wid, log, mode)
    else:
        scratches = [np.zeros(obj.d) for _ in range(workers)]

        def run_target(bound, rng, wid):
            _ascd_worker(
                obj, shared, gamma, lo, hi, counter, bound, rng, wid, log, mode,
                scratches[wid],
            )

    elapsed = 0.0
    for bound in bounds:
        t0 = time.perf_counter()
        threads = [
            threading.Thread(target=run_target, args=(bound, rngs[w], w))
            for w in range(workers)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        elapsed += time.perf_counter() - t0
        a, f = _checkpoint(obj, shared.x, xstar, track_f)
        iters_list.append(bound)
        a_list.append(a)
        f_list.append(f)
        walls.append(elapsed)

    trace_iter, trace_a, trace_f, trace_wall = _collect(iters_list, a_list, f_list, walls)
    result = RunResult(
        x=shared.x, iters=T, gamma=gamma, seed=cfg.seed, trace_iter=trace_iter,
        trace_a=trace_a, trace_f=trace_f, trace_wall=trace_wall,
        wall_time=elapsed, diverged=not np.all(np.isfinite(shared.x)),
    )
    return result, overlap_report(log.finish(T))


def run_kromagnon(
    obj, weights: CoordinateWeights | None, cfg: SolverConfig, x0, workers=1,
    mode=SPARSE_INCONSISTENT, xstar=None, log_updates=True, track_f=False,
):
    cfg = resolve_config(cfg, obj, "kromagnon")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    w_cov = weights if weights is not None else obj.weights
    if not w_cov.all_covered:
        raise ValueError("KroMagnon requires every coordinate covered")
    S, E = cfg.epoch_size, cfg.epochs
    gamma = cfg.gamma
    lo, hi = _bounds(obj, cfg)
    shared = SharedIterate(x0)
    counter = AtomicCounter()
    T = S * E
    log = _Log(T, log_updates)
    rngs = [worker_rng(cfg.seed, w) for w in range(workers)]
    iters_list, a_list, f_list, walls, epoch_a = [], [], [], [], []
    elapsed = 0.0
    y = shared.snapshot()
    z = obj.full_grad(y)
    for k in range(E):
        t0 = time.perf_counter()
        if k > 0 and k % cfg.snapshot_interval == 0:
            # epoch barrier: all workers are joined here, snapshot is safe
            y = shared.snapshot()
            z = obj.full_grad(y)
        bound = (k + 1) * S
        threads = [
            threading.Thread(
                target=_kromagnon_worker,
                args=(obj, shared, gamma, lo, hi, counter, bound, rngs[w], w,
                      log, mode, y, z),
            )
            for w in range(workers)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        elapsed += time.perf_counter() - t0
        if not np.all(np.isfinite(shared.x)):
            break
        a, f = _checkpoint(obj, shared.x, xstar, track_f)
        iters_list.append(bound)
        a_list.append(a)
        f_list.append(f)
        walls.append(elapsed)
        if xstar is not None:
            epoch_a.append(a)
    trace_iter, trace_a, trace_f, trace_wall = _collect(iters_list, a_list, f_list, walls)
    done = int(trace_iter[-1]) if trace_iter.size else 0
    result = RunResult(
        x=shared.x, iters=done, gamma=gamma, seed=cfg.seed, trace_iter=trace_iter,
        trace_a=trace_a, trace_f=trace_f, trace_wall=trace_wall,
        epoch_a=np.asarray(epoch_a) if xstar is not None else None,
        wall_time=elapsed, diverged=not np.all(np.isfinite(shared.x)),
    )
    return result, overlap_report(log.finish(done))


def measure_speedup(runs: dict, target_fraction: float) -> dict:
    """Time for each run to reach target_fraction of its own progress to its
    own minimum, and speedup relative to the 1-worker run.

    Each run must carry trace_f and trace_wall, plus the initial objective as
    the first trace entry or supplied via run.trace_f[0].
    """
    if not 0.0 < target_fraction <= 1.0:
        raise ValueError("target_fraction must be in (0, 1]")
    times = {}
    for w, run in runs.items():
        f = run.trace_f
        wall = run.trace_wall
        if f is None or wall is None:
            raise ValueError("measure_speedup needs trace_f and trace_wall")
        best = np.minimum.accumulate(f)
        f0 = f[0]
        fmin = best[-1]
        target = fmin + (1.0 - target_fraction) * (f0 - fmin)
        hit = np.flatnonzero(best <= target + 1e-15)
        times[w] = float(wall[hit[0]]) if hit.size else None
    base = times.get(1)
    table = {}
    for w, t in times.items():
        if t is None or base is None or t == 0.0:
            table[w] = {"time_to_target": t, "speedup": None}
        else:
            table[w] = {"time_to_target": t, "speedup": base / t}
    return table
