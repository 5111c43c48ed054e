"""Fixed-step Runge-Kutta integration of dz/dtau = rate v(z, t), dt/dtau = rate.

``rate`` is the field's clock (1 for time-dependent fields, where tau is
physical time).  Trajectories are integrated in vectorised batches; results
for a trajectory depend only on its batch, and batches are formed by a fixed
chunk size, so ensemble output does not depend on the worker count.
"""
from __future__ import annotations

import enum
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

METHODS = ("rk4", "rk2")


class Status(str, enum.Enum):
    REACHED_LINE = "reached_line"
    MAX_STEPS = "max_steps"
    LEFT_DOMAIN = "left_domain"
    STALLED_AT_NODE = "stalled_at_node"
    FAILED = "failed"


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 2e-3
    method: str = "rk4"
    max_steps: int = 100_000
    stop_x: float | None = None
    node_slowdown: float = 4.0
    max_refinements: int = 6
    max_turn: float = np.inf  # largest stage-velocity difference accepted without refining
    domain_lo: tuple | None = None
    domain_hi: tuple | None = None
    record_every: int = 1  # 0: keep only the first and last point

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if not self.max_turn > 0:
            raise ValueError("max_turn must be positive")
        if not self.node_slowdown > 1:
            raise ValueError("node_slowdown must exceed 1")
        if self.record_every < 0:
            raise ValueError("record_every must be >= 0")


@dataclass
class Trajectory:
    traj_id: int
    t: np.ndarray
    points: np.ndarray
    steps: np.ndarray
    status: Status
    message: str = ""

    @property
    def end(self):
        return self.points[-1]

    @property
    def start(self):
        return self.points[0]


def _derivative(field_fn, z, t):
    out = field_fn.evaluate(z, t)
    bad = out.degenerate | ~np.all(np.isfinite(out.v), axis=-1) | ~(out.rate > 0)
    v = np.where(bad[:, None], 0.0, out.v)
    rate = np.where(bad, 0.0, out.rate)
    return v, rate, bad


def _step(field_fn, z, t, h, method):
    """One explicit step for every row.

    Returns (z_new, t_new, degenerate, spread) where ``spread`` is the largest
    difference between a later stage velocity and the first one.
    """
    hc = h[:, None]
    v1, r1, b1 = _derivative(field_fn, z, t)
    k1 = r1[:, None] * v1
    if method == "rk2":
        v2, r2, b2 = _derivative(field_fn, z + 0.5 * hc * k1, t + 0.5 * h * r1)
        spread = np.linalg.norm(v2 - v1, axis=-1)
        return z + hc * (r2[:, None] * v2), t + h * r2, b1 | b2, spread
    v2, r2, b2 = _derivative(field_fn, z + 0.5 * hc * k1, t + 0.5 * h * r1)
    k2 = r2[:, None] * v2
    v3, r3, b3 = _derivative(field_fn, z + 0.5 * hc * k2, t + 0.5 * h * r2)
    k3 = r3[:, None] * v3
    v4, r4, b4 = _derivative(field_fn, z + hc * k3, t + h * r3)
    k4 = r4[:, None] * v4
    z_new = z + hc / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    t_new = t + h / 6.0 * (r1 + 2.0 * r2 + 2.0 * r3 + r4)
    spread = np.max(np.stack([np.linalg.norm(v - v1, axis=-1) for v in (v2, v3, v4)]), axis=0)
    return z_new, t_new, b1 | b2 | b3 | b4, spread


class _Recorder:
    """Collects (row, step, t, z) blocks; rows are regrouped once at the end."""

    def __init__(self, every):
        self.every = every
        self.blocks = []

    def add(self, idx, step_no, t, z, force=None):
        if force is None:
            keep = np.ones(len(idx), dtype=bool)
        else:
            keep = force.copy()
        if self.every:
            keep |= step_no % self.every == 0
        if keep.any():
            self.blocks.append((idx[keep], step_no[keep], t[keep], z[keep]))

    def finish(self, n):
        rows = np.concatenate([b[0] for b in self.blocks])
        steps = np.concatenate([b[1] for b in self.blocks])
        t = np.concatenate([b[2] for b in self.blocks])
        z = np.concatenate([b[3] for b in self.blocks])
        order = np.lexsort((steps, rows))
        rows, steps, t, z = rows[order], steps[order], t[order], z[order]
        # a step may be recorded twice (periodic + terminal); keep the last
        last = np.ones(len(rows), dtype=bool)
        last[:-1] = (rows[1:] != rows[:-1]) | (steps[1:] != steps[:-1])
        rows, steps, t, z = rows[last], steps[last], t[last], z[last]
        bounds = np.searchsorted(rows, np.arange(n + 1))
        return [(steps[bounds[i] : bounds[i + 1]], t[bounds[i] : bounds[i + 1]], z[bounds[i] : bounds[i + 1]]) for i in range(n)]


def _integrate_batch(field_fn, starts, t0, icfg: IntegratorConfig, ids):
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    n, dim = starts.shape
    z = starts.copy()
    t = np.full(n, float(t0))
    nsteps = np.zeros(n, dtype=np.int64)
    status = [None] * n
    message = [""] * n
    rec = _Recorder(icfg.record_every)
    rec.add(np.arange(n), nsteps.copy(), t.copy(), z.copy())

    bad0 = _derivative(field_fn, z, t)[2]
    for i in np.nonzero(bad0)[0]:
        status[i] = Status.STALLED_AT_NODE
        message[i] = "start point lies on a density node"
    active = ~bad0

    lo = None if icfg.domain_lo is None else np.asarray(icfg.domain_lo, dtype=float)
    hi = None if icfg.domain_hi is None else np.asarray(icfg.domain_hi, dtype=float)

    while active.any():
        idx = np.nonzero(active)[0]
        h = np.full(len(idx), icfg.dt)
        z_new, t_new, bad, spread = _step(field_fn, z[idx], t[idx], h, icfg.method)
        retry = bad | (spread > icfg.max_turn)
        level = 0
        while retry.any() and level < icfg.max_refinements:
            level += 1
            sub = np.nonzero(retry)[0]
            h[sub] /= icfg.node_slowdown
            zs, ts, bs, ss = _step(field_fn, z[idx[sub]], t[idx[sub]], h[sub], icfg.method)
            z_new[sub], t_new[sub], bad[sub], spread[sub] = zs, ts, bs, ss
            retry = bad | (spread > icfg.max_turn)
        # a persistent velocity turn is accepted at the finest step; a node is not
        stalled = np.nonzero(bad)[0]
        for j in stalled:
            status[idx[j]] = Status.STALLED_AT_NODE
            message[idx[j]] = f"degenerate density after {icfg.max_refinements} step reductions"
        if len(stalled):
            rec.add(idx[stalled], nsteps[idx[stalled]], t[idx[stalled]], z[idx[stalled]], force=np.ones(len(stalled), bool))
            active[idx[stalled]] = False
            keep = ~bad
            idx, z_new, t_new = idx[keep], z_new[keep], t_new[keep]
            if len(idx) == 0:
                continue
        z_old, t_old = z[idx], t[idx]
        nsteps[idx] += 1
        z[idx], t[idx] = z_new, t_new
        force = np.zeros(len(idx), dtype=bool)

        if icfg.stop_x is not None:
            crossed = (z_new[:, 0] >= icfg.stop_x) & (z_old[:, 0] < icfg.stop_x)
            if crossed.any():
                frac = (icfg.stop_x - z_old[crossed, 0]) / (z_new[crossed, 0] - z_old[crossed, 0])
                zc = z_old[crossed] + frac[:, None] * (z_new[crossed] - z_old[crossed])
                zc[:, 0] = icfg.stop_x
                tc = t_old[crossed] + frac * (t_new[crossed] - t_old[crossed])
                ci = idx[crossed]
                z[ci], t[ci] = zc, tc
                for i in ci:
                    status[i] = Status.REACHED_LINE
                force |= crossed
        outside = np.zeros(len(idx), dtype=bool)
        if lo is not None:
            outside |= np.any(z[idx] < lo, axis=-1)
        if hi is not None:
            outside |= np.any(z[idx] > hi, axis=-1)
        for j in np.nonzero(outside)[0]:
            if status[idx[j]] is None:
                status[idx[j]] = Status.LEFT_DOMAIN
                force[j] = True
        exhausted = nsteps[idx] >= icfg.max_steps
        for j in np.nonzero(exhausted)[0]:
            if status[idx[j]] is None:
                status[idx[j]] = Status.MAX_STEPS
                force[j] = True
        rec.add(idx, nsteps[idx], t[idx], z[idx], force=force)
        active[idx[force]] = False

    return [
        Trajectory(int(ids[i]), tt, pts, steps, status[i], message[i])
        for i, (steps, tt, pts) in enumerate(rec.finish(n))
    ]


def integrate(field_fn, start, t0: float, icfg: IntegratorConfig) -> Trajectory:
    """Integrate one trajectory from ``start`` (a configuration point).

    Raises ValueError when the start point sits on a density node.
    """
    traj = _integrate_batch(field_fn, np.asarray(start, dtype=float)[None, :], t0, icfg, [0])[0]
    if traj.status is Status.STALLED_AT_NODE and traj.steps[-1] == 0:
        raise ValueError(f"cannot start at {start!r}: {traj.message}")
    return traj


def _run_chunk(args):
    field_fn, starts, t0, icfg, ids = args
    try:
        return _integrate_batch(field_fn, starts, t0, icfg, ids)
    except Exception:
        log.warning("batch %d..%d failed; retrying members one by one", ids[0], ids[-1])
    out = []
    for s, i in zip(starts, ids):
        try:
            out.extend(_integrate_batch(field_fn, s[None, :], t0, icfg, [i]))
        except Exception as exc:  # recorded, never fatal for the ensemble
            out.append(
                Trajectory(int(i), np.array([t0]), s[None, :].copy(), np.array([0]), Status.FAILED, repr(exc))
            )
    return out


def integrate_ensemble(field_fn, starts, t0: float, icfg: IntegratorConfig, workers: int = 1, chunk_size: int = 4096):
    """Integrate many independent trajectories; output order matches ``starts``."""
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    if len(starts) == 0:
        raise ValueError("no start points")
    ids = np.arange(len(starts))
    jobs = [
        (field_fn, starts[i : i + chunk_size], t0, icfg, ids[i : i + chunk_size])
        for i in range(0, len(starts), chunk_size)
    ]
    if workers <= 1:
        results = [_run_chunk(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_chunk, jobs))
    return [traj for chunk in results for traj in chunk]
