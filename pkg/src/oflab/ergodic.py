"""Long-run behaviour of the centered unit-noise process.

The stationary law is represented only by its cone marginals: the fraction
of time spent in each ordering. That is all the cluster velocity needs,
because the drift is constant on every cone.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .drift import DriftSpec, check_sc, projected_drift
from .ordering import Permutation, all_permutations, word_str
from .sde import Trajectory, map_indexed, occupation_times, run_path

DEFAULT_BURN_IN = 0.1
DEFAULT_BLOCKS = 100


@dataclass
class ProjectedRun:
    trajectory: Trajectory  # thinned centered states
    block_counts: np.ndarray  # (blocks, n!) step counts per ordering
    dt: float
    T: float

    @property
    def n(self) -> int:
        return self.trajectory.n


@dataclass
class EmpiricalConeMeasure:
    weights: dict[Permutation, float]
    horizon: float
    burn_in: float
    block_weights: np.ndarray | None = field(default=None, repr=False)  # (blocks, n!)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write("sigma,weight\n")
            for p in sorted(self.weights):
                fh.write(f"{word_str(p)},{self.weights[p]!r}\n")


@dataclass
class VelocityEstimate:
    v_by_index: list[float]
    v: float
    spread: float
    standard_error: float

    def to_dict(self) -> dict:
        return {
            "v_by_index": self.v_by_index,
            "v": self.v,
            "spread": self.spread,
            "stderr": self.standard_error,
        }


def simulate_projected(
    spec: DriftSpec,
    T: float,
    dt: float,
    seed: int = 0,
    path_index: int = 0,
    record_every: int = 1000,
    blocks: int = DEFAULT_BLOCKS,
    z0: Sequence[float] | None = None,
) -> ProjectedRun:
    """Euler-Maruyama for ``dZ = b^Pi(Sigma Z) dt + sqrt(2) Pi dW``, re-centered every step."""
    if spec.n < 2:
        raise ValueError("need n >= 2")
    if not check_sc(spec).satisfies_ssc:
        warnings.warn("drift does not satisfy SSC; no stationary law is guaranteed", stacklevel=2)
    steps = max(1, int(round(T / dt)))
    record_every = max(1, min(record_every, steps // blocks))
    z0 = np.zeros(spec.n) if z0 is None else np.asarray(z0, dtype=float)
    run = run_path(
        projected_drift(spec), z0, 1.0, dt, steps, seed, path_index,
        record_every=record_every, project=True, blocks=blocks,
    )
    every = max(1, min(record_every, steps))
    times = np.arange(run.states.shape[0]) * (every * dt)
    traj = Trajectory(times, run.states, seed, path_index)
    counts = run.counts if run.counts.ndim == 2 else run.counts[None, :]
    return ProjectedRun(traj, counts, dt, steps * dt)


def estimate_cone_measure(
    run: ProjectedRun | Trajectory, burn_in_fraction: float = DEFAULT_BURN_IN
) -> EmpiricalConeMeasure:
    """Fraction of time in each cone after dropping the first ``burn_in_fraction`` of the horizon.

    For a :class:`ProjectedRun` the burn-in is rounded up to whole blocks.
    """
    if not 0 <= burn_in_fraction < 1:
        raise ValueError("burn_in_fraction must be in [0, 1)")
    if isinstance(run, Trajectory):
        k = int(math.ceil(burn_in_fraction * (len(run.times) - 1)))
        tail = Trajectory(run.times[k:] - run.times[k], run.states[k:])
        occ = occupation_times(tail)
        return EmpiricalConeMeasure(occ.fractions(), float(run.times[-1]), float(run.times[k]))
    counts = run.block_counts
    blocks = counts.shape[0]
    skip = int(math.ceil(burn_in_fraction * blocks - 1e-9))
    if skip >= blocks:
        skip = blocks - 1
    kept = counts[skip:]
    total = kept.sum()
    perms = all_permutations(run.n)
    weights = {p: float(c) / float(total) for p, c in zip(perms, kept.sum(axis=0))}
    per_block = kept / kept.sum(axis=1, keepdims=True)
    burn = run.T * skip / blocks
    return EmpiricalConeMeasure(weights, run.T, burn, per_block)


def estimate_velocity(spec: DriftSpec, mu: EmpiricalConeMeasure) -> VelocityEstimate:
    """``v_i = sum_sigma b_i(sigma) mu(sigma)`` for every particle ``i``."""
    perms = all_permutations(spec.n)
    missing = [word_str(p) for p in perms if p not in mu.weights]
    if missing:
        raise ValueError(f"cone measure lacks orderings {missing}")
    table = spec.table_array()
    w = np.array([mu.weights[p] for p in perms])
    v_by_index = [math.fsum(table[:, i] * w) for i in range(spec.n)]
    v = math.fsum(v_by_index) / spec.n
    stderr = 0.0
    if mu.block_weights is not None and mu.block_weights.shape[0] > 1:
        per_block = mu.block_weights @ table  # (blocks, n)
        m = per_block.shape[0]
        stderr = float(per_block.std(axis=0, ddof=1).max() / math.sqrt(m))
    return VelocityEstimate(v_by_index, v, max(v_by_index) - min(v_by_index), stderr)


def _sample_stats(values: np.ndarray) -> tuple[float, float, float, float]:
    """Mean, its standard error, variance, its standard error."""
    m = values.size
    mean = float(values.mean())
    var = float(values.var(ddof=1))
    m4 = float(((values - mean) ** 4).mean())
    return mean, math.sqrt(var / m), var, math.sqrt(max(m4 - var * var, 0.0) / m)


def _z(a: float, sa: float, b: float, sb: float) -> float:
    s = math.hypot(sa, sb)
    if s == 0:
        return 0.0 if a == b else math.inf
    return (a - b) / s


def scale_change_check(
    spec: DriftSpec,
    eps: float,
    T: float,
    dt: float,
    seed: int = 0,
    paths: int = 2000,
    x0: Sequence[float] | None = None,
    z_flag: float = 4.0,
) -> dict:
    """Compare direct small-noise paths with ``eps * X^1(t / eps)`` at time ``T``.

    Both sides use independent streams of the same seed. Reported statistics:
    mean and variance of particle 1 at ``T`` and the time fraction of every
    ordering on ``[0, T]``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    n = spec.n
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)
    steps = max(1, int(round(T / dt)))

    def direct(i):
        run = run_path(spec, x0, eps, dt, steps, seed, i)
        return run.states[-1], run.counts / steps

    def rescaled(i):
        run = run_path(spec, x0 / eps, 1.0, dt / eps, steps, seed, paths + i)
        return eps * run.states[-1], run.counts / steps

    a = map_indexed(direct, paths)
    b = map_indexed(rescaled, paths)
    rows = {}
    xa = np.array([s[0] for s, _ in a])
    xb = np.array([s[0] for s, _ in b])
    ma, sma, va, sva = _sample_stats(xa)
    mb, smb, vb, svb = _sample_stats(xb)
    rows["mean_x1"] = (ma, mb, _z(ma, sma, mb, smb))
    rows["var_x1"] = (va, vb, _z(va, sva, vb, svb))
    occ_a = np.array([c for _, c in a])
    occ_b = np.array([c for _, c in b])
    for k, p in enumerate(all_permutations(n)):
        fa, sfa, _, _ = _sample_stats(occ_a[:, k])
        fb, sfb, _, _ = _sample_stats(occ_b[:, k])
        rows[f"occupation_{word_str(p)}"] = (fa, fb, _z(fa, sfa, fb, sfb))
    flagged = [name for name, (_, _, z) in rows.items() if abs(z) > z_flag]
    return {
        "stats": {k: {"direct": d, "rescaled": r, "z": z} for k, (d, r, z) in rows.items()},
        "flagged": flagged,
    }
