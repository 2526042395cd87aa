"""Euler-Maruyama engine for order-based diffusions.

Every path draws its Gaussian increments from its own Philox stream keyed by
``(seed, path_index)``; the step number is the position in that stream, so a
path does not depend on which worker ran it or on the chunking used.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence, TypeVar

import numba
import numpy as np

from .drift import DriftSpec, MAX_TABLE_N
from .ordering import Permutation, all_permutations, sigma_of, word_str

CHUNK = 1 << 15
HIT_CHUNK = 1 << 12  # stopped paths usually end early
MASK64 = (1 << 64) - 1

R = TypeVar("R")


@dataclass(frozen=True)
class SimConfig:
    spec: DriftSpec
    x0: tuple[float, ...]
    eps: float
    T: float
    dt: float
    seed: int = 0
    paths: int = 1

    def __post_init__(self):
        object.__setattr__(self, "x0", tuple(float(v) for v in self.x0))
        if len(self.x0) != self.spec.n:
            raise ValueError(f"x0 has length {len(self.x0)}, drift has n={self.spec.n}")
        if not all(math.isfinite(v) for v in self.x0):
            raise ValueError("x0 must be finite")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.T < self.dt:
            raise ValueError("T must be at least dt")
        if self.eps < 0:
            raise ValueError("eps must be nonnegative")
        if self.paths < 1:
            raise ValueError("paths must be >= 1")

    @property
    def steps(self) -> int:
        return max(1, int(round(self.T / self.dt)))


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (len(times), n)
    seed: int = 0
    path_index: int = 0
    noise: np.ndarray | None = None  # Brownian increments, (steps, n)

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def to_csv(self, path) -> None:
        header = "t," + ",".join(f"x{i}" for i in range(1, self.n + 1))
        data = np.column_stack([self.times, self.states])
        np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")


@dataclass
class OccupationStats:
    zeta: dict[Permutation, float]
    total_time: float

    def fractions(self) -> dict[Permutation, float]:
        if self.total_time == 0:
            return {p: 0.0 for p in self.zeta}
        return {p: z / self.total_time for p, z in self.zeta.items()}

    def merge(self, other: "OccupationStats") -> "OccupationStats":
        zeta = {p: math.fsum([self.zeta[p], other.zeta[p]]) for p in self.zeta}
        return OccupationStats(zeta, self.total_time + other.total_time)

    def to_csv(self, path) -> None:
        frac = self.fractions()
        with open(path, "w", newline="\n") as fh:
            fh.write("sigma,time,fraction\n")
            for p in sorted(self.zeta):
                fh.write(f"{word_str(p)},{self.zeta[p]!r},{frac[p]!r}\n")


# -- kernels -----------------------------------------------------------------


@numba.njit(cache=True, nogil=True)
def _sort_order(x, order):
    # insertion sort of particle indices by (position, index); cheap because
    # the order from the previous step is almost always still correct
    n = x.size
    for i in range(1, n):
        j = order[i]
        xj = x[j]
        k = i - 1
        while k >= 0 and (x[order[k]] > xj or (x[order[k]] == xj and order[k] > j)):
            order[k + 1] = order[k]
            k -= 1
        order[k + 1] = j


@numba.njit(cache=True, nogil=True)
def _lex_index(order, fact):
    n = order.size
    idx = 0
    for i in range(n):
        smaller = 0
        for j in range(i + 1, n):
            if order[j] < order[i]:
                smaller += 1
        idx += smaller * fact[n - 1 - i]
    return idx


@numba.njit(cache=True, nogil=True)
def _euler_chunk(x, order, table, rank, fact, dt, noise_scale, noise, record_every, out, counts, project):
    n = x.size
    drift = np.empty(n)
    use_rank = rank.size > 0
    track = counts.size > 0
    r = 0
    for k in range(noise.shape[0]):
        _sort_order(x, order)
        idx = 0
        if track or not use_rank:
            idx = _lex_index(order, fact)
        if track:
            counts[idx] += 1
        if use_rank:
            for i in range(n):
                drift[order[i]] = rank[i]
        else:
            for i in range(n):
                drift[i] = table[idx, i]
        for i in range(n):
            x[i] += drift[i] * dt + noise_scale * noise[k, i]
        if project:
            m = 0.0
            for i in range(n):
                m += x[i]
            m /= n
            for i in range(n):
                x[i] -= m
        if record_every > 0 and (k + 1) % record_every == 0:
            out[r, :] = x
            r += 1
    return r


@numba.njit(cache=True, nogil=True)
def _z_chunk(z, b_minus, b_plus, dt, noise_scale, noise, out):
    for k in range(noise.size):
        drift = b_minus if z <= 0.0 else b_plus
        z += drift * dt + noise_scale * noise[k]
        out[k] = z
    return z


@numba.njit(cache=True, nogil=True)
def _z_hit(z, b_minus, b_plus, dt, noise_scale, noise):
    # steps until z first reaches (-inf, 0]; -1 when it stays positive
    for k in range(noise.size):
        drift = b_minus if z <= 0.0 else b_plus
        z += drift * dt + noise_scale * noise[k]
        if z <= 0.0:
            return k + 1, z
    return -1, z


@numba.njit(cache=True, nogil=True)
def _z_exit(z, b_minus, b_plus, dt, noise_scale, noise, lo, hi):
    # steps until z leaves (lo, hi); -1 while still inside
    for k in range(noise.size):
        drift = b_minus if z <= 0.0 else b_plus
        z += drift * dt + noise_scale * noise[k]
        if z <= lo or z >= hi:
            return k + 1, z
    return -1, z


# -- plumbing ----------------------------------------------------------------


def path_rng(seed: int, path_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=(path_index << 64) | (seed & MASK64)))


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("OFLAB_THREADS", "1")))
    except ValueError:
        return 1


def map_indexed(fn: Callable[[int], R], count: int, threads: int | None = None) -> list[R]:
    """Apply ``fn`` to ``0..count-1``; results come back in index order."""
    threads = thread_count() if threads is None else threads
    if threads <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


@dataclass
class _Kernel:
    table: np.ndarray
    rank: np.ndarray
    fact: np.ndarray
    n_bins: int

    @classmethod
    def of(cls, spec: DriftSpec, track: bool) -> "_Kernel":
        n = spec.n
        fact = np.array([math.factorial(k) for k in range(n + 1)], dtype=np.int64)
        if spec.kind == "rank_based":
            table = np.empty((0, n))
            rank = np.asarray(spec.rank, dtype=float)
        else:
            table = spec.table_array()
            rank = np.empty(0)
        n_bins = math.factorial(n) if track and n <= MAX_TABLE_N else 0
        return cls(table, rank, fact, n_bins)


@dataclass
class PathRun:
    states: np.ndarray  # recorded rows, starting with x0
    counts: np.ndarray  # left-endpoint step counts per ordering (lexicographic)
    noise: np.ndarray | None = None


def run_path(
    spec: DriftSpec,
    x0: Sequence[float],
    eps: float,
    dt: float,
    steps: int,
    seed: int,
    path_index: int,
    record_every: int = 1,
    track: bool = True,
    keep_noise: bool = False,
    project: bool = False,
    noise: np.ndarray | None = None,
    blocks: int = 1,
) -> PathRun:
    """Integrate one path; ``noise`` (standard normals) overrides the RNG stream.

    With ``blocks > 1`` the occupation counts are kept per consecutive block
    of steps, shape ``(blocks, n!)``, for batch-means error estimates. Blocks
    are whole multiples of ``record_every``, so fewer may come back.
    """
    n = spec.n
    ker = _Kernel.of(spec, track)
    record_every = max(1, min(record_every, steps))
    x = np.array(x0, dtype=float)
    if project:
        x -= x.mean()
    order = np.arange(n, dtype=np.int64)
    block_len = -(-steps // blocks)
    block_len = -(-block_len // record_every) * record_every
    counts = np.zeros((blocks, ker.n_bins), dtype=np.int64)
    out = np.empty((steps // record_every + 1, n))
    out[0] = x
    noise_scale = math.sqrt(2.0 * eps * dt)
    kept = [] if keep_noise else None
    chunk = max(record_every, (CHUNK // record_every) * record_every)
    rng = path_rng(seed, path_index) if noise is None else None
    done, r = 0, 1
    while done < steps:
        b = min(done // block_len, blocks - 1)
        m = min(chunk, steps - done, (b + 1) * block_len - done if b < blocks - 1 else steps - done)
        z = rng.standard_normal((m, n)) if noise is None else noise[done : done + m]
        if kept is not None:
            kept.append(z * math.sqrt(dt))
        r += _euler_chunk(
            x, order, ker.table, ker.rank, ker.fact, dt, noise_scale, z,
            record_every, out[r:], counts[b], project,
        )
        done += m
    used = -(-steps // block_len)  # aligning to record_every can leave trailing blocks empty
    return PathRun(
        out[:r],
        counts[0] if blocks == 1 else counts[:used],
        np.concatenate(kept) if kept is not None else None,
    )


def simulate_X(
    cfg: SimConfig, path_index: int = 0, keep_noise: bool = False, record_every: int = 1
) -> Trajectory:
    """One Euler-Maruyama path of ``dX = b(Sigma X) dt + sqrt(2 eps) dW``."""
    run = run_path(
        cfg.spec, cfg.x0, cfg.eps, cfg.dt, cfg.steps, cfg.seed, path_index,
        record_every=record_every, track=False, keep_noise=keep_noise,
    )
    every = max(1, min(record_every, cfg.steps))
    times = np.arange(run.states.shape[0]) * (every * cfg.dt)
    return Trajectory(times, run.states, cfg.seed, path_index, run.noise)


def simulate_with_noise(
    spec: DriftSpec, x0: Sequence[float], eps: float, dt: float, dW: np.ndarray
) -> Trajectory:
    """Path driven by given Brownian increments ``dW`` of shape ``(steps, n)``."""
    dW = np.asarray(dW, dtype=float)
    z = dW / math.sqrt(dt)
    run = run_path(spec, x0, eps, dt, dW.shape[0], 0, 0, track=False, noise=z)
    times = np.arange(run.states.shape[0]) * dt
    return Trajectory(times, run.states, noise=dW)


def map_paths(cfg: SimConfig, fn: Callable[[Trajectory], R], record_every: int = 1,
              threads: int | None = None) -> list[R]:
    """Simulate ``cfg.paths`` paths and reduce each with ``fn``, in path order."""
    return map_indexed(lambda i: fn(simulate_X(cfg, i, record_every=record_every)), cfg.paths, threads)


def final_orderings(cfg: SimConfig, threads: int | None = None) -> list[Permutation]:
    """Ordering of every path at time ``T``."""
    return map_paths(cfg, lambda tr: sigma_of(tr.states[-1]), record_every=cfg.steps, threads=threads)


def simulate_Z2(
    b_minus: float, b_plus: float, z0: float, eps: float, T: float, dt: float,
    seed: int = 0, path_index: int = 0,
) -> Trajectory:
    """Reduced two-particle process ``dZ = l(Z) dt + 2 sqrt(eps) dB``."""
    if eps < 0 or not dt > 0 or T < dt:
        raise ValueError("need eps >= 0, dt > 0 and T >= dt")
    steps = max(1, int(round(T / dt)))
    rng = path_rng(seed, path_index)
    out = np.empty(steps + 1)
    out[0] = z0
    z = float(z0)
    scale = 2.0 * math.sqrt(eps * dt)
    done = 0
    while done < steps:
        m = min(CHUNK, steps - done)
        z = _z_chunk(z, b_minus, b_plus, dt, scale, rng.standard_normal(m), out[1 + done : 1 + done + m])
        done += m
    times = np.arange(steps + 1) * dt
    return Trajectory(times, out[:, None], seed, path_index)


def hitting_time_Z(
    z0: float, b_minus: float, b_plus: float, eps: float, dt: float, T_max: float,
    seed: int = 0, path_index: int = 0,
) -> float:
    """First grid time the reduced process started at ``z0 > 0`` reaches 0; ``inf`` if not by ``T_max``."""
    if not z0 > 0:
        raise ValueError("z0 must be positive")
    steps = max(1, int(round(T_max / dt)))
    rng = path_rng(seed, path_index)
    z = float(z0)
    scale = 2.0 * math.sqrt(eps * dt)
    done = 0
    while done < steps:
        m = min(HIT_CHUNK, steps - done)
        k, z = _z_hit(z, b_minus, b_plus, dt, scale, rng.standard_normal(m))
        if k >= 0:
            return (done + k) * dt
        done += m
    return math.inf


def exit_side_Z(
    b_minus: float, b_plus: float, eps: float, dt: float, lo: float, hi: float,
    seed: int = 0, path_index: int = 0, z0: float = 0.0, T_max: float = math.inf,
) -> int:
    """+1 if the reduced process leaves ``(lo, hi)`` through ``hi``, -1 through ``lo``, 0 if still inside at ``T_max``."""
    if not lo < z0 < hi:
        raise ValueError("need lo < z0 < hi")
    rng = path_rng(seed, path_index)
    z = float(z0)
    scale = 2.0 * math.sqrt(eps * dt)
    steps = math.inf if math.isinf(T_max) else max(1, int(round(T_max / dt)))
    done = 0
    while done < steps:
        m = int(min(HIT_CHUNK, steps - done))
        k, z = _z_exit(z, b_minus, b_plus, dt, scale, rng.standard_normal(m), lo, hi)
        if k >= 0:
            return 1 if z >= hi else -1
        done += m
    return 0


def reorder(traj: Trajectory) -> Trajectory:
    """Increasing rearrangement of every state."""
    return Trajectory(traj.times, np.sort(traj.states, axis=1), traj.seed, traj.path_index)


def _lex_indices(states: np.ndarray) -> np.ndarray:
    order = np.argsort(states, axis=1, kind="stable")
    n = states.shape[1]
    idx = np.zeros(states.shape[0], dtype=np.int64)
    for i in range(n):
        smaller = (order[:, i + 1 :] < order[:, i : i + 1]).sum(axis=1)
        idx += smaller * math.factorial(n - 1 - i)
    return idx


def occupation_from_counts(counts: np.ndarray, n: int, dt: float) -> OccupationStats:
    perms = all_permutations(n)
    zeta = {p: float(c) * dt for p, c in zip(perms, counts)}
    return OccupationStats(zeta, float(counts.sum()) * dt)


def occupation_times(traj: Trajectory) -> OccupationStats:
    """Left-endpoint occupation time of every ordering."""
    n = traj.n
    if n > MAX_TABLE_N:
        raise ValueError(f"occupation tables are limited to n <= {MAX_TABLE_N}")
    idx = _lex_indices(traj.states[:-1])
    counts = np.bincount(idx, minlength=math.factorial(n))
    return occupation_from_counts(counts, n, traj.dt)


def coincidence_fraction(traj: Trajectory, delta: float) -> float:
    """Fraction of grid time with some pair of particles within ``delta``."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    s = np.sort(traj.states[:-1], axis=1)
    if s.shape[1] < 2:
        return 0.0
    hit = (np.diff(s, axis=1) <= delta).any(axis=1)
    return float(hit.mean())


def sup_sq_distance(a: np.ndarray, b: np.ndarray) -> float:
    """``sup_t sum_i |a_i(t) - b_i(t)|^2`` over the rows."""
    return float(((a - b) ** 2).sum(axis=1).max())
