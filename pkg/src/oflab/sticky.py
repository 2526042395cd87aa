"""Event-driven sticky particle dynamics with unit masses.

Particles move at their rank velocity until they collide; colliding clusters
stick and move at the mass-averaged velocity. Inputs may be ``float`` or
``fractions.Fraction``; with fractions and ``rtol=0`` every operation is exact.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

RTOL = 1e-12


def _total(values):
    values = list(values)
    if values and all(isinstance(v, float) for v in values):
        return math.fsum(values)
    return sum(values)


@dataclass(frozen=True)
class Cluster:
    lo: int  # 1-based, inclusive
    hi: int
    position: float
    momentum: float  # sum of the member rank velocities

    @property
    def mass(self) -> int:
        return self.hi - self.lo + 1

    @property
    def velocity(self):
        return self.momentum / self.mass

    def moved(self, dt) -> "Cluster":
        return replace(self, position=self.position + self.velocity * dt)


@dataclass
class StickyState:
    clusters: list[Cluster]
    time: float = 0.0

    @property
    def n(self) -> int:
        return self.clusters[-1].hi

    def positions(self) -> list:
        out = []
        for c in self.clusters:
            out.extend([c.position] * c.mass)
        return out

    def velocities(self) -> list:
        out = []
        for c in self.clusters:
            out.extend([c.velocity] * c.mass)
        return out

    def total_momentum(self):
        return _total(c.momentum for c in self.clusters)

    def ranges(self) -> list[tuple[int, int]]:
        return [(c.lo, c.hi) for c in self.clusters]


@dataclass
class StickyEvent:
    time: float
    merged: list[tuple[int, int]]  # index ranges of the clusters created


@dataclass
class StickyPath:
    """Piecewise-linear limit path.

    ``segments[m]`` is the configuration at the start of the m-th interval
    ``[t^m, t^{m+1})``; ``segments[0]`` is the state at time 0 after the
    instantaneous clustering.
    """

    y0: list
    b: list
    segments: list[StickyState]
    events: list[StickyEvent] = field(default_factory=list)
    horizon: float = math.inf

    @property
    def n(self) -> int:
        return len(self.b)

    def _segment(self, t) -> StickyState:
        starts = [s.time for s in self.segments]
        m = bisect.bisect_right(starts, t) - 1
        return self.segments[max(m, 0)]

    def at(self, t) -> list:
        if t < 0:
            raise ValueError("t must be nonnegative")
        seg = self._segment(t)
        dt = t - seg.time
        return [c.position + c.velocity * dt for c in seg.clusters for _ in range(c.mass)]

    def velocities_at(self, t) -> list:
        return self._segment(t).velocities()

    def sample(self, grid: Sequence[float]) -> np.ndarray:
        return np.array([[float(v) for v in self.at(t)] for t in grid])

    def to_dict(self) -> dict:
        def cl(state):
            return [[c.lo, c.hi, float(c.position), float(c.velocity)] for c in state.clusters]

        return {
            "y0": [float(v) for v in self.y0],
            "b": [float(v) for v in self.b],
            "horizon": None if math.isinf(self.horizon) else float(self.horizon),
            "segments": [{"t": float(s.time), "clusters": cl(s)} for s in self.segments],
            "events": [
                {"t": float(e.time), "merged": [list(r) for r in e.merged]} for e in self.events
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StickyPath":
        b = [float(v) for v in data["b"]]
        segments = []
        for seg in data["segments"]:
            clusters = [
                Cluster(lo, hi, pos, _total(b[lo - 1 : hi]))
                for lo, hi, pos, _vel in seg["clusters"]
            ]
            segments.append(StickyState(clusters, seg["t"]))
        events = [StickyEvent(e["t"], [tuple(r) for r in e["merged"]]) for e in data["events"]]
        horizon = data.get("horizon")
        return cls(
            y0=list(data["y0"]),
            b=b,
            segments=segments,
            events=events,
            horizon=math.inf if horizon is None else horizon,
        )


def _merge(left: Cluster, right: Cluster) -> Cluster:
    # the center of mass of the pair is the exact post-collision position
    pos = (left.mass * left.position + right.mass * right.position) / (left.mass + right.mass)
    return Cluster(left.lo, right.hi, pos, left.momentum + right.momentum)


def _touching(a: Cluster, b: Cluster, rtol) -> bool:
    scale = 1 + max(abs(a.position), abs(b.position))
    return abs(b.position - a.position) <= rtol * scale


def _settle(clusters: list[Cluster], rtol) -> list[Cluster]:
    """Merge touching neighbours until no left cluster is at least as fast as its right.

    Stack-based pool-adjacent-violators pass restricted to touching clusters.
    """
    stack: list[Cluster] = []
    for c in clusters:
        stack.append(c)
        while (
            len(stack) >= 2
            and _touching(stack[-2], stack[-1], rtol)
            and stack[-2].velocity >= stack[-1].velocity
        ):
            right = stack.pop()
            stack[-1] = _merge(stack[-1], right)
    return stack


def initial_clusters(y0: Sequence, b: Sequence, rtol=RTOL) -> StickyState:
    """Resolve the instantaneous collisions among particles sharing a position."""
    if len(y0) != len(b):
        raise ValueError("y0 and b must have the same length")
    if len(y0) == 0:
        raise ValueError("need at least one particle")
    if any(y0[i] > y0[i + 1] for i in range(len(y0) - 1)):
        raise ValueError("y0 must be nondecreasing")
    singletons = [Cluster(i + 1, i + 1, y0[i], b[i]) for i in range(len(b))]
    clusters = _settle(singletons, rtol)
    return StickyState(clusters, 0)


def _next_collision(state: StickyState, rtol):
    """Earliest collision delay and the adjacent pairs colliding then."""
    delays = []
    for k in range(len(state.clusters) - 1):
        a, c = state.clusters[k], state.clusters[k + 1]
        closing = a.velocity - c.velocity
        if closing > 0:
            delays.append((max((c.position - a.position) / closing, 0), k))
    if not delays:
        return None, []
    first = min(d for d, _ in delays)
    tol = rtol * max(first, 1)
    return first, [k for d, k in delays if d - first <= tol]


def advance(state: StickyState, t_target, rtol=RTOL) -> tuple[StickyState, list[StickyEvent]]:
    """Integrate the sticky dynamics from ``state.time`` to ``t_target``."""
    if t_target < state.time:
        raise ValueError("t_target must not precede the current time")
    events: list[StickyEvent] = []
    clusters = list(state.clusters)
    t = state.time
    while True:
        delay, pairs = _next_collision(StickyState(clusters, t), rtol)
        if delay is None or t + delay > t_target:
            clusters = [c.moved(t_target - t) for c in clusters]
            return StickyState(clusters, t_target), events
        t = t + delay
        clusters = [c.moved(delay) for c in clusters]
        before = _ranges(clusters)
        join = set(pairs)
        merged: list[Cluster] = []
        for k, c in enumerate(clusters):
            if merged and (k - 1) in join:
                merged[-1] = _merge(merged[-1], c)
            else:
                merged.append(c)
        clusters = _settle(merged, rtol)
        events.append(StickyEvent(t, sorted(_ranges(clusters) - before)))


def _ranges(clusters: Sequence[Cluster]) -> set[tuple[int, int]]:
    return {(c.lo, c.hi) for c in clusters}


def sticky_dynamics(y0: Sequence, b: Sequence, horizon=math.inf, rtol=RTOL) -> StickyPath:
    """Full event history of the sticky dynamics up to ``horizon``."""
    state = initial_clusters(y0, b, rtol)
    path = StickyPath(y0=list(y0), b=list(b), segments=[state], horizon=horizon)
    while True:
        delay, _ = _next_collision(state, rtol)
        if delay is None or state.time + delay > horizon:
            return path
        state, events = advance(state, state.time + delay, rtol)
        path.events.extend(events)
        path.segments.append(state)


def sticky_path(y0: Sequence, b: Sequence, grid: Sequence[float], rtol=RTOL) -> np.ndarray:
    """Sample the sticky limit path on ``grid``; returns an array ``(len(grid), n)``."""
    grid = list(grid)
    if grid and grid[0] < 0:
        raise ValueError("grid must start at or after 0")
    if any(grid[i] > grid[i + 1] for i in range(len(grid) - 1)):
        raise ValueError("grid must be increasing")
    horizon = grid[-1] if grid else 0
    return sticky_dynamics(y0, b, horizon, rtol).sample(grid)


def reflection_decomposition(path: StickyPath, t, rtol=RTOL) -> tuple[list, list]:
    """Rates of the reflection term and the boundary weights at time ``t``.

    Returns ``(kappa_rates, gamma)`` with ``kappa_rates[i] = v_i - b_i`` and
    ``gamma`` of length ``n + 1`` such that
    ``kappa_rates[i] = (gamma[i] - gamma[i+1]) * l`` where ``l = sum |v_i - b_i|``.
    """
    for e in path.events:
        if abs(t - e.time) <= rtol * max(1, abs(e.time)):
            raise ValueError(f"t={t} is a collision time; the reflection rate is undefined there")
    b = path.b
    n = len(b)
    seg = path._segment(t)
    v = seg.velocities()
    kappa = [v[i] - b[i] for i in range(n)]
    ell = _total(abs(k) for k in kappa)
    owner = {}
    for c in seg.clusters:
        for i in range(c.lo, c.hi + 1):
            owner[i] = c
    gamma = [0 * ell] * (n + 1)
    if ell != 0:
        for i in range(2, n + 1):
            lo = owner[i].lo
            gamma[i - 1] = _total([b[j - 1] - v[i - 1] for j in range(lo, i)] or [0 * ell]) / ell

    # postconditions of the reflected-equation construction
    tol = 1e-9 * (1 + max(abs(x) for x in b))
    assert gamma[0] == 0 and gamma[n] == 0
    xi = path.at(t)
    for i in range(2, n + 1):
        assert gamma[i - 1] >= -tol, (i, gamma)
        if gamma[i - 1] > tol:
            assert owner[i] is owner[i - 1] and xi[i - 1] == xi[i - 2]
    for i in range(n):
        assert abs(kappa[i] - (gamma[i] - gamma[i + 1]) * ell) <= tol
    return kappa, gamma


def check_flow_property(
    y0: Sequence, b: Sequence, delta, horizon, samples: int = 201, atol: float = 1e-12
) -> bool:
    """Restarting from ``xi(delta)`` reproduces ``xi(delta + s)``."""
    full = sticky_dynamics(y0, b, horizon)
    restart = sticky_dynamics(full.at(delta), b, horizon - delta)
    s_grid = list(np.linspace(0.0, horizon - delta, samples))
    s_grid += [e.time - delta for e in full.events if e.time > delta]
    for s in sorted(s_grid):
        a = full.at(delta + s)
        c = restart.at(s)
        if max(abs(float(x) - float(y)) for x, y in zip(a, c)) > atol * (1 + max(abs(float(x)) for x in a)):
            return False
    return True


def check_contractivity(
    y0: Sequence, y0_other: Sequence, b: Sequence, grid: Sequence[float], atol: float = 1e-12
) -> bool:
    """L1 distance between two sticky paths never exceeds the initial one."""
    horizon = grid[-1]
    p = sticky_dynamics(y0, b, horizon)
    q = sticky_dynamics(y0_other, b, horizon)
    d0 = sum(abs(float(a) - float(c)) for a, c in zip(y0, y0_other))
    for t in grid:
        d = sum(abs(float(a) - float(c)) for a, c in zip(p.at(t), q.at(t)))
        if d > d0 + atol:
            return False
    return True


def cluster_is_stable(b: Sequence, lo: int, hi: int, slack: float = 1e-12) -> bool:
    """Every left part of ``b[lo..hi]`` is on average at least as fast as the right part."""
    members = list(b[lo - 1 : hi])
    m = len(members)
    for split in range(1, m):
        left = _total(members[:split]) / split
        right = _total(members[split:]) / (m - split)
        if left < right - slack:
            return False
    return True


def as_fractions(values: Sequence) -> list[Fraction]:
    return [Fraction(v) for v in values]
