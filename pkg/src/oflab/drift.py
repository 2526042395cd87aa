"""Order-based drifts ``b: S_n -> R^n`` and their stability analysis."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .ordering import (
    Permutation,
    all_permutations,
    as_word,
    project_centered,
    sigma_of,
    word_str,
)

MAX_TABLE_N = 7
SC_SLACK = 1e-12


@dataclass(frozen=True)
class DriftSpec:
    """Velocity of every particle in every ordering.

    ``kind == "general"`` stores the full table keyed by permutation word;
    ``kind == "rank_based"`` stores only the rank vector and generates
    ``b(sigma)`` on demand from ``b_{sigma(i)}(sigma) = rank[i]``.
    """

    n: int
    kind: str
    table: Mapping[Permutation, tuple[float, ...]] = field(default_factory=dict)
    rank: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.kind == "rank_based":
            if self.rank is None or len(self.rank) != self.n:
                raise ValueError("rank_based spec needs a rank vector of length n")
            if not all(math.isfinite(v) for v in self.rank):
                raise ValueError("rank vector must be finite")
        elif self.kind == "general":
            if self.n > MAX_TABLE_N:
                raise ValueError(
                    f"general tables are limited to n <= {MAX_TABLE_N}; use rank_based"
                )
            expected = set(all_permutations(self.n))
            got = set(self.table)
            if got != expected:
                missing = sorted(word_str(p) for p in expected - got)
                extra = sorted(word_str(p) for p in got - expected)
                raise ValueError(f"incomplete drift table: missing={missing} extra={extra}")
            for perm, vec in self.table.items():
                if len(vec) != self.n or not all(math.isfinite(v) for v in vec):
                    raise ValueError(f"bad velocity vector for {word_str(perm)}: {vec}")
        else:
            raise ValueError(f"unknown drift kind {self.kind!r}")

    def velocity(self, perm: Sequence[int]) -> np.ndarray:
        """``b(sigma)`` indexed by particle."""
        perm = tuple(perm)
        if self.kind == "rank_based":
            out = np.empty(self.n)
            out[np.asarray(perm) - 1] = self.rank
            return out
        return np.asarray(self.table[perm], dtype=float)

    def at(self, x: Sequence[float]) -> np.ndarray:
        """Drift evaluated at a position, ``b(Sigma x)``."""
        return self.velocity(sigma_of(x))

    def rank_listing(self, perm: Sequence[int]) -> np.ndarray:
        """Velocities listed from leftmost to rightmost particle."""
        return self.velocity(perm)[np.asarray(perm) - 1]

    def table_array(self) -> np.ndarray:
        """Dense ``(n!, n)`` table in lexicographic permutation order."""
        perms = all_permutations(self.n)
        return np.array([self.velocity(p) for p in perms], dtype=float)

    def permutations(self) -> list[Permutation]:
        return all_permutations(self.n)

    def to_dict(self) -> dict:
        if self.kind == "rank_based":
            return {"n": self.n, "kind": "rank_based", "b": list(self.rank)}
        return {
            "n": self.n,
            "kind": "general",
            "table": {word_str(p): list(self.table[p]) for p in self.permutations()},
        }


def rank_based(b: Sequence[float]) -> DriftSpec:
    b = tuple(float(v) for v in b)
    return DriftSpec(n=len(b), kind="rank_based", rank=b)


def general(table: Mapping) -> DriftSpec:
    """Build a full-table spec; keys may be words (``"213"``) or tuples."""
    parsed = {as_word(k): tuple(float(v) for v in vec) for k, vec in table.items()}
    if not parsed:
        raise ValueError("empty drift table")
    n = len(next(iter(parsed)))
    return DriftSpec(n=n, kind="general", table=parsed)


def two_particle(b12: Sequence[float], b21: Sequence[float]) -> DriftSpec:
    return general({(1, 2): b12, (2, 1): b21})


def from_dict(data: Mapping) -> DriftSpec:
    """Parse the drift JSON schema."""
    kind = data.get("kind", "general")
    if kind == "rank_based":
        if "b" not in data:
            raise ValueError("rank_based drift needs field 'b'")
        spec = rank_based(data["b"])
    elif kind == "general":
        if "table" not in data:
            raise ValueError("general drift needs field 'table'")
        spec = general(data["table"])
    else:
        raise ValueError(f"unknown drift kind {kind!r}")
    if "n" in data and int(data["n"]) != spec.n:
        raise ValueError(f"declared n={data['n']} but table has n={spec.n}")
    return spec


def to_general(spec: DriftSpec) -> DriftSpec:
    if spec.kind == "general":
        return spec
    return DriftSpec(
        n=spec.n,
        kind="general",
        table={p: tuple(spec.velocity(p)) for p in spec.permutations()},
    )


def projected_drift(spec: DriftSpec) -> DriftSpec:
    """``b^Pi(sigma) = Pi b(sigma)``: drift of the centered system."""
    if spec.kind == "rank_based":
        return rank_based(project_centered(spec.rank))
    return DriftSpec(
        n=spec.n,
        kind="general",
        table={p: tuple(project_centered(v)) for p, v in spec.table.items()},
    )


def shifted(spec: DriftSpec, c: float) -> DriftSpec:
    """Add ``c`` to every entry of every velocity vector."""
    if spec.kind == "rank_based":
        return rank_based([v + c for v in spec.rank])
    return general({p: [v + c for v in vec] for p, vec in spec.table.items()})


@dataclass
class StabilityReport:
    satisfies_sc: bool
    satisfies_ssc: bool
    b_bar: float
    violations: list[tuple[Permutation, int, float, float]]

    def to_dict(self) -> dict:
        return {
            "satisfies_sc": self.satisfies_sc,
            "satisfies_ssc": self.satisfies_ssc,
            "b_bar": self.b_bar,
            "violations": [
                {"sigma": word_str(s), "i": i, "left_avg": left, "right_avg": right}
                for s, i, left, right in self.violations
            ],
        }


def _orderings_to_check(spec: DriftSpec) -> list[Permutation]:
    # every ordering has the same rank listing in the rank-based case
    if spec.kind == "rank_based" and spec.n > MAX_TABLE_N:
        return [tuple(range(1, spec.n + 1))]
    return spec.permutations()


def _sc_violations(spec: DriftSpec) -> list[tuple[Permutation, int, float, float]]:
    violations = []
    for perm in _orderings_to_check(spec):
        listing = spec.rank_listing(perm)
        total = listing.sum()
        prefix = 0.0
        for i in range(1, spec.n):
            prefix += listing[i - 1]
            left = prefix / i
            right = (total - prefix) / (spec.n - i)
            if left < right - SC_SLACK:
                violations.append((perm, i, float(left), float(right)))
    return violations


def ssc_margin(spec: DriftSpec) -> float:
    """Smallest prefix sum of the centered rank listings over all orderings."""
    proj = projected_drift(spec)
    best = math.inf
    for perm in _orderings_to_check(spec):
        prefix = np.cumsum(proj.rank_listing(perm))[:-1]
        best = min(best, float(prefix.min()))
    return best


def check_sc(spec: DriftSpec) -> StabilityReport:
    if spec.n < 2:
        raise ValueError("stability needs n >= 2")
    violations = _sc_violations(spec)
    b_bar = ssc_margin(spec)
    return StabilityReport(
        satisfies_sc=not violations,
        satisfies_ssc=b_bar > 0,
        b_bar=b_bar,
        violations=violations,
    )


def check_ssc(spec: DriftSpec) -> StabilityReport:
    # same computation; the SSC verdict is carried by b_bar
    return check_sc(spec)


class TwoParticleClass(enum.Enum):
    CONV_CONV = "ConvConv"
    CONV_DIV = "ConvDiv"
    DIV_CON = "DivCon"
    DIV_DIV = "DivDiv"
    DEGENERATE_ZERO = "DegenerateZero"


def two_particle_rates(spec: DriftSpec) -> tuple[float, float]:
    """``(b_minus, b_plus)``: relative velocity ``b_1 - b_2`` in (12) and (21)."""
    if spec.n != 2:
        raise ValueError(f"two-particle classification needs n = 2, got {spec.n}")
    b12 = spec.velocity((1, 2))
    b21 = spec.velocity((2, 1))
    return float(b12[0] - b12[1]), float(b21[0] - b21[1])


def classify_two_particle(spec: DriftSpec) -> tuple[TwoParticleClass, float, float]:
    b_minus, b_plus = two_particle_rates(spec)
    if b_minus == 0 and b_plus == 0:
        cls = TwoParticleClass.DEGENERATE_ZERO
    elif b_minus >= 0 and b_plus <= 0:
        cls = TwoParticleClass.CONV_CONV
    elif b_minus < 0 and b_plus > 0:
        cls = TwoParticleClass.DIV_DIV
    elif b_minus >= 0:
        cls = TwoParticleClass.CONV_DIV
    else:
        cls = TwoParticleClass.DIV_CON
    return cls, b_minus, b_plus


def lyapunov_drift(spec: DriftSpec, z: Sequence[float]) -> float:
    """``sum_i z_i b^Pi_i(Sigma z)`` for a centered point ``z``."""
    z = np.asarray(z, dtype=float)
    return float(z @ project_centered(spec.at(z)))


def counterexample_3p(lam: Sequence[float], eta: Sequence[float]) -> DriftSpec:
    """Three-particle family whose (123) ordering breaks SC.

    ``b(123) = lam`` and particle ``i`` moves at ``eta[i]`` in (132); every
    other ordering gets the rank-based velocities (1, 0, -1).
    """
    table = {}
    for perm in all_permutations(3):
        vec = np.empty(3)
        vec[np.asarray(perm) - 1] = (1.0, 0.0, -1.0)
        table[perm] = tuple(vec)
    table[(1, 2, 3)] = tuple(float(v) for v in lam)
    table[(1, 3, 2)] = tuple(float(v) for v in eta)
    return general(table)


def random_ssc_spec(n: int, rng: np.random.Generator, margin: float = 0.05) -> DriftSpec:
    """Random general-kind spec satisfying SSC.

    Each ordering gets its own strictly decreasing rank listing plus an
    arbitrary common shift, so every centered prefix sum is positive.
    """
    table = {}
    for perm in all_permutations(n):
        steps = rng.uniform(margin, 2.0, size=n - 1)
        listing = np.concatenate([[0.0], -np.cumsum(steps)])
        listing += rng.uniform(-3.0, 3.0)
        vec = np.empty(n)
        vec[np.asarray(perm) - 1] = listing
        table[perm] = tuple(vec)
    return general(table)


def random_spec(n: int, rng: np.random.Generator, scale: float = 2.0) -> DriftSpec:
    table = {perm: tuple(rng.uniform(-scale, scale, size=n)) for perm in all_permutations(n)}
    return general(table)
