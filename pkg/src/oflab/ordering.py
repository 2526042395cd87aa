"""Orderings of particle configurations.

Permutations are stored as 1-based words: ``(2, 3, 1)`` means particle 2 is
leftmost, then particle 3, then particle 1.
"""
from __future__ import annotations

import itertools
import math
from typing import Iterable, Sequence

import numpy as np

Permutation = tuple[int, ...]


def as_word(perm: Sequence[int] | str) -> Permutation:
    """Parse ``"231"`` or ``[2, 3, 1]`` into a validated permutation word."""
    if isinstance(perm, str):
        word = tuple(int(c) for c in perm)
    else:
        word = tuple(int(c) for c in perm)
    if sorted(word) != list(range(1, len(word) + 1)):
        raise ValueError(f"not a permutation of 1..{len(word)}: {perm!r}")
    return word


def word_str(perm: Sequence[int]) -> str:
    """Serialize a permutation as its word, e.g. ``"231"``."""
    if len(perm) > 9:
        return "-".join(str(p) for p in perm)
    return "".join(str(p) for p in perm)


def inverse(perm: Sequence[int]) -> Permutation:
    inv = [0] * len(perm)
    for i, p in enumerate(perm, start=1):
        inv[p - 1] = i
    return tuple(inv)


def compose(a: Sequence[int], b: Sequence[int]) -> Permutation:
    """Return ``a o b``, i.e. ``i -> a(b(i))``."""
    return tuple(a[b[i] - 1] for i in range(len(b)))


def all_permutations(n: int) -> list[Permutation]:
    """All of S_n in lexicographic order of their words."""
    return [tuple(p) for p in itertools.permutations(range(1, n + 1))]


def perm_index(perm: Sequence[int]) -> int:
    """Lexicographic rank of ``perm`` among all permutations of its length."""
    n = len(perm)
    idx = 0
    remaining = list(range(1, n + 1))
    for pos, p in enumerate(perm):
        j = remaining.index(p)
        idx += j * math.factorial(n - pos - 1)
        remaining.pop(j)
    return idx


def sigma_of(x: Sequence[float]) -> Permutation:
    """Ordering permutation of ``x``, lexicographically smallest on ties.

    A stable sort keyed by (value, index) gives exactly the smallest word
    among all permutations that sort ``x``.
    """
    xs = [float(v) for v in x]
    if not all(np.isfinite(xs)):
        raise ValueError("positions must be finite")
    order = sorted(range(len(xs)), key=lambda i: (xs[i], i))
    return tuple(i + 1 for i in order)


def _tie_blocks(x: Sequence[float], tol: float) -> list[list[int]]:
    """Group the sorted indices of ``x`` into runs of tied coordinates."""
    order = sigma_of(x)
    blocks: list[list[int]] = [[order[0]]]
    for prev, cur in zip(order, order[1:]):
        if abs(x[cur - 1] - x[prev - 1]) <= tol:
            blocks[-1].append(cur)
        else:
            blocks.append([cur])
    return blocks


def sigma_set(x: Sequence[float], tol: float = 0.0) -> set[Permutation]:
    """Every permutation sorting ``x`` when coordinates within ``tol`` count as equal.

    Ties are chained between sorted neighbours, so with ``tol > 0`` a run
    ``a, a+tol, a+2*tol`` forms one tied block.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    blocks = _tie_blocks(x, tol)
    out: set[Permutation] = set()
    for choice in itertools.product(*(itertools.permutations(b) for b in blocks)):
        out.add(tuple(itertools.chain.from_iterable(choice)))
    return out


def in_coincidence_set(x: Sequence[float], tol: float = 0.0) -> bool:
    """True if two coordinates of ``x`` lie within ``tol`` of each other."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    xs = np.sort(np.asarray(x, dtype=float))
    if xs.size < 2:
        return False
    return bool(np.any(np.diff(xs) <= tol))


def project_centered(x: Iterable[float]) -> np.ndarray:
    """Orthogonal projection onto the zero-sum hyperplane."""
    arr = np.asarray(list(x) if not isinstance(x, np.ndarray) else x, dtype=float)
    return arr - arr.mean()


def apply(perm: Sequence[int], x: Sequence[float]) -> np.ndarray:
    """Gather ``(x[perm(1)], ..., x[perm(n)])``."""
    idx = np.asarray(perm, dtype=np.intp) - 1
    return np.asarray(x, dtype=float)[idx]
