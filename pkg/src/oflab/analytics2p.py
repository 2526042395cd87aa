"""Closed-form small-noise limits for two particles."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .drift import DriftSpec, TwoParticleClass, classify_two_particle

Branch = Union[float, Callable[[float], float]]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


def bernoulli_weight(b_minus: float, b_plus: float) -> float:
    """Probability that a diverging pair started together keeps ordering (12).

    The limit path is then ``x^-(t) = x0 + b(12) t``; with the complementary
    probability ``b_plus / (b_plus - b_minus)`` it is ``x^+`` (ordering (21)).
    """
    if not (b_minus < 0 < b_plus):
        raise ValueError(f"need b_minus < 0 < b_plus, got ({b_minus}, {b_plus})")
    return -b_minus / (b_plus - b_minus)


def occupation_limit(b_minus: float, b_plus: float) -> float:
    """Limit fraction of time spent in (12) for a converging pair."""
    if not (b_minus >= 0 >= b_plus and b_minus - b_plus > 0):
        raise ValueError("need b_minus >= 0 >= b_plus with b_minus > b_plus")
    return -b_plus / (b_minus - b_plus)


def cluster_velocity2(spec: DriftSpec) -> float:
    """Deterministic velocity of a converging two-particle cluster."""
    cls, b_minus, b_plus = classify_two_particle(spec)
    if b_minus - b_plus == 0:
        raise ValueError("degenerate pair: b_minus == b_plus, the cluster velocity is random")
    if cls is not TwoParticleClass.CONV_CONV:
        raise ValueError(f"cluster velocity needs a converging pair, got {cls.value}")
    b12 = spec.velocity((1, 2))
    b21 = spec.velocity((2, 1))
    v = (b21[1] * b12[0] - b12[1] * b21[0]) / (b12[0] - b12[1] - b21[0] + b21[1])
    rho = occupation_limit(b_minus, b_plus)
    check = rho * b12[0] + (1 - rho) * b21[0]
    assert math.isclose(v, check, rel_tol=1e-9, abs_tol=1e-12), (v, check)
    return float(v)


@dataclass
class TwoParticleLimit:
    cls: TwoParticleClass
    b_minus: float
    b_plus: float
    x0: tuple[float, float]
    b12: tuple[float, float]
    b21: tuple[float, float]
    rho: float | None  # time fraction in (12); Bernoulli parameter for diverging pairs
    velocity: float | None = None

    def x_minus(self, t: float) -> np.ndarray:
        return np.asarray(self.x0) + np.asarray(self.b12) * t

    def x_plus(self, t: float) -> np.ndarray:
        return np.asarray(self.x0) + np.asarray(self.b21) * t


def two_particle_limit(spec: DriftSpec, x0: Sequence[float] = (0.0, 0.0)) -> TwoParticleLimit:
    """Limit description for two particles starting at the same point."""
    cls, bm, bp = classify_two_particle(spec)
    rho = None
    velocity = None
    if cls is TwoParticleClass.DIV_DIV:
        rho = bernoulli_weight(bm, bp)
    elif cls is TwoParticleClass.CONV_DIV:
        rho = 0.0
    elif cls is TwoParticleClass.DIV_CON:
        rho = 1.0
    elif cls is TwoParticleClass.CONV_CONV and bm - bp > 0:
        rho = occupation_limit(bm, bp)
        velocity = cluster_velocity2(spec)
    return TwoParticleLimit(
        cls, bm, bp, tuple(x0),
        tuple(spec.velocity((1, 2))), tuple(spec.velocity((2, 1))),
        rho, velocity,
    )


def limit_path_z(z0: float, b_minus: float, b_plus: float, grid: Sequence[float]) -> np.ndarray:
    """Zero-noise limit of the reduced process ``Z = X1 - X2`` on ``grid``."""
    t = np.asarray(grid, dtype=float)
    if z0 < 0:
        # Z -> -Z swaps the half-lines and flips the drifts
        return -limit_path_z(-z0, -b_plus, -b_minus, t)
    if z0 == 0:
        if b_minus < 0 < b_plus:
            raise ValueError("from 0 a diverging pair has a random limit; no single path exists")
        if b_plus > 0:
            return b_plus * t
        if b_minus < 0:
            return b_minus * t
        return np.zeros_like(t)
    t_star = z0 / (-b_plus) if b_plus < 0 else math.inf
    before = z0 + b_plus * t
    if math.isinf(t_star):
        return before
    after = np.zeros_like(t) if b_minus >= 0 else b_minus * (t - t_star)
    return np.where(t < t_star, before, after)


# -- hitting probability ------------------------------------------------------


def _as_function(a: Branch) -> tuple[Callable[[float], float], bool]:
    if callable(a):
        return a, False
    c = float(a)
    return (lambda _y: c), True


def _first_zero(f: Callable[[float], float], sign: float, step: float = 1e-6, cap: float = 1.0) -> float:
    """First ``y`` in ``(0, cap]`` where ``sign * f(sign * y)`` stops being positive."""
    ys = np.arange(step, cap + step / 2, step)
    try:
        vals = np.asarray(f(sign * ys), dtype=float)
        if vals.shape != ys.shape:
            raise TypeError
    except (TypeError, ValueError):
        vals = np.array([f(sign * y) for y in ys])
    bad = np.nonzero(sign * vals <= 0)[0]
    if bad.size == 0:
        return cap
    hi = ys[bad[0]]
    lo = hi - step
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if sign * f(sign * mid) > 0:
            lo = mid
        else:
            hi = mid
    return hi


def _primitive(a: Callable[[float], float], y: float) -> float:
    """``int_0^y a`` by 20-point Gauss-Legendre."""
    if y == 0:
        return 0.0
    nodes = 0.5 * y * (_GL_NODES + 1.0)
    return 0.5 * y * float(sum(w * a(float(s)) for w, s in zip(_GL_WEIGHTS, nodes)))


def _simpson(f, a, fa, b, fb, rtol, depth):
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6 * (fa + 4 * fm + fb)
    return _simpson_rec(f, a, fa, m, fm, b, fb, whole, rtol, depth)


def _simpson_rec(f, a, fa, m, fm, b, fb, whole, rtol, depth):
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) / 6 * (fa + 4 * flm + fm)
    right = (b - m) / 6 * (fm + 4 * frm + fb)
    total = left + right
    if depth <= 0 or abs(total - whole) <= 15 * rtol * abs(total):
        return total + (total - whole) / 15
    return _simpson_rec(f, a, fa, lm, flm, m, fm, left, rtol, depth - 1) + _simpson_rec(
        f, m, fm, rm, frm, b, fb, right, rtol, depth - 1
    )


def _log_integral(phi: Callable[[float], float], length: float, scale: float, rtol: float) -> float:
    """``log int_0^length exp(phi(y)) dy`` for ``phi`` decreasing from ``phi(0) = 0``.

    The range is cut into geometric pieces towards 0 (where the mass sits
    when ``scale`` is small); each piece is integrated with its exponent
    shifted by the piece maximum and the pieces are combined in log space.
    """
    edges = [length]
    while edges[-1] > 1e-6 * scale and len(edges) < 200:
        edges.append(edges[-1] / 2)
    edges.append(0.0)
    edges.reverse()
    logs = []
    for lo, hi in zip(edges, edges[1:]):
        shift = max(phi(lo), phi(hi), phi(0.5 * (lo + hi)))
        if logs and shift + math.log(hi - lo) < max(logs) - 60:
            break  # phi is decreasing, so every remaining piece is negligible too

        def g(y, shift=shift):
            return math.exp(phi(y) - shift)

        piece = _simpson(g, lo, g(lo), hi, g(hi), rtol, 50)
        if piece > 0:
            logs.append(shift + math.log(piece))
    top = max(logs)
    return top + math.log(math.fsum(math.exp(v - top) for v in logs))


def hitting_prob(a_minus: Branch, a_plus: Branch, delta: float, eps: float, rtol: float = 1e-11) -> float:
    """Probability that the process started at 0 exits ``(-delta, delta)`` at ``+delta``.

    Branches may be constants or callables (``a_minus`` on ``[-delta, 0]``,
    ``a_plus`` on ``[0, delta]``).
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    fm, const_m = _as_function(a_minus)
    fp, const_p = _as_function(a_plus)
    if not fm(0.0) < 0 < fp(0.0):
        raise ValueError("need a_minus(0) < 0 < a_plus(0)")
    bound = min(
        1.0 if const_p else _first_zero(fp, 1.0),
        1.0 if const_m else _first_zero(fm, -1.0),
    )
    if not 0 < delta < bound:
        raise ValueError(f"need 0 < delta < {bound}")

    if const_p:
        cp = fp(0.0)
        phi_p = lambda y: -cp * y / (2 * eps)  # noqa: E731
    else:
        phi_p = lambda y: -_primitive(fp, y) / (2 * eps)  # noqa: E731
    if const_m:
        cm = fm(0.0)
        phi_m = lambda y: cm * y / (2 * eps)  # noqa: E731
    else:
        # exponent (1/2eps) int_{-y}^0 a_minus, written on y in [0, delta]
        phi_m = lambda y: _primitive(lambda s: fm(-s), y) / (2 * eps)  # noqa: E731
    scale_p = 2 * eps / abs(fp(0.0))
    scale_m = 2 * eps / abs(fm(0.0))
    log_n = _log_integral(phi_p, delta, scale_p, rtol)
    log_d = _log_integral(phi_m, delta, scale_m, rtol)
    return 1.0 / (1.0 + math.exp(log_n - log_d))


def hitting_prob_constant(c_minus: float, c_plus: float, delta: float, eps: float) -> float:
    """Exact value for constant branches ``a_plus = c_plus > 0``, ``a_minus = -c_minus < 0``."""
    n = (2 * eps / c_plus) * -math.expm1(-c_plus * delta / (2 * eps))
    d = (2 * eps / c_minus) * -math.expm1(-c_minus * delta / (2 * eps))
    return 1.0 / (1.0 + n / d)


def laplace_hitting_time(z0: float, b_plus: float, eps: float, alpha: float) -> float:
    """``E exp(-alpha tau)`` for the first time the reduced process hits 0 from ``z0 > 0``."""
    if not z0 > 0:
        raise ValueError("z0 must be positive")
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if not eps > 0:
        raise ValueError("eps must be positive")
    # same exponent as -b z/4eps - (z/2 sqrt eps) sqrt(b^2/4eps + 2 alpha),
    # arranged so the alpha = 0 cancellations are exact
    root = math.sqrt(b_plus * b_plus + 8 * alpha * eps)
    return math.exp(z0 * (-b_plus - root) / (4 * eps))


def pde_limit_u(u0: Callable[[float], float], t: float, z: float, b_minus: float, b_plus: float) -> float:
    """Zero-noise limit of the backward equation with discontinuous drift."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if b_minus < 0 < b_plus:
        if z > 0:
            return u0(z + b_plus * t)
        if z < 0:
            return u0(z + b_minus * t)
        return (b_plus * u0(b_plus * t) - b_minus * u0(b_minus * t)) / (b_plus - b_minus)
    if b_minus >= 0 >= b_plus:
        if z > -b_plus * t:
            return u0(z + b_plus * t)
        if z < -b_minus * t:
            return u0(z + b_minus * t)
        return u0(0.0)
    raise ValueError("no limit formula for a mixed converging/diverging pair")


def arcsine_cdf(x):
    """CDF of the Arcsine law on [0, 1]."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    return 2.0 / math.pi * np.arcsin(np.sqrt(x))


def ks_distance(samples: Sequence[float], cdf: Callable) -> float:
    """Kolmogorov-Smirnov distance between the empirical law of ``samples`` and ``cdf``."""
    x = np.sort(np.asarray(samples, dtype=float))
    m = x.size
    f = cdf(x)
    upper = np.searchsorted(x, x, side="right") / m - f
    lower = f - np.searchsorted(x, x, side="left") / m
    return float(max(upper.max(), lower.max()))
