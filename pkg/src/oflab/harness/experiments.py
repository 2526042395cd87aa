"""Named experiments. Each one simulates, compares against a closed form or
bound, writes CSV tables and SVG figures, and returns a :class:`Report`."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np
from scipy import stats

from .. import analytics2p as a2p
from .. import drift as dr
from ..ergodic import estimate_cone_measure, estimate_velocity, simulate_projected
from ..ordering import all_permutations, sigma_set, word_str
from ..sde import (
    SimConfig,
    exit_side_Z,
    final_orderings,
    hitting_time_Z,
    map_indexed,
    map_paths,
    run_path,
    simulate_Z2,
)
from ..sticky import initial_clusters, sticky_path
from .config import ConfigError, ExperimentConfig
from .plotting import emit_plot
from .report import Report, at_most, holds, within, write_csv


@dataclass
class Experiment:
    name: str
    summary: str
    func: Callable[["Context"], None]
    defaults: dict[str, Any] = field(default_factory=dict)


REGISTRY: dict[str, Experiment] = {}


def register(name: str, summary: str, **defaults):
    def deco(func):
        REGISTRY[name] = Experiment(name, summary, func, defaults)
        return func

    return deco


class Context:
    """Resolved settings plus artifact helpers for one experiment run."""

    def __init__(self, cfg: ExperimentConfig, exp: Experiment):
        d = exp.defaults
        self.cfg = cfg
        self.out: Path = cfg.output_dir
        self.drift: dr.DriftSpec | None = cfg.drift or d.get("drift")
        self.eps_ladder = cfg.eps_ladder or list(d.get("eps_ladder", []))
        self.T = cfg.T if cfg.T is not None else d.get("T")
        self.dt = cfg.dt if cfg.dt is not None else d.get("dt")
        self.paths = cfg.paths if cfg.paths is not None else d.get("paths", 1)
        self.seed = cfg.seed
        self.params = {**d.get("params", {}), **cfg.params}
        x0 = cfg.x0 if cfg.x0 is not None else d.get("x0")
        if x0 is None and self.drift is not None:
            x0 = (0.0,) * self.drift.n
        self.x0 = tuple(x0) if x0 is not None else None
        echo = cfg.echo()
        echo.update(
            drift=None if self.drift is None else self.drift.to_dict(),
            x0=None if self.x0 is None else list(self.x0),
            eps_ladder=self.eps_ladder, T=self.T, dt=self.dt, paths=self.paths,
            params=self.params,
        )
        self.report = Report(exp.name, echo)

    def need_drift(self) -> dr.DriftSpec:
        if self.drift is None:
            raise ConfigError(f"{self.report.experiment} needs a drift")
        return self.drift

    def csv(self, name: str, header, rows) -> None:
        write_csv(self.out / name, header, rows)
        self.report.artifacts.append(name)

    def plot(self, name: str, series, **kw) -> None:
        emit_plot(series, self.out / name, **kw)
        self.report.artifacts.append(name)


def _mean_se(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    m = math.fsum(v) / v.size
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return m, se


def _strictly_decreasing(values) -> bool:
    return all(a > b for a, b in zip(values, values[1:]))


# -- two particles -------------------------------------------------------------


@register(
    "two-particle-selection",
    "Diverging pair from a common start: frequency of each final ordering vs the selection weight",
    drift=dr.two_particle((-0.5, 0.5), (1.5, -1.5)),
    eps_ladder=[1e-3, 1e-4],
    T=0.01,
    dt=1e-6,
    paths=10000,
    params={"tol": 0.03},
)
def _two_particle_selection(ctx: Context) -> None:
    spec = ctx.need_drift()
    cls, bm, bp = dr.classify_two_particle(spec)
    if cls is not dr.TwoParticleClass.DIV_DIV:
        raise ConfigError(f"two-particle-selection needs a diverging pair, got {cls.value}")
    w12 = a2p.bernoulli_weight(bm, bp)
    rows = []
    for eps in ctx.eps_ladder:
        cfg = SimConfig(spec, ctx.x0, eps, ctx.T, ctx.dt, ctx.seed, ctx.paths)
        finals = final_orderings(cfg)
        p12 = sum(1 for p in finals if p == (1, 2)) / len(finals)
        se = math.sqrt(p12 * (1 - p12) / len(finals))
        tol = ctx.params.get("tol", 3 * se)
        ctx.report.add(within(f"P(12) at eps={eps:g}", p12, w12, tol))
        rows.append((eps, p12, 1 - p12, se, w12))
    ctx.report.info["weight_12"] = w12
    ctx.report.info["weight_21"] = 1 - w12
    ctx.csv("selection.csv", ["eps", "p12", "p21", "stderr", "weight12"], rows)
    eps = [r[0] for r in rows]
    ctx.plot(
        "selection.svg",
        [
            {"label": "empirical P(12)", "x": eps, "y": [r[1] for r in rows]},
            {"label": "selection weight", "x": eps, "y": [w12] * len(eps)},
        ],
        xlabel="eps", ylabel="probability", logx=True,
    )


@register(
    "two-particle-cluster",
    "Converging pair: cluster velocity and the sup-square bound on X1 - X2",
    drift=dr.two_particle((2.0, -1.0), (-3.0, 1.0)),
    eps_ladder=[1e-4],
    T=1.0,
    dt=1e-5,
    paths=300,
    params={"tol": 0.02},
)
def _two_particle_cluster(ctx: Context) -> None:
    spec = ctx.need_drift()
    v = a2p.cluster_velocity2(spec)
    x0 = np.asarray(ctx.x0)
    rows = []
    for eps in ctx.eps_ladder:
        cfg = SimConfig(spec, ctx.x0, eps, ctx.T, ctx.dt, ctx.seed, ctx.paths)

        def reduce(tr):
            vel = float((tr.states[-1] - x0).sum() / (2 * ctx.T))
            z = tr.states[:, 0] - tr.states[:, 1]
            return vel, float((z * z).max())

        res = map_paths(cfg, reduce)
        vel, se = _mean_se([r[0] for r in res])
        sup, _ = _mean_se([r[1] for r in res])
        bound = (8 * math.sqrt(2) + 4) * eps * ctx.T
        ctx.report.add(within(f"cluster velocity at eps={eps:g}", vel, v, ctx.params["tol"]))
        ctx.report.add(at_most(f"mean sup |Z|^2 at eps={eps:g}", sup, bound))
        rows.append((eps, vel, se, sup, bound))
    ctx.report.info["velocity_formula"] = v
    ctx.csv("cluster.csv", ["eps", "velocity", "stderr", "sup_z2", "bound"], rows)
    ctx.plot(
        "cluster.svg",
        [
            {"label": "mean sup |Z|^2", "x": [r[0] for r in rows], "y": [r[3] for r in rows]},
            {"label": "bound", "x": [r[0] for r in rows], "y": [r[4] for r in rows]},
        ],
        xlabel="eps", ylabel="sup |Z|^2", logx=True, logy=True,
    )


@register(
    "arcsine",
    "Driftless pair: law of the time fraction spent in (12) against the Arcsine law",
    drift=dr.two_particle((0.0, 0.0), (0.0, 0.0)),
    eps_ladder=[1.0],
    T=1.0,
    dt=1e-4,
    paths=10000,
    params={"ks_max": 0.02},
)
def _arcsine(ctx: Context) -> None:
    spec = ctx.need_drift()
    cls, _, _ = dr.classify_two_particle(spec)
    if cls is not dr.TwoParticleClass.DEGENERATE_ZERO:
        raise ConfigError("arcsine needs b_minus = b_plus = 0")
    steps = max(1, int(round(ctx.T / ctx.dt)))
    for eps in ctx.eps_ladder:

        def frac(i):
            run = run_path(spec, ctx.x0, eps, ctx.dt, steps, ctx.seed, i, record_every=steps)
            return run.counts[0] / steps  # ordering (12) is index 0

        samples = np.array(map_indexed(frac, ctx.paths))
        ks = a2p.ks_distance(samples, a2p.arcsine_cdf)
        ctx.report.add(at_most(f"KS distance at eps={eps:g}", ks, ctx.params["ks_max"]))
    grid = np.linspace(0, 1, 101)
    ecdf = np.searchsorted(np.sort(samples), grid, side="right") / samples.size
    cdf = a2p.arcsine_cdf(grid)
    ctx.csv("arcsine.csv", ["x", "empirical_cdf", "arcsine_cdf"], list(zip(grid, ecdf, cdf)))
    ctx.plot(
        "arcsine.svg",
        [
            {"label": "empirical", "x": grid, "y": ecdf},
            {"label": "arcsine", "x": grid, "y": cdf},
        ],
        xlabel="time fraction in (12)", ylabel="CDF",
    )


@register(
    "limit-path-z",
    "Reduced process from z0 != 0: sup distance to the zero-noise path along the eps ladder",
    eps_ladder=[1e-2, 1e-3, 1e-4],
    T=2.0,
    dt=1e-4,
    paths=200,
    params={"z0": 1.0, "b_minus": -2.0, "b_plus": -1.0},
)
def _limit_path_z(ctx: Context) -> None:
    z0, bm, bp = (float(ctx.params[k]) for k in ("z0", "b_minus", "b_plus"))
    if z0 == 0:
        raise ConfigError("limit-path-z needs z0 != 0")
    rows = []
    for eps in ctx.eps_ladder:

        def err(i):
            tr = simulate_Z2(bm, bp, z0, eps, ctx.T, ctx.dt, ctx.seed, i)
            ref = a2p.limit_path_z(z0, bm, bp, tr.times)
            return float(np.abs(tr.states[:, 0] - ref).max())

        m, se = _mean_se(map_indexed(err, ctx.paths))
        rows.append((eps, m, se))
    means = [r[1] for r in rows]
    ctx.report.add(holds("sup error decreases along eps_ladder", _strictly_decreasing(means), means[-1]))
    ctx.csv("limit_path_z.csv", ["eps", "mean_sup_error", "stderr"], rows)
    ctx.plot(
        "limit_path_z.svg",
        [{"label": "mean sup |Z - z|", "x": [r[0] for r in rows], "y": means}],
        xlabel="eps", ylabel="sup error", logx=True, logy=True,
    )


# -- rank-based and aggregation --------------------------------------------------


def _ladder_dt(ctx: Context, eps: float) -> float:
    if ctx.dt is not None:
        return ctx.dt
    return min(1e-3, ctx.params.get("dt_over_eps", 0.1) * eps)


@register(
    "rank-sticky",
    "Rank-based system: distance of the sorted process to sticky dynamics vs its bound",
    drift=dr.rank_based([2.0, 1.0, -1.0, -2.0]),
    eps_ladder=[1e-2, 1e-3, 1e-4],
    T=1.0,
    paths=1000,
    params={"dt_over_eps": 0.1, "ratio_factor": 3.0},
)
def _rank_sticky(ctx: Context) -> None:
    spec = ctx.need_drift()
    if spec.kind != "rank_based":
        raise ConfigError("rank-sticky needs a rank_based drift")
    n = spec.n
    y0 = sorted(ctx.x0)
    rows = []
    for eps in ctx.eps_ladder:
        dt = _ladder_dt(ctx, eps)
        cfg = SimConfig(spec, ctx.x0, eps, ctx.T, dt, ctx.seed, ctx.paths)
        xi = sticky_path(y0, list(spec.rank), np.arange(cfg.steps + 1) * dt)

        def reduce(tr):
            y = np.sort(tr.states, axis=1)
            return float(((y - xi) ** 2).sum(axis=1).max())

        m, se = _mean_se(map_paths(cfg, reduce))
        bound = (4 * math.sqrt(2 * n) + 2 * n) * eps * ctx.T
        ctx.report.add(at_most(f"mean sup |Y - xi|^2 at eps={eps:g}", m, bound))
        rows.append((eps, dt, m, se, bound))
    factor = ctx.params["ratio_factor"]
    for (e1, _, m1, _, _), (e2, _, m2, _, _) in zip(rows, rows[1:]):
        scaled = (m1 / m2) / (e1 / e2)
        ok = 1 / factor <= scaled <= factor
        ctx.report.add(holds(f"proportional to eps from {e1:g} to {e2:g}", ok, scaled, f"in [1/{factor:g}, {factor:g}]"))
    ctx.csv("rank_sticky.csv", ["eps", "dt", "mean_sup_sq", "stderr", "bound"], rows)
    ctx.plot(
        "rank_sticky.svg",
        [
            {"label": "mean sup |Y - xi|^2", "x": [r[0] for r in rows], "y": [r[2] for r in rows]},
            {"label": "bound", "x": [r[0] for r in rows], "y": [r[4] for r in rows]},
        ],
        xlabel="eps", ylabel="sup error", logx=True, logy=True,
    )


@register(
    "ordering-uniformity",
    "Diverging rank-based system from tied positions: final ordering uniform over the tie orderings",
    drift=dr.rank_based([-1.0, 0.0, 1.0]),
    eps_ladder=[1e-3],
    T=0.02,
    dt=1e-6,
    paths=6000,
    params={"p_min": 0.001, "tie_tol": 0.0},
)
def _ordering_uniformity(ctx: Context) -> None:
    spec = ctx.need_drift()
    if spec.kind != "rank_based":
        raise ConfigError("ordering-uniformity needs a rank_based drift")
    if any(a >= b for a, b in zip(spec.rank, spec.rank[1:])):
        ctx.report.info["warning"] = "rank vector is not strictly increasing; the system is not fully diverging"
    allowed = sorted(sigma_set(ctx.x0, ctx.params["tie_tol"]))
    for eps in ctx.eps_ladder:
        cfg = SimConfig(spec, ctx.x0, eps, ctx.T, ctx.dt, ctx.seed, ctx.paths)
        counts = Counter(final_orderings(cfg))
        outside = sum(c for p, c in counts.items() if p not in allowed)
        observed = [counts[p] for p in allowed]
        if len(allowed) > 1:
            pvalue = float(stats.chisquare(observed).pvalue)
        else:
            pvalue = 1.0
        ctx.report.add(holds(f"final orderings inside the tie set at eps={eps:g}", outside == 0, outside, "0"))
        ctx.report.add(
            holds(f"chi-square p-value at eps={eps:g}", pvalue > ctx.params["p_min"], pvalue, f"> {ctx.params['p_min']:g}")
        )
    expected = ctx.paths / len(allowed)
    ctx.csv("orderings.csv", ["sigma", "count", "expected"], [(word_str(p), counts[p], expected) for p in allowed])
    ctx.plot(
        "orderings.svg",
        [
            {"label": "count", "x": list(range(len(allowed))), "y": observed, "kind": "scatter"},
            {"label": "uniform", "x": list(range(len(allowed))), "y": [expected] * len(allowed)},
        ],
        xlabel="ordering (lexicographic index)", ylabel="count",
    )


@register(
    "aggregation",
    "Stable drift from a common start: mean sup of the squared centered positions vs its bound",
    drift=dr.rank_based([1.0, 0.0, -1.0]),
    eps_ladder=[1e-3],
    T=1.0,
    dt=1e-4,
    paths=1000,
)
def _aggregation(ctx: Context) -> None:
    spec = ctx.need_drift()
    if len(set(ctx.x0)) != 1:
        raise ConfigError("aggregation starts from a common position")
    sc = dr.check_sc(spec)
    ctx.report.add(holds("drift satisfies SC", sc.satisfies_sc, sc.b_bar))
    n = spec.n
    rows = []
    for eps in ctx.eps_ladder:
        cfg = SimConfig(spec, ctx.x0, eps, ctx.T, ctx.dt, ctx.seed, ctx.paths)

        def reduce(tr):
            z = tr.states - tr.states.mean(axis=1, keepdims=True)
            return float((z * z).sum(axis=1).max())

        m, se = _mean_se(map_paths(cfg, reduce))
        bound = (4 * math.sqrt(2) + 2) * (n - 1) * eps * ctx.T
        ctx.report.add(at_most(f"mean sup |Z|^2 at eps={eps:g}", m, bound))
        rows.append((eps, m, se, bound))
    ctx.csv("aggregation.csv", ["eps", "mean_sup_sq", "stderr", "bound"], rows)
    ctx.plot(
        "aggregation.svg",
        [
            {"label": "mean sup |Z|^2", "x": [r[0] for r in rows], "y": [r[1] for r in rows]},
            {"label": "bound", "x": [r[0] for r in rows], "y": [r[3] for r in rows]},
        ],
        xlabel="eps", ylabel="sup |Z|^2", logx=True, logy=True,
    )


@register(
    "ergodic-velocity",
    "Cluster velocity from the long-run cone occupancy, cross-checked with sticky dynamics and small noise",
    drift=dr.rank_based([3.0, 1.0, -1.0]),
    eps_ladder=[1e-3],
    T=1e4,
    dt=1e-3,
    paths=200,
    params={
        "burn_in": 0.1,
        "tol": 0.05,
        "spread_max": 0.05,
        "direct_T": 1.0,
        "direct_dt": 1e-4,
    },
)
def _ergodic_velocity(ctx: Context) -> None:
    spec = ctx.need_drift()
    sc = dr.check_sc(spec)
    if not sc.satisfies_ssc:
        ctx.report.info["warning"] = "drift does not satisfy SSC"
    run = simulate_projected(spec, ctx.T, ctx.dt, ctx.seed)
    mu = estimate_cone_measure(run, ctx.params["burn_in"])
    est = estimate_velocity(spec, mu)
    tol = ctx.params["tol"]
    ctx.report.add(at_most("velocity spread over particles", est.spread, ctx.params["spread_max"]))
    if spec.kind == "rank_based":
        state = initial_clusters([0.0] * spec.n, list(spec.rank))
        if len(state.clusters) == 1:
            v_sticky = float(state.clusters[0].velocity)
            # the particle average is exact for rank-based drifts; test the worst particle
            worst = max(est.v_by_index, key=lambda v: abs(v - v_sticky))
            ctx.report.add(within("ergodic velocity vs sticky cluster velocity", worst, v_sticky, tol))
            ctx.report.info["sticky_velocity"] = v_sticky
    for eps in ctx.eps_ladder:
        T = ctx.params["direct_T"]
        cfg = SimConfig(spec, (0.0,) * spec.n, eps, T, ctx.params["direct_dt"], ctx.seed, ctx.paths)
        slope, se = _mean_se(map_paths(cfg, lambda tr: float(tr.states[-1][0] / T), record_every=cfg.steps))
        ctx.report.add(within(f"direct slope of X1 at eps={eps:g}", slope, est.v, tol))
        ctx.report.info[f"direct_slope_stderr_eps={eps:g}"] = se
    ctx.report.info["velocity"] = est.to_dict()
    mu.to_csv(ctx.out / "cone_weights.csv")
    ctx.report.artifacts.append("cone_weights.csv")
    perms = all_permutations(spec.n)
    ctx.plot(
        "cone_weights.svg",
        [{"label": "weight", "x": list(range(len(perms))), "y": [mu.weights[p] for p in perms], "kind": "scatter"}],
        xlabel="ordering (lexicographic index)", ylabel="time fraction",
    )


@register(
    "counterexample-3p",
    "Three particles violating SC that still aggregate: occupancy ratio and shrinking spread",
    eps_ladder=[1e-2, 1e-3, 1e-4],
    T=1.0,
    paths=200,
    params={"lam": [-0.5, 1.0, -1.0], "eta": [2.0, -1.0, 1.0], "rho_tol": 0.05, "dt_over_eps": 0.1},
)
def _counterexample(ctx: Context) -> None:
    lam = [float(v) for v in ctx.params["lam"]]
    eta = [float(v) for v in ctx.params["eta"]]
    if not (lam[1] > lam[2] and eta[2] > eta[1]):
        raise ConfigError("need lam2 > lam3 and eta3 > eta2 so the pair (2,3) converges")
    spec = dr.counterexample_3p(lam, eta)
    sc = dr.check_sc(spec)
    ctx.report.add(holds("SC fails", not sc.satisfies_sc, len(sc.violations)))
    rho = (eta[2] - eta[1]) / (lam[1] - lam[2] + eta[2] - eta[1])
    x0 = ctx.x0 or (0.0, 0.0, 0.0)
    rows = []
    for eps in ctx.eps_ladder:
        dt = _ladder_dt(ctx, eps)
        steps = max(1, int(round(ctx.T / dt)))

        def one(i):
            r = run_path(spec, x0, eps, dt, steps, ctx.seed, i, record_every=steps)
            return r.counts[:2], float(np.ptp(r.states[-1]))

        res = map_indexed(one, ctx.paths)
        c = sum(r[0] for r in res)
        rho_hat = float(c[0] / (c[0] + c[1])) if c.sum() else math.nan
        spread, se = _mean_se([r[1] for r in res])
        ctx.report.add(within(f"occupancy ratio at eps={eps:g}", rho_hat, rho, ctx.params["rho_tol"]))
        rows.append((eps, rho_hat, spread, se))
    spreads = [r[2] for r in rows]
    ctx.report.add(holds("spread at T decreases along eps_ladder", _strictly_decreasing(spreads), spreads[-1]))
    ctx.report.info["rho_formula"] = rho
    ctx.csv("counterexample.csv", ["eps", "rho", "spread", "spread_stderr"], rows)
    ctx.plot(
        "counterexample.svg",
        [{"label": "mean spread at T", "x": [r[0] for r in rows], "y": spreads}],
        xlabel="eps", ylabel="max - min", logx=True, logy=True,
    )


# -- exit problems -------------------------------------------------------------------


@register(
    "hitting-prob",
    "Exit side of the reduced process: quadrature vs closed form vs Monte Carlo, and the eps -> 0 limit",
    eps_ladder=[1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
    dt=1e-5,
    paths=10000,
    params={
        "a_minus": -2.0,
        "a_plus": 1.0,
        "delta_exponent": 0.75,
        "quad_rtol": 1e-8,
        "limit_tol": 1e-3,
        "mc_eps": 1e-2,
        "mc_delta": 0.1,
    },
)
def _hitting_prob(ctx: Context) -> None:
    am, ap = float(ctx.params["a_minus"]), float(ctx.params["a_plus"])
    if not am < 0 < ap:
        raise ConfigError("need a_minus < 0 < a_plus")
    rows = []
    for eps in ctx.eps_ladder:
        delta = eps ** ctx.params["delta_exponent"]
        q = a2p.hitting_prob(am, ap, delta, eps)
        exact = a2p.hitting_prob_constant(-am, ap, delta, eps)
        rel = abs(q - exact) / exact
        ctx.report.add(at_most(f"quadrature relative error at eps={eps:g}", rel, ctx.params["quad_rtol"]))
        rows.append((eps, delta, q, exact, rel))
    limit = ap / (ap - am)
    ctx.report.add(within(f"limit at eps={ctx.eps_ladder[-1]:g}", rows[-1][2], limit, ctx.params["limit_tol"]))
    eps, delta = ctx.params["mc_eps"], ctx.params["mc_delta"]
    sides = map_indexed(lambda i: exit_side_Z(am, ap, eps, ctx.dt, -delta, delta, ctx.seed, i), ctx.paths)
    p, se = _mean_se([1.0 if s > 0 else 0.0 for s in sides])
    exact = a2p.hitting_prob_constant(-am, ap, delta, eps)
    ctx.report.add(within(f"Monte Carlo at eps={eps:g} delta={delta:g}", p, exact, 3 * se + 2e-3))
    ctx.csv("hitting_prob.csv", ["eps", "delta", "quadrature", "closed_form", "rel_err"], rows)
    ctx.plot(
        "hitting_prob.svg",
        [
            {"label": "quadrature", "x": [r[0] for r in rows], "y": [r[2] for r in rows]},
            {"label": "limit", "x": [r[0] for r in rows], "y": [limit] * len(rows)},
        ],
        xlabel="eps", ylabel="P(exit at +delta)", logx=True,
    )


@register(
    "laplace",
    "Laplace transform of the hitting time of 0: closed form vs Monte Carlo",
    eps_ladder=[1e-2],
    dt=1e-4,
    paths=10000,
    params={"z0": 1.0, "b_plus": -1.0, "alpha": 1.0, "tol": 0.01, "T_max": 50.0},
)
def _laplace(ctx: Context) -> None:
    z0, bp, alpha = (float(ctx.params[k]) for k in ("z0", "b_plus", "alpha"))
    rows = []
    for eps in ctx.eps_ladder:
        formula = a2p.laplace_hitting_time(z0, bp, eps, alpha)
        taus = map_indexed(
            lambda i: hitting_time_Z(z0, 0.0, bp, eps, ctx.dt, ctx.params["T_max"], ctx.seed, i), ctx.paths
        )
        m, se = _mean_se([math.exp(-alpha * t) for t in taus])
        ctx.report.add(within(f"E exp(-alpha tau) at eps={eps:g}", m, formula, ctx.params["tol"]))
        rows.append((eps, alpha, formula, m, se))
        b = abs(bp) if bp != 0 else 1.0
        escape = a2p.laplace_hitting_time(z0, b, eps, 0.0)
        target = math.exp(-b * z0 / (2 * eps))
        ctx.report.add(
            holds(f"alpha=0 escape identity at eps={eps:g}", escape == target or abs(escape - target) <= 4e-16 * target,
                  escape, f"{target:.17g}")
        )
    ctx.csv("laplace.csv", ["eps", "alpha", "formula", "monte_carlo", "stderr"], rows)
    ctx.plot(
        "laplace.svg",
        [
            {"label": "Monte Carlo", "x": [r[0] for r in rows], "y": [r[3] for r in rows], "kind": "scatter"},
            {"label": "formula", "x": [r[0] for r in rows], "y": [r[2] for r in rows], "kind": "scatter"},
        ],
        xlabel="eps", ylabel="E exp(-alpha tau)", logx=True,
    )


@register(
    "coincidence",
    "Time spent with two particles within delta shrinks with delta",
    drift=dr.two_particle((0.0, 0.0), (0.0, 0.0)),
    eps_ladder=[1.0],
    T=1.0,
    dt=1e-4,
    paths=100,
    params={"deltas": [1e-2, 1e-3, 1e-4], "last_max": 0.01},
)
def _coincidence(ctx: Context) -> None:
    spec = ctx.need_drift()
    deltas = [float(d) for d in ctx.params["deltas"]]
    if any(a <= b for a, b in zip(deltas, deltas[1:])):
        raise ConfigError("deltas must be strictly decreasing")
    rows = []
    for eps in ctx.eps_ladder:
        cfg = SimConfig(spec, ctx.x0, eps, ctx.T, ctx.dt, ctx.seed, ctx.paths)

        def gaps(tr):
            s = np.sort(tr.states[:-1], axis=1)
            return np.diff(s, axis=1).min(axis=1)

        g = np.concatenate(map_paths(cfg, gaps))
        fracs = [float((g <= d).mean()) for d in deltas]
        ctx.report.add(holds(f"fraction decreasing in delta at eps={eps:g}", _strictly_decreasing(fracs), fracs[-1]))
        ctx.report.add(at_most(f"fraction at delta={deltas[-1]:g}, eps={eps:g}", fracs[-1], ctx.params["last_max"]))
        rows.extend((eps, d, f) for d, f in zip(deltas, fracs))
    ctx.csv("coincidence.csv", ["eps", "delta", "fraction"], rows)
    ctx.plot(
        "coincidence.svg",
        [{"label": f"eps={e:g}", "x": deltas, "y": [r[2] for r in rows if r[0] == e]} for e in ctx.eps_ladder],
        xlabel="delta", ylabel="time fraction", logx=True, logy=True,
    )


def run(cfg: ExperimentConfig) -> Report:
    """Execute ``cfg.experiment`` and write its artifacts under ``cfg.output_dir``."""
    if cfg.experiment not in REGISTRY:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}")
    exp = REGISTRY[cfg.experiment]
    ctx = Context(cfg, exp)
    if ctx.drift is not None and ctx.x0 is not None and len(ctx.x0) != ctx.drift.n:
        raise ConfigError(f"x0 has length {len(ctx.x0)} but the drift has n={ctx.drift.n}")
    ctx.out.mkdir(parents=True, exist_ok=True)
    exp.func(ctx)
    ctx.report.write(ctx.out)
    return ctx.report
