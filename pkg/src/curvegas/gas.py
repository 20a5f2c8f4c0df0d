"""Metropolis simulation of the Coulomb gas on a curve, brute-force quadrature
at tiny particle numbers, and thermodynamic integration of the deformation
family.

The target density on [0, 2pi)^n is proportional to

    exp( beta * sum_{mu<nu} log|phi_s(e^{i th_mu}) - phi_s(e^{i th_nu})|
         + sum_mu log|phi_s'(e^{i th_mu})| ),

the pushforward of the gas on gamma_s through the deformed exterior map.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .curve import ConformalMap, deform
from .errors import (
    CollisionError,
    GridExplosionError,
    NodeFailureError,
    NonFiniteEnergyError,
    OutOfRangeError,
)
from .grunsky import GrunskyData, build_operators, deformed_operators
from .boundary import BoundarySeries, solve_resolvent

N_BATCHES = 32


@dataclass(frozen=True)
class GasConfig:
    """Sampler configuration; chains i > 0 run on derived seeds."""

    n: int
    beta: float
    sweeps: int
    burn_in: int
    thin: int = 1
    step_delta: float = 0.5
    seed: int = 1
    chains: int = 1
    m: int = 0  # power-sum truncation; 0 keeps only the caches needed for g

    def __post_init__(self):
        if self.n < 1:
            raise OutOfRangeError("n must be >= 1")
        if self.beta <= 0:
            raise OutOfRangeError("beta must be positive")
        if not (0 < self.step_delta < math.pi):
            raise OutOfRangeError("step_delta must lie in (0, pi)")
        if self.burn_in >= self.sweeps:
            raise OutOfRangeError("burn_in must be smaller than sweeps")
        if self.thin < 1 or self.chains < 1:
            raise OutOfRangeError("thin and chains must be >= 1")


@dataclass(frozen=True, eq=False)
class ChainSamples:
    """Retained per-sweep records of one chain."""

    chain: int
    seed: int
    sweep: np.ndarray
    energy: np.ndarray
    acceptance: np.ndarray
    linstat: np.ndarray
    trms: np.ndarray
    x: np.ndarray
    y: np.ndarray
    theta_final: np.ndarray
    acceptance_rate: float
    delta_final: float
    cache_drift: float


@dataclass(frozen=True)
class EstimatorReport:
    """Batch-means summary of the centered linear statistic."""

    mean: float
    variance: float
    stderr_mean: float
    stderr_var: float
    acceptance_rate: float
    w2_rms: float
    ess: float
    n_samples: int
    delta_final: float


@dataclass(frozen=True, eq=False)
class GasRun:
    config: GasConfig
    s: float
    chains: list
    report: EstimatorReport


def energy(theta, cmap: ConformalMap, beta, mode="direct", s=1.0,
           grunsky: GrunskyData | None = None):
    """Log-density (up to the constant) of a configuration, by either route.

    direct evaluates the deformed map pairwise; grunsky uses the circle pair
    energy plus the truncated quadratic form in the power sums.  The two agree
    up to the truncation tail.  Raises CollisionError when two angles coincide
    below resolution (the density vanishes there).
    """
    theta = np.asarray(theta, dtype=float)
    n = len(theta)
    diff = (theta[:, None] - theta[None, :]) % (2.0 * np.pi)
    off = ~np.eye(n, dtype=bool)
    if n > 1 and np.min(np.minimum(diff[off], 2.0 * np.pi - diff[off])) < 1e-12:
        raise CollisionError("two angles coincide to < 1e-12")
    dmap = deform(cmap, s)
    w = np.exp(1j * theta)
    logdp = np.log(np.abs(dmap.derivative(w)))
    if mode == "direct":
        return float(_kernels.full_energy(theta, dmap.coeffs, dmap.capacity, beta))
    if mode != "grunsky":
        raise OutOfRangeError(f"unknown energy mode {mode!r}")
    if grunsky is None:
        raise OutOfRangeError("grunsky mode needs GrunskyData")
    a_s = grunsky.deformed(s).a
    k = np.arange(1, grunsky.m + 1)
    S = np.exp(-1j * np.outer(k, theta)).sum(axis=1)
    quad = float(np.real(S @ a_s @ S))
    pairs = float(np.sum(np.log(np.abs(2.0 * np.sin(diff[off] / 2.0)))))
    return beta / 2.0 * (pairs - quad) + (1.0 - beta / 2.0) * float(logdp.sum())


def batch_means(x, n_batches=N_BATCHES):
    """(mean, stderr of the mean) by non-overlapping batch means."""
    x = np.asarray(x, dtype=float)
    nb = min(n_batches, len(x))
    if nb < 2:
        return float(np.mean(x)), float("inf")
    width = len(x) // nb
    trimmed = x[: nb * width].reshape(nb, width)
    bm = trimmed.mean(axis=1)
    return float(np.mean(x)), float(np.std(bm, ddof=1) / np.sqrt(nb))


def _batch_variance(x, n_batches=N_BATCHES):
    """(variance, stderr of the variance) from per-batch sample variances."""
    x = np.asarray(x, dtype=float)
    nb = min(n_batches, len(x))
    if nb < 2:
        return float(np.var(x, ddof=1)) if len(x) > 1 else 0.0, float("inf")
    width = len(x) // nb
    trimmed = x[: nb * width].reshape(nb, width)
    bv = trimmed.var(axis=1, ddof=1)
    return float(np.var(x, ddof=1)), float(np.std(bv, ddof=1) / np.sqrt(nb))


def _make_report(chains, center):
    lin = np.concatenate([c.linstat for c in chains]) - center
    per_chain = max(2, N_BATCHES // len(chains))
    bm = []
    for c in chains:
        x = c.linstat - center
        nb = min(per_chain, len(x))
        width = len(x) // nb
        bm.extend(x[: nb * width].reshape(nb, width).mean(axis=1))
    bm = np.asarray(bm)
    stderr_mean = float(np.std(bm, ddof=1) / np.sqrt(len(bm))) if len(bm) > 1 else float("inf")
    variance, stderr_var = _batch_variance(lin)
    mean = float(lin.mean())
    ess = float(np.var(lin, ddof=1) / stderr_mean**2) if stderr_mean > 0 else float(len(lin))
    return EstimatorReport(
        mean=mean,
        variance=variance,
        stderr_mean=stderr_mean,
        stderr_var=stderr_var,
        acceptance_rate=float(np.mean([c.acceptance_rate for c in chains])),
        w2_rms=float(np.median(np.concatenate([c.trms for c in chains]))),
        ess=ess,
        n_samples=int(len(lin)),
        delta_final=float(np.mean([c.delta_final for c in chains])),
    )


def mcmc_run(config: GasConfig, cmap: ConformalMap, g: BoundarySeries | None = None,
             s=1.0, store_xy=False, threads=1):
    """Run the configured chains on the (optionally deformed) curve.

    Chain i uses the derived seed mix(seed, i) except chain 0, which uses the
    seed itself so single-chain streams are reproducible from the config alone.
    The report centers the linear statistic by n * a0 / 2.
    """
    dmap = deform(cmap, s)
    if g is None:
        ga0, ga, gb = 0.0, np.zeros(0), np.zeros(0)
    else:
        ga0 = float(np.real(g.a0))
        ga = np.asarray(g.a, dtype=float)
        gb = np.asarray(g.b, dtype=float)
    m_ps = max(config.m, len(ga))
    theta0 = 2.0 * np.pi * np.arange(config.n) / config.n  # Fekete points
    seeds = [config.seed if i == 0 else _kernels.mix_seed(config.seed, i)
             for i in range(config.chains)]

    def one(i):
        out = _kernels.run_chain(
            dmap.coeffs, dmap.capacity, float(config.beta), theta0,
            config.sweeps, config.burn_in, config.thin,
            float(config.step_delta), 0.45, np.uint64(seeds[i]), m_ps,
            ga0, ga, gb, store_xy,
        )
        (theta, sweep, en, acc, lin, trms, x, y, rate, delta, drift) = out
        if not (np.all(np.isfinite(en)) and np.isfinite(drift)):
            raise NonFiniteEnergyError(f"chain {i} produced non-finite energy")
        return ChainSamples(
            chain=i, seed=seeds[i], sweep=sweep, energy=en, acceptance=acc,
            linstat=lin, trms=trms, x=x, y=y, theta_final=theta,
            acceptance_rate=rate, delta_final=delta, cache_drift=drift,
        )

    if threads > 1 and config.chains > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chains = list(pool.map(one, range(config.chains)))
    else:
        chains = [one(i) for i in range(config.chains)]
    report = _make_report(chains, config.n * ga0 / 2.0)
    return GasRun(config=config, s=s, chains=chains, report=report)


def fekete_deviation(theta):
    """Deviations t_mu of the sorted angles from the rotated Fekete grid,
    centered so sum t_mu = 0; returns (t, sigma_n)."""
    theta = np.sort(np.asarray(theta, dtype=float) % (2.0 * np.pi))
    n = len(theta)
    raw = theta - 2.0 * np.pi * np.arange(n) / n
    sigma = float(raw.mean())
    return raw - sigma, sigma


def diagnostics(theta_samples):
    """Fekete-deviation summary over retained configurations."""
    rms = []
    for theta in np.atleast_2d(theta_samples):
        t, _ = fekete_deviation(theta)
        rms.append(float(np.sqrt(np.mean(t**2))))
    rms = np.asarray(rms)
    return {"rms": rms, "median_rms": float(np.median(rms)),
            "mean_rms": float(np.mean(rms))}


def _quadrature_weight(cmap, g, theta):
    w = np.exp(1j * theta)
    lw = np.log(np.abs(cmap.derivative(w)))
    if g is not None:
        lw = lw + g.values(theta)
    return lw


def _brute_force_grid(cmap, beta, n, N, g):
    theta = 2.0 * np.pi * np.arange(N) / N
    h = 2.0 * np.pi / N
    lw = _quadrature_weight(cmap, g, theta)
    if n == 1:
        return float(np.sum(np.exp(lw)) * h)
    z = cmap.evaluate(np.exp(1j * theta))
    pair = np.abs(z[:, None] - z[None, :]) ** beta
    wv = np.exp(lw)
    if n == 2:
        return float(h * h * (wv @ pair @ wv) / 2.0)
    # sum_{i,j,k} w_i w_j w_k P_ij P_ik P_jk via M_jk = sum_i w_i P_ij P_ik
    M = pair.T @ (wv[:, None] * pair)
    total = wv @ (M * pair) @ wv
    return float(h**3 * total / 6.0)


def brute_force(cmap: ConformalMap, beta, n, N, g: BoundarySeries | None = None):
    """Tensor-grid trapezoid value of D_n = (1/n!) int prod |z_mu - z_nu|^beta
    prod e^{g} |dz| for n <= 3.

    For n >= 2 the pair factor |z_mu - z_nu|^beta has a |theta|^beta kink on
    the diagonal, so the plain N-grid value is Richardson-combined with the
    N/2 grid to cancel the leading 1/N^2 aliasing term (exact integrands,
    e.g. even integer beta, are unaffected).
    """
    _check_budget(n, N)
    if n == 1 or N < 8:
        return _brute_force_grid(cmap, beta, n, N, g)
    fine = _brute_force_grid(cmap, beta, n, N, g)
    coarse = _brute_force_grid(cmap, beta, n, N // 2, g)
    return fine + (fine - coarse) / 3.0


def brute_force_expectation(cmap: ConformalMap, beta, n, N, observable,
                            g: BoundarySeries | None = None):
    """E[observable(theta_1, ..., theta_n)] under the gas by tensor trapezoid.

    ``observable`` receives n broadcastable angle grids and must return the
    broadcast value array.
    """
    _check_budget(n, N)
    theta = 2.0 * np.pi * np.arange(N) / N
    lw = _quadrature_weight(cmap, g, theta)
    z = cmap.evaluate(np.exp(1j * theta))
    if n == 1:
        wgt = np.exp(lw)
        val = observable(theta)
        return float(np.sum(val * wgt) / np.sum(wgt))
    idx = np.meshgrid(*([np.arange(N)] * n), indexing="ij", sparse=True)
    logw = sum(lw[gi] for gi in idx)
    for i in range(n):
        for j in range(i + 1, n):
            with np.errstate(divide="ignore"):
                logw = logw + beta * np.log(np.abs(z[idx[i]] - z[idx[j]]))
    w = np.exp(logw - logw.max())
    tg = np.meshgrid(*([theta] * n), indexing="ij", sparse=True)
    val = observable(*tg)
    return float(np.sum(val * w) / np.sum(w))


def _check_budget(n, N):
    if n not in (1, 2, 3):
        raise GridExplosionError("brute force supports n in {1, 2, 3}")
    if n == 2 and N > 512:
        raise GridExplosionError("n = 2 budget is N <= 512")
    if n == 3 and N > 128:
        raise GridExplosionError("n = 3 budget is N <= 128")


@dataclass(frozen=True, eq=False)
class ThermoResult:
    log_ratio_mc: float
    stderr: float
    log_ratio_closed: float
    nodes: np.ndarray
    node_means: np.ndarray
    node_stderrs: np.ndarray


def thermo_integrate(cmap: ConformalMap, G: GrunskyData, config: GasConfig,
                     nodes=16, threads=1):
    """Monte Carlo thermodynamic integration of log Z_n(gamma)/Z_n(T).

    At each Gauss-Legendre node s the chain targets the gamma_s gas and
    estimates E[-(beta/2) (X,Y)^t K'(s) (X,Y) - 2(1-beta/2) d'(s)^t (X,Y)];
    the s-quadrature of those means is the MC log-ratio.  The closed form
    -(1/2) log det(I+K) + (beta/2)(1-2/beta)^2 d^t (I+K)^{-1} d is returned
    alongside.
    """
    if nodes < 8:
        raise OutOfRangeError("need at least 8 quadrature nodes")
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    s_nodes = 0.5 * (xg + 1.0)
    w_nodes = 0.5 * wg
    beta = config.beta

    def node_estimate(i):
        s = float(s_nodes[i])
        _, _, kprime, dprime = deformed_operators(G, s)
        cfg = GasConfig(
            n=config.n, beta=beta, sweeps=config.sweeps, burn_in=config.burn_in,
            thin=config.thin, step_delta=config.step_delta,
            seed=_kernels.mix_seed(config.seed, 1000 + i), chains=config.chains,
            m=G.m,
        )
        run = mcmc_run(cfg, cmap, g=None, s=s, store_xy=True, threads=1)
        means, errs = [], []
        for ch in run.chains:
            xy = np.hstack([ch.x, ch.y])
            quad = np.einsum("ij,jk,ik->i", xy, kprime, xy)
            v = -(beta / 2.0) * quad - 2.0 * (1.0 - beta / 2.0) * (xy @ dprime)
            mu, se = batch_means(v)
            means.append(mu)
            errs.append(se)
        mean = float(np.mean(means))
        stderr = float(np.sqrt(np.sum(np.square(errs))) / len(errs))
        if not (np.isfinite(mean) and np.isfinite(stderr)):
            raise NodeFailureError(f"node {i} at s = {s} gave a non-finite estimate")
        return mean, stderr

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(node_estimate, range(nodes)))
    else:
        results = [node_estimate(i) for i in range(nodes)]
    node_means = np.array([r[0] for r in results])
    node_errs = np.array([r[1] for r in results])
    mc = float(np.sum(w_nodes * node_means))
    err = float(np.sqrt(np.sum((w_nodes * node_errs) ** 2)))

    K, d = build_operators(G)
    log_det = float(np.sum(np.log1p(np.linalg.eigvalsh(K.mat))))
    quad = float(d.vec @ solve_resolvent(K, d.vec))
    closed = -0.5 * log_det + (beta / 2.0) * (1.0 - 2.0 / beta) ** 2 * quad
    return ThermoResult(
        log_ratio_mc=mc, stderr=err, log_ratio_closed=closed,
        nodes=s_nodes, node_means=node_means, node_stderrs=node_errs,
    )
