"""Command-line front end: curve specs and run configs in, JSON/CSV reports out.

Commands
--------
analyze   Grunsky/K/d/determinant/Loewner report for the configured curve
predict   CLT mean/variance and log D_n decomposition per n
solve-h   integral-equation solution and its grid residual
verify    oracle suite (cross-method Grunsky, NP vs K, quadratic-form identity,
          Dirichlet energies, brute force vs Selberg, brute force vs MCMC)
sample    Metropolis runs, one CSV stream per chain plus an estimator report
thermo    thermodynamic integration against the closed form

Exit codes: 0 success, 2 config/validation failure, 3 numerical tolerance
failure.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np
from jsonschema import Draft202012Validator, ValidationError

from . import boundary, gas, grunsky, potential
from .curve import deform, make_curve
from .errors import (
    CurvegasError,
    EmptySpecError,
    GridTooSmallError,
    NonUnivalentError,
    OutOfRangeError,
    TailTooLargeError,
)

# bad inputs exit 2; failures of numerical contracts exit 3
VALIDATION_ERRORS = (
    EmptySpecError,
    NonUnivalentError,
    OutOfRangeError,
    GridTooSmallError,
    TailTooLargeError,
)

CURVE_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "properties": {"type": {"const": "circle"}},
            "required": ["type"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "type": {"enum": ["ellipse", "cubic"]},
                "c": {"type": "number"},
            },
            "required": ["type", "c"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "type": {"const": "laurent"},
                "cap": {"type": "number", "exclusiveMinimum": 0},
                "coeffs": {
                    "type": "array",
                    "items": {
                        "type": "array",
                        "prefixItems": [
                            {"type": "integer", "minimum": 0},
                            {"type": "number"},
                            {"type": "number"},
                        ],
                        "minItems": 3,
                        "maxItems": 3,
                    },
                },
            },
            "required": ["type", "coeffs"],
            "additionalProperties": False,
        },
    ]
}

G_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "properties": {
                "type": {"const": "fourier"},
                "a0": {"type": "number"},
                "a": {"type": "array", "items": {"type": "number"}},
                "b": {"type": "array", "items": {"type": "number"}},
            },
            "required": ["type"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "type": {"enum": ["re_z", "im_z"]},
                "p": {"type": "integer", "minimum": 1},
            },
            "required": ["type", "p"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {"type": {"const": "log_abs_psi_prime"}},
            "required": ["type"],
            "additionalProperties": False,
        },
    ]
}

MCMC_SCHEMA = {
    "type": "object",
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "sweeps": {"type": "integer", "minimum": 2},
        "burn_in": {"type": "integer", "minimum": 0},
        "thin": {"type": "integer", "minimum": 1},
        "step_delta": {"type": "number", "exclusiveMinimum": 0},
        "seed": {"type": "integer", "minimum": 0},
        "chains": {"type": "integer", "minimum": 1},
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "curve": CURVE_SCHEMA,
        "g": G_SCHEMA,
        "beta": {"type": "number", "exclusiveMinimum": 0},
        "m": {"type": "integer", "minimum": 1},
        "N": {"type": "integer", "minimum": 8},
        "n_list": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "s": {"type": "number", "minimum": 0, "maximum": 1},
        "offcircle_radius": {"type": "number", "exclusiveMinimum": 1},
        "mcmc": MCMC_SCHEMA,
        "thermo": {
            "type": "object",
            "properties": {"nodes": {"type": "integer", "minimum": 8}},
            "additionalProperties": False,
        },
    },
    "required": ["curve"],
    "additionalProperties": False,
}

REPORT_SCHEMA = {
    "type": "object",
    "properties": {
        "command": {"type": "string"},
        "config": {"type": "object"},
        "results": {"type": "object"},
    },
    "required": ["command", "config", "results"],
    "additionalProperties": False,
}

DEFAULTS = {
    "beta": 2.0,
    "m": 128,
    "N": 1024,
    "n_list": [16, 32, 64, 128],
    "s": 1.0,
    "offcircle_radius": 1.25,
}

MCMC_DEFAULTS = {
    "n": 64,
    "sweeps": 20000,
    "burn_in": 2000,
    "thin": 1,
    "step_delta": 0.5,
    "seed": 1,
    "chains": 1,
}


def load_config(path):
    with open(path) as fh:
        raw = json.load(fh)
    Draft202012Validator(CONFIG_SCHEMA).validate(raw)
    cfg = dict(DEFAULTS)
    cfg.update(raw)
    mc = dict(MCMC_DEFAULTS)
    mc.update(raw.get("mcmc", {}))
    cfg["mcmc"] = mc
    cfg["thermo"] = {"nodes": raw.get("thermo", {}).get("nodes", 16)}
    return cfg


def _write_report(out_dir, command, cfg, results):
    report = {"command": command, "config": cfg, "results": results}
    Draft202012Validator(REPORT_SCHEMA).validate(report)
    path = Path(out_dir) / f"{command.replace('-', '_')}_report.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return path


def _setup(cfg):
    cmap = make_curve(cfg["curve"])
    G = grunsky.compute_grunsky(cmap, cfg["m"], N=cfg["N"])
    K, d = grunsky.build_operators(G)
    gseries = None
    if "g" in cfg:
        gseries = boundary.analyze_g(cfg["g"], cmap, cfg["m"], cfg["N"])
    return cmap, G, K, d, gseries


def _cmd_analyze(cfg, out_dir, opts):
    cmap, G, K, d, _ = _setup(cfg)
    det, loewner = grunsky.fredholm_det(K, G.tail)
    results = {
        "capacity": cmap.raw_capacity,
        "m": cfg["m"],
        "grid": cfg["N"],
        "method": G.method,
        "kappa": K.kappa,
        "tail": G.tail,
        "asymmetry": G.asymmetry,
        "det_i_plus_k": det,
        "loewner_energy": loewner,
        "d_norm": float(np.linalg.norm(d.vec)),
    }
    _write_report(out_dir, "analyze", cfg, results)
    return 0


def _cmd_predict(cfg, out_dir, opts):
    cmap, G, K, d, gseries = _setup(cfg)
    if gseries is None:
        gseries = boundary.BoundarySeries(
            m=cfg["m"], a0=0.0, a=np.zeros(cfg["m"]), b=np.zeros(cfg["m"])
        )
    pred = boundary.predict(K, d, gseries, cfg["beta"], cfg["n_list"], cmap=cmap)
    results = {
        "beta": cfg["beta"],
        "mu_g": pred.mu_g,
        "sigma2_g": pred.sigma2_g,
        "per_n": {
            str(n): {
                "selberg": pred.selberg[n],
                "log_dn": pred.log_dn[n],
                "terms": pred.log_ratio_terms[n],
            }
            for n in cfg["n_list"]
        },
    }
    _write_report(out_dir, "predict", cfg, results)
    return 0


def _cmd_solve_h(cfg, out_dir, opts):
    cmap, G, K, d, gseries = _setup(cfg)
    if gseries is None:
        gseries = boundary.BoundarySeries(
            m=cfg["m"], a0=0.0, a=np.zeros(cfg["m"]), b=np.zeros(cfg["m"])
        )
    h = boundary.solve_h(K, gseries, cfg["beta"])
    res = boundary.residual_inteq(cmap, gseries, h, cfg["beta"], cfg["N"])
    results = {
        "beta": cfg["beta"],
        "hvec": [float(v) for v in h.hvec],
        "residual": res,
    }
    _write_report(out_dir, "solve_h", cfg, results)
    return 0


def _cmd_verify(cfg, out_dir, opts):
    slack = 10.0 if opts.get("tolerance_profile") == "loose" else 1.0
    cmap, G, K, d, gseries = _setup(cfg)
    if gseries is None:
        gseries = boundary.analyze_g({"type": "re_z", "p": 1}, cmap, cfg["m"], cfg["N"])
    beta = cfg["beta"]
    rows = []

    def row(name, value, tol):
        rows.append(
            {"check": name, "value": float(value), "tolerance": float(tol),
             "status": "pass" if value <= tol else "fail"}
        )

    Go = grunsky.compute_grunsky(
        cmap, cfg["m"], method="offcircle_fft", N=cfg["N"], r=cfg["offcircle_radius"]
    )
    tol = 1e-8 + G.tail + Go.tail + 10.0 * (G.entry_error + Go.entry_error)
    excess = np.max(np.abs(G.a - Go.a) - tol)
    row("grunsky_cross_method_excess", excess, 0.0)

    m_np, n_np = 16, 256
    G16 = grunsky.compute_grunsky(cmap, m_np, N=n_np)
    K16, _ = grunsky.build_operators(G16)
    npk = potential.np_fourier_matrix(cmap, m_np, n_np)
    row("neumann_poincare_vs_k", np.abs(npk - K16.mat).max(), slack * 1e-6)

    h = boundary.solve_h(K, gseries, beta)
    lhs, rhs = boundary.identity_lemma_gvar(cmap, gseries, h, d, K, beta, cfg["N"])
    row("quadratic_form_identity", abs(lhs - rhs), slack * 1e-8)

    res = boundary.residual_inteq(cmap, gseries, h, beta, cfg["N"])
    row("integral_equation_residual", res, slack * 1e-6)

    em = potential.interior_dirichlet_energy(cmap, gseries, 512)
    ep = potential.exterior_energy(gseries)
    quad = float(gseries.gvec @ boundary.solve_resolvent(K, gseries.gvec))
    row("dirichlet_energy_identity", abs((em + ep) / (8 * np.pi) - quad), slack * 1e-5)

    circ = make_curve({"type": "circle"})
    d2 = gas.brute_force(circ, beta, 2, 512)
    sel = np.exp(boundary.log_selberg(2, beta))
    row("selberg_n2_relative", abs(d2 - sel) / sel, slack * 1e-6)

    bf = gas.brute_force_expectation(cmap, beta, 2, 256, lambda t1, t2: np.cos(t1 - t2))
    mc_cfg = gas.GasConfig(n=2, beta=beta, sweeps=40000, burn_in=4000, thin=1,
                           seed=cfg["mcmc"]["seed"], chains=1, m=1)
    th = gas.mcmc_run(mc_cfg, cmap, store_xy=True).chains[0]
    # E[cos(theta_1 - theta_2)] from the pair power sum: |S_1|^2 = 2 + 2 cos
    vals = (th.x[:, 0] ** 2 + th.y[:, 0] ** 2 - 2.0) / 2.0
    mean, stderr = gas.batch_means(vals)
    row("brute_vs_mcmc_sigmas", abs(mean - bf) / max(stderr, 1e-300), 3.0)

    results = {"rows": rows, "beta": beta}
    _write_report(out_dir, "verify", cfg, results)
    for r in rows:
        print(f"{r['status']:4s}  {r['check']:32s} value={r['value']:.3e} tol={r['tolerance']:.3e}")
    return 0 if all(r["status"] == "pass" for r in rows) else 3


def _cmd_sample(cfg, out_dir, opts):
    cmap, G, K, d, gseries = _setup(cfg)
    mc = cfg["mcmc"]
    config = gas.GasConfig(
        n=mc["n"], beta=cfg["beta"], sweeps=mc["sweeps"], burn_in=mc["burn_in"],
        thin=mc["thin"], step_delta=mc["step_delta"], seed=mc["seed"],
        chains=mc["chains"],
    )
    run = gas.mcmc_run(config, cmap, g=gseries, s=cfg["s"],
                       threads=opts.get("threads", 1))
    for ch in run.chains:
        path = Path(out_dir) / f"samples_chain{ch.chain}.csv"
        with open(path, "w") as fh:
            fh.write("sweep,energy,acceptance,linstat\n")
            for i in range(len(ch.sweep)):
                fh.write(f"{int(ch.sweep[i])},{float(ch.energy[i])!r},"
                         f"{float(ch.acceptance[i])!r},{float(ch.linstat[i])!r}\n")
    rep = run.report
    results = {
        "mean": rep.mean, "variance": rep.variance,
        "stderr_mean": rep.stderr_mean, "stderr_var": rep.stderr_var,
        "acceptance_rate": rep.acceptance_rate, "w2_rms": rep.w2_rms,
        "ess": rep.ess, "n_samples": rep.n_samples,
        "delta_final": rep.delta_final,
        "cache_drift": max(ch.cache_drift for ch in run.chains),
        "chains": config.chains,
    }
    _write_report(out_dir, "sample", cfg, results)
    return 0


def _cmd_thermo(cfg, out_dir, opts):
    cmap, G, K, d, _ = _setup(cfg)
    mc = cfg["mcmc"]
    config = gas.GasConfig(
        n=mc["n"], beta=cfg["beta"], sweeps=mc["sweeps"], burn_in=mc["burn_in"],
        thin=mc["thin"], step_delta=mc["step_delta"], seed=mc["seed"],
        chains=mc["chains"], m=cfg["m"],
    )
    res = gas.thermo_integrate(cmap, G, config, nodes=cfg["thermo"]["nodes"],
                               threads=opts.get("threads", 1))
    dev = abs(res.log_ratio_mc - res.log_ratio_closed)
    results = {
        "log_ratio_mc": res.log_ratio_mc,
        "stderr": res.stderr,
        "log_ratio_closed": res.log_ratio_closed,
        "deviation_sigmas": dev / max(res.stderr, 1e-300),
        "nodes": [float(s) for s in res.nodes],
        "node_means": [float(v) for v in res.node_means],
        "node_stderrs": [float(v) for v in res.node_stderrs],
    }
    _write_report(out_dir, "thermo", cfg, results)
    return 0 if dev <= 3.0 * res.stderr else 3


COMMANDS = {
    "analyze": _cmd_analyze,
    "predict": _cmd_predict,
    "solve-h": _cmd_solve_h,
    "verify": _cmd_verify,
    "sample": _cmd_sample,
    "thermo": _cmd_thermo,
}


def run(command, config_path, out_dir=".", seed=None, threads=1,
        tolerance_profile="strict"):
    """Execute one command; returns the process exit code."""
    try:
        cfg = load_config(config_path)
    except (OSError, json.JSONDecodeError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if seed is not None:
        cfg["mcmc"]["seed"] = int(seed)
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    opts = {"threads": threads, "tolerance_profile": tolerance_profile}
    try:
        return COMMANDS[command](cfg, out_dir, opts)
    except VALIDATION_ERRORS as exc:
        print(f"invalid input: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except CurvegasError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="curvegas",
        description="Coulomb gas on a Jordan curve: operator quantities, "
        "predictions, and Monte Carlo cross-checks",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True)
    parser.add_argument("--out-dir", default=".")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--tolerance-profile", choices=["strict", "loose"],
                        default="strict")
    args = parser.parse_args(argv)
    return run(args.command, args.config, out_dir=args.out_dir, seed=args.seed,
               threads=args.threads, tolerance_profile=args.tolerance_profile)


if __name__ == "__main__":
    sys.exit(main())
