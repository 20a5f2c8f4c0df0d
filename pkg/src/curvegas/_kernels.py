"""Numba kernels for the single-site Metropolis sampler.

The random stream is an inlined splitmix64 counter generator, so identical
(seed, config) pairs reproduce bit-identical chains independent of library
versions.  Energy differences use one row of pairwise interactions (O(n) per
proposal) with the boundary points phi(e^{i theta}) cached per particle;
power-sum caches are updated incrementally and refreshed from scratch every
REFRESH_SWEEPS sweeps together with the cached total energy.
"""

import numpy as np
from numba import njit

TWO_PI = 2.0 * np.pi
REFRESH_SWEEPS = 100
COLLISION_EPS = 1e-12

_GOLD = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0  # 2^-53


@njit(inline="always")
def _next(state):
    state = state + _GOLD
    z = state
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    z = z ^ (z >> _S31)
    return state, z


@njit(inline="always")
def _uniform(state):
    state, z = _next(state)
    return state, (z >> _S11) * _INV53


def mix_seed(seed, salt):
    """Derive a decorrelated 64-bit stream seed (pure Python, for chain/node ids)."""
    mask = (1 << 64) - 1
    z = (int(seed) + (int(salt) + 1) * 0x9E3779B97F4A7C15) & mask
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
    return (z ^ (z >> 31)) & mask


@njit(inline="always")
def _phi_logdp(coeffs, cap, t):
    """phi(e^{it}) and log|phi'(e^{it})| for the finite Laurent series."""
    w = complex(np.cos(t), np.sin(t))
    cw = w.conjugate()
    z = cap * w
    dp = complex(cap, 0.0)
    q = complex(1.0, 0.0)
    for j in range(coeffs.shape[0]):
        if j == 0:
            z += coeffs[0]
        else:
            q = q * cw
            z += coeffs[j] * q
            dp -= j * coeffs[j] * q * cw
    return z, np.log(np.abs(dp))


@njit(cache=True)
def full_energy(theta, coeffs, cap, beta):
    """beta * sum_{mu<nu} log|phi(mu)-phi(nu)| + sum_mu log|phi'(mu)|."""
    n = theta.shape[0]
    z = np.empty(n, dtype=np.complex128)
    e = 0.0
    for i in range(n):
        zi, lp = _phi_logdp(coeffs, cap, theta[i])
        z[i] = zi
        e += lp
    for i in range(n):
        for j in range(i + 1, n):
            e += beta * np.log(np.abs(z[i] - z[j]))
    return e


@njit(inline="always")
def _power_sums(theta, m, s_re, s_im):
    n = theta.shape[0]
    for k in range(m):
        s_re[k] = 0.0
        s_im[k] = 0.0
    for mu in range(n):
        cr = np.cos(theta[mu])
        ci = -np.sin(theta[mu])  # e^{-i theta}
        pr, pi = 1.0, 0.0
        for k in range(m):
            pr, pi = pr * cr - pi * ci, pr * ci + pi * cr
            s_re[k] += pr
            s_im[k] += pi


@njit(cache=True, nogil=True)
def run_chain(coeffs, cap, beta, theta0, sweeps, burn_in, thin, delta0,
              target_acc, seed, m_ps, ga0, ga, gb, store_xy):
    """Single Metropolis chain; returns the retained-sample arrays.

    Proposals move one site by U(-delta, delta); delta adapts toward
    target_acc during burn-in (Robbins-Monro) and is frozen afterwards.
    Measurements are taken every `thin` sweeps after burn-in.
    """
    n = theta0.shape[0]
    theta = theta0.copy()
    z = np.empty(n, dtype=np.complex128)
    lp = np.empty(n)
    for i in range(n):
        z[i], lp[i] = _phi_logdp(coeffs, cap, theta[i])
    energy = full_energy(theta, coeffs, cap, beta)
    s_re = np.zeros(m_ps)
    s_im = np.zeros(m_ps)
    if m_ps > 0:
        _power_sums(theta, m_ps, s_re, s_im)

    n_keep = 0
    for sw in range(sweeps):
        if sw >= burn_in and (sw - burn_in) % thin == 0:
            n_keep += 1
    sweep_out = np.empty(n_keep, dtype=np.int64)
    energy_out = np.empty(n_keep)
    linstat_out = np.empty(n_keep)
    acc_out = np.empty(n_keep)
    trms_out = np.empty(n_keep)
    mg = ga.shape[0]
    if store_xy and m_ps > 0:
        x_out = np.empty((n_keep, m_ps))
        y_out = np.empty((n_keep, m_ps))
    else:
        x_out = np.empty((0, m_ps))
        y_out = np.empty((0, m_ps))

    state = np.uint64(seed)
    delta = delta0
    log_delta = np.log(delta0)
    accepted = 0
    proposed = 0
    cache_drift = 0.0
    kept = 0
    for sw in range(sweeps):
        acc_sweep = 0
        for _ in range(n):
            state, r1 = _next(state)
            mu = int(r1 % np.uint64(n))
            state, u1 = _uniform(state)
            t_new = (theta[mu] + delta * (2.0 * u1 - 1.0)) % TWO_PI
            proposed += 1
            collide = False
            for nu in range(n):
                if nu != mu:
                    dang = (t_new - theta[nu]) % TWO_PI
                    if dang < COLLISION_EPS or TWO_PI - dang < COLLISION_EPS:
                        collide = True
                        break
            if collide:
                continue
            z_new, lp_new = _phi_logdp(coeffs, cap, t_new)
            de = lp_new - lp[mu]
            for nu in range(n):
                if nu != mu:
                    de += beta * (np.log(np.abs(z_new - z[nu]))
                                  - np.log(np.abs(z[mu] - z[nu])))
            state, u2 = _uniform(state)
            if np.log(u2 + 1e-320) < de:
                if m_ps > 0:
                    cr_o = np.cos(theta[mu])
                    ci_o = -np.sin(theta[mu])
                    cr_n = np.cos(t_new)
                    ci_n = -np.sin(t_new)
                    por, poi = 1.0, 0.0
                    pnr, pni = 1.0, 0.0
                    for k in range(m_ps):
                        por, poi = por * cr_o - poi * ci_o, por * ci_o + poi * cr_o
                        pnr, pni = pnr * cr_n - pni * ci_n, pnr * ci_n + pni * cr_n
                        s_re[k] += pnr - por
                        s_im[k] += pni - poi
                theta[mu] = t_new
                z[mu] = z_new
                lp[mu] = lp_new
                energy += de
                accepted += 1
                acc_sweep += 1
        if sw < burn_in:
            gain = 1.0 / (1.0 + sw) ** 0.6
            log_delta += gain * (acc_sweep / n - target_acc)
            if log_delta < -11.5:
                log_delta = -11.5
            if log_delta > 1.14:
                log_delta = 1.14
            delta = np.exp(log_delta)
        if (sw + 1) % REFRESH_SWEEPS == 0:
            e_fresh = full_energy(theta, coeffs, cap, beta)
            drift = np.abs(e_fresh - energy)
            if m_ps > 0:
                fr = np.zeros(m_ps)
                fi = np.zeros(m_ps)
                _power_sums(theta, m_ps, fr, fi)
                for k in range(m_ps):
                    dr = np.abs(fr[k] - s_re[k]) + np.abs(fi[k] - s_im[k])
                    if dr > drift:
                        drift = dr
                    s_re[k] = fr[k]
                    s_im[k] = fi[k]
            if drift > cache_drift:
                cache_drift = drift
            energy = e_fresh
        if sw >= burn_in and (sw - burn_in) % thin == 0:
            sweep_out[kept] = sw
            energy_out[kept] = energy
            acc_out[kept] = accepted / proposed
            lin = 0.0
            if mg > 0:
                lin = ga0 / 2.0 * n
                for k in range(mg):
                    lin += ga[k] * s_re[k] - gb[k] * s_im[k]
            linstat_out[kept] = lin
            srt = np.sort(theta)
            sig = 0.0
            for i in range(n):
                sig += srt[i] - TWO_PI * i / n
            sig /= n
            ssq = 0.0
            for i in range(n):
                dev = srt[i] - TWO_PI * i / n - sig
                ssq += dev * dev
            trms_out[kept] = np.sqrt(ssq / n)
            if store_xy and m_ps > 0:
                for k in range(m_ps):
                    sq = np.sqrt(k + 1.0)
                    x_out[kept, k] = s_re[k] / sq
                    y_out[kept, k] = -s_im[k] / sq
            kept += 1
    acc_rate = accepted / proposed if proposed > 0 else 0.0
    return (theta, sweep_out, energy_out, acc_out, linstat_out, trms_out,
            x_out, y_out, acc_rate, delta, cache_drift)
