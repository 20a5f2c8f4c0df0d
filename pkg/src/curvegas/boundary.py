"""Test functions on the curve, the resolvent system, and closed-form
predictions for the gas.

A function g on the curve is transported to the circle, G(theta) =
g(phi(e^{i theta})), and stored through its Fourier data (a0, a_k, b_k).  The
packed vector gvec = (sqrt(k) a_k / 2 ; sqrt(k) b_k / 2) is the coordinate
system in which the operator K acts; every prediction below is linear algebra
in that space.
"""

import math
from dataclasses import dataclass

import numpy as np

from .curve import ConformalMap
from .errors import (
    EmptySpecError,
    GridTooSmallError,
    IllConditionedError,
    OutOfRangeError,
    TailTooLargeError,
)
from .grunsky import DVector, KOperator

ILL_COND_GAP = 1e-6
TAIL_FRACTION = 1e-8


@dataclass(frozen=True, eq=False)
class BoundarySeries:
    """Fourier data of G(theta) up to mode m.

    a0 is twice the mean.  Coefficients may be complex (complex-valued g is
    allowed in predictions); for real g they are real floats.
    """

    m: int
    a0: complex | float
    a: np.ndarray
    b: np.ndarray
    tail: float = 0.0

    @property
    def gvec(self):
        """Packed half-integer-weighted vector (sqrt(k)a_k/2 ; sqrt(k)b_k/2)."""
        w = 0.5 * np.sqrt(np.arange(1, self.m + 1))
        return np.concatenate([w * self.a, w * self.b])

    def values(self, theta):
        theta = np.asarray(theta, dtype=float)
        k = np.arange(1, self.m + 1)
        kt = np.multiply.outer(theta, k)
        return self.a0 / 2 + np.cos(kt) @ self.a + np.sin(kt) @ self.b

    def derivative_values(self, theta):
        theta = np.asarray(theta, dtype=float)
        k = np.arange(1, self.m + 1)
        kt = np.multiply.outer(theta, k)
        return -np.sin(kt) @ (k * self.a) + np.cos(kt) @ (k * self.b)


@dataclass(frozen=True, eq=False)
class HSolution:
    """Solution h = (2/beta) L (I+K)^{-1} g of the integral equation, packed."""

    m: int
    beta: float
    hvec: np.ndarray

    def _series(self):
        k = np.arange(1, self.m + 1)
        c = 2.0 * self.hvec[: self.m] / np.sqrt(k)
        d = 2.0 * self.hvec[self.m :] / np.sqrt(k)
        return k, c, d

    def values(self, theta):
        theta = np.asarray(theta, dtype=float)
        k, c, d = self._series()
        kt = np.multiply.outer(theta, k)
        return np.cos(kt) @ c + np.sin(kt) @ d

    def derivative_values(self, theta):
        theta = np.asarray(theta, dtype=float)
        k, c, d = self._series()
        kt = np.multiply.outer(theta, k)
        return -np.sin(kt) @ (k * c) + np.cos(kt) @ (k * d)


@dataclass(frozen=True, eq=False)
class Prediction:
    """CLT mean/variance and the partition-function asymptote per n."""

    beta: float
    mu_g: float
    sigma2_g: float
    selberg: dict
    log_ratio_terms: dict
    log_dn: dict


def rotation_block(m):
    """The block rotation L: (x, y) -> (-y, x) as a 2m x 2m matrix."""
    L = np.zeros((2 * m, 2 * m))
    L[:m, m:] = -np.eye(m)
    L[m:, :m] = np.eye(m)
    return L


def apply_rotation(v):
    m = len(v) // 2
    return np.concatenate([-v[m:], v[:m]])


def analyze_g(gspec, cmap: ConformalMap, m, N):
    """Transport g to the circle and return its truncated Fourier data.

    gspec is one of
        {"type": "fourier", "a0": .., "a": [..], "b": [..]}   (function of theta)
        {"type": "re_z", "p": int}                            g(z) = Re z^p
        {"type": "im_z", "p": int}                            g(z) = Im z^p
        {"type": "log_abs_psi_prime"}                         g = -log|phi'| transported

    Raises TailTooLargeError when the discarded H^{1/2} energy beyond mode m
    exceeds 1e-8 of the total.
    """
    if not gspec or "type" not in gspec:
        raise EmptySpecError("g spec must have a 'type' field")
    kind = gspec["type"]
    if kind == "fourier":
        a_in = np.asarray(gspec.get("a", []), dtype=float)
        b_in = np.asarray(gspec.get("b", []), dtype=float)
        if len(a_in) > m or len(b_in) > m:
            raise TailTooLargeError(
                f"explicit fourier data has modes beyond m = {m}"
            )
        a = np.zeros(m)
        b = np.zeros(m)
        a[: len(a_in)] = a_in
        b[: len(b_in)] = b_in
        return BoundarySeries(m=m, a0=float(gspec.get("a0", 0.0)), a=a, b=b)
    if N < 4 * m:
        raise GridTooSmallError(f"N = {N} < 4m = {4 * m}")
    theta = 2.0 * np.pi * np.arange(N) / N
    w = np.exp(1j * theta)
    if kind in ("re_z", "im_z"):
        p = int(gspec["p"])
        zp = cmap.evaluate(w) ** p
        G = zp.real if kind == "re_z" else zp.imag
    elif kind == "log_abs_psi_prime":
        G = -np.log(np.abs(cmap.derivative(w)))
    else:
        raise EmptySpecError(f"unknown g type {kind!r}")
    c = np.fft.fft(G) / N
    k = np.arange(1, N // 2)
    ak = (c[k] + c[N - k]).real
    bk = (1j * (c[k] - c[N - k])).real
    energy = k * (ak**2 + bk**2)
    total = energy.sum()
    tail = energy[m:].sum()
    if total > 0.0 and tail > TAIL_FRACTION * total:
        raise TailTooLargeError(
            f"discarded H^1/2 energy fraction {tail / total:.3e} beyond m = {m}"
        )
    return BoundarySeries(
        m=m, a0=2.0 * c[0].real, a=ak[:m].copy(), b=bk[:m].copy(), tail=float(tail)
    )


def conjugate(F: BoundarySeries):
    """Conjugate-function multiplier: a_k cos + b_k sin -> -b_k cos + a_k sin."""
    return BoundarySeries(m=F.m, a0=0.0, a=-F.b.copy(), b=F.a.copy(), tail=F.tail)


def solve_resolvent(K: KOperator, v):
    """Solve (I + K) x = v; I + K is symmetric positive definite for kappa < 1."""
    if 1.0 - K.kappa < ILL_COND_GAP:
        raise IllConditionedError(
            f"1 - kappa = {1.0 - K.kappa:.3e} < {ILL_COND_GAP:.0e}"
        )
    A = np.eye(2 * K.m) + K.mat
    x = np.linalg.solve(A, v)
    nv = np.linalg.norm(v)
    if nv > 0.0 and np.linalg.norm(A @ x - v) > 1e-12 * nv:
        # one refinement step keeps the contract even for kappa near the gap
        x = x + np.linalg.solve(A, v - A @ x)
    return x


def solve_h(K: KOperator, g: BoundarySeries, beta):
    """h = (2/beta) L (I+K)^{-1} g; on the circle at beta = 2 this is the
    conjugate function of g."""
    if beta <= 0.0:
        raise OutOfRangeError(f"beta must be positive, got {beta}")
    x = solve_resolvent(K, g.gvec)
    return HSolution(m=K.m, beta=beta, hvec=(2.0 / beta) * apply_rotation(x))


def _log_ratio_kernel(cmap, theta):
    """log|(phi(z)-phi(w))/(z-w)| on the grid, diagonal log|phi'|."""
    w = np.exp(1j * theta)
    phi = cmap.evaluate(w)
    num = np.abs(phi[:, None] - phi[None, :])
    den = np.abs(w[:, None] - w[None, :])
    idx = np.arange(len(theta))
    den[idx, idx] = 1.0
    num[idx, idx] = np.abs(cmap.derivative(w))
    return np.log(num) - np.log(den)


def residual_inteq(cmap: ConformalMap, g: BoundarySeries, h: HSolution, beta, N):
    """Sup-norm residual of the integral equation on the theta grid.

    The principal value is split as in the solution theory: a conjugate-function
    multiplier plus the smooth log-ratio kernel integrated by trapezoid,

        G(w) =? -(beta/2) conj(H)(w) - (beta/2 pi) int log|ratio| H'(t) dt.
    """
    if N < 4 * g.m:
        raise GridTooSmallError(f"N = {N} < 4m = {4 * g.m}")
    theta = 2.0 * np.pi * np.arange(N) / N
    G = g.values(theta)
    k = np.arange(1, h.m + 1)
    hc = 2.0 * h.hvec[: h.m] / np.sqrt(k)
    hd = 2.0 * h.hvec[h.m :] / np.sqrt(k)
    kt = np.multiply.outer(theta, k)
    H_conj = np.cos(kt) @ (-hd) + np.sin(kt) @ hc
    Hp = h.derivative_values(theta)
    M = _log_ratio_kernel(cmap, theta)
    smooth = (beta / (2.0 * np.pi)) * (2.0 * np.pi / N) * (M @ Hp)
    rhs = -(beta / 2.0) * H_conj - smooth
    return float(np.max(np.abs(G - rhs)))


def _scalar(x):
    """Python scalar from a 0-d result; real when the imaginary part is null."""
    v = complex(x)
    return v.real if v.imag == 0.0 else v


def log_selberg(n, beta):
    """log Z_{n,beta}(T) = n log 2pi - log n! + log Gamma(1 + beta n/2)
    - n log Gamma(1 + beta/2)."""
    return (
        n * math.log(2.0 * math.pi)
        - math.lgamma(n + 1)
        + math.lgamma(1.0 + 0.5 * beta * n)
        - n * math.lgamma(1.0 + 0.5 * beta)
    )


def predict(K: KOperator, d: DVector, g: BoundarySeries, beta, n_list, cmap=None):
    """Asymptotic mean/variance of the linear statistic and log D_n per n.

    mu_g    = 2 (1 - 2/beta) d^t (I+K)^{-1} g
    sigma2  = (4/beta) g^t (I+K)^{-1} g
    log D_n = log Z_{n,beta}(T) + (beta n^2/2 + (1 - beta/2) n) log cap
              + n a0/2 - (1/2) log det(I+K) + (2/beta) gb^t (I+K)^{-1} gb
    with gb = g + (beta/2 - 1) d.
    """
    if beta <= 0.0:
        raise OutOfRangeError(f"beta must be positive, got {beta}")
    gv = g.gvec
    rg = solve_resolvent(K, gv)
    # bilinear (not sesquilinear) forms: complex g stays complex, per the
    # analytic-continuation reading of the limit theorem
    mu = _scalar(2.0 * (1.0 - 2.0 / beta) * (d.vec @ rg))
    sigma2 = _scalar((4.0 / beta) * (gv @ rg))
    gb = gv + (beta / 2.0 - 1.0) * d.vec
    quad = _scalar((2.0 / beta) * (gb @ solve_resolvent(K, gb)))
    log_det = float(np.sum(np.log1p(np.linalg.eigvalsh(K.mat))))
    log_cap = math.log(cmap.raw_capacity) if cmap is not None else 0.0
    selberg = {}
    terms = {}
    log_dn = {}
    for n in n_list:
        sel = log_selberg(n, beta)
        cap_term = (beta * n * n / 2.0 + (1.0 - beta / 2.0) * n) * log_cap
        mean_term = _scalar(n * g.a0 / 2.0)
        selberg[n] = sel
        terms[n] = {
            "selberg": sel,
            "capacity": cap_term,
            "mean": mean_term,
            "half_log_det": -0.5 * log_det,
            "quadratic": quad,
        }
        log_dn[n] = sel + cap_term + mean_term - 0.5 * log_det + quad
    return Prediction(
        beta=beta,
        mu_g=mu,
        sigma2_g=sigma2,
        selberg=selberg,
        log_ratio_terms=terms,
        log_dn=log_dn,
    )


def identity_lemma_gvar(cmap, g: BoundarySeries, h: HSolution, d: DVector,
                        K: KOperator, beta, N):
    """Both sides of the quadratic-form identity behind the CLT variance.

    lhs: (1/4pi) int G H' + 2(1 - beta/2) (1/4pi) int log|phi'| H' by trapezoid
    rhs: (2/beta) g^t (I+K)^{-1} g + 2(1 - 2/beta) d^t (I+K)^{-1} g
    """
    theta = 2.0 * np.pi * np.arange(N) / N
    G = g.values(theta)
    Hp = h.derivative_values(theta)
    logdp = np.log(np.abs(cmap.derivative(np.exp(1j * theta))))
    quad = lambda f: float(np.sum(f) * (2.0 * np.pi / N) / (4.0 * np.pi))
    lhs = quad(G * Hp) + 2.0 * (1.0 - beta / 2.0) * quad(logdp * Hp)
    rg = solve_resolvent(K, g.gvec)
    rhs = float((2.0 / beta) * (g.gvec @ rg) + 2.0 * (1.0 - 2.0 / beta) * (d.vec @ rg))
    return lhs, rhs
