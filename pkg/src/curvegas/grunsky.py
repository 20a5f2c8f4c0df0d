"""Grunsky coefficients, the block operator K, the vector d, and det(I + K).

The coefficients a_kl are defined by the bivariate expansion

    log[(phi(z) - phi(w)) / (z - w)] = -sum_{k,l >= 1} a_kl z^{-k} w^{-l}

on |z|, |w| > 1 (capacity 1).  Two independent extraction routes are provided:
a 2-D FFT of the kernel on the boundary torus grid, and the same FFT on a
circle of radius r > 1 where the expansion converges geometrically.  Both are
validated against each other and against the analytically known families.
"""

from dataclasses import dataclass

import numpy as np

from .curve import ConformalMap
from .errors import (
    BranchUnwrapError,
    CrossCheckError,
    GridTooSmallError,
    KappaGeOneError,
    OutOfRangeError,
)

SYM_TOL = 1e-10
NOISE_FLOOR = 1e-15


@dataclass(frozen=True, eq=False)
class GrunskyData:
    """Truncated Grunsky matrix with a power-law tail estimate.

    ``a[k-1, l-1]`` holds a_kl for 1 <= k, l <= m.  ``tail`` estimates
    sum_{max(k,l) > m} k*l*|a_kl| from a fitted envelope A * k^-p * l^-p.
    ``entry_error[k-1, l-1]`` is the extraction-error scale of each entry;
    the off-circle route amplifies rounding noise by r**(k+l), so its
    high-order entries carry a much larger error than the boundary route's.
    """

    m: int
    a: np.ndarray
    method: str
    tail: float
    asymmetry: float
    entry_error: np.ndarray
    tail_fit: tuple | None = None

    def deformed(self, s):
        """Grunsky matrix of the deformed curve: a_kl(s) = s**(k+l) * a_kl."""
        if not (0.0 <= s <= 1.0):
            raise OutOfRangeError(f"s must lie in [0, 1], got {s}")
        k = np.arange(1, self.m + 1)
        scale = np.power(float(s), k[:, None] + k[None, :])
        return GrunskyData(
            m=self.m,
            a=self.a * scale,
            method=self.method,
            tail=self.tail,
            asymmetry=self.asymmetry,
            entry_error=self.entry_error,
            tail_fit=self.tail_fit,
        )


@dataclass(frozen=True, eq=False)
class KOperator:
    """Dense 2m x 2m real symmetric [[B1, B2], [B2, -B1]] with B = sqrt(kl) a_kl."""

    m: int
    mat: np.ndarray
    b: np.ndarray
    kappa: float


@dataclass(frozen=True, eq=False)
class DVector:
    """Packed length-2m vector of Eq.-type sums (sqrt(k)/2) sum_j a_{j,k-j}."""

    m: int
    vec: np.ndarray


def _unwrap_rows(ratio, diag_imag):
    """Continuous imaginary part of log(ratio) along each row.

    Each row is a continuous periodic function of the column angle, so the
    winding of the phase around a full period must vanish; the absolute branch
    is anchored to the known diagonal value diag_imag.
    """
    ang = np.angle(ratio)
    d = np.diff(ang, axis=1)
    d = (d + np.pi) % (2.0 * np.pi) - np.pi
    if np.max(np.abs(d), initial=0.0) > 0.995 * np.pi:
        raise BranchUnwrapError(
            "adjacent phase jump too close to pi; refine the grid"
        )
    closing = (ang[:, 0] - ang[:, -1] + np.pi) % (2.0 * np.pi) - np.pi
    winding = np.rint((d.sum(axis=1) + closing) / (2.0 * np.pi)).astype(int)
    if np.any(winding != 0):
        raise BranchUnwrapError(
            f"kernel phase winds around 0 on {np.count_nonzero(winding)} rows"
        )
    u = np.empty_like(ang)
    u[:, 0] = ang[:, 0]
    np.cumsum(d, axis=1, out=u[:, 1:])
    u[:, 1:] += ang[:, :1]
    n = ang.shape[0]
    idx = np.arange(n)
    offset = diag_imag - u[idx, idx]
    offset = 2.0 * np.pi * np.rint(offset / (2.0 * np.pi))
    return u + offset[:, None]


def _log_dphi_branch(cmap, pts):
    """log phi' on a circle |z| = r with the analytic branch (mean zero)."""
    dphi = cmap.derivative(pts)
    ang = np.unwrap(np.angle(dphi))
    # log phi' is single-valued outside the disc and vanishes at infinity, so
    # its circle mean is zero; snap the 2*pi*k branch offset from that.
    ang -= 2.0 * np.pi * np.rint(np.mean(ang) / (2.0 * np.pi))
    return np.log(np.abs(dphi)) + 1j * ang


def _tail_estimate(a, m, entry_error):
    """Estimate sum_{max(k,l) > m} kl |a_kl| from a power-law envelope.

    Fits max_{max(k,l)=b} kl|a_kl| <= A * b**(-q) on the outermost resolved
    bands (shifted up so the fit is an envelope there), then sums the envelope
    over the discarded bands, 2b-1 entries per band.  Entries below their
    extraction-error floor are excluded: for the off-circle route the
    high-order entries are amplified rounding noise and would otherwise fake a
    growing envelope.  Returns (tail, (A, q) or None).
    """
    k = np.arange(1, m + 1, dtype=float)
    kk, ll = np.meshgrid(k, k, indexing="ij")
    mag = np.abs(a)
    weight = kk * ll * mag
    band = np.maximum(kk, ll).astype(int)
    resolved = mag > np.maximum(NOISE_FLOOR, 10.0 * entry_error)
    if not np.any(resolved):
        return 0.0, None  # every entry is at rounding level
    peaks = np.zeros(m + 1)
    np.maximum.at(peaks, band[resolved], weight[resolved])
    bs = np.nonzero(peaks > 0.0)[0]
    bmax = bs.max()
    fit_bs = bs[bs > 0.75 * bmax]
    if len(fit_bs) < 4:
        fit_bs = bs
    if len(fit_bs) < 2:
        return float(peaks.max() * m), None
    x = np.log(fit_bs.astype(float))
    y = np.log(peaks[fit_bs])
    coef = np.polyfit(x, y, 1)
    q = -coef[0]
    log_amp = coef[1] + np.max(y - np.polyval(coef, x))  # shift to an envelope
    amp = np.exp(log_amp)
    horizon = max(8 * m, 1024)
    b = np.arange(m + 1, horizon + 1, dtype=float)
    with np.errstate(over="ignore"):
        tail = float(amp * np.sum((2.0 * b - 1.0) * b ** (-q)))
    return tail, (float(amp), float(q))


def compute_grunsky(cmap: ConformalMap, m, method="boundary_fft", N=None, r=1.25):
    """Extract the m x m Grunsky matrix by a 2-D FFT of the log kernel.

    boundary_fft samples log[(phi(z)-phi(w))/(z-w)] at z, w on the unit
    circle (diagonal filled with log phi', branch tracked row-wise);
    offcircle_fft samples at |z| = |w| = r and rescales coefficient (k, l)
    by r**(k+l).
    """
    if N is None:
        N = 1
        while N < max(4 * m, 1024):
            N *= 2
    if N < 4 * m:
        raise GridTooSmallError(f"N = {N} < 4m = {4 * m}")
    if method not in ("boundary_fft", "offcircle_fft"):
        raise OutOfRangeError(f"unknown method {method!r}")
    radius = 1.0
    if method == "offcircle_fft":
        if r <= 1.0:
            raise OutOfRangeError("offcircle_fft needs r > 1")
        radius = float(r)
    theta = 2.0 * np.pi * np.arange(N) / N
    pts = radius * np.exp(1j * theta)
    phi = cmap.evaluate(pts)
    logdp = _log_dphi_branch(cmap, pts)
    num = phi[:, None] - phi[None, :]
    den = pts[:, None] - pts[None, :]
    idx = np.arange(N)
    den[idx, idx] = 1.0
    ratio = num / den
    ratio[idx, idx] = np.exp(logdp)  # exact diagonal limit phi'(pts)
    kern = np.log(np.abs(ratio)) + 1j * _unwrap_rows(ratio, logdp.imag)
    coeffs = np.fft.fft2(kern) / (N * N)
    k = np.arange(1, m + 1)
    a = -coeffs[np.ix_((N - k) % N, (N - k) % N)]
    amp = radius ** (k[:, None] + k[None, :]).astype(float)
    if radius > 1.0:
        a = a * amp
    asym = float(np.max(np.abs(a - a.T)))
    a = 0.5 * (a + a.T)
    entry_error = 1e-15 * amp if radius > 1.0 else np.full((m, m), 1e-14)
    tail, tail_fit = _tail_estimate(a, m, entry_error)
    return GrunskyData(
        m=m,
        a=a,
        method=method,
        tail=tail,
        asymmetry=asym,
        entry_error=entry_error,
        tail_fit=tail_fit,
    )


def build_operators(G: GrunskyData):
    """Assemble (KOperator, DVector) from a symmetrized Grunsky matrix."""
    m = G.m
    k = np.arange(1, m + 1, dtype=float)
    b = np.sqrt(np.outer(k, k)) * G.a
    b1, b2 = b.real.copy(), b.imag.copy()
    mat = np.block([[b1, b2], [b2, -b1]])
    kappa = float(np.linalg.svd(b, compute_uv=False)[0]) if m > 0 else 0.0
    if kappa >= 1.0:
        raise KappaGeOneError(
            f"||B|| = {kappa:.6f} >= 1: curve outside quasicircle tolerance "
            "or truncation too small"
        )
    sums = np.zeros(m, dtype=complex)
    for kk in range(2, m + 1):
        j = np.arange(1, kk)
        sums[kk - 1] = G.a[j - 1, kk - j - 1].sum()
    half_sqrt = 0.5 * np.sqrt(k)
    d = np.concatenate([half_sqrt * sums.real, half_sqrt * sums.imag])
    return KOperator(m=m, mat=mat, b=b, kappa=kappa), DVector(m=m, vec=d)


def fredholm_det(K: KOperator, tail=0.0):
    """det(I + K) by symmetric eigendecomposition, cross-checked against
    det(I - B B*), plus the Loewner energy -12 log det(I - B B*)."""
    eig = np.linalg.eigvalsh(K.mat)
    if np.any(eig <= -1.0):
        raise KappaGeOneError("eigenvalue of K at or below -1")
    log_det_k = float(np.sum(np.log1p(eig)))
    sv = np.linalg.svd(K.b, compute_uv=False)
    log_det_b = float(np.sum(np.log1p(-sv**2)))
    det_k = np.exp(log_det_k)
    det_b = np.exp(log_det_b)
    if abs(det_k - det_b) > (1e-8 + tail) * max(abs(det_b), 1e-300):
        raise CrossCheckError(
            f"det(I+K) = {det_k!r} vs det(I-BB*) = {det_b!r} disagree"
        )
    loewner = -12.0 * log_det_b
    return det_k, loewner


def deformed_operators(G: GrunskyData, s):
    """K(s), d(s) for the deformed curve together with their s-derivatives.

    a_kl(s) = s**(k+l) a_kl, d_k(s) = s**k d_k; the derivative blocks carry
    (k+l) s**(k+l-1) sqrt(kl) a_kl and k s**(k-1) d_k.
    """
    if not (0.0 <= s <= 1.0):
        raise OutOfRangeError(f"s must lie in [0, 1], got {s}")
    K_s, d_s_full = build_operators(G.deformed(s))
    m = G.m
    k = np.arange(1, m + 1, dtype=float)
    ksum = k[:, None] + k[None, :]
    bprime = ksum * np.power(float(s), ksum - 1.0) * np.sqrt(np.outer(k, k)) * G.a
    kprime = np.block(
        [[bprime.real, bprime.imag], [bprime.imag, -bprime.real]]
    )
    _, d_base = build_operators(G)
    scale = np.concatenate([k * np.power(float(s), k - 1.0)] * 2)
    dprime = d_base.vec * scale
    return K_s, d_s_full, kprime, dprime
