"""Potential-theory oracles: Nystrom Neumann-Poincare operator, interior
Dirichlet solve by a double-layer ansatz, and Neumann-jump quadratures.

These routes never touch the Grunsky coefficients; they discretize the
classical boundary kernels directly, so agreement with the operator K built in
``grunsky`` is a genuine two-sided check.  All kernels are smooth after the
standard splits (the double-layer kernel is continuous on a C^2 curve with a
curvature diagonal limit; the log kernel splits into log|ratio| plus the
circle log whose Fourier multiplier is known), so plain periodic trapezoid
rules are spectrally accurate throughout.
"""

from dataclasses import dataclass

import numpy as np

from .boundary import BoundarySeries, HSolution
from .curve import ConformalMap
from .errors import QuadratureDivergenceError, SolveFailureError

DPHI_FLOOR = 1e-10


@dataclass(frozen=True, eq=False)
class NystromGrid:
    """Quadrature nodes zeta = phi(e^{i theta}) with arclength weights and frames."""

    N: int
    theta: np.ndarray
    zeta: np.ndarray
    dphi: np.ndarray
    weights: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray

    @property
    def length(self):
        return float(self.weights.sum())


def nystrom_grid(cmap: ConformalMap, N):
    theta = 2.0 * np.pi * np.arange(N) / N
    w = np.exp(1j * theta)
    dphi = cmap.derivative(w)
    speed = np.abs(1j * w * dphi)
    tangent = 1j * w * dphi / speed
    return NystromGrid(
        N=N,
        theta=theta,
        zeta=cmap.evaluate(w),
        dphi=dphi,
        weights=speed * (2.0 * np.pi / N),
        tangent=tangent,
        normal=-1j * tangent,  # exterior normal for the positively oriented curve
    )


def _np_kernel(cmap, theta):
    """The Neumann-Poincare kernel in the theta parametrization (measure dtheta):

        k(w, t) = (1/pi) Re[ e^{it} phi'(e^{it}) / (phi(e^{it}) - phi(e^{iw})) ]

    continuous on the torus; the diagonal limit is the curvature expression
    (1/2pi) (1 + Re[e^{it} phi''(e^{it}) / phi'(e^{it})]).
    """
    w = np.exp(1j * theta)
    phi = cmap.evaluate(w)
    dphi = cmap.derivative(w)
    if np.min(np.abs(dphi)) < DPHI_FLOOR:
        raise QuadratureDivergenceError("phi' vanishes at a quadrature node")
    num = (w * dphi)[None, :]
    den = phi[None, :] - phi[:, None]  # rows: target omega, cols: source theta
    idx = np.arange(len(theta))
    den[idx, idx] = 1.0
    kern = (num / den).real / np.pi
    diag = (1.0 + (w * cmap.second_derivative(w) / dphi).real) / (2.0 * np.pi)
    kern[idx, idx] = diag
    return kern


def np_matrix(cmap: ConformalMap, N):
    """Dense Nystrom matrix of the NP operator acting on grid samples."""
    theta = 2.0 * np.pi * np.arange(N) / N
    return _np_kernel(cmap, theta) * (2.0 * np.pi / N)


def np_fourier_matrix(cmap: ConformalMap, m, N):
    """NP operator in the weighted Fourier basis (cos k t / sqrt k, sin k t / sqrt k).

    Applies the Nystrom matrix to the 2m transported basis functions and
    projects back by discrete Fourier sums; the result equals the operator K
    of the Grunsky module up to quadrature error.
    """
    A = np_matrix(cmap, N)
    theta = 2.0 * np.pi * np.arange(N) / N
    k = np.arange(1, m + 1)
    kt = np.multiply.outer(theta, k)
    sq = np.sqrt(k)
    U = np.hstack([np.cos(kt) / sq, np.sin(kt) / sq])
    # projection rows sqrt(l) * (2/N) cos/sin(l theta_j)
    W = np.vstack([(np.cos(kt) * sq).T, (np.sin(kt) * sq).T]) * (2.0 / N)
    return W @ A @ U


def exterior_energy(g: BoundarySeries):
    """Dirichlet energy of the exterior harmonic extension, exactly
    pi * sum k (a_k^2 + b_k^2) by conformal invariance."""
    k = np.arange(1, g.m + 1)
    return float(np.pi * np.sum(k * (np.abs(g.a) ** 2 + np.abs(g.b) ** 2)))


def _circle_log_convolution(values):
    """f -> int log|2 sin((w-t)/2)| f(t) dt on the grid, via the exact
    multiplier -(pi/|k|) on e^{ikt} (zero on the mean)."""
    N = len(values)
    freq = np.fft.fftfreq(N, d=1.0 / N)
    mult = np.zeros(N)
    nz = freq != 0
    mult[nz] = -np.pi / np.abs(freq[nz])
    return np.fft.ifft(mult * np.fft.fft(values)).real


def _log_ratio_matrix(cmap, theta):
    w = np.exp(1j * theta)
    phi = cmap.evaluate(w)
    num = np.abs(phi[:, None] - phi[None, :])
    den = np.abs(w[:, None] - w[None, :])
    idx = np.arange(len(theta))
    den[idx, idx] = 1.0
    num[idx, idx] = np.abs(cmap.derivative(w))
    return np.log(num) - np.log(den)


def interior_dirichlet_energy(cmap: ConformalMap, g: BoundarySeries, N):
    """Energy int_gamma g (dg_-/dnu) ds of the interior harmonic extension.

    Solves the second-kind equation (I/2 + W) f = g for the double-layer
    density, then evaluates the normal derivative of the representation
    through the tangential form of the hypersingular operator:
    dnu W(f) = (1/2pi) d/ds S0(df/ds).  After an integration by parts the
    energy is a double quadrature of G' against the split log kernel.
    """
    theta = 2.0 * np.pi * np.arange(N) / N
    G = g.values(theta)
    lhs = 0.5 * np.eye(N) + 0.5 * np_matrix(cmap, N)
    try:
        f = np.linalg.solve(lhs, G)
    except np.linalg.LinAlgError as exc:
        raise SolveFailureError("double-layer system is singular") from exc
    cond_res = np.linalg.norm(lhs @ f - G)
    if not np.isfinite(cond_res) or cond_res > 1e-8 * max(np.linalg.norm(G), 1.0):
        raise SolveFailureError("double-layer solve did not converge")
    # FFT differentiation of the smooth periodic density
    freq = np.fft.fftfreq(N, d=1.0 / N)
    fp = np.fft.ifft(1j * freq * np.fft.fft(f)).real
    Gp = g.derivative_values(theta)
    smooth = _log_ratio_matrix(cmap, theta) @ fp * (2.0 * np.pi / N)
    circ = _circle_log_convolution(fp)
    return float(-(1.0 / (2.0 * np.pi)) * np.sum(Gp * (smooth + circ)) * (2.0 * np.pi / N))


def neumann_jump_energy(cmap: ConformalMap, g: BoundarySeries, h: HSolution, beta, N):
    """Quadratic form g^t (I+K)^{-1} g evaluated as the Neumann-jump quadrature
    (beta/2) * (1/4pi) int_gamma g (dh/ds) |dzeta|.

    The tangential derivative dh/ds = H'(theta)/|phi'| cancels the arclength
    weight, and the beta/2 factor removes the 2/beta carried by h, so the
    returned value is beta-independent.
    """
    theta = 2.0 * np.pi * np.arange(N) / N
    G = g.values(theta)
    Hp = h.derivative_values(theta)
    return float(beta / 2.0 * np.sum(G * Hp) * (2.0 * np.pi / N) / (4.0 * np.pi))


def single_layer(grid: NystromGrid, density, points):
    """S(f)(x) = (1/2pi) int log|zeta - x|^{-1} f(zeta) |dzeta| off the curve."""
    points = np.asarray(points, dtype=complex)
    d = np.abs(points[:, None] - grid.zeta[None, :])
    return (-(np.log(d) * density[None, :] * grid.weights[None, :]).sum(axis=1)
            / (2.0 * np.pi))


def single_layer_normal_derivative(grid: NystromGrid, density, offsets):
    """Directional derivative of the single layer along the node normals at
    zeta_i + offset * normal_i, one value per node, for each offset."""
    out = []
    for hgt in np.atleast_1d(offsets):
        x = grid.zeta + hgt * grid.normal
        diff = x[:, None] - grid.zeta[None, :]
        kern = -(grid.normal[:, None] / diff).real / (2.0 * np.pi)
        out.append((kern * density[None, :] * grid.weights[None, :]).sum(axis=1))
    return np.array(out)
