"""Jordan curves given by the exterior conformal map as a finite Laurent series.

The exterior map is phi(z) = capacity*z + sum_j coeffs[j] * z**(-j), univalent on
|z| > 1.  Everything downstream (Grunsky coefficients, boundary integrals, gas
energies) evaluates this finite series exactly, so the named families here are
the only way curves enter the package.
"""

from dataclasses import dataclass, field

import numpy as np
import shapely

from .errors import (
    EmptySpecError,
    GridTooSmallError,
    NonUnivalentError,
    OutOfRangeError,
)

MIN_DPHI = 1e-8
CERT_GRID = 4096


@dataclass(frozen=True, eq=False)
class ConformalMap:
    """Truncated Laurent series of the exterior map, normalized to capacity 1.

    ``coeffs[j]`` multiplies ``z**(-j)`` for j = 0, 1, ...; ``raw_capacity``
    keeps the capacity of the input data so partition-function reports can
    reinstate the cap(gamma)**(beta*n^2/2 + (1-beta/2)*n) factor.
    """

    capacity: float
    coeffs: np.ndarray
    family: str | None = None
    raw_capacity: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=complex))
        self.coeffs.setflags(write=False)

    def evaluate(self, z):
        z = np.asarray(z, dtype=complex)
        out = self.capacity * z
        zinv = 1.0 / z
        p = np.ones_like(z)
        for c in self.coeffs:
            out = out + c * p
            p = p * zinv
        return out

    def derivative(self, z):
        z = np.asarray(z, dtype=complex)
        zinv = 1.0 / z
        out = np.full_like(z, self.capacity)
        for j, c in enumerate(self.coeffs):
            if j >= 1:
                out = out - j * c * zinv ** (j + 1)
        return out

    def second_derivative(self, z):
        z = np.asarray(z, dtype=complex)
        zinv = 1.0 / z
        out = np.zeros_like(z)
        for j, c in enumerate(self.coeffs):
            if j >= 1:
                out = out + j * (j + 1) * c * zinv ** (j + 2)
        return out

    def __call__(self, z):
        return self.evaluate(z)


@dataclass(frozen=True, eq=False)
class CurveSamples:
    """Exact evaluation of the map on the N-th roots of unity."""

    grid_size: int
    theta: np.ndarray
    z: np.ndarray
    dphi: np.ndarray
    log_abs_dphi: np.ndarray


def _is_power_of_two(n):
    return n >= 1 and (n & (n - 1)) == 0


def _certify_univalent(cmap, grid=CERT_GRID):
    """Grid univalence certificate: min |phi'| > threshold, phi' has winding
    number zero around 0 (no zeros of phi' outside the disc), and the sampled
    boundary polyline is simple."""
    theta = 2.0 * np.pi * np.arange(grid) / grid
    w = np.exp(1j * theta)
    dphi = cmap.derivative(w)
    mind = np.min(np.abs(dphi))
    if mind <= MIN_DPHI:
        raise NonUnivalentError(
            f"min |phi'| = {mind:.3e} on the certificate grid (<= {MIN_DPHI:.0e})"
        )
    ang = np.angle(dphi)
    dang = np.diff(np.concatenate([ang, ang[:1]]))
    dang = (dang + np.pi) % (2.0 * np.pi) - np.pi
    winding = int(np.rint(dang.sum() / (2.0 * np.pi)))
    if winding != 0:
        raise NonUnivalentError(
            f"phi' winds {winding} times around 0: phi' vanishes outside the disc"
        )
    z = cmap.evaluate(w)
    pts = np.column_stack([z.real, z.imag])
    seg = np.min(np.abs(np.diff(np.concatenate([z, z[:1]]))))
    if seg <= 1e-12 * np.max(np.abs(z)):
        raise NonUnivalentError("sampled boundary points are not pairwise distinct")
    ring = shapely.LineString(np.vstack([pts, pts[:1]]))
    if not ring.is_simple:
        raise NonUnivalentError("sampled boundary self-intersects")


def make_curve(spec):
    """Build a normalized ConformalMap from a curve-spec record.

    spec is one of
        {"type": "circle"}
        {"type": "ellipse", "c": real}        phi(z) = z + c/z
        {"type": "cubic",   "c": real}        phi(z) = z + c/z^2
        {"type": "laurent", "cap": real, "coeffs": [[j, re, im], ...]}

    The returned map is rescaled so capacity = 1; the incoming capacity is kept
    in ``raw_capacity``.  Raises NonUnivalentError when the grid certificate
    fails.
    """
    if not spec or "type" not in spec:
        raise EmptySpecError("curve spec must have a 'type' field")
    kind = spec["type"]
    cap = 1.0
    if kind == "circle":
        coeffs = np.zeros(0, dtype=complex)
    elif kind == "ellipse":
        if "c" not in spec:
            raise EmptySpecError("ellipse spec needs 'c'")
        coeffs = np.array([0.0, float(spec["c"])], dtype=complex)
    elif kind == "cubic":
        if "c" not in spec:
            raise EmptySpecError("cubic spec needs 'c'")
        coeffs = np.array([0.0, 0.0, float(spec["c"])], dtype=complex)
    elif kind == "laurent":
        if "coeffs" not in spec:
            raise EmptySpecError("laurent spec needs 'coeffs'")
        cap = float(spec.get("cap", 1.0))
        if not np.isfinite(cap) or cap <= 0.0:
            raise OutOfRangeError(f"capacity must be positive, got {cap}")
        entries = spec["coeffs"]
        jmax = max((int(e[0]) for e in entries), default=-1)
        coeffs = np.zeros(jmax + 1, dtype=complex)
        for j, re, im in entries:
            if int(j) < 0:
                raise OutOfRangeError("Laurent indices must be >= 0")
            coeffs[int(j)] += complex(re, im)
    else:
        raise EmptySpecError(f"unknown curve type {kind!r}")
    if not np.all(np.isfinite(coeffs)):
        raise OutOfRangeError("non-finite Laurent coefficient")
    # capacity normalization: phi/cap has coefficients c_j/cap
    cmap = ConformalMap(
        capacity=1.0, coeffs=coeffs / cap, family=kind, raw_capacity=cap
    )
    _certify_univalent(cmap)
    return cmap


def deform(cmap, s):
    """Coefficient action of phi_s(z) = s*phi(z/s): c_j -> s**(j+1) * c_j.

    s = 1 is the identity, s = 0 collapses every family to the circle.  The
    capacity is unchanged.
    """
    if not (0.0 <= s <= 1.0):
        raise OutOfRangeError(f"deformation parameter must lie in [0, 1], got {s}")
    j = np.arange(len(cmap.coeffs))
    scaled = cmap.coeffs * np.power(float(s), j + 1)
    return ConformalMap(
        capacity=cmap.capacity,
        coeffs=scaled,
        family=cmap.family,
        raw_capacity=cmap.raw_capacity,
    )


def sample_curve(cmap, N):
    """Evaluate phi, phi' and log|phi'| at the N-th roots of unity."""
    if not _is_power_of_two(N):
        raise GridTooSmallError(f"N = {N} is not a power of two")
    if N < 4 * (len(cmap.coeffs) + 1):
        raise GridTooSmallError(
            f"N = {N} < 4*(number of Laurent coefficients + 1) = "
            f"{4 * (len(cmap.coeffs) + 1)}"
        )
    theta = 2.0 * np.pi * np.arange(N) / N
    w = np.exp(1j * theta)
    z = cmap.evaluate(w)
    dphi = cmap.derivative(w)
    return CurveSamples(
        grid_size=N,
        theta=theta,
        z=z,
        dphi=dphi,
        log_abs_dphi=np.log(np.abs(dphi)),
    )
