"""Wave context, incident plane waves, scatterer contrast, and Green's functions.

The matrix kernel is the divergence-free fundamental solution of the
time-harmonic curl-curl system, Phi = k^2 G I + Hess(G), with G the scalar
Helmholtz fundamental solution.  Closed-form components are used throughout;
the defining k^2 G I + Hess(G) expression survives only as a test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import specfun
from .errors import DimensionMismatchError, DomainError, GeometryError, SingularityError

_TWO_PI = 2.0 * np.pi

_SHAPE_KINDS = ("axis_square", "square_ring", "axis_cube")


@dataclass(frozen=True)
class WaveContext:
    """Spatial dimension plus wavenumber/wavelength pair (k * lambda = 2 pi)."""

    dimension: int
    wavenumber: float
    wavelength: float

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise DimensionMismatchError(f"dimension must be 2 or 3, got {self.dimension}")
        if self.wavenumber <= 0.0 or self.wavelength <= 0.0:
            raise DomainError("wavenumber and wavelength must be positive")
        if abs(self.wavenumber * self.wavelength - _TWO_PI) > 1e-12 * _TWO_PI:
            raise DomainError("wavenumber * wavelength must equal 2*pi")

    @classmethod
    def from_wavelength(cls, dimension: int, wavelength: float) -> "WaveContext":
        return cls(dimension, _TWO_PI / wavelength, wavelength)

    @classmethod
    def from_wavenumber(cls, dimension: int, wavenumber: float) -> "WaveContext":
        return cls(dimension, wavenumber, _TWO_PI / wavenumber)


def _as_point(ctx: WaveContext, x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.shape[-1] != ctx.dimension:
        raise DimensionMismatchError(
            f"point has {arr.shape[-1]} coordinates, context dimension is {ctx.dimension}"
        )
    return arr


@dataclass(frozen=True)
class IncidentPlaneWave:
    """Unit-amplitude plane wave p * exp(i k d.x) with p perpendicular to d."""

    direction: np.ndarray
    polarization: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=np.float64)
        p = np.asarray(self.polarization, dtype=np.float64)
        if d.shape != p.shape or d.ndim != 1:
            raise DimensionMismatchError("direction and polarization must be vectors of the same length")
        if abs(np.linalg.norm(d) - 1.0) > 1e-12 or abs(np.linalg.norm(p) - 1.0) > 1e-12:
            raise DomainError("direction and polarization must be unit vectors")
        if abs(float(d @ p)) > 1e-12:
            raise DomainError("polarization must be perpendicular to the incident direction")
        object.__setattr__(self, "direction", d)
        object.__setattr__(self, "polarization", p)

    @property
    def dimension(self) -> int:
        return self.direction.shape[0]


def incident_field(wave: IncidentPlaneWave, ctx: WaveContext, x) -> np.ndarray:
    """E^i(x) = p exp(i k d.x); x may be a point or an (..., d) batch."""
    if wave.dimension != ctx.dimension:
        raise DimensionMismatchError("incident wave dimension does not match context")
    pts = _as_point(ctx, x)
    phase = np.exp(1j * ctx.wavenumber * (pts @ wave.direction))
    return phase[..., np.newaxis] * wave.polarization


@dataclass(frozen=True)
class Shape:
    """Axis-aligned box-type scatterer; membership uses half-open cells."""

    kind: str
    center: np.ndarray
    outer_side: float
    inner_side: float = 0.0
    eta: complex = 1.0 + 0.0j

    def __post_init__(self):
        if self.kind not in _SHAPE_KINDS:
            raise DomainError(f"unknown shape kind {self.kind!r}")
        center = np.asarray(self.center, dtype=np.float64)
        object.__setattr__(self, "center", center)
        expected_dim = 3 if self.kind == "axis_cube" else 2
        if center.shape != (expected_dim,):
            raise DimensionMismatchError(f"{self.kind} needs a {expected_dim}-vector center")
        if self.outer_side <= 0.0:
            raise DomainError("outer_side must be positive")
        if self.kind == "square_ring":
            if not 0.0 <= self.inner_side < self.outer_side:
                raise DomainError("ring needs 0 <= inner_side < outer_side")
        elif self.inner_side != 0.0:
            raise DomainError("inner_side is only meaningful for square_ring")
        object.__setattr__(self, "eta", complex(self.eta))

    @property
    def dimension(self) -> int:
        return self.center.shape[0]

    def _in_box(self, points: np.ndarray, side: float) -> np.ndarray:
        lo = self.center - 0.5 * side
        hi = self.center + 0.5 * side
        return np.all((points >= lo) & (points < hi), axis=-1)

    def contains(self, points: np.ndarray) -> np.ndarray:
        inside = self._in_box(points, self.outer_side)
        if self.kind == "square_ring" and self.inner_side > 0.0:
            inside &= ~self._in_box(points, self.inner_side)
        return inside

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        half = 0.5 * self.outer_side
        return self.center - half, self.center + half


@dataclass(frozen=True)
class ContrastField:
    """Ordered shape list defining eta(x) = n^2 - 1; later shapes override earlier ones."""

    shapes: tuple[Shape, ...]

    def __init__(self, shapes):
        object.__setattr__(self, "shapes", tuple(shapes))
        if not self.shapes:
            raise GeometryError("contrast field needs at least one shape")
        dims = {s.dimension for s in self.shapes}
        if len(dims) != 1:
            raise DimensionMismatchError("all shapes must share one dimension")

    @property
    def dimension(self) -> int:
        return self.shapes[0].dimension

    @property
    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        los, his = zip(*(s.bounds for s in self.shapes))
        return np.min(los, axis=0), np.max(his, axis=0)

    def eta_at(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        scalar = pts.ndim == 1
        pts = np.atleast_2d(pts)
        out = np.zeros(pts.shape[:-1], dtype=np.complex128)
        for shape in self.shapes:
            mask = shape.contains(pts)
            out[mask] = shape.eta
        return out[0] if scalar else out


def contrast_eval(contrast: ContrastField, x) -> complex:
    """eta at a single point (0 outside every shape, 0 in ring holes)."""
    return complex(contrast.eta_at(np.asarray(x, dtype=np.float64)))


def _distances(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.linalg.norm(x - y, axis=-1)


def green_scalar_from_distance(ctx: WaveContext, r) -> np.ndarray:
    """Scalar free-space kernel as a function of separation r > 0."""
    r = np.asarray(r, dtype=np.float64)
    if np.any(r <= 0.0):
        raise SingularityError("scalar kernel requires strictly positive separation")
    kr = ctx.wavenumber * r
    if ctx.dimension == 2:
        return 0.25j * specfun.hankel1(0, kr)
    return np.exp(1j * kr) / (4.0 * np.pi * r)


def green_scalar(ctx: WaveContext, x, y) -> complex:
    """G(x, y): (i/4) H_0^(1)(k|x-y|) in 2D, e^{ik|x-y|}/(4 pi |x-y|) in 3D."""
    xp = _as_point(ctx, x)
    yp = _as_point(ctx, y)
    r = _distances(xp, yp)
    if np.any(r == 0.0):
        raise SingularityError("green_scalar called with coincident points")
    out = green_scalar_from_distance(ctx, r)
    return complex(out) if np.ndim(out) == 0 else out


def green_tensor_from_diff(ctx: WaveContext, diff) -> np.ndarray:
    """Matrix kernel Phi for separation vectors diff = x - y, shape (..., d).

    Closed-form components: in 2D via H_0, H_1, H_2, in 3D via the explicit
    bracket; returns shape (..., d, d).
    """
    d = ctx.dimension
    diff = np.asarray(diff, dtype=np.float64)
    if diff.shape[-1] != d:
        raise DimensionMismatchError("separation vector length does not match context")
    batch_shape = diff.shape[:-1]
    flat = diff.reshape(-1, d)
    r = np.linalg.norm(flat, axis=-1)
    if np.any(r == 0.0):
        raise SingularityError("matrix kernel is singular at coincident points")
    k = ctx.wavenumber
    rhat = flat / r[:, np.newaxis]
    outer = rhat[:, :, np.newaxis] * rhat[:, np.newaxis, :]
    eye = np.eye(d)
    if d == 2:
        h0, h1, h2 = specfun.hankel1_runs(k * r)
        out = 0.25j * k * k * (
            (h0 - h1 / (k * r))[:, np.newaxis, np.newaxis] * eye
            + h2[:, np.newaxis, np.newaxis] * outer
        )
    else:
        g = np.exp(1j * k * r) / (4.0 * np.pi * r)
        inv_r = 1.0 / r
        radial = (1j * k * inv_r - inv_r * inv_r)[:, np.newaxis, np.newaxis]
        out = g[:, np.newaxis, np.newaxis] * (
            k * k * (eye - outer) + radial * (eye - 3.0 * outer)
        )
    return out.reshape(batch_shape + (d, d))


def green_tensor(ctx: WaveContext, x, y) -> np.ndarray:
    """Phi(x, y) = k^2 G I + Hess G in closed form; symmetric d x d matrix."""
    xp = _as_point(ctx, x)
    yp = _as_point(ctx, y)
    return green_tensor_from_diff(ctx, xp - yp)


def im_green_tensor_from_diff(ctx: WaveContext, diff) -> np.ndarray:
    """Im Phi for separations diff; finite (and isotropic) at zero separation."""
    d = ctx.dimension
    diff = np.asarray(diff, dtype=np.float64)
    if diff.shape[-1] != d:
        raise DimensionMismatchError("separation vector length does not match context")
    batch_shape = diff.shape[:-1]
    flat = diff.reshape(-1, d)
    r = np.linalg.norm(flat, axis=-1)
    k = ctx.wavenumber
    eye = np.eye(d)
    out = np.empty((flat.shape[0], d, d))
    coincident = r == 0.0
    if coincident.any():
        out[coincident] = (k * k / 8.0) * eye if d == 2 else (k**3 / (6.0 * np.pi)) * eye
    regular = ~coincident
    if regular.any():
        rr = r[regular]
        rhat = flat[regular] / rr[:, np.newaxis]
        outer = rhat[:, :, np.newaxis] * rhat[:, np.newaxis, :]
        kr = k * rr
        if d == 2:
            j0 = specfun.bessel_j(0, kr)
            j1 = specfun.bessel_j(1, kr)
            j2 = specfun.bessel_j(2, kr)
            out[regular] = 0.25 * k * k * (
                (j0 - j1 / kr)[:, np.newaxis, np.newaxis] * eye
                + j2[:, np.newaxis, np.newaxis] * outer
            )
        else:
            s = np.sin(kr)[:, np.newaxis, np.newaxis]
            c = np.cos(kr)[:, np.newaxis, np.newaxis]
            inv_r = (1.0 / rr)[:, np.newaxis, np.newaxis]
            out[regular] = (
                s * (k * k * (eye - outer) - inv_r * inv_r * (eye - 3.0 * outer))
                + k * c * inv_r * (eye - 3.0 * outer)
            ) * (inv_r / (4.0 * np.pi))
    return out.reshape(batch_shape + (d, d))


def im_green_tensor(ctx: WaveContext, x, y) -> np.ndarray:
    xp = _as_point(ctx, x)
    yp = _as_point(ctx, y)
    return im_green_tensor_from_diff(ctx, xp - yp)


def im_trace_green_tensor(ctx: WaveContext, r) -> np.ndarray:
    """(d-1) k^2 Im G(r): k^2 J_0(kr)/4 in 2D, 2 k^2 sin(kr)/(4 pi r) in 3D.

    Peaks at zero separation, which is what makes the trace combination a
    sharp probe of source locations.
    """
    r = np.asarray(r, dtype=np.float64)
    k = ctx.wavenumber
    if ctx.dimension == 2:
        if np.any(r < 0.0):
            raise DomainError("separation must be nonnegative")
        return 0.25 * k * k * specfun.bessel_j(0, k * r)
    if np.any(r <= 0.0):
        raise DomainError("separation must be positive in 3D")
    return 2.0 * k * k * np.sin(k * r) / (4.0 * np.pi * r)
