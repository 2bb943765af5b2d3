"""Measurement surfaces, near-field data synthesis, the noise model, and L2(Gamma) geometry."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .em_core import WaveContext, green_tensor_from_diff
from .errors import DomainError, GeometryError

_NOISE_BITGEN = np.random.PCG64  # named, seedable, portable


@dataclass(frozen=True)
class MeasurementSurface:
    """Discrete closed curve/surface: points, quadrature weights, outward normals."""

    points: np.ndarray
    weights: np.ndarray
    normals: np.ndarray
    descriptor: str

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    @property
    def count(self) -> int:
        return self.points.shape[0]

    def contains_strictly(self, x, margin: float = 0.0) -> bool:
        """Whether x lies strictly inside the enclosed region (minus a margin)."""
        x = np.asarray(x, dtype=np.float64)
        if self.descriptor.startswith("circle"):
            radius = float(self.descriptor.split(":")[1])
            return float(np.linalg.norm(x)) < radius - margin
        edge = float(self.descriptor.split(":")[1])
        return bool(np.all(np.abs(x) < 0.5 * edge - margin))


def circle_surface(radius: float, count: int) -> MeasurementSurface:
    """count equally spaced points on the origin-centred circle, weight 2 pi R / count."""
    if radius <= 0.0:
        raise DomainError("radius must be positive")
    if count < 3:
        raise DomainError("a circle needs at least 3 points")
    theta = 2.0 * np.pi * np.arange(count) / count
    normals = np.column_stack([np.cos(theta), np.sin(theta)])
    points = radius * normals
    weights = np.full(count, 2.0 * np.pi * radius / count)
    return MeasurementSurface(points, weights, normals, f"circle:{radius!r}:{count}")


def cube_surface(edge: float, per_face: int) -> MeasurementSurface:
    """Cell-centred per_face x per_face lattice on each face of the origin-centred cube.

    Cell centring avoids double-counting shared edges and corners; each point
    carries weight (edge/per_face)^2 so the weights sum to the full area 6*edge^2.
    """
    if edge <= 0.0:
        raise DomainError("edge must be positive")
    if per_face < 1:
        raise DomainError("per_face must be at least 1")
    half = 0.5 * edge
    ticks = -half + (np.arange(per_face) + 0.5) * (edge / per_face)
    u, v = np.meshgrid(ticks, ticks, indexing="ij")
    u = u.ravel()
    v = v.ravel()
    points = []
    normals = []
    for axis in range(3):
        for sign in (-1.0, 1.0):
            face = np.empty((per_face * per_face, 3))
            face[:, axis] = sign * half
            others = [a for a in range(3) if a != axis]
            face[:, others[0]] = u
            face[:, others[1]] = v
            points.append(face)
            n = np.zeros((per_face * per_face, 3))
            n[:, axis] = sign
            normals.append(n)
    points = np.vstack(points)
    normals = np.vstack(normals)
    weights = np.full(points.shape[0], (edge / per_face) ** 2)
    return MeasurementSurface(points, weights, normals, f"cube:{edge!r}:{per_face}")


@dataclass(frozen=True)
class Provenance:
    kind: str  # "exact" | "noisy"
    epsilon: float = 0.0
    seed: int | None = None


@dataclass(frozen=True)
class FieldSamples:
    """Complex d-vector field values at the surface points."""

    surface: MeasurementSurface
    values: np.ndarray
    provenance: Provenance = Provenance("exact")

    def __post_init__(self):
        if self.values.shape != (self.surface.count, self.surface.dimension):
            raise GeometryError("values must be one d-vector per surface point")


def synthesize_scattered_field(current, surface: MeasurementSurface, ctx: WaveContext) -> FieldSamples:
    """Discrete-sum scattered field E^s(x_m) = sum_j Phi(x_m, y_j) J_j h^d.

    The sum runs only over nodes carrying nonzero current; every measurement
    point must lie strictly outside the source grid's bounding box.
    """
    lo, hi = current.grid.bounds
    inside = np.all((surface.points >= lo) & (surface.points <= hi), axis=1)
    if inside.any():
        raise GeometryError("measurement points must lie outside the forward grid box")
    active = np.flatnonzero(np.any(current.values != 0.0, axis=1))
    values = np.zeros((surface.count, ctx.dimension), dtype=np.complex128)
    if active.size:
        sources = current.grid.nodes[active]
        j_vals = current.values[active]
        diffs = surface.points[:, np.newaxis, :] - sources[np.newaxis, :, :]
        phi = green_tensor_from_diff(ctx, diffs)
        values = np.einsum("mjab,jb->ma", phi, j_vals) * current.grid.cell_measure
    return FieldSamples(surface, values, Provenance("exact"))


def add_noise(samples: FieldSamples, epsilon: float, seed: int) -> FieldSamples:
    """Perturb each complex vector component by eps * max_Gamma |E| * zeta.

    zeta has independent standard-normal real and imaginary parts per
    component per point; the draw order is point-major, component-minor,
    real before imaginary, so outputs are bit-reproducible for a given seed.
    """
    if epsilon < 0.0:
        raise DomainError("noise level must be nonnegative")
    if epsilon == 0.0:
        return replace(samples)
    rng = np.random.Generator(_NOISE_BITGEN(seed))
    draws = rng.standard_normal(samples.values.shape + (2,))
    zeta = draws[..., 0] + 1j * draws[..., 1]
    scale = epsilon * np.linalg.norm(samples.values, axis=1).max()
    return FieldSamples(
        samples.surface,
        samples.values + scale * zeta,
        Provenance("noisy", epsilon, seed),
    )


def l2_inner_product(f: FieldSamples, g: FieldSamples) -> complex:
    """Weighted hermitian pairing sum_m w_m sum_i f_i(x_m) conj(g_i(x_m))."""
    if f.surface is not g.surface and not (
        np.array_equal(f.surface.points, g.surface.points)
        and np.array_equal(f.surface.weights, g.surface.weights)
    ):
        raise GeometryError("inner product requires samples on the same surface")
    return complex(np.sum(f.surface.weights * np.sum(f.values * np.conj(g.values), axis=1)))


def l2_norm(f: FieldSamples) -> float:
    return float(np.sqrt(max(l2_inner_product(f, f).real, 0.0)))


def write_field_samples_csv(samples: FieldSamples, path) -> None:
    """CSV schema: x1..xd, w, Re/Im per component, 17 significant digits."""
    d = samples.surface.dimension
    header = [f"x{i + 1}" for i in range(d)] + ["w"]
    for i in range(d):
        header += [f"Re_E{i + 1}", f"Im_E{i + 1}"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for m in range(samples.surface.count):
            row = [f"{v:.17g}" for v in samples.surface.points[m]]
            row.append(f"{samples.surface.weights[m]:.17g}")
            for i in range(d):
                row.append(f"{samples.values[m, i].real:.17g}")
                row.append(f"{samples.values[m, i].imag:.17g}")
            writer.writerow(row)


def read_field_samples_csv(path, surface: MeasurementSurface | None = None) -> FieldSamples:
    """Inverse of write_field_samples_csv; rebuilds a generic surface if none is given."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, data = rows[0], rows[1:]
    d = sum(1 for name in header if name.startswith("x"))
    arr = np.array([[float(v) for v in row] for row in data])
    points = arr[:, :d]
    weights = arr[:, d]
    values = arr[:, d + 1 :: 2] + 1j * arr[:, d + 2 :: 2]
    if surface is None:
        surface = MeasurementSurface(points, weights, np.zeros_like(points), "file")
    return FieldSamples(surface, values)
