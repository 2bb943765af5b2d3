"""Direct sampling indicators: probe fields, the normalized index, combined
index, sampling sweeps, cross-correlation diagnostics, and numerical checks
of the analytic identities behind them.

The index of a sampling point x_p against data E^s is
    Psi(x_p; q) = |<E^s, Phi(., x_p) q>| / (||E^s|| ||Phi(., x_p) q||)
with all pairings in the weighted L2 product on the measurement surface.
Values lie in [0, 1] by Cauchy-Schwarz and peak near scatterer support.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import specfun
from .em_core import WaveContext, green_tensor_from_diff, im_green_tensor
from .errors import DomainError, GeometryError
from .measurement import FieldSamples, MeasurementSurface, circle_surface, l2_inner_product, l2_norm

_CHUNK_TARGET = 3_000_000  # probe entries held in memory at once


@dataclass(frozen=True)
class SamplingGrid:
    """Vertex lattice over an axis-aligned box, endpoints included.

    [-2, 2] at spacing 0.01 gives 401 points per axis; lattice points line up
    with multiples of the spacing so box corners and shape centres fall on
    grid points exactly.
    """

    box: tuple[tuple[float, float], ...]
    spacing: float

    def __post_init__(self):
        if self.spacing <= 0.0:
            raise DomainError("sampling spacing must be positive")
        for lo, hi in self.box:
            if hi <= lo:
                raise GeometryError("sampling box must have positive extent")

    @property
    def dimension(self) -> int:
        return len(self.box)

    @property
    def axes(self) -> tuple[np.ndarray, ...]:
        out = []
        for lo, hi in self.box:
            n = int(np.floor((hi - lo) / self.spacing + 1e-9)) + 1
            out.append(lo + self.spacing * np.arange(n))
        return tuple(out)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.axes)

    @property
    def n_points(self) -> int:
        return int(np.prod(self.shape))

    @property
    def points(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, self.dimension)


def sampling_grid(box, spacing: float) -> SamplingGrid:
    return SamplingGrid(tuple((float(lo), float(hi)) for lo, hi in box), float(spacing))


@dataclass(frozen=True)
class IndexGrid:
    """Real indicator values over a sampling grid, in [0, 1] after normalization."""

    grid: SamplingGrid
    values: np.ndarray  # flat, one value per grid point
    label: str

    def as_array(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)

    def argmax_location(self) -> np.ndarray:
        return self.grid.points[int(np.argmax(self.values))]

    def normalized(self) -> "IndexGrid":
        peak = self.values.max()
        scale = 1.0 / peak if peak > 0.0 else 1.0
        return IndexGrid(self.grid, self.values * scale, self.label)


def _check_inside(surface: MeasurementSurface, x, what: str) -> None:
    if not surface.contains_strictly(x):
        raise GeometryError(f"{what} must lie strictly inside the measurement surface")


def _grid_inside(surface: MeasurementSurface, grid: SamplingGrid) -> None:
    for corner in np.array(np.meshgrid(*[(lo, hi) for lo, hi in grid.box], indexing="ij")).reshape(len(grid.box), -1).T:
        _check_inside(surface, corner, "sampling box corner")


class _KernelParts:
    """Separation-dependent pieces of Phi between surface points and a chunk
    of sampling points, shared across polarizations and component selectors.

    Distances come from the |x|^2 + |y|^2 - 2 x.y expansion (one GEMM) and
    separation components are broadcast on demand, so no (C, M, d) array is
    ever materialized beyond the probe output itself.
    """

    def __init__(self, ctx: WaveContext, surface: MeasurementSurface, pts: np.ndarray):
        self.ctx = ctx
        self.surface_points = surface.points
        self.pts = pts
        k = ctx.wavenumber
        sq = np.sum(surface.points**2, axis=1)[np.newaxis, :] + np.sum(pts**2, axis=1)[:, np.newaxis]
        r2 = np.maximum(sq - 2.0 * (pts @ surface.points.T), 0.0)
        r = np.sqrt(r2)
        self.inv_r2 = 1.0 / r2
        if ctx.dimension == 2:
            h0, h1, h2 = specfun.hankel1_runs(k * r)
            pref = 0.25j * k * k
            self.diag = pref * (h0 - h1 / (k * r))  # coefficient of the identity part
            self.outer = pref * h2                  # coefficient of rhat rhat^T
        else:
            g = np.exp(1j * k * r) / (4.0 * np.pi * r)
            inv_r = 1.0 / r
            radial = 1j * k * inv_r - inv_r * inv_r
            self.diag = g * (k * k + radial)
            self.outer = g * (-(k * k) - 3.0 * radial)

    def _diff_component(self, i: int) -> np.ndarray:
        return self.surface_points[np.newaxis, :, i] - self.pts[:, np.newaxis, i]

    def probe(self, q: np.ndarray) -> np.ndarray:
        """Phi(x_m, x_p) q as an array of shape (C, M, d)."""
        d = self.ctx.dimension
        dot = self.surface_points @ q
        sr = dot[np.newaxis, :] - (self.pts @ q)[:, np.newaxis]  # (diff . q)
        coef = self.outer * sr * self.inv_r2
        out = np.empty(self.diag.shape + (d,), dtype=np.complex128)
        for i in range(d):
            out[..., i] = self.diag * q[i] + coef * self._diff_component(i)
        return out

    def component(self, i: int, j: int) -> np.ndarray:
        """Phi_ij(x_m, x_p) as an array of shape (C, M)."""
        out = self.outer * self.inv_r2 * self._diff_component(i) * self._diff_component(j)
        if i == j:
            out = out + self.diag
        return out


def _chunk_ranges(n_points: int, per_chunk: int):
    for start in range(0, n_points, per_chunk):
        yield start, min(start + per_chunk, n_points)


def _sweep(ctx, surface, grid, per_chunk_fn, n_outputs: int) -> list[np.ndarray]:
    """Data-parallel map over sampling-point chunks; results land in
    preallocated disjoint slots, so values do not depend on the thread count."""
    pts = grid.points
    per_chunk = max(1, _CHUNK_TARGET // (surface.count * ctx.dimension))
    outputs = [np.empty(grid.n_points) for _ in range(n_outputs)]

    def work(bounds):
        lo, hi = bounds
        parts = _KernelParts(ctx, surface, pts[lo:hi])
        for out, vals in zip(outputs, per_chunk_fn(parts)):
            out[lo:hi] = vals

    ranges = list(_chunk_ranges(grid.n_points, per_chunk))
    threads = int(os.environ.get("EMDSM_THREADS", "1"))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, ranges))
    else:
        for bounds in ranges:
            work(bounds)
    return outputs


def probe_field(ctx: WaveContext, surface: MeasurementSurface, x_p, q) -> FieldSamples:
    """Point-source probe Phi(., x_p) q sampled on the measurement surface."""
    x_p = np.asarray(x_p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    _check_inside(surface, x_p, "probe point")
    parts = _KernelParts(ctx, surface, x_p[np.newaxis, :])
    return FieldSamples(surface, parts.probe(q)[0])


def index_psi(ctx: WaveContext, data: FieldSamples, x_p, q) -> float:
    """Normalized correlation of the data with the probe at x_p; in [0, 1]."""
    data_norm = l2_norm(data)
    if data_norm == 0.0:
        raise DomainError("index is undefined for identically zero data")
    probe = probe_field(ctx, data.surface, x_p, q)
    num = abs(l2_inner_product(data, probe))
    return float(num / (data_norm * l2_norm(probe)))


def index_combined(ctx: WaveContext, datasets):
    """Mean of per-polarization indices; returns a per-point callable."""
    datasets = list(datasets)
    if not datasets:
        raise DomainError("combined index needs at least one dataset")
    surfaces = [data.surface for data, _ in datasets]
    for other in surfaces[1:]:
        if other is not surfaces[0] and not np.array_equal(other.points, surfaces[0].points):
            raise GeometryError("all datasets must share one measurement surface")

    def evaluate(x_p) -> float:
        return float(np.mean([index_psi(ctx, data, x_p, q) for data, q in datasets]))

    return evaluate


def compute_index_grid(ctx: WaveContext, datasets, grid: SamplingGrid,
                       mode: str = "combined") -> list[IndexGrid]:
    """Index values over every sampling point, one sweep for all datasets.

    mode "per_polarization" returns one grid per dataset; "combined" returns
    the single averaged grid; "both" returns the per-polarization grids
    followed by the combined one.
    """
    if mode not in ("per_polarization", "combined", "both"):
        raise DomainError(f"unknown mode {mode!r}")
    datasets = list(datasets)
    if not datasets:
        raise DomainError("index sweep needs at least one dataset")
    surface = datasets[0][0].surface
    _grid_inside(surface, grid)
    qs = [np.asarray(q, dtype=np.float64) for _, q in datasets]
    data_norms = [l2_norm(data) for data, _ in datasets]
    if any(n == 0.0 for n in data_norms):
        raise DomainError("index is undefined for identically zero data")
    weights = surface.weights
    # fold the quadrature weights into the data once; the chunk work then
    # reduces to BLAS matrix-vector products
    weighted_conj = [
        (weights[:, np.newaxis] * data.values).conj().reshape(-1) for data, _ in datasets
    ]
    weight_flat = np.repeat(weights, ctx.dimension)

    def per_chunk(parts: _KernelParts):
        out = []
        for wdata, norm, q in zip(weighted_conj, data_norms, qs):
            probe = parts.probe(q).reshape(len(parts.diag), -1)
            num = np.abs(probe @ wdata)
            den = np.sqrt((probe.real**2 + probe.imag**2) @ weight_flat)
            out.append(num / (norm * den))
        return out

    per_pol = _sweep(ctx, surface, grid, per_chunk, len(datasets))
    grids = [
        IndexGrid(grid, vals, f"single_polarization:{i}")
        for i, vals in enumerate(per_pol)
    ]
    if mode == "per_polarization":
        return grids
    combined = IndexGrid(grid, np.mean(per_pol, axis=0), "combined")
    if mode == "combined":
        return [combined]
    return grids + [combined]


@dataclass(frozen=True)
class CrossSelector:
    kind: str  # component | diagonal_sum | polarization | polarization_sum
    i: int = 0
    j: int = 0
    qs: tuple = ()


def component(i: int, j: int) -> CrossSelector:
    return CrossSelector("component", i=i, j=j)


def diagonal_sum() -> CrossSelector:
    return CrossSelector("diagonal_sum")


def polarization(q) -> CrossSelector:
    return CrossSelector("polarization", qs=(tuple(np.asarray(q, dtype=float)),))


def polarization_sum(qs) -> CrossSelector:
    return CrossSelector("polarization_sum", qs=tuple(tuple(np.asarray(q, dtype=float)) for q in qs))


def cross_product_maps(ctx: WaveContext, surface: MeasurementSurface, x_q,
                       grid: SamplingGrid, selectors) -> list[IndexGrid]:
    """Cross-correlation maps for several selectors in one sweep, sharing the
    kernel evaluations between them; see cross_product_map."""
    x_q = np.asarray(x_q, dtype=np.float64)
    _check_inside(surface, x_q, "reference point")
    _grid_inside(surface, grid)
    ref_parts = _KernelParts(ctx, surface, x_q[np.newaxis, :])
    weights = surface.weights

    evaluators = []
    labels = []
    for selector in selectors:
        if selector.kind in ("component", "diagonal_sum"):
            if selector.kind == "component":
                pairs = [(selector.i, selector.j)]
            else:
                pairs = [(i, i) for i in range(ctx.dimension)]
            refs = [weights * ref_parts.component(i, j)[0].conj() for i, j in pairs]

            def evaluate(parts, pairs=pairs, refs=refs):
                corr = 0.0
                for (i, j), ref in zip(pairs, refs):
                    corr = corr + parts.component(i, j) @ ref
                return np.abs(corr)

        elif selector.kind in ("polarization", "polarization_sum"):
            qs = [np.asarray(q, dtype=np.float64) for q in selector.qs]
            refs = [
                (weights[:, np.newaxis] * ref_parts.probe(q)[0].conj()).reshape(-1) for q in qs
            ]

            def evaluate(parts, qs=qs, refs=refs):
                corr = 0.0
                for q, ref in zip(qs, refs):
                    corr = corr + parts.probe(q).reshape(len(parts.diag), -1) @ ref
                return np.abs(corr)

        else:
            raise DomainError(f"unknown selector {selector.kind!r}")
        evaluators.append(evaluate)
        label = selector.kind
        if selector.kind == "component":
            label += f":{selector.i + 1}{selector.j + 1}"
        labels.append(f"cross:{label}")

    def per_chunk(parts):
        return [evaluate(parts) for evaluate in evaluators]

    value_arrays = _sweep(ctx, surface, grid, per_chunk, len(evaluators))
    return [
        IndexGrid(grid, values, label).normalized()
        for values, label in zip(value_arrays, labels)
    ]


def cross_product_map(ctx: WaveContext, surface: MeasurementSurface, x_q,
                      grid: SamplingGrid, selector: CrossSelector) -> IndexGrid:
    """Max-normalized magnitude of the surface correlation between probes
    anchored at the sampling points and the fixed reference point x_q.

    For polarization_sum the per-polarization correlations are summed before
    the magnitude is taken, which reproduces the component combination
    Phi_11 + 2 Phi_12 + Phi_22 for the standard diagonal polarization pair.
    """
    return cross_product_maps(ctx, surface, x_q, grid, [selector])[0]


def find_local_maxima(index: IndexGrid, floor_ratio: float = 0.5):
    """Strictly dominant 8-/26-neighbourhood maxima above floor_ratio * peak,
    sorted by value, strongest first."""
    arr = index.as_array()
    d = arr.ndim
    padded = np.pad(arr, 1, constant_values=-np.inf)
    core = tuple(slice(1, -1) for _ in range(d))
    dominant = np.ones(arr.shape, dtype=bool)
    for offset in np.ndindex(*([3] * d)):
        if all(o == 1 for o in offset):
            continue
        shifted = padded[tuple(slice(o, o + n) for o, n in zip(offset, arr.shape))]
        dominant &= arr > shifted
    dominant &= arr >= floor_ratio * arr.max()
    axes = index.grid.axes
    results = []
    for loc in np.argwhere(dominant):
        point = np.array([axes[a][loc[a]] for a in range(d)])
        results.append((point, float(arr[tuple(loc)])))
    results.sort(key=lambda item: -item[1])
    return results


@dataclass(frozen=True)
class LemmaCheck:
    lhs: complex
    rhs: complex
    rel_err: float


def _curl_of_probe(ctx: WaveContext, source: np.ndarray, v: np.ndarray,
                   points: np.ndarray, step: float) -> np.ndarray:
    """Curl of F(x) = Phi(x, source) v at the given points, by 4th-order
    central differences of the closed-form kernel."""
    d = ctx.dimension
    offsets = np.array([2.0, 1.0, -1.0, -2.0]) * step
    coeff = np.array([-1.0, 8.0, -8.0, 1.0]) / (12.0 * step)
    # partial_a F_i for every axis a: (M, d_axis, d_comp)
    eval_pts = (
        points[:, np.newaxis, np.newaxis, :]
        + offsets[np.newaxis, np.newaxis, :, np.newaxis]
        * np.eye(d)[np.newaxis, :, np.newaxis, :]
    )  # (M, a, 4, d)
    phi = green_tensor_from_diff(ctx, eval_pts - source)
    f_vals = phi @ v  # (M, a, 4, d_comp)
    grad = np.einsum("s,masc->mac", coeff, f_vals)
    if d == 2:
        return grad[:, 0, 1] - grad[:, 1, 0]  # scalar curl (M,)
    curl = np.empty((points.shape[0], 3), dtype=np.complex128)
    curl[:, 0] = grad[:, 1, 2] - grad[:, 2, 1]
    curl[:, 1] = grad[:, 2, 0] - grad[:, 0, 2]
    curl[:, 2] = grad[:, 0, 1] - grad[:, 1, 0]
    return curl


def _curl_cross_n(curl, normals, dimension: int) -> np.ndarray:
    if dimension == 2:
        # out-of-plane scalar curl crossed with an in-plane normal
        return np.stack([-curl * normals[:, 1], curl * normals[:, 0]], axis=1)
    return np.cross(curl, normals)


def verify_boundary_lemma(ctx: WaveContext, surface: MeasurementSurface,
                          x_p, x_q, p, q, fd_step: float | None = None) -> LemmaCheck:
    """Surface form of the reciprocity identity for two interior points:

        int_Gamma (curl conj(Phi(., x_q) q) x n, Phi(., x_p) p)
                - (curl Phi(., x_p) p x n, conj(Phi(., x_q) q)) ds
            = -2i k^2 (p, Im Phi(x_p, x_q) q)

    with the bilinear (unconjugated) vector pairing.  The k^2 on the right
    comes from curl curl Phi - k^2 Phi = k^2 delta I, which is the
    normalization that Phi = k^2 G I + Hess G actually satisfies.  The curls
    are taken by 4th-order central differences, so the reported error is
    quadrature plus differencing noise; the identity itself is exact.
    """
    x_p = np.asarray(x_p, dtype=np.float64)
    x_q = np.asarray(x_q, dtype=np.float64)
    p = np.asarray(p, dtype=np.complex128)
    q = np.asarray(q, dtype=np.float64)
    if np.array_equal(x_p, x_q):
        raise GeometryError("the identity needs two distinct interior points")
    margin = ctx.wavelength
    for point, name in ((x_p, "x_p"), (x_q, "x_q")):
        if not surface.contains_strictly(point, margin=margin):
            raise GeometryError(f"{name} must be inside the surface, at least one wavelength away")
    if fd_step is None:
        fd_step = 1e-4 * ctx.wavelength

    curl_p = _curl_of_probe(ctx, x_p, p, surface.points, fd_step)
    curl_q = _curl_of_probe(ctx, x_q, q.astype(np.complex128), surface.points, fd_step)
    phi_p = green_tensor_from_diff(ctx, surface.points - x_p) @ p
    phi_q = green_tensor_from_diff(ctx, surface.points - x_q) @ q
    term1 = np.sum(_curl_cross_n(curl_q.conj(), surface.normals, ctx.dimension) * phi_p, axis=1)
    term2 = np.sum(_curl_cross_n(curl_p, surface.normals, ctx.dimension) * phi_q.conj(), axis=1)
    lhs = complex(np.sum(surface.weights * (term1 - term2)))
    rhs = complex(-2j * ctx.wavenumber**2 * (p @ (im_green_tensor(ctx, x_p, x_q) @ q)))
    return LemmaCheck(lhs, rhs, abs(lhs - rhs) / abs(rhs))


@dataclass(frozen=True)
class CorrelationRow:
    radius: float
    lhs: complex
    rhs: float
    err: float


def verify_correlation_approx(ctx: WaveContext, radii, x_p, x_q, p, q,
                              count: int = 512) -> list[CorrelationRow]:
    """Radiation-zone approximation of the probe cross-correlation:

        int_Gamma (Phi(., x_p) p, conj(Phi(., x_q) q)) ds
            ~ k (p, Im Phi(x_p, x_q) q)

    evaluated on origin-centred circles; the error decays as the radius grows
    because the boundary curls approach their radiating limits.  The factor k
    is k^2 * (1/k): the reciprocity identity carries k^2 (see
    verify_boundary_lemma) and the radiating substitution contributes 1/k.
    """
    if ctx.dimension != 2:
        raise DomainError("the correlation check uses circular surfaces (2D)")
    x_p = np.asarray(x_p, dtype=np.float64)
    x_q = np.asarray(x_q, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    rhs = ctx.wavenumber * float(p @ (im_green_tensor(ctx, x_p, x_q) @ q))
    rows = []
    for radius in radii:
        surface = circle_surface(float(radius), count)
        for point in (x_p, x_q):
            if not surface.contains_strictly(point, margin=ctx.wavelength):
                raise GeometryError("sampling points must be well inside every surface")
        lhs = l2_inner_product(
            probe_field(ctx, surface, x_p, p), probe_field(ctx, surface, x_q, q)
        )
        rows.append(CorrelationRow(float(radius), lhs, rhs, abs(lhs - rhs) / abs(rhs)))
    return rows


def write_index_csv(index: IndexGrid, path) -> None:
    """One row per sampling point: coordinates then the index value."""
    d = index.grid.dimension
    pts = index.grid.points
    with open(path, "w") as fh:
        fh.write(",".join(f"x{i + 1}" for i in range(d)) + ",value\n")
        for row, val in zip(pts, index.values):
            fh.write(",".join(f"{c:.17g}" for c in row) + f",{val:.17g}\n")


def write_index_pgm(index: IndexGrid, path) -> None:
    """16-bit binary PGM, [0, max] mapped linearly onto [0, 65535].

    2D grids map directly (columns along the first axis, rows along the
    second, top row at the largest coordinate); 3D grids are exported as the
    maximum-intensity projection along the last axis.
    """
    arr = index.as_array()
    if arr.ndim == 3:
        arr = arr.max(axis=2)
    peak = arr.max()
    scaled = (arr / peak * 65535.0) if peak > 0 else np.zeros_like(arr)
    image = np.rint(scaled.T[::-1, :]).astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{image.shape[1]} {image.shape[0]}\n65535\n".encode())
        fh.write(image.tobytes())
