"""Forward scattering: discretize and solve the volume current equation.

The current J = eta * E satisfies J - eta * int G(x,y) (PJ)(y) dy = eta * E^i
with P = k^2 I + grad div.  Mid-point quadrature on a uniform cell-centred
grid turns this into a dense linear system; P is applied by central finite
differences with zero extension outside the grid (J is supported inside the
scatterers, so the extension is exact for the true solution).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, gmres

from .em_core import ContrastField, IncidentPlaneWave, WaveContext, green_scalar_from_distance, incident_field
from .errors import DegenerateGridError, DomainError, GeometryError, SolverError

DENSE_SYSTEM_LIMIT = 6000

_SELF_TERM_ORDERS = (16, 32, 64, 128, 256)
_SELF_TERM_RTOL = 1e-8


@dataclass(frozen=True)
class VolumeGrid:
    """Uniform cell-centred tensor grid whose cells cover the scatterer box."""

    mesh_size: float
    origin: np.ndarray  # lower corner of the covered box
    counts: tuple[int, ...]

    @property
    def dimension(self) -> int:
        return len(self.counts)

    @property
    def axes(self) -> tuple[np.ndarray, ...]:
        h = self.mesh_size
        return tuple(
            self.origin[i] + (np.arange(n) + 0.5) * h for i, n in enumerate(self.counts)
        )

    @property
    def nodes(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, self.dimension)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.counts))

    @property
    def cell_measure(self) -> float:
        return self.mesh_size**self.dimension

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        hi = self.origin + np.asarray(self.counts) * self.mesh_size
        return self.origin.copy(), hi


def build_grid(contrast: ContrastField, h: float) -> VolumeGrid:
    """Smallest cell-centred grid of pitch h whose cell union covers the contrast box."""
    if h <= 0.0:
        raise DomainError("mesh size must be positive")
    lo, hi = contrast.bounding_box
    extent = hi - lo
    if np.any(h > extent * (1.0 + 1e-12)):
        raise DegenerateGridError(
            f"mesh size {h} exceeds the scatterer bounding box extent {extent}"
        )
    counts = np.maximum(np.ceil(extent / h - 1e-9).astype(int), 1)
    center = 0.5 * (lo + hi)
    origin = center - 0.5 * counts * h
    return VolumeGrid(h, origin, tuple(int(n) for n in counts))


def _gauss_rule(order: int, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def _self_term_2d(k: float, h: float) -> complex:
    # G has a -(1/2pi) log r singularity; integrate the regularized part with
    # a tensor Gauss ladder and add the square's log integral in closed form.
    a = 0.5 * h
    log_integral = 4.0 * a * a * (np.log(a) + 0.5 * np.log(2.0) + 0.25 * np.pi - 1.5)
    prev = None
    for order in _SELF_TERM_ORDERS:
        x, w = _gauss_rule(order, -a, a)
        xx, yy = np.meshgrid(x, x, indexing="ij")
        r = np.hypot(xx, yy)
        regular = green_scalar_from_distance(
            WaveContext.from_wavenumber(2, k), r
        ) + np.log(r) / (2.0 * np.pi)
        total = np.einsum("i,j,ij->", w, w, regular) - log_integral / (2.0 * np.pi)
        if prev is not None and abs(total - prev) <= _SELF_TERM_RTOL * abs(total):
            return complex(total / (h * h))
        prev = total
    raise SolverError("self-cell quadrature ladder did not converge")


def _self_term_3d(k: float, h: float) -> complex:
    # Split the cube into six pyramids from the centre; the pyramid map
    # (z, u, v) -> (zu, zv, z) removes the 1/r singularity entirely.
    a = 0.5 * h
    prev = None
    for order in _SELF_TERM_ORDERS:
        z, wz = _gauss_rule(order, 0.0, a)
        u, wu = _gauss_rule(order, -1.0, 1.0)
        s = np.sqrt(1.0 + u[:, None] ** 2 + u[None, :] ** 2)
        wuv = wu[:, None] * wu[None, :]
        zs = z[:, None, None] * s[None, :, :]
        integrand = z[:, None, None] * np.exp(1j * k * zs) / (4.0 * np.pi * s[None, :, :])
        total = 6.0 * np.einsum("i,ijk,jk->", wz, integrand, wuv)
        if prev is not None and abs(total - prev) <= _SELF_TERM_RTOL * abs(total):
            return complex(total / h**3)
        prev = total
    raise SolverError("self-cell quadrature ladder did not converge")


@lru_cache(maxsize=64)
def _self_term_cached(dimension: int, k: float, h: float) -> complex:
    return _self_term_2d(k, h) if dimension == 2 else _self_term_3d(k, h)


def diagonal_self_term(ctx: WaveContext, h: float) -> complex:
    """Cell average of G over one centred cell, (1/h^d) int_cell G(x, 0) dx."""
    if h <= 0.0:
        raise DomainError("cell size must be positive")
    return _self_term_cached(ctx.dimension, ctx.wavenumber, h)


class POperator:
    """Discrete P = k^2 I + grad div via central differences with zero extension.

    Second and first derivative stencils are (1,-2,1)/h^2 and (-1,0,1)/(2h);
    the mixed blocks are Kronecker products of the first-derivative stencils.
    """

    def __init__(self, grid: VolumeGrid, ctx: WaveContext):
        if any(n < 3 for n in grid.counts):
            raise DegenerateGridError("P stencil needs at least 3 nodes per axis")
        if grid.dimension != ctx.dimension:
            raise GeometryError("grid and context dimensions differ")
        self.grid = grid
        self.ctx = ctx
        h = grid.mesh_size
        d = grid.dimension
        second = [
            sp.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(n, n), format="csr") / (h * h)
            for n in grid.counts
        ]
        first = [
            sp.diags([-1.0, 1.0], [-1, 1], shape=(n, n), format="csr") / (2.0 * h)
            for n in grid.counts
        ]
        eyes = [sp.identity(n, format="csr") for n in grid.counts]

        def chain(factors):
            out = factors[0]
            for f in factors[1:]:
                out = sp.kron(out, f, format="csr")
            return out

        self.blocks: list[list[sp.csr_matrix]] = []
        for i in range(d):
            row = []
            for j in range(d):
                factors = []
                for axis in range(d):
                    if axis == i and axis == j:
                        factors.append(second[axis])
                    elif axis in (i, j):
                        factors.append(first[axis])
                    else:
                        factors.append(eyes[axis])
                row.append(chain(factors))
            self.blocks.append(row)

    def apply(self, field: np.ndarray) -> np.ndarray:
        """(P J) on nodal fields of shape (N, d)."""
        k2 = self.ctx.wavenumber**2
        out = k2 * field.astype(np.complex128, copy=True)
        for i in range(len(self.blocks)):
            for j in range(len(self.blocks)):
                out[:, i] += self.blocks[i][j] @ field[:, j]
        return out


def assemble_p_operator(grid: VolumeGrid, ctx: WaveContext) -> POperator:
    return POperator(grid, ctx)


@dataclass(frozen=True)
class SolverSpec:
    kind: str = "auto"  # auto | dense | gmres
    tol: float = 1e-8
    restart: int = 50
    maxiter: int = 500

    def resolve(self, system_dimension: int) -> str:
        if self.kind == "auto":
            return "dense" if system_dimension <= DENSE_SYSTEM_LIMIT else "gmres"
        if self.kind not in ("dense", "gmres"):
            raise DomainError(f"unknown solver kind {self.kind!r}")
        return self.kind


@dataclass(frozen=True)
class InducedCurrentField:
    """Nodal current J (zero wherever eta vanishes) plus solve diagnostics."""

    grid: VolumeGrid
    values: np.ndarray
    eta: np.ndarray
    method: str = "dense"
    residual: float = 0.0
    iterations: int = 0


class ForwardSystem:
    """Discrete operator J |-> J - diag(eta) G (P J) h^d on all grid nodes.

    Rows with eta = 0 reduce to the identity, so the scalar kernel matrix is
    only needed on the eta-supported rows; the operator is exact either way.
    """

    def __init__(self, contrast: ContrastField, ctx: WaveContext, grid: VolumeGrid):
        self.ctx = ctx
        self.grid = grid
        self.contrast_at_nodes = contrast.eta_at(grid.nodes)
        self.p_operator = POperator(grid, ctx)
        self.active = np.flatnonzero(self.contrast_at_nodes != 0.0)
        nodes = grid.nodes
        if self.active.size:
            diff = nodes[self.active][:, None, :] - nodes[None, :, :]
            r = np.linalg.norm(diff, axis=-1)
            self_hits = r == 0.0
            r[self_hits] = 1.0
            rows = green_scalar_from_distance(ctx, r)
            rows[self_hits] = diagonal_self_term(ctx, grid.mesh_size)
            self.g_rows = rows
        else:
            self.g_rows = np.zeros((0, grid.n_nodes), dtype=np.complex128)

    @property
    def system_dimension(self) -> int:
        return self.ctx.dimension * self.grid.n_nodes

    def apply(self, flat: np.ndarray) -> np.ndarray:
        d = self.ctx.dimension
        n = self.grid.n_nodes
        fieldT = flat.reshape(d, n)
        pj = self.p_operator.apply(fieldT.T)
        out = fieldT.copy()
        if self.active.size:
            w = self.g_rows @ pj  # (n_active, d)
            eta_act = self.contrast_at_nodes[self.active]
            out[:, self.active] -= (eta_act[:, None] * w * self.grid.cell_measure).T
        return out.reshape(-1)

    def dense_matrix(self) -> np.ndarray:
        d = self.ctx.dimension
        n = self.grid.n_nodes
        k2 = self.ctx.wavenumber**2
        m = np.zeros((n, n), dtype=np.complex128)
        if self.active.size:
            eta_act = self.contrast_at_nodes[self.active]
            m[self.active] = eta_act[:, None] * self.g_rows * self.grid.cell_measure
        a = np.eye(d * n, dtype=np.complex128)
        for i in range(d):
            rows = slice(i * n, (i + 1) * n)
            for j in range(d):
                cols = slice(j * n, (j + 1) * n)
                block = self.p_operator.blocks[i][j]
                a[rows, cols] -= (block.T @ m.T).T
                if i == j:
                    a[rows, cols] -= k2 * m
        return a

    def rhs(self, wave: IncidentPlaneWave) -> np.ndarray:
        e_inc = incident_field(wave, self.ctx, self.grid.nodes)
        return (self.contrast_at_nodes[:, None] * e_inc).T.reshape(-1)


def build_forward_system(contrast: ContrastField, ctx: WaveContext, h: float) -> ForwardSystem:
    if contrast.dimension != ctx.dimension:
        raise GeometryError("contrast and context dimensions differ")
    return ForwardSystem(contrast, ctx, build_grid(contrast, h))


class ForwardSolver:
    """Caches system assembly (and the dense factorization) across incident waves."""

    def __init__(self, contrast: ContrastField, ctx: WaveContext, h: float,
                 solver: SolverSpec = SolverSpec()):
        self.system = build_forward_system(contrast, ctx, h)
        self.spec = solver
        self.method = solver.resolve(self.system.system_dimension)
        self._lu = None

    def _solve_dense(self, rhs: np.ndarray) -> tuple[np.ndarray, float, int]:
        if self._lu is None:
            matrix = self.system.dense_matrix()
            try:
                self._lu = sla.lu_factor(matrix)
            except sla.LinAlgError as exc:
                raise SolverError(f"dense factorization failed: {exc}") from exc
            self._matrix_norm = np.linalg.norm(matrix, 1)
        solution = sla.lu_solve(self._lu, rhs)
        rhs_norm = np.linalg.norm(rhs)
        residual = 0.0
        if rhs_norm > 0.0:
            residual = float(
                np.linalg.norm(self.system.apply(solution) - rhs) / rhs_norm
            )
            if residual > 1e-8:
                rcond = sla.lapack.zgecon(self._lu[0], self._matrix_norm, norm="1")[0]
                raise SolverError(
                    f"dense solve residual {residual:.2e} exceeds 1e-8; "
                    f"condition estimate {1.0 / max(rcond, 1e-300):.2e}"
                )
        return solution, residual, 0

    def _solve_gmres(self, rhs: np.ndarray) -> tuple[np.ndarray, float, int]:
        dim = self.system.system_dimension
        op = LinearOperator((dim, dim), matvec=self.system.apply, dtype=np.complex128)
        iterations = 0

        def count(_):
            nonlocal iterations
            iterations += 1

        solution, info = gmres(
            op, rhs, rtol=self.spec.tol, atol=0.0,
            restart=self.spec.restart, maxiter=self.spec.maxiter,
            callback=count, callback_type="pr_norm",
        )
        rhs_norm = np.linalg.norm(rhs)
        residual = 0.0
        if rhs_norm > 0.0:
            residual = float(np.linalg.norm(self.system.apply(solution) - rhs) / rhs_norm)
        if info != 0:
            raise SolverError(
                f"GMRES did not converge in {self.spec.maxiter} iterations; "
                f"final relative residual {residual:.2e}"
            )
        return solution, residual, iterations

    def solve(self, wave: IncidentPlaneWave) -> InducedCurrentField:
        rhs = self.system.rhs(wave)
        if self.method == "dense":
            flat, residual, iterations = self._solve_dense(rhs)
        else:
            flat, residual, iterations = self._solve_gmres(rhs)
        d = self.system.ctx.dimension
        values = flat.reshape(d, self.system.grid.n_nodes).T.copy()
        values[self.system.contrast_at_nodes == 0.0] = 0.0
        return InducedCurrentField(
            self.system.grid, values, self.system.contrast_at_nodes,
            method=self.method, residual=residual, iterations=iterations,
        )


def solve_current(contrast: ContrastField, wave: IncidentPlaneWave, ctx: WaveContext,
                  h: float, solver: SolverSpec = SolverSpec()) -> InducedCurrentField:
    """One-shot forward solve; see ForwardSolver for the multi-incident path."""
    return ForwardSolver(contrast, ctx, h, solver).solve(wave)
