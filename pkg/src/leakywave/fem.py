"""High-order 1D spectral-element discretization of the plate thickness.

One Lagrange element per layer, nodes at the Gauss-Lobatto points,
assembled into the free-plate matrices E0, E1, E2, M of the quadratic
wavenumber eigenproblem

    (-k^2 E0 + i k E1 - E2 + omega^2 M) u = 0.

All matrices are real; the factor i on E1 is applied at solve time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .materials import (
    AnisotropicBlocks,
    FluidMaterial,
    IsotropicSolid,
    stiffness_blocks,
)

__all__ = [
    "Layer",
    "LayerStack",
    "FemMatrices",
    "gauss_lobatto_nodes",
    "lagrange_eval",
    "element_matrices",
    "assemble_stack",
    "choose_order",
    "solve_free_plate",
]

#: number of displacement components per node
_NCOMP = {"inplane": 2, "full": 3}


def gauss_lobatto_nodes(p: int) -> np.ndarray:
    """Gauss-Lobatto points of degree p on [-1, 1], sorted ascending.

    Endpoints are included; interior points are the roots of P_p'.
    """
    if p < 1:
        raise ValueError(f"polynomial degree must be >= 1, got {p}")
    if p == 1:
        return np.array([-1.0, 1.0])
    coeffs = np.zeros(p + 1)
    coeffs[p] = 1.0
    interior = np.polynomial.legendre.legroots(np.polynomial.legendre.legder(coeffs))
    x = np.concatenate(([-1.0], np.sort(interior), [1.0]))
    # enforce exact symmetry about 0
    return 0.5 * (x - x[::-1])


def _barycentric_weights(nodes: np.ndarray) -> np.ndarray:
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / diff.prod(axis=1)


def lagrange_eval(nodes: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Values and first derivatives of the Lagrange basis on `nodes`.

    Returns (V, D) with V[q, a] = N_a(x[q]) and D[q, a] = N_a'(x[q]).
    """
    nodes = np.asarray(nodes, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    w = _barycentric_weights(nodes)
    n = len(nodes)
    V = np.empty((len(x), n))
    D = np.empty((len(x), n))
    for q, xq in enumerate(x):
        d = xq - nodes
        hit = np.isclose(d, 0.0, atol=1e-14)
        if hit.any():
            a = int(np.argmax(hit))
            V[q] = 0.0
            V[q, a] = 1.0
            # derivative row of the differentiation matrix at a node
            row = np.zeros(n)
            off = np.arange(n) != a
            row[off] = (w[off] / w[a]) / (nodes[a] - nodes[off])
            row[a] = -row[off].sum()
            D[q] = row
        else:
            t = w / d
            s = t.sum()
            V[q] = t / s
            # N_a'(x) via derivative of the barycentric form
            t2 = w / d**2
            s2 = t2.sum()
            D[q] = (V[q] * s2 - t2) / s
    return V, D


@dataclass(frozen=True)
class Layer:
    """One homogeneous layer: material, thickness (m), element order."""

    material: IsotropicSolid | AnisotropicBlocks
    thickness: float
    order: int

    def __post_init__(self):
        if self.thickness <= 0:
            raise ValueError(f"thickness must be positive, got {self.thickness}")
        if self.order < 1:
            raise ValueError(f"element order must be >= 1, got {self.order}")


@dataclass(frozen=True)
class LayerStack:
    """Ordered bottom-to-top list of layers sharing interface nodes.

    `dof_mode` is "inplane" (u_x, u_y) or "full" (u_x, u_y, u_z).
    The bottom surface sits at y = 0.
    """

    layers: tuple[Layer, ...]
    dof_mode: str = "inplane"
    node_y: np.ndarray = field(init=False, repr=False)
    #: per-layer global node index ranges [start, stop)
    layer_nodes: tuple[tuple[int, int], ...] = field(init=False, repr=False)

    def __init__(self, layers, dof_mode="inplane"):
        layers = tuple(layers)
        if not layers:
            raise ValueError("layer stack must contain at least one layer")
        if dof_mode not in _NCOMP:
            raise ValueError(f"dof_mode must be 'inplane' or 'full', got {dof_mode!r}")
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "dof_mode", dof_mode)
        ys = [np.array([0.0])]
        ranges = []
        y0 = 0.0
        start = 0
        for lay in layers:
            xi = gauss_lobatto_nodes(lay.order)
            yloc = y0 + (xi + 1.0) * lay.thickness / 2.0
            ranges.append((start, start + lay.order + 1))
            ys.append(yloc[1:])
            start += lay.order
            y0 += lay.thickness
        object.__setattr__(self, "node_y", np.concatenate(ys))
        object.__setattr__(self, "layer_nodes", tuple(ranges))

    @property
    def ncomp(self) -> int:
        return _NCOMP[self.dof_mode]

    @property
    def n_nodes(self) -> int:
        return len(self.node_y)

    @property
    def n_dof(self) -> int:
        return self.n_nodes * self.ncomp

    @property
    def thickness(self) -> float:
        return float(sum(lay.thickness for lay in self.layers))

    def dof_index(self, node: int, comp: int) -> int:
        """Global DOF index, node-major with components (x, y[, z])."""
        return node * self.ncomp + comp

    def surface_node(self, side: str) -> int:
        if side == "bottom":
            return 0
        if side == "top":
            return self.n_nodes - 1
        raise ValueError(f"side must be 'bottom' or 'top', got {side!r}")


@dataclass(frozen=True)
class FemMatrices:
    """Assembled (or element-local) free-plate matrices."""

    E0: np.ndarray
    E1: np.ndarray
    E2: np.ndarray
    M: np.ndarray
    stack: LayerStack | None = None

    @property
    def n(self) -> int:
        return self.E0.shape[0]


def _component_blocks(blocks: AnisotropicBlocks, dof_mode: str):
    idx = slice(0, _NCOMP[dof_mode])
    return (
        blocks.Cxx[idx, idx],
        blocks.Cyy[idx, idx],
        blocks.Cxy[idx, idx],
        blocks.Cyx[idx, idx],
    )


def element_matrices(layer: Layer, dof_mode: str = "inplane") -> FemMatrices:
    """Element-local E0, E1, E2, M for one layer.

    Gauss-Legendre quadrature with order+1 points integrates all
    entries exactly (constant material per layer).
    """
    p, h = layer.order, layer.thickness
    nodes = gauss_lobatto_nodes(p)
    xq, wq = np.polynomial.legendre.leggauss(p + 1)
    V, D = lagrange_eval(nodes, xq)
    W = np.diag(wq)
    # scalar 1D matrices on the physical interval of length h
    S0 = (h / 2.0) * V.T @ W @ V          # int N N dy
    S1 = V.T @ W @ D                      # int N dN/dy dy
    S2 = (2.0 / h) * D.T @ W @ D          # int dN/dy dN/dy dy
    # symmetrize: exact in exact arithmetic, enforce exactly in floats
    S0 = 0.5 * (S0 + S0.T)
    S2 = 0.5 * (S2 + S2.T)

    mat = layer.material
    blocks = stiffness_blocks(mat)
    Cxx, Cyy, Cxy, Cyx = _component_blocks(blocks, dof_mode)
    rho = mat.rho if isinstance(mat, IsotropicSolid) else None
    if rho is None:
        raise TypeError("anisotropic layers must carry a density; wrap via IsotropicSolid "
                        "or extend AnisotropicBlocks")
    nc = _NCOMP[dof_mode]
    E0 = np.kron(S0, Cxx)
    # Cxy is the traction block (tau = ik Cxy u + Cyy u'); integration by
    # parts moves it onto the test function so the natural BC is traction-free
    E1 = np.kron(S1, Cyx) - np.kron(S1.T, Cxy)
    E2 = np.kron(S2, Cyy)
    M = rho * np.kron(S0, np.eye(nc))
    return FemMatrices(E0=E0, E1=E1, E2=E2, M=M)


def assemble_stack(
    stack: LayerStack,
    fixed_bottom: bool = False,
    fixed_top: bool = False,
) -> FemMatrices:
    """Assemble global free-plate matrices by direct stiffness superposition.

    Optional Dirichlet flags clamp a surface by deleting its node's DOFs.
    """
    nc = stack.ncomp
    n = stack.n_dof
    E0 = np.zeros((n, n))
    E1 = np.zeros((n, n))
    E2 = np.zeros((n, n))
    M = np.zeros((n, n))
    for lay, (lo, hi) in zip(stack.layers, stack.layer_nodes):
        loc = element_matrices(lay, stack.dof_mode)
        sl = slice(lo * nc, hi * nc)
        E0[sl, sl] += loc.E0
        E1[sl, sl] += loc.E1
        E2[sl, sl] += loc.E2
        M[sl, sl] += loc.M
    keep = np.ones(n, dtype=bool)
    if fixed_bottom:
        keep[:nc] = False
    if fixed_top:
        keep[-nc:] = False
    if not keep.all():
        E0, E1, E2, M = (A[np.ix_(keep, keep)] for A in (E0, E1, E2, M))
    return FemMatrices(E0=E0, E1=E1, E2=E2, M=M, stack=stack)


def choose_order(material: IsotropicSolid, h: float, omega_max: float) -> int:
    """Element order for a layer: ceil(a0/2 + 3) with a0 = h*omega_max/c_t."""
    if h <= 0 or omega_max <= 0:
        raise ValueError("thickness and omega_max must be positive")
    a0 = h * omega_max / material.c_t
    return int(np.ceil(a0 / 2.0 + 3.0))


def solve_free_plate(
    fem: FemMatrices,
    omega: float,
    residual_tol: float = 1e-8,
) -> list[tuple[complex, np.ndarray]]:
    """All wavenumbers of the free-plate pencil at a given frequency.

    Companion linearization in lam = i*k:
        (lam^2 E0 + lam E1 + (omega^2 M - E2)) u = 0.
    Returns (k, u) pairs whose quadratic-pencil residual passes
    `residual_tol` relative to ||omega^2 M||.
    """
    if omega <= 0:
        raise ValueError(f"omega must be positive, got {omega}")
    n = fem.n
    A0 = omega**2 * fem.M - fem.E2
    # nondimensionalize: length scale from the E0/E2 norm ratio, overall
    # magnitude from A0; the companion pencil then has O(1) entries
    L = float(np.sqrt(np.linalg.norm(fem.E0) / np.linalg.norm(fem.E2)))
    g = max(np.linalg.norm(A0), np.linalg.norm(fem.E1) / L, np.linalg.norm(fem.E0) / L**2)
    A0s = A0 / g
    E1s = fem.E1 / (g * L)
    E0s = fem.E0 / (g * L**2)
    A = np.block([
        [np.zeros((n, n)), np.eye(n)],
        [-A0s, -E1s],
    ])
    B = np.block([
        [np.eye(n), np.zeros((n, n))],
        [np.zeros((n, n)), E0s],
    ])
    lam, vecs = scipy.linalg.eig(A, B)
    scale = residual_tol * np.linalg.norm(omega**2 * fem.M)
    out = []
    for j in range(len(lam)):
        lj = lam[j]
        if not np.isfinite(lj):
            continue
        u = vecs[:n, j]
        nu = np.linalg.norm(u)
        if nu == 0:
            continue
        u = u / nu
        lam_phys = lj / L
        res = np.linalg.norm((lam_phys**2 * fem.E0 + lam_phys * fem.E1 + A0) @ u)
        if res <= scale:
            out.append((complex(-1j * lam_phys), u))
    return out
