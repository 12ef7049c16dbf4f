"""Half-space coupling: extend free-plate matrices with interface DOFs.

A fluid half-space contributes one pressure DOF per side; a solid
half-space contributes displacement-amplitude DOFs (a, b, c) for the
longitudinal, shear-vertical and shear-horizontal partial waves (c and
its rows/columns are dropped in in-plane mode).  The result is the
nonlinear eigenvalue problem

    (-k^2 E0 + i k E1 - E2 + omega^2 M + R(k)) v = 0

where R(k) is a sum of terms i*kappa_y*R (fluid) and k*kappa_y*R,
k*gamma_y*R (solid).  All stored matrices are real.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .fem import FemMatrices
from .materials import (
    FluidMaterial,
    IsotropicSolid,
    bulk_wavenumbers,
    stiffness_blocks,
)

__all__ = [
    "CouplingError",
    "HalfSpaceSpec",
    "SideCoupling",
    "CoupledSystem",
    "SolidCouplingMatrices",
    "RTerm",
    "from_free_plate",
    "attach_fluid",
    "attach_solid",
    "couple",
    "solid_coupling_matrices",
    "nlevp_residual",
    "nlevp_matrix",
]

#: outward-normal sign per side
SIGN = {"top": 1.0, "bottom": -1.0}


class CouplingError(ValueError):
    """Invalid coupling request (e.g. coupling a side twice)."""


@dataclass(frozen=True)
class HalfSpaceSpec:
    """Half-space description for one side of the plate."""

    side: str  # "bottom" | "top"
    material: FluidMaterial | IsotropicSolid | None  # None = vacuum

    def __post_init__(self):
        if self.side not in SIGN:
            raise CouplingError(f"side must be 'bottom' or 'top', got {self.side!r}")


@dataclass(frozen=True)
class SolidCouplingMatrices:
    """Interface matrices of an isotropic solid half-space (3x3 blocks)."""

    A0: np.ndarray
    A1: np.ndarray
    A2: np.ndarray
    D1: np.ndarray
    D2: np.ndarray
    R0: np.ndarray
    R1: np.ndarray
    R2: np.ndarray
    R3: np.ndarray
    R4: np.ndarray


@dataclass(frozen=True)
class RTerm:
    """One nonlinear term coeff(k) * matrix of R(k).

    kind: "i_kappa_y" (fluid, coefficient i*kappa_y,side),
          "k_kappa_y" or "k_gamma_y" (solid, coefficient k*kappa_y,side
          or k*gamma_y,side).
    """

    kind: str
    side: str
    matrix: np.ndarray


@dataclass(frozen=True)
class SideCoupling:
    """Bookkeeping for one coupled side."""

    side: str
    kind: str  # "fluid" | "solid"
    material: FluidMaterial | IsotropicSolid
    kappa: float  # omega / c_l (solid) or omega / c (fluid)
    gamma: float | None  # omega / c_t (solid only)
    #: index of the pressure DOF (fluid) -- or None
    pressure_dof: int | None
    #: indices of the amplitude DOFs (solid) -- or None
    amp_dofs: tuple[int, ...] | None
    #: displacement DOF indices of the surface node (u_x, u_y[, u_z])
    surface_dofs: tuple[int, ...]

    @property
    def sign(self) -> float:
        return SIGN[self.side]


@dataclass(frozen=True)
class CoupledSystem:
    """Matrices and DOF map of the coupled nonlinear eigenproblem."""

    E0: np.ndarray
    E1: np.ndarray
    E2: np.ndarray
    M: np.ndarray
    r_terms: tuple[RTerm, ...]
    sides: dict[str, SideCoupling]
    omega: float
    n_plate: int
    fem: FemMatrices = field(repr=False, default=None)  # type: ignore[assignment]

    @property
    def n(self) -> int:
        return self.E0.shape[0]

    def side(self, name: str) -> SideCoupling:
        return self.sides[name]


def from_free_plate(fem: FemMatrices, omega: float) -> CoupledSystem:
    """Start a coupled system from the free-plate matrices (no half-spaces)."""
    if omega <= 0:
        raise ValueError(f"omega must be positive, got {omega}")
    return CoupledSystem(
        E0=fem.E0.copy(),
        E1=fem.E1.copy(),
        E2=fem.E2.copy(),
        M=fem.M.copy(),
        r_terms=(),
        sides={},
        omega=omega,
        n_plate=fem.n,
        fem=fem,
    )


def _grow(A: np.ndarray, extra: int) -> np.ndarray:
    return np.pad(A, ((0, extra), (0, extra)))


def _surface_dofs(sys: CoupledSystem, side: str) -> tuple[int, ...]:
    stack = sys.fem.stack
    if stack is None:
        raise CouplingError("coupling requires stack metadata on the FEM matrices")
    node = stack.surface_node(side)
    return tuple(stack.dof_index(node, c) for c in range(stack.ncomp))


def attach_fluid(sys: CoupledSystem, side: str, fluid: FluidMaterial) -> CoupledSystem:
    """Append one pressure DOF coupling a fluid half-space to `side`.

    Entries (sigma = +1 top, -1 bottom):
        E2[s, f] = sigma        (traction tau_y = +-p_s on the plate)
        M[f, s]  = sigma * rho  (pressure gradient / acceleration match)
        R[f, f]  = 1            with coefficient i*kappa_y,side
    """
    if side in sys.sides:
        raise CouplingError(f"side {side!r} is already coupled")
    sigma = SIGN[side]
    s_dofs = _surface_dofs(sys, side)
    s_y = s_dofs[1]  # vertical displacement DOF of the surface node
    f = sys.n
    E0, E1, E2, M = (_grow(A, 1) for A in (sys.E0, sys.E1, sys.E2, sys.M))
    E2[s_y, f] = sigma
    M[f, s_y] = sigma * fluid.rho
    R = np.zeros_like(E0)
    R[f, f] = 1.0
    kappa = bulk_wavenumbers(fluid, sys.omega).kappa
    side_info = SideCoupling(
        side=side,
        kind="fluid",
        material=fluid,
        kappa=kappa,
        gamma=None,
        pressure_dof=f,
        amp_dofs=None,
        surface_dofs=s_dofs,
    )
    r_terms = tuple(
        RTerm(t.kind, t.side, _grow(t.matrix, 1)) for t in sys.r_terms
    ) + (RTerm("i_kappa_y", side, R),)
    return replace(
        sys,
        E0=E0,
        E1=E1,
        E2=E2,
        M=M,
        r_terms=r_terms,
        sides={**sys.sides, side: side_info},
    )


def solid_coupling_matrices(mat: IsotropicSolid, ncomp: int = 3) -> SolidCouplingMatrices:
    """Interface matrices of an isotropic solid half-space.

    In in-plane mode (ncomp=2) the shear-horizontal rows/columns are
    dropped from all blocks.
    """
    A0 = np.diag([1.0, -1.0, 1.0])
    A1 = np.zeros((3, 3))
    A1[1, 0] = 1.0
    A2 = np.zeros((3, 3))
    A2[0, 1] = 1.0
    D1 = np.diag([1.0, 0.0, 0.0])
    D2 = np.diag([0.0, 1.0, 1.0])
    blocks = stiffness_blocks(mat)
    Cxy, Cyy = blocks.Cxy, blocks.Cyy
    R0 = -(Cxy @ A0 - Cyy @ A1 - Cyy @ A2)
    R1 = -(Cxy @ A1 + Cyy @ D1)
    R2 = -(Cxy @ A2 - Cyy @ D2)
    R3 = -Cyy @ A1
    R4 = -Cyy @ A2
    if ncomp == 2:
        sl = np.ix_(range(2), range(2))
        A0, A1, A2, D1, D2, R0, R1, R2, R3, R4 = (
            B[sl] for B in (A0, A1, A2, D1, D2, R0, R1, R2, R3, R4)
        )
    elif ncomp != 3:
        raise ValueError(f"ncomp must be 2 or 3, got {ncomp}")
    return SolidCouplingMatrices(A0=A0, A1=A1, A2=A2, D1=D1, D2=D2,
                                 R0=R0, R1=R1, R2=R2, R3=R3, R4=R4)


def attach_solid(sys: CoupledSystem, side: str, solid: IsotropicSolid) -> CoupledSystem:
    """Append amplitude DOFs (a, b[, c]) coupling a solid half-space.

    Upper signs for the top surface, lower for the bottom:
        E0[q, q] = A0          E0[p, q] = -+ R0
        E1[q, p] = -I          E2[p, q] = -+ kappa^2 R3 -+ gamma^2 R4
        R(k*kappa_y)[p, q] = +- R1,  [q, q] = -A1
        R(k*gamma_y)[p, q] = +- R2,  [q, q] = -A2
    """
    if side in sys.sides:
        raise CouplingError(f"side {side!r} is already coupled")
    sigma = SIGN[side]
    s_dofs = _surface_dofs(sys, side)
    ncomp = len(s_dofs)
    sm = solid_coupling_matrices(solid, ncomp)
    wn = bulk_wavenumbers(solid, sys.omega)
    kappa, gamma = wn.kappa, wn.gamma
    n_old = sys.n
    q = tuple(range(n_old, n_old + ncomp))
    E0, E1, E2, M = (_grow(A, ncomp) for A in (sys.E0, sys.E1, sys.E2, sys.M))
    p_ix = np.asarray(s_dofs)
    q_ix = np.asarray(q)
    # upper sign (top): -R0; lower sign (bottom): +R0 -- and analogously below
    E0[np.ix_(q_ix, q_ix)] = sm.A0
    E0[np.ix_(p_ix, q_ix)] = -sigma * sm.R0
    E1[np.ix_(q_ix, p_ix)] = -np.eye(ncomp)
    E2[np.ix_(p_ix, q_ix)] = -sigma * (kappa**2 * sm.R3 + gamma**2 * sm.R4)
    R_kap = np.zeros_like(E0)
    R_kap[np.ix_(p_ix, q_ix)] = sigma * sm.R1
    R_kap[np.ix_(q_ix, q_ix)] = -sm.A1
    R_gam = np.zeros_like(E0)
    R_gam[np.ix_(p_ix, q_ix)] = sigma * sm.R2
    R_gam[np.ix_(q_ix, q_ix)] = -sm.A2
    side_info = SideCoupling(
        side=side,
        kind="solid",
        material=solid,
        kappa=kappa,
        gamma=gamma,
        pressure_dof=None,
        amp_dofs=q,
        surface_dofs=s_dofs,
    )
    r_terms = tuple(
        RTerm(t.kind, t.side, _grow(t.matrix, ncomp)) for t in sys.r_terms
    ) + (RTerm("k_kappa_y", side, R_kap), RTerm("k_gamma_y", side, R_gam))
    return replace(
        sys,
        E0=E0,
        E1=E1,
        E2=E2,
        M=M,
        r_terms=r_terms,
        sides={**sys.sides, side: side_info},
    )


def couple(
    fem: FemMatrices,
    omega: float,
    bottom: FluidMaterial | IsotropicSolid | None = None,
    top: FluidMaterial | IsotropicSolid | None = None,
) -> CoupledSystem:
    """Build the coupled system, bottom coupling DOFs before top."""
    sys = from_free_plate(fem, omega)
    for side, mat in (("bottom", bottom), ("top", top)):
        if mat is None:
            continue
        if isinstance(mat, FluidMaterial):
            sys = attach_fluid(sys, side, mat)
        elif isinstance(mat, IsotropicSolid):
            sys = attach_solid(sys, side, mat)
        else:
            raise CouplingError(f"unsupported half-space material: {mat!r}")
    return sys


def _r_coefficient(term: RTerm, k: complex, kappa_y: dict, gamma_y: dict) -> complex:
    if term.kind == "i_kappa_y":
        return 1j * kappa_y[term.side]
    if term.kind == "k_kappa_y":
        return k * kappa_y[term.side]
    if term.kind == "k_gamma_y":
        return k * gamma_y[term.side]
    raise ValueError(f"unknown R-term kind {term.kind!r}")


def nlevp_matrix(
    sys: CoupledSystem,
    k: complex,
    kappa_y: dict[str, complex] | None = None,
    gamma_y: dict[str, complex] | None = None,
) -> np.ndarray:
    """Evaluate T(k) = -k^2 E0 + i k E1 - E2 + omega^2 M + R(k)."""
    kappa_y = kappa_y or {}
    gamma_y = gamma_y or {}
    T = (-(k**2)) * sys.E0 + (1j * k) * sys.E1 - sys.E2 + sys.omega**2 * sys.M
    T = T.astype(complex)
    for term in sys.r_terms:
        T += _r_coefficient(term, k, kappa_y, gamma_y) * term.matrix
    return T


def nlevp_residual(
    sys: CoupledSystem,
    k: complex,
    kappa_y: dict[str, complex] | None = None,
    gamma_y: dict[str, complex] | None = None,
    v: np.ndarray | None = None,
) -> float:
    """Normalized residual ||T(k) v|| / (||v|| * scale).

    `scale` is the largest term norm; this is the universal a-posteriori
    certificate for any candidate eigenpair.
    """
    if v is None:
        raise ValueError("eigenvector v is required")
    kappa_y = kappa_y or {}
    gamma_y = gamma_y or {}
    terms = [
        (-(k**2)) * sys.E0,
        (1j * k) * sys.E1,
        -sys.E2.astype(complex),
        (sys.omega**2) * sys.M.astype(complex),
    ]
    for term in sys.r_terms:
        terms.append(_r_coefficient(term, k, kappa_y, gamma_y) * term.matrix)
    scale = max(np.linalg.norm(t) for t in terms)
    T = sum(terms)
    return float(np.linalg.norm(T @ v) / (np.linalg.norm(v) * scale))
