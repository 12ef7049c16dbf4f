"""Material records for plate layers and half-spaces.

All quantities are strict SI (kg/m^3, Pa, m/s, rad/s).  Configuration
files may use mm/MHz/GPa; conversion happens in the config layer, never
here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MaterialError",
    "IsotropicSolid",
    "FluidMaterial",
    "AnisotropicBlocks",
    "isotropic_from_speeds",
    "isotropic_from_lame",
    "stiffness_blocks",
    "bulk_wavenumbers",
    "MATERIAL_LIBRARY",
]


class MaterialError(ValueError):
    """Invalid material parameters."""


@dataclass(frozen=True)
class IsotropicSolid:
    """Isotropic elastic solid.

    Stores both the Lame parameters (lam, mu) and the bulk wave speeds
    (c_l, c_t); the constructor enforces their mutual consistency to
    1e-10 relative.
    """

    rho: float
    lam: float
    mu: float
    c_l: float
    c_t: float
    name: str = ""

    def __post_init__(self):
        if self.rho <= 0:
            raise MaterialError(f"density must be positive, got {self.rho}")
        if self.mu <= 0:
            raise MaterialError(f"shear modulus must be positive, got {self.mu}")
        if self.lam + 2 * self.mu <= 0:
            raise MaterialError("lambda + 2*mu must be positive")
        cl = np.sqrt((self.lam + 2 * self.mu) / self.rho)
        ct = np.sqrt(self.mu / self.rho)
        if abs(cl - self.c_l) > 1e-10 * cl or abs(ct - self.c_t) > 1e-10 * ct:
            raise MaterialError(
                "inconsistent speeds and Lame parameters: "
                f"expected c_l={cl}, c_t={ct}, got c_l={self.c_l}, c_t={self.c_t}"
            )


@dataclass(frozen=True)
class FluidMaterial:
    """Inviscid acoustic fluid: density and sound speed."""

    rho: float
    c: float
    name: str = ""

    def __post_init__(self):
        if self.rho <= 0:
            raise MaterialError(f"density must be positive, got {self.rho}")
        if self.c <= 0:
            raise MaterialError(f"sound speed must be positive, got {self.c}")


@dataclass(frozen=True)
class AnisotropicBlocks:
    """Directional 3x3 blocks of the stiffness tensor.

    Cxx, Cyy are symmetric positive definite and Cyx = Cxy.T exactly.
    Cxy is the block that maps in-plane derivatives to tractions on a
    horizontal plane (consistent with the isotropic special case).
    """

    Cxx: np.ndarray
    Cyy: np.ndarray
    Cxy: np.ndarray
    Cyx: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        Cxx = np.asarray(self.Cxx, dtype=float)
        Cyy = np.asarray(self.Cyy, dtype=float)
        Cxy = np.asarray(self.Cxy, dtype=float)
        object.__setattr__(self, "Cxx", Cxx)
        object.__setattr__(self, "Cyy", Cyy)
        object.__setattr__(self, "Cxy", Cxy)
        if self.Cyx is None:
            object.__setattr__(self, "Cyx", Cxy.T.copy())
        else:
            Cyx = np.asarray(self.Cyx, dtype=float)
            if not np.array_equal(Cyx, Cxy.T):
                raise MaterialError("Cyx must equal Cxy.T exactly")
            object.__setattr__(self, "Cyx", Cyx)
        for label, block in (("Cxx", Cxx), ("Cyy", Cyy)):
            if not np.allclose(block, block.T, rtol=0, atol=0):
                raise MaterialError(f"{label} must be symmetric")
            if np.any(np.linalg.eigvalsh(block) <= 0):
                raise MaterialError(f"{label} must be positive definite")


def isotropic_from_speeds(rho: float, c_l: float, c_t: float, name: str = "") -> IsotropicSolid:
    """Construct an isotropic solid from density and bulk wave speeds.

    lam = rho*(c_l^2 - 2*c_t^2), mu = rho*c_t^2.  Requires c_l > c_t > 0.
    """
    if rho <= 0 or c_t <= 0 or c_l <= 0:
        raise MaterialError("rho, c_l, c_t must be positive")
    if c_l <= c_t:
        raise MaterialError("longitudinal speed must exceed transverse speed")
    lam = rho * (c_l**2 - 2 * c_t**2)
    mu = rho * c_t**2
    return IsotropicSolid(rho=rho, lam=lam, mu=mu, c_l=c_l, c_t=c_t, name=name)


def isotropic_from_lame(rho: float, lam: float, mu: float, name: str = "") -> IsotropicSolid:
    """Construct an isotropic solid from density and Lame parameters."""
    if rho <= 0 or mu <= 0 or lam + 2 * mu <= 0:
        raise MaterialError("require rho > 0, mu > 0, lam + 2*mu > 0")
    c_l = float(np.sqrt((lam + 2 * mu) / rho))
    c_t = float(np.sqrt(mu / rho))
    return IsotropicSolid(rho=rho, lam=lam, mu=mu, c_l=c_l, c_t=c_t, name=name)


def stiffness_blocks(mat: IsotropicSolid | AnisotropicBlocks) -> AnisotropicBlocks:
    """Directional stiffness blocks of a material.

    For an isotropic solid:
        Cxx = diag(lam+2mu, mu, mu)
        Cyy = diag(mu, lam+2mu, mu)
        Cxy = [[0, mu, 0], [lam, 0, 0], [0, 0, 0]],  Cyx = Cxy.T
    """
    if isinstance(mat, AnisotropicBlocks):
        return mat
    lam, mu = mat.lam, mat.mu
    Cxx = np.diag([lam + 2 * mu, mu, mu])
    Cyy = np.diag([mu, lam + 2 * mu, mu])
    Cxy = np.zeros((3, 3))
    Cxy[0, 1] = mu
    Cxy[1, 0] = lam
    return AnisotropicBlocks(Cxx=Cxx, Cyy=Cyy, Cxy=Cxy)


@dataclass(frozen=True)
class BulkWavenumbers:
    kappa: float
    gamma: float | None = None


def bulk_wavenumbers(mat: IsotropicSolid | FluidMaterial, omega: float) -> BulkWavenumbers:
    """Bulk wavenumbers at angular frequency omega.

    Fluid: kappa = omega/c.  Solid: kappa = omega/c_l, gamma = omega/c_t.
    """
    if omega <= 0:
        raise MaterialError(f"omega must be positive, got {omega}")
    if isinstance(mat, FluidMaterial):
        return BulkWavenumbers(kappa=omega / mat.c)
    return BulkWavenumbers(kappa=omega / mat.c_l, gamma=omega / mat.c_t)


#: Materials used throughout the examples and the bundled CLI library.
MATERIAL_LIBRARY: dict[str, IsotropicSolid | FluidMaterial] = {
    "brass": isotropic_from_speeds(8400.0, 4400.0, 2200.0, name="brass"),
    "teflon": isotropic_from_speeds(2200.0, 1350.0, 550.0, name="teflon"),
    "titanium": isotropic_from_speeds(4460.0, 6060.0, 3230.0, name="titanium"),
    "water": FluidMaterial(rho=1000.0, c=1480.0, name="water"),
    "oil": FluidMaterial(rho=870.0, c=1740.0, name="oil"),
}
