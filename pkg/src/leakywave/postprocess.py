"""Physical interpretation of certified eigentuples.

Converts eigentuples into dispersion data (phase velocity, attenuation),
classifies admissibility from the directions of the half-space partial
waves, evaluates space-domain fields, and provides an independent
partial-wave boundary-determinant oracle for single-layer models.

Sign conventions (pinned against the partial-wave oracle and interface
continuity): with the half-space ansatz e^{i k_y (y - y_s)} in the
global +y direction, a solid side's certified (kappa_y, gamma_y) are
the global vertical wavenumbers directly, while a fluid side carries
k_y(global) = -sigma_j * kappa_y; the pressure DOF is the physical
surface pressure on both sides.  The outward vertical wavenumber on
side j is sigma_j * k_y(global), i.e. -kappa_y for fluid sides.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .coupling import CoupledSystem, couple
from .fem import (
    FemMatrices,
    Layer,
    LayerStack,
    assemble_stack,
    choose_order,
    gauss_lobatto_nodes,
    lagrange_eval,
    solve_free_plate,
)
from .materials import FluidMaterial, IsotropicSolid, bulk_wavenumbers
from .mep import EigenTuple, Tolerances, solve_coupled

__all__ = [
    "PlateModel",
    "ModeSolution",
    "FieldGrid",
    "SweepResult",
    "ClassifyOptions",
    "classify_mode",
    "dispersion_sweep",
    "characteristic_residual",
    "evaluate_fields",
    "NP_TO_DB",
]

#: attenuation unit conversion: dB/m per Np/m
NP_TO_DB = 20.0 / np.log(10.0)


@dataclass(frozen=True)
class PlateModel:
    """Layered plate with optional half-spaces; orders may be deferred.

    `orders` entries of None are filled by the a0-based rule at the
    highest sweep frequency.
    """

    materials: tuple[IsotropicSolid, ...]
    thicknesses: tuple[float, ...]
    orders: tuple[int | None, ...]
    dof_mode: str = "inplane"
    bottom: FluidMaterial | IsotropicSolid | None = None
    top: FluidMaterial | IsotropicSolid | None = None

    def build_stack(self, omega_max: float) -> LayerStack:
        layers = []
        for mat, h, p in zip(self.materials, self.thicknesses, self.orders):
            layers.append(Layer(mat, h, p if p is not None else choose_order(mat, h, omega_max)))
        return LayerStack(layers, self.dof_mode)

    @property
    def thickness(self) -> float:
        return float(sum(self.thicknesses))


@dataclass(frozen=True)
class ClassifyOptions:
    """Admissibility thresholds (documented defaults)."""

    tol_trapped: float = 0.1   # Np/m (= 1e-4 Np/mm)
    tol_evan: float = 10.0     # |Re k| < tol_evan * |Im k| -> Evanescent


@dataclass(frozen=True)
class ModeSolution:
    """One physical mode at one frequency."""

    frequency: float
    omega: float
    k: complex
    kappa_y: dict[str, complex]
    gamma_y: dict[str, complex]
    classification: str
    vector: np.ndarray
    residual: float
    system: CoupledSystem = field(repr=False)

    @property
    def phase_velocity(self) -> float:
        return self.omega / self.k.real if self.k.real != 0 else np.inf

    @property
    def attenuation_np_per_m(self) -> float:
        return self.k.imag

    @property
    def attenuation_db_per_m(self) -> float:
        return self.k.imag * NP_TO_DB

    @property
    def attenuation_db_per_mm(self) -> float:
        return self.attenuation_db_per_m * 1e-3


def _outward_wavenumbers(t, sides) -> list[complex]:
    """Outward-normal vertical wavenumbers of all half-space partial waves."""
    out = []
    for side, sc in sides.items():
        sigma = sc.sign
        if sc.kind == "fluid":
            # fluid ansatz carries kappa_y with the opposite sense:
            # global k_y = -sigma*kappa_y, outward = sigma*global
            out.append(-t.kappa_y[side])
        else:
            out.append(sigma * t.kappa_y[side])
            out.append(sigma * t.gamma_y[side])
    return out


def classify_mode(t, sides, opts: ClassifyOptions | None = None) -> str:
    """Admissibility class from the half-space wave directions.

    Evanescent: |Re k| < tol_evan * |Im k|.  Trapped: every half-space
    partial wave decays away from the plate and |Im k| is negligible.
    Outgoing: every half-space wave radiates or decays outward.
    Incoming otherwise.  `sides` may be empty (free plate).
    """
    opts = opts or ClassifyOptions()
    k = t.k
    if abs(k.real) < opts.tol_evan * abs(k.imag):
        return "Evanescent"
    sgn = 1.0 if k.real >= 0 else -1.0
    ws = _outward_wavenumbers(t, sides)
    decays = [w.imag > 0 for w in ws]
    radiates = [w.real * sgn > 0 for w in ws]
    if all(decays) and abs(k.imag) < opts.tol_trapped:
        return "Trapped"
    if all(d or r for d, r in zip(decays, radiates)):
        return "Outgoing"
    return "Incoming"


@dataclass(frozen=True)
class SweepResult:
    frequencies: np.ndarray
    batches: tuple[tuple[ModeSolution, ...], ...]
    failures: tuple[tuple[float, str], ...]
    timings: tuple[float, ...]  # seconds per solved frequency

    def all_modes(self):
        return [m for batch in self.batches for m in batch]


def _solve_one(model, fem, f, *, path, seed, tols, force_distinct_fluids,
               size_cap, shift, classify_opts):
    omega = 2 * np.pi * f
    sys = couple(fem, omega, bottom=model.bottom, top=model.top)
    if model.bottom is None and model.top is None:
        modes = []
        for k, u in solve_free_plate(fem, omega):
            res = 0.0
            t = EigenTuple(k=k, xi0=-k**2, kappa_y={}, gamma_y={},
                           vector=u, residual=res, equation_svals=())
            modes.append(t)
    else:
        modes = solve_coupled(
            sys, path=path, seed=seed, tols=tols, shift=shift,
            force_distinct_fluids=force_distinct_fluids, size_cap=size_cap,
        )
    out = []
    for t in modes:
        cls = classify_mode(t, sys.sides, classify_opts)
        out.append(ModeSolution(
            frequency=f, omega=omega, k=t.k, kappa_y=dict(t.kappa_y),
            gamma_y=dict(t.gamma_y), classification=cls, vector=t.vector,
            residual=t.residual, system=sys,
        ))
    out.sort(key=lambda m: (m.k.real, m.k.imag))
    return tuple(out)


def dispersion_sweep(
    model: PlateModel,
    frequencies,
    path: str = "auto",
    seed: int = 0,
    tols: Tolerances | None = None,
    force_distinct_fluids: bool = False,
    size_cap: int = 20000,
    shift: float | None = None,
    classify_opts: ClassifyOptions | None = None,
    map_fn=map,
) -> SweepResult:
    """Solve the coupled problem frequency by frequency.

    Element orders are fixed from the highest frequency; the free-plate
    matrices are assembled once.  Per-frequency failures are recorded
    and skipped.  `map_fn` allows a thread-pool map (the LAPACK backend
    is reentrant).
    """
    freqs = np.asarray(sorted(frequencies), dtype=float)
    if len(freqs) == 0 or freqs[0] <= 0:
        raise ValueError("need a nonempty list of positive frequencies")
    stack = model.build_stack(2 * np.pi * freqs[-1])
    fem = assemble_stack(stack)

    def work(f):
        t0 = time.perf_counter()
        try:
            batch = _solve_one(
                model, fem, f, path=path, seed=seed, tols=tols,
                force_distinct_fluids=force_distinct_fluids,
                size_cap=size_cap, shift=shift, classify_opts=classify_opts,
            )
            return f, batch, None, time.perf_counter() - t0
        except Exception as exc:  # per-frequency isolation by design
            return f, (), f"{type(exc).__name__}: {exc}", time.perf_counter() - t0

    batches, failures, timings = [], [], []
    for f, batch, err, dt in map_fn(work, freqs):
        if err is not None:
            failures.append((f, err))
        batches.append(batch)
        timings.append(dt)
    return SweepResult(
        frequencies=freqs,
        batches=tuple(batches),
        failures=tuple(failures),
        timings=tuple(timings),
    )


# ---------------------------------------------------------------------------
# partial-wave boundary-determinant oracle (single isotropic layer)

def _plate_wave_columns(mat: IsotropicSolid, k, omega):
    """In-plane partial-wave data for one isotropic layer.

    Columns L+, L-, SV+, SV- referenced so growing exponentials never
    appear: '+' waves carry e^{i k_y (y - 0)}, '-' waves e^{i k_y (h - y)}.
    Returns (u_x, u_y, s_yy, s_xy) coefficient arrays and the vertical
    wavenumbers (principal branch).
    """
    lam, mu = mat.lam, mat.mu
    ky = np.sqrt((omega / mat.c_l) ** 2 - k**2 + 0j)
    gy = np.sqrt((omega / mat.c_t) ** 2 - k**2 + 0j)
    ux = np.array([1j * k, 1j * k, 1j * gy, -1j * gy])
    uy = np.array([1j * ky, -1j * ky, -1j * k, -1j * k])
    kap2 = k**2 + ky**2
    syy = np.array([-lam * kap2 - 2 * mu * ky**2, -lam * kap2 - 2 * mu * ky**2,
                    2 * mu * k * gy, -2 * mu * k * gy])
    sxy = np.array([-2 * mu * k * ky, 2 * mu * k * ky,
                    mu * (k**2 - gy**2), mu * (k**2 - gy**2)])
    return ux, uy, syy, sxy, ky, gy


def _halfspace_solid_columns(mat: IsotropicSolid, k, ky, gy):
    """L and SV columns of a solid half-space at its surface (global k_y)."""
    lam, mu = mat.lam, mat.mu
    ux = np.array([1j * k, 1j * gy])
    uy = np.array([1j * ky, -1j * k])
    kap2 = k**2 + ky**2
    syy = np.array([-lam * kap2 - 2 * mu * ky**2, 2 * mu * k * gy])
    sxy = np.array([-2 * mu * k * ky, mu * (k**2 - gy**2)])
    return ux, uy, syy, sxy


def _normalized_absdet(B: np.ndarray) -> float:
    for _ in range(2):
        rn = np.linalg.norm(B, axis=1)
        rn[rn == 0] = 1.0
        B = B / rn[:, None]
        cn = np.linalg.norm(B, axis=0)
        cn[cn == 0] = 1.0
        B = B / cn[None, :]
    return float(abs(np.linalg.det(B)))


def _is_sh_mode(mode: ModeSolution) -> bool:
    stack = mode.system.fem.stack
    if stack.ncomp != 3:
        return False
    v = mode.vector[: mode.system.n_plate].reshape(-1, 3)
    inplane = np.linalg.norm(v[:, :2])
    return np.linalg.norm(v[:, 2]) > 10.0 * inplane


def characteristic_residual(model: PlateModel, mode: ModeSolution) -> float:
    """Normalized exact boundary determinant for single-layer models.

    Assembles the interface/boundary conditions from the analytic
    partial-wave solutions of the layer and its half-spaces at
    (omega, k) using the certified vertical wavenumbers.  A genuine
    mode yields a value near machine zero; generic points give O(1).
    """
    if len(model.materials) != 1:
        raise ValueError("characteristic residual supports single-layer models only")
    mat = model.materials[0]
    h = model.thicknesses[0]
    omega, k = mode.omega, mode.k
    if _is_sh_mode(mode):
        return _sh_residual(model, mode, mat, h)

    ux, uy, syy, sxy, kyp, gyp = _plate_wave_columns(mat, k, omega)
    Ep, Eg = np.exp(1j * kyp * h), np.exp(1j * gyp * h)
    ph = {
        "bottom": np.array([1.0, Ep, 1.0, Eg]),
        "top": np.array([Ep, 1.0, Eg, 1.0]),
    }
    y_of = {"bottom": 0.0, "top": h}
    rows = []
    extra_cols = []  # per added half-space amplitude: dict row-index -> coeff
    ncol = 4
    for side in ("bottom", "top"):
        hs = getattr(model, side)
        f = ph[side]
        if hs is None:
            rows.append((syy * f, {}))
            rows.append((sxy * f, {}))
        elif isinstance(hs, FluidMaterial):
            sigma = 1.0 if side == "top" else -1.0
            kyg = -sigma * mode.kappa_y[side]  # global vertical wavenumber
            col = ncol
            ncol += 1
            # u_y continuity, tau_yy = -p, tau_xy = 0
            rows.append((uy * f, {col: -1j * kyg / (hs.rho * omega**2)}))
            rows.append((syy * f, {col: 1.0}))
            rows.append((sxy * f, {}))
        else:
            kyg, gyg = mode.kappa_y[side], mode.gamma_y[side]
            hux, huy, hsyy, hsxy = _halfspace_solid_columns(hs, k, kyg, gyg)
            c0, c1 = ncol, ncol + 1
            ncol += 2
            rows.append((ux * f, {c0: -hux[0], c1: -hux[1]}))
            rows.append((uy * f, {c0: -huy[0], c1: -huy[1]}))
            rows.append((syy * f, {c0: -hsyy[0], c1: -hsyy[1]}))
            rows.append((sxy * f, {c0: -hsxy[0], c1: -hsxy[1]}))
    B = np.zeros((len(rows), ncol), dtype=complex)
    for i, (plate_part, extras) in enumerate(rows):
        B[i, :4] = plate_part
        for j, c in extras.items():
            B[i, j] = c
    if B.shape[0] != B.shape[1]:  # pragma: no cover - construction invariant
        raise RuntimeError("boundary system is not square")
    return _normalized_absdet(B)


def _sh_residual(model: PlateModel, mode: ModeSolution, mat, h) -> float:
    """Boundary determinant for shear-horizontal (u_z-only) modes."""
    omega, k = mode.omega, mode.k
    mu = mat.mu
    gyp = np.sqrt((omega / mat.c_t) ** 2 - k**2 + 0j)
    Eg = np.exp(1j * gyp * h)
    uz = np.array([1.0, 1.0])
    szy = np.array([1j * gyp * mu, -1j * gyp * mu])
    ph = {"bottom": np.array([1.0, Eg]), "top": np.array([Eg, 1.0])}
    rows = []
    ncol = 2
    for side in ("bottom", "top"):
        hs = getattr(model, side)
        f = ph[side]
        if hs is None or isinstance(hs, FluidMaterial):
            # SH does not couple to an inviscid fluid
            rows.append((szy * f, {}))
        else:
            gyg = mode.gamma_y[side]
            col = ncol
            ncol += 1
            rows.append((uz * f, {col: -1.0}))
            rows.append((szy * f, {col: -1j * gyg * hs.mu}))
    B = np.zeros((len(rows), ncol), dtype=complex)
    for i, (plate_part, extras) in enumerate(rows):
        B[i, :2] = plate_part
        for j, c in extras.items():
            B[i, j] = c
    return _normalized_absdet(B)


# ---------------------------------------------------------------------------
# fields

@dataclass(frozen=True)
class FieldGrid:
    """Complex field snapshot on a rectangular (x, y) grid.

    `displacement[i, j]` holds the displacement vector at (y[i], x[j]);
    `pressure` is the acoustic pressure (NaN outside fluid half-spaces);
    `region[i]` is 'plate', 'bottom' or 'top'.
    """

    x: np.ndarray
    y: np.ndarray
    displacement: np.ndarray
    pressure: np.ndarray
    region: tuple[str, ...]


def _plate_profile(mode: ModeSolution, y: float) -> np.ndarray:
    stack = mode.system.fem.stack
    nc = stack.ncomp
    v = mode.vector[: mode.system.n_plate].reshape(-1, nc)
    y0 = 0.0
    for lay, (lo, hi) in zip(stack.layers, stack.layer_nodes):
        y1 = y0 + lay.thickness
        if y <= y1 + 1e-12 * max(y1, 1.0) or lay is stack.layers[-1]:
            xi = 2.0 * (y - y0) / lay.thickness - 1.0
            nodes = gauss_lobatto_nodes(lay.order)
            V, _ = lagrange_eval(nodes, np.array([xi]))
            return (V[0] @ v[lo:hi]).astype(complex)
        y0 = y1
    raise AssertionError("unreachable")


def _halfspace_profile(mode: ModeSolution, side: str, y: float):
    """(displacement vector, pressure or None) at vertical position y."""
    sc = mode.system.sides[side]
    stack = mode.system.fem.stack
    nc = stack.ncomp
    y_s = 0.0 if side == "bottom" else stack.thickness
    dy = y - y_s
    k = mode.k
    omega = mode.omega
    if sc.kind == "fluid":
        kyg = -sc.sign * mode.kappa_y[side]
        p_s = mode.vector[sc.pressure_dof]
        p = p_s * np.exp(1j * kyg * dy)
        rho = sc.material.rho
        u = np.zeros(nc, dtype=complex)
        u[0] = 1j * k * p / (rho * omega**2)
        u[1] = 1j * kyg * p / (rho * omega**2)
        return u, p
    kyg, gyg = mode.kappa_y[side], mode.gamma_y[side]
    c = np.asarray([mode.vector[i] for i in sc.amp_dofs])
    ik = 1j * k
    if nc == 2:
        A = np.array([[ik, 1j * gyg], [1j * kyg, -ik]])
        E = np.array([np.exp(1j * kyg * dy), np.exp(1j * gyg * dy)])
    else:
        A = np.array([
            [ik, 1j * gyg, 0.0],
            [1j * kyg, -ik, 0.0],
            [0.0, 0.0, ik],
        ])
        E = np.array([np.exp(1j * kyg * dy), np.exp(1j * gyg * dy),
                      np.exp(1j * gyg * dy)])
    return A @ (E * c), None


def evaluate_fields(mode: ModeSolution, x, y, t: float = 0.0) -> FieldGrid:
    """Space-domain fields u(x, y) e^{i(kx - omega t)} on a grid.

    Points must lie in the plate or in a coupled half-space; anything
    else raises a domain error.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    stack = mode.system.fem.stack
    H = stack.thickness
    nc = stack.ncomp
    disp = np.zeros((len(y), len(x), nc), dtype=complex)
    pres = np.full((len(y), len(x)), np.nan, dtype=complex)
    regions = []
    phase_x = np.exp(1j * (mode.k * x - mode.omega * t))
    for i, yi in enumerate(y):
        if 0.0 <= yi <= H:
            u = _plate_profile(mode, yi)
            p = None
            regions.append("plate")
        elif yi < 0.0 and "bottom" in mode.system.sides:
            u, p = _halfspace_profile(mode, "bottom", yi)
            regions.append("bottom")
        elif yi > H and "top" in mode.system.sides:
            u, p = _halfspace_profile(mode, "top", yi)
            regions.append("top")
        else:
            raise ValueError(
                f"y = {yi} lies outside the plate and all coupled half-spaces"
            )
        disp[i] = u[None, :] * phase_x[:, None]
        if p is not None:
            pres[i] = p * phase_x
    return FieldGrid(x=x, y=y, displacement=disp, pressure=pres,
                     region=tuple(regions))
