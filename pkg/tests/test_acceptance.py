"""End-to-end acceptance checks against independent analytic oracles.

Numbered to mirror the project acceptance list: free-plate spectra
against the Rayleigh-Lamb determinant, discretization checkpoints,
dual-formulation equivalence, trapped-mode detection, leaky-mode
boundary-determinant oracles, the six-parameter stress configuration,
shift-seed invariance, interface-condition checks on evaluated fields,
and a reported timing figure for the reduced fluid path.
"""

import time

import numpy as np
import pytest

from leakywave.coupling import couple
from leakywave.fem import (
    Layer,
    LayerStack,
    assemble_stack,
    choose_order,
    gauss_lobatto_nodes,
    lagrange_eval,
    solve_free_plate,
)
from leakywave.materials import MATERIAL_LIBRARY
from leakywave.mep import build_mep, build_mep_isotropic_fluid, solve_coupled
from leakywave.postprocess import (
    PlateModel,
    characteristic_residual,
    dispersion_sweep,
    evaluate_fields,
)

from oracles import (
    bracket_lamb_roots,
    canonical_spectrum,
    hausdorff_relative,
    rayleigh_lamb_residual,
)

BRASS = MATERIAL_LIBRARY["brass"]
TEFLON = MATERIAL_LIBRARY["teflon"]
TITANIUM = MATERIAL_LIBRARY["titanium"]
WATER = MATERIAL_LIBRARY["water"]
OIL = MATERIAL_LIBRARY["oil"]

H = 1e-3  # all plates here are 1 mm thick

#: spectra of the two formulations are compared inside |k| <= 12/h; the
#: far-evanescent tail beyond |k|h ~ 13 is a pure mesh artifact where the
#: two linearizations allocate eigenvalues differently at low frequency
K_WINDOW = 12.0 / H


# ---------------------------------------------------------------------------
# 1. free plate against the Rayleigh-Lamb determinant

def test_01_free_plate_rayleigh_lamb_oracle():
    # two orders above the very highest recommendation keeps the
    # discretization error well below the oracle tolerance
    fem = assemble_stack(LayerStack([Layer(BRASS, H, 15)], "inplane"))
    freqs = np.linspace(0.1e6, 4e6, 20)
    t0 = time.perf_counter()
    for f in freqs:
        omega = 2 * np.pi * f
        ks = np.array([k for k, _ in solve_free_plate(fem, omega)])
        prop = [k for k in ks if abs(k.imag) < 1e-6 * abs(k) and k.real > 10.0]
        assert prop
        for k in prop:
            assert rayleigh_lamb_residual(BRASS, H, omega, k.real) < 1e-6
        # conversely: every bracketed oracle root has a computed partner
        roots = bracket_lamb_roots(BRASS, H, omega, 10.0, omega / 1900.0)
        for root in roots:
            assert np.min(np.abs(ks - root)) < 1e-4 * root
    assert time.perf_counter() - t0 < 10.0


# ---------------------------------------------------------------------------
# 2. element-order checkpoints

def test_02_element_order_checkpoints():
    MHz = 2 * np.pi * 1e6
    assert choose_order(BRASS, H, 4 * MHz) == 9
    assert choose_order(BRASS, H, 7 * MHz) == 13
    assert choose_order(TITANIUM, H, 10 * MHz) == 13
    assert choose_order(TITANIUM, H, 3 * MHz) == 6
    assert choose_order(BRASS, H, 3 * MHz) == 8


# ---------------------------------------------------------------------------
# 3. matrix-size checkpoints

def test_03_matrix_size_checkpoints():
    omega = 2 * np.pi * 1e6

    fem = assemble_stack(LayerStack([Layer(BRASS, H, 9)], "inplane"))
    sys = couple(fem, omega, bottom=WATER, top=WATER)
    assert sys.n == 22
    assert build_mep_isotropic_fluid(sys).det_size == 4 * 22
    assert build_mep(sys, force_distinct_fluids=True).det_size == 8 * 22

    fem = assemble_stack(LayerStack([Layer(BRASS, H, 13)], "full"))
    sys = couple(fem, omega, bottom=TEFLON)
    assert sys.n == 45
    assert build_mep(sys).det_size == 8 * 45

    tri = [Layer(TITANIUM, H, 6), Layer(BRASS, H, 8), Layer(TITANIUM, H, 6)]
    sys = couple(assemble_stack(LayerStack(tri, "inplane")), omega,
                 bottom=TEFLON, top=OIL)
    assert sys.n == 45
    assert build_mep(sys).det_size == 16 * 45

    fem = assemble_stack(LayerStack([Layer(TITANIUM, H, 13)], "full"))
    sys = couple(fem, omega, bottom=TEFLON, top=BRASS)
    assert build_mep(sys).det_size == 32 * sys.n


# ---------------------------------------------------------------------------
# 4. dual-path equivalence (fixture shared with criterion 8)

DUAL_FREQS = np.linspace(0.2e6, 2.0e6, 10)


def _dual_path_spectra(seed):
    fem = assemble_stack(LayerStack([Layer(BRASS, H, 9)], "inplane"))
    four, reduced = [], []
    for f in DUAL_FREQS:
        sys = couple(fem, 2 * np.pi * f, bottom=WATER, top=WATER)
        m4 = solve_coupled(sys, path="generic", seed=seed,
                           force_distinct_fluids=True)
        mc = solve_coupled(sys, path="isotropic_fluid", seed=seed)
        four.append(canonical_spectrum(np.array([t.k for t in m4]), K_WINDOW))
        reduced.append(canonical_spectrum(np.array([t.k for t in mc]), K_WINDOW))
    return four, reduced


@pytest.fixture(scope="module")
def dual_path_seed0():
    t0 = time.perf_counter()
    four, reduced = _dual_path_spectra(seed=0)
    return four, reduced, time.perf_counter() - t0


def test_04_dual_path_equivalence(dual_path_seed0):
    four, reduced, elapsed = dual_path_seed0
    for ka, kc in zip(four, reduced):
        assert len(ka) == len(kc) > 0
        assert hausdorff_relative(ka, kc) < 1e-7
    assert elapsed < 60.0


# ---------------------------------------------------------------------------
# 5. quasi-Scholte detection

def test_05_quasi_scholte_mode():
    model = PlateModel((BRASS,), (H,), (13,), "inplane", bottom=WATER, top=WATER)
    result = dispersion_sweep(model, [1e6])
    assert not result.failures
    scholte = [m for m in result.batches[0]
               if m.classification == "Trapped"
               and 1400.0 < m.phase_velocity < 1480.0]
    assert scholte
    for m in scholte:
        assert abs(m.k.imag) < 0.1  # Np/m, i.e. 1e-4 Np/mm


# ---------------------------------------------------------------------------
# 6. leaky-mode boundary-determinant oracle

SPOT_FREQS = 0.5e6 + 0.25e6 * np.arange(10)  # 0.5 .. 2.75 MHz


@pytest.fixture(scope="module")
def brass_water_sweep():
    model = PlateModel((BRASS,), (H,), (13,), "inplane", bottom=WATER)
    return model, dispersion_sweep(model, SPOT_FREQS)


@pytest.fixture(scope="module")
def brass_teflon_sweep():
    model = PlateModel((BRASS,), (H,), (13,), "inplane", bottom=TEFLON)
    return model, dispersion_sweep(model, SPOT_FREQS)


def test_06_leaky_oracle(brass_water_sweep, brass_teflon_sweep):
    for model, result in (brass_water_sweep, brass_teflon_sweep):
        assert not result.failures
        leaky = [m for m in result.all_modes()
                 if m.classification == "Outgoing"]
        assert leaky
        for m in leaky:
            assert characteristic_residual(model, m) < 1e-6


# ---------------------------------------------------------------------------
# 7. six-parameter stress configuration (fixture shared with criterion 8)

SIX_FREQS = (1e6, 2e6, 3e6)


def _solve_six_param(seed):
    fem = assemble_stack(LayerStack([Layer(TITANIUM, H, 13)], "full"))
    out = {}
    for f in SIX_FREQS:
        sys = couple(fem, 2 * np.pi * f, bottom=TEFLON, top=BRASS)
        t0 = time.perf_counter()
        modes = solve_coupled(sys, path="generic", seed=seed)
        out[f] = (sys, modes, time.perf_counter() - t0)
    return out


@pytest.fixture(scope="module")
def six_param_seed0():
    return _solve_six_param(seed=0)


def test_07_six_parameter_certificates(six_param_seed0):
    for f, (sys, modes, elapsed) in six_param_seed0.items():
        assert elapsed < 300.0
        assert modes
        ks = np.array([t.k for t in modes])
        for t in modes:
            assert len(t.equation_svals) == 6
            assert max(t.equation_svals) < 1e-6
            for side, sc in sys.sides.items():
                assert abs(t.kappa_y[side] ** 2 + t.k**2 - sc.kappa**2) \
                    < 1e-8 * sc.kappa**2
                assert abs(t.gamma_y[side] ** 2 + t.k**2 - sc.gamma**2) \
                    < 1e-8 * sc.gamma**2
            # spectrum of the real-matrix problem is conjugation symmetric
            # (modulo the simultaneous +-k pairing)
            d = min(np.min(np.abs(ks - np.conj(t.k))),
                    np.min(np.abs(ks + np.conj(t.k))))
            assert d < 1e-7 * max(abs(t.k), 1.0)


# ---------------------------------------------------------------------------
# 8. shift-seed invariance

def test_08_seed_invariance_four_param(dual_path_seed0):
    four0, _, _ = dual_path_seed0
    four1, _ = _dual_path_spectra(seed=1)
    for ka, kb in zip(four0, four1):
        assert hausdorff_relative(ka, kb) < 1e-7


def test_08_seed_invariance_six_param(six_param_seed0):
    other = _solve_six_param(seed=1)
    for f in SIX_FREQS:
        k0 = canonical_spectrum(
            np.array([t.k for t in six_param_seed0[f][1]]), K_WINDOW)
        k1 = canonical_spectrum(np.array([t.k for t in other[f][1]]), K_WINDOW)
        assert hausdorff_relative(k0, k1) < 1e-7


# ---------------------------------------------------------------------------
# 9. interface conditions on evaluated fields

def _plate_tyy_at_bottom(mode):
    """Vertical normal stress of the plate at its bottom surface."""
    stack = mode.system.fem.stack
    lay = stack.layers[0]
    lo, hi = stack.layer_nodes[0]
    v = mode.vector[: mode.system.n_plate].reshape(-1, stack.ncomp)[lo:hi]
    nodes = gauss_lobatto_nodes(lay.order)
    V, D = lagrange_eval(nodes, np.array([-1.0]))
    u = V[0] @ v
    du = (2.0 / lay.thickness) * (D[0] @ v)
    lam, mu = lay.material.lam, lay.material.mu
    return lam * (1j * mode.k * u[0]) + (lam + 2 * mu) * du[1]


def test_09_fluid_interface_conditions(brass_water_sweep):
    # leaky modes of the criterion-6 brass-water sweep at 1 MHz
    _, result = brass_water_sweep
    idx = int(np.argmin(np.abs(result.frequencies - 1e6)))
    leaky = [m for m in result.batches[idx] if m.classification == "Outgoing"]
    assert leaky
    for m in leaky:
        # sample just off the interface; any larger offset measures the
        # genuine field slope kappa_y * eps rather than the jump
        eps = 1e-13
        grid = evaluate_fields(m, x=[0.0], y=[-eps, eps])
        u_fluid = grid.displacement[0, 0]
        u_plate = grid.displacement[1, 0]
        assert abs(u_fluid[1] - u_plate[1]) < 1e-6 * abs(u_plate[1])
        p_s = grid.pressure[0, 0]
        tyy = _plate_tyy_at_bottom(m)
        assert abs(tyy + p_s) < 1e-6 * abs(p_s)


# ---------------------------------------------------------------------------
# 10. reduced-path timing (reported, non-gating)

def test_10_reduced_path_timing(capsys):
    fem = assemble_stack(LayerStack([Layer(BRASS, H, 9)], "inplane"))
    times = []
    for f in np.linspace(0.5e6, 2.0e6, 5):
        sys = couple(fem, 2 * np.pi * f, bottom=WATER, top=WATER)
        t0 = time.perf_counter()
        modes = solve_coupled(sys, path="isotropic_fluid")
        times.append(time.perf_counter() - t0)
        assert modes
    mean = float(np.mean(times))
    # reported figure; the 0.5 s/frequency target is informational
    with capsys.disabled():
        print(f"\n[timing] reduced fluid path: {mean * 1e3:.1f} ms/frequency "
              f"(target <= 500 ms, reference 5 ms)")
    assert np.isfinite(mean) and mean > 0.0
