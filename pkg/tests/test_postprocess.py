import dataclasses

import numpy as np
import pytest

from leakywave.coupling import SideCoupling
from leakywave.materials import MATERIAL_LIBRARY
from leakywave.mep import EigenTuple
from leakywave.postprocess import (
    NP_TO_DB,
    ClassifyOptions,
    PlateModel,
    characteristic_residual,
    classify_mode,
    dispersion_sweep,
    evaluate_fields,
)

BRASS = MATERIAL_LIBRARY["brass"]
TEFLON = MATERIAL_LIBRARY["teflon"]
WATER = MATERIAL_LIBRARY["water"]


def _fluid_side(side):
    return SideCoupling(side=side, kind="fluid", material=WATER, kappa=4000.0,
                        gamma=None, pressure_dof=0, amp_dofs=None,
                        surface_dofs=(0, 1))


def _tuple(k, ky_top):
    return EigenTuple(k=k, xi0=-k**2, kappa_y={"top": ky_top}, gamma_y={},
                      vector=np.ones(2), residual=0.0, equation_svals=())


SIDES = {"top": _fluid_side("top")}


def test_np_to_db_constant():
    assert NP_TO_DB == pytest.approx(8.685889638, abs=1e-9)


def test_classify_trapped():
    # fluid wave decays away from the plate (outward = -kappa_y)
    t = _tuple(4000.0 + 0.0j, -200.0j)
    assert classify_mode(t, SIDES) == "Trapped"


def test_classify_outgoing_leaky():
    t = _tuple(4000.0 + 5.0j, -1000.0 + 2.0j)
    assert classify_mode(t, SIDES) == "Outgoing"


def test_classify_incoming_and_mirror_flip():
    t = _tuple(4000.0 + 5.0j, -1000.0 + 2.0j)
    assert classify_mode(t, SIDES) == "Outgoing"
    # reverse the outward wave: grows away from the plate and travels inward
    flipped = dataclasses.replace(t, kappa_y={"top": 1000.0 + 2.0j})
    assert classify_mode(flipped, SIDES) == "Incoming"


def test_classify_evanescent_wins():
    t = _tuple(1.0 + 500.0j, -200.0j)
    assert classify_mode(t, SIDES) == "Evanescent"


def test_classify_decaying_but_attenuated_is_outgoing():
    # all half-space waves decay but Im k exceeds the trapped threshold
    t = _tuple(4000.0 + 0.5j, -200.0j)
    assert classify_mode(t, SIDES) == "Outgoing"


def test_classify_free_plate():
    t = _tuple(4000.0 + 0.0j, 0.0)
    assert classify_mode(t, {}) == "Trapped"
    assert classify_mode(_tuple(500.0j, 0.0), {}) == "Evanescent"


def test_classify_threshold_options():
    t = _tuple(4000.0 + 0.5j, -200.0j)
    assert classify_mode(t, SIDES, ClassifyOptions(tol_trapped=1.0)) == "Trapped"


@pytest.fixture(scope="module")
def free_sweep():
    model = PlateModel((BRASS,), (1e-3,), (9,), "inplane")
    return model, dispersion_sweep(model, [1e6])


def test_characteristic_residual_free_plate(free_sweep):
    model, result = free_sweep
    props = [m for m in result.batches[0]
             if abs(m.k.imag) < 1e-6 * abs(m.k) and m.k.real > 1.0]
    assert props
    for m in props:
        assert characteristic_residual(model, m) < 1e-6
        off = dataclasses.replace(m, k=m.k * 1.02)
        assert characteristic_residual(model, off) > 1e-3


def test_characteristic_residual_rejects_multilayer(free_sweep):
    _, result = free_sweep
    model2 = PlateModel((BRASS, BRASS), (1e-3, 1e-3), (5, 5), "inplane")
    with pytest.raises(ValueError):
        characteristic_residual(model2, result.batches[0][0])


def test_mode_solution_properties(free_sweep):
    _, result = free_sweep
    m = result.batches[0][0]
    if m.k.real != 0:
        assert m.phase_velocity == pytest.approx(m.omega / m.k.real)
    assert m.attenuation_db_per_m == pytest.approx(m.k.imag * NP_TO_DB)
    assert m.attenuation_db_per_mm == pytest.approx(m.attenuation_db_per_m * 1e-3)


def test_evaluate_fields_nodal_exactness(free_sweep):
    _, result = free_sweep
    m = max(result.batches[0], key=lambda m: m.k.real)
    stack = m.system.fem.stack
    grid = evaluate_fields(m, x=[0.0], y=stack.node_y)
    v = m.vector.reshape(-1, stack.ncomp)
    assert np.abs(grid.displacement[:, 0, :] - v).max() < 1e-10
    assert grid.region == ("plate",) * stack.n_nodes
    assert np.isnan(grid.pressure).all()


def test_evaluate_fields_propagation_phase(free_sweep):
    _, result = free_sweep
    m = max(result.batches[0], key=lambda m: m.k.real)
    L = 0.37e-3
    grid = evaluate_fields(m, x=[0.0, L], y=[0.5e-3])
    ratio = grid.displacement[0, 1] / grid.displacement[0, 0]
    assert np.allclose(ratio, np.exp(1j * m.k * L), rtol=1e-10)


def test_evaluate_fields_domain_error(free_sweep):
    _, result = free_sweep
    m = result.batches[0][0]
    with pytest.raises(ValueError):
        evaluate_fields(m, x=[0.0], y=[-0.1e-3])  # vacuum below the plate


def test_sweep_isolates_per_frequency_failures():
    model = PlateModel((BRASS,), (1e-3,), (9,), "inplane", bottom=WATER)
    result = dispersion_sweep(model, [0.5e6, 1e6], path="generic", size_cap=1)
    assert len(result.failures) == 2
    assert all(batch == () for batch in result.batches)
    assert all("MepSizeError" in err for _, err in result.failures)


def test_sweep_rejects_empty_frequencies():
    model = PlateModel((BRASS,), (1e-3,), (9,), "inplane")
    with pytest.raises(ValueError):
        dispersion_sweep(model, [])
