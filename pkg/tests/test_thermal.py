import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lcfshape.exceptions import NumericalError, ValidationError
from lcfshape.fields import ScalarField
from lcfshape.geometry import BaselineDesign, build_baseline
from lcfshape.thermal import RobinData, assemble_heat, gradient_field, solve_heat, temperature_bounds_check

from oracles import convergence_orders

K_COND, ETA = 40.0, 100.0
HOLE_SPLIT = 0.65  # between the hole radius 0.3 and the outer radius 1.0


def linear_ambient(pts, normals):
    """Ambient field making ``T = x`` exact, built from the true circle normals."""
    r = np.linalg.norm(pts, axis=-1)
    nx = np.where(r > HOLE_SPLIT, 1.0, -1.0) * pts[..., 0] / r
    return pts[..., 0] + K_COND / ETA * nx


@pytest.fixture(scope="module")
def refinements(design):
    return [build_baseline(design, h) for h in (0.2, 0.1, 0.05)]


class TestManufactured:
    def test_linear_solution_order(self, refinements):
        hs, errs = [], []
        for m in refinements:
            T = solve_heat(m, RobinData(ETA, linear_ambient, K_COND))
            hs.append(m.cell_diameters.max())
            errs.append(np.max(np.abs(T.values - m.nodes[:, 0])))
        assert np.all(convergence_orders(hs, errs) >= 1.8)

    def test_recovered_gradient_converges(self, refinements):
        hs, errs = [], []
        for m in refinements:
            g = gradient_field(solve_heat(m, RobinData(ETA, linear_ambient, K_COND)))
            hs.append(m.cell_diameters.max())
            errs.append(np.max(np.abs(g.nodal.values - [1.0, 0.0])))
        assert np.all(convergence_orders(hs, errs) >= 0.9)
        assert errs[-1] < 1e-3

    @pytest.mark.parametrize("Te", [293.0, 1234.5, -40.0])
    def test_constant_ambient_exact(self, coarse_mesh, Te):
        T = solve_heat(coarse_mesh, RobinData(ETA, Te, K_COND))
        assert np.max(np.abs(T.values - Te)) <= 1e-10 * max(1.0, abs(Te))
        assert np.max(np.abs(gradient_field(T).nodal.values)) <= 1e-9

    def test_large_transfer_coefficient_imposes_ambient(self, coarse_mesh):
        T = solve_heat(coarse_mesh, RobinData(1e6, "x", K_COND))
        b = np.unique(coarse_mesh.facets)
        assert np.max(np.abs(T.values[b] - coarse_mesh.nodes[b, 0])) < 1e-3


class TestAssembly:
    def test_symmetric(self, coarse_mesh):
        A, _ = assemble_heat(coarse_mesh, RobinData(ETA, "300 + 50*x*y", K_COND))
        scale = abs(A).max()
        assert abs(A - A.T).max() <= 1e-14 * scale

    def test_positive_definite(self, coarse_mesh, rng):
        A, _ = assemble_heat(coarse_mesh, RobinData(ETA, 300.0, K_COND))
        v = rng.normal(size=coarse_mesh.n_nodes)
        assert v @ (A @ v) > 0

    def test_linear_in_ambient(self, coarse_mesh):
        a, b = 0.7, -2.5
        T1 = solve_heat(coarse_mesh, RobinData(ETA, "300 + 20*x", K_COND)).values
        T2 = solve_heat(coarse_mesh, RobinData(ETA, "y*y - 10", K_COND)).values
        T3 = solve_heat(coarse_mesh, RobinData(ETA, f"{a}*(300 + 20*x) + {b}*(y*y - 10)", K_COND)).values
        np.testing.assert_allclose(T3, a * T1 + b * T2, rtol=0, atol=1e-9 * np.max(np.abs(T3)))

    def test_dense_and_cg_agree(self, coarse_mesh):
        data = RobinData(ETA, "300 + 150*(1 + x)", K_COND)
        np.testing.assert_allclose(solve_heat(coarse_mesh, data, solver="dense").values,
                                   solve_heat(coarse_mesh, data).values, rtol=1e-10)

    def test_negative_eta_rejected(self, coarse_mesh):
        with pytest.raises(ValidationError):
            assemble_heat(coarse_mesh, RobinData("x", 300.0, K_COND))

    def test_vanishing_eta_is_numerical_failure(self, coarse_mesh):
        with pytest.raises(NumericalError):
            solve_heat(coarse_mesh, RobinData(0.0, 300.0, K_COND))

    def test_bad_conductivity(self):
        with pytest.raises(ValidationError):
            RobinData(ETA, 300.0, 0.0)

    def test_three_dimensional_constant(self, design):
        m = build_baseline(design, 0.3, dim=3, thickness=0.1)
        T = solve_heat(m, RobinData(ETA, 350.0, K_COND))
        assert np.max(np.abs(T.values - 350.0)) <= 1e-10 * 350.0


class TestGradients:
    def test_affine_field_exact(self, coarse_mesh):
        x, y = coarse_mesh.nodes.T
        g = gradient_field(ScalarField(coarse_mesh, 2.0 * x - 3.0 * y + 1.0))
        np.testing.assert_allclose(g.cell, np.broadcast_to([2.0, -3.0], g.cell.shape), atol=1e-12)
        np.testing.assert_allclose(g.nodal.values, np.broadcast_to([2.0, -3.0], g.nodal.values.shape), atol=1e-12)


class TestBounds:
    def test_solution_passes(self, coarse_mesh):
        data = RobinData(ETA, "300 + 150*(1 + x)", K_COND)
        rep = temperature_bounds_check(solve_heat(coarse_mesh, data), data)
        assert rep.passed
        assert rep.Te_min <= rep.T_min <= rep.T_max <= rep.Te_max

    def test_perturbed_field_fails(self, coarse_mesh):
        data = RobinData(ETA, "300 + 150*(1 + x)", K_COND)
        T = solve_heat(coarse_mesh, data)
        bumped = T.values.copy()
        bumped[np.argmax(bumped)] = 605.0  # max T_e is 600
        assert not temperature_bounds_check(ScalarField(coarse_mesh, bumped), data).passed

    @settings(max_examples=15, deadline=None)
    @given(st.floats(-200.0, 200.0), st.floats(-200.0, 200.0), st.floats(0.5, 6.0))
    def test_maximum_principle_random_ambient(self, a, b, freq):
        mesh = _shared_mesh()
        data = RobinData(ETA, f"400 + {a}*x + {b}*sin({freq}*y)", K_COND)
        assert temperature_bounds_check(solve_heat(mesh, data), data).passed


_MESH = {}


def _shared_mesh():
    if "m" not in _MESH:
        _MESH["m"] = build_baseline(BaselineDesign(1.0, (0.0, 0.0), 0.3, 1.5), 0.2)
    return _MESH["m"]
