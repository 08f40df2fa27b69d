"""Conformal data, energy-form collapse, boundary area-element identity."""

import numpy as np
import pytest

from ellipdim import fields, geometry, pde


@pytest.fixture(scope="module")
def unit_mesh():
    return pde.mesh_disk(1.0, 0.05, snap_radii=(0.5,))


FIELD_ZOO = [
    fields.IdentityField(),
    fields.ConstantField(np.diag([1.0, 4.0])),
    fields.ConstantField([[2.0, 0.5], [0.5, 1.5]]),
    fields.RadialPiecewiseField([0.5], [1.0, 2.0]),
    fields.CheckerboardField(),
    fields.ConicDecayField(),
    fields.RandomCellField(seed=2),
]


def test_conformal_data_identity():
    cd = geometry.conformal_data(fields.IdentityField(), [0.3, -0.7])
    assert cd.w == 1.0 and cd.phi == 1.0
    assert np.array_equal(cd.g_inv, np.eye(2))


def test_conformal_data_diag_frozen_values():
    f = fields.ConstantField(np.diag([1.0, 4.0]))
    cd = geometry.conformal_data(f, [1.0, 0.0])
    assert cd.w == pytest.approx(1.0, abs=1e-15)
    assert cd.phi == pytest.approx(2.0, rel=1e-15)
    assert np.allclose(cd.g_inv, np.diag([1.0, 4.0]))
    cd = geometry.conformal_data(f, [0.0, 1.0])
    assert cd.w == pytest.approx(4.0, abs=1e-15)
    assert cd.phi == pytest.approx(2.0, rel=1e-15)
    assert np.allclose(cd.g_inv, np.diag([4.0, 16.0]))


def test_conformal_round_trip():
    rng = np.random.default_rng(3)
    for f in FIELD_ZOO:
        for pt in rng.uniform(-2, 2, size=(20, 2)):
            cd = geometry.conformal_data(f, pt)
            assert np.abs(cd.g @ cd.g_inv - np.eye(2)).max() < 1e-12


def test_origin_convention_flagged():
    cd = geometry.conformal_data(fields.ConstantField(np.diag([1.0, 4.0])), [0.0, 0.0])
    assert cd.origin_convention
    assert cd.w == pytest.approx(1.0)  # direction e1


def test_radial_gradient_norm_equals_weight():
    rng = np.random.default_rng(11)
    pts = rng.uniform(-3, 3, size=(10_000, 2))
    for f in FIELD_ZOO:
        w, _, _, mats, rho_hat, _ = geometry.conformal_batch(f, pts)
        g_inv = w[:, None, None] * mats
        norms = np.sqrt(np.einsum("ni,nij,nj->n", rho_hat, g_inv, rho_hat))
        assert np.abs(norms - w).max() <= 1e-12 * max(1.0, w.max())
        for pt, wval in zip(pts[:10], w[:10]):
            assert geometry.radial_gradient_norm(f, pt) == pytest.approx(wval, abs=1e-12 * max(1.0, wval))


def test_radial_gradient_norm_frozen():
    assert geometry.radial_gradient_norm(fields.IdentityField(), [0.4, 0.1]) == pytest.approx(1.0)
    f = fields.ConstantField(np.diag([1.0, 4.0]))
    assert geometry.radial_gradient_norm(f, [0.0, 1.0]) == pytest.approx(4.0)


def test_boundary_weight_identity_battery():
    assert geometry.boundary_weight_identity(fields.IdentityField(), 1.0) < 1e-12
    f = fields.ConstantField(np.diag([1.0, 4.0]))
    assert geometry.boundary_weight_identity(f, 1.0) < 1e-8
    f2 = fields.ConstantField(2.0 * np.eye(2))
    assert geometry.boundary_weight_identity(f2, 2.0) < 1e-8


def test_weighted_energy_closed_forms(unit_mesh):
    fid = fields.IdentityField()
    x = unit_mesh.vertices[:, 0]
    y = unit_mesh.vertices[:, 1]
    ev = geometry.weighted_energy(fid, x, x, 1.0, unit_mesh)
    assert ev.value == pytest.approx(np.pi, rel=2e-3)
    assert geometry.weighted_energy(fid, x, y, 1.0, unit_mesh).value == pytest.approx(0.0, abs=1e-12)
    const = np.ones_like(x)
    assert geometry.weighted_energy(fid, const, const, 1.0, unit_mesh).value == pytest.approx(0.0, abs=1e-12)


def test_energy_collapse_all_fields(unit_mesh):
    rng = np.random.default_rng(5)
    u = rng.standard_normal((len(unit_mesh.vertices), 6))
    for f in FIELD_ZOO:
        ge = geometry.energy_gram(f, unit_mesh, u, 1.0)
        gr = geometry.riemannian_energy_gram(f, unit_mesh, u, 1.0)
        scale = np.abs(ge).max()
        assert np.abs(ge - gr).max() <= 1e-10 * scale
        assert np.abs(ge - ge.T).max() <= 1e-12 * scale


def test_energy_monotone_in_radius(unit_mesh):
    f = fields.CheckerboardField()
    rng = np.random.default_rng(8)
    u = rng.standard_normal(len(unit_mesh.vertices))
    e_half = geometry.energy_gram(f, unit_mesh, u, 0.5)[0, 0]
    e_full = geometry.energy_gram(f, unit_mesh, u, 1.0)[0, 0]
    assert 0.0 <= e_half <= e_full


def test_energy_identity_with_solver(unit_mesh):
    f = fields.RadialPiecewiseField([0.5], [1.0, 2.0])
    sol = pde.solve_dirichlet(unit_mesh, f, lambda x, y: x)
    gram = geometry.energy_gram(f, unit_mesh, sol.values, 1.0)
    assert gram[0, 0] == pytest.approx(sol.energy, rel=1e-10)
