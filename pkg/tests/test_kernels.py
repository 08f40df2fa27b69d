"""Backend agreement: compiled kernels against the numpy reference."""

import numpy as np
import pytest
import scipy.sparse as sp

from ellipdim import _kernels, fields, pde


@pytest.fixture(scope="module")
def setup():
    mesh = pde.mesh_disk(1.0, 0.08, snap_radii=(0.5,))
    field = fields.CheckerboardField()
    area, bx, by = mesh.p1_data()
    a11, a12, a22 = mesh.coefficients(field)
    rng = np.random.default_rng(0)
    u = rng.standard_normal((len(mesh.vertices), 6))
    return mesh, area, bx, by, a11, a12, a22, u


def test_backend_identifies_itself():
    assert _kernels.BACKEND in ("cython", "numpy")


def test_stiffness_reference_matches_active(setup):
    mesh, area, bx, by, a11, a12, a22, _ = setup
    nv = len(mesh.vertices)
    r1, c1, v1 = _kernels.stiffness_triplets(mesh.triangles, bx, by, area, a11, a12, a22)
    r2, c2, v2 = _kernels._ref.stiffness_triplets(mesh.triangles, bx, by, area, a11, a12, a22)
    m1 = sp.coo_matrix((v1, (r1, c1)), shape=(nv, nv)).tocsr()
    m2 = sp.coo_matrix((v2, (r2, c2)), shape=(nv, nv)).tocsr()
    dev = np.abs((m1 - m2).toarray()).max()
    assert dev <= 1e-12 * np.abs(m1.toarray()).max()


def test_energy_gram_reference_matches_active(setup):
    mesh, area, bx, by, a11, a12, a22, u = setup
    elems = mesh.elements_inside(0.5)
    g1 = _kernels.energy_gram(mesh.triangles, bx, by, area, a11, a12, a22, u, elems)
    g2 = _kernels._ref.energy_gram(mesh.triangles, bx, by, area, a11, a12, a22, u, elems)
    assert np.abs(g1 - g2).max() <= 1e-12 * np.abs(g1).max()


def test_stiffness_kernel_row_sums_vanish(setup):
    # constants are in the kernel of the form, whatever the coefficients
    mesh, area, bx, by, a11, a12, a22, _ = setup
    nv = len(mesh.vertices)
    r, c, v = _kernels.stiffness_triplets(mesh.triangles, bx, by, area, a11, a12, a22)
    mat = sp.coo_matrix((v, (r, c)), shape=(nv, nv)).tocsr()
    ones = np.ones(nv)
    assert np.abs(mat @ ones).max() < 1e-12 * np.abs(mat.data).max()


def test_energy_gram_subset_additivity(setup):
    mesh, area, bx, by, a11, a12, a22, u = setup
    inner = mesh.elements_inside(0.5)
    full = mesh.elements_inside(1.0)
    outer = np.setdiff1d(full, inner)
    g_in = _kernels.energy_gram(mesh.triangles, bx, by, area, a11, a12, a22, u, inner)
    g_out = _kernels.energy_gram(mesh.triangles, bx, by, area, a11, a12, a22, u, outer)
    g_all = _kernels.energy_gram(mesh.triangles, bx, by, area, a11, a12, a22, u, full)
    assert np.abs(g_in + g_out - g_all).max() <= 1e-11 * np.abs(g_all).max()
