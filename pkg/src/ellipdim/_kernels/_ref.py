"""Pure-numpy reference implementations of the compiled kernels.

Used as the fallback backend when the extension is unavailable (or when
ELLIPDIM_PURE_PY is set) and as the ground truth in backend-agreement tests.
"""

import numpy as np


def stiffness_triplets(tris, bx, by, area, a11, a12, a22):
    """COO triplets of the stiffness form int a grad(u) . grad(v) dx."""
    c11 = (area * a11)[:, None, None]
    c12 = (area * a12)[:, None, None]
    c22 = (area * a22)[:, None, None]
    gx_i = bx[:, :, None]
    gx_j = bx[:, None, :]
    gy_i = by[:, :, None]
    gy_j = by[:, None, :]
    local = c11 * gx_i * gx_j + c12 * (gx_i * gy_j + gy_i * gx_j) + c22 * gy_i * gy_j
    t64 = tris.astype(np.int64)
    rows = np.broadcast_to(t64[:, :, None], local.shape).ravel()
    cols = np.broadcast_to(t64[:, None, :], local.shape).ravel()
    return rows.copy(), cols.copy(), local.ravel()


def energy_gram(tris, bx, by, area, a11, a12, a22, u, elems):
    """Gram matrix of the energy form over a subset of elements."""
    t = tris[elems]
    ue = u[t]  # (k, 3, m)
    gx = np.einsum("et,etm->em", bx[elems], ue)
    gy = np.einsum("et,etm->em", by[elems], ue)
    w = area[elems]
    px = w[:, None] * (a11[elems, None] * gx + a12[elems, None] * gy)
    py = w[:, None] * (a12[elems, None] * gx + a22[elems, None] * gy)
    return gx.T @ px + gy.T @ py
