"""Conformal reweighting of a coefficient field and the associated energies.

A field a(x) induces a radial weight w = rho_hat . a rho_hat, an inverse
metric g^ij = w a^ij, and a density phi = w^((n-2)/2) sqrt(det a).  The
weighted Riemannian Dirichlet form built from these collapses identically to
the Euclidean form int a grad(u) . grad(v) dx, which is what the production
code computes; the literal Riemannian route is kept as an assertion path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels


class EnergyIdentityError(AssertionError):
    """The Riemannian and Euclidean energy routes disagreed beyond tolerance."""


COLLAPSE_RTOL = 1e-10


@dataclass(frozen=True)
class ConformalData:
    """Pointwise conformal data of a field at one point."""

    w: float
    phi: float
    g_inv: np.ndarray
    g: np.ndarray
    det_g: float
    origin_convention: bool  # True when the radial direction was pinned at 0


@dataclass(frozen=True)
class EnergyValue:
    """One weighted Dirichlet-form entry over a disk of given radius."""

    value: float
    radius: float
    i: int = 0
    j: int = 0


def _radial_directions(pts):
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    rho = np.linalg.norm(pts, axis=1)
    at_origin = rho == 0.0
    safe = np.where(at_origin, 1.0, rho)
    rho_hat = pts / safe[:, None]
    rho_hat[at_origin] = 0.0
    rho_hat[at_origin, 0] = 1.0  # fixed-direction convention at the origin
    return rho_hat, at_origin


def conformal_batch(fieldobj, pts):
    """Vectorized conformal data: arrays (w, phi, det_a, a_mats, rho_hat)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    mats = fieldobj.eval_batch(pts)
    rho_hat, at_origin = _radial_directions(pts)
    w = np.einsum("ni,nij,nj->n", rho_hat, mats, rho_hat)
    det_a = np.linalg.det(mats)
    n = mats.shape[1]
    phi = w ** ((n - 2) / 2.0) * np.sqrt(det_a)
    return w, phi, det_a, mats, rho_hat, at_origin


def conformal_data(fieldobj, x):
    """Pointwise weight, density, and metric pair for a field at x."""
    w, phi, det_a, mats, _, at_origin = conformal_batch(fieldobj, [x])
    g_inv = w[0] * mats[0]
    g = np.linalg.inv(g_inv)
    return ConformalData(
        w=float(w[0]),
        phi=float(phi[0]),
        g_inv=g_inv,
        g=g,
        det_g=float(np.linalg.det(g)),
        origin_convention=bool(at_origin[0]),
    )


def radial_gradient_norm(fieldobj, x):
    """Metric norm of the gradient of the distance function at x.

    Computed literally as sqrt(rho_hat . g_inv rho_hat); equals the weight w
    by the algebra of the construction.
    """
    w, _, _, mats, rho_hat, _ = conformal_batch(fieldobj, [x])
    g_inv = w[0] * mats[0]
    return float(np.sqrt(rho_hat[0] @ g_inv @ rho_hat[0]))


def _inv_2x2(mats):
    det = mats[:, 0, 0] * mats[:, 1, 1] - mats[:, 0, 1] * mats[:, 1, 0]
    inv = np.empty_like(mats)
    inv[:, 0, 0] = mats[:, 1, 1]
    inv[:, 1, 1] = mats[:, 0, 0]
    inv[:, 0, 1] = -mats[:, 0, 1]
    inv[:, 1, 0] = -mats[:, 1, 0]
    return inv / det[:, None, None]


def metric_length_factors(fieldobj, pts, tangents):
    """(phi, ds_factor): density and metric length element per unit Euclidean
    length along the given unit tangents."""
    w, phi, _, mats, _, _ = conformal_batch(fieldobj, pts)
    g = _inv_2x2(w[:, None, None] * mats)
    ds = np.sqrt(np.einsum("ni,nij,nj->n", tangents, g, tangents))
    return phi, ds


def boundary_weight_identity(fieldobj, t, quadrature_size=4096):
    """Max residual of the area-element identity over a battery of test
    functions: the Euclidean boundary integral versus the phi-weighted metric
    one on the circle of radius t."""
    if t <= 0:
        raise ValueError("radius must be positive")
    theta = (np.arange(quadrature_size) + 0.5) * (2 * np.pi / quadrature_size)
    pts = t * np.column_stack([np.cos(theta), np.sin(theta)])
    tangents = np.column_stack([-np.sin(theta), np.cos(theta)])
    phi, ds = metric_length_factors(fieldobj, pts, tangents)
    dtheta = 2 * np.pi / quadrature_size
    battery = [
        np.ones_like(theta),
        np.cos(theta),
        np.sin(theta),
        np.cos(2 * theta),
        np.sin(3 * theta),
        np.exp(np.cos(theta)),
    ]
    worst = 0.0
    for f in battery:
        lhs = float(np.sum(f * t) * dtheta)  # dA_0 = t dtheta
        rhs = float(np.sum(f * phi * ds * t) * dtheta)
        worst = max(worst, abs(lhs - rhs))
    return worst


def energy_gram(fieldobj, mesh, nodal_values, t):
    """Gram matrix of the field's Dirichlet form over B(t) (Euclidean route)."""
    elems = mesh.elements_inside(t)
    area, bx, by = mesh.p1_data()
    a11, a12, a22 = mesh.coefficients(fieldobj)
    values = np.ascontiguousarray(nodal_values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    return _kernels.energy_gram(mesh.triangles, bx, by, area, a11, a12, a22, values, elems)


def riemannian_energy_gram(fieldobj, mesh, nodal_values, t):
    """Same Gram computed through the literal weighted-metric route, using
    the matching per-element coefficient samples."""
    elems = mesh.elements_inside(t)
    area, _, _ = mesh.p1_data()
    a11, a12, a22 = mesh.coefficients(fieldobj)
    values = np.ascontiguousarray(nodal_values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    grads = mesh.gradients(values)[elems]  # (k, 2, m)

    mats = np.empty((len(elems), 2, 2))
    mats[:, 0, 0] = a11[elems]
    mats[:, 0, 1] = mats[:, 1, 0] = a12[elems]
    mats[:, 1, 1] = a22[elems]
    rho_hat, _ = _radial_directions(mesh.centroids()[elems])
    w = np.einsum("ni,nij,nj->n", rho_hat, mats, rho_hat)
    det_a = mats[:, 0, 0] * mats[:, 1, 1] - mats[:, 0, 1] ** 2
    phi = np.sqrt(det_a)  # w^((n-2)/2) = 1 for n = 2
    g_inv = w[:, None, None] * mats
    det_g = 1.0 / (det_a * w**2)
    dens = phi * np.sqrt(det_g) * area[elems]
    return np.einsum("eim,eij,ejl,e->ml", grads, g_inv, grads, dens)


def weighted_energy(fieldobj, u, v, t, mesh, i=0, j=0, check=True):
    """Weighted Dirichlet-form entry D_t(u, v) as an EnergyValue.

    Computes the Euclidean form and, when ``check`` is set, asserts the
    collapse identity against the literal Riemannian route on the same
    quadrature.
    """
    pair = np.column_stack([np.asarray(u, float), np.asarray(v, float)])
    gram = energy_gram(fieldobj, mesh, pair, t)
    if check:
        riem = riemannian_energy_gram(fieldobj, mesh, pair, t)
        scale = max(np.abs(gram).max(), 1e-300)
        if np.abs(gram - riem).max() > COLLAPSE_RTOL * scale:
            raise EnergyIdentityError(
                f"energy-form collapse violated: max deviation "
                f"{np.abs(gram - riem).max():.3e} at scale {scale:.3e}"
            )
    return EnergyValue(value=float(gram[0, 1]), radius=float(t), i=i, j=j)


def boundary_energy_integrals(fieldobj, mesh, nodal_values, t):
    """Per-function boundary integrals of the squared metric gradient times
    the density over the mesh ring at radius t.

    Uses the inner-adjacent element's P1 gradient on each ring edge and
    midpoint quadrature in the metric length element.
    """
    mid, length, tangent, inner = mesh.ring_edges(t)
    values = np.ascontiguousarray(nodal_values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    grads = mesh.gradients(values)[inner]  # (ne, 2, m)

    mats = fieldobj.eval_batch(mid)
    rho_hat, _ = _radial_directions(mid)
    w = np.einsum("ni,nij,nj->n", rho_hat, mats, rho_hat)
    det_a = np.linalg.det(mats)
    phi = np.sqrt(det_a)
    # |grad_g u|^2 = w * (a grad u . grad u)
    quad = w[:, None] * np.einsum("eim,eij,ejm->em", grads, mats, grads)
    g = _inv_2x2(w[:, None, None] * mats)
    ds = np.sqrt(np.einsum("ni,nij,nj->n", tangent, g, tangent)) * length
    return np.einsum("em,e->m", quad, phi * ds)
