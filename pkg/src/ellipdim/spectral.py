"""Eigenvalues of the weighted tangential operator on circles.

The operator acts on functions of the circle |x| = t as a Sturm-Liouville
problem in the angle: the stiffness carries the tangential metric and the
density, while the mass matrix reduces exactly to the Euclidean one via the
area-element identity.  Discretization is periodic P1 on a uniform angular
grid; a dense symmetric-definite solver is used up to 4096 grid points and
shift-invert iteration beyond.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import counting
from .geometry import conformal_batch, _inv_2x2

DENSE_GRID_LIMIT = 4096


class FieldTraceError(ValueError):
    """The field has no well-defined restriction to circles; smooth it first."""


class SpectrumError(RuntimeError):
    """Eigensolve failed a structural sanity check."""


@dataclass
class BoundarySpectrum:
    """Leading eigenvalues of the weighted circle operator at radius t."""

    t: float
    field_label: str
    eigenvalues: np.ndarray
    grid_size: int
    eigenvectors: np.ndarray | None = None

    @property
    def count(self):
        return len(self.eigenvalues)


def _circle_coefficients(fieldobj, t, grid_size):
    """Stiffness density p and Euclidean mass density on interval midpoints."""
    dtheta = 2 * np.pi / grid_size
    theta = (np.arange(grid_size) + 0.5) * dtheta
    pts = t * np.column_stack([np.cos(theta), np.sin(theta)])
    tangents = np.column_stack([-np.sin(theta), np.cos(theta)])
    w, phi, _, mats, _, _ = conformal_batch(fieldobj, pts)
    g = _inv_2x2(w[:, None, None] * mats)
    # squared metric length of the circle parametrization d x / d theta
    e_metric = t * t * np.einsum("ni,nij,nj->n", tangents, g, tangents)
    p = phi / np.sqrt(e_metric)
    return p, dtheta


def _assemble(p, t, dtheta, grid_size, sparse=False):
    n = grid_size
    idx = np.arange(n)
    nxt = (idx + 1) % n
    ap = p / dtheta
    rows = np.concatenate([idx, nxt, idx, nxt])
    cols = np.concatenate([idx, nxt, nxt, idx])
    vals = np.concatenate([ap, ap, -ap, -ap])
    mass = t * dtheta / 6.0
    mrows = np.concatenate([idx, nxt, idx, nxt])
    mcols = np.concatenate([idx, nxt, nxt, idx])
    mvals = np.concatenate([np.full(n, 2 * mass), np.full(n, 2 * mass),
                            np.full(n, mass), np.full(n, mass)])
    if sparse:
        a = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsc()
        m = sp.coo_matrix((mvals, (mrows, mcols)), shape=(n, n)).tocsc()
        return a, m
    a = np.zeros((n, n))
    m = np.zeros((n, n))
    np.add.at(a, (rows, cols), vals)
    np.add.at(m, (mrows, mcols), mvals)
    return a, m


def boundary_spectrum(fieldobj, t, m, grid_size=1024, want_vectors=False):
    """First m eigenvalues of the weighted tangential operator on |x| = t.

    The generalized problem A c = eta M c uses periodic P1 elements on a
    uniform angular grid; M is the Euclidean mass matrix by the area-element
    identity.
    """
    if t <= 0:
        raise ValueError("radius must be positive")
    if m < 1:
        raise ValueError("need at least one eigenvalue")
    if grid_size < 8 * m:
        raise ValueError(f"grid size {grid_size} cannot resolve {m} modes (need >= {8 * m})")
    if not getattr(fieldobj, "boundary_trace_ok", False):
        raise FieldTraceError(
            f"field '{getattr(fieldobj, 'label', fieldobj)}' has no well-defined "
            "circle restriction; pass its mollification instead"
        )

    p, dtheta = _circle_coefficients(fieldobj, t, grid_size)
    if grid_size <= DENSE_GRID_LIMIT:
        a, mm = _assemble(p, t, dtheta, grid_size, sparse=False)
        try:
            if want_vectors:
                vals, vecs = sla.eigh(a, mm, subset_by_index=(0, m - 1))
            else:
                vals = sla.eigh(a, mm, subset_by_index=(0, m - 1), eigvals_only=True)
                vecs = None
        except np.linalg.LinAlgError as exc:
            raise SpectrumError(f"mass matrix not positive definite: {exc}") from exc
    else:
        a, mm = _assemble(p, t, dtheta, grid_size, sparse=True)
        sigma = -1e-8 * max(float(np.max(p)), 1.0)
        vals, vecs = spla.eigsh(a, k=m, M=mm, sigma=sigma, which="LM")
        order = np.argsort(vals)
        vals = vals[order]
        vecs = vecs[:, order] if want_vectors else None

    if vals[0] < -1e-8 or vals[0] > 1e-8:
        raise SpectrumError(f"lowest eigenvalue {vals[0]:.3e} is not zero within 1e-8")
    if np.any(np.diff(vals) < -1e-12):
        raise SpectrumError("eigenvalues not sorted ascending")
    return BoundarySpectrum(
        t=float(t),
        field_label=getattr(fieldobj, "label", str(fieldobj)),
        eigenvalues=np.asarray(vals, dtype=float),
        grid_size=grid_size,
        eigenvectors=vecs,
    )


def weighted_mass_matrix(fieldobj, t, grid_size):
    """Mass matrix assembled with the literal weighted area element (used to
    verify that it reduces to the Euclidean mass matrix)."""
    dtheta = 2 * np.pi / grid_size
    theta = (np.arange(grid_size) + 0.5) * dtheta
    pts = t * np.column_stack([np.cos(theta), np.sin(theta)])
    tangents = np.column_stack([-np.sin(theta), np.cos(theta)])
    w, phi, _, mats, _, _ = conformal_batch(fieldobj, pts)
    g = _inv_2x2(w[:, None, None] * mats)
    length = t * np.sqrt(np.einsum("ni,nij,nj->n", tangents, g, tangents))
    density = phi * length  # per-interval phi dA_h / dtheta
    n = grid_size
    idx = np.arange(n)
    nxt = (idx + 1) % n
    out = np.zeros((n, n))
    np.add.at(out, (idx, idx), 2 * density * dtheta / 6.0)
    np.add.at(out, (nxt, nxt), 2 * density * dtheta / 6.0)
    np.add.at(out, (idx, nxt), density * dtheta / 6.0)
    np.add.at(out, (nxt, idx), density * dtheta / 6.0)
    return out


def euclidean_mass_matrix(t, grid_size):
    """Euclidean consistent mass matrix of periodic P1 on the circle."""
    _, mm = _assemble(np.ones(grid_size), t, 2 * np.pi / grid_size, grid_size)
    return mm


def euclidean_sphere_oracle(n, t, k):
    """k-th Euclidean eigenvalue of the sphere of radius t."""
    return counting.sphere_eigenvalue(n, k) / (t * t)


def verify_eigen_lower_bound(spectrum, lambda_r0):
    """Margins eta_k - lambda_r0^2 * eta_k(unit circle) / t^2 for each k."""
    t = spectrum.t
    oracle = np.array(
        [counting.sphere_eigenvalue(2, k) for k in range(1, spectrum.count + 1)],
        dtype=float,
    ) / (t * t)
    return spectrum.eigenvalues - lambda_r0**2 * oracle
