"""Candidate polynomial-growth solution spaces and the bound machinery.

Builds bases of Dirichlet solutions with circular-harmonic boundary traces,
tracks their Dirichlet-Gram matrices across nested disks, measures the
log-determinant growth, runs the boundary-eigenvalue inequality checks, and
assembles the final per-field bound report.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import counting, fields, geometry, pde, spectral


class OrthonormalizationError(RuntimeError):
    """The Gram matrix is numerically rank deficient."""


GRAM_CONDITION_CAP = 1e12


def thread_count():
    """Worker count for independent solves (ELLIPDIM_THREADS, default 1)."""
    try:
        return max(1, int(os.environ.get("ELLIPDIM_THREADS", "1")))
    except ValueError:
        return 1


def harmonic_trace(degree, mode):
    """Boundary trace r^p cos(p theta) or r^p sin(p theta) as a callable."""
    if mode not in ("cos", "sin"):
        raise ValueError("mode must be 'cos' or 'sin'")
    fn = math.cos if mode == "cos" else math.sin
    def trace(x, y):
        r = math.hypot(x, y)
        return r**degree * fn(degree * math.atan2(y, x))
    return trace


@dataclass
class HarmonicBasis:
    """Dirichlet solutions with circular-harmonic traces, pinned at 0."""

    fieldobj: object
    mesh: pde.DiskMesh
    outer_radius: float
    members: list            # (degree, mode) per column
    values: np.ndarray       # (nv, m) nodal values, f(0) = 0
    solutions: list
    condition_flag: bool = False

    @property
    def size(self):
        return self.values.shape[1]

    def gram(self, t):
        return geometry.energy_gram(self.fieldobj, self.mesh, self.values, t)

    def growth_exponents(self, window=None, points=9):
        """Log-log slope of the ring sup of |u| per member over a radius window.

        The window defaults to [1, R/2] to keep the outer Dirichlet ring from
        polluting the measured growth.
        """
        lo, hi = window if window is not None else (1.0, self.outer_radius / 2.0)
        targets = np.geomspace(lo, hi, points)
        ring_ids = sorted({int(np.argmin(np.abs(self.mesh.ring_radii - t))) for t in targets})
        radii = self.mesh.ring_radii[ring_ids]
        sups = np.empty((len(ring_ids), self.size))
        for row, ring in enumerate(ring_ids):
            sl = slice(self.mesh.ring_start[ring], self.mesh.ring_start[ring] + self.mesh.ring_size[ring])
            sups[row] = np.abs(self.values[sl]).max(axis=0)
        logs = np.log(np.maximum(sups, 1e-300))
        slopes, _ = np.polyfit(np.log(radii), logs, 1)
        return slopes


def build_polynomial_basis(fieldobj, d, R, mesh=None, target_h=0.05, snap_radii=()):
    """Solve the Dirichlet problem for every degree-p circular harmonic trace,
    1 <= p <= d, both angular modes, and pin the solutions at the origin."""
    if not (isinstance(d, int) and d >= 1):
        raise ValueError("top degree must be a positive integer")
    if mesh is None:
        mesh = pde.mesh_disk(R, target_h, snap_radii=snap_radii)
    if mesh.radius < R - 1e-12:
        raise ValueError("mesh does not cover the requested outer radius")

    members = [(p, mode) for p in range(1, d + 1) for mode in ("cos", "sin")]
    workers = thread_count()
    def solve_one(member):
        p, mode = member
        return pde.solve_dirichlet(mesh, fieldobj, harmonic_trace(p, mode))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            solutions = list(pool.map(solve_one, members))
    else:
        solutions = [solve_one(mb) for mb in members]

    values = np.column_stack([s.values for s in solutions])
    values = values - values[0:1, :]  # vertex 0 is the origin
    basis = HarmonicBasis(
        fieldobj=fieldobj,
        mesh=mesh,
        outer_radius=float(R),
        members=members,
        values=values,
        solutions=solutions,
    )
    gram0 = basis.gram(min(1.0, R / 2.0))
    cond = np.linalg.cond(gram0)
    basis.condition_flag = bool(cond > GRAM_CONDITION_CAP)
    return basis


@dataclass
class GramRecord:
    """Dirichlet-Gram matrix of a basis at one radius."""

    t: float
    matrix: np.ndarray
    logdet_rel: float = 0.0  # ln det relative to the reference radius
    condition: float = 0.0

    def validate(self, rtol=1e-12):
        scale = max(np.abs(self.matrix).max(), 1e-300)
        return bool(np.abs(self.matrix - self.matrix.T).max() <= rtol * scale)


def gram_matrix(basis, t):
    """Single Gram record at radius t (t must not exceed the basis radius)."""
    if t > basis.outer_radius + 1e-12:
        raise ValueError(f"radius {t} exceeds the basis outer radius {basis.outer_radius}")
    mat = basis.gram(t)
    return GramRecord(t=float(t), matrix=mat, condition=float(np.linalg.cond(mat)))


def gram_records(basis, radii):
    """Gram records across radii with log-determinants relative to the first."""
    records = [gram_matrix(basis, t) for t in radii]
    sign0, logdet0 = np.linalg.slogdet(records[0].matrix)
    if sign0 <= 0:
        raise OrthonormalizationError("reference Gram is not positive definite")
    for rec in records:
        sign, logdet = np.linalg.slogdet(rec.matrix)
        if sign <= 0:
            raise OrthonormalizationError(f"Gram at t={rec.t} is not positive definite")
        rec.logdet_rel = float(logdet - logdet0)
    return records


@dataclass
class SlopeResult:
    slope: float
    budget: float
    margin: float
    radii: list
    logdets: list
    excluded: list


def det_growth_exponent(records, n=2, partition=None, condition_cap=GRAM_CONDITION_CAP):
    """Least-squares slope of the relative log-determinant against log radius.

    Radii whose Gram condition number exceeds the cap are excluded and
    reported.  When a partition is given, the admissible exponent budget and
    the margin (budget - slope) are attached.
    """
    if len(records) < 4:
        raise ValueError("need at least four radii for a slope fit")
    used = [r for r in records if r.condition <= condition_cap]
    excluded = [r.t for r in records if r.condition > condition_cap]
    if len(used) < 4:
        raise OrthonormalizationError("too many degenerate Grams for a slope fit")
    logr = np.log([r.t for r in used])
    logd = np.array([r.logdet_rel for r in used])
    slope = float(np.polyfit(logr, logd, 1)[0])
    budget = float("nan")
    margin = float("nan")
    if partition is not None:
        budget = counting.det_growth_budget(n, partition)
        margin = budget - slope
    return SlopeResult(
        slope=slope,
        budget=budget,
        margin=margin,
        radii=[r.t for r in used],
        logdets=[r.logdet_rel for r in used],
        excluded=excluded,
    )


def orthonormalize(basis, t):
    """Column transform making the basis D_t-orthonormal; returns new values."""
    gram = basis.gram(t)
    try:
        chol = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError as exc:
        raise OrthonormalizationError(f"Gram at t={t} is rank deficient: {exc}") from exc
    return np.linalg.solve(chol, basis.values.T).T


@dataclass
class MarginResult:
    name: str
    margin: float
    lhs: float
    rhs: float
    tolerance: float
    details: dict = dc_field(default_factory=dict)

    @property
    def passed(self):
        return self.margin >= -self.tolerance


def lemma1_check(basis, t, spectrum=None, grid_size=512, tolerance=1e-3, seed=0):
    """Boundary-energy eigenvalue inequality for a D_t-orthonormal basis.

    Returns rhs - lhs where lhs = 2 sum_k sqrt(eta_k) over the first k
    boundary eigenvalues and rhs is the summed boundary integral of the
    squared metric gradient.  The rhs is also checked to be invariant under a
    random orthonormal change of basis.
    """
    ortho = orthonormalize(basis, t)
    k = ortho.shape[1]
    if spectrum is None:
        spectrum = spectral.boundary_spectrum(basis.fieldobj, t, k, grid_size=grid_size)
    if spectrum.count < k:
        raise ValueError(f"spectrum carries {spectrum.count} eigenvalues; need {k}")
    lhs = 2.0 * float(np.sum(np.sqrt(np.maximum(spectrum.eigenvalues[:k], 0.0))))
    integrals = geometry.boundary_energy_integrals(basis.fieldobj, basis.mesh, ortho, t)
    rhs = float(np.sum(integrals))

    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((k, k)))
    rotated = geometry.boundary_energy_integrals(basis.fieldobj, basis.mesh, ortho @ q, t)
    invariance_dev = abs(float(np.sum(rotated)) - rhs) / max(abs(rhs), 1e-300)

    return MarginResult(
        name="boundary-energy-inequality",
        margin=rhs - lhs,
        lhs=lhs,
        rhs=rhs,
        tolerance=tolerance,
        details={
            "t": float(t),
            "k": k,
            "eigenvalues": [float(v) for v in spectrum.eigenvalues[:k]],
            "invariance_dev": invariance_dev,
            "grid_size": spectrum.grid_size,
        },
    )


def integrated_eigen_check(basis, r0, r, radius_grid=None, grid_size=512,
                           tolerance=1e-3, lambda_upper=None):
    """Integrated form of the eigenvalue inequality between two radii.

    lhs = 2 int sum_k sqrt(eta_k(t)) dt (trapezoid on the log grid), rhs is
    the exterior upper ellipticity bound times the log-determinant increment
    of the Gram family.  Requires at least eight grid points per octave.
    """
    if radius_grid is None:
        octaves = math.log2(r / r0)
        radius_grid = np.geomspace(r0, r, max(2, int(math.ceil(8 * octaves)) + 1))
    radius_grid = np.asarray(radius_grid, dtype=float)
    octaves = math.log2(r / r0)
    if (len(radius_grid) - 1) < 8 * octaves - 1e-9:
        raise ValueError(
            f"radius grid too coarse: {len(radius_grid) - 1} intervals for "
            f"{octaves:.2f} octaves (need >= 8 per octave)"
        )

    k = basis.size
    sums = np.empty(len(radius_grid))
    for i, t in enumerate(radius_grid):
        spec = spectral.boundary_spectrum(basis.fieldobj, t, k, grid_size=grid_size)
        sums[i] = np.sum(np.sqrt(np.maximum(spec.eigenvalues, 0.0)))
    # trapezoid in s = ln t: int f dt = int f(e^s) e^s ds
    lhs = 2.0 * float(np.trapezoid(sums * radius_grid, x=np.log(radius_grid)))

    recs = gram_records(basis, [r0, r])
    if lambda_upper is None:
        eb = basis.fieldobj.exterior_bounds(r0)
        lambda_upper = eb[1] if eb is not None else basis.fieldobj.Lam
    rhs = float(lambda_upper) * recs[1].logdet_rel

    return MarginResult(
        name="integrated-eigenvalue-inequality",
        margin=rhs - lhs,
        lhs=lhs,
        rhs=rhs,
        tolerance=tolerance,
        details={
            "r0": float(r0),
            "r": float(r),
            "grid_points": len(radius_grid),
            "Lambda_upper": float(lambda_upper),
            "grid_size": grid_size,
        },
    )


@dataclass
class DimConfig:
    """Knobs for the numerical dimension estimates."""

    outer_radius: float = 4.0
    mesh_h: float = 0.05
    reference_radius: float = 1.0
    growth_margin: float = 0.1
    rank_rel_threshold: float = 1e-6
    window_points: int = 9

    def window(self):
        return (self.reference_radius, self.outer_radius / 2.0)


@dataclass
class DimEstimate:
    degree: int
    estimate: int
    flags: list


def _rank_with_flags(gram, rel_threshold):
    sv = np.linalg.eigvalsh(gram)[::-1]
    sv = np.maximum(sv, 0.0)
    if sv[0] == 0.0:
        return 0, ["zero-gram"]
    cut = rel_threshold * sv[0]
    rank = int(np.count_nonzero(sv > cut))
    flags = []
    band = (sv > cut / 10.0) & (sv < cut * 10.0)
    if np.any(band):
        flags.append(f"ambiguous-rank: {int(np.count_nonzero(band))} singular value(s) within a decade of the cutoff")
    return rank, flags


def estimate_dims(fieldobj, d, config=None, basis=None):
    """Numerical per-degree dimension estimates from a solution basis.

    For each target degree the basis members whose measured growth exponent
    stays below degree + margin are kept; the estimate is 1 plus the rank of
    their reference-radius Gram.  Near-threshold exponents and in-band
    singular values are flagged rather than silently resolved.
    """
    if not (isinstance(d, int) and 0 <= d <= 4):
        raise ValueError("dimension estimates are desk-scale: need integer 0 <= d <= 4")
    config = config or DimConfig()
    out = {0: DimEstimate(degree=0, estimate=1, flags=[])}
    if d == 0:
        return out
    if basis is None:
        basis = build_polynomial_basis(
            fieldobj, d, config.outer_radius,
            target_h=config.mesh_h,
            snap_radii=(config.reference_radius,),
        )
    exponents = basis.growth_exponents(window=config.window(), points=config.window_points)
    gram_full = basis.gram(config.reference_radius)
    for dd in range(1, d + 1):
        keep = np.nonzero(exponents <= dd + config.growth_margin)[0]
        flags = []
        near = np.nonzero(np.abs(exponents - dd) <= config.growth_margin)[0]
        for idx in near:
            p, mode = basis.members[idx]
            flags.append(
                f"member harm:{p}:{mode} growth exponent {exponents[idx]:.3f} "
                f"within {config.growth_margin} of degree {dd}"
            )
        if len(keep) == 0:
            out[dd] = DimEstimate(degree=dd, estimate=1, flags=flags)
            continue
        sub = gram_full[np.ix_(keep, keep)]
        rank, rank_flags = _rank_with_flags(sub, config.rank_rel_threshold)
        out[dd] = DimEstimate(degree=dd, estimate=1 + rank, flags=flags + rank_flags)
    return out


@dataclass
class BoundReport:
    """Everything the bound verification produces for one field."""

    field_spec: dict
    field_label: str
    n: int
    top_degree: int
    ellipticity: dict
    degrees: list
    partition: dict | None
    det_growth: dict
    checks: list
    envelopes: dict
    discretization: dict
    mollification: dict | None
    passed: bool

    def to_dict(self):
        return {
            "field": self.field_spec,
            "field_label": self.field_label,
            "n": self.n,
            "top_degree": self.top_degree,
            "ellipticity": self.ellipticity,
            "degrees": self.degrees,
            "partition": self.partition,
            "det_growth": self.det_growth,
            "checks": self.checks,
            "envelopes": self.envelopes,
            "discretization": self.discretization,
            "mollification": self.mollification,
            "passed": self.passed,
        }


def _margin_entry(result):
    return {
        "name": result.name,
        "margin": result.margin,
        "lhs": result.lhs,
        "rhs": result.rhs,
        "tolerance": result.tolerance,
        "pass": result.passed,
        "details": result.details,
    }


def theorem2_report(fieldobj, d, partition=None, config=None,
                    lemma_radii=(1.0, 2.0), eigen_margin_tol=1e-6,
                    margin_tol=1e-3, slope_tol=0.2, mollify_eps=0.05):
    """Assemble the full bound report for a field at top degree d.

    Exact dimensions are used for the flat Laplacian; other fields get
    numerical estimates (d <= 4).  Fields without circle traces are smoothed
    before any boundary-spectrum work, mirroring how the estimates are
    actually derived.
    """
    config = config or DimConfig()
    n = 2
    is_laplacian = isinstance(fieldobj, fields.IdentityField)
    numeric_d = min(d, 4)  # desk-scale cap for the solver-backed sections
    if not is_laplacian and d > 4:
        raise ValueError("only the flat field has exact dimensions; other reports need d <= 4")

    profile = fields.ellipticity_profile(
        fieldobj, np.geomspace(config.reference_radius, config.outer_radius, 5)
    )
    ratio = profile.ratio_inf

    # one shared basis mesh: snapped at the Gram radii and the check radii
    basis = None
    gram_radii = np.geomspace(config.reference_radius, config.outer_radius / 2.0, 6)
    if numeric_d >= 1:
        snaps = tuple(sorted(set(tuple(gram_radii) + tuple(lemma_radii)
                                 + (config.reference_radius, 2.0 * config.reference_radius))))
        basis = build_polynomial_basis(
            fieldobj, numeric_d, config.outer_radius,
            target_h=config.mesh_h,
            snap_radii=snaps,
        )

    # dimensions per degree
    degrees = []
    exact_dims = {q: counting.cumulative_harmonic_dim(n, q) for q in range(0, d + 1)}
    estimates = None
    if is_laplacian:
        dims = {float(q): float(exact_dims[q]) for q in range(0, d + 1)}
    else:
        estimates = estimate_dims(fieldobj, d, config=config, basis=basis)
        dims = {float(q): float(estimates[q].estimate) for q in range(0, d + 1)}
    for q in range(0, d + 1):
        degrees.append({
            "d": q,
            "exact_dim_laplacian": exact_dims[q],
            "estimated_dim": None if is_laplacian else estimates[q].estimate,
            "flags": [] if is_laplacian else list(estimates[q].flags),
        })

    # partition and determinant growth
    if partition is None and d >= 1:
        block_dims = [int(dims[float(i)] - dims[float(i - 1)]) for i in range(1, d + 1)]
        partition = counting.GrowthPartition(tuple(range(d + 1)), tuple(block_dims))
    checks = []
    det_growth = {}
    if numeric_d >= 1:
        trace_part = counting.GrowthPartition(
            tuple(range(numeric_d + 1)), tuple(2 for _ in range(numeric_d))
        )
        recs = gram_records(basis, gram_radii)
        slope_res = det_growth_exponent(recs, n=n, partition=trace_part)
        det_growth = {
            "slope": slope_res.slope,
            "budget": slope_res.budget,
            "margin": slope_res.margin,
            "tolerance": slope_tol,
            "pass": slope_res.slope <= slope_res.budget + slope_tol,
            "radii": slope_res.radii,
            "logdet_rel": slope_res.logdets,
            "excluded_radii": slope_res.excluded,
        }

    # boundary-spectrum work happens on a trace-capable field
    moll_info = None
    spectral_field = fieldobj
    spectral_basis = basis
    if numeric_d >= 1 and not getattr(fieldobj, "boundary_trace_ok", False):
        moll = fields.mollify(
            fieldobj, mollify_eps, r=config.outer_radius, r0=0.5 * config.reference_radius
        )
        moll_info = {
            "epsilon": moll.epsilon,
            "kernel_width": moll.kernel_width,
            "exceptional_set_measure": moll.exceptional_set_measure,
            "annulus_bounds": list(moll.annulus_bounds),
        }
        spectral_field = moll
        spectral_basis = build_polynomial_basis(
            moll, numeric_d, config.outer_radius,
            mesh=basis.mesh,
        )

    if numeric_d >= 1:
        eb = spectral_field.exterior_bounds(0.5 * config.reference_radius)
        lam_r0 = eb[0] if eb is not None else spectral_field.lam
        lam_upper = eb[1] if eb is not None else spectral_field.Lam
        for t in lemma_radii:
            res = lemma1_check(spectral_basis, t, tolerance=margin_tol)
            checks.append(_margin_entry(res))
            spec = spectral.boundary_spectrum(spectral_field, t, spectral_basis.size, grid_size=1024)
            margins = spectral.verify_eigen_lower_bound(spec, lam_r0)
            checks.append({
                "name": "eigenvalue-comparison",
                "margin": float(margins.min()),
                "lhs": float("nan"),
                "rhs": float("nan"),
                "tolerance": eigen_margin_tol,
                "pass": bool(margins.min() >= -eigen_margin_tol),
                "details": {"t": float(t), "k": int(spec.count), "lambda_r0": float(lam_r0)},
            })
        res = integrated_eigen_check(
            spectral_basis, config.reference_radius, 2.0 * config.reference_radius,
            tolerance=margin_tol, lambda_upper=lam_upper,
        )
        checks.append(_margin_entry(res))

    # envelopes and dimension-sum inequalities; dimensions jump only at
    # integer degrees, so non-integer partition points read the floor value
    h_opt, max_val = counting.maximize_rhs_2_12(n, d, ratio)
    dims_at = lambda a: dims[float(math.floor(a))]
    weighted_lhs = counting.weighted_dim_sum(partition, dims_at) if partition else 0.0
    weighted_bound = counting.weighted_dim_sum_bound(n, partition, ratio) if partition else float("nan")
    sum_lhs = sum(dims[float(i)] for i in range(1, d + 1))
    sum_bound = counting.dim_sum_bound(n, d, ratio) if d >= 1 else float("nan")
    liminf = counting.liminf_bound(n, ratio)
    liminf_entry = {"bound": liminf}
    if d >= 1:
        # per-degree ratio at the top degree; the bound is asymptotic, so a
        # slack of bound/(2d) absorbs the finite-degree correction and a
        # ratio inside the slack band marks the bound as attained
        top_ratio = dims[float(d)] / float(d) ** (n - 1)
        slack = liminf / (2.0 * d)
        liminf_entry.update({
            "h_top_ratio": top_ratio,
            "slack": slack,
            "pass": bool(top_ratio <= liminf + slack + 1e-12),
            "sharp": bool(abs(top_ratio - liminf) <= slack + 1e-12),
        })
    envelopes = {
        "ratio_inf": ratio,
        "ratio_provenance": profile.provenance,
        "weighted_dim_sum": {
            "lhs": weighted_lhs,
            "bound": weighted_bound,
            "pass": bool(d < 1 or weighted_lhs <= weighted_bound + 1e-9),
        },
        "dim_sum": {
            "lhs": sum_lhs,
            "bound": sum_bound,
            "pass": bool(d < 1 or sum_lhs <= sum_bound + 1e-9),
        },
        "liminf": liminf_entry,
        "max_trace": {"h_opt": h_opt, "max_value": max_val},
    }

    passed = (
        all(c["pass"] for c in checks)
        and envelopes["weighted_dim_sum"]["pass"]
        and envelopes["dim_sum"]["pass"]
        and (not det_growth or det_growth["pass"])
    )
    return BoundReport(
        field_spec=fieldobj.spec_dict(),
        field_label=fieldobj.label,
        n=n,
        top_degree=d,
        ellipticity={
            "lambda_inf": profile.lambda_inf,
            "Lambda_inf": profile.Lambda_inf,
            "ratio_inf": ratio,
            "provenance": profile.provenance,
        },
        degrees=degrees,
        partition=None if partition is None else {
            "degrees": list(partition.degrees),
            "block_dims": list(partition.block_dims),
            "s_exponent": counting.det_growth_budget(n, partition),
        },
        det_growth=det_growth,
        checks=checks,
        envelopes=envelopes,
        discretization={
            "mesh_h": config.mesh_h,
            "outer_radius": config.outer_radius,
            "reference_radius": config.reference_radius,
            "rank_rel_threshold": config.rank_rel_threshold,
            "growth_margin": config.growth_margin,
        },
        mollification=moll_info,
        passed=bool(passed),
    )
