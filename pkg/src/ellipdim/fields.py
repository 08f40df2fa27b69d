"""Coefficient-matrix families: evaluation, ellipticity profiles, smoothing.

A field is a map x -> a(x) into symmetric matrices with lam*I <= a <= Lam*I.
Families that know their exterior bounds in closed form report them as
"analytic"; otherwise bounds are estimated by seeded sampling and labeled as
such.  Smoothing replaces a field by a nearby smooth one that differs from it
only inside thin tubes around its jump set, with the tube width solved from
an exceptional-measure budget.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.signal import fftconvolve


class FieldSpecError(ValueError):
    """Raised for malformed field-specification documents; carries the key."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"field spec key '{key}': {message}")


class MollifyError(RuntimeError):
    """Smoothing could not meet the exceptional-measure budget."""


@dataclass(frozen=True)
class TailInfo:
    lambda_inf: float
    Lambda_inf: float
    provenance: str  # "analytic" or "sampled at R_max=..."

    @property
    def ratio_inf(self):
        return self.Lambda_inf / self.lambda_inf


class CoefficientField:
    """Base class: symmetric uniformly elliptic coefficient matrix."""

    family = "abstract"
    n = 2
    smooth = False  # True enables the 3-point element quadrature
    boundary_trace_ok = True  # restriction to circles is well defined
    seed = None

    lam = None
    Lam = None

    def eval(self, x):
        x = np.asarray(x, dtype=float)
        return self.eval_batch(x[None, :])[0]

    def eval_batch(self, pts):
        raise NotImplementedError

    def components_batch(self, pts):
        """(a11, a12, a22) arrays at the given points; n = 2 only."""
        m = self.eval_batch(pts)
        return m[:, 0, 0].copy(), m[:, 0, 1].copy(), m[:, 1, 1].copy()

    def exterior_bounds(self, r):
        """Exact ellipticity bounds on {|x| >= r}, or None if unknown."""
        return None

    def tail(self):
        eb = self.exterior_bounds(np.inf)
        if eb is not None:
            return TailInfo(eb[0], eb[1], "analytic")
        return None

    @property
    def label(self):
        return self.family

    def spec_dict(self):
        return {
            "family": self.family,
            "n": self.n,
            "lambda": self.lam,
            "Lambda": self.Lam,
            "params": self._params(),
            "tail": {"mode": "analytic" if self.tail() is not None else "sampled"},
            "seed": self.seed,
        }

    def _params(self):
        return {}


def _iso_batch(pts, alpha, n):
    out = np.zeros((len(pts), n, n))
    idx = np.arange(n)
    out[:, idx, idx] = alpha[:, None]
    return out


@dataclass(frozen=True)
class IdentityField(CoefficientField):
    n: int = 2

    family = "identity"
    smooth = True
    lam = 1.0
    Lam = 1.0

    def eval_batch(self, pts):
        return _iso_batch(np.asarray(pts, float), np.ones(len(pts)), self.n)

    def components_batch(self, pts):
        m = len(pts)
        return np.ones(m), np.zeros(m), np.ones(m)

    def exterior_bounds(self, r):
        return 1.0, 1.0


class ConstantField(CoefficientField):
    """Constant symmetric positive definite matrix."""

    family = "constant"
    smooth = True

    def __init__(self, matrix):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError("constant field needs a square matrix")
        if not np.allclose(matrix, matrix.T, rtol=0, atol=1e-14):
            raise ValueError("constant field matrix must be symmetric")
        eigs = np.linalg.eigvalsh(matrix)
        if eigs[0] <= 0:
            raise ValueError("constant field matrix must be positive definite")
        self.matrix = 0.5 * (matrix + matrix.T)
        self.n = matrix.shape[0]
        self.lam = float(eigs[0])
        self.Lam = float(eigs[-1])

    def eval_batch(self, pts):
        return np.broadcast_to(self.matrix, (len(pts), self.n, self.n)).copy()

    def components_batch(self, pts):
        m = len(pts)
        a = self.matrix
        return np.full(m, a[0, 0]), np.full(m, a[0, 1]), np.full(m, a[1, 1])

    def exterior_bounds(self, r):
        return self.lam, self.Lam

    @property
    def label(self):
        return f"constant({self.matrix.tolist()})"

    def _params(self):
        return {"matrix": self.matrix.tolist()}


class RadialPiecewiseField(CoefficientField):
    """alpha(|x|) * I with piecewise-constant alpha, closed on the outer side."""

    family = "radial-piecewise"
    smooth = False

    def __init__(self, breaks, values, n=2):
        breaks = np.asarray(breaks, dtype=float)
        values = np.asarray(values, dtype=float)
        if breaks.ndim != 1 or np.any(np.diff(breaks) <= 0) or np.any(breaks <= 0):
            raise ValueError("breaks must be strictly increasing and positive")
        if len(values) != len(breaks) + 1:
            raise ValueError("need one more value than breaks")
        if np.any(values <= 0):
            raise ValueError("values must be positive")
        self.breaks = breaks
        self.values = values
        self.n = n
        self.lam = float(values.min())
        self.Lam = float(values.max())

    def _alpha(self, rho):
        # searchsorted(side="right") puts rho == break on the outer piece
        return self.values[np.searchsorted(self.breaks, rho, side="right")]

    def eval_batch(self, pts):
        pts = np.asarray(pts, float)
        return _iso_batch(pts, self._alpha(np.linalg.norm(pts, axis=1)), self.n)

    def components_batch(self, pts):
        a = self._alpha(np.linalg.norm(np.asarray(pts, float), axis=1))
        return a.copy(), np.zeros(len(a)), a.copy()

    def exterior_bounds(self, r):
        if np.isinf(r):
            return float(self.values[-1]), float(self.values[-1])
        tail_vals = self.values[np.searchsorted(self.breaks, r, side="right"):]
        return float(tail_vals.min()), float(tail_vals.max())

    @property
    def label(self):
        return f"radial-piecewise(breaks={self.breaks.tolist()}, values={self.values.tolist()})"

    def _params(self):
        return {"breaks": self.breaks.tolist(), "values": self.values.tolist()}


class CheckerboardField(CoefficientField):
    """Two-phase periodic checkerboard alpha(x) * I."""

    family = "periodic-checkerboard"
    smooth = False
    boundary_trace_ok = False

    def __init__(self, period=1.0, low=1.0, high=2.0):
        if period <= 0 or low <= 0 or high < low:
            raise ValueError("need period > 0 and 0 < low <= high")
        self.period = float(period)
        self.low = float(low)
        self.high = float(high)
        self.n = 2
        self.lam = self.low
        self.Lam = self.high

    def _alpha(self, pts):
        cells = np.floor(pts / self.period).astype(np.int64)
        color = (cells[:, 0] + cells[:, 1]) & 1
        return np.where(color == 0, self.low, self.high)

    def eval_batch(self, pts):
        pts = np.asarray(pts, float)
        return _iso_batch(pts, self._alpha(pts), 2)

    def components_batch(self, pts):
        a = self._alpha(np.asarray(pts, float))
        return a.copy(), np.zeros(len(a)), a.copy()

    def exterior_bounds(self, r):
        # every exterior region contains both phases
        return self.low, self.high

    @property
    def label(self):
        return f"checkerboard(period={self.period}, low={self.low}, high={self.high})"

    def _params(self):
        return {"period": self.period, "low": self.low, "high": self.high}


class ConicDecayField(CoefficientField):
    """(base + amplitude * exp(-rate * |x|)) * I, decaying to a conic limit."""

    family = "conic-decay"
    smooth = True

    def __init__(self, base=1.0, amplitude=1.0, rate=1.0, n=2):
        if base <= 0 or amplitude < 0 or rate <= 0:
            raise ValueError("need base > 0, amplitude >= 0, rate > 0")
        self.base = float(base)
        self.amplitude = float(amplitude)
        self.rate = float(rate)
        self.n = n
        self.lam = self.base
        self.Lam = self.base + self.amplitude

    def _alpha(self, rho):
        return self.base + self.amplitude * np.exp(-self.rate * rho)

    def eval_batch(self, pts):
        pts = np.asarray(pts, float)
        return _iso_batch(pts, self._alpha(np.linalg.norm(pts, axis=1)), self.n)

    def components_batch(self, pts):
        a = self._alpha(np.linalg.norm(np.asarray(pts, float), axis=1))
        return a.copy(), np.zeros(len(a)), a.copy()

    def exterior_bounds(self, r):
        if np.isinf(r):
            return self.base, self.base
        return self.base, self.base + self.amplitude * float(np.exp(-self.rate * r))

    @property
    def label(self):
        return f"conic-decay(base={self.base}, amplitude={self.amplitude}, rate={self.rate})"

    def _params(self):
        return {"base": self.base, "amplitude": self.amplitude, "rate": self.rate}


class RandomCellField(CoefficientField):
    """Seeded piecewise-constant SPD matrices on a square cell grid.

    Plays the role of a merely measurable coefficient matrix: eigenvalues are
    drawn uniformly in [lam, Lam] with a uniform rotation per cell.  The field
    is frozen outside the gridded box by clamping the cell index.
    """

    family = "seeded-random-measurable"
    smooth = False
    boundary_trace_ok = False

    def __init__(self, lam=1.0, Lam=2.0, cell=0.5, extent=16.0, seed=0):
        if not 0 < lam <= Lam:
            raise ValueError("need 0 < lam <= Lam")
        if cell <= 0 or extent <= cell:
            raise ValueError("need 0 < cell < extent")
        self.lam = float(lam)
        self.Lam = float(Lam)
        self.cell = float(cell)
        self.extent = float(extent)
        self.seed = int(seed)
        self.n = 2
        k = int(np.ceil(2 * self.extent / self.cell))
        rng = np.random.default_rng(self.seed)
        e1 = rng.uniform(lam, Lam, size=(k, k))
        e2 = rng.uniform(lam, Lam, size=(k, k))
        theta = rng.uniform(0.0, np.pi, size=(k, k))
        c, s = np.cos(theta), np.sin(theta)
        self._a11 = c * c * e1 + s * s * e2
        self._a22 = s * s * e1 + c * c * e2
        self._a12 = c * s * (e1 - e2)
        self._k = k

    def _cells(self, pts):
        idx = np.floor((pts + self.extent) / self.cell).astype(np.int64)
        return np.clip(idx, 0, self._k - 1)

    def components_batch(self, pts):
        idx = self._cells(np.asarray(pts, float))
        i, j = idx[:, 0], idx[:, 1]
        return self._a11[i, j].copy(), self._a12[i, j].copy(), self._a22[i, j].copy()

    def eval_batch(self, pts):
        a11, a12, a22 = self.components_batch(pts)
        out = np.empty((len(a11), 2, 2))
        out[:, 0, 0] = a11
        out[:, 0, 1] = out[:, 1, 0] = a12
        out[:, 1, 1] = a22
        return out

    @property
    def label(self):
        return f"random-cells(seed={self.seed}, cell={self.cell})"

    def _params(self):
        return {"cell": self.cell, "extent": self.extent}


def _clip_sym2x2(a11, a12, a22, lo, hi):
    """Project symmetric 2x2 matrices onto {lo*I <= A <= hi*I} eigenvalue-wise."""
    mean = 0.5 * (a11 + a22)
    half = 0.5 * (a11 - a22)
    dev = np.hypot(half, a12)
    e_hi = np.clip(mean + dev, lo, hi)
    e_lo = np.clip(mean - dev, lo, hi)
    phi = 0.5 * np.arctan2(2.0 * a12, a11 - a22)
    c, s = np.cos(phi), np.sin(phi)
    b11 = c * c * e_hi + s * s * e_lo
    b22 = s * s * e_hi + c * c * e_lo
    b12 = c * s * (e_hi - e_lo)
    return b11, b12, b22


def _smooth_step(u):
    """C-infinity monotone step: 0 for u <= 0, 1 for u >= 1."""
    u = np.clip(u, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(u > 0.0, np.exp(-1.0 / np.maximum(u, 1e-300)), 0.0)
        b = np.where(u < 1.0, np.exp(-1.0 / np.maximum(1.0 - u, 1e-300)), 0.0)
    return a / (a + b)


def _edge_blend(coords, spacing, width):
    """Per-axis cell blend: (left cell, right cell, right weight).

    Points further than ``width`` from the nearest cell edge keep their own
    cell with weight 0 or 1; inside the transition band the weight ramps
    smoothly between the two adjacent cells.
    """
    m = np.round(coords / spacing)
    d = coords - m * spacing
    tau = _smooth_step((d + width) / (2.0 * width))
    tau = np.where(d <= -width, 0.0, np.where(d >= width, 1.0, tau))
    left = (m - 1).astype(np.int64)
    right = m.astype(np.int64)
    # outside the band the blend collapses onto the containing cell
    own = np.floor(coords / spacing).astype(np.int64)
    left = np.where(np.abs(d) >= width, own, left)
    right = np.where(np.abs(d) >= width, own, right)
    return left, right, tau


def _chord_length_sum(spacing, r):
    """Total length inside B(r) of the grid lines u = k * spacing (one axis)."""
    ks = np.arange(-int(np.floor(r / spacing)), int(np.floor(r / spacing)) + 1)
    inside = np.abs(ks * spacing) < r
    return float(np.sum(2.0 * np.sqrt(np.maximum(r**2 - (ks[inside] * spacing) ** 2, 0.0))))


class MollifiedField(CoefficientField):
    """Smooth field agreeing with a base field off a thin exceptional set.

    Concrete subclasses replace the base's jump sets by C-infinity blends of
    the adjacent values inside tubes of half-width ``kernel_width``; convexity
    of the blend keeps all ellipticity bounds, and a final eigenvalue clip
    enforces them exactly against rounding.
    """

    family = "mollified"
    smooth = True
    boundary_trace_ok = True

    def __init__(self, base, epsilon, radius, inner_radius, kernel_width,
                 exceptional_set_measure):
        self.base = base
        self.epsilon = float(epsilon)
        self.radius = float(radius)
        self.inner_radius = float(inner_radius)
        self.kernel_width = float(kernel_width)
        self.n = 2
        self.lam = base.lam
        self.Lam = base.Lam
        eb = base.exterior_bounds(inner_radius)
        self.annulus_bounds = eb if eb is not None else (base.lam, base.Lam)
        self.exceptional_set_measure = float(exceptional_set_measure)
        self.seed = base.seed

    def _raw_components(self, pts):
        raise NotImplementedError

    def components_batch(self, pts):
        pts = np.asarray(pts, float)
        a11, a12, a22 = self._raw_components(pts)
        rho = np.linalg.norm(pts, axis=1)
        outside = rho >= self.inner_radius
        lo = np.where(outside, self.annulus_bounds[0], self.lam)
        hi = np.where(outside, self.annulus_bounds[1], self.Lam)
        return _clip_sym2x2(a11, a12, a22, lo, hi)

    def eval_batch(self, pts):
        a11, a12, a22 = self.components_batch(pts)
        out = np.empty((len(a11), 2, 2))
        out[:, 0, 0] = a11
        out[:, 0, 1] = out[:, 1, 0] = a12
        out[:, 1, 1] = a22
        return out

    def exterior_bounds(self, r):
        if r >= self.inner_radius:
            return self.annulus_bounds
        return self.lam, self.Lam

    @property
    def label(self):
        return f"mollified({self.base.label}, eps={self.epsilon})"

    def _params(self):
        return {
            "base": self.base.spec_dict(),
            "epsilon": self.epsilon,
            "radius": self.radius,
            "inner_radius": self.inner_radius,
        }


class _SmoothPassthrough(MollifiedField):
    """Smoothing a smooth field changes nothing: the exceptional set is empty."""

    def _raw_components(self, pts):
        return self.base.components_batch(pts)


class _SmoothedCheckerboard(MollifiedField):
    """Checkerboard with the sign pattern replaced by a smooth square wave."""

    def _raw_components(self, pts):
        base = self.base
        w = self.kernel_width
        sx = self._square_wave(pts[:, 0], base.period, w)
        sy = self._square_wave(pts[:, 1], base.period, w)
        mean = 0.5 * (base.low + base.high)
        dev = 0.5 * (base.high - base.low)
        alpha = mean - dev * sx * sy
        return alpha, np.zeros_like(alpha), alpha.copy()

    @staticmethod
    def _square_wave(u, period, width):
        # +1 on even cells, -1 on odd ones, smooth ramps at the cell lines
        m = np.round(u / period)
        d = u - m * period
        sign_left = np.where((m.astype(np.int64) - 1) % 2 == 0, 1.0, -1.0)
        sign_right = -sign_left
        tau = _smooth_step((d + width) / (2.0 * width))
        blended = sign_left + (sign_right - sign_left) * tau
        own = np.where(np.floor(u / period).astype(np.int64) % 2 == 0, 1.0, -1.0)
        return np.where(np.abs(d) >= width, own, blended)


class _SmoothedCells(MollifiedField):
    """Random cell field blended by a tensor partition of unity at cell lines."""

    def _raw_components(self, pts):
        base = self.base
        w = self.kernel_width
        coords = pts + base.extent
        il, ir, tx = _edge_blend(coords[:, 0], base.cell, w)
        jl, jr, ty = _edge_blend(coords[:, 1], base.cell, w)
        k = base._k
        il, ir = np.clip(il, 0, k - 1), np.clip(ir, 0, k - 1)
        jl, jr = np.clip(jl, 0, k - 1), np.clip(jr, 0, k - 1)
        out = []
        for grid in (base._a11, base._a12, base._a22):
            val = (
                (1 - tx) * (1 - ty) * grid[il, jl]
                + (1 - tx) * ty * grid[il, jr]
                + tx * (1 - ty) * grid[ir, jl]
                + tx * ty * grid[ir, jr]
            )
            out.append(val)
        return tuple(out)


class _SmoothedRadial(MollifiedField):
    """Radial piecewise field with smooth ramps across the break circles."""

    def _raw_components(self, pts):
        base = self.base
        w = self.kernel_width
        rho = np.linalg.norm(pts, axis=1)
        seg = np.searchsorted(base.breaks, rho, side="right")
        alpha = base.values[seg].astype(float)
        for i, b in enumerate(base.breaks):
            d = rho - b
            band = np.abs(d) < w
            if np.any(band):
                tau = _smooth_step((d[band] + w) / (2.0 * w))
                alpha[band] = base.values[i] + (base.values[i + 1] - base.values[i]) * tau
        return alpha, np.zeros_like(alpha), alpha.copy()


class _GridMollified(MollifiedField):
    """Generic fallback: grid sampling plus bump convolution plus clipping."""

    def __init__(self, base, epsilon, radius, inner_radius, kernel_width,
                 exceptional_set_measure, grid, components):
        super().__init__(base, epsilon, radius, inner_radius, kernel_width,
                         exceptional_set_measure)
        self._grid = grid
        self._interp = [
            RegularGridInterpolator(grid, comp, method="linear",
                                    bounds_error=False, fill_value=None)
            for comp in components
        ]

    def _raw_components(self, pts):
        xs, ys = self._grid
        q = np.column_stack([
            np.clip(pts[:, 0], xs[0], xs[-1]),
            np.clip(pts[:, 1], ys[0], ys[-1]),
        ])
        return self._interp[0](q), self._interp[1](q), self._interp[2](q)


def _grid_mollify(field, epsilon, r, r0, max_grid):
    width = r / 8.0
    last_measure = np.inf
    for _ in range(16):
        spacing = width / 3.0
        half = r + width + 2 * spacing
        npts = int(np.ceil(2 * half / spacing)) + 1
        if npts > max_grid:
            raise MollifyError(
                f"measure budget {epsilon} needs grid spacing <= {spacing:.3e} "
                f"({npts} points/axis > cap {max_grid}); raise max_grid"
            )
        xs = np.linspace(-half, half, npts)
        gx, gy = np.meshgrid(xs, xs, indexing="ij")
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        comps = field.components_batch(pts)
        shape = (npts, npts)

        k = max(1, int(np.ceil(width / spacing)))
        offs = np.arange(-k, k + 1) * spacing
        kx, ky = np.meshgrid(offs, offs, indexing="ij")
        rr2 = (kx**2 + ky**2) / width**2
        kernel = np.where(rr2 < 1.0, np.exp(-1.0 / np.maximum(1.0 - rr2, 1e-300)), 0.0)
        kernel /= kernel.sum()

        smoothed = []
        for comp in comps:
            arr = comp.reshape(shape)
            sm = fftconvolve(np.pad(arr, k, mode="edge"), kernel, mode="same")[k:-k, k:-k]
            smoothed.append(sm)

        rho = np.hypot(gx, gy).ravel()
        inside = rho < r
        diff = np.max(
            np.abs(np.stack([sm.ravel() - comp for sm, comp in zip(smoothed, comps)])),
            axis=0,
        )
        measure = float(np.count_nonzero(inside & (diff >= epsilon)) * spacing**2)
        last_measure = min(last_measure, measure)
        if measure <= epsilon:
            return _GridMollified(field, epsilon, r, r0, width, measure,
                                  (xs, xs.copy()), smoothed)
        width *= 0.5
    raise MollifyError(
        f"exceptional measure stalled at {last_measure:.3e} > budget {epsilon}"
    )


def mollify(field, epsilon, r, r0, max_grid=2048):
    """Smooth nearby field: same ellipticity bounds everywhere, the base's
    exterior bounds outside r0, and agreement with the base up to epsilon
    outside an exceptional subset of B(r) of measure at most epsilon.

    Families with known jump sets are smoothed in closed form by blending the
    adjacent values inside tubes around the jumps, with the tube half-width
    solved from the measure budget.  Unknown rough families fall back to grid
    sampling and bump convolution, which fails with a refinement hint when
    the budget needs a finer grid than ``max_grid`` points per axis.
    """
    if not (epsilon > 0 and 0 < r0 < r):
        raise ValueError("need epsilon > 0 and 0 < r0 < r")

    if getattr(field, "smooth", False):
        return _SmoothPassthrough(field, epsilon, r, r0, 0.0, 0.0)

    if isinstance(field, CheckerboardField):
        lines = 2.0 * _chord_length_sum(field.period, r)
        width = min(field.period / 4.0, epsilon / (2.0 * max(lines, 1e-300)))
        return _SmoothedCheckerboard(field, epsilon, r, r0, width,
                                     min(2.0 * width * lines, epsilon))

    if isinstance(field, RandomCellField):
        lines = 2.0 * _chord_length_sum(field.cell, r)
        width = min(field.cell / 4.0, epsilon / (2.0 * max(lines, 1e-300)))
        return _SmoothedCells(field, epsilon, r, r0, width,
                              min(2.0 * width * lines, epsilon))

    if isinstance(field, RadialPiecewiseField):
        active = [b for b in field.breaks if b < r]
        circumference = sum(2.0 * np.pi * b for b in active)
        gaps = np.diff(np.concatenate([[0.0], field.breaks, [r]]))
        width = min(float(gaps.min()) / 4.0,
                    epsilon / (2.0 * max(circumference, 1e-300)))
        return _SmoothedRadial(field, epsilon, r, r0, width,
                               min(2.0 * width * circumference, epsilon))

    return _grid_mollify(field, epsilon, r, r0, max_grid)


@dataclass
class EllipticityProfile:
    """Exterior ellipticity bounds on a radius grid plus their limits."""

    radii: np.ndarray
    lambda_r: np.ndarray
    Lambda_r: np.ndarray
    lambda_inf: float
    Lambda_inf: float
    provenance: str
    r_max: float
    seed: int = 0
    field_label: str = ""

    @property
    def ratio_inf(self):
        return self.Lambda_inf / self.lambda_inf

    def rows(self):
        return [
            (float(r), float(lo), float(hi))
            for r, lo, hi in zip(self.radii, self.lambda_r, self.Lambda_r)
        ]


def _sample_eig_range(field, rng, r_lo, r_hi, budget):
    """Min/max eigenvalue of the field over area-uniform samples of an annulus."""
    u = rng.random(budget)
    rho = np.sqrt(r_lo**2 + u * (r_hi**2 - r_lo**2))
    theta = rng.random(budget) * 2 * np.pi
    pts = np.column_stack([rho * np.cos(theta), rho * np.sin(theta)])
    if field.n == 2:
        a11, a12, a22 = field.components_batch(pts)
        mean = 0.5 * (a11 + a22)
        dev = np.hypot(0.5 * (a11 - a22), a12)
        return float(np.min(mean - dev)), float(np.max(mean + dev))
    eigs = np.linalg.eigvalsh(field.eval_batch(pts))
    return float(eigs[:, 0].min()), float(eigs[:, -1].max())


def ellipticity_profile(field, radii, sampling_budget=2000, r_max=None, seed=0):
    """Exterior bounds lambda_r <= a <= Lambda_r on {|x| >= r} per grid radius.

    Uses the family's closed-form tail when available (provenance "analytic");
    otherwise draws seeded samples in the annuli up to a cutoff R_max and
    reports suffix extrema with a "sampled" provenance label.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.size == 0:
        raise ValueError("radii grid must be nonempty")
    if np.any(np.diff(radii) <= 0) or radii[0] <= 0:
        raise ValueError("radii must be positive and increasing")
    if sampling_budget < 1000:
        raise ValueError("sampling budget must be >= 1000 points per annulus")

    exact = [field.exterior_bounds(r) for r in radii]
    if all(b is not None for b in exact) and field.tail() is not None:
        tail = field.tail()
        return EllipticityProfile(
            radii=radii,
            lambda_r=np.array([b[0] for b in exact]),
            Lambda_r=np.array([b[1] for b in exact]),
            lambda_inf=tail.lambda_inf,
            Lambda_inf=tail.Lambda_inf,
            provenance="analytic",
            r_max=float("inf"),
            seed=seed,
            field_label=field.label,
        )

    r_max = float(r_max) if r_max is not None else 2.0 * float(radii[-1])
    rng = np.random.default_rng(seed)
    edges = np.append(radii, r_max)
    lo = np.empty(len(radii))
    hi = np.empty(len(radii))
    for i in range(len(radii)):
        lo[i], hi[i] = _sample_eig_range(field, rng, edges[i], edges[i + 1], sampling_budget)
    # suffix extrema make the profile monotone by construction
    lam_r = np.minimum.accumulate(lo[::-1])[::-1]
    Lam_r = np.maximum.accumulate(hi[::-1])[::-1]
    return EllipticityProfile(
        radii=radii,
        lambda_r=lam_r,
        Lambda_r=Lam_r,
        lambda_inf=float(lo[-1]),
        Lambda_inf=float(hi[-1]),
        provenance=f"sampled at R_max={r_max:g}",
        r_max=r_max,
        seed=seed,
        field_label=field.label,
    )


# ---------------------------------------------------------------------------
# field-specification documents (JSON: family, n, lambda, Lambda, params, tail, seed)

def field_from_spec(spec):
    """Build a field from a specification mapping; raises FieldSpecError."""
    if not isinstance(spec, dict):
        raise FieldSpecError("<root>", "document must be a JSON object")
    family = spec.get("family")
    if family is None:
        raise FieldSpecError("family", "missing")
    params = spec.get("params", {})
    if not isinstance(params, dict):
        raise FieldSpecError("params", "must be an object")
    n = spec.get("n", 2)
    if not isinstance(n, int) or n < 2:
        raise FieldSpecError("n", f"must be an integer >= 2, got {n!r}")
    seed = spec.get("seed", 0)

    try:
        if family == "identity":
            field = IdentityField(n=n)
        elif family == "constant":
            if "matrix" in params:
                field = ConstantField(params["matrix"])
            elif "diag" in params:
                field = ConstantField(np.diag(np.asarray(params["diag"], dtype=float)))
            elif "scale" in params:
                field = ConstantField(float(params["scale"]) * np.eye(n))
            else:
                raise FieldSpecError("params", "constant family needs matrix, diag, or scale")
        elif family == "radial-piecewise":
            field = RadialPiecewiseField(params["breaks"], params["values"], n=n)
        elif family == "periodic-checkerboard":
            field = CheckerboardField(
                period=params.get("period", 1.0),
                low=params.get("low", 1.0),
                high=params.get("high", 2.0),
            )
        elif family == "conic-decay":
            field = ConicDecayField(
                base=params.get("base", 1.0),
                amplitude=params.get("amplitude", 1.0),
                rate=params.get("rate", 1.0),
                n=n,
            )
        elif family == "seeded-random-measurable":
            if "lambda" not in spec or "Lambda" not in spec:
                raise FieldSpecError("lambda", "random family requires lambda and Lambda")
            field = RandomCellField(
                lam=float(spec["lambda"]),
                Lam=float(spec["Lambda"]),
                cell=params.get("cell", 0.5),
                extent=params.get("extent", 16.0),
                seed=seed,
            )
        else:
            raise FieldSpecError("family", f"unknown family {family!r}")
    except FieldSpecError:
        raise
    except KeyError as exc:
        raise FieldSpecError(f"params.{exc.args[0]}", "missing") from exc
    except (TypeError, ValueError) as exc:
        raise FieldSpecError("params", str(exc)) from exc

    for key, declared in (("lambda", spec.get("lambda")), ("Lambda", spec.get("Lambda"))):
        if declared is None or family == "seeded-random-measurable":
            continue
        declared = float(declared)
        if key == "lambda" and declared > field.lam + 1e-12:
            raise FieldSpecError("lambda", f"declared {declared} exceeds the family bound {field.lam}")
        if key == "Lambda" and declared < field.Lam - 1e-12:
            raise FieldSpecError("Lambda", f"declared {declared} is below the family bound {field.Lam}")
    return field


def load_field(path):
    """Read a field-specification JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            spec = json.load(fh)
    except OSError as exc:
        raise FieldSpecError("<file>", str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise FieldSpecError("<file>", f"invalid JSON: {exc}") from exc
    return field_from_spec(spec)
