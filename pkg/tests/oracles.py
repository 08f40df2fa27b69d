"""Independent oracles used by the test suite.

Each oracle computes expected values by a route that shares nothing with the
library code paths it checks: exact rational linear algebra for polynomial
kernels, staged grid search for maximization, Fourier series for circle
spectra, and a hand-solved interface problem for the two-phase disk.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np


def laplacian_kernel_dim(n, d):
    """Count homogeneous harmonic polynomials of exact degree d on R^n by
    exact rational elimination of the Laplacian's monomial matrix."""
    if d == 0:
        return 1
    if d == 1:
        return n
    monos_d = _monomials(n, d)
    monos_d2 = {m: i for i, m in enumerate(_monomials(n, d - 2))}
    # rows: one per degree-d monomial, columns indexed by degree-(d-2) monomials
    rows = []
    for mono in monos_d:
        row = {}
        for i, e in enumerate(mono):
            if e >= 2:
                lower = list(mono)
                lower[i] -= 2
                col = monos_d2[tuple(lower)]
                row[col] = row.get(col, Fraction(0)) + Fraction(e * (e - 1))
        rows.append(row)
    # kernel of the transpose map has dimension #monos_d - rank
    return len(monos_d) - _rational_rank(rows)


def cumulative_kernel_dim(n, d):
    """Harmonic polynomials of degree <= d, by summing exact-degree counts."""
    return sum(laplacian_kernel_dim(n, q) for q in range(d + 1))


def _monomials(n, d):
    """All exponent tuples of total degree d in n variables, sorted."""
    out = []
    for bars in itertools.combinations(range(d + n - 1), n - 1):
        exps = []
        prev = -1
        for b in bars:
            exps.append(b - prev - 1)
            prev = b
        exps.append(d + n - 2 - prev)
        out.append(tuple(exps))
    return sorted(out)


def _rational_rank(rows):
    """Rank over Q of a sparse matrix given as dicts col -> Fraction."""
    pivots = {}
    rank = 0
    for row in rows:
        row = {c: v for c, v in row.items() if v != 0}
        while row:
            col = min(row)
            if col in pivots:
                factor = row.pop(col)
                for c, v in pivots[col].items():
                    if c == col:
                        continue
                    acc = row.get(c, Fraction(0)) - factor * v
                    if acc:
                        row[c] = acc
                    else:
                        row.pop(c, None)
            else:
                inv = 1 / row[col]
                pivots[col] = {c: v * inv for c, v in row.items()}
                rank += 1
                break
    return rank


def circle_spectrum(t, m):
    """First m eigenvalues of the circle of radius t: 0 then k^2/t^2 twice."""
    vals = [0.0]
    k = 1
    while len(vals) < m:
        vals.extend([(k / t) ** 2] * 2)
        k += 1
    return np.array(vals[:m])


def sphere_spectrum_listed(n, kmax):
    """First kmax sphere eigenvalues built from degrees and multiplicities."""
    from ellipdim.counting import homogeneous_harmonic_dim

    vals = []
    q = 0
    while len(vals) < kmax:
        vals.extend([q * q + (n - 2) * q] * homogeneous_harmonic_dim(n, q))
        q += 1
    return vals[:kmax]


def grid_search_max(func, upper_hint=1.0, stages=4, points=2001):
    """Staged 1-D grid search for the maximum of func over [0, inf).

    Expands the bracket until func turns negative, then refines the grid
    around the best point. Returns (argmax, max_value).
    """
    hi = float(upper_hint)
    while func(hi) > 0:
        hi *= 2.0
    lo = 0.0
    best_x, best_v = 0.0, func(0.0)
    for _ in range(stages):
        xs = np.linspace(lo, hi, points)
        vals = np.array([func(x) for x in xs])
        i = int(np.argmax(vals))
        if vals[i] > best_v:
            best_x, best_v = float(xs[i]), float(vals[i])
        step = xs[1] - xs[0]
        lo = max(0.0, best_x - 2 * step)
        hi = best_x + 2 * step
    return best_x, best_v


def transmission_solution(x, y, alpha_in=1.0, alpha_out=2.0, interface=0.5):
    """Exact solution of div(alpha grad v) = 0 on the unit disk with trace x,
    alpha piecewise constant across a circular interface.

    Separation of variables with matched value and flux at the interface
    gives v = A r cos(theta) inside and (B r + C/r) cos(theta) outside.
    """
    s = interface
    k = alpha_out / alpha_in
    # continuity: A = B + C/s^2 ; flux: A = k (B - C/s^2) ; trace: B + C = 1
    denom = (1 + k) + (k - 1) * s * s
    b = (1 + k) / denom
    c = (k - 1) * s * s / denom
    a = b + c / (s * s)
    r = math.hypot(x, y)
    ct = x / r if r > 0 else 1.0
    if r < s:
        return a * r * ct
    return (b * r + c / r) * ct


def sqrt_lower(value):
    """Largest float f with f*f <= value, as an exact Fraction."""
    s = math.sqrt(value)
    f = Fraction(s)
    while f * f > value:
        s = math.nextafter(s, 0.0)
        f = Fraction(s)
    return f


def root_upper(value, p):
    """Rational upper bound u with u^p >= value (value a Fraction, p int)."""
    s = float(value) ** (1.0 / p)
    u = Fraction(s)
    while u**p < value:
        s = math.nextafter(s, math.inf)
        u = Fraction(s)
    return u
