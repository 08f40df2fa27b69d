"""Exact combinatorics of harmonic-polynomial dimensions and the growth-bound envelopes.

Everything here is pure arithmetic: integer results are exact, real-valued
bounds are IEEE doubles with a 12-significant-digit contract.  These
functions serve as oracles for every numerical module, so they must stay
dependency-free and deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "DimFormulaResult",
    "GrowthPartition",
    "BoundEnvelope",
    "cumulative_harmonic_dim",
    "homogeneous_harmonic_dim",
    "eigen_index_to_degree",
    "sphere_eigenvalue",
    "eigen_rootsum_lower_bound",
    "rhs_2_12",
    "maximize_rhs_2_12",
    "det_growth_budget",
    "weighted_dim_sum",
    "weighted_dim_sum_bound",
    "dim_sum_bound",
    "liminf_bound",
    "unit_partition",
]


def _check_dim(n):
    if not isinstance(n, int) or n < 2:
        raise ValueError(f"ambient dimension must be an integer >= 2, got {n!r}")


def _check_ratio(ratio):
    if not ratio >= 1.0:
        raise ValueError(f"ellipticity ratio must be >= 1, got {ratio!r}")


@dataclass(frozen=True)
class DimFormulaResult:
    """One evaluated dimension formula: (n, d) -> exact integer value."""

    n: int
    d: int
    value: int


@dataclass(frozen=True)
class GrowthPartition:
    """Strictly increasing degree sequence 0 = a_0 < a_1 < ... < a_j = d
    with nonnegative block dimensions k_i per gap."""

    degrees: tuple
    block_dims: tuple

    def __post_init__(self):
        degs = tuple(float(a) for a in self.degrees)
        dims = tuple(int(k) for k in self.block_dims)
        if len(degs) < 2:
            raise ValueError("partition needs at least one block (j >= 1)")
        if degs[0] != 0.0:
            raise ValueError("partition must start at degree 0")
        if any(b <= a for a, b in zip(degs, degs[1:])):
            raise ValueError("partition degrees must be strictly increasing")
        if len(dims) != len(degs) - 1:
            raise ValueError("need one block dimension per degree gap")
        if any(k < 0 for k in dims):
            raise ValueError("block dimensions must be nonnegative")
        object.__setattr__(self, "degrees", degs)
        object.__setattr__(self, "block_dims", dims)

    @property
    def top_degree(self):
        return self.degrees[-1]

    @property
    def blocks(self):
        return len(self.degrees) - 1


@dataclass(frozen=True)
class BoundEnvelope:
    """A dimension-sum envelope evaluated at (n, d, ratio)."""

    n: int
    d: float
    ratio: float
    value: float


def cumulative_harmonic_dim(n: int, d: int) -> int:
    """Dimension of the space of harmonic polynomials on R^n of degree <= d.

    Equals C(n+d-1, d) + C(n+d-2, d-1), the second binomial read as 0 for
    d = 0.  Exact integer arithmetic.
    """
    _check_dim(n)
    if not isinstance(d, int) or d < 0:
        raise ValueError(f"degree must be a nonnegative integer, got {d!r}")
    value = math.comb(n + d - 1, d)
    if d >= 1:
        value += math.comb(n + d - 2, d - 1)
    return value


def homogeneous_harmonic_dim(n: int, d: int) -> int:
    """Number of linearly independent homogeneous harmonic polynomials of
    exact degree d on R^n."""
    if d == 0:
        return 1
    return cumulative_harmonic_dim(n, d) - cumulative_harmonic_dim(n, d - 1)


def eigen_index_to_degree(n: int, k: int) -> int:
    """Polynomial degree q attached to the k-th sphere eigenvalue (1-based k).

    Returns the least q >= 0 with k <= cumulative_harmonic_dim(n, q).  The
    count starts at q = 0 so that k = 1 maps to the constant eigenfunction.
    """
    _check_dim(n)
    if not isinstance(k, int) or k < 1:
        raise ValueError(f"eigenvalue index must be a positive integer, got {k!r}")
    q = 0
    while cumulative_harmonic_dim(n, q) < k:
        q += 1
    return q


def sphere_eigenvalue(n: int, k: int) -> int:
    """k-th Laplace eigenvalue of the unit (n-1)-sphere, with multiplicity.

    Returns q^2 + (n-2) q for q = eigen_index_to_degree(n, k); exact integer.
    """
    q = eigen_index_to_degree(n, k)
    return q * q + (n - 2) * q


def eigen_rootsum_lower_bound(n: int, k: int) -> float:
    """Closed-form lower bound for the sum of the first k square-rooted
    sphere eigenvalues.  May be negative for small k."""
    _check_dim(n)
    if k < 1:
        raise ValueError(f"index must be >= 1, got {k!r}")
    c = (math.factorial(n - 1) / 2.0) ** (1.0 / (n - 1))
    return c * ((n - 1) / n) * float(k) ** (n / (n - 1)) - (n - 1) * float(k)


def rhs_2_12(n: int, d: float, ratio: float, hprime: float) -> float:
    """Penalized linear objective in the reduced dimension variable h'.

    Value is (d + 3n/2 - 2) h' - (1/ratio) * c_n * h'^(n/(n-1)) with
    c_n = ((n-1)!/2)^(1/(n-1)) * (n-1)/n.  Its supremum over h' >= 0 yields
    the weighted dimension-sum envelope; see maximize_rhs_2_12.
    """
    _check_dim(n)
    _check_ratio(ratio)
    if hprime < 0:
        raise ValueError(f"hprime must be nonnegative, got {hprime!r}")
    c = (math.factorial(n - 1) / 2.0) ** (1.0 / (n - 1)) * (n - 1) / n
    return (d + 1.5 * n - 2.0) * hprime - (1.0 / ratio) * c * hprime ** (n / (n - 1))


def maximize_rhs_2_12(n: int, d: float, ratio: float) -> tuple:
    """Closed-form maximizer and maximum of rhs_2_12 over h' >= 0.

    Returns (h_opt, max_value) with
        h_opt     = ratio^(n-1) * (2/(n-1)!) * (d + 3n/2 - 2)^(n-1)
        max_value = ratio^(n-1) * (2/n!)     * (d + 3n/2 - 2)^n
    """
    _check_dim(n)
    _check_ratio(ratio)
    if d < 0:
        raise ValueError(f"degree must be nonnegative, got {d!r}")
    base = d + 1.5 * n - 2.0
    h_opt = ratio ** (n - 1) * (2.0 / math.factorial(n - 1)) * base ** (n - 1)
    max_value = ratio ** (n - 1) * (2.0 / math.factorial(n)) * base**n
    return h_opt, max_value


def det_growth_budget(n: int, partition: GrowthPartition) -> float:
    """Admissible log-determinant growth exponent for a degree partition:
    sum over blocks of (2 (a_i - 1) + n) k_i."""
    _check_dim(n)
    return sum(
        (2.0 * (a - 1.0) + n) * k
        for a, k in zip(partition.degrees[1:], partition.block_dims)
    )


def weighted_dim_sum(partition: GrowthPartition, dims_at) -> float:
    """Left-hand side sum(a_i - a_{i-1}) * h_{a_{i-1}} for a partition.

    ``dims_at`` maps a degree to the dimension h at that degree (callable or
    mapping)."""
    get = dims_at if callable(dims_at) else dims_at.__getitem__
    degs = partition.degrees
    return sum((degs[i] - degs[i - 1]) * get(degs[i - 1]) for i in range(1, len(degs)))


def weighted_dim_sum_bound(n: int, partition: GrowthPartition, ratio: float) -> float:
    """Envelope for the partition-weighted dimension sum:
    ratio^(n-1) * (2/n!) * (d + 2n - 1)^n with d the partition top degree."""
    _check_dim(n)
    _check_ratio(ratio)
    d = partition.top_degree
    return ratio ** (n - 1) * (2.0 / math.factorial(n)) * (d + 2.0 * n - 1.0) ** n


def dim_sum_bound(n: int, d: int, ratio: float) -> float:
    """Envelope for the plain dimension sum over integer degrees 1..d:
    ratio^(n-1) * (2/n!) * (d + 2n)^n."""
    _check_dim(n)
    _check_ratio(ratio)
    if not d >= 1:
        raise ValueError(f"degree must be a positive integer, got {d!r}")
    return ratio ** (n - 1) * (2.0 / math.factorial(n)) * (d + 2.0 * n) ** n


def liminf_bound(n: int, ratio: float) -> float:
    """Asymptotic per-degree envelope ratio^(n-1) * 2 / (n-1)!."""
    _check_dim(n)
    _check_ratio(ratio)
    return ratio ** (n - 1) * 2.0 / math.factorial(n - 1)


def unit_partition(d: int, block_dims=None) -> GrowthPartition:
    """Integer partition a_i = i for i = 0..d; default block dims are zero."""
    if not isinstance(d, int) or d < 1:
        raise ValueError(f"top degree must be a positive integer, got {d!r}")
    if block_dims is None:
        block_dims = (0,) * d
    return GrowthPartition(tuple(range(d + 1)), tuple(block_dims))
