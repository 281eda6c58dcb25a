"""Floating-point infrastructure and reference oracles.

Everything here is double precision and pure: compensated accumulation,
a Riemann zeta oracle on Re(s) > 0 built from the alternating (Dirichlet
eta) series with Euler-transform acceleration, a Lanczos Gamma, the
trapezoid mean for periodic integrands, and the two-sided power-weighted
exponential lattice sum theta_ab.  The rest of the package treats these
as the ground truth it is checked against.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "CompensatedAccumulator",
    "ToleranceConfig",
    "comp_add",
    "zeta_ref",
    "gamma_ref",
    "periodic_trapezoid_integral",
    "theta_ab",
    "euler_m_partial_sum",
    "euler_m_tail_bound",
    "bernoulli_number",
]


# ---------------------------------------------------------------------------
# Compensated accumulation
# ---------------------------------------------------------------------------

@dataclass
class CompensatedAccumulator:
    """Neumaier-style compensated running sum.

    ``value`` (= sum + compensation) never drifts more than one unit in
    the last place from exact accumulation of the same terms in the same
    order, even through heavy cancellation.  ``count`` tracks the number
    of ``add`` calls.
    """

    sum: float = 0.0
    compensation: float = 0.0
    count: int = 0

    def add(self, term: float) -> None:
        if not math.isfinite(term):
            raise ValueError(f"non-finite term rejected: {term!r}")
        t = self.sum + term
        if abs(self.sum) >= abs(term):
            self.compensation += (self.sum - t) + term
        else:
            self.compensation += (term - t) + self.sum
        self.sum = t
        self.count += 1

    def extend(self, terms) -> None:
        for term in terms:
            self.add(term)

    @property
    def value(self) -> float:
        return self.sum + self.compensation


def comp_add(acc: CompensatedAccumulator, term: float) -> CompensatedAccumulator:
    """Functional form of compensated addition: returns a new accumulator."""
    out = CompensatedAccumulator(acc.sum, acc.compensation, acc.count)
    out.add(term)
    return out


@dataclass(frozen=True)
class ToleranceConfig:
    """Absolute/relative truncation targets plus a hard term budget."""

    abs_tol: float = 1e-14
    rel_tol: float = 0.0
    max_terms: int = 10_000_000

    def __post_init__(self) -> None:
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be > 0")
        if self.rel_tol < 0:
            raise ValueError("rel_tol must be >= 0")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")

    def threshold(self, scale: float) -> float:
        return self.abs_tol + self.rel_tol * abs(scale)


# ---------------------------------------------------------------------------
# Riemann zeta on Re(s) > 0  (alternating series + Euler transform)
# ---------------------------------------------------------------------------

def zeta_ref(s: complex, tol: ToleranceConfig | None = None) -> complex:
    """zeta(s) for Re(s) > 0, s != 1, via the eta series.

    eta(s) = sum (-1)^(n-1) n^(-s) converges for Re(s) > 0; a direct head
    plus the Euler transform of the remaining alternating tail gives full
    double precision with ~60 terms.  zeta = eta / (1 - 2^(1-s)), so the
    zeros of that denominator (s = 1 - 2 pi i k / ln 2) are excluded.
    """
    tol = tol or ToleranceConfig(abs_tol=1e-16, max_terms=4096)
    s = complex(s)
    if s.real <= 0:
        raise ValueError(f"zeta_ref requires Re(s) > 0, got {s}")
    denom = 1.0 - cmath.exp((1.0 - s) * math.log(2.0))
    if abs(denom) < 1e-12 or s == 1:
        raise ValueError(f"s={s} is on the excluded set of the eta relation")

    n_head = 24
    head = CompensatedAccumulator()
    head_im = CompensatedAccumulator()
    for n in range(1, n_head + 1):
        term = (-1) ** (n - 1) * cmath.exp(-s * math.log(n))
        head.add(term.real)
        head_im.add(term.imag)

    # Euler transform of the tail starting at n_head+1: the k-th forward
    # difference of b_j = (n_head+1+j)^(-s), divided by 2^(k+1).
    k_max = min(64, tol.max_terms)
    b = [cmath.exp(-s * math.log(n_head + 1 + j)) for j in range(k_max)]
    sign = (-1) ** n_head
    tail = 0j
    converged = False
    for k in range(k_max):
        term = sign * b[0] / 2 ** (k + 1)
        tail += term
        if abs(term) < tol.threshold(abs(tail) + abs(head.value)):
            converged = True
            break
        b = [b[j] - b[j + 1] for j in range(len(b) - 1)]
        if not b:
            break
    if not converged:
        raise ValueError(f"eta series did not converge for s={s}")
    eta = complex(head.value, head_im.value) + tail
    z = eta / denom
    if s.imag == 0:
        return complex(z.real, 0.0)
    return z


# ---------------------------------------------------------------------------
# Gamma via Lanczos (g = 7, 9 coefficients)
# ---------------------------------------------------------------------------

# Classic Lanczos table for g = 7, n = 9 (Godfrey's coefficients); gives
# relative error below 1e-14 on the real half-line used here.
_LANCZOS_G = 7.0
_LANCZOS_COEFFS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma_ref(x: float) -> float:
    """Gamma(x) for real x > 0 with relative error <= 1e-13."""
    if not x > 0:
        raise ValueError(f"gamma_ref requires x > 0, got {x}")
    if x < 0.5:
        # reflection keeps the series argument in its accurate band
        return math.pi / (math.sin(math.pi * x) * gamma_ref(1.0 - x))
    z = x - 1.0
    acc = _LANCZOS_COEFFS[0]
    for i, c in enumerate(_LANCZOS_COEFFS[1:], start=1):
        acc += c / (z + i)
    t = z + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (z + 0.5) * math.exp(-t) * acc


# ---------------------------------------------------------------------------
# Trapezoid mean of a periodic function (spectrally accurate oracle)
# ---------------------------------------------------------------------------

def periodic_trapezoid_integral(f: Callable, points: int) -> float:
    """(1/points) * sum_{j<points} f(j/points); the integral over one period.

    For a smooth period-1 integrand the equispaced mean converges faster
    than any power of 1/points, which is what makes it usable as an
    independent oracle for every series scheme in this package.
    """
    if points < 2:
        raise ValueError("points must be >= 2")
    x = np.arange(points, dtype=float) / points
    vals = np.asarray(f(x), dtype=float)
    return float(np.sum(vals) / points)


# ---------------------------------------------------------------------------
# theta_ab: two-sided power-weighted exponential lattice sum
# ---------------------------------------------------------------------------

def theta_ab(a: float, b: float, w: float, tol: ToleranceConfig | None = None) -> float:
    """sum over integer n of |n|^b exp(-w |n|^a), w > 0.

    The n = 0 term contributes 1 when b = 0 (so theta_ab(2, 0, .) is the
    classical Jacobi theta value sum exp(-w n^2)) and 0 when b > 0.
    """
    tol = tol or ToleranceConfig(abs_tol=1e-18, max_terms=1_000_000)
    if not w > 0:
        raise ValueError("w must be > 0")
    if a <= 0 or b < 0:
        raise ValueError("requires a > 0 and b >= 0")
    acc = CompensatedAccumulator()
    if b == 0:
        acc.add(1.0)
    n = 1
    while True:
        term = 2.0 * n ** b * math.exp(-w * n ** a)
        acc.add(term)
        # past the peak of x^b e^(-w x^a) the terms only decrease
        past_peak = (b == 0) or (w * a * n ** a >= b)
        if past_peak and term < tol.threshold(acc.value):
            return acc.value
        n += 1
        if n > tol.max_terms:
            raise ValueError("theta_ab did not converge within max_terms")


# ---------------------------------------------------------------------------
# The grouped Euler M-relation (1 - M^(1-s)) zeta(s) as a partial sum
# ---------------------------------------------------------------------------

def euler_m_partial_sum(s: complex, M: int, groups: int) -> complex:
    """Partial sum of sum_n sum_k [(Mn-k)^-s - (Mn)^-s] over n <= groups."""
    if M < 2:
        raise ValueError("M must be >= 2")
    s = complex(s)
    total = 0j
    chunk = 65536
    for lo in range(1, groups + 1, chunk):
        hi = min(groups + 1, lo + chunk)
        n = np.arange(lo, hi, dtype=float)
        mn = M * n
        base = np.exp(-s * np.log(mn))
        acc = -(M - 1.0) * base
        for k in range(1, M):
            acc = acc + np.exp(-s * np.log(mn - k))
        total += complex(np.sum(acc))
    return total


def euler_m_tail_bound(s: complex, M: int, groups: int) -> float:
    """Upper bound for the omitted tail of euler_m_partial_sum.

    Mean value theorem per pair plus integral comparison over n > groups:
    |(Mn-k)^-s - (Mn)^-s| <= |s| k (Mn-k)^(-sigma-1), sigma = Re(s).
    """
    sigma = complex(s).real
    if sigma <= 0:
        raise ValueError("tail bound needs Re(s) > 0")
    head = abs(complex(s)) * M * M / 2.0 * (M * groups - M + 1.0) ** (-sigma - 1.0)
    integral = abs(complex(s)) * M / (2.0 * sigma) * (M * groups - M + 1.0) ** (-sigma)
    return head + integral


# ---------------------------------------------------------------------------
# Exact Bernoulli numbers (used by the zeta continuation helpers)
# ---------------------------------------------------------------------------

_BERNOULLI_CACHE: list[Fraction] = [Fraction(1)]


def bernoulli_number(n: int) -> Fraction:
    """Exact Bernoulli number B_n (B_1 = -1/2 convention)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    while len(_BERNOULLI_CACHE) <= n:
        m = len(_BERNOULLI_CACHE)
        # sum_{k=0}^{m} C(m+1, k) B_k = 0
        s = Fraction(0)
        for k in range(m):
            s += math.comb(m + 1, k) * _BERNOULLI_CACHE[k]
        _BERNOULLI_CACHE.append(-s / (m + 1))
    return _BERNOULLI_CACHE[n]
