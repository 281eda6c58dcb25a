"""Multivariate homogeneous summands and their M-difference series.

A summand Psi(n_1..n_d; s) with the homogeneity Psi(M n; s) = M^(-s)
Psi(n; s) supports the same grouped M-difference construction as n^(-s):

    (1 - M^(d-s)) sum Psi(n; s) =
        sum_n [ sum_{0 <= k_i <= M-1} Psi(Mn - k; s) - M^d Psi(Mn; s) ],

with one pole at s = d whose residue-like ratio (series at s = d) / ln M
is the same positive constant for every M.  That constant self-normalizes
a quadrature rule on nodes {log_M psi(m)} with weights xi(m) psi(m)^(-d):
a reconstruction of the one-dimensional logarithmic-node scheme, labeled
as such (the multivariate quadrature formula is an extrapolation, not a
transcription).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .parallel import ReductionPlan, chunk_ranges, sum_chunks
from .quadrature import PeriodicFunction, QuadratureResult, _grouped_series

__all__ = [
    "HomogeneousSummand",
    "XiPsiPair",
    "gzeta_difference_series",
    "gzeta_invariance_check",
    "gzeta_quadrature",
    "neighbor_ratio_summand",
]

_DEFAULT_PLAN = ReductionPlan()
_WORK_LIMIT = 200_000_000  # lattice-point x shift evaluations per call


@dataclass
class HomogeneousSummand:
    """eval(n_arrays, s) -> array over positive-integer lattice points.

    n_arrays is a tuple of d float arrays (the coordinates); homogeneity
    Psi(M n; s) = M^(-s) Psi(n; s) is spot-checked before any series is
    computed (hard gate).
    """

    dim: int
    eval: Callable
    label: str = ""

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dim must be >= 1")

    def check_homogeneity(self, s: complex = 2.5, scales=(2, 3),
                          samples: int = 32, seed: int = 0) -> float:
        rng = np.random.default_rng(seed)
        n = tuple(rng.integers(1, 50, samples).astype(float) for _ in range(self.dim))
        base = np.asarray(self.eval(n, s))
        worst = 0.0
        for m in scales:
            scaled = np.asarray(self.eval(tuple(m * c for c in n), s))
            expected = m ** (-complex(s)) * base
            denom = np.maximum(np.abs(expected), 1e-300)
            worst = max(worst, float(np.max(np.abs(scaled - expected) / denom)))
        return worst


@dataclass
class XiPsiPair:
    """xi homogeneous of degree 0, psi positive homogeneous of degree 1."""

    xi: Callable
    psi: Callable
    dim: int
    label: str = ""

    def check_homogeneity(self, scales=(2, 3), samples: int = 32,
                          seed: int = 0) -> float:
        rng = np.random.default_rng(seed)
        n = tuple(rng.integers(1, 50, samples).astype(float) for _ in range(self.dim))
        xi0 = np.asarray(self.xi(n), dtype=float)
        ps0 = np.asarray(self.psi(n), dtype=float)
        if np.any(ps0 <= 0):
            raise ValueError("psi must be positive on the lattice")
        worst = 0.0
        for m in scales:
            ns = tuple(m * c for c in n)
            worst = max(worst, float(np.max(np.abs(np.asarray(self.xi(ns)) - xi0)
                                            / np.maximum(np.abs(xi0), 1e-300))))
            worst = max(worst, float(np.max(np.abs(np.asarray(self.psi(ns)) - m * ps0)
                                            / (m * ps0))))
        return worst

    def summand(self) -> HomogeneousSummand:
        return HomogeneousSummand(
            dim=self.dim,
            eval=lambda n, s: np.asarray(self.xi(n))
            * np.exp(-complex(s) * np.log(np.asarray(self.psi(n), dtype=float))),
            label=self.label or "xi * psi^-s",
        )


def _gate(summand: HomogeneousSummand, tol: float = 1e-8) -> None:
    worst = summand.check_homogeneity()
    if worst > tol:
        raise ValueError(f"homogeneity check failed (max violation {worst:.3g})")


def gzeta_difference_series(
    Z: HomogeneousSummand,
    M: int,
    s: complex,
    box: int,
    plan: ReductionPlan | None = None,
) -> complex:
    """Truncated multivariate difference series over n_i <= box."""
    if M < 2:
        raise ValueError("M must be >= 2")
    if box < 1:
        raise ValueError("box must be >= 1")
    _gate(Z)
    d = Z.dim
    if (M ** d + 1) * box ** d > _WORK_LIMIT:
        raise ValueError("box^dim work limit exceeded")
    plan = plan or _DEFAULT_PLAN
    s = complex(s)
    shifts = list(itertools.product(range(M), repeat=d))

    if d == 1:
        def worker(lo: int, hi: int) -> complex:
            n = np.arange(lo, hi, dtype=float)
            mn = M * n
            acc = -(M - 1.0) * np.asarray(Z.eval((mn,), s))
            for k in range(1, M):
                acc = acc + np.asarray(Z.eval((mn - k,), s))
            return complex(np.sum(acc))

        total, _ = sum_chunks(worker, chunk_ranges(1, box + 1, plan.chunk), plan)
        return complex(total)

    rest = np.stack([g.ravel() for g in np.meshgrid(
        *[np.arange(1, box + 1, dtype=float)] * (d - 1), indexing="ij")])

    def worker(lo: int, hi: int) -> complex:
        sub = 0j
        for n1 in range(lo, hi):
            coords = (np.full(rest.shape[1], float(n1)),) + tuple(rest)
            mn = tuple(M * c for c in coords)
            acc = -float(M ** d) * np.asarray(Z.eval(mn, s))
            for k in shifts:
                acc = acc + np.asarray(Z.eval(tuple(c - ki for c, ki in zip(mn, k)), s))
            sub += complex(np.sum(acc))
        return sub

    slab = max(1, plan.chunk // max(1, box ** (d - 1)))
    total, _ = sum_chunks(worker, chunk_ranges(1, box + 1, slab), plan)
    return complex(total)


def gzeta_invariance_check(
    Z: HomogeneousSummand,
    Ms: Sequence[int],
    box: int,
    plan: ReductionPlan | None = None,
) -> list[dict]:
    """Series at s = dim for each M, divided by ln M; reports the spread.

    The ratios estimate one constant (positive for the built-in family);
    rows carry M, series value, ratio, and the max pairwise spread.
    """
    rows = []
    ratios = []
    for M in Ms:
        series = gzeta_difference_series(Z, M, complex(Z.dim), box, plan)
        ratio = series.real / math.log(M)
        ratios.append(ratio)
        rows.append({"M": M, "series": series.real, "ratio": ratio})
    spread = max(ratios) - min(ratios) if ratios else 0.0
    for r in rows:
        r["spread"] = spread
        r["positive"] = r["ratio"] > 0
    return rows


def gzeta_quadrature(
    P: XiPsiPair,
    M: int,
    f: PeriodicFunction,
    box: int,
    plan: ReductionPlan | None = None,
    c_ratio: float | None = None,
) -> QuadratureResult:
    """Quadrature on nodes {log_M psi(m)} with weights xi(m) psi(m)^(-dim).

    Normalizer is c_P * ln M where c_P is the invariance ratio of the pair
    (computed at the same box unless supplied).  For dim = 1 this runs the
    exact same grouped engine as the plain scheme, so xi == 1, psi == id
    reproduces integral_logM bit for bit at equal truncation.  This rule is
    a reconstruction (see module docstring), not a stated formula.
    """
    if P.check_homogeneity() > 1e-8:
        raise ValueError("xi/psi homogeneity check failed")
    plan = plan or _DEFAULT_PLAN
    d = P.dim
    ln_m = math.log(M)
    if c_ratio is None:
        rows = gzeta_invariance_check(P.summand(), [M], box, plan)
        c_ratio = rows[0]["ratio"]
    if abs(c_ratio) < 1e-12:
        raise ValueError("invariance ratio too small to normalize by")

    if d == 1:
        # same division as the engine default: keeps xi == 1, psi == id
        # bit-identical to the plain scheme
        def node_map(m, x):
            return np.log(np.asarray(P.psi((m,)), dtype=float)) / ln_m

        def weight_map(m, x):
            return np.asarray(P.xi((m,)), dtype=float) / np.asarray(P.psi((m,)), dtype=float)

        raw, _ = _grouped_series(f, M, box, plan, ln_m, node_map, weight_map)
        normalizer = c_ratio * ln_m
        return QuadratureResult(
            value=float(raw) / normalizer, raw_series_sum=float(raw),
            normalizer=normalizer, groups_used=box,
            tail_estimate=abs(1.0 / box), tail_is_heuristic=True)

    shifts = list(itertools.product(range(M), repeat=d))
    rest = np.stack([g.ravel() for g in np.meshgrid(
        *[np.arange(1, box + 1, dtype=float)] * (d - 1), indexing="ij")])

    def sample(coords) -> np.ndarray:
        ps = np.asarray(P.psi(coords), dtype=float)
        w = np.asarray(P.xi(coords), dtype=float) * ps ** (-float(d))
        return w * np.asarray(f(np.log(ps) / ln_m), dtype=float)

    def worker(lo: int, hi: int) -> float:
        sub = 0.0
        for n1 in range(lo, hi):
            coords = (np.full(rest.shape[1], float(n1)),) + tuple(rest)
            mn = tuple(M * c for c in coords)
            acc = -float(M ** d - 1) * sample(mn)
            for k in shifts:
                if not any(k):
                    continue
                acc = acc + sample(tuple(c - ki for c, ki in zip(mn, k)))
            sub += float(np.sum(acc))
        return sub

    slab = max(1, plan.chunk // max(1, box ** (d - 1)))
    raw, _ = sum_chunks(worker, chunk_ranges(1, box + 1, slab), plan)
    normalizer = c_ratio * ln_m
    return QuadratureResult(
        value=float(raw) / normalizer, raw_series_sum=float(raw),
        normalizer=normalizer, groups_used=box,
        tail_estimate=abs(2.0 / box), tail_is_heuristic=True)


def neighbor_ratio_summand(B: Sequence[Sequence[float]],
                           upsilon: Sequence[float]) -> HomogeneousSummand:
    """Built-in showcase summand: neighbor-product ratio times a product of
    linear-form powers.

        Psi(n; s) = [sum_j (j+1) n_j n_{j+1} / (sum_j n_j)^2]
                    * prod_i (sum_j B_ij n_j)^(-upsilon_i s)

    All B entries positive, sum upsilon_i = 1, so the first factor is
    homogeneous of degree 0 and the product of degree -s.  The lattice is
    the full positive orthant n_i >= 1 (the difference-series telescoping
    needs the orthant closed under the k-shifts).
    """
    B = np.asarray(B, dtype=float)
    upsilon = np.asarray(upsilon, dtype=float)
    if B.ndim != 2 or B.shape[0] != len(upsilon):
        raise ValueError("B must be I x d with one upsilon per row")
    if np.any(B <= 0):
        raise ValueError("B entries must be positive")
    if abs(float(np.sum(upsilon)) - 1.0) > 1e-12:
        raise ValueError("upsilon must sum to 1")
    d = B.shape[1]
    if d < 2:
        raise ValueError("needs dim >= 2")

    def eval_fn(n, s):
        s = complex(s)
        total = np.zeros_like(np.asarray(n[0], dtype=float))
        for jj in range(d - 1):
            total = total + (jj + 1) * np.asarray(n[jj]) * np.asarray(n[jj + 1])
        sn = np.zeros_like(total)
        for c in n:
            sn = sn + np.asarray(c, dtype=float)
        xi = total / sn ** 2
        log_forms = np.zeros_like(total, dtype=complex)
        for i in range(B.shape[0]):
            form = np.zeros_like(total)
            for jj in range(d):
                form = form + B[i, jj] * np.asarray(n[jj])
            log_forms = log_forms + upsilon[i] * np.log(form)
        return xi * np.exp(-s * log_forms)

    return HomogeneousSummand(dim=d, eval=eval_fn, label="neighbor-ratio")
