"""Series quadrature of periodic functions on logarithmic node sequences.

All schemes here rewrite ln(M) * integral_0^1 f as an absolutely convergent
series of weighted samples of f at fractional parts of logarithms.  The
basic series groups, for n = 1, 2, ...,

    sum_{k=1}^{M-1} [ f({log_M(Mn-k)}) / (Mn-k)  -  f({log_M(Mn)}) / (Mn) ],

and that inner pairing is mandatory: split apart, the two halves diverge
like the harmonic series.  Truncation is therefore always counted in whole
groups.  Variants replace the nodes by transformed values (a change of
variables), by digit-style lattice values chi({log_M m}), by reciprocal
fractional parts L/{log_M m} (continued-fraction related nodes), by
logarithms with rational base ln m / ln(M/N), or by a log-power weighted
form whose normalizer is (L-1)! (ln(M/N))^L.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, NamedTuple, Sequence

import numpy as np

from .numerics import CompensatedAccumulator
from .parallel import ReductionPlan, chunk_ranges, fold_partials, sum_chunks

__all__ = [
    "ModulusOfContinuity",
    "PeriodicFunction",
    "QuadratureResult",
    "NodeScheme",
    "NodeRow",
    "integral_logM",
    "integral_transformed",
    "integral_lattice_nodes",
    "integral_cf_nodes",
    "integral_rational_base",
    "integral_derivative_form",
    "tail_bound",
    "node_stream",
]

_DEFAULT_PLAN = ReductionPlan()


def _frac(x):
    return x - np.floor(x)


def _snap_frac(x):
    """Fractional part with values within 1e-12 of an integer snapped to 0.

    log_M(M^j) evaluates to an exact integer under the engine's division,
    but composite arguments (sigma scalings, rational bases) can land one
    ulp off; for m below ~1e11 no other node comes this close to 0, so the
    snap only ever fires where the exact value is 0.
    """
    xf = _frac(np.asarray(x, dtype=float))
    return np.where(np.minimum(xf, 1.0 - xf) < 1e-12, 0.0, xf)


# ---------------------------------------------------------------------------
# Moduli of continuity and the admissibility class
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModulusOfContinuity:
    """A positive monotone gauge rho with |f(x)-f(y)| <= C rho(|x-y|).

    kind is one of "lipschitz" (rho(u) = u^exponent), "loglog"
    (rho(u) = |ln|ln u||^-b / |ln u|, b > 1), or "custom" with an explicit
    callable.  Admissibility for the series schemes means the sums
    sum rho(c/n^2) (ln n)^L / n stay Cauchy, which `class_b_partial`
    lets tests probe numerically.
    """

    kind: str = "lipschitz"
    exponent: float = 1.0
    b: float = 2.0
    constant: float = 1.0
    rho_fn: Callable[[float], float] | None = None
    label: str = ""

    def __post_init__(self) -> None:
        if self.kind not in ("lipschitz", "loglog", "custom"):
            raise ValueError(f"unknown modulus kind {self.kind!r}")
        if self.kind == "lipschitz" and not (0 < self.exponent <= 1):
            raise ValueError("lipschitz exponent must lie in (0, 1]")
        if self.kind == "loglog" and not self.b > 1:
            raise ValueError("loglog modulus requires b > 1")
        if self.kind == "custom" and self.rho_fn is None:
            raise ValueError("custom modulus needs rho_fn")
        if self.constant <= 0:
            raise ValueError("constant must be > 0")

    def rho(self, u: float) -> float:
        if u <= 0:
            return 0.0
        if self.kind == "lipschitz":
            return u ** self.exponent
        if self.kind == "loglog":
            if u >= 0.3:
                u = 0.3  # gauge only matters near 0; keep it monotone there
            lu = abs(math.log(u))
            return abs(math.log(lu)) ** (-self.b) / lu
        return float(self.rho_fn(u))

    def class_b_partial(self, n_max: int, L: int = 0, c: float = 1.0) -> float:
        """Partial sum of rho(c/n^2) (ln n)^L / n up to n_max."""
        acc = CompensatedAccumulator()
        for n in range(2, n_max + 1):
            acc.add(self.rho(c / n ** 2) * math.log(n) ** L / n)
        return acc.value

    def is_class_b(self, L: int = 0, c: float = 1.0) -> bool:
        """Numerical Cauchy check on dyadic checkpoints up to 2^20."""
        checkpoints = [2 ** j for j in range(6, 21)]
        prev = self.class_b_partial(checkpoints[0], L, c)
        increments = []
        for n in checkpoints[1:]:
            cur = self.class_b_partial(n, L, c)
            increments.append(cur - prev)
            prev = cur
        # summable <=> dyadic increments eventually decay geometrically-ish
        tail = increments[-6:]
        return all(b <= a * 0.95 + 1e-12 for a, b in zip(tail, tail[1:]))


# ---------------------------------------------------------------------------
# Periodic functions
# ---------------------------------------------------------------------------

@dataclass
class PeriodicFunction:
    """A period-1 function given by its rule on [0, 1).

    Arguments are reduced mod 1 before evaluation, so eval(x) == eval(x+1)
    holds by construction.  `fn` should accept numpy arrays; set
    vectorized=False to have scalar rules wrapped automatically.  The
    declared modulus drives the rigorous tail bound; without one the
    schemes fall back to a heuristic doubling estimate.
    """

    fn: Callable
    modulus: ModulusOfContinuity | None = None
    smoothness: str = "smooth"  # "trig-polynomial" | "smooth" | "rough"
    degree: int | None = None
    label: str = ""
    vectorized: bool = True
    _max_abs: float | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.smoothness not in ("trig-polynomial", "smooth", "rough"):
            raise ValueError(f"unknown smoothness hint {self.smoothness!r}")
        if not self.vectorized:
            self.fn = np.vectorize(self.fn)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.fn(x - np.floor(x))

    def max_abs(self) -> float:
        """max |f| estimated on a 4096-point grid (cached; heuristic)."""
        if self._max_abs is None:
            grid = np.arange(4096) / 4096.0
            self._max_abs = float(np.max(np.abs(np.asarray(self(grid), dtype=float))))
        return self._max_abs

    def check_modulus(self, pairs: int = 256, seed: int = 0) -> float:
        """Largest |f(x)-f(y)| / (C rho(|x-y|)) over random pairs.

        Values <= 1 mean the declared modulus held on the sample.
        """
        if self.modulus is None:
            raise ValueError("no modulus declared")
        rng = np.random.default_rng(seed)
        x = rng.random(pairs)
        y = x + rng.uniform(-0.2, 0.2, pairs)
        fx = np.asarray(self(x), dtype=float)
        fy = np.asarray(self(y), dtype=float)
        worst = 0.0
        for xi, yi, fxi, fyi in zip(x, y, fx, fy):
            gap = abs(xi - yi)
            if gap == 0:
                continue
            denom = self.modulus.constant * self.modulus.rho(gap)
            if denom > 0:
                worst = max(worst, abs(fxi - fyi) / denom)
        return worst


@dataclass(frozen=True)
class QuadratureResult:
    """Outcome of one series scheme: value = raw_series_sum / normalizer."""

    value: float
    raw_series_sum: float
    normalizer: float
    groups_used: int
    tail_estimate: float
    tail_is_heuristic: bool = True

    def __post_init__(self) -> None:
        if not math.isfinite(self.tail_estimate) or self.tail_estimate < 0:
            raise ValueError("tail_estimate must be finite and >= 0")


# ---------------------------------------------------------------------------
# Node schemes (declarative description used by node_stream and the CLI)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NodeScheme:
    variant: str
    M: int
    N: int = 1
    L: int = 1
    phi: Callable | None = None
    phi_prime: Callable | None = None
    chi: Callable | None = None
    g: Callable | None = None

    _VARIANTS = ("plain", "transformed", "lattice", "continued-fraction",
                 "rational-base", "derivative-form")

    def __post_init__(self) -> None:
        if self.variant not in self._VARIANTS:
            raise ValueError(f"unknown scheme variant {self.variant!r}")
        if self.M < 2:
            raise ValueError("M must be >= 2")
        if self.variant == "rational-base" and (self.N < 2 or self.M == self.N):
            raise ValueError("rational-base needs integer N >= 2, N != M")
        if self.variant == "derivative-form":
            if not (2 <= self.L <= 6):
                raise ValueError("derivative-form needs 2 <= L <= 6")
            if self.N < 1 or self.M == self.N:
                raise ValueError("derivative-form needs N >= 1, N != M")
        if self.variant in ("lattice", "continued-fraction") and self.L < 1:
            raise ValueError("L must be >= 1")

    @classmethod
    def plain(cls, M: int) -> "NodeScheme":
        return cls("plain", M)

    @classmethod
    def transformed(cls, M: int, phi, phi_prime) -> "NodeScheme":
        return cls("transformed", M, phi=phi, phi_prime=phi_prime)

    @classmethod
    def lattice(cls, M: int, L: int, chi, phi, phi_prime, g=None) -> "NodeScheme":
        return cls("lattice", M, L=L, chi=chi, phi=phi, phi_prime=phi_prime,
                   g=g or (lambda x: np.ones_like(np.asarray(x, dtype=float))))

    @classmethod
    def continued_fraction(cls, M: int, L: int, g=None) -> "NodeScheme":
        return cls("continued-fraction", M, L=L,
                   g=g or (lambda x: np.ones_like(np.asarray(x, dtype=float))))

    @classmethod
    def rational_base(cls, M: int, N: int) -> "NodeScheme":
        return cls("rational-base", M, N=N)

    @classmethod
    def derivative_form(cls, M: int, N: int, L: int) -> "NodeScheme":
        return cls("derivative-form", M, N=N, L=L)


# ---------------------------------------------------------------------------
# The shared grouped-series engine
# ---------------------------------------------------------------------------

def _grouped_series(
    f: Callable,
    M: int,
    groups: int,
    plan: ReductionPlan,
    log_den: float,
    node_map: Callable | None = None,
    weight_map: Callable | None = None,
):
    """Sum the paired k-groups for n in [1, groups].

    node_map(m, x) may remap the sample point (default: x = log(m)/log_den,
    reduced mod 1 by f itself); weight_map(m, x) may remap the weight
    (default 1/m).  The quotient is an actual division: log(M^j)/log(M)
    then lands on exact integers, which schemes with discontinuous
    composites rely on.  Group order is ascending; within a group the
    k = 0 sample enters with weight -(M-1) * w(Mn).
    """

    def term(m: np.ndarray) -> np.ndarray:
        x = np.log(m) / log_den
        node = node_map(m, x) if node_map is not None else x
        w = weight_map(m, x) if weight_map is not None else 1.0 / m
        return w * f(node)

    def worker(lo: int, hi: int):
        n = np.arange(lo, hi, dtype=float)
        mn = M * n
        acc = -(M - 1.0) * term(mn)
        for k in range(1, M):
            acc = acc + term(mn - k)
        s = np.sum(acc)
        return complex(s) if np.iscomplexobj(acc) else float(s)

    ranges = chunk_ranges(1, groups + 1, plan.chunk)
    return sum_chunks(worker, ranges, plan)


def _heuristic_tail(total: float, partials: Sequence[float], groups: int,
                    plan: ReductionPlan, recompute: Callable[[int], float]) -> float:
    """3x the last doubling difference of the raw sum, plus a roundoff floor."""
    half = max(1, groups // 2)
    n_half_chunks = len(chunk_ranges(1, half + 1, plan.chunk))
    if len(partials) >= 4 and n_half_chunks < len(partials):
        s_half = fold_partials(partials[:n_half_chunks])
    else:
        s_half = recompute(half)
    return 3.0 * abs(complex(total) - complex(s_half)) + 1e-15 * (1.0 + abs(complex(total)))


def _result(raw: float, normalizer: float, groups: int, tail_raw: float,
            heuristic: bool) -> QuadratureResult:
    return QuadratureResult(
        value=raw / normalizer,
        raw_series_sum=raw,
        normalizer=normalizer,
        groups_used=groups,
        tail_estimate=tail_raw / abs(normalizer),
        tail_is_heuristic=heuristic,
    )


# ---------------------------------------------------------------------------
# Scheme: plain logarithmic nodes
# ---------------------------------------------------------------------------

def integral_logM(
    f: PeriodicFunction,
    M: int,
    groups: int,
    plan: ReductionPlan | None = None,
) -> QuadratureResult:
    """Estimate integral_0^1 f from samples at {log_M m} with weights 1/m."""
    if M < 2 or M != int(M):
        raise ValueError("M must be an integer >= 2")
    if groups < 1:
        raise ValueError("groups must be >= 1")
    plan = plan or _DEFAULT_PLAN
    ln_m = math.log(M)
    raw, partials = _grouped_series(f, M, groups, plan, ln_m)
    if isinstance(f, PeriodicFunction) and f.modulus is not None:
        tail_raw = tail_bound(f, M, groups)
        heuristic = False
    else:
        tail_raw = _heuristic_tail(
            raw, partials, groups, plan,
            lambda g: _grouped_series(f, M, g, plan, ln_m)[0])
        heuristic = True
    return _result(raw, ln_m, groups, tail_raw, heuristic)


def tail_bound(f: PeriodicFunction, M: int, from_group: int) -> float:
    """Conservative bound on the raw-series tail beyond `from_group`.

    Per group and inner index k the term is split into a modulus part
    C rho(node gap) / (Mn-k) and a weight part k max|f| / (Mn (Mn-k));
    both tails are bounded by left-endpoint dyadic upper integrals (the
    integrands decrease in n).  The node gap used is the exact
    -log_M(1 - k/(Mn)), which is O(1/n).
    """
    if not isinstance(f, PeriodicFunction) or f.modulus is None:
        raise ValueError("tail_bound needs a declared modulus")
    mod = f.modulus
    max_f = f.max_abs()
    n0 = from_group + 1
    total = 0.0
    for k in range(1, M):
        # weight part: closed-form integral comparison
        total += max_f * (k / (M * n0 * (M * n0 - k))
                          + math.log(M * n0 / (M * n0 - k)) / M)

        def rho_term(x: float, k: int = k) -> float:
            gap = -math.log1p(-k / (M * x)) / math.log(M)
            return mod.constant * mod.rho(gap) / (M * x - k)

        total += rho_term(n0) + _upper_integral(rho_term, float(n0))
    return total


def _upper_integral(h: Callable[[float], float], start: float) -> float:
    """Upper bound of integral_start^inf h for decreasing positive h.

    Left-endpoint rectangles on dyadically growing blocks; each block is
    split 16 ways so the overestimate stays small.
    """
    total = 0.0
    lo = start
    ratio = 2.0 ** (1.0 / 16.0)
    for _ in range(4096):
        hi = lo * ratio
        block = h(lo) * (hi - lo)
        total += block
        if block < 1e-9 * total + 1e-300:
            break
        lo = hi
    return total


# ---------------------------------------------------------------------------
# Scheme: transformed nodes (change of variables)
# ---------------------------------------------------------------------------

def integral_transformed(
    f: PeriodicFunction,
    phi: Callable,
    phi_prime: Callable,
    M: int,
    groups: int,
    plan: ReductionPlan | None = None,
    modulus: ModulusOfContinuity | None = None,
) -> QuadratureResult:
    """Same series applied to the composite f(phi(x)) phi'(x).

    Requires phi(1) - phi(0) = 1; admissibility of the composite is the
    caller's declaration (pass a modulus for a rigorous tail).
    """
    d = float(np.asarray(phi(1.0)) - np.asarray(phi(0.0)))
    if abs(d - 1.0) > 1e-9:
        raise ValueError(f"phi(1) - phi(0) must equal 1, got {d}")
    composite = PeriodicFunction(
        fn=lambda x: np.asarray(f(np.asarray(phi(x)))) * np.asarray(phi_prime(x)),
        modulus=modulus,
        smoothness=f.smoothness,
        label=f"({f.label or 'f'} o phi) * phi'",
    )
    return integral_logM(composite, M, groups, plan)


# ---------------------------------------------------------------------------
# Scheme: lattice nodes chi({log_M m}) with finite correction sum G_phi
# ---------------------------------------------------------------------------

def _check_inverse_pair(chi, phi, L: int) -> None:
    xs = np.linspace(0.0, float(L), 33)
    err = np.max(np.abs(np.asarray(chi(np.asarray(phi(xs)))) - xs))
    if err > 1e-8:
        raise ValueError(f"chi(phi(x)) != x (max deviation {err:.3g})")
    if abs(float(np.asarray(phi(float(L)))) - 1.0) > 1e-9 or abs(float(np.asarray(phi(0.0)))) > 1e-9:
        raise ValueError("phi must map [0, L] onto [0, 1] with phi(0)=0, phi(L)=1")


def integral_lattice_nodes(
    f: PeriodicFunction,
    g: Callable,
    chi: Callable,
    phi: Callable,
    phi_prime: Callable,
    L: int,
    M: int,
    groups: int,
    inner_tol: float = 1e-9,
    plan: ReductionPlan | None = None,
) -> QuadratureResult:
    """Weighted series over nodes chi({log_M m}).

    Weights are g({log_M m}) / (m * G_phi({chi({log_M m})})) with
    G_phi(x) = sum_{l<L} g(phi(l+{x})) phi'(l+{x}).  inner_tol doubles as
    the magnitude floor for G_phi: any node value below it signals a
    division hazard and raises.  Convergence to the integral needs the
    G-corrected composite to be admissible (continuous across period
    boundaries), which constrains the choice of g; this is the caller's
    declaration, not something checked here.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    plan = plan or _DEFAULT_PLAN
    _check_inverse_pair(chi, phi, L)
    ln_m = math.log(M)
    floor = max(inner_tol, 1e-300)

    def g_phi(y: np.ndarray) -> np.ndarray:
        y = _frac(y)
        acc = np.zeros_like(y)
        for l in range(L):
            acc = acc + np.asarray(g(np.asarray(phi(l + y)))) * np.asarray(phi_prime(l + y))
        return acc

    def node_map(m, x):
        return np.asarray(chi(_snap_frac(x)))

    def weight_map(m, x):
        xf = _snap_frac(x)
        gv = g_phi(_frac(np.asarray(chi(xf))))
        if np.min(np.abs(gv)) < floor:
            raise ValueError("G_phi below floor at a node: division hazard")
        return np.asarray(g(xf)) / (m * gv)

    raw, partials = _grouped_series(f, M, groups, plan, ln_m, node_map, weight_map)
    tail_raw = _heuristic_tail(
        raw, partials, groups, plan,
        lambda gr: _grouped_series(f, M, gr, plan, ln_m, node_map, weight_map)[0])
    return _result(raw, ln_m, groups, tail_raw, True)


# ---------------------------------------------------------------------------
# Scheme: continued-fraction related nodes L/{log_M m}
# ---------------------------------------------------------------------------

def _inner_g_series(g: Callable, L: int, y: np.ndarray, inner_tol: float) -> np.ndarray:
    """G(y) = sum_{n>=L} g(L/(n+{y})) (n+{y})^-2 to within ~inner_tol.

    Direct terms up to K, then the midpoint-corrected integral comparison
    tail (1/L) * integral_0^{L/(K-1/2+y)} g, done with Simpson.  The
    truncation error is O(K^-3), so K is picked from inner_tol.
    """
    y = _frac(np.asarray(y, dtype=float))
    K = int(max(L + 8, math.ceil((1.0 / (4.0 * max(inner_tol, 1e-14))) ** (1.0 / 3.0))))
    K = min(K, 20000)
    acc = np.zeros_like(y)
    for n in range(L, K):
        u = n + y
        acc = acc + np.asarray(g(L / u)) / (u * u)
    # Simpson on [0, L/(K-1/2+y)] for the tail integral (1/L) * int g
    top = L / (K - 0.5 + y)
    h = top / 8.0
    simpson = np.asarray(g(np.zeros_like(y))) + np.asarray(g(top))
    for j in range(1, 8):
        w = 4.0 if j % 2 == 1 else 2.0
        simpson = simpson + w * np.asarray(g(j * h))
    acc = acc + (h / 3.0) * simpson / L
    return acc


def integral_cf_nodes(
    f: PeriodicFunction,
    g: Callable,
    L: int,
    M: int,
    groups: int,
    inner_tol: float = 1e-8,
    plan: ReductionPlan | None = None,
) -> QuadratureResult:
    """Series over reciprocal-fractional-part nodes L/{log_M m}.

    Normalizer is L * ln M.  Where {log_M m} is exactly 0 (m a power of M)
    the {x/0} = 0 convention applies; fractional parts within 1e-12 of an
    integer are snapped to 0, which for m below ~1e11 can only happen at
    exact powers.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    plan = plan or _DEFAULT_PLAN
    ln_m = math.log(M)
    g_floor = 1e-12

    def node_of(x: np.ndarray) -> np.ndarray:
        xf = _snap_frac(x)
        return np.where(xf > 0.0, L / np.where(xf > 0.0, xf, 1.0), 0.0)

    def node_map(m, x):
        return node_of(x)

    def weight_map(m, x):
        xf = _snap_frac(x)
        gv = _inner_g_series(g, L, node_of(x), inner_tol)
        if np.min(np.abs(gv)) < g_floor:
            raise ValueError("inner series G below floor at a node")
        return np.asarray(g(xf)) / (m * gv)

    raw, partials = _grouped_series(f, M, groups, plan, ln_m, node_map, weight_map)
    tail_raw = _heuristic_tail(
        raw, partials, groups, plan,
        lambda gr: _grouped_series(f, M, gr, plan, ln_m, node_map, weight_map)[0])
    return _result(raw, L * ln_m, groups, tail_raw, True)


# ---------------------------------------------------------------------------
# Scheme: rational base ln m / ln(M/N)
# ---------------------------------------------------------------------------

def integral_rational_base(
    f: PeriodicFunction,
    M: int,
    N: int,
    groups: int,
    plan: ReductionPlan | None = None,
) -> QuadratureResult:
    """Difference of the M-family and N-family series; normalizer ln(M/N)."""
    if M < 2 or N < 2:
        raise ValueError("M and N must be integers >= 2")
    if M == N:
        raise ValueError("M != N required")
    plan = plan or _DEFAULT_PLAN
    ln_q = math.log(M / N)
    raw_m, parts_m = _grouped_series(f, M, groups, plan, ln_q)
    raw_n, parts_n = _grouped_series(f, N, groups, plan, ln_q)
    raw = raw_m - raw_n

    def recompute(g: int) -> float:
        return (_grouped_series(f, M, g, plan, ln_q)[0]
                - _grouped_series(f, N, g, plan, ln_q)[0])

    n_half = len(chunk_ranges(1, max(1, groups // 2) + 1, plan.chunk))
    if len(parts_m) >= 4 and n_half < len(parts_m):
        s_half = fold_partials(parts_m[:n_half]) - fold_partials(parts_n[:n_half])
    else:
        s_half = recompute(max(1, groups // 2))
    tail_raw = 3.0 * abs(raw - s_half) + 1e-15 * (1.0 + abs(raw))
    return _result(raw, ln_q, groups, tail_raw, True)


# ---------------------------------------------------------------------------
# Scheme: log-power weighted (derivative) form
# ---------------------------------------------------------------------------

def integral_derivative_form(
    f: PeriodicFunction,
    M: int,
    N: int,
    L: int,
    groups: int,
    plan: ReductionPlan | None = None,
) -> QuadratureResult:
    """Binomial-weighted double series with weights (-ln w)^(L-1) / w.

    Normalizer (L-1)! (ln(M/N))^L.  N = 1 drops the subtracted inner block
    entirely (and the normalizer becomes (L-1)! (ln M)^L).  L is capped at
    6: the (ln w)^(L-1) growth is mild but the binomial prefactors are not.
    """
    if M < 2:
        raise ValueError("M must be >= 2")
    if N < 1:
        raise ValueError("N must be >= 1")
    if M == N:
        raise ValueError("M != N required")
    if not (2 <= L <= 6):
        raise ValueError("L must lie in [2, 6]")
    plan = plan or _DEFAULT_PLAN
    ln_q = math.log(M / N)
    inv_ln_q = 1.0 / ln_q
    normalizer = math.factorial(L - 1) * ln_q ** L

    def weighted(w: np.ndarray) -> np.ndarray:
        lw = np.log(w)
        return (-lw) ** (L - 1) / w * f(lw * inv_ln_q)

    def worker(lo: int, hi: int) -> float:
        n = np.arange(lo, hi, dtype=float)
        acc = np.zeros_like(n)
        for l in range(L):
            sig = float(M ** l * N ** (L - 1 - l))
            coef = float(math.comb(L - 1, l) * (-M) ** l * N ** (L - 1 - l))
            block = -(M - 1.0) * weighted(sig * M * n)
            for k in range(1, M):
                block = block + weighted(sig * (M * n - k))
            if N > 1:
                block = block + (N - 1.0) * weighted(sig * N * n)
                for k in range(1, N):
                    block = block - weighted(sig * (N * n - k))
            acc = acc + coef * block
        return float(np.sum(acc))

    ranges = chunk_ranges(1, groups + 1, plan.chunk)
    raw, partials = sum_chunks(worker, ranges, plan)
    half = max(1, groups // 2)
    n_half = len(chunk_ranges(1, half + 1, plan.chunk))
    if len(partials) >= 4 and n_half < len(partials):
        s_half = fold_partials(partials[:n_half])
    else:
        s_half = sum_chunks(worker, chunk_ranges(1, half + 1, plan.chunk), plan)[0]
    tail_raw = 3.0 * abs(raw - s_half) + 1e-15 * (1.0 + abs(raw))
    return _result(raw, normalizer, groups, tail_raw, True)


# ---------------------------------------------------------------------------
# Node/weight streams
# ---------------------------------------------------------------------------

class NodeRow(NamedTuple):
    group: int
    k: int
    node: float
    weight: float
    aux: float | None = None


def node_stream(scheme: NodeScheme, count: int) -> Iterator[NodeRow]:
    """Enumerate the first `count` (group, k, node, weight) rows in series order.

    Positive rows carry k >= 1; each group's subtracted sample appears once
    as k = 0 with its weight already multiplied by -(M-1) (or +(N-1) for
    the sign-flipped N-family of composite schemes).  The
    continued-fraction variant reports the inner series value G as a
    fifth column.  Deterministic: same scheme, same rows.
    """
    rows = _scheme_rows(scheme)
    for _ in range(max(0, count)):
        try:
            yield next(rows)
        except StopIteration:  # pragma: no cover - all schemes are infinite
            return


def _scheme_rows(scheme: NodeScheme) -> Iterator[NodeRow]:
    M = scheme.M

    def frac1(x: float) -> float:
        return x - math.floor(x)

    if scheme.variant in ("plain", "transformed", "lattice", "continued-fraction"):
        ln_m = math.log(M)
        n = 0
        while True:
            n += 1
            for k in list(range(1, M)) + [0]:
                m = M * n - k
                x = frac1(math.log(m) / ln_m)
                if min(x, 1.0 - x) < 1e-12:
                    x = 0.0
                sign_w = 1.0 / m if k else -(M - 1.0) / m
                if scheme.variant == "plain":
                    yield NodeRow(n, k, x, sign_w)
                elif scheme.variant == "transformed":
                    node = frac1(float(np.asarray(scheme.phi(x))))
                    w = sign_w * float(np.asarray(scheme.phi_prime(x)))
                    yield NodeRow(n, k, node, w)
                elif scheme.variant == "lattice":
                    cval = frac1(float(np.asarray(scheme.chi(x))))
                    gph = 0.0
                    for l in range(scheme.L):
                        gph += float(np.asarray(scheme.g(np.asarray(scheme.phi(l + cval))))) \
                            * float(np.asarray(scheme.phi_prime(l + cval)))
                    w = sign_w * float(np.asarray(scheme.g(x))) / gph
                    yield NodeRow(n, k, cval, w)
                else:  # continued-fraction
                    xs = 0.0 if min(x, 1 - x) < 1e-12 else x
                    node = scheme.L / xs if xs > 0 else 0.0
                    gv = float(_inner_g_series(scheme.g, scheme.L, np.asarray([node]), 1e-10)[0])
                    w = sign_w * float(np.asarray(scheme.g(xs))) / gv
                    yield NodeRow(n, k, frac1(node), w, gv)

    elif scheme.variant == "rational-base":
        N = scheme.N
        inv = 1.0 / math.log(M / N)
        n = 0
        while True:
            n += 1
            for k in list(range(1, M)) + [0]:
                m = M * n - k
                node = frac1(math.log(m) * inv)
                w = 1.0 / m if k else -(M - 1.0) / m
                yield NodeRow(n, k, node, w)
            for k in list(range(1, N)) + [0]:
                m = N * n - k
                node = frac1(math.log(m) * inv)
                w = -1.0 / m if k else (N - 1.0) / m
                yield NodeRow(n, k, node, w)

    else:  # derivative-form
        N, L = scheme.N, scheme.L
        inv = 1.0 / math.log(M / N)

        def w_row(w_arg: float, coef: float) -> tuple[float, float]:
            lw = math.log(w_arg)
            return frac1(lw * inv), coef * (-lw) ** (L - 1) / w_arg

        n = 0
        while True:
            n += 1
            for l in range(L):
                sig = M ** l * N ** (L - 1 - l)
                coef = math.comb(L - 1, l) * (-M) ** l * N ** (L - 1 - l)
                for k in list(range(1, M)) + [0]:
                    m = sig * (M * n - k)
                    node, w = w_row(m, coef if k else -coef * (M - 1))
                    yield NodeRow(n, k, node, w)
                if N > 1:
                    for k in list(range(1, N)) + [0]:
                        m = sig * (N * n - k)
                        node, w = w_row(m, -coef if k else coef * (N - 1))
                        yield NodeRow(n, k, node, w)
