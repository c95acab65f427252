"""Probability measures on box occupancies and their behaviour under the
box-ball dynamics.

The central objects are the detailed balance equation mu x nu = (mu x nu)
pushed through the local map, the Markov chain of carrier loads under an
i.i.d. configuration, and the scaled truncated bipartite geometric family,
which together classify all invariant i.i.d. measures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .capacities import INF, Capacity, is_finite, validate_capacity
from .errors import (
    InvalidParams,
    InvalidPmf,
    NotInMrev,
    StateSpaceTooLarge,
    TruncationTooSmall,
)
from .local_rules import local_map

_SUM_TOL = 1e-12


# ---------------------------------------------------------------------------
# pmf type
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Pmf:
    """Finite probability vector over occupancies 0..len-1.

    ``truncated`` marks a tail cut from an infinite-capacity measure; the
    weights then sum to at least 1 - 1e-12 instead of exactly 1.
    """

    weights: Tuple[float, ...]
    truncated: bool = False

    def __post_init__(self):
        if not self.weights:
            raise InvalidPmf("empty weight vector")
        if any(w < 0 for w in self.weights):
            raise InvalidPmf("negative weight")
        s = sum(self.weights)
        if self.truncated:
            if not (1 - _SUM_TOL <= s <= 1 + _SUM_TOL):
                raise InvalidPmf(f"truncated weights sum to {s}, need >= 1 - 1e-12")
        elif abs(s - 1) > _SUM_TOL:
            raise InvalidPmf(f"weights sum to {s}, need 1 within 1e-12")

    def __len__(self) -> int:
        return len(self.weights)

    def at(self, a: int) -> float:
        return self.weights[a] if 0 <= a < len(self.weights) else 0.0

    def support(self) -> Tuple[int, ...]:
        return tuple(a for a, w in enumerate(self.weights) if w > 0)

    def array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    def max_occupancy(self) -> int:
        return len(self.weights) - 1


def pmf(weights: Sequence[float], truncated: bool = False) -> Pmf:
    return Pmf(tuple(float(w) for w in weights), truncated)


def bernoulli(p: float) -> Pmf:
    if not 0 <= p <= 1:
        raise InvalidParams(f"bernoulli parameter {p} outside [0, 1]")
    return Pmf((1 - p, p))


def uniform(J: int) -> Pmf:
    validate_capacity(J, "J")
    if not is_finite(J):
        raise InvalidParams("uniform measure needs finite J")
    return Pmf((1.0 / (J + 1),) * (J + 1))


def mean_occupancy(mu: Pmf) -> float:
    return float(sum(a * w for a, w in enumerate(mu.weights)))


def underline_r(mu: Pmf) -> int:
    """Smallest occupancy in the support."""
    return mu.support()[0]


def r_val(J: Capacity, mu: Pmf) -> int:
    """min over the support of min{a, J - a} (distance to either capacity edge)."""
    if is_finite(J) and mu.max_occupancy() > J:
        raise InvalidPmf(f"support exceeds capacity J={J}")
    return int(min(min(a, J - a) for a in mu.support()))


# ---------------------------------------------------------------------------
# scaled truncated bipartite geometric family
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StbGeoParams:
    """Weights C * alpha^x * beta^(x mod 2) at occupancies m*x, x = 0..N."""

    N: Capacity
    alpha: float
    beta: float
    m: int
    C: float

    def pmf_value(self, x: int) -> float:
        return self.C * self.alpha ** x * (self.beta if x % 2 else 1.0)


def stbgeo_params(N: Capacity, alpha: float, beta: float, m: int = 1) -> StbGeoParams:
    if alpha <= 0 or beta <= 0:
        raise InvalidParams("alpha and beta must be positive")
    if not isinstance(m, int) or m < 1:
        raise InvalidParams("m must be a positive integer")
    if N == INF:
        if alpha >= 1:
            raise InvalidParams("N = inf requires alpha < 1")
        total = (1 + alpha * beta) / (1 - alpha * alpha)
    else:
        if not isinstance(N, int) or N < 0:
            raise InvalidParams(f"N must be a nonnegative integer or inf, got {N!r}")
        total = sum(alpha ** x * (beta if x % 2 else 1.0) for x in range(N + 1))
    return StbGeoParams(N, float(alpha), float(beta), m, 1.0 / total)


def stbgeo(N: Capacity, alpha: float, beta: float, m: int = 1,
           tail_eps: float = 1e-12) -> Pmf:
    """The stbGeo pmf over occupancies (zeros interleave between multiples
    of m); for N = inf the tail beyond mass tail_eps is dropped and the pmf
    is marked truncated."""
    par = stbgeo_params(N, alpha, beta, m)
    if N == INF:
        # smallest X with remaining tail mass below tail_eps
        vals = []
        tail = 1.0
        x = 0
        while tail > tail_eps:
            w = par.pmf_value(x)
            vals.append(w)
            tail -= w
            x += 1
        n_sup = len(vals)
        truncated = True
    else:
        vals = [par.pmf_value(x) for x in range(N + 1)]
        n_sup = N + 1
        truncated = False
    weights = [0.0] * ((n_sup - 1) * m + 1)
    for x in range(n_sup):
        weights[x * m] = vals[x]
    return Pmf(tuple(weights), truncated)


# ---------------------------------------------------------------------------
# detailed balance
# ---------------------------------------------------------------------------


def detailed_balance_residual(J: Capacity, K: Capacity, mu: Pmf, nu: Pmf) -> float:
    """max over the (truncated) grid of |mu(a) nu(b) - mu(a') nu(b')| where
    (a', b') is the local-map image; zero iff the pair is a local fixed
    point of the dynamics in law."""
    worst = 0.0
    for a in range(len(mu)):
        wa = mu.weights[a]
        for b in range(len(nu)):
            a2, b2 = local_map(J, K, (a, b))
            diff = abs(wa * nu.weights[b] - mu.at(a2) * nu.at(b2))
            if diff > worst:
                worst = diff
    return worst


# ---------------------------------------------------------------------------
# carrier load chain and the dual measure
# ---------------------------------------------------------------------------


def w_chain(J: Capacity, K: Capacity, mu: Pmf,
            state_cap: Optional[int] = None,
            leak_tol: float = 1e-9) -> np.ndarray:
    """Row-stochastic kernel P[a, b] = mu({x : F2(x, a) = b}) of carrier
    loads under an i.i.d. configuration.

    Infinite K is truncated at state_cap with transitions past the cap
    clipped into it; the stationary flow through clipped transitions is the
    leaked mass, and TruncationTooSmall signals a cap too small to justify.
    """
    if is_finite(K):
        cap = int(K)
    else:
        if state_cap is None:
            raise InvalidParams("state_cap required for K = inf")
        cap = state_cap
    kernel = np.zeros((cap + 1, cap + 1))
    clipped = np.zeros(cap + 1)
    for a in range(cap + 1):
        for x in range(len(mu)):
            wx = mu.weights[x]
            if wx == 0.0:
                continue
            b = local_map(J, K, (x, a))[1]
            if b > cap:
                clipped[a] += wx
                b = cap
            kernel[a, b] += wx
    if not is_finite(K) and clipped.any() and leak_tol != math.inf:
        pi = _stationary_on_class(kernel, start=r_val(J, mu))
        leaked = float(pi @ clipped)
        if leaked > leak_tol:
            raise TruncationTooSmall(
                f"stationary flow {leaked} through the cap exceeds {leak_tol}")
    return kernel


def _stationary_on_class(kernel: np.ndarray, start: int) -> np.ndarray:
    """Stationary vector of the communicating class reachable from start,
    by direct linear solve; zero elsewhere."""
    n = kernel.shape[0]
    reach = np.zeros(n, dtype=bool)
    stack = [start]
    reach[start] = True
    while stack:
        a = stack.pop()
        for b in np.nonzero(kernel[a] > 0)[0]:
            if not reach[b]:
                reach[b] = True
                stack.append(int(b))
    idx = np.nonzero(reach)[0]
    sub = kernel[np.ix_(idx, idx)]
    m = len(idx)
    A = np.vstack([sub.T - np.eye(m), np.ones(m)])
    rhs = np.zeros(m + 1)
    rhs[m] = 1.0
    sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    sol = np.clip(sol, 0.0, None)
    sol /= sol.sum()
    out = np.zeros(n)
    out[idx] = sol
    return out


def mrev_member(J: Capacity, K: Capacity, mu: Pmf) -> bool:
    """Whether i.i.d.-mu configurations admit two-sided canonical dynamics."""
    if J == K:
        return True
    if J > K:
        return 2 * r_val(J, mu) < K
    if K == INF:
        return 2 * mean_occupancy(mu) < J
    return 2 * r_val(J, mu) < J


def dual_measure(J: Capacity, K: Capacity, mu: Pmf,
                 tail_eps: float = 1e-13) -> Pmf:
    """Law of the carrier load under an i.i.d.-mu configuration: the
    stationary distribution of the load chain on its recurrent class
    containing r(mu)."""
    if not mrev_member(J, K, mu):
        raise NotInMrev(f"measure with r={r_val(J, mu)} not reversible for "
                        f"BBS({J},{K})")
    if J == K:
        return Pmf(mu.weights, mu.truncated)
    r = r_val(J, mu)
    if is_finite(K):
        kernel = w_chain(J, K, mu)
        pi = _stationary_on_class(kernel, start=r)
        return Pmf(tuple(pi), mu.truncated)
    cap = max(32, 4 * len(mu))
    while True:
        kernel = w_chain(J, K, mu, state_cap=cap, leak_tol=math.inf)
        pi = _stationary_on_class(kernel, start=r)
        if pi[-max(4, cap // 16):].sum() < tail_eps:
            break
        cap *= 2
        if cap > 1 << 20:
            raise TruncationTooSmall("stationary tail does not decay")
    # cut where the remaining tail is below tail_eps, keep the pmf truncated
    cum = np.cumsum(pi[::-1])[::-1]
    keep = np.nonzero(cum >= tail_eps)[0]
    hi = int(keep[-1]) + 1 if len(keep) else 1
    pi = pi[:hi]
    if pi.sum() > 1.0:
        pi = pi / pi.sum()
    return Pmf(tuple(pi), truncated=True)


# ---------------------------------------------------------------------------
# classification of invariant i.i.d. measures
# ---------------------------------------------------------------------------


VERDICT_INVARIANT = "Invariant"
VERDICT_NOT_INVARIANT = "NotInvariant"
VERDICT_NOT_IN_MREV = "NotInMrev"


@dataclass(frozen=True)
class JEqualsKFamily:
    """Every measure is invariant when box and carrier capacities agree."""


@dataclass(frozen=True)
class TrivialShiftFamily:
    """Support inside {0..floor(min/2)} after reduction: the dynamics act as
    a deterministic shift and the dual equals the measure itself."""

    r_shift: int
    reflected: bool


@dataclass(frozen=True)
class StbGeoFamily:
    """Reduced measure is bipartite geometric with the given parameters."""

    params: StbGeoParams
    r_shift: int
    reflected: bool


Family = Union[JEqualsKFamily, TrivialShiftFamily, StbGeoFamily, None]


@dataclass(frozen=True)
class ClassifyResult:
    verdict: str
    family: Family
    residual: float
    dual: Optional[Pmf]
    detail: str = ""

    @property
    def invariant(self) -> bool:
        return self.verdict == VERDICT_INVARIANT


def _gcd_of(values) -> int:
    g = 0
    for v in values:
        g = math.gcd(g, v)
    return g


def _reduce_measure(J: Capacity, mu: Pmf) -> Tuple[Tuple[float, ...], int, bool]:
    """Shift the support down by r (reflecting first when the support hugs
    the full side); returns (reduced weights, r, reflected)."""
    r = r_val(J, mu)
    reflected = underline_r(mu) != r
    if reflected:
        src = [mu.at(J - a - r) for a in range(int(J) - 2 * r + 1)]
    else:
        src = [mu.at(a + r) for a in range(len(mu) - r)]
    while len(src) > 1 and src[-1] == 0.0:
        src.pop()
    return tuple(src), r, reflected


def _unreduce(weights: Sequence[float], cap: Capacity, r: int,
              reflected: bool, truncated: bool) -> Pmf:
    """Inverse of the reduction on the dual side: shift up by r, reflecting
    within [0, cap] when the original was reflected."""
    shifted = [0.0] * r + list(weights)
    if reflected:
        out = [0.0] * (int(cap) + 1)
        for a, w in enumerate(shifted):
            out[int(cap) - a] = w
        return Pmf(tuple(out), truncated)
    return Pmf(tuple(shifted), truncated)


def _fit_stbgeo(weights: Tuple[float, ...], Jr: Capacity, Kr: Capacity,
                tol: float) -> Optional[StbGeoParams]:
    """Fit the reduced weights to the bipartite geometric family and check
    the capacity/parameter compatibility conditions; None if anything fails."""
    supp = [a for a, w in enumerate(weights) if w > 0]
    mx = supp[-1]
    m = _gcd_of(supp)
    if m == 0:
        return None
    if is_finite(Jr) and mx != Jr:
        return None
    # support must be every multiple of m up to the maximum
    if supp != list(range(0, mx + 1, m)):
        return None
    w0 = weights[0]
    n_pts = len(supp)
    if n_pts == 1:
        return None
    if n_pts == 2:
        alpha, beta = weights[m] / w0, 1.0
    else:
        alpha = math.sqrt(weights[2 * m] / w0)
        beta = weights[m] / (alpha * w0)
    # every weight must match C alpha^x beta^(x mod 2)
    for x in range(n_pts):
        want = w0 * alpha ** x * (beta if x % 2 else 1.0)
        if abs(weights[x * m] - want) > tol:
            return None
    beta_one = abs(beta - 1.0) <= tol
    infinite = not (is_finite(Jr) and is_finite(Kr))
    if infinite and not alpha < 1.0:
        return None
    if beta_one:
        if is_finite(Kr) and Kr % m:
            return None
    else:
        if (is_finite(Jr) and Jr % (2 * m)) or (is_finite(Kr) and Kr % (2 * m)):
            return None
    N = INF if not is_finite(Jr) else Jr // m
    return stbgeo_params(N, alpha, 1.0 if beta_one else beta, m)


def classify_invariant(J: Capacity, K: Capacity, mu: Pmf,
                       tol: float = 1e-9) -> ClassifyResult:
    """Decide whether i.i.d.-mu configurations are invariant under the
    dynamics, and name the family: measures reduce by their distance r to
    the capacity edges (reflecting when the support hugs the full side),
    and the reduced measure must either sit inside the trivially-shifted
    band or be bipartite geometric with compatible parameters.  The verdict
    is cross-validated by the detailed balance residual against the
    reconstructed dual."""
    validate_capacity(J, "J")
    validate_capacity(K, "K")
    if is_finite(J) and mu.max_occupancy() > J:
        raise InvalidPmf(f"support exceeds capacity J={J}")
    if J == K:
        return ClassifyResult(VERDICT_INVARIANT, JEqualsKFamily(), 0.0,
                              Pmf(mu.weights, mu.truncated),
                              "J = K: dynamics are a deterministic shift")
    if not mrev_member(J, K, mu):
        return ClassifyResult(VERDICT_NOT_IN_MREV, None, math.inf, None,
                              "no two-sided canonical dynamics")
    reduced, r, reflected = _reduce_measure(J, mu)
    if reflected and not (is_finite(J) and is_finite(K)):
        return ClassifyResult(VERDICT_NOT_INVARIANT, None, math.inf, None,
                              "reflected support needs both capacities finite")
    Jr = J - 2 * r if is_finite(J) else INF
    Kr = K - 2 * r if is_finite(K) else INF
    mx = max(a for a, w in enumerate(reduced) if w > 0)

    family: Family = None
    nu_reduced: Optional[Tuple[float, ...]] = None
    truncated = mu.truncated
    if mx <= min(Jr, Kr) // 2:
        family = TrivialShiftFamily(r, reflected)
        nu_reduced = reduced
    else:
        params = _fit_stbgeo(reduced, Jr, Kr, tol)
        if params is not None:
            family = StbGeoFamily(params, r, reflected)
            dual_N = INF if not is_finite(Kr) else Kr // params.m
            nu_pmf = stbgeo(dual_N, params.alpha, params.beta, params.m)
            nu_reduced = nu_pmf.weights
            truncated = truncated or nu_pmf.truncated
    if family is None:
        return ClassifyResult(VERDICT_NOT_INVARIANT, None, math.inf, None,
                              "reduced measure fits no invariant family")
    nu = _unreduce(nu_reduced, K, r, reflected, truncated)
    residual = detailed_balance_residual(J, K, mu, nu)
    if residual > tol:
        return ClassifyResult(VERDICT_NOT_INVARIANT, None, residual, None,
                              "reconstructed dual fails detailed balance")
    return ClassifyResult(VERDICT_INVARIANT, family, residual, nu)


# ---------------------------------------------------------------------------
# exact invariance oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleReport:
    deviation: float
    k: int
    joint: np.ndarray
    expected: np.ndarray


def invariance_oracle(J: Capacity, K: Capacity, mu: Pmf, k: int,
                      dual: Optional[Pmf] = None,
                      max_terms: int = 10 ** 7) -> OracleReport:
    """Exact joint law of the first k updated sites when the entering load
    is drawn from the dual measure and the sites are i.i.d. mu, compared to
    the product law.  Invariance holds iff the deviation vanishes."""
    if not isinstance(k, int) or not 1 <= k <= 4:
        raise InvalidParams("oracle supports 1 <= k <= 4 sites")
    nu = dual if dual is not None else dual_measure(J, K, mu)
    A = len(mu)
    w_max = len(nu) + k * max(A - 1, 0)          # loads grow at most A-1 per site
    if is_finite(K):
        w_max = min(w_max, int(K) + 1)
    # updated occupancies can exceed the input support, up to the capacity
    out_A = int(J) + 1 if is_finite(J) else A + w_max
    if (out_A ** k) * w_max > max_terms:
        raise StateSpaceTooLarge(f"{(out_A ** k) * w_max} terms exceed {max_terms}")
    P = np.zeros((1, w_max))
    P[0, : len(nu)] = nu.weights
    for _ in range(k):
        n_t = P.shape[0]
        P2 = np.zeros((n_t * out_A, w_max))
        for x in range(A):
            wx = mu.weights[x]
            if wx == 0.0:
                continue
            for w in range(w_max):
                col = P[:, w]
                if not col.any():
                    continue
                a2, w2 = local_map(J, K, (x, w))
                P2[a2::out_A, w2] += col * wx
        P = P2
    joint = P.sum(axis=1).reshape((out_A,) * k)
    marg = np.zeros(out_A)
    marg[:A] = mu.weights
    expected = marg
    for _ in range(k - 1):
        expected = np.multiply.outer(expected, marg)
    deviation = float(np.abs(joint - expected).max())
    return OracleReport(deviation, k, joint, expected)


# ---------------------------------------------------------------------------
# sampling and parsing
# ---------------------------------------------------------------------------


def sample_pmf(mu: Pmf, rng: np.random.Generator, size: int) -> np.ndarray:
    """Exact inverse-CDF sampling over the finite support."""
    cum = np.cumsum(mu.array())
    idx = np.searchsorted(cum, rng.random(size), side="right")
    return np.minimum(idx, len(mu) - 1).astype(np.int64)


def pmf_from_text(text: str) -> Pmf:
    """Parse ``w0,w1,...``, ``bernoulli:p``, ``uniform:J`` or
    ``stbgeo:N,alpha,beta,m``."""
    t = text.strip()
    if ":" in t:
        name, body = t.split(":", 1)
        name = name.strip().lower()
        if name == "bernoulli":
            return bernoulli(float(body))
        if name == "uniform":
            return uniform(int(body))
        if name == "stbgeo":
            parts = [p.strip() for p in body.split(",")]
            if len(parts) != 4:
                raise InvalidParams("stbgeo spec needs N,alpha,beta,m")
            N = INF if parts[0].lower() in ("inf", "infinity") else int(parts[0])
            return stbgeo(N, float(parts[1]), float(parts[2]), int(parts[3]))
        raise InvalidParams(f"unknown pmf family {name!r}")
    try:
        weights = tuple(float(tok) for tok in t.split(","))
    except ValueError:
        raise InvalidParams(f"cannot parse pmf from {text!r}") from None
    return Pmf(weights)

