"""Randomized end-to-end experiments on stationary box-ball dynamics.

The sampler turns an infinite-lattice law into an exact finite algorithm:
under an invariant i.i.d. measure the loads entering the window are i.i.d.
with the dual law and independent of the window contents, so a block can be
drawn by sampling the initial row and the left-boundary currents and then
evolving deterministically.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from .capacities import Capacity
from .carrier import CarrierPath, sweep_row
from .errors import InvalidParams, TrackedBallAbsent, WindowExceeded
from .evolution import SpaceTimeBlock, current_column
from .lattice import Config, IidInvariant
from .measures import (
    Pmf,
    classify_invariant,
    dual_measure,
    mean_occupancy,
    sample_pmf,
)

_ROLE_IDS = {"window": 1, "currents": 2}


@dataclass(frozen=True)
class RngSpec:
    """Key of a reproducible random substream; distinct replica indices give
    statistically independent streams."""

    master_seed: int
    replica_index: int = 0

    def stream(self, role: str, attempt: int = 0) -> np.random.Generator:
        key = (self.replica_index, _ROLE_IDS[role], attempt)
        return np.random.default_rng(
            np.random.SeedSequence(self.master_seed, spawn_key=key))


def _as_master_seed(rng: Union[int, RngSpec]) -> int:
    return rng.master_seed if isinstance(rng, RngSpec) else int(rng)


# ---------------------------------------------------------------------------
# exact stationary block sampling
# ---------------------------------------------------------------------------


def _evolve_rows(J: Capacity, K: Capacity, eta: np.ndarray,
                 seeds: Sequence[int]) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Rows (eta_t, W_t) for each seed; eta advances by one sweep per seed."""
    rows = []
    for s in seeds:
        w, teta = sweep_row(J, K, eta, int(s))
        rows.append((eta, w))
        eta = teta
    return rows


def sample_stationary_block(J: Capacity, K: Capacity, mu: Pmf, L: int,
                            T_max: int, rng: Union[int, RngSpec],
                            offset: int = 1,
                            ) -> Tuple[SpaceTimeBlock, Dict[str, object]]:
    """Draw a window of i.i.d.-mu sites and i.i.d.-dual left currents and
    evolve deterministically; the block law equals the restriction of the
    stationary dynamics exactly when mu is invariant (a warning is recorded
    in the metadata otherwise)."""
    spec = rng if isinstance(rng, RngSpec) else RngSpec(int(rng))
    result = classify_invariant(J, K, mu)
    meta: Dict[str, object] = {"verdict": result.verdict}
    if result.invariant:
        nu = result.dual
    else:
        nu = dual_measure(J, K, mu)
        meta["warning"] = ("measure is not invariant: the block law is not "
                           "the stationary restriction")
    eta0 = sample_pmf(mu, spec.stream("window"), L)
    currents = tuple(int(c) for c in
                     sample_pmf(nu, spec.stream("currents"), T_max + 1))
    raw = _evolve_rows(J, K, eta0, currents)
    boundary = IidInvariant(currents)
    rows = tuple(
        (Config(offset, tuple(int(v) for v in eta), J, boundary),
         CarrierPath(offset, tuple(int(v) for v in w), currents[t]))
        for t, (eta, w) in enumerate(raw))
    block = SpaceTimeBlock(J, K, rows, currents)
    meta["dual"] = nu
    return block, meta


# ---------------------------------------------------------------------------
# statistical tests
# ---------------------------------------------------------------------------


def _chi2_p(counts: np.ndarray, probs: np.ndarray) -> float:
    """Chi-square goodness-of-fit p-value with low-expectation bins merged
    (expected >= 5 kept, the rest lumped together)."""
    n = counts.sum()
    expected = n * probs
    if n == 0:
        return 1.0
    keep = expected >= 5.0
    if keep.sum() < len(probs):
        rest_c = counts[~keep].sum()
        rest_e = expected[~keep].sum()
        counts = np.append(counts[keep], rest_c)
        expected = np.append(expected[keep], rest_e)
        if expected[-1] == 0.0:
            if rest_c:
                return 0.0
            counts, expected = counts[:-1], expected[:-1]
    if len(counts) < 2:
        return 1.0
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    return float(stats.chi2.sf(chi2, df=len(counts) - 1))


def _tv(counts: np.ndarray, probs: np.ndarray) -> float:
    emp = counts / max(counts.sum(), 1)
    return 0.5 * float(np.abs(emp - probs).sum())


@dataclass(frozen=True)
class InvarianceTestReport:
    marginal_p: float
    pair_p: float
    row_tv: Tuple[float, ...]
    significance: float
    per_replica: Tuple[Dict[str, float], ...]
    passed: bool


def invariance_mc_test(J: Capacity, K: Capacity, mu: Pmf, L: int, T_max: int,
                       replicas: int, rng: Union[int, RngSpec],
                       significance: float = 0.01) -> InvarianceTestReport:
    """Sample stationary blocks and test the final row against the product
    law: marginal and disjoint adjacent-pair chi-square plus per-row total
    variation distances.  Replica p-values are combined by Fisher's method."""
    master = _as_master_seed(rng)
    probs = mu.array()
    A = len(probs)
    pair_probs = np.multiply.outer(probs, probs).ravel()
    reports = []
    tv_rows: List[float] = []
    for rep in range(replicas):
        block, _ = sample_stationary_block(
            J, K, mu, L, T_max, RngSpec(master, rep))
        tvs = []
        for t in range(block.t_max + 1):
            row = block.config(t).array()
            counts = np.bincount(row, minlength=A)[:A]
            tvs.append(_tv(counts, probs))
        last = block.config(block.t_max).array()
        counts = np.bincount(last, minlength=A)[:A]
        p_m = _chi2_p(counts, probs)
        h = len(last) // 2
        pair_idx = last[0:2 * h:2] * A + last[1:2 * h:2]
        p_counts = np.bincount(pair_idx, minlength=A * A)[: A * A]
        p_pair = _chi2_p(p_counts, pair_probs)
        reports.append({"marginal_p": p_m, "pair_p": p_pair,
                        "final_row_tv": tvs[-1]})
        tv_rows.extend(tvs)

    def fisher(ps: List[float]) -> float:
        ps = [max(p, 1e-300) for p in ps]
        stat = -2.0 * sum(math.log(p) for p in ps)
        return float(stats.chi2.sf(stat, df=2 * len(ps)))

    p_m = fisher([r["marginal_p"] for r in reports])
    p_pair = fisher([r["pair_p"] for r in reports])
    return InvarianceTestReport(
        marginal_p=p_m, pair_p=p_pair, row_tv=tuple(tv_rows),
        significance=significance, per_replica=tuple(reports),
        passed=(p_m > significance and p_pair > significance))


@dataclass(frozen=True)
class CurrentIidReport:
    marginal_p: float
    autocorr: float
    autocorr_bound: float
    column: int
    passed: bool


def current_iid_test(block: SpaceTimeBlock, nu_expected: Pmf,
                     column: Optional[int] = None,
                     significance: float = 0.01) -> CurrentIidReport:
    """Test an interior column of carrier loads against the expected dual
    law (marginal chi-square) and bound its lag-1 sample autocorrelation."""
    w0 = block.rows[0][1]
    if column is None:
        column = (w0.offset + w0.end) // 2
    vals = np.asarray(current_column(block, column), dtype=np.int64)
    T = len(vals)
    probs = nu_expected.array()
    counts = np.bincount(vals, minlength=len(probs))
    if len(counts) > len(probs):
        # observed loads beyond the truncation: fold into a zero-prob bin
        probs = np.append(probs, np.zeros(len(counts) - len(probs)))
    p_m = _chi2_p(counts, probs)
    x = vals.astype(float)
    v = x.var()
    if v == 0.0 or T < 3:
        rho = 0.0
    else:
        rho = float(((x[:-1] - x.mean()) * (x[1:] - x.mean())).mean() / v)
    bound = 3.0 / math.sqrt(T)
    return CurrentIidReport(p_m, rho, bound, column,
                            passed=(p_m > significance and abs(rho) <= bound))


# ---------------------------------------------------------------------------
# tagged-particle speed
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpeedEstimate:
    ratio_estimate: float
    std_error: float
    theoretical: float
    t_max: int
    replicas: int
    per_replica: Tuple[Dict[str, float], ...] = field(default_factory=tuple)

    def jsonl_records(self) -> List[Dict[str, object]]:
        recs: List[Dict[str, object]] = [
            {"record": "replica", **r} for r in self.per_replica]
        recs.append({"record": "summary",
                     "ratio_estimate": self.ratio_estimate,
                     "std_error": self.std_error,
                     "theoretical": self.theoretical,
                     "t_max": self.t_max,
                     "replicas": self.replicas})
        return recs


def _track_one_replica(J: Capacity, K: Capacity, mu: Pmf, nu: Pmf,
                       t_max: int, L: int, spec: RngSpec,
                       attempt: int) -> Dict[str, float]:
    """Evolve one sampled window tracking the left-most ball at site >= 1 by
    its queue position; raises WindowExceeded if it reaches the right edge."""
    eta = sample_pmf(mu, spec.stream("window", attempt), L)
    currents = sample_pmf(nu, spec.stream("currents", attempt), t_max)
    nz = np.nonzero(eta)[0]
    if len(nz) == 0:
        raise TrackedBallAbsent("sampled window holds no ball")
    site = int(nz[0])        # 0-based index of lattice site 1 + site
    rank = 1
    x0 = site + 1
    for t in range(t_max):
        seed = int(currents[t])
        w, teta = sweep_row(J, K, eta, seed)
        w_prev = seed if site == 0 else int(w[site - 1])
        pos = w_prev + rank
        if pos <= teta[site]:
            rank = pos
        else:
            p = pos - int(teta[site])
            j = site + 1
            while True:
                if j >= L:
                    raise WindowExceeded("tagged ball reached the window edge")
                if p <= teta[j]:
                    site, rank = j, p
                    break
                p -= int(teta[j])
                j += 1
        eta = teta
    x_final = site + 1
    return {"replica": float(spec.replica_index), "x0": float(x0),
            "x_final": float(x_final), "ratio": x_final / t_max,
            "window": float(L), "attempt": float(attempt)}


def speed_estimate(J: Capacity, K: Capacity, mu: Pmf, t_max: int,
                   replicas: int, rng: Union[int, RngSpec],
                   safety: float = 1.5, max_growth: int = 2,
                   threads: int = 1) -> SpeedEstimate:
    """Monte Carlo estimate of the tagged-particle speed with the window
    sized from the theoretical drift (dual mean over measure mean) and grown
    on demand; aggregation order is fixed so results are independent of the
    thread count."""
    if J == K:
        raise InvalidParams("speed is identically 1 when J = K; nothing to estimate")
    if mu.at(0) == 1.0:
        raise InvalidParams("measure must place mass on nonzero occupancies")
    result = classify_invariant(J, K, mu)
    if not result.invariant:
        raise InvalidParams(f"speed estimation needs an invariant measure, "
                            f"got {result.verdict}")
    nu = result.dual
    theoretical = mean_occupancy(nu) / mean_occupancy(mu)
    master = _as_master_seed(rng)
    L0 = int(math.ceil(safety * (1 + math.ceil(theoretical)) * t_max)) + 8

    def run(rep: int) -> Dict[str, float]:
        L = L0
        for attempt in range(max_growth + 1):
            try:
                return _track_one_replica(
                    J, K, mu, nu, t_max, L, RngSpec(master, rep), attempt)
            except WindowExceeded:
                L *= 2
        raise WindowExceeded(
            f"replica {rep}: ball escaped windows up to {L // 2} cells")

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(run, range(replicas)))
    else:
        records = [run(rep) for rep in range(replicas)]
    ratios = np.array([r["ratio"] for r in records])
    se = float(ratios.std(ddof=1) / math.sqrt(replicas)) if replicas > 1 else 0.0
    return SpeedEstimate(float(ratios.mean()), se, theoretical, t_max,
                         replicas, tuple(records))


def write_jsonl(records: Sequence[Dict[str, object]], path: str) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


def write_report_csv(records: Sequence[Dict[str, object]], path: str) -> None:
    """Flat CSV alternative to the JSON-lines report (one row per record)."""
    keys: List[str] = []
    for rec in records:
        for k in rec:
            if k not in keys:
                keys.append(k)
    with open(path, "w") as fh:
        fh.write(",".join(keys) + "\n")
        for rec in records:
            fh.write(",".join(
                "" if k not in rec else
                (format(rec[k], ".17g") if isinstance(rec[k], float) else str(rec[k]))
                for k in keys) + "\n")
