"""Carrier construction for a configuration window in every capacity regime.

The carrier load after each site satisfies W_n = F2(eta_n, W_{n-1}).  Three
routes are provided: the direct left-to-right sweep (the defining recursion),
seed detection (finding a window position where the load is forced), and the
reflected-path transform for J < K, which doubles as a vectorised kernel for
large windows.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .capacities import INF, Capacity, validate_capacity
from .errors import FloorTooLarge, InvalidCell, InvalidParams, ParityViolation, Undetermined
from .lattice import (
    Config,
    Detect,
    IidInvariant,
    PathEncoding,
    SeededCarrier,
    ZeroPad,
    path_encode,
)
from .local_rules import local_map


# ---------------------------------------------------------------------------
# carrier paths
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CarrierPath:
    """Loads W_n for consecutive sites; left_seed is W at offset-1 when known.

    ``approximate`` marks burn-in results for J < K = infinity under Detect
    mode; exact work uses a supplied-seed mode instead.
    """

    offset: int
    values: Tuple[int, ...]
    left_seed: Optional[int]
    approximate: bool = False

    def __len__(self) -> int:
        return len(self.values)

    @property
    def end(self) -> int:
        return self.offset + len(self.values) - 1

    def at(self, n: int) -> int:
        if n == self.offset - 1 and self.left_seed is not None:
            return self.left_seed
        if self.offset <= n <= self.end:
            return self.values[n - self.offset]
        raise KeyError(f"carrier value at {n} not covered")


class SeedRule(enum.Enum):
    ZERO = "zero"                 # occupancy at the floor forces the load down
    FULL = "full"                 # occupancy at J - floor forces the load up
    FLUCTUATION = "fluctuation"   # path average moved by more than K - J
    RUNNING_MAX = "running_max"   # burn-in running maximum (approximate only)
    SUPPLIED = "supplied"         # J = K: the window itself is the carrier


@dataclass(frozen=True)
class SeedReport:
    position: int
    forced_value: int
    rule: SeedRule


def verify_carrier(J: Capacity, K: Capacity, c: Config, w: CarrierPath) -> bool:
    """Check W_n = F2(eta_n, W_{n-1}) at every site where both are covered."""
    start = w.offset if w.left_seed is not None else w.offset + 1
    for n in range(start, w.end + 1):
        if n < c.offset or n > c.end:
            continue
        prev = w.at(n - 1)
        if local_map(J, K, (c.at(n), prev))[1] != w.at(n):
            return False
    return True


# ---------------------------------------------------------------------------
# direct sweep
# ---------------------------------------------------------------------------


def sweep(J: Capacity, K: Capacity, c: Config, seed: int,
          drain: bool = False) -> Tuple[CarrierPath, Config]:
    """Left-to-right application of the local map with the given entering load.

    Returns the carrier path and the updated configuration on the same
    window.  With ``drain=True`` the sweep continues over empty cells past
    the window end until the carrier empties, extending the output (used for
    zero-padded configurations so mass is conserved).
    """
    if not (0 <= seed <= K):
        raise InvalidCell(f"seed {seed} outside [0, {K}]")
    w = seed
    loads: List[int] = []
    out: List[int] = []
    for v in c.cells:
        v2, w = local_map(J, K, (v, w))
        out.append(v2)
        loads.append(w)
    if drain:
        while w > 0:
            v2, w = local_map(J, K, (0, w))
            out.append(v2)
            loads.append(w)
    cfg = Config(c.offset, tuple(out), c.J, c.boundary)
    return CarrierPath(c.offset, tuple(loads), seed), cfg


# ---------------------------------------------------------------------------
# reflected-path transform for J < K
# ---------------------------------------------------------------------------


def pitman_M(p: PathEncoding, gap: Capacity, left_init: int) -> Tuple[int, ...]:
    """Clamped running maximum of the two-point average, in doubled units.

    ``gap`` is 2(K - J) (INF for unbounded carriers), ``left_init`` the
    doubled M value at offset-1.  The recursion
    M_n = min(max(M_{n-1}, D~_n), D~_n + gap) is total, so any integral
    left_init of the correct parity is accepted.
    """
    if gap != INF and (not isinstance(gap, int) or gap <= 0 or gap % 2):
        raise InvalidParams(f"gap must be a positive even integer or INF, got {gap!r}")
    dtil = p.dtilde()
    m = left_init
    out = []
    if gap == INF:
        for s in dtil:
            m = m if m > s else s
            out.append(m)
    else:
        for s in dtil:
            m = min(max(m, s), s + gap)
            out.append(m)
    return tuple(out)


def carrier_from_path(p: PathEncoding, m2, J: Capacity) -> Tuple[int, ...]:
    """Extract loads W_n = (M2_n - D_n + J)/2; raises on parity mismatch."""
    out = []
    for m, d in zip(m2, p.D):
        num = m - d + J
        if num % 2:
            raise ParityViolation("carrier extraction non-integral; check left_init parity")
        if num < 0:
            raise ParityViolation("negative load extracted; left_init below the window")
        out.append(num // 2)
    return tuple(out)


def _clamp_scan(v_init: int, u: np.ndarray, c: int) -> np.ndarray:
    """All prefixes of v -> clip(v + u_n, 0, c) via map-composition doubling.

    Clamp-with-shift maps compose into clamp-with-shift maps, so the scan
    needs only O(log n) vectorised passes.
    """
    n = len(u)
    t = u.astype(np.int64, copy=True)
    lo = np.zeros(n, dtype=np.int64)
    hi = np.full(n, c, dtype=np.int64)
    s = 1
    while s < n:
        t_o, lo_o, hi_o = t[s:], lo[s:], hi[s:]
        nt = t[:-s] + t_o
        nlo = np.clip(lo[:-s] + t_o, lo_o, hi_o)
        nhi = np.clip(hi[:-s] + t_o, lo_o, hi_o)
        t = np.concatenate([t[:s], nt])
        lo = np.concatenate([lo[:s], nlo])
        hi = np.concatenate([hi[:s], nhi])
        s *= 2
    return np.clip(v_init + t, lo, hi)


def sweep_row(J: Capacity, K: Capacity, eta: np.ndarray,
              seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorised sweep of one row: returns (W, T eta) as int64 arrays.

    J < K goes through the reflected-path form, J = K is a shift; J > K
    falls back to the scalar recursion (only used at desk scale).
    """
    eta = np.asarray(eta, dtype=np.int64)
    n = len(eta)
    if n == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    if J == K:
        w = eta.copy()
        teta = np.concatenate([[seed], eta[:-1]])
        return w, teta
    if J < K:
        d = np.cumsum(2 * J - 4 * eta)
        dtil = d - (J - 2 * eta)          # (D_{n-1} + D_n) / 2
        m_init = 2 * seed - J
        if K == INF:
            m2 = np.maximum.accumulate(np.maximum(dtil, m_init))
        else:
            gap2 = 2 * (K - J)
            v1 = min(max(m_init - dtil[0], 0), gap2)
            u = np.concatenate([[0], dtil[:-1] - dtil[1:]])
            m2 = _clamp_scan(v1, u, gap2) + dtil
            m2[0] = v1 + dtil[0]
        num = m2 - d + J
        if (num & 1).any():
            raise ParityViolation("carrier extraction non-integral")
        w = num >> 1
        w_prev = np.concatenate([[seed], w[:-1]])
        return w, eta + w_prev - w
    # J > K: scalar recursion with a lookup table when J is finite
    w = np.empty(n, dtype=np.int64)
    teta = np.empty(n, dtype=np.int64)
    b = seed
    for i in range(n):
        a = int(eta[i])
        dep = min(b, J - a)
        pick = a if a < K - b else K - b
        teta[i] = a + dep - pick
        b = b - dep + pick
        w[i] = b
    return w, teta


# ---------------------------------------------------------------------------
# seed detection
# ---------------------------------------------------------------------------


def detect_seed(J: Capacity, K: Capacity, c: Config, floor: int = 0) -> Optional[SeedReport]:
    """Find a window position where every admissible carrier is forced.

    J > K: an occupancy hitting the floor band edge pins the load there.
    J < K < inf: once the path average fluctuates by more than K - J the
    reflected path snaps to a known level.  J < K = inf: no finite window
    forces the carrier, returns None.  J = K: the window itself supplies the
    carrier.
    """
    validate_capacity(J, "J")
    validate_capacity(K, "K")
    if floor < 0 or min(J, K) <= 2 * floor:
        raise FloorTooLarge(f"need min(J, K) > 2*floor, got {min(J, K)} <= {2 * floor}")
    if J == K:
        return SeedReport(c.offset, c.cells[0], SeedRule.SUPPLIED)
    if J > K:
        for i, v in enumerate(c.cells):
            if v == floor:
                return SeedReport(c.offset + i, floor, SeedRule.ZERO)
            if v == J - floor:
                return SeedReport(c.offset + i, K - floor, SeedRule.FULL)
        return None
    if K == INF:
        return None
    # J < K < inf: scan the doubled two-point average for a fluctuation
    # exceeding 2(K - J); the first exceedance is set by a fresh extreme.
    gap2 = 2 * (K - J)
    dtil = path_encode(c).dtilde()
    lo = hi = dtil[0]
    for i, s in enumerate(dtil):
        lo = min(lo, s)
        hi = max(hi, s)
        if hi - lo > gap2:
            eta_i = c.cells[i]
            if s == hi:  # new maximum: M2 = D~, so W = eta
                return SeedReport(c.offset + i, eta_i, SeedRule.FLUCTUATION)
            return SeedReport(c.offset + i, eta_i + K - J, SeedRule.FLUCTUATION)
    return None


# ---------------------------------------------------------------------------
# canonical carrier per boundary mode
# ---------------------------------------------------------------------------


def _resolve_seed(c: Config, t: int = 0) -> Optional[int]:
    """Entering load implied by the boundary mode at time step t, or None."""
    b = c.boundary
    if isinstance(b, ZeroPad):
        return 0
    if isinstance(b, SeededCarrier):
        if b.per_step is not None:
            return b.per_step[t]
        return b.seed
    if isinstance(b, IidInvariant):
        return b.currents[t]
    return None


def canonical_carrier(J: Capacity, K: Capacity, c: Config, t: int = 0,
                      burn_in_frac: float = 0.25) -> CarrierPath:
    """Window restriction of the canonical carrier under the window's
    boundary mode.

    Seeded modes sweep from the supplied load.  Detect mode propagates
    forward from a forced position (the restriction starts there and the
    value left of it is reported unknown); if no position is forced the
    window is consistent with an alternating/degenerate tail and
    ``Undetermined`` is raised.  For J < K = inf under Detect, the running
    maximum is started after a burn-in prefix and the result is flagged
    approximate.
    """
    if J != c.J:
        raise ValueError(f"config carries J={c.J}, got J={J}")
    validate_capacity(K, "K")
    seed = _resolve_seed(c, t)
    if seed is not None:
        if seed > K:
            raise InvalidCell(f"boundary seed {seed} exceeds K={K}")
        return sweep(J, K, c, seed)[0]

    mode = c.boundary
    assert isinstance(mode, Detect)
    if J < K == INF:
        # canonical M is the all-time running maximum, not windowreadable:
        # run it from the window start and discard a burn-in prefix.
        p = path_encode(c)
        dtil = p.dtilde()
        burn = min(len(c) - 1, int(len(c) * burn_in_frac))
        m2 = np.maximum.accumulate(np.asarray(dtil, dtype=np.int64))
        loads = carrier_from_path(p, m2.tolist(), J)
        return CarrierPath(c.offset + burn, loads[burn:], None, approximate=True)
    report = detect_seed(J, K, c, mode.floor)
    if report is None:
        raise Undetermined(
            "no forced carrier value in window: consistent with an "
            "alternating/degenerate tail")
    i = report.position - c.offset
    w = report.forced_value
    loads = [w]
    for v in c.cells[i + 1:]:
        w = local_map(J, K, (v, w))[1]
        loads.append(w)
    return CarrierPath(report.position, tuple(loads), None)


def essential_boundary(J: Capacity, K: Capacity, c: Config,
                       w: CarrierPath) -> Optional[int]:
    """Largest window index N with min{J,K} <= eta_n + W_{n-1} <= max{J,K}
    for every covered n <= N; None when the first covered cell already
    fails (the infinite-system value would be below the window)."""
    lo, hi = min(J, K), max(J, K)
    start = w.offset if w.left_seed is not None else w.offset + 1
    best: Optional[int] = None
    for n in range(max(start, c.offset), min(w.end, c.end) + 1):
        if lo <= c.at(n) + w.at(n - 1) <= hi:
            best = n
        else:
            break
    return best
