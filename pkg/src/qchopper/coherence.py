"""Two-photon correction B and second-order coherences g2_ll, g2_rr.

    B(tc, td) = -i U w(tc + td) w(tc) int_{-inf}^{tc} exp(iU(t' - tc)) W(t')^2 dt'

    g2_ll(tc + td, tc) = |1 + B / (r(tc + td) r(tc))|^2

and g2_rr follows by replacing r with t = 1 + r. The semi-infinite integral
is reduced to one period with ratio exp(-(2 Gamma_0 - 2i delta + iU) T);
W^2 inside it comes from the per-period cache of the envelope module.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _quadrature as quad
from .envelope import PeriodCache, ScatterParams, _df1, _out, _require_coupling
from .protocol import eval_g

__all__ = [
    "CoherenceMap",
    "big_B",
    "g2_ll",
    "g2_rr",
    "coherence_map",
    "nondriven_B",
    "default_tau_d_max",
    "NODE_FLOOR",
]

#: |r| (or |t|) below this flags a g2 sample as sitting on an envelope node
NODE_FLOOR = 1e-6


def _cache(sp: ScatterParams, cache: Optional[PeriodCache], tol: float) -> PeriodCache:
    if cache is not None and cache.with_kerr and cache.sp == sp:
        return cache
    return PeriodCache(sp, tol=tol, kerr_memory=True)


def big_B(sp: ScatterParams, tau_c, tau_d, cache: Optional[PeriodCache] = None,
          tol: float = quad.DEFAULT_TOL):
    """Two-photon correction B(tau_c, tau_d); broadcasts over its arguments."""
    _require_coupling(sp)
    tc, td = np.broadcast_arrays(np.asarray(tau_c, float), np.asarray(tau_d, float))
    if np.any(td < 0):
        raise ValueError("tau_d must be non-negative")
    if sp.kerr == 0.0:
        return _out(np.zeros(tc.shape, dtype=complex))
    c = _cache(sp, cache, tol)
    return _out(_assemble_B(sp, tc, td, c.kerr_memory(tc)))


def _assemble_B(sp: ScatterParams, tc, td, memory):
    late = tc + td
    pref = -1j * sp.kerr * math.pi * eval_g(sp.protocol, late) * eval_g(sp.protocol, tc)
    return pref * np.exp(_df1(sp, tc, late)) * memory


def nondriven_B(delta: float, gamma: float, kerr: float, tau_d):
    """Closed form for constant coupling: r^2 U / (2 delta + 2i Gamma - U) e^{(i delta - Gamma) td}."""
    r = -1j * gamma / (delta + 1j * gamma)
    td = np.asarray(tau_d, dtype=float)
    return _out(r**2 * kerr / (2 * delta + 2j * gamma - kerr) * np.exp((1j * delta - gamma) * td))


def _g2(B, first, second, floor):
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.abs(1.0 + B / (first * second)) ** 2
    flagged = (np.abs(first) < floor) | (np.abs(second) < floor)
    return np.where(flagged, np.inf, val), flagged


def g2_ll(sp: ScatterParams, tau_c, tau_d, cache: Optional[PeriodCache] = None,
          floor: float = NODE_FLOOR, tol: float = quad.DEFAULT_TOL):
    """Reflected-light g2 at (tau_c + tau_d, tau_c); inf on envelope nodes."""
    c = _cache(sp, cache, tol)
    tc, td = np.broadcast_arrays(np.asarray(tau_c, float), np.asarray(tau_d, float))
    B = big_B(sp, tc, td, cache=c)
    val, _ = _g2(B, c.envelope(tc + td), c.envelope(tc), floor)
    return _out(val)


def g2_rr(sp: ScatterParams, tau_c, tau_d, cache: Optional[PeriodCache] = None,
          floor: float = NODE_FLOOR, tol: float = quad.DEFAULT_TOL):
    """Transmitted-light g2; inf where the transmission envelope vanishes."""
    c = _cache(sp, cache, tol)
    tc, td = np.broadcast_arrays(np.asarray(tau_c, float), np.asarray(tau_d, float))
    B = big_B(sp, tc, td, cache=c)
    val, _ = _g2(B, 1.0 + c.envelope(tc + td), 1.0 + c.envelope(tc), floor)
    return _out(val)


@dataclass
class CoherenceMap:
    """B and g2 on a (tau_c, tau_d) grid; rows index tau_c, columns tau_d.

    ``node_mask_ll`` / ``node_mask_rr`` flag samples where one of the
    envelope factors falls below ``node_floor``; the matching g2 entries are
    inf.
    """

    tau_c: np.ndarray
    tau_d: np.ndarray
    B: np.ndarray
    g2_ll: np.ndarray
    g2_rr: np.ndarray
    node_mask_ll: np.ndarray
    node_mask_rr: np.ndarray
    params: ScatterParams
    node_floor: float = NODE_FLOOR
    tol: float = quad.DEFAULT_TOL

    @property
    def node_mask(self) -> np.ndarray:
        return self.node_mask_ll | self.node_mask_rr

    @property
    def node_flag(self) -> np.ndarray:
        """Bit field: 1 = reflected channel flagged, 2 = transmitted channel flagged."""
        return self.node_mask_ll.astype(int) + 2 * self.node_mask_rr.astype(int)

    def metadata(self) -> dict:
        return {
            **self.params.to_dict(),
            "n_tau_c": int(self.tau_c.size),
            "n_tau_d": int(self.tau_d.size),
            "tau_d_max": float(self.tau_d[-1]),
            "node_floor": self.node_floor,
            "quadrature_tol": self.tol,
        }


def default_tau_d_max(sp: ScatterParams) -> float:
    """3 periods for beta >= 1, otherwise 10 / Gamma_0."""
    return 3.0 * sp.period if sp.beta >= 1.0 else 10.0 / sp.gamma0


def coherence_map(sp: ScatterParams, nc: int, nd: int, tau_d_max: Optional[float] = None,
                  floor: float = NODE_FLOOR, tol: float = quad.DEFAULT_TOL,
                  cache: Optional[PeriodCache] = None) -> CoherenceMap:
    """Evaluate B, g2_ll and g2_rr on nc central times x nd delays."""
    if nc < 8 or nd < 8:
        raise ValueError("nc and nd must be at least 8")
    _require_coupling(sp)
    if tau_d_max is None:
        tau_d_max = default_tau_d_max(sp)
    c = _cache(sp, cache, tol)
    T = sp.period
    tc = -0.5 * T + T * np.arange(nc) / nc
    td = np.linspace(0.0, tau_d_max, nd)
    TC, TD = np.meshgrid(tc, td, indexing="ij")
    if sp.kerr == 0.0:
        B = np.zeros(TC.shape, dtype=complex)
    else:
        B = _assemble_B(sp, TC, TD, c.kerr_memory(tc)[:, None])
    r_c = c.envelope(tc)[:, None]
    r_late = c.envelope(TC + TD)
    ll, mask_ll = _g2(B, r_late, r_c, floor)
    rr, mask_rr = _g2(B, 1.0 + r_late, 1.0 + r_c, floor)
    return CoherenceMap(tc, td, B, ll, rr, mask_ll, mask_rr, sp, floor, tol)
