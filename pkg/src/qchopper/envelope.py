"""Single-photon Floquet envelopes of the driven waveguide-cavity system.

All times and rates are in units with hbar = v = 1. The central quantities
are

    f1(t)  = (Gamma_0 - i delta) t + i sum_{m != 0} Gamma_m e^{-i m Omega t} / (m Omega)
    w(t)   = sqrt(pi) g(t) exp(-f1(t))
    W(t)   = int_{-inf}^{t} sqrt(pi) g(t') exp(f1(t')) dt'
    A(t)   = -w(t) W(t)

with reflection envelope r = A and transmission envelope t = 1 + A.

The semi-infinite integral W is reduced to one drive period using
``exp(f1(t - T)) = rho exp(f1(t))`` with ``rho = exp(-(Gamma_0 - i delta) T)``,
so ``W = I / (1 - rho)`` where ``I`` is a composite Gauss-Legendre integral
over ``[t - T, t]``. Numerically we never form ``exp(f1)`` on its own but the
bounded combination ``W(t) exp(-f1(t))`` (the "cavity amplitude").
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from . import _quadrature as quad
from .errors import IllConditionedError, ZeroCouplingError
from .protocol import (
    DriveProtocol,
    RateSpectrum,
    eval_g,
    eval_g_dot,
    eval_gamma,
    rate_spectrum,
)

__all__ = [
    "ScatterParams",
    "EnvelopeGrid",
    "PeriodCache",
    "f1",
    "little_w",
    "big_w",
    "envelope_A",
    "envelope_grid",
    "asymptotic_A",
    "find_nodes",
    "adiabaticity",
    "MAX_CONDITION",
]

SQRT_PI = math.sqrt(math.pi)

#: largest accepted 1/|1 - rho| for the periodic tail reduction
MAX_CONDITION = 1e10


@dataclass(frozen=True)
class ScatterParams:
    """Detuning, Kerr strength and drive of one scattering configuration."""

    protocol: DriveProtocol
    delta: float = 0.0
    kerr: float = 0.0
    rates: RateSpectrum = field(init=False, repr=False)

    def __post_init__(self):
        if not (math.isfinite(self.delta) and math.isfinite(self.kerr)):
            raise ValueError("delta and kerr must be finite")
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "kerr", float(self.kerr))
        object.__setattr__(self, "rates", rate_spectrum(self.protocol))

    @property
    def omega(self) -> float:
        return self.protocol.omega

    @property
    def period(self) -> float:
        return self.protocol.period

    @property
    def gamma0(self) -> float:
        return self.rates.gamma0

    @property
    def beta(self) -> float:
        return self.rates.beta

    def with_kerr(self, kerr: float) -> "ScatterParams":
        return ScatterParams(self.protocol, self.delta, kerr)

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol.to_dict(),
            "delta": self.delta,
            "kerr": self.kerr,
            "gamma0": self.gamma0,
            "beta": self.beta,
        }


def _require_coupling(sp: ScatterParams) -> None:
    if sp.rates.degenerate:
        raise ZeroCouplingError("Gamma_0 = 0: coupling vanishes identically")


def _osc_phase(sp: ScatterParams, t) -> np.ndarray:
    """Real oscillating part of f1: -(2/Omega) Im sum_{m>0} Gamma_m z^m / m."""
    t = np.asarray(t, dtype=float)
    gh = sp.rates.gamma_harmonics
    out = np.zeros(t.shape)
    kmax = max((m for m in gh if m > 0), default=0)
    if kmax == 0:
        return out
    z = np.exp(-1j * sp.omega * t)
    acc = np.zeros(t.shape, dtype=complex)
    for m in range(kmax, 0, -1):
        acc = (acc + gh.get(m, 0.0) / m) * z
    return -2.0 / sp.omega * acc.imag


def _df1(sp: ScatterParams, t_from, t_to) -> np.ndarray:
    """f1(t_from) - f1(t_to), formed from differences to keep precision."""
    t_from = np.asarray(t_from, dtype=float)
    t_to = np.asarray(t_to, dtype=float)
    lin = complex(sp.gamma0, -sp.delta)
    return lin * (t_from - t_to) + (_osc_phase(sp, t_from) - _osc_phase(sp, t_to))


def _tail_factor(sp: ScatterParams, rate: complex) -> complex:
    """1 / (1 - exp(-rate T)), checked for conditioning."""
    rho = np.exp(-rate * sp.period)
    cond = 1.0 / abs(1.0 - rho)
    if not cond <= MAX_CONDITION:
        raise IllConditionedError("periodic tail reduction is ill-conditioned", cond)
    return 1.0 / (1.0 - rho)


def _out(x):
    x = np.asarray(x)
    return x[()] if x.ndim == 0 else x


def f1(sp: ScatterParams, t):
    """Single-photon Floquet phase f1(t), complex."""
    _require_coupling(sp)
    t = np.asarray(t, dtype=float)
    return _out(complex(sp.gamma0, -sp.delta) * t + _osc_phase(sp, t))


def little_w(sp: ScatterParams, tau_c):
    """w(tau) = sqrt(pi) g(tau) exp(-f1(tau))."""
    _require_coupling(sp)
    tau_c = np.asarray(tau_c, dtype=float)
    return _out(SQRT_PI * eval_g(sp.protocol, tau_c) * np.exp(-f1(sp, tau_c)))


# -- direct one-period window quadrature -----------------------------------

def _window_cavity(sp: ScatterParams, tau: np.ndarray, panels: int, order: int) -> np.ndarray:
    """W(tau) exp(-f1(tau)) from the window [tau - T, tau], for fixed panels."""
    x, w = quad.unit_rule(order)
    T = sp.period
    h = T / panels
    offsets = (np.arange(panels)[:, None] + x[None, :]).ravel() * h - T
    weights = np.tile(w, panels) * h
    fac = _tail_factor(sp, complex(sp.gamma0, -sp.delta))
    flat = tau.ravel()
    out = np.empty(flat.shape, dtype=complex)
    chunk = max(1, 2**21 // offsets.size)
    for s in range(0, flat.size, chunk):
        tt = flat[s:s + chunk, None]
        nodes = tt + offsets[None, :]
        integrand = SQRT_PI * eval_g(sp.protocol, nodes) * np.exp(_df1(sp, nodes, tt))
        out[s:s + chunk] = integrand @ weights
    return (out * fac).reshape(tau.shape)


def _rate_max(sp: ScatterParams) -> float:
    return sum(abs(v) for v in sp.rates.gamma_harmonics.values())


def _start_panels(sp: ScatterParams) -> int:
    support = max(sp.protocol.support, 1)
    lin = math.hypot(_rate_max(sp), sp.delta)
    return quad.initial_panels(lin, sp.period, support)


def _cavity_direct(sp: ScatterParams, tau, tol: float, order: int) -> np.ndarray:
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    val, _, _ = quad.refine(
        lambda P: _window_cavity(sp, tau, P, order), tol, _start_panels(sp)
    )
    return val


def big_w(sp: ScatterParams, tau_c, tol: float = quad.DEFAULT_TOL,
          order: int = quad.DEFAULT_ORDER):
    """Semi-infinite integral W(tau_c) via periodic reduction.

    Raises IllConditionedError when Gamma_0 T is so small that the geometric
    factor 1/(1 - rho) amplifies rounding beyond ``MAX_CONDITION``.
    """
    _require_coupling(sp)
    tau = np.asarray(tau_c, dtype=float)
    cav = _cavity_direct(sp, tau, tol, order).reshape(tau.shape)
    return _out(cav * np.exp(f1(sp, tau)))


def envelope_A(sp: ScatterParams, tau_c, tol: float = quad.DEFAULT_TOL,
               order: int = quad.DEFAULT_ORDER):
    """Reflection envelope A(tau_c) = -w W (transmission is 1 + A)."""
    _require_coupling(sp)
    tau = np.asarray(tau_c, dtype=float)
    cav = _cavity_direct(sp, tau, tol, order).reshape(tau.shape)
    return _out(-SQRT_PI * eval_g(sp.protocol, tau) * cav)


# -- per-period cache --------------------------------------------------------

def _linear_recurrence(a: np.ndarray, b: np.ndarray, x0: complex) -> np.ndarray:
    """x[p+1] = a[p] x[p] + b[p]."""
    x = np.empty(a.size + 1, dtype=complex)
    x[0] = x0
    acc = x0
    for p in range(a.size):
        acc = a[p] * acc + b[p]
        x[p + 1] = acc
    return x


class PeriodCache:
    """Cavity amplitude (and optionally the Kerr memory integral) on one period.

    The period [-T/2, T/2] is cut into ``panels`` equal panels. Values at the
    panel boundaries are obtained by the periodic tail reduction plus a
    cumulative sweep; values at arbitrary times add a Gauss-Legendre integral
    over the partial panel. The panel count is doubled until boundary values
    change by less than ``tol``.

    Stored quantities are normalized so that they are bounded and periodic:

    * ``cavity(t)   = W(t) exp(-f1(t))``
    * ``kerr_memory(t) = exp(-2 f1(t)) int_{-inf}^t exp(iU(s-t)) W(s)^2 ds``
    """

    def __init__(self, sp: ScatterParams, tol: float = quad.DEFAULT_TOL,
                 order: int = quad.DEFAULT_ORDER, kerr_memory: bool = False):
        _require_coupling(sp)
        self.sp = sp
        self.tol = tol
        self.order = order
        self.with_kerr = kerr_memory
        x, _ = quad.unit_rule(order)
        self._x = x

        def build(P):
            self._build(P)
            parts = [self._cav_b]
            if kerr_memory:
                parts.append(self._q_b)
            return np.concatenate(parts)

        def compare(coarse, fine):
            n = coarse.size // (2 if kerr_memory else 1)
            nf = fine.size // (2 if kerr_memory else 1)
            f = fine.reshape(-1, nf)[:, ::2].ravel()
            return coarse, f

        _, self.panels, self.change = quad.refine(
            build, tol, _start_panels(sp), compare=compare
        )

    # boundaries b_p = -T/2 + p h, p = 0..P
    def _build(self, P: int) -> None:
        sp = self.sp
        T = sp.period
        h = T / P
        x, w = quad.unit_rule(self.order)
        b = -0.5 * T + h * np.arange(P + 1)
        nodes = b[:-1, None] + h * x[None, :]
        right = b[1:, None]
        integrand = SQRT_PI * eval_g(sp.protocol, nodes) * np.exp(_df1(sp, nodes, right))
        J = h * (integrand @ w)
        decay = np.exp(_df1(sp, b[:-1], b[1:]))
        fac = _tail_factor(sp, complex(sp.gamma0, -sp.delta))
        sweep = _linear_recurrence(decay, J, 0.0)
        cav_b = _linear_recurrence(decay, J, sweep[-1] * fac)
        self.h, self.b = h, b
        self._cav_b = cav_b
        if self.with_kerr:
            U = sp.kerr
            cav_nodes = self.cavity(nodes)
            qint = np.exp(1j * U * (nodes - right) + 2.0 * _df1(sp, nodes, right)) * cav_nodes**2
            JQ = h * (qint @ w)
            decayQ = np.exp(-1j * U * h + 2.0 * _df1(sp, b[:-1], b[1:]))
            rate = complex(2.0 * sp.gamma0, -2.0 * sp.delta + U)
            facQ = _tail_factor(sp, rate)
            sweepQ = _linear_recurrence(decayQ, JQ, 0.0)
            self._q_b = _linear_recurrence(decayQ, JQ, sweepQ[-1] * facQ)

    def _locate(self, t):
        T = self.sp.period
        t = np.asarray(t, dtype=float)
        u = np.mod(t + 0.5 * T, T) - 0.5 * T
        p = np.clip(np.floor((u - self.b[0]) / self.h).astype(int), 0, self.b.size - 2)
        return u, p

    def cavity(self, t) -> np.ndarray:
        """W(t) exp(-f1(t)), periodic in t."""
        sp = self.sp
        u, p = self._locate(t)
        x, w = quad.unit_rule(self.order)
        left = self.b[p]
        span = u - left
        s = left[..., None] + span[..., None] * x
        loc = SQRT_PI * eval_g(sp.protocol, s) * np.exp(_df1(sp, s, u[..., None]))
        partial = span * (loc @ w)
        return np.exp(_df1(sp, left, u)) * self._cav_b[p] + partial

    def kerr_memory(self, t) -> np.ndarray:
        if not self.with_kerr:
            raise RuntimeError("cache built without kerr_memory=True")
        sp = self.sp
        U = sp.kerr
        u, p = self._locate(t)
        x, w = quad.unit_rule(self.order)
        left = self.b[p]
        span = u - left
        s = left[..., None] + span[..., None] * x
        uu = u[..., None]
        loc = np.exp(1j * U * (s - uu) + 2.0 * _df1(sp, s, uu)) * self.cavity(s) ** 2
        partial = span * (loc @ w)
        head = np.exp(-1j * U * span + 2.0 * _df1(sp, left, u)) * self._q_b[p]
        return head + partial

    def envelope(self, t) -> np.ndarray:
        """A(t) = -sqrt(pi) g(t) * cavity(t)."""
        t = np.asarray(t, dtype=float)
        return -SQRT_PI * eval_g(self.sp.protocol, t) * self.cavity(t)


# -- grids, asymptotics, nodes ------------------------------------------------

@dataclass
class EnvelopeGrid:
    """Envelope sampled on ``[-T/2, T/2)`` (left end included)."""

    tau_c: np.ndarray
    A: np.ndarray
    r: np.ndarray
    t: np.ndarray
    g1_rr: np.ndarray
    g1_ll: np.ndarray
    unitarity_defect: float
    params: ScatterParams
    tol: float = quad.DEFAULT_TOL
    adiabaticity: Optional[np.ndarray] = None
    evaluate: Optional[Callable] = field(default=None, repr=False, compare=False)

    @property
    def omega(self) -> float:
        return self.params.omega

    @property
    def period(self) -> float:
        return self.params.period

    def metadata(self) -> dict:
        return {
            **self.params.to_dict(),
            "n_samples": int(self.tau_c.size),
            "quadrature_tol": self.tol,
            "unitarity_defect": self.unitarity_defect,
        }


def adiabaticity(sp: ScatterParams, t):
    """|g'/g| / sqrt(delta^2 + Gamma(t)^2); inf where g vanishes."""
    t = np.asarray(t, dtype=float)
    g = np.asarray(eval_g(sp.protocol, t))
    gd = np.asarray(eval_g_dot(sp.protocol, t))
    gam = np.asarray(eval_gamma(sp.rates, t))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.abs(gd / g) / np.hypot(sp.delta, gam)
    ratio = np.where(g == 0, np.inf, ratio)
    return _out(ratio)


def envelope_grid(sp: ScatterParams, n_samples: int, tol: float = quad.DEFAULT_TOL,
                  order: int = quad.DEFAULT_ORDER, diagnostics: bool = False,
                  cache: Optional[PeriodCache] = None) -> EnvelopeGrid:
    """Sample A, r, t and g1 on ``n_samples`` points of one period.

    The unitarity defect is the periodic trapezoidal mean of |r|^2 + |t|^2
    minus one; it converges spectrally because the envelope is smooth and
    periodic.
    """
    if n_samples < 8:
        raise ValueError("n_samples must be at least 8")
    _require_coupling(sp)
    if cache is None:
        cache = PeriodCache(sp, tol=tol, order=order)
    T = sp.period
    tau = -0.5 * T + T * np.arange(n_samples) / n_samples
    A = cache.envelope(tau)
    r = A.copy()
    t = 1.0 + A
    g1_ll = np.abs(r) ** 2
    g1_rr = np.abs(t) ** 2
    defect = float(np.mean(g1_ll + g1_rr) - 1.0)
    return EnvelopeGrid(
        tau_c=tau, A=A, r=r, t=t, g1_rr=g1_rr, g1_ll=g1_ll,
        unitarity_defect=defect, params=sp, tol=tol,
        adiabaticity=adiabaticity(sp, tau) if diagnostics else None,
        evaluate=cache.envelope,
    )


def asymptotic_A(kind: str, beta: float, tau_c, omega: float = 1.0):
    """Fast-drive reference envelopes (beta >> 1, delta = 0).

    on_off: -(2/3)(1 + cos Omega tau); sign_change: -(1/beta) sin 2 Omega tau.
    """
    phase = omega * np.asarray(tau_c, dtype=float)
    if kind == "on_off":
        return _out(-(2.0 / 3.0) * (1.0 + np.cos(phase)))
    if kind == "sign_change":
        return _out(-np.sin(2.0 * phase) / beta)
    raise ValueError(f"no asymptotic form for protocol kind {kind!r}")


def find_nodes(grid: EnvelopeGrid, tol: Optional[float] = None) -> list[float]:
    """Zeros of A(tau_c) within one period, sorted, in ``[-T/2, T/2)``.

    Local minima of |A| on the (cyclic) grid are refined: by bisection on the
    projection of A onto its local direction when that projection changes
    sign, otherwise by bounded minimization of |A|^2 (touching zeros such as
    the double zero of the on-off protocol). A refined point counts as a node
    when |A| < tol, by default 1e-6 * max |A|.
    """
    A = grid.A
    amax = float(np.max(np.abs(A))) if A.size else 0.0
    if amax == 0.0:
        return []
    if tol is None:
        tol = 1e-6 * amax
    evaluate = grid.evaluate
    if evaluate is None:
        re = np.interp
        tt, T = grid.tau_c, grid.period
        ext_t = np.concatenate([tt - T, tt, tt + T])
        ext_A = np.concatenate([A, A, A])

        def evaluate(x):
            return re(x, ext_t, ext_A.real) + 1j * re(x, ext_t, ext_A.imag)

    def absA(x):
        return float(np.abs(np.asarray(evaluate(np.asarray(x, dtype=float)))))

    T = grid.period
    n = A.size
    a = np.abs(A)
    dtau = T / n
    found = []
    for i in range(n):
        if not (a[i] <= a[i - 1] and a[i] <= a[(i + 1) % n]):
            continue
        lo, hi = grid.tau_c[i] - dtau, grid.tau_c[i] + dtau
        res = optimize.minimize_scalar(
            lambda x: absA(x) ** 2, bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-13 * T, "maxiter": 2000},
        )
        root = float(res.x)
        # simple zeros: polish by bisection on the projection of A onto its
        # local direction, which changes sign across the node
        A_lo, A_hi = complex(evaluate(np.float64(lo))), complex(evaluate(np.float64(hi)))
        direction = A_hi - A_lo
        if direction != 0:
            phase = np.conj(direction) / abs(direction)

            def proj(x, phase=phase):
                return float((complex(evaluate(np.float64(x))) * phase).real)

            p_lo, p_hi = proj(lo), proj(hi)
            if p_lo * p_hi < 0:
                cand = optimize.brentq(proj, lo, hi, xtol=1e-14 * T, rtol=1e-15)
                if absA(cand) <= absA(root):
                    root = cand
        if absA(root) < tol:
            x = float(np.mod(root + 0.5 * T, T) - 0.5 * T)
            if 0.5 * T - x < 1e-9 * T:
                x -= T
            found.append(x)
    found.sort()
    nodes: list[float] = []
    for x in found:
        if nodes and abs(x - nodes[-1]) < 1e-7 * T:
            continue
        nodes.append(x)
    if len(nodes) > 1 and abs(nodes[0] + T - nodes[-1]) < 1e-7 * T:
        nodes.pop()
    return nodes
