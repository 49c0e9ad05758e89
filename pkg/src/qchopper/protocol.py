"""Periodic coupling protocols and their decay-rate harmonics.

A drive protocol stores the coupling ``g(t) = sum_m g_m exp(-i m Omega t)``
as a sparse map of Fourier harmonics. The decay rate of the cavity is
``Gamma(t) = pi g(t)**2``; its harmonics are the discrete self-convolution
of the coupling harmonics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import ProtocolError

__all__ = [
    "DriveProtocol",
    "RateSpectrum",
    "make_on_off",
    "make_sign_change",
    "make_constant",
    "make_custom",
    "eval_g",
    "eval_g_dot",
    "eval_gamma",
    "rate_spectrum",
]

# tolerance for the reality check g_{-m} == conj(g_m), relative to max |g_m|
_REALITY_RTOL = 1e-12


def _freeze(harmonics: Mapping[int, complex]) -> Mapping[int, complex]:
    clean = {}
    for m, val in sorted(harmonics.items()):
        if int(m) != m:
            raise ProtocolError(f"harmonic index {m!r} is not an integer")
        val = complex(val)
        if not (math.isfinite(val.real) and math.isfinite(val.imag)):
            raise ProtocolError(f"harmonic {m} is not finite")
        if val != 0:
            clean[int(m)] = val
    return MappingProxyType(clean)


def _check_hermitian(harmonics: Mapping[int, complex], what: str) -> None:
    scale = max((abs(v) for v in harmonics.values()), default=0.0)
    tol = _REALITY_RTOL * max(scale, 1.0)
    for m, val in harmonics.items():
        partner = harmonics.get(-m, 0.0)
        if abs(partner - val.conjugate()) > tol:
            raise ProtocolError(
                f"{what} harmonics are not Hermitian: "
                f"[{-m}]={partner!r} but conj([{m}])={val.conjugate()!r}"
            )


def _harmonic_sum(harmonics: Mapping[int, complex], omega: float, t) -> np.ndarray:
    """Real-valued sum_m c_m exp(-i m omega t) for Hermitian ``c``."""
    t = np.asarray(t, dtype=float)
    out = np.full(t.shape, complex(harmonics.get(0, 0.0)).real)
    kmax = max((m for m in harmonics if m > 0), default=0)
    if kmax == 0:
        return out
    z = np.exp(-1j * omega * t)
    # Horner on the positive harmonics; the negative half is the conjugate
    acc = np.zeros(t.shape, dtype=complex)
    for m in range(kmax, 0, -1):
        acc = (acc + harmonics.get(m, 0.0)) * z
    return out + 2.0 * acc.real


@dataclass(frozen=True)
class DriveProtocol:
    """Time-periodic coupling strength g(t).

    Attributes
    ----------
    harmonics : mapping int -> complex
        Fourier components ``g_m`` of ``g(t) = sum_m g_m exp(-i m Omega t)``.
    omega : float
        Drive angular frequency. For the constant protocol this is only a
        nominal value used to define the period of sampling grids.
    label : str
        Free-form tag.
    kind : str
        One of ``on_off``, ``sign_change``, ``constant``, ``custom``.
    """

    harmonics: Mapping[int, complex]
    omega: float
    label: str = ""
    kind: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "harmonics", _freeze(self.harmonics))
        if not (math.isfinite(self.omega) and self.omega > 0):
            raise ProtocolError(f"drive frequency must be positive, got {self.omega!r}")
        _check_hermitian(self.harmonics, "coupling")

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega

    @property
    def support(self) -> int:
        """Largest |m| with a nonzero harmonic."""
        return max((abs(m) for m in self.harmonics), default=0)

    def __call__(self, t):
        return eval_g(self, t)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "label": self.label,
            "omega": self.omega,
            "harmonics": [[m, v.real, v.imag] for m, v in self.harmonics.items()],
        }


@dataclass(frozen=True)
class RateSpectrum:
    """Harmonics of the decay rate Gamma(t) = pi g(t)^2.

    ``beta`` is the normalized drive speed Omega / Gamma_0. A zero coupling
    gives ``gamma0 == 0``; ``degenerate`` is then set and ``beta`` is inf.
    """

    gamma_harmonics: Mapping[int, complex]
    gamma0: float
    omega: float
    beta: float = field(init=False)
    period: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "gamma_harmonics", _freeze(self.gamma_harmonics))
        _check_hermitian(self.gamma_harmonics, "rate")
        object.__setattr__(self, "period", 2.0 * math.pi / self.omega)
        beta = self.omega / self.gamma0 if self.gamma0 > 0 else math.inf
        object.__setattr__(self, "beta", beta)

    @property
    def degenerate(self) -> bool:
        return not self.gamma0 > 0

    @property
    def support(self) -> int:
        return max((abs(m) for m in self.gamma_harmonics), default=0)

    def __call__(self, t):
        return eval_gamma(self, t)


def make_on_off(g0: float, omega: float) -> DriveProtocol:
    """``g(t) = g0 (1 + cos Omega t)``, quenched to zero once per period."""
    if not g0 > 0 or not omega > 0:
        raise ProtocolError("on-off protocol needs g0 > 0 and omega > 0")
    h = {0: g0, 1: g0 / 2, -1: g0 / 2}
    return DriveProtocol(h, omega, label=f"on_off(g0={g0:g})", kind="on_off")


def make_sign_change(g0: float, omega: float) -> DriveProtocol:
    """``g(t) = g0 cos Omega t``."""
    if not g0 > 0 or not omega > 0:
        raise ProtocolError("sign-change protocol needs g0 > 0 and omega > 0")
    h = {1: g0 / 2, -1: g0 / 2}
    return DriveProtocol(h, omega, label=f"sign_change(g0={g0:g})", kind="sign_change")


def make_constant(g0: float, omega: float = 1.0) -> DriveProtocol:
    """Time-independent coupling.

    ``omega`` is a reference frequency that only fixes the period used by
    sampling grids; it does not enter the physics.
    """
    if not g0 >= 0:
        raise ProtocolError("constant coupling must be non-negative")
    return DriveProtocol({0: g0}, omega, label=f"constant(g0={g0:g})", kind="constant")


def make_custom(triples, omega: float, label: str = "custom") -> DriveProtocol:
    """Build a protocol from ``(m, re, im)`` triples.

    Both members of every ``+-m`` pair must be given; the reality of g(t)
    is checked, not imposed.
    """
    h: dict[int, complex] = {}
    for m, re, im in triples:
        m = int(m)
        if m in h:
            raise ProtocolError(f"harmonic {m} given twice")
        h[m] = complex(re, im)
    return DriveProtocol(h, omega, label=label, kind="custom")


def eval_g(p: DriveProtocol, t):
    """Coupling strength at time(s) ``t``."""
    out = _harmonic_sum(p.harmonics, p.omega, t)
    return float(out) if out.ndim == 0 else out


def eval_g_dot(p: DriveProtocol, t):
    """Time derivative of g(t)."""
    deriv = {m: -1j * m * p.omega * v for m, v in p.harmonics.items() if m}
    out = _harmonic_sum(deriv, p.omega, t)
    return float(out) if out.ndim == 0 else out


def eval_gamma(rs: RateSpectrum, t):
    """Decay rate Gamma(t) from its harmonics."""
    out = _harmonic_sum(rs.gamma_harmonics, rs.omega, t)
    return float(out) if out.ndim == 0 else out


def rate_spectrum(p: DriveProtocol) -> RateSpectrum:
    """Gamma_m = pi * sum_n g_{m-n} g_n."""
    gam: dict[int, complex] = {}
    for m1, a in p.harmonics.items():
        for m2, b in p.harmonics.items():
            gam[m1 + m2] = gam.get(m1 + m2, 0.0) + math.pi * a * b
    # symmetrize away rounding so the Hermitian check is exact
    sym = {}
    for m, v in gam.items():
        partner = gam.get(-m, 0.0)
        sym[m] = 0.5 * (v + np.conj(partner))
    gamma0 = float(sym.get(0, 0.0).real)
    if 0 in sym:
        sym[0] = complex(gamma0)
    return RateSpectrum(sym, gamma0, p.omega)
