"""Circuit parameters to model parameters.

A Josephson ring modulator threaded by half a flux quantum mixes the line
flux Phi_X, the transmon flux Phi_Y and the pumped mode Phi_Z. To cubic
order

    H = lam Phi_X Phi_Y Phi_Z + sum_s mu_s Phi_s^2 - Ip Phi_Z / 2

and the pump pins Phi_Z(t) = Ip(t) / (4 mu_Z). The transmon is a Kerr cavity
with omega_c = sqrt(8 EJ EC) / hbar and U = -EC / hbar, and the line couples
with g(t) = lam f_k0 sqrt(2 EC / EJ) Ip(t) / (4 mu_Z).

This is the only unit-aware module. ``hbar``, ``phi0`` and the line velocity
``v`` are fields of :class:`CircuitParams`; everything handed downstream is
in rates with hbar = v = 1.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Optional

import numpy as np

from .envelope import ScatterParams
from .errors import CircuitError
from .protocol import DriveProtocol, rate_spectrum

__all__ = [
    "PumpWaveform",
    "CircuitParams",
    "ModelParams",
    "ValidityCheck",
    "TransmonLimitWarning",
    "jrm_coefficients",
    "transmon_params",
    "coupling_waveform",
    "model_params",
    "validity_report",
    "jrm_energy",
    "jrm_cubic_energy",
    "TRANSMON_RATIO",
    "SCALE_RATIO",
]

TRANSMON_RATIO = 20.0
SCALE_RATIO = 20.0


class TransmonLimitWarning(UserWarning):
    """EJ / EC too small for the transmon (Kerr cavity) description."""


@dataclass(frozen=True)
class PumpWaveform:
    """Periodic pump current Ip(t) = sum_m I_m exp(-i m Omega t)."""

    harmonics: Mapping[int, complex]
    omega: float
    kind: str = "custom"

    def __post_init__(self):
        h = {int(m): complex(v) for m, v in self.harmonics.items() if v != 0}
        for m, v in h.items():
            if abs(h.get(-m, 0) - v.conjugate()) > 1e-12 * max(1.0, abs(v)):
                raise CircuitError("pump current harmonics must describe a real waveform")
        object.__setattr__(self, "harmonics", MappingProxyType(h))
        if not self.omega > 0:
            raise CircuitError("pump frequency must be positive")

    @classmethod
    def on_off(cls, amplitude: float, omega: float) -> "PumpWaveform":
        """I0 (1 + cos Omega t)."""
        return cls({0: amplitude, 1: amplitude / 2, -1: amplitude / 2}, omega, "on_off")

    @classmethod
    def cosine(cls, amplitude: float, omega: float) -> "PumpWaveform":
        """I0 cos Omega t."""
        return cls({1: amplitude / 2, -1: amplitude / 2}, omega, "sign_change")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = sum(v * np.exp(-1j * m * self.omega * t) for m, v in self.harmonics.items())
        return np.real(out) if self.harmonics else np.zeros_like(t)

    def peak(self) -> float:
        t = np.linspace(0.0, 2 * math.pi / self.omega, 513)
        return float(np.max(np.abs(self(t))))


@dataclass(frozen=True)
class CircuitParams:
    """Physical circuit description.

    Energies are in any unit consistent with ``hbar`` (angular frequency =
    energy / hbar); inductances in flux^2 / energy; currents in energy /
    flux. ``f_k0`` is the line coupling coefficient at the carrier, an input
    rather than something derived here. ``omega0`` is the carrier angular
    frequency; the detuning is omega0 - omega_c.
    """

    EJp: float
    La: float
    Lb: float
    EJ: float
    EC: float
    f_k0: float
    Ip: PumpWaveform
    omega0: float
    Phi: Optional[float] = None
    hbar: float = 1.0
    phi0: float = 1.0
    v: float = 1.0

    def __post_init__(self):
        if self.Phi is None:
            object.__setattr__(self, "Phi", self.phi0 / 2)
        for name in ("EJp", "La", "Lb", "EJ", "EC", "hbar", "phi0", "v"):
            if not getattr(self, name) > 0:
                raise CircuitError(f"{name} must be positive")


@dataclass(frozen=True)
class ModelParams:
    """Model-level parameters in rates (hbar = v = 1).

    ``g_scale`` is the signed factor turning the pump current into the
    coupling; the protocol uses its magnitude, since a global sign of g(t)
    drops out of every observable.
    """

    lam: float
    mu_x: float
    mu_y: float
    mu_z: float
    omega_c: float
    kerr: float
    delta: float
    g_scale: float
    protocol: DriveProtocol = field(repr=False)

    @property
    def g0(self) -> float:
        h = self.protocol.harmonics
        if self.protocol.kind == "sign_change":
            return 2 * abs(h.get(1, 0))
        return abs(h.get(0, 0))

    def scatter_params(self) -> ScatterParams:
        return ScatterParams(self.protocol, self.delta, self.kerr)

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam, "mu_X": self.mu_x, "mu_Y": self.mu_y, "mu_Z": self.mu_z,
            "omega_c": self.omega_c, "U": self.kerr, "delta": self.delta,
            "g_scale": self.g_scale, "g0": self.g0, "protocol": self.protocol.to_dict(),
        }


def _check_flux(cp: CircuitParams) -> None:
    if not math.isclose(cp.Phi, cp.phi0 / 2, rel_tol=1e-12):
        raise CircuitError(
            f"flux {cp.Phi:g} is not the optimal point phi0/2 = {cp.phi0 / 2:g}; "
            "the cubic expansion only holds there"
        )


def jrm_coefficients(cp: CircuitParams) -> dict[str, float]:
    """lambda and mu_{X,Y,Z} of the cubic ring Hamiltonian."""
    _check_flux(cp)
    p0 = cp.phi0
    mu_z = math.sqrt(2) * math.pi**2 * cp.EJp / p0**2
    return {
        "lambda": -2 * math.sqrt(2) * math.pi**3 * cp.EJp / p0**3,
        "mu_X": mu_z + 1 / (2 * cp.La),
        "mu_Y": mu_z + 1 / (2 * cp.Lb),
        "mu_Z": mu_z,
    }


def transmon_params(cp: CircuitParams, ratio: float = TRANSMON_RATIO) -> dict[str, float]:
    """Cavity frequency and Kerr shift of the transmon, in rates."""
    if cp.EJ / cp.EC < ratio:
        warnings.warn(
            f"EJ/EC = {cp.EJ / cp.EC:.3g} < {ratio:g}: outside the transmon limit",
            TransmonLimitWarning, stacklevel=2,
        )
    return {
        "omega_c": math.sqrt(8 * cp.EJ * cp.EC) / cp.hbar,
        "U": -cp.EC / cp.hbar,
    }


def _g_scale(cp: CircuitParams, coeffs: dict[str, float]) -> float:
    """Factor from pump current to coupling, in sqrt(rate) units.

    The transmon flux is Phi_Y = phi0 sqrt(2 EC / EJ) (b + b^+); the phi0
    is invisible in normalized units but carries the dimension otherwise.
    """
    zpf = cp.phi0 * math.sqrt(2 * cp.EC / cp.EJ)
    g_energy = coeffs["lambda"] * cp.f_k0 * zpf / (4 * coeffs["mu_Z"])
    return g_energy / (cp.hbar * math.sqrt(cp.v))


def coupling_waveform(cp: CircuitParams, coeffs: Optional[dict[str, float]] = None) -> DriveProtocol:
    """g(t) as a drive protocol: the pump harmonics scaled by |g_scale|."""
    if coeffs is None:
        coeffs = jrm_coefficients(cp)
    scale = abs(_g_scale(cp, coeffs))
    h = {m: scale * v for m, v in cp.Ip.harmonics.items()}
    kind = cp.Ip.kind if h else "constant"
    return DriveProtocol(h, cp.Ip.omega, label=f"circuit({cp.Ip.kind})", kind=kind)


def model_params(cp: CircuitParams) -> ModelParams:
    coeffs = jrm_coefficients(cp)
    tr = transmon_params(cp)
    return ModelParams(
        lam=coeffs["lambda"], mu_x=coeffs["mu_X"], mu_y=coeffs["mu_Y"], mu_z=coeffs["mu_Z"],
        omega_c=tr["omega_c"], kerr=tr["U"], delta=cp.omega0 - tr["omega_c"],
        g_scale=_g_scale(cp, coeffs), protocol=coupling_waveform(cp, coeffs),
    )


@dataclass(frozen=True)
class ValidityCheck:
    name: str
    value: float
    threshold: float
    satisfied: bool
    informational: bool = False
    note: str = ""


def validity_report(cp: CircuitParams, mp: ModelParams, sp: Optional[ScatterParams] = None,
                    ratio: float = SCALE_RATIO) -> list[ValidityCheck]:
    """Scale separations assumed by the model; a report, never an error."""
    if sp is None:
        sp = mp.scatter_params()
    w0 = cp.omega0
    gamma0 = rate_spectrum(sp.protocol).gamma0
    checks = []

    def add(name, num, den, note=""):
        val = math.inf if den == 0 else abs(num / den)
        checks.append(ValidityCheck(name, val, ratio, val >= ratio, note=note))

    add("omega0/Omega", w0, sp.omega)
    add("omega0/Gamma0", w0, gamma0)
    add("omega0/|delta|", w0, sp.delta, note="delta = 0 counts as satisfied")
    checks.append(ValidityCheck("EJ/EC", cp.EJ / cp.EC, TRANSMON_RATIO,
                                cp.EJ / cp.EC >= TRANSMON_RATIO))
    phi_z = cp.Ip.peak() / (4 * mp.mu_z) / cp.phi0 if cp.Ip.harmonics else 0.0
    checks.append(ValidityCheck("max Phi_Z/phi0", phi_z, 1.0 / ratio, phi_z <= 1.0 / ratio,
                                informational=True, note="cubic expansion premise"))
    return checks


def jrm_energy(cp: CircuitParams, phi_x, phi_y, phi_z, ip: float = 0.0):
    """Full ring energy (decoupled modes dropped) at fluxes Phi_X, Phi_Y, Phi_Z."""
    a, b, c = (math.pi * np.asarray(p, dtype=float) / cp.phi0 for p in (phi_x, phi_y, phi_z))
    ext = math.pi * cp.Phi / (2 * cp.phi0)
    ring = -4 * cp.EJp * (math.cos(ext) * np.cos(a) * np.cos(b) * np.cos(c)
                          + math.sin(ext) * np.sin(a) * np.sin(b) * np.sin(c))
    return (ring + np.asarray(phi_x) ** 2 / (2 * cp.La) + np.asarray(phi_y) ** 2 / (2 * cp.Lb)
            - ip * np.asarray(phi_z) / 2)


def jrm_cubic_energy(cp: CircuitParams, phi_x, phi_y, phi_z, ip: float = 0.0):
    """Cubic expansion of :func:`jrm_energy`, including its constant -2 sqrt(2) EJ'."""
    k = jrm_coefficients(cp)
    x, y, z = (np.asarray(p, dtype=float) for p in (phi_x, phi_y, phi_z))
    return (-2 * math.sqrt(2) * cp.EJp + k["lambda"] * x * y * z
            + k["mu_X"] * x**2 + k["mu_Y"] * y**2 + k["mu_Z"] * z**2 - ip * z / 2)
