"""Truncated Floquet-space T-matrix for the one-photon sector.

The cavity level l = 1 is dressed by the waveguide continuum. In Floquet
space (harmonic indices m in [-M, M]) the self-energy is the Toeplitz block

    Sigma[m, m'] = -i pi sum_n g_{m-n} g_{n-m'} = -i Gamma_{m-m'}

and the dressed Green's function at the incoming photon energy (measured
from the cavity frequency) is the inverse of

    D[m, m'] = (delta + m Omega) delta_{mm'} - Sigma[m, m'].

The reflected sideband amplitudes are
``r(m') = -i pi sum_{n, n'} g_{m'-n} G[n, n'] g_{n'}`` and the transmitted
ones ``t(m') = delta_{m'0} + r(m')``. The -i pi prefactor is fixed by the
constant-coupling limit r = -i Gamma / (delta + i Gamma).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .envelope import ScatterParams
from .errors import ChopperError, CutoffError
from .protocol import DriveProtocol

__all__ = [
    "FloquetBlock",
    "SidebandAmplitudes",
    "self_energy_block",
    "dressed_green",
    "single_photon_sidebands",
    "sideband_unitarity",
    "envelope_fourier",
]

MAX_DENSE_CUTOFF = 128


class SingularBlockError(ChopperError, ArithmeticError):
    pass


@dataclass(frozen=True)
class FloquetBlock:
    cutoff: int
    entries: np.ndarray

    def __post_init__(self):
        n = 2 * self.cutoff + 1
        if self.entries.shape != (n, n):
            raise ValueError(f"expected {(n, n)} block, got {self.entries.shape}")
        if not np.all(np.isfinite(self.entries)):
            raise ValueError("Floquet block has non-finite entries")

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.cutoff, self.cutoff + 1)

    def __getitem__(self, mm):
        m, mp = mm
        return self.entries[m + self.cutoff, mp + self.cutoff]


@dataclass(frozen=True)
class SidebandAmplitudes:
    """Sideband amplitudes r(m'), t(m') for m' in ``orders``."""

    cutoff: int
    orders: np.ndarray
    r: np.ndarray
    t: np.ndarray

    @property
    def r_m(self) -> dict[int, complex]:
        return {int(m): complex(v) for m, v in zip(self.orders, self.r)}

    @property
    def t_m(self) -> dict[int, complex]:
        return {int(m): complex(v) for m, v in zip(self.orders, self.t)}

    def reconstruct(self, tau_c, omega: float) -> np.ndarray:
        """sum_m' r(m') exp(-i m' Omega tau)."""
        tau = np.asarray(tau_c, dtype=float)
        ph = np.exp(-1j * omega * np.multiply.outer(tau, self.orders))
        return ph @ self.r


def _check_cutoff(p: DriveProtocol, M: int) -> None:
    if M < 0 or int(M) != M:
        raise CutoffError(f"cutoff must be a non-negative integer, got {M!r}")
    if M < p.support:
        raise CutoffError(f"cutoff {M} below the protocol's harmonic support {p.support}")


def self_energy_block(p: DriveProtocol, M: int) -> FloquetBlock:
    """Sigma[m, m'] = -i pi sum_n g_{m-n} g_{n-m'} over all integers n."""
    _check_cutoff(p, M)
    g = p.harmonics
    conv = {}
    for k in range(-2 * M, 2 * M + 1):
        conv[k] = sum(g.get(k - n, 0.0) * g.get(n, 0.0) for n in g)
    idx = np.arange(-M, M + 1)
    diff = idx[:, None] - idx[None, :]
    entries = -1j * math.pi * np.vectorize(lambda k: conv[k], otypes=[complex])(diff)
    return FloquetBlock(M, entries)


def _green_inverse(sp: ScatterParams, M: int) -> np.ndarray:
    sigma = self_energy_block(sp.protocol, M).entries
    idx = np.arange(-M, M + 1)
    return np.diag(sp.delta + idx * sp.omega).astype(complex) - sigma


def dressed_green(sp: ScatterParams, M: int) -> FloquetBlock:
    """Dense inverse of (delta + m Omega) - Sigma on the truncated Floquet space."""
    D = _green_inverse(sp, M)
    cond = np.linalg.cond(D)
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularBlockError(f"Floquet block singular (condition {cond:.3e})")
    return FloquetBlock(M, np.linalg.inv(D))


def _coupling_vector(p: DriveProtocol, lo: int, hi: int) -> np.ndarray:
    return np.array([p.harmonics.get(n, 0.0) for n in range(lo, hi + 1)], dtype=complex)


def single_photon_sidebands(sp: ScatterParams, M: int, solver: str = "dense") -> SidebandAmplitudes:
    """Reflected/transmitted sideband amplitudes from the dressed Green's function.

    ``solver`` is ``"dense"`` (explicit inverse) or ``"banded"`` (banded LU
    solve of D c = g, preferable for M above ``MAX_DENSE_CUTOFF``).
    """
    _check_cutoff(sp.protocol, M)
    K = sp.protocol.support
    gvec = _coupling_vector(sp.protocol, -M, M)
    if solver == "dense":
        c = dressed_green(sp, M).entries @ gvec
    elif solver == "banded":
        D = _green_inverse(sp, M)
        bw = 2 * K
        n = D.shape[0]
        ab = np.zeros((2 * bw + 1, n), dtype=complex)
        for k in range(-bw, bw + 1):
            diag = np.diagonal(D, offset=k)
            if k >= 0:
                ab[bw - k, k:] = diag
            else:
                ab[bw - k, :n + k] = diag
        c = scipy.linalg.solve_banded((bw, bw), ab, gvec)
    else:
        raise ValueError(f"unknown solver {solver!r}")
    # outgoing orders reach K beyond the cutoff
    orders = np.arange(-M - K, M + K + 1)
    inner = np.arange(-M, M + 1)
    gmat = np.array(
        [[sp.protocol.harmonics.get(int(mp - n), 0.0) for n in inner] for mp in orders],
        dtype=complex,
    )
    r = -1j * math.pi * (gmat @ c)
    t = r + (orders == 0)
    return SidebandAmplitudes(M, orders, r, t)


def sideband_unitarity(sb: SidebandAmplitudes) -> float:
    """sum_m' (|t(m')|^2 + |r(m')|^2) - 1."""
    return float(np.sum(np.abs(sb.t) ** 2 + np.abs(sb.r) ** 2) - 1.0)


def envelope_fourier(A: np.ndarray, orders) -> np.ndarray:
    """Fourier coefficients a_m = <A e^{i m Omega tau}> of samples on [-T/2, T/2).

    ``A`` must be sampled uniformly with the left endpoint included.
    """
    n = A.size
    coeffs = np.fft.ifft(A)
    orders = np.asarray(orders)
    return coeffs[np.mod(orders, n)] * np.where(orders % 2, -1.0, 1.0)
