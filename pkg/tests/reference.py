"""Independent slow references used by the tests.

Everything here is written from the defining integrals with scipy's
adaptive quadrature and a semi-infinite range cut at ``cut / Gamma_0``;
nothing is shared with the library except the parameter containers.
"""
import math

import numpy as np
from scipy import integrate


def g_of(sp):
    h = sp.protocol.harmonics
    w = sp.omega
    return lambda s: float(np.real(sum(v * np.exp(-1j * m * w * s) for m, v in h.items())))


def f1_ref(sp, t):
    """f1 from its derivative Gamma(t) - i delta, integrated analytically per harmonic."""
    out = complex(sp.gamma0, -sp.delta) * t
    for m, G in sp.rates.gamma_harmonics.items():
        if m:
            out += 1j * G * np.exp(-1j * m * sp.omega * t) / (m * sp.omega)
    return out


def W_scaled(sp, s, cut=40.0):
    """W(s) exp(-f1(s)) by truncated adaptive quadrature."""
    g = g_of(sp)
    t0 = s - cut / sp.gamma0
    f = lambda x: math.sqrt(math.pi) * g(x) * np.exp(f1_ref(sp, x) - f1_ref(sp, s))
    return integrate.quad_vec(f, t0, s, epsabs=1e-14, epsrel=1e-12, limit=5000)[0]


def W_ref(sp, tau, cut=40.0):
    return W_scaled(sp, tau, cut) * np.exp(f1_ref(sp, tau))


def A_ref(sp, tau, cut=40.0):
    return -math.sqrt(math.pi) * g_of(sp)(tau) * W_scaled(sp, tau, cut)


def B_ref(sp, tc, td, cut=40.0):
    """Two-photon correction from the nested defining integrals."""
    g = g_of(sp)
    U = sp.kerr
    t0 = tc - cut / sp.gamma0
    h = lambda s: (np.exp(1j * U * (s - tc)) * W_scaled(sp, s, cut) ** 2
                   * np.exp(2 * (f1_ref(sp, s) - f1_ref(sp, tc))))
    inner = integrate.quad_vec(h, t0, tc, epsabs=1e-13, epsrel=1e-10, limit=5000)[0]
    return (-1j * U * math.pi * g(tc + td) * g(tc)
            * np.exp(f1_ref(sp, tc) - f1_ref(sp, tc + td)) * inner)


def sign_changes(x):
    s = np.sign(np.asarray(x))
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))
