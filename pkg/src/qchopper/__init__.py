"""Floquet scattering of few-photon light on a cavity with periodically driven coupling."""
from .protocol import (
    DriveProtocol, RateSpectrum, make_on_off, make_sign_change, make_constant,
    make_custom, eval_g, eval_g_dot, eval_gamma, rate_spectrum,
)
from .envelope import (
    ScatterParams, EnvelopeGrid, PeriodCache, f1, little_w, big_w, envelope_A,
    envelope_grid, asymptotic_A, find_nodes, adiabaticity,
)
from .coherence import (
    CoherenceMap, big_B, g2_ll, g2_rr, coherence_map, nondriven_B,
)
from .floquet_matrix import (
    FloquetBlock, SidebandAmplitudes, self_energy_block, dressed_green,
    single_photon_sidebands, sideband_unitarity, envelope_fourier,
)

__version__ = "0.1.0"
