import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import scatter
from qchopper.envelope import PeriodCache, ScatterParams
from qchopper.errors import LatticeError, MemoryBudgetError, WrapAroundError, ZeroCouplingError
from qchopper.oracle import (
    LatticeConfig,
    SectorState,
    default_lattice,
    extract_envelope,
    run_single_photon,
    run_two_photon,
    single_photon_envelope,
    step_halving_ratio,
    two_photon_g2,
)
from qchopper.protocol import make_constant

PI = math.pi


def window_A(run):
    m = run.window_mask()
    return run.emission_time[m], run.reflected[m]


def lattice_kw(**over):
    kw = dict(n_sites=64, dx=0.5, dt=0.1, pulse_center_freq=0.0, pulse_bandwidth=1.0,
              pulse_duration=16.0, pulse_start=7.0, total_time=30.0, settle=1.0, cavity_site=4)
    kw.update(over)
    return kw


# -- configuration ----------------------------------------------------------------

def test_lattice_config_accepts_valid():
    lc = LatticeConfig(**lattice_kw())
    assert lc.length == 32.0
    assert lc.dk == pytest.approx(2 * PI / 32)
    assert lc.n_steps == 300
    assert lc.positions()[lc.cavity_site] == 0
    k = lc.momenta()
    assert k.size == 64 and np.allclose(np.diff(k), lc.dk)


@pytest.mark.parametrize("over", [dict(dt=0.2), dict(n_sites=4), dict(cavity_site=64),
                                  dict(pulse_start=5.0), dict(total_time=40.0),
                                  dict(total_time=24.0), dict(pulse_bandwidth=0.0)])
def test_lattice_config_rejects(over):
    with pytest.raises(LatticeError):
        LatticeConfig(**lattice_kw(**over))


def test_readout_window():
    lc = LatticeConfig(**lattice_kw())
    assert lc.readout_window() == (14.0, 17.0)
    assert lc.to_dict()["n_sites"] == 64


@pytest.mark.parametrize("kind,beta", [("on_off", 1.0), ("sign_change", 0.3), ("constant", 1.0)])
def test_default_lattice_shape(kind, beta):
    sp = scatter(kind, beta)
    lc = default_lattice(sp)
    assert lc.n_sites % 2 == 1 and abs(lc.n_sites - 4096) <= 1
    assert lc.dt == pytest.approx(lc.dx / 32)
    lo, hi = lc.readout_window()
    if kind != "constant":
        assert hi - lo >= 2 * sp.period * 0.99
    two = default_lattice(sp, sector="two")
    assert abs(two.n_sites - 512) <= 1
    fine = default_lattice(sp, refine=2)
    assert fine.length == pytest.approx(lc.length)
    assert fine.dx == pytest.approx(lc.dx / 2, rel=1e-3)


def test_sector_state_norm_and_symmetry():
    s = SectorState(one=np.array([0.6, 0.0]), cavity=0.8j)
    assert s.norm == pytest.approx(1.0)
    assert s.symmetric
    P = np.array([[0.5, 0.1], [0.2, 0.5]])
    two = SectorState(pair=P, pair_cavity=np.zeros(2), double=0.0)
    assert not two.symmetric
    assert two.norm == pytest.approx(0.55)


# -- envelope folding ---------------------------------------------------------------

def test_fold_flat_series():
    t = np.linspace(0, 3 * 2 * PI, 3000)
    fe = extract_envelope(t, np.full(t.size, 0.2 - 0.1j), 1.0, n_bins=32)
    assert np.allclose(fe.A, 0.2 - 0.1j, atol=1e-14)
    assert np.all(fe.stderr < 1e-12)
    assert fe.counts.sum() == t.size


def test_fold_recovers_periodic_function():
    # a smooth periodic series with noise; the local line leaves a curvature
    # bias of order f'' h^2 / 12, so bins must be narrow
    rng = np.random.default_rng(3)
    omega = 1.3
    t = np.sort(rng.uniform(0, 5 * 2 * PI / omega, 20000))
    f = lambda x: np.exp(1j * omega * x) + 0.3 * np.cos(2 * omega * x)
    noisy = f(t) + 1e-3 * (rng.standard_normal(t.size) + 1j * rng.standard_normal(t.size))
    fe = extract_envelope(t, noisy, omega, n_bins=100)
    err = np.abs(fe.A - f(fe.tau_c))
    assert np.max(err / fe.stderr) < 5
    assert np.max(err) < 1e-3


def test_fold_rejects_short_window():
    t = np.linspace(0, 3.0, 100)
    with pytest.raises(LatticeError):
        extract_envelope(t, np.ones(t.size), 1.0)
    t = np.linspace(0, 2 * PI, 20)
    with pytest.raises(LatticeError):
        extract_envelope(t, np.ones(t.size), 1.0, n_bins=64)


@given(st.floats(0.2, 5), st.floats(-PI, PI))
@settings(max_examples=20)
def test_fold_phase_covariance(omega, c):
    # folding a time-shifted harmonic only shifts its phase
    t = np.linspace(0, 4 * 2 * PI / omega, 4000)
    fe = extract_envelope(t, np.exp(1j * (omega * t + c)), omega, n_bins=64)
    assert np.allclose(fe.A, np.exp(1j * (omega * fe.tau_c + c)), atol=2e-3)


# -- single photon ----------------------------------------------------------------

@pytest.fixture(scope="module")
def constant_run():
    return run_single_photon(scatter("constant", 1.0), default_lattice(scatter("constant", 1.0),
                                                                        n_sites=1023))


def test_constant_reflects_on_resonance(constant_run):
    _, r = window_A(constant_run)
    assert np.max(np.abs(r + 1)) < 1e-4
    assert constant_run.norm_drift < 1e-8
    assert constant_run.guard_norm < 1e-6


def test_constant_detuned_matches_lorentzian():
    sp = scatter("constant", 1.0, delta=0.7)
    run = run_single_photon(sp, default_lattice(sp, n_sites=1023))
    _, r = window_A(run)
    G = sp.gamma0
    assert np.max(np.abs(r + 1j * G / (sp.delta + 1j * G))) < 1e-4


def test_even_site_count_phase_error():
    # an even count leaves one unpaired momentum at the band edge; the level
    # shift it causes shows up as a phase error that halves with N
    sp = scatter("constant", 1.0)
    base = default_lattice(sp, n_sites=1023)
    errs = []
    for n in (1024, 2048):
        lc = dataclasses.replace(base, n_sites=n, dx=base.length / n, dt=base.length / n / 32,
                                 cavity_site=int(math.ceil(base.cavity_site * n / base.n_sites)))
        _, r = window_A(run_single_photon(sp, lc))
        errs.append(np.max(np.abs(r + 1)))
    assert errs[0] > 1e-4
    assert errs[0] / errs[1] == pytest.approx(2.0, rel=0.05)


def test_odd_site_counts_agree():
    sp = scatter("on_off", 1.0)
    a = run_single_photon(sp, default_lattice(sp, n_sites=1023))
    b = run_single_photon(sp, default_lattice(sp, n_sites=1025))
    cache = PeriodCache(sp)
    devs = [np.max(np.abs(r - cache.envelope(t))) for t, r in (window_A(a), window_A(b))]
    assert devs[0] == pytest.approx(devs[1], rel=0.02)


@pytest.mark.parametrize("kind,beta", [("on_off", 1.0), ("sign_change", 0.5)])
def test_oracle_tracks_envelope(kind, beta):
    sp = scatter(kind, beta)
    run = run_single_photon(sp, default_lattice(sp, n_sites=2047))
    t, r = window_A(run)
    dev = np.max(np.abs(r - PeriodCache(sp).envelope(t)))
    # first-order band-edge error at this resolution
    assert dev < 2e-2
    assert run.norm_drift < 1e-8


def test_on_off_transparent_at_quench():
    sp = scatter("on_off", 1.0)
    fe = single_photon_envelope(run_single_photon(sp, default_lattice(sp, n_sites=2047)), 64)
    edge = np.argmin(fe.tau_c)
    assert abs(fe.A[edge]) < 0.05
    assert np.max(np.abs(fe.A)) > 0.5


def test_sign_change_fold_is_half_periodic():
    sp = scatter("sign_change", 0.5)
    fe = single_photon_envelope(run_single_photon(sp, default_lattice(sp, n_sites=2047)), 64)
    assert np.max(np.abs(fe.A[:32] - fe.A[32:])) < 1e-2


def test_halving_dx_halves_deviation():
    sp = scatter("sign_change", 0.5)
    cache = PeriodCache(sp)
    devs = []
    for refine in (1, 2):
        t, r = window_A(run_single_photon(sp, default_lattice(sp, n_sites=1023, refine=refine,
                                                              steps_per_site=16)))
        devs.append(np.max(np.abs(r - cache.envelope(t))))
    assert devs[0] / devs[1] == pytest.approx(2.0, rel=0.05)


@pytest.mark.slow
@pytest.mark.parametrize("kind,beta", [("on_off", 1.0), ("sign_change", 0.5)])
def test_bandwidth_independence(kind, beta):
    # narrow and wide pulse on the same ring, sized for the narrow one
    sp = scatter(kind, beta)
    base = default_lattice(sp)
    bw = base.pulse_bandwidth
    extra = 6 / (bw / 2) - 6 / bw
    n = (base.n_sites + int(math.ceil(4 * extra / base.dx)) + 1) | 1
    narrow = dataclasses.replace(base, n_sites=n, pulse_bandwidth=bw / 2,
                                 pulse_start=base.pulse_start + extra,
                                 pulse_duration=base.pulse_duration + 2 * extra,
                                 total_time=base.total_time + 4 * extra)
    wide = dataclasses.replace(narrow, pulse_bandwidth=bw)
    fa = single_photon_envelope(run_single_photon(sp, wide))
    fb = single_photon_envelope(run_single_photon(sp, narrow))
    se = np.maximum(fa.stderr, fb.stderr)
    assert np.all(np.abs(fa.A - fb.A) < se)


def test_wraparound_detected():
    sp = scatter("on_off", 1.0)
    lc = default_lattice(sp, n_sites=1023)
    with pytest.raises(WrapAroundError):
        run_single_photon(sp, lc, n_steps=lc.n_steps // 2)


def test_band_check():
    sp = scatter("on_off", 10.0)
    with pytest.raises(LatticeError, match="too coarse"):
        run_single_photon(sp, default_lattice(sp, n_sites=255))


def test_zero_coupling_rejected():
    with pytest.raises(ZeroCouplingError):
        run_single_photon(ScatterParams(make_constant(0.0)))


def test_step_halving_single():
    sp = scatter("on_off", 1.0)
    ratio = step_halving_ratio(sp, default_lattice(sp, n_sites=255))
    assert 14 < ratio < 20
    with pytest.raises(LatticeError):
        step_halving_ratio(sp, default_lattice(sp, n_sites=255), n_steps=10)


# -- two photons ---------------------------------------------------------------------

def test_memory_budget():
    sp = scatter("constant", 1.0, kerr=-2.0)
    lc = dataclasses.replace(default_lattice(sp, sector="two"), memory_budget=2**20)
    with pytest.raises(MemoryBudgetError):
        run_two_photon(sp, lc)


def test_linear_cavity_is_uncorrelated():
    sp = scatter("on_off", 0.5)
    run = run_two_photon(sp, default_lattice(sp, sector="two", n_sites=127, readout_periods=1))
    assert run.state.symmetric
    assert run.norm_drift < 1e-8
    g, _ = two_photon_g2(run, [(0.0, 0.0), (0.2, 0.3)])
    assert np.allclose(g, 1.0, atol=1e-8)


def test_two_photon_channel_checked():
    sp = scatter("constant", 1.0)
    run = run_two_photon(sp, default_lattice(sp, sector="two", n_sites=127))
    with pytest.raises(ValueError):
        two_photon_g2(run, [(0.0, 0.0)], channel="lr")


@pytest.mark.slow
def test_kerr_antibunching_converges():
    # constant coupling, U = -2 Gamma: the continuum limit is g2_ll(0) = 1/2
    sp = scatter("constant", 1.0, kerr=-2.0)
    dev = []
    for n in (127, 255):
        run = run_two_photon(sp, default_lattice(sp, sector="two", n_sites=n))
        g, _ = two_photon_g2(run, [(0.0, 0.0)])
        dev.append(abs(g[0] - 0.5))
    assert dev[1] < dev[0] < 0.06
    assert dev[0] / dev[1] == pytest.approx(2.0, rel=0.2)


def test_step_halving_two_photon():
    sp = scatter("on_off", 1.0, kerr=-2.0)
    ratio = step_halving_ratio(sp, default_lattice(sp, sector="two", n_sites=63), sector="two")
    assert 14 < ratio < 20
