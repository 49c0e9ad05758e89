"""From circuit parameters to the scattering model.

A transmon coupled to the line through a Josephson ring modulator: the pump
current sets g(t), the transmon sets the cavity frequency and Kerr shift.
The same circuit is written in normalized units and in SI units; the
dimensionless model parameters come out the same.

    python3 demos/circuit_to_model.py
"""
import math

from qchopper.circuit import CircuitParams, PumpWaveform, model_params, validity_report
from qchopper.envelope import envelope_grid
from qchopper.protocol import rate_spectrum

HBAR = 1.054571817e-34
PHI0 = 2.067833848e-15
H = 2 * math.pi * HBAR


def describe(cp, label):
    mp = model_params(cp)
    sp = mp.scatter_params()
    g0 = rate_spectrum(sp.protocol).gamma0
    print(f"{label}: beta = {sp.omega / g0:.6g}, U/Gamma0 = {sp.kerr / g0:.6g}, "
          f"delta/Gamma0 = {sp.delta / g0:.6g}")
    return cp, mp, sp


def circuit(E=1.0, F=1.0, hbar=1.0, v=1.0):
    """EJ/EC = 100, U = -2 Gamma_0 and beta = 1, in units where energies are E."""
    rate = E / hbar
    f_k0 = 5.0 * F * math.sqrt(v / rate)
    # g0 = (pi/2) f_k0 sqrt(2 EC/EJ) I0 in normalized units; aim at Gamma_0 = 1/2
    I0 = math.sqrt(0.5 / (1.5 * math.pi)) / (math.pi / 2 * 5.0 * math.sqrt(0.02))
    return CircuitParams(EJp=1.0 * E, La=F**2 / E, Lb=F**2 / E, EJ=100 * E, EC=1.0 * E,
                         f_k0=f_k0, Ip=PumpWaveform.on_off(I0 * E / F, 0.5 * rate),
                         omega0=math.sqrt(800) * rate, hbar=hbar, phi0=F, v=v)


def main():
    describe(circuit(), "normalized")
    # 1 GHz energy unit, physical flux quantum and hbar, line velocity 1e8 m/s
    cp, mp, sp = describe(circuit(E=H * 1e9, F=PHI0, hbar=HBAR, v=1e8), "SI        ")
    for c in validity_report(cp, mp, sp):
        flag = "ok" if c.satisfied else "VIOLATED"
        print(f"  {c.name:16s} {c.value:10.3g}  {flag}{'  (info)' if c.informational else ''}")
    g = envelope_grid(sp, 256)
    print(f"reflection envelope: min Re A = {g.A.real.min():+.4f}, "
          f"unitarity defect {g.unitarity_defect:.1e}")


if __name__ == "__main__":
    main()
