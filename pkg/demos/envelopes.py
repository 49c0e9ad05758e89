"""Reflection envelopes of the two drive protocols.

Switching the coupling on and off makes the cavity transparent at each
quench, and the fast drive overshoots the static value -1. Reversing the
sign of g(t) instead produces an extra node in every half period, which
drifts toward the coupling maximum as the drive gets faster.

    python3 demos/envelopes.py
"""
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from qchopper.envelope import ScatterParams, envelope_grid, find_nodes
from qchopper.protocol import make_on_off, make_sign_change

OUT = Path(__file__).with_name("out")


def params(kind, beta, delta=0.0):
    # Gamma_0 = pi g0^2 times 3/2 (on-off) or 1/2 (sign-change); fix g0 = 1
    g0 = 1.0
    gamma0 = math.pi * g0**2 * (1.5 if kind == "on_off" else 0.5)
    maker = make_on_off if kind == "on_off" else make_sign_change
    return ScatterParams(maker(g0, beta * gamma0), delta * gamma0)


def main():
    OUT.mkdir(exist_ok=True)
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5), sharey=True)
    for ax, kind, betas in ((axes[0], "on_off", (0.2, 1, 5)),
                            (axes[1], "sign_change", (0.2, 1, 5))):
        for beta in betas:
            g = envelope_grid(params(kind, beta), 512)
            ax.plot(g.tau_c * g.omega / math.pi, g.A.real, label=f"beta={beta:g}")
            print(f"{kind:12s} beta={beta:<4g} min Re A = {g.A.real.min():+.4f}"
                  f"  unitarity defect {g.unitarity_defect:.1e}")
        ax.set_title(kind)
        ax.set_xlabel(r"$\Omega\tau_c/\pi$")
        ax.legend(fontsize=8)
    axes[0].set_ylabel("Re A")
    fig.tight_layout()
    fig.savefig(OUT / "envelopes.png", dpi=120)

    # the extra node of the sign-change protocol
    print("\nsign-change nodes in (-pi/2, 0):")
    for beta in (0.2, 0.5, 1, 2, 5):
        g = envelope_grid(params("sign_change", beta), 1024)
        x = np.asarray(find_nodes(g)) * g.omega / math.pi
        extra = x[(x > -0.5 + 1e-6) & (x < 0)]
        print(f"  beta={beta:<4g} Omega tau_c / pi = {extra.round(4)}")


if __name__ == "__main__":
    main()
