"""Photon correlations of the reflected light with a Kerr cavity.

With a fast sign-changing drive and |U| = 4 Gamma_0 the map of
g2_ll(tau_c, tau_d) has strong bunching peaks that repeat every drive
period, interleaved with antibunched stripes. At a slow drive the
correlations die out after a few 1 / Gamma_0, as for a static cavity.

    python3 demos/coherence_map.py
"""
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from qchopper.coherence import coherence_map
from qchopper.envelope import ScatterParams
from qchopper.protocol import make_sign_change

OUT = Path(__file__).with_name("out")


def main():
    OUT.mkdir(exist_ok=True)
    gamma0 = math.pi / 2
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for ax, beta, td_max in ((axes[0], 10.0, None), (axes[1], 1.0, 10 / gamma0)):
        sp = ScatterParams(make_sign_change(1.0, beta * gamma0), 0.0, -4 * gamma0)
        cm = coherence_map(sp, 128, 128, td_max)
        g = np.where(cm.node_mask_ll, np.nan, cm.g2_ll)
        im = ax.pcolormesh(cm.tau_d * gamma0, cm.tau_c * sp.omega / math.pi,
                           np.log10(g), cmap="RdBu_r", vmin=-1.5, vmax=1.5, shading="auto")
        ax.set_xlabel(r"$\Gamma_0\tau_d$")
        ax.set_ylabel(r"$\Omega\tau_c/\pi$")
        ax.set_title(f"beta={beta:g}")
        fig.colorbar(im, ax=ax, label=r"$\log_{10} g^{(2)}_{ll}$")
        print(f"beta={beta:g}: max g2 {np.nanmax(g):.1f}, min g2 {np.nanmin(g):.3f}, "
              f"{int(cm.node_mask_ll.sum())} samples on envelope nodes")
    fig.tight_layout()
    fig.savefig(OUT / "coherence_map.png", dpi=120)


if __name__ == "__main__":
    main()
