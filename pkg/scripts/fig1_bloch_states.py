"""Ideal first-order states on a Bloch-sphere grid, rendered as color-wheel images.

    python3 scripts/fig1_bloch_states.py --out runs/fig1
"""

import argparse
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from qpgate.beam import q_from_waist, wavenumber_from_energy
from qpgate.fieldio import field_to_rgb
from qpgate.gates import state_from_angles
from qpgate.wave import oam_expectation, state_field

THETAS = (0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4, math.pi)
PHIS = (0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4, math.pi)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="runs/fig1")
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--waist", type=float, default=500e-9, help="[m]")
    args = p.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ctx = wavenumber_from_energy(200.0)
    q = q_from_waist(args.waist, ctx)
    fig, axes = plt.subplots(len(THETAS), len(PHIS), figsize=(8, 8))
    for i, theta in enumerate(THETAS):
        for j, phi in enumerate(PHIS):
            field = state_field(state_from_angles(theta, phi), q, ctx, args.grid, 6 * args.waist)
            ax = axes[i, j]
            ax.imshow(field_to_rgb(field))
            ax.set_xticks([])
            ax.set_yticks([])
            ax.set_title(f"Lz={oam_expectation(field):+.2f}", fontsize=7)
            if j == 0:
                ax.set_ylabel(f"theta={theta / math.pi:.2f}pi", fontsize=7)
            if i == len(THETAS) - 1:
                ax.set_xlabel(f"phi={phi / math.pi:.2f}pi", fontsize=7)
    fig.tight_layout()
    fig.savefig(out / "fig1_bloch_states.png", dpi=150)
    print(f"plot -> {out / 'fig1_bloch_states.png'}")


if __name__ == "__main__":
    main()
