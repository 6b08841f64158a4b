"""Beam widths and accumulated relative phase through shifter designs.

Writes one z-scan CSV per phase and a two-panel plot (widths, relative phase).

    python3 scripts/fig2_phase_shifter.py --out runs/fig2
"""

import argparse
import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from qpgate.pipeline import SimulationConfig, build_line, schedule_for_design, write_zscan
from qpgate.shifter import design, design_edge


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="runs/fig2")
    p.add_argument("--d", type=float, default=0.12, help="quadrupole spacing [m]")
    p.add_argument("--energy", type=float, default=200.0, help="[keV]")
    args = p.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    config = SimulationConfig(energy_kev=args.energy)
    ctx = config.ctx
    cases = {
        "pi_4": design(args.d, math.pi / 4),
        "pi_2": design(args.d, math.pi / 2),
        "3pi_4": design(args.d, 3 * math.pi / 4),
        "pi_line_focus": design_edge(args.d, math.pi, 1e-6, ctx),
    }
    fig, (ax_w, ax_p) = plt.subplots(2, 1, sharex=True, figsize=(6, 6))
    for name, dsg in cases.items():
        path = out / f"zscan_{name}.csv"
        write_zscan(path, build_line(schedule_for_design(dsg), config), ctx, samples_per_drift=200)
        with path.open() as fh:
            rows = [[float(v) for v in r] for r in list(csv.reader(fh))[1:]]
        z = [r[0] * 1e3 for r in rows]
        (line,) = ax_w.plot(z, [r[1] * 1e9 for r in rows], label=f"{name} h")
        ax_w.plot(z, [r[2] * 1e9 for r in rows], ls="--", color=line.get_color())
        ax_p.plot(z, [r[7] / math.pi for r in rows], color=line.get_color(), label=name)
        print(f"{name:>14}: f1 = {dsg.f1 and dsg.f1 * 1e3:.6g} mm, "
              f"w_in = {dsg.w_in(ctx) * 1e9:.1f} nm -> {path}")
    ax_w.set_ylabel("beam width w [nm] (solid h, dashed v)")
    ax_p.set_ylabel("relative phase / pi")
    ax_p.set_xlabel("z from QP1 [mm]")
    ax_p.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out / "fig2_phase_shifter.png", dpi=150)
    print(f"plot -> {out / 'fig2_phase_shifter.png'}")


if __name__ == "__main__":
    main()
