"""Run the bundled figure scenarios and optionally render the fields.

    python scripts/reproduce_figures.py                 # every scenario into out/
    python scripts/reproduce_figures.py rec1-z0b comb   # a selection
    python scripts/reproduce_figures.py --plot          # also write PNGs (needs matplotlib)
"""

import argparse
import logging
from pathlib import Path

import numpy as np

from phaseless_dsm.cli import bundled_scenarios, run
from phaseless_dsm.config import parse_config
from phaseless_dsm.forward import read_phased_csv

log = logging.getLogger("reproduce")


def render(out_dir: Path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    for csv in sorted(out_dir.glob("i[12]*.csv")):
        rows = np.loadtxt(csv, delimiter=",", skiprows=1)
        xs, ys = np.unique(rows[:, 0]), np.unique(rows[:, 1])
        v = rows[:, 2].reshape(len(ys), len(xs))
        v = (v - v.min()) / (np.ptp(v) or 1.0)
        fig, ax = plt.subplots(figsize=(4, 3.4))
        im = ax.imshow(v, origin="lower", extent=(xs[0], xs[-1], ys[0], ys[-1]), cmap="jet")
        fig.colorbar(im, ax=ax)
        ax.set_title(f"{out_dir.name}: {csv.stem}")
        fig.tight_layout()
        fig.savefig(csv.with_suffix(".png"), dpi=120)
        plt.close(fig)

    truth, retrieved = out_dir / "phased_truth.csv", out_dir / "phased_retrieved.csv"
    if truth.exists() and retrieved.exists():
        t, r = read_phased_csv(truth), read_phased_csv(retrieved)
        fig, ax = plt.subplots(figsize=(4.5, 3))
        ax.plot(t.grid.nodes, t.values[0].real, "k-", label="exact")
        ax.plot(r.grid.nodes, r.values[0].real, "ro--", ms=3, label="retrieved")
        ax.set_xlabel("k")
        ax.set_ylabel("Re u")
        ax.legend()
        fig.tight_layout()
        fig.savefig(out_dir / "retrieval.png", dpi=120)
        plt.close(fig)


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("names", nargs="*", help="scenario names (default: all)")
    parser.add_argument("--out", default="out")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--plot", action="store_true")
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    scenarios = bundled_scenarios()
    names = args.names or sorted(scenarios)
    for name in names:
        text = scenarios[name]
        cfg = parse_config(text)
        result = run(cfg, Path(args.out) / name, text, threads=args.threads)
        log.info("%-24s %d artifacts", name, len(result.artifacts))
        if args.plot:
            render(result.out_dir)


if __name__ == "__main__":
    main()
