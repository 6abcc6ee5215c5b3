"""
Position distributions at a fixed time: noiseless walk, trajectory ensembles
for the reference angles, and the classical binomial.

    python scripts/distributions.py --steps 500 --runs 10000 --seed 1 --plot
"""
from __future__ import annotations

import argparse
import math
from dataclasses import dataclass
from pathlib import Path

from decoherent_walk.coin import CoinState, dephasing_channel
from decoherent_walk.stats import PositionDistribution, classical_binomial, export
from decoherent_walk.walk import run_ensemble, unitary_series

REFERENCE_THETAS = {"pi/16": math.pi / 16, "pi/8": math.pi / 8, "3pi/16": 3 * math.pi / 16, "pi/4": math.pi / 4}


@dataclass(frozen=True)
class DistributionConfig:
    steps: int = 500
    runs: int = 10_000
    seed: int = 1
    workers: int = 1
    out: Path = Path("results/distributions")
    plot: bool = False


def compute(cfg: DistributionConfig) -> dict[str, PositionDistribution]:
    coin = CoinState.right()
    dists = {"unitary": unitary_series(coin, cfg.steps)[0]}
    for label, theta in REFERENCE_THETAS.items():
        ens = run_ensemble(coin, dephasing_channel(theta), cfg.steps, cfg.runs, cfg.seed, workers=cfg.workers)
        dists[label] = ens.distribution
    dists["binomial"] = classical_binomial(cfg.steps)
    return dists


def plot(dists: dict[str, PositionDistribution], path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 4))
    for label, d in dists.items():
        # odd/even sublattice: plot only the occupied parity
        x, pr = d.positions[::2], d.probabilities[::2]
        ax.plot(x, pr, label=label, lw=1)
    ax.set(xlabel="x", ylabel="p(x)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    ap.add_argument("--steps", type=int, default=DistributionConfig.steps)
    ap.add_argument("--runs", type=int, default=DistributionConfig.runs)
    ap.add_argument("--seed", type=int, default=DistributionConfig.seed)
    ap.add_argument("--workers", type=int, default=DistributionConfig.workers)
    ap.add_argument("--out", type=Path, default=DistributionConfig.out)
    ap.add_argument("--plot", action="store_true")
    cfg = DistributionConfig(**vars(ap.parse_args(argv)))
    cfg.out.mkdir(parents=True, exist_ok=True)
    dists = compute(cfg)
    for label, d in dists.items():
        export(d, "csv", cfg.out / f"distribution_{label.replace('/', '_')}.csv")
        print(f"{label:>8}: mean = {d.mean:9.3f}   variance = {d.variance:10.3f}")
    if cfg.plot:
        plot(dists, cfg.out / "distributions.png")


if __name__ == "__main__":
    main()
