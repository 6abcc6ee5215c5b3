"""
Exact first moment and variance versus time for the reference dephasing angles.

Writes one CSV per angle (plus the noiseless walk) and, with ``--plot``,
a two-panel PNG.  Example::

    python scripts/moment_curves.py --steps 500 --out results/moments --plot
"""
from __future__ import annotations

import argparse
import math
from dataclasses import dataclass, field
from pathlib import Path

from decoherent_walk.bloch import moment_series, variance_asymptotic
from decoherent_walk.coin import CoinState, dephasing_channel
from decoherent_walk.stats import MomentSeries, export
from decoherent_walk.walk import unitary_series

REFERENCE_THETAS = {"pi/16": math.pi / 16, "pi/8": math.pi / 8, "3pi/16": 3 * math.pi / 16, "pi/4": math.pi / 4}


@dataclass(frozen=True)
class CurveConfig:
    steps: int = 500
    out: Path = Path("results/moment_curves")
    thetas: dict[str, float] = field(default_factory=lambda: dict(REFERENCE_THETAS))
    plot: bool = False


def compute(cfg: CurveConfig) -> dict[str, MomentSeries]:
    coin = CoinState.right()
    curves = {"unitary": unitary_series(coin, cfg.steps)[1]}
    for label, theta in cfg.thetas.items():
        p = dephasing_channel(theta).parameters.p
        s = moment_series(coin, p, cfg.steps)
        s.extra["variance_asymptotic"] = variance_asymptotic(coin, p, s.t)
        curves[label] = s
    return curves


def plot(curves: dict[str, MomentSeries], path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    for label, s in curves.items():
        if label == "unitary":
            continue
        ax1.plot(s.t, s.mean, label=f"theta={label}")
        ax2.plot(s.t, s.variance, label=f"theta={label}")
    ax1.set(xlabel="t", ylabel="<x>", title="first moment")
    ax2.set(xlabel="t", ylabel="variance", title="variance")
    ax1.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    ap.add_argument("--steps", type=int, default=CurveConfig.steps)
    ap.add_argument("--out", type=Path, default=CurveConfig.out)
    ap.add_argument("--plot", action="store_true")
    args = ap.parse_args(argv)
    cfg = CurveConfig(steps=args.steps, out=args.out, plot=args.plot)
    cfg.out.mkdir(parents=True, exist_ok=True)
    curves = compute(cfg)
    for label, s in curves.items():
        name = label.replace("/", "_")
        export(s, "csv", cfg.out / f"moments_{name}.csv")
        print(f"{label:>8}: <x>_{cfg.steps} = {s.mean[-1]:10.4f}   var = {s.variance[-1]:12.4f}")
    if cfg.plot:
        plot(curves, cfg.out / "moment_curves.png")


if __name__ == "__main__":
    main()
