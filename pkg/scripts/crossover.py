"""
Local variance growth rate versus time for weak decoherence.

Prints, for each p, the central-difference slope of the exact variance at a
few multiples of the crossover time next to the long-time slope.

    python scripts/crossover.py --p 0.01 0.05 0.1
"""
from __future__ import annotations

import argparse
from dataclasses import dataclass

from decoherent_walk.bloch import asymptotic_slope, crossover_time, moment_series
from decoherent_walk.coin import CoinState


@dataclass(frozen=True)
class CrossoverConfig:
    strengths: tuple[float, ...] = (0.01, 0.05, 0.1)
    epsilon: float = 1e-3
    multiples: tuple[float, ...] = (0.05, 0.25, 1.0, 2.0, 4.0)


def local_slopes(p: float, cfg: CrossoverConfig) -> list[tuple[int, float]]:
    tc = crossover_time(p, cfg.epsilon)
    times = sorted({max(2, round(m * tc)) for m in cfg.multiples})
    s = moment_series(CoinState.right(), p, times[-1] + 1)
    var = s.variance
    return [(t, (var[t] - var[t - 2]) / 2) for t in times]


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    ap.add_argument("--p", type=float, nargs="+", default=list(CrossoverConfig.strengths))
    ap.add_argument("--epsilon", type=float, default=CrossoverConfig.epsilon)
    args = ap.parse_args(argv)
    cfg = CrossoverConfig(strengths=tuple(args.p), epsilon=args.epsilon)
    for p in cfg.strengths:
        tc = crossover_time(p, cfg.epsilon)
        print(f"p = {p}: crossover time {tc:.1f}, long-time slope {asymptotic_slope(p):.4f}")
        for t, slope in local_slopes(p, cfg):
            print(f"    t = {t:6d}  local slope = {slope:10.4f}  ratio = {slope / asymptotic_slope(p):.4f}")


if __name__ == "__main__":
    main()
