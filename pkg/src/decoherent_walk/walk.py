"""
Pure and stochastic (quantum-trajectory) evolution of the walker.

A step is: coin channel -> Hadamard flip -> conditional shift (R: x+1, L: x-1).
Trajectories unravel the channel by sampling one Kraus branch per step with
probability ||A_n psi||^2 and renormalizing.

Ensembles are split into fixed-size chunks; trajectory ``i`` always draws its
uniforms from its own Philox substream keyed by ``(master_seed, i)`` and
chunk partial sums are reduced in chunk order, so results are bit-identical
for any number of workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from .coin import CoinState, KrausChannel, hadamard_coin
from .errors import ParameterDomainError, TrajectoryError
from .stats import MomentSeries, PositionDistribution, expected_tv_error

__all__ = [
    "PureWalkState",
    "TrajectoryRecord",
    "EnsembleResult",
    "initial_state",
    "unitary_step",
    "evolve_unitary",
    "unitary_series",
    "branch_probabilities",
    "trajectory_stream",
    "sample_trajectory",
    "run_ensemble",
    "DEFAULT_CHUNK",
]

NORM_TOL = 1e-10
DEFAULT_CHUNK = 250
_SQRT_HALF = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class PureWalkState:
    """Joint pure state; ``amplitudes[i] = (a_R, a_L)`` at position ``x = i - t``."""

    t: int
    amplitudes: NDArray[np.complex128]

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (2 * self.t + 1, 2):
            raise ValueError(f"expected amplitudes of shape {(2 * self.t + 1, 2)}, got {amps.shape}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def positions(self) -> NDArray[np.int64]:
        return np.arange(-self.t, self.t + 1)

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def amplitude(self, x: int) -> NDArray[np.complex128]:
        if abs(x) > self.t:
            return np.zeros(2, dtype=np.complex128)
        return self.amplitudes[x + self.t]

    def coin_density(self) -> NDArray[np.complex128]:
        """Reduced coin density matrix (position traced out)."""
        a = self.amplitudes
        return a.T @ a.conj()

    def distribution(self) -> PositionDistribution:
        return PositionDistribution(-self.t, np.sum(np.abs(self.amplitudes) ** 2, axis=1))


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    state: PureWalkState
    branches: tuple[int, ...]
    seed: object = None


def initial_state(coin: CoinState) -> PureWalkState:
    """Walker at the origin with coin ``coin`` (t = 0)."""
    if not isinstance(coin, CoinState):
        coin = CoinState(*coin)
    return PureWalkState(0, coin.vector[None, :])


def unitary_step(state: PureWalkState) -> PureWalkState:
    a = state.amplitudes @ hadamard_coin().T
    new = np.zeros((2 * state.t + 3, 2), dtype=np.complex128)
    new[2:, 0] = a[:, 0]
    new[:-2, 1] = a[:, 1]
    return PureWalkState(state.t + 1, new)


def evolve_unitary(coin: CoinState, t: int) -> PureWalkState:
    if t < 0:
        raise ParameterDomainError("t must be >= 0")
    state = initial_state(coin)
    for _ in range(t):
        state = unitary_step(state)
    return state


def branch_probabilities(state: PureWalkState, channel: KrausChannel) -> NDArray[np.float64]:
    """``||(I x A_n) psi||^2`` for every Kraus operator of ``channel``."""
    chi = state.coin_density()
    E = np.einsum("nji,njk->nik", channel.stacked.conj(), channel.stacked)
    return np.einsum("nik,ki->n", E, chi).real


def trajectory_stream(master_seed: int, index: int) -> np.random.Generator:
    """Counter-based substream for trajectory ``index`` of an ensemble."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(int(master_seed), spawn_key=(int(index),)))
    )


# --------------------------------------------------------------------- kernel
#
# Batched evolution on the parity-compact lattice: at step s only x = -s + 2i,
# i = 0..s, can be occupied.  Under the shift the R part of site i moves to
# site i+1 and the L part stays at site i of the (s+1)-step lattice.


def _choose(probs: NDArray[np.float64], u: NDArray[np.float64]) -> NDArray[np.intp]:
    total = probs.sum(axis=1, keepdims=True)
    cum = np.cumsum(probs / total, axis=1)
    # residual rounding goes to the last branch that can actually occur
    n = probs.shape[1]
    last = n - 1 - np.argmax((probs > 0)[:, ::-1], axis=1)
    cum[np.arange(n)[None, :] >= last[:, None]] = 1.0
    return np.argmax(u[:, None] < cum, axis=1)


def _simulate(coin_vec, kraus, t: int, uniforms):
    """
    Evolve a batch of trajectories.

    Returns compact final amplitudes (B, t+1, 2), branch indices (B, t),
    per-trajectory first and second moments at every step (B, t+1) and the
    final per-trajectory position probabilities (B, t+1).
    """
    B = 1 if uniforms is None else uniforms.shape[0]
    R = np.zeros((B, t + 1), dtype=np.complex128)
    L = np.zeros((B, t + 1), dtype=np.complex128)
    R[:, 0], L[:, 0] = coin_vec
    wR = np.abs(R[:, :1]) ** 2
    wL = np.abs(L[:, :1]) ** 2
    branches = np.zeros((B, t), dtype=np.int64)
    m1 = np.zeros((B, t + 1))
    m2 = np.zeros((B, t + 1))
    rows = np.arange(B)

    if kraus is not None:
        effects = np.einsum("nji,njk->nik", kraus.conj(), kraus)
        diagonal = not np.any(kraus[:, 0, 1]) and not np.any(kraus[:, 1, 0])
        coherent = np.any(effects[:, 0, 1])

    for s in range(t):
        r, l = R[:, : s + 1], L[:, : s + 1]
        if kraus is not None:
            pr = wR.sum(axis=1)
            pl = wL.sum(axis=1)
            probs = np.outer(pr, effects[:, 0, 0].real) + np.outer(pl, effects[:, 1, 1].real)
            if coherent:
                rl = np.einsum("bs,bs->b", r, l.conj())
                probs += 2.0 * (np.outer(rl, effects[:, 1, 0])).real
            np.maximum(probs, 0.0, out=probs)
            n = _choose(probs, uniforms[:, s])
            branches[:, s] = n
            w = probs[rows, n]
            if np.any(w <= 0.0):
                raise TrajectoryError(f"zero-norm Kraus branch selected at step {s}")
            op = kraus[n] / np.sqrt(w)[:, None, None]
            if diagonal:
                r = r * op[:, 0, 0, None]
                l = l * op[:, 1, 1, None]
            else:
                r, l = (op[:, 0, 0, None] * r + op[:, 0, 1, None] * l,
                        op[:, 1, 0, None] * r + op[:, 1, 1, None] * l)
        new_r = (r + l) * _SQRT_HALF
        new_l = (r - l) * _SQRT_HALF
        R[:, 1 : s + 2] = new_r
        R[:, 0] = 0.0
        L[:, : s + 1] = new_l
        L[:, s + 1] = 0.0
        wR = R.real[:, : s + 2] ** 2 + R.imag[:, : s + 2] ** 2
        wL = L.real[:, : s + 2] ** 2 + L.imag[:, : s + 2] ** 2
        p = wR + wL
        x = np.arange(-(s + 1), s + 2, 2, dtype=np.float64)
        m1[:, s + 1] = p @ x
        m2[:, s + 1] = p @ (x * x)
    p = wR + wL
    return np.stack([R, L], axis=-1), branches, m1, m2, p


def _dense(compact: NDArray, t: int) -> NDArray:
    """Expand a compact (t+1, ...) array along axis 0 onto the full -t..t lattice."""
    out = np.zeros((2 * t + 1,) + compact.shape[1:], dtype=compact.dtype)
    out[::2] = compact
    return out


def unitary_series(coin: CoinState, t: int) -> tuple[PositionDistribution, MomentSeries]:
    """Distribution at step ``t`` and the moment series 0..t of the noiseless walk."""
    if t < 0:
        raise ParameterDomainError("t must be >= 0")
    _, _, m1, m2, p = _simulate(coin.vector, None, t, None)
    return (
        PositionDistribution(-t, _dense(p[0], t)),
        MomentSeries(np.arange(t + 1), m1[0], m2[0] - m1[0] * m1[0]),
    )


def sample_trajectory(
    coin: CoinState,
    channel: KrausChannel,
    t: int,
    rng: np.random.Generator,
) -> TrajectoryRecord:
    """
    Sample one pure-state history of ``t`` decoherent steps.

    One uniform is drawn from ``rng`` per step to select the Kraus branch.
    """
    if t < 0:
        raise ParameterDomainError("t must be >= 0")
    u = rng.random(t)[None, :]
    amps, branches, *_ = _simulate(coin.vector, channel.stacked, t, u)
    state = PureWalkState(t, _dense(amps[0], t))
    seed_seq = getattr(rng.bit_generator, "seed_seq", None)
    seed = None if seed_seq is None else (seed_seq.entropy, tuple(seed_seq.spawn_key))
    return TrajectoryRecord(state, tuple(int(b) for b in branches[0]), seed)


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    """
    Trajectory-ensemble averages.

    ``moments.variance`` is the variance of the ensemble-mean distribution.
    ``chunk_sums`` holds, per chunk, the summed per-trajectory first and
    second moments at each step (shape ``(n_chunks, 2, t+1)``), which is
    enough for jackknife errors of any smooth functional of the moment curves.
    """

    runs: int
    steps: int
    distribution: PositionDistribution
    moments: MomentSeries
    master_seed: int
    chunk_sums: NDArray[np.float64]
    chunk_counts: NDArray[np.int64]
    distribution_stderr: NDArray[np.float64] | None = None

    def expected_tv_noise(self) -> float:
        """Expected total-variation distance between the sample mean distribution and its expectation."""
        if self.distribution_stderr is None:
            return float("nan")
        return expected_tv_error(self.distribution_stderr)

    def jackknife(self, statistic: Callable[[NDArray, NDArray], float]) -> tuple[float, float]:
        """
        Delete-one-chunk jackknife of ``statistic(mean, second_moment)``.

        Returns ``(estimate, standard_error)``; the estimate is the full-sample value.
        """
        sums = self.chunk_sums
        counts = self.chunk_counts
        full = statistic(*(sums.sum(axis=0) / counts.sum()))
        g = len(counts)
        if g < 2:
            return float(full), float("nan")
        loo = np.array([
            statistic(*((sums.sum(axis=0) - sums[i]) / (counts.sum() - counts[i])))
            for i in range(g)
        ])
        se = math.sqrt((g - 1) / g * float(np.sum((loo - loo.mean()) ** 2)))
        return float(full), se


def _run_chunk(args):
    coin_vec, kraus, t, master_seed, start, stop = args
    u = np.stack([trajectory_stream(master_seed, i).random(t) for i in range(start, stop)])
    if kraus is None:
        _, _, m1, m2, p = _simulate(coin_vec, None, t, None)
        m1, m2, p = (np.broadcast_to(a, (len(u),) + a.shape[1:]) for a in (m1, m2, p))
    else:
        _, _, m1, m2, p = _simulate(coin_vec, kraus, t, u)
    return (
        np.stack([p.sum(axis=0), (p * p).sum(axis=0)]),
        np.stack([m1.sum(axis=0), m2.sum(axis=0)]),
        np.stack([(m1 * m1).sum(axis=0), (m2 * m2).sum(axis=0), (m1 * m2).sum(axis=0)]),
    )


def run_ensemble(
    coin: CoinState,
    channel: KrausChannel,
    t: int,
    runs: int,
    master_seed: int,
    workers: int = 1,
    chunk_size: int = DEFAULT_CHUNK,
) -> EnsembleResult:
    """
    Average ``runs`` trajectories of ``t`` steps.

    The result depends only on ``(coin, channel, t, runs, master_seed,
    chunk_size)``; ``workers`` changes the schedule, never the numbers.
    """
    if runs < 1:
        raise ParameterDomainError("runs must be >= 1")
    if t < 0:
        raise ParameterDomainError("t must be >= 0")
    # the identity channel leaves every trajectory on the noiseless walk; skipping
    # the renormalisation keeps it bit-identical to unitary_series
    kraus = None if channel.parameters.p == 0.0 else channel.stacked
    tasks = [
        (coin.vector, kraus, t, master_seed, a, min(a + chunk_size, runs))
        for a in range(0, runs, chunk_size)
    ]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, tasks))
    else:
        parts = [_run_chunk(task) for task in tasks]

    counts = np.array([stop - start for *_, start, stop in tasks], dtype=np.int64)
    dist_sum = np.zeros((2, t + 1))
    lin = np.zeros((2, t + 1))
    quad = np.zeros((3, t + 1))
    for p, l, q in parts:
        dist_sum += p
        lin += l
        quad += q
    probs = _dense(dist_sum[0] / runs, t)
    mean, second = lin / runs
    variance = second - mean * mean
    se_mean = se_var = se_dist = None
    if runs > 1:
        n = runs
        se_dist = _dense(np.sqrt(np.maximum((dist_sum[1] - dist_sum[0] ** 2 / n) / (n - 1), 0.0) / n), t)
        var_m1 = np.maximum((quad[0] - n * mean**2) / (n - 1), 0.0)
        var_m2 = np.maximum((quad[1] - n * second**2) / (n - 1), 0.0)
        cov = (quad[2] - n * mean * second) / (n - 1)
        se_mean = np.sqrt(var_m1 / n)
        # delta method for <x^2> - <x>^2
        se_var = np.sqrt(np.maximum(4 * mean**2 * var_m1 - 4 * mean * cov + var_m2, 0.0) / n)
    series = MomentSeries(np.arange(t + 1), mean, variance, se_mean, se_var)
    return EnsembleResult(
        runs=runs,
        steps=t,
        distribution=PositionDistribution(-t, probs),
        moments=series,
        master_seed=int(master_seed),
        chunk_sums=np.stack([l for _, l, _ in parts]),
        chunk_counts=counts,
        distribution_stderr=se_dist,
    )
