"""
Exact evolution of the joint walker/coin density operator on a truncated lattice.

The lattice for step t covers x = -t..t, which holds the full support, so the
truncation is exact.  Entries are stored position-major as a 4-index tensor
``rho[x, c, y, d]`` (position x, coin c; position y, coin d) so the coin map is
a blockwise 2x2 conjugation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .coin import CoinState, KrausChannel, hadamard_coin
from .errors import OracleLimitError, ParameterDomainError
from .stats import PositionDistribution

__all__ = [
    "DEFAULT_ORACLE_LIMIT",
    "LatticeDensityMatrix",
    "initial_density",
    "decoherent_step",
    "evolve_density",
    "position_marginal",
    "moments",
]

DEFAULT_ORACLE_LIMIT = 200


@dataclass(frozen=True, eq=False)
class LatticeDensityMatrix:
    t: int
    entries: NDArray[np.complex128]

    def __post_init__(self):
        n = 2 * self.t + 1
        if self.entries.shape != (n, 2, n, 2):
            raise ValueError(f"expected entries of shape {(n, 2, n, 2)}, got {self.entries.shape}")

    @property
    def dim(self) -> int:
        return 2 * (2 * self.t + 1)

    @property
    def matrix(self) -> NDArray[np.complex128]:
        """Flattened (dim, dim) matrix; joint index is 2*(x + t) + c."""
        return self.entries.reshape(self.dim, self.dim)

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def hermiticity_error(self) -> float:
        m = self.matrix
        return float(np.abs(m - m.conj().T).max())

    def min_eigenvalue(self) -> float:
        """Smallest eigenvalue; an O(dim^3) check meant for tests."""
        m = self.matrix
        return float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0])

    def purity(self) -> float:
        m = self.matrix
        return float(np.vdot(m.conj().T, m).real)


def initial_density(coin: CoinState) -> LatticeDensityMatrix:
    """|0><0| (x) |coin><coin|."""
    if not isinstance(coin, CoinState):
        coin = CoinState(*coin)
    return LatticeDensityMatrix(0, coin.density.reshape(1, 2, 1, 2).astype(np.complex128))


def _step_map(channel: KrausChannel) -> NDArray[np.complex128]:
    """Coin superoperator of channel-then-flip as a (2, 2, 2, 2) tensor K[c, d, a, b]."""
    H = hadamard_coin()
    ops = np.einsum("ij,njk->nik", H, channel.stacked)
    return np.einsum("nca,ndb->cdab", ops, ops.conj())


def _shifted(rho: NDArray[np.complex128], t: int) -> NDArray[np.complex128]:
    # R (c=0) moves to x+1 -> index i+2 on the grown lattice; L stays at index i.
    n = 2 * t + 3
    out = np.zeros((n, 2, n, 2), dtype=np.complex128)
    m = 2 * t + 1
    for c in (0, 1):
        dx = 2 if c == 0 else 0
        for d in (0, 1):
            dy = 2 if d == 0 else 0
            out[dx : dx + m, c, dy : dy + m, d] = rho[:, c, :, d]
    return out


def decoherent_step(rho: LatticeDensityMatrix, channel: KrausChannel) -> LatticeDensityMatrix:
    """rho -> E (sum_n A_n rho A_n^dag) E^dag with E the flip-and-shift step."""
    K = _step_map(channel)
    flipped = np.einsum("cdab,xayb->xcyd", K, rho.entries, optimize=True)
    return LatticeDensityMatrix(rho.t + 1, _shifted(flipped, rho.t))


def evolve_density(
    coin: CoinState,
    channel: KrausChannel,
    t: int,
    oracle_limit: int = DEFAULT_ORACLE_LIMIT,
) -> LatticeDensityMatrix:
    if t < 0:
        raise ParameterDomainError("t must be >= 0")
    if t > oracle_limit:
        raise OracleLimitError(t, oracle_limit)
    rho = initial_density(coin)
    for _ in range(t):
        rho = decoherent_step(rho, channel)
    return rho


def position_marginal(rho: LatticeDensityMatrix) -> PositionDistribution:
    """p(x) = sum_c <x, c| rho |x, c>."""
    diag = np.einsum("xcxc->x", rho.entries).real
    return PositionDistribution(-rho.t, diag)


def moments(dist: PositionDistribution, order: int) -> float:
    """sum_x x^order p(x) for order 1 or 2."""
    if order not in (1, 2):
        raise ParameterDomainError("order must be 1 or 2")
    return dist.moment(order)
