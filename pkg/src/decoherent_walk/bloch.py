r"""
Pauli-vector transfer matrices and exact/asymptotic position moments.

A coin operator is written O = r0 I + r1 s1 + r2 s2 + r3 s3 with

    s1 = [[0, 1], [1, 0]],  s2 = [[0, i], [-i, 0]],  s3 = [[1, 0], [0, -1]]

in the (R, L) basis, so r_i = Tr(s_i O)/2 and a density matrix has r0 = 1/2.
The sign of s2 is chosen so that the step map of the k-space flip

    U_k = (1/sqrt 2) [[e^{-ik}, e^{-ik}], [e^{ik}, -e^{ik}]]

after the coin channel is exactly the matrix returned by
:func:`bloch_step_matrix` (and its lower block :func:`reduced_step_matrix`).

Moments are k-integrals of trigonometric polynomials, evaluated with the
uniform trapezoidal rule on [-pi, pi), which is exact once the node count
exceeds the polynomial degree.  With c = (0, 0, 1):

    <x>_t   = (1/2pi) int dk  2 c . sum_{j=1}^{t} M_k^j r
    <x^2>_t = t + (1/2pi) int dk  c . sum_{m=1}^{t-1} (t - m) M_k^m (0, 0, 2)

and for p > 0 the power sums collapse with R = (1 - M_k)^{-1}:

    sum_{j=1}^{t} M^j             = R (M - M^{t+1})
    sum_{m=1}^{t-1} (t - m) M^m   = ((t - 1) - R M + R M^t) R M
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .coin import ChannelModel, CoinState, KrausChannel, equivalent_parameters
from .errors import ParameterDomainError, SingularityError
from .stats import MomentSeries

__all__ = [
    "PAULI",
    "BlochVector",
    "quadrature_nodes",
    "default_node_count",
    "coin_unitary_k",
    "bloch_decompose",
    "bloch_compose",
    "bloch_step_matrix",
    "reduced_step_matrix",
    "resolvent",
    "power_sum",
    "weighted_power_sum",
    "first_moment_exact",
    "first_moment_asymptotic",
    "second_moment_exact",
    "second_moment_asymptotic",
    "variance_asymptotic",
    "asymptotic_slope",
    "crossover_time",
    "moment_series",
    "strength_p",
]

PAULI = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, 1j], [-1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=np.complex128,
)
PAULI.setflags(write=False)


@dataclass(frozen=True)
class BlochVector:
    r0: float
    r1: float
    r2: float
    r3: float

    def as_array(self) -> NDArray[np.float64]:
        return np.array([self.r0, self.r1, self.r2, self.r3])

    @property
    def traceless(self) -> NDArray[np.float64]:
        return np.array([self.r1, self.r2, self.r3])


def strength_p(p_or_channel) -> float:
    """Accept a channel or a raw p and return p in [0, 1]."""
    if isinstance(p_or_channel, KrausChannel):
        return p_or_channel.parameters.p
    return equivalent_parameters(p_or_channel, ChannelModel.MEASUREMENT).p


def default_node_count(t: int) -> int:
    return max(64, 4 * int(t) + 8)


def quadrature_nodes(n: int) -> NDArray[np.float64]:
    """n uniform nodes on [-pi, pi)."""
    if n < 1:
        raise ParameterDomainError("node count must be >= 1")
    return -math.pi + 2.0 * math.pi * np.arange(n) / n


def coin_unitary_k(k: float) -> NDArray[np.complex128]:
    e = np.exp(-1j * k)
    return np.array([[e, e], [e.conjugate(), -e.conjugate()]]) / math.sqrt(2.0)


def bloch_decompose(op) -> BlochVector:
    op = np.asarray(op, dtype=np.complex128)
    r = np.einsum("iab,ba->i", PAULI, op).real / 2.0
    return BlochVector(*map(float, r))


def bloch_compose(v) -> NDArray[np.complex128]:
    r = v.as_array() if isinstance(v, BlochVector) else np.asarray(v, dtype=np.float64)
    return np.einsum("i,iab->ab", r, PAULI)


def bloch_step_matrix(k, p: float) -> NDArray[np.float64]:
    """4x4 transfer matrix of the channel-then-U_k map; stacks over array ``k``."""
    k = np.asarray(k, dtype=np.float64)
    out = np.zeros(k.shape + (4, 4))
    out[..., 0, 0] = 1.0
    out[..., 1:, 1:] = reduced_step_matrix(k, p)
    return out


def reduced_step_matrix(k, p: float) -> NDArray[np.float64]:
    """3x3 block M_k acting on (r1, r2, r3); stacks over array ``k``."""
    k = np.asarray(k, dtype=np.float64)
    c, s = np.cos(2 * k), np.sin(2 * k)
    q = 1.0 - p
    out = np.zeros(k.shape + (3, 3))
    out[..., 0, 1] = -q * s
    out[..., 0, 2] = c
    out[..., 1, 1] = -q * c
    out[..., 1, 2] = -s
    out[..., 2, 0] = q
    return out


def resolvent(k, p: float) -> NDArray[np.float64]:
    """
    Closed-form (1 - M_k)^{-1}; stacks over array ``k``.

    Raises
    ------
    SingularityError
        At p = 0, where 1 - M_k is not invertible.
    """
    if p <= 0.0:
        raise SingularityError("1 - M_k is singular at p = 0")
    k = np.asarray(k, dtype=np.float64)
    c, s = np.cos(2 * k), np.sin(2 * k)
    q = 1.0 - p
    out = np.empty(k.shape + (3, 3))
    out[..., 0, 0] = 1 + q * c
    out[..., 0, 1] = -q * s
    out[..., 0, 2] = q + c
    out[..., 1, 0] = -q * s
    out[..., 1, 1] = 1 - q * c
    out[..., 1, 2] = -s
    out[..., 2, 0] = q * (1 + q * c)
    out[..., 2, 1] = -q * q * s
    out[..., 2, 2] = 1 + q * c
    return out / (p * (2.0 - p))


def power_sum(M: NDArray, t: int) -> NDArray:
    """sum_{j=1}^{t} M^j by binary powering of [[M, I], [0, I]]; stacks over leading axes."""
    d = M.shape[-1]
    if t == 0:
        return np.zeros_like(M)
    eye = np.broadcast_to(np.eye(d), M.shape)
    A = np.zeros(M.shape[:-2] + (2 * d, 2 * d))
    A[..., :d, :d] = M
    A[..., :d, d:] = eye
    A[..., d:, d:] = eye
    # top-right block of A^t is sum_{i<t} M^i
    return M @ np.linalg.matrix_power(A, t)[..., :d, d:]


def weighted_power_sum(M: NDArray, t: int) -> NDArray:
    """sum_{m=1}^{t-1} (t - m) M^m via the 3-block companion [[M, I, 0], [0, I, I], [0, 0, I]]."""
    d = M.shape[-1]
    if t <= 1:
        return np.zeros_like(M)
    eye = np.broadcast_to(np.eye(d), M.shape)
    A = np.zeros(M.shape[:-2] + (3 * d, 3 * d))
    A[..., :d, :d] = M
    A[..., :d, d : 2 * d] = eye
    A[..., d : 2 * d, d : 2 * d] = eye
    A[..., d : 2 * d, 2 * d :] = eye
    A[..., 2 * d :, 2 * d :] = eye
    # top-right block of A^t is sum_{i=0}^{t-2} (t-1-i) M^i
    return M @ np.linalg.matrix_power(A, t)[..., :d, 2 * d :]


def _traceless_coin_vector(coin: CoinState) -> NDArray[np.float64]:
    return bloch_decompose(coin.density).traceless


def first_moment_exact(coin: CoinState, p, t: int, nodes: int | None = None) -> float:
    """
    Exact <x> after t decoherent steps.

    Uses the resolvent for p > 0 and the explicit power sum at p = 0.
    """
    p = strength_p(p)
    if t < 0:
        raise ParameterDomainError("t must be >= 0")
    if t == 0:
        return 0.0
    k = quadrature_nodes(nodes or default_node_count(t))
    M = reduced_step_matrix(k, p)
    if p > 0.0:
        S = resolvent(k, p) @ (M - np.linalg.matrix_power(M, t + 1))
    else:
        S = power_sum(M, t)
    vals = S[:, 2, :] @ _traceless_coin_vector(coin)
    return float(2.0 * math.fsum(vals) / len(k))


def first_moment_asymptotic(coin: CoinState, p) -> float:
    """Long-time constant that <x>_t approaches for p > 0."""
    p = strength_p(p)
    if p <= 0.0:
        raise ParameterDomainError("no constant first-moment asymptote at p = 0 (drift is linear)")
    a, b = coin.alpha, coin.beta
    bracket = (1 - p) * (abs(a) ** 2 - abs(b) ** 2) + 2.0 * (a.conjugate() * b).real
    return (1 - p) / (p * (2 - p)) * bracket


def second_moment_exact(p, t: int, nodes: int | None = None) -> float:
    """Exact <x^2> after t steps; independent of the initial coin."""
    p = strength_p(p)
    if t < 0:
        raise ParameterDomainError("t must be >= 0")
    if t <= 1:
        return float(t)
    k = quadrature_nodes(nodes or default_node_count(t))
    M = reduced_step_matrix(k, p)
    if p > 0.0:
        Rk = resolvent(k, p)
        RM = Rk @ M
        S = ((t - 1) * np.eye(3) - RM + Rk @ np.linalg.matrix_power(M, t)) @ RM
    else:
        S = weighted_power_sum(M, t)
    vals = 2.0 * S[:, 2, 2]
    return float(t + math.fsum(vals) / len(k))


def asymptotic_slope(p) -> float:
    """Long-time d<x^2>/dt = 1 + 2(1-p)^2 / (p(2-p))."""
    p = strength_p(p)
    if p <= 0.0:
        raise ParameterDomainError("no linear asymptote at p = 0")
    return 1.0 + 2.0 * (1 - p) ** 2 / (p * (2 - p))


def second_moment_asymptotic(p, t) -> float:
    """Affine long-time form t(1 + 2(1-p)^2/(p(2-p))) - 7(1-p)^2/(p(2-p))^2."""
    p = strength_p(p)
    slope = asymptotic_slope(p)
    return slope * t - 7.0 * (1 - p) ** 2 / (p * (2 - p)) ** 2


def variance_asymptotic(coin: CoinState, p, t):
    return second_moment_asymptotic(p, t) - first_moment_asymptotic(coin, p) ** 2


def crossover_time(p, epsilon: float) -> float:
    """Steps after which ||M_k^t|| < (1-p)^{t/2} < epsilon: t* = (2/p) log(1/epsilon)."""
    p = strength_p(p)
    if p <= 0.0:
        raise ParameterDomainError("crossover time diverges at p = 0")
    if not (0.0 < epsilon < 1.0):
        raise ParameterDomainError(f"epsilon={epsilon!r} outside (0, 1)")
    return 2.0 / p * math.log(1.0 / epsilon)


def moment_series(coin: CoinState, p, t_max: int, nodes: int | None = None) -> MomentSeries:
    """
    Exact mean and variance for t = 1..t_max.

    Propagates M_k^j r and M_k^m (0,0,2) node by node once, so the whole
    series costs O(t_max * nodes).
    """
    p = strength_p(p)
    if t_max < 1:
        raise ParameterDomainError("t_max must be >= 1")
    k = quadrature_nodes(nodes or default_node_count(t_max))
    n = len(k)
    c, sn = np.cos(2 * k), np.sin(2 * k)
    q = 1.0 - p
    qs, qc = q * sn, q * c

    def step(w):
        return (c * w[2] - qs * w[1], -qc * w[1] - sn * w[2], q * w[0])

    u = tuple(np.full(n, r) for r in _traceless_coin_vector(coin))
    v = (np.zeros(n), np.zeros(n), np.full(n, 2.0))
    first_terms = np.empty(t_max)
    a = np.zeros(t_max)  # a[m] = <c . M^m (0,0,2)>_k for m = 1..t_max-1
    for j in range(1, t_max + 1):
        u = step(u)
        first_terms[j - 1] = 2.0 * np.sum(u[2]) / n
        if j < t_max:
            v = step(v)
            a[j] = np.sum(v[2]) / n
    t = np.arange(1, t_max + 1)
    mean = np.cumsum(first_terms)
    # sum_{m<t} (t - m) a_m = t * A(t-1) - B(t-1)
    A = np.cumsum(a)
    Bm = np.cumsum(np.arange(t_max) * a)
    second = t + t * A[t - 1] - Bm[t - 1]
    return MomentSeries(t, mean, second - mean**2)
