"""
Coin operators and the three equivalent coin decoherence channels.

Basis order is (R, L) everywhere: |R> = e0 moves the walker to x+1,
|L> = e1 moves it to x-1.  Operators are plain complex128 arrays of
shape (2, 2).

The three channel families are related through

    1 - p = cos(2 theta) = 2 sqrt(q (1 - q))

and define the same averaged map on coin density matrices.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import ChannelInvariantError, ParameterDomainError

__all__ = [
    "ChannelModel",
    "ChannelStrength",
    "CoinState",
    "KrausChannel",
    "PROJ_R",
    "PROJ_L",
    "Z",
    "IDENTITY",
    "hadamard_coin",
    "measurement_channel",
    "dephasing_channel",
    "weak_measurement_channel",
    "make_channel",
    "equivalent_parameters",
    "apply_channel",
]

ALGEBRA_TOL = 1e-12

IDENTITY = np.eye(2, dtype=np.complex128)
PROJ_R = np.array([[1, 0], [0, 0]], dtype=np.complex128)
PROJ_L = np.array([[0, 0], [0, 1]], dtype=np.complex128)
Z = PROJ_R - PROJ_L

for _op in (IDENTITY, PROJ_R, PROJ_L, Z):
    _op.setflags(write=False)


class ChannelModel(str, enum.Enum):
    MEASUREMENT = "measurement"
    DEPHASING = "dephasing"
    WEAK_MEASUREMENT = "weak"

    @property
    def parameter(self) -> str:
        return {"measurement": "p", "dephasing": "theta", "weak": "q"}[self.value]

    @property
    def n_operators(self) -> int:
        return 3 if self is ChannelModel.MEASUREMENT else 2


def hadamard_coin() -> NDArray[np.complex128]:
    """Return the Hadamard flip (1/sqrt 2)[[1, 1], [1, -1]] in the (R, L) basis."""
    return np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / math.sqrt(2.0)


@dataclass(frozen=True)
class CoinState:
    """Pure coin state alpha|R> + beta|L>."""

    alpha: complex = 1.0
    beta: complex = 0.0

    def __post_init__(self):
        a, b = complex(self.alpha), complex(self.beta)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)
        norm = abs(a) ** 2 + abs(b) ** 2
        if not (math.isfinite(norm) and abs(norm - 1.0) <= ALGEBRA_TOL):
            raise ParameterDomainError(
                f"coin state must be normalized, |alpha|^2+|beta|^2 = {norm!r}"
            )

    @classmethod
    def right(cls) -> CoinState:
        return cls(1.0, 0.0)

    @classmethod
    def left(cls) -> CoinState:
        return cls(0.0, 1.0)

    @classmethod
    def from_components(cls, re_a: float, im_a: float, re_b: float, im_b: float) -> CoinState:
        return cls(complex(re_a, im_a), complex(re_b, im_b))

    @classmethod
    def random(cls, rng: np.random.Generator) -> CoinState:
        v = rng.normal(size=4)
        v /= np.linalg.norm(v)
        return cls(complex(v[0], v[1]), complex(v[2], v[3]))

    @property
    def vector(self) -> NDArray[np.complex128]:
        return np.array([self.alpha, self.beta], dtype=np.complex128)

    @property
    def density(self) -> NDArray[np.complex128]:
        v = self.vector
        return np.outer(v, v.conj())

    def components(self) -> list[float]:
        return [self.alpha.real, self.alpha.imag, self.beta.real, self.beta.imag]


@dataclass(frozen=True)
class ChannelStrength:
    """The same decoherence strength in all three parameterizations."""

    p: float
    theta: float
    q: float

    def __post_init__(self):
        a = 1.0 - self.p
        b = math.cos(2.0 * self.theta)
        c = 2.0 * math.sqrt(self.q * (1.0 - self.q))
        if max(abs(a - b), abs(a - c)) > ALGEBRA_TOL:
            raise ParameterDomainError(
                f"inconsistent strength triple p={self.p}, theta={self.theta}, q={self.q}"
            )

    def value(self, model: ChannelModel) -> float:
        return getattr(self, ChannelModel(model).parameter)


def _check_range(name: str, value: float, lo: float, hi: float) -> float:
    value = float(value)
    if not (lo <= value <= hi):
        raise ParameterDomainError(f"{name}={value!r} outside [{lo}, {hi}]")
    return value


def equivalent_parameters(value: float, native: ChannelModel | str) -> ChannelStrength:
    """
    Convert a strength given in one parameterization into the full (p, theta, q) triple.

    The weak-measurement parameter is returned on the q >= 1/2 branch.

    Raises
    ------
    ParameterDomainError
        If `value` is outside the native model's domain.
    """
    native = ChannelModel(native)
    if native is ChannelModel.MEASUREMENT:
        p = _check_range("p", value, 0.0, 1.0)
    elif native is ChannelModel.DEPHASING:
        theta = _check_range("theta", value, 0.0, math.pi / 4)
        p = 1.0 - math.cos(2.0 * theta)
    else:
        q = _check_range("q", value, 0.0, 1.0)
        q = max(q, 1.0 - q)
        p = 1.0 - 2.0 * math.sqrt(q * (1.0 - q))
    # Recover the other two from c = 1-p so the triple is self-consistent to rounding.
    c = min(max(1.0 - p, 0.0), 1.0)
    theta_out = theta if native is ChannelModel.DEPHASING else 0.5 * math.acos(c)
    q_out = q if native is ChannelModel.WEAK_MEASUREMENT else 0.5 * (1.0 + math.sqrt(1.0 - c * c))
    return ChannelStrength(p=p, theta=theta_out, q=q_out)


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """
    Ordered Kraus set acting on the coin.

    Operators are materialized at construction and completeness
    ``sum_n A_n^dag A_n = I`` is asserted to 1e-12.
    """

    operators: tuple[NDArray[np.complex128], ...]
    model: ChannelModel
    strength: float

    def __post_init__(self):
        ops = tuple(np.array(op, dtype=np.complex128) for op in self.operators)
        for op in ops:
            if op.shape != (2, 2) or not np.all(np.isfinite(op)):
                raise ChannelInvariantError("Kraus operators must be finite 2x2 matrices")
            op.setflags(write=False)
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "model", ChannelModel(self.model))
        if len(ops) != self.model.n_operators:
            raise ChannelInvariantError(
                f"{self.model.value} channel needs {self.model.n_operators} operators, got {len(ops)}"
            )
        err = np.abs(sum(op.conj().T @ op for op in ops) - IDENTITY).max()
        if err > ALGEBRA_TOL:
            raise ChannelInvariantError(f"Kraus completeness violated by {err:.3e}")

    @property
    def parameters(self) -> ChannelStrength:
        return equivalent_parameters(self.strength, self.model)

    @property
    def stacked(self) -> NDArray[np.complex128]:
        """Operators as one (n, 2, 2) array."""
        return np.stack(self.operators)

    def superoperator(self) -> NDArray[np.complex128]:
        """4-index tensor S[c, d, a, b] with (sum_n A X A^dag)[c, d] = S[c, d, a, b] X[a, b]."""
        A = self.stacked
        return np.einsum("nca,ndb->cdab", A, A.conj())

    def __repr__(self) -> str:
        return f"KrausChannel({self.model.value}, {self.model.parameter}={self.strength!r})"


def measurement_channel(p: float) -> KrausChannel:
    """Coin measured in the (R, L) basis with probability `p` per step."""
    p = _check_range("p", p, 0.0, 1.0)
    ops = (math.sqrt(p) * PROJ_R, math.sqrt(p) * PROJ_L, math.sqrt(1.0 - p) * IDENTITY)
    return KrausChannel(ops, ChannelModel.MEASUREMENT, p)


def dephasing_channel(theta: float) -> KrausChannel:
    """Random +-theta phase kick; sqrt(2) times each operator is unitary."""
    theta = _check_range("theta", theta, 0.0, math.pi / 4)
    ph = np.exp(1j * theta)
    s = 1.0 / math.sqrt(2.0)
    ops = (s * np.diag([ph, ph.conjugate()]), s * np.diag([ph.conjugate(), ph]))
    return KrausChannel(ops, ChannelModel.DEPHASING, theta)


def weak_measurement_channel(q: float) -> KrausChannel:
    """Unsharp R/L measurement; q outside [1/2, 1] is folded onto that branch."""
    q = _check_range("q", q, 0.0, 1.0)
    q = max(q, 1.0 - q)
    a, b = math.sqrt(q), math.sqrt(1.0 - q)
    ops = (np.diag([a, b]), np.diag([b, a]))
    return KrausChannel(ops, ChannelModel.WEAK_MEASUREMENT, q)


_FACTORIES = {
    ChannelModel.MEASUREMENT: measurement_channel,
    ChannelModel.DEPHASING: dephasing_channel,
    ChannelModel.WEAK_MEASUREMENT: weak_measurement_channel,
}


def make_channel(model: ChannelModel | str, value: float) -> KrausChannel:
    return _FACTORIES[ChannelModel(model)](value)


def apply_channel(channel: KrausChannel, chi: NDArray) -> NDArray[np.complex128]:
    """Return sum_n A_n chi A_n^dag."""
    chi = np.asarray(chi, dtype=np.complex128)
    A = channel.stacked
    return np.einsum("nab,bc,ndc->ad", A, chi, A.conj())
