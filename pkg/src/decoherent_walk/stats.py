"""Position distributions, moment series, classical baselines and result I/O."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

import numpy as np
from numpy.typing import NDArray

__all__ = [
    "PositionDistribution",
    "MomentSeries",
    "MomentSummary",
    "classical_binomial",
    "total_variation",
    "expected_tv_error",
    "summarize",
    "export",
    "read_distribution_csv",
    "read_series_csv",
    "read_json",
]


@dataclass(frozen=True, eq=False)
class PositionDistribution:
    """p(x) on the consecutive positions offset, offset+1, ..."""

    offset: int
    probabilities: NDArray[np.float64]

    def __post_init__(self):
        probs = np.array(self.probabilities, dtype=np.float64)
        probs.setflags(write=False)
        object.__setattr__(self, "probabilities", probs)
        object.__setattr__(self, "offset", int(self.offset))

    @property
    def positions(self) -> NDArray[np.int64]:
        return np.arange(self.offset, self.offset + len(self.probabilities))

    @property
    def total(self) -> float:
        return float(math.fsum(self.probabilities))

    def moment(self, order: int) -> float:
        x = self.positions.astype(np.float64)
        return float(math.fsum(x**order * self.probabilities))

    @property
    def mean(self) -> float:
        return self.moment(1)

    @property
    def variance(self) -> float:
        m = self.mean
        return self.moment(2) - m * m

    def __getitem__(self, x: int) -> float:
        i = x - self.offset
        if 0 <= i < len(self.probabilities):
            return float(self.probabilities[i])
        return 0.0

    def padded(self, lo: int, hi: int) -> NDArray[np.float64]:
        """Probabilities on lo..hi inclusive, zero outside the stored support."""
        if lo > self.offset or hi < self.offset + len(self.probabilities) - 1:
            raise ValueError("padding window must contain the stored support")
        out = np.zeros(hi - lo + 1)
        start = self.offset - lo
        out[start : start + len(self.probabilities)] = self.probabilities
        return out

    def as_dict(self) -> dict[int, float]:
        return {int(x): float(p) for x, p in zip(self.positions, self.probabilities)}

    def __eq__(self, other):
        if not isinstance(other, PositionDistribution):
            return NotImplemented
        return self.offset == other.offset and np.array_equal(self.probabilities, other.probabilities)


def _align(a: PositionDistribution, b: PositionDistribution):
    lo = min(a.offset, b.offset)
    hi = max(a.offset + len(a.probabilities), b.offset + len(b.probabilities)) - 1
    return a.padded(lo, hi), b.padded(lo, hi), lo


@dataclass(frozen=True)
class MomentSummary:
    mean: float
    variance: float
    stderr_mean: float | None = None
    stderr_variance: float | None = None


@dataclass(eq=False)
class MomentSeries:
    """Mean and variance of position for a run of consecutive step counts."""

    t: NDArray[np.int64]
    mean: NDArray[np.float64]
    variance: NDArray[np.float64]
    stderr_mean: NDArray[np.float64] | None = None
    stderr_variance: NDArray[np.float64] | None = None
    extra: dict[str, NDArray[np.float64]] = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.int64)
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.variance = np.asarray(self.variance, dtype=np.float64)
        n = len(self.t)
        arrays = [self.mean, self.variance] + [
            a for a in (self.stderr_mean, self.stderr_variance) if a is not None
        ]
        if any(len(a) != n for a in arrays) or any(len(a) != n for a in self.extra.values()):
            raise ValueError("moment series columns must have equal length")

    @property
    def second_moment(self) -> NDArray[np.float64]:
        return self.variance + self.mean**2

    @property
    def has_errors(self) -> bool:
        return self.stderr_mean is not None

    def at(self, t: int) -> MomentSummary:
        (idx,) = np.nonzero(self.t == t)
        if len(idx) == 0:
            raise KeyError(t)
        i = int(idx[0])
        return MomentSummary(
            float(self.mean[i]),
            float(self.variance[i]),
            None if self.stderr_mean is None else float(self.stderr_mean[i]),
            None if self.stderr_variance is None else float(self.stderr_variance[i]),
        )

    def columns(self) -> dict[str, NDArray]:
        cols: dict[str, NDArray] = {"t": self.t, "mean": self.mean, "variance": self.variance}
        if self.stderr_mean is not None:
            cols["stderr_mean"] = self.stderr_mean
        if self.stderr_variance is not None:
            cols["stderr_variance"] = self.stderr_variance
        cols.update(self.extra)
        return cols

    def __eq__(self, other):
        if not isinstance(other, MomentSeries):
            return NotImplemented
        a, b = self.columns(), other.columns()
        return a.keys() == b.keys() and all(np.array_equal(a[k], b[k]) for k in a)


def classical_binomial(t: int) -> PositionDistribution:
    """
    Classical walk distribution P(x) = C(t, (t+x)/2) / 2^t on -t..t.

    Built outward from the central term by the ratio recurrence
    C(t, k+1) = C(t, k) (t-k)/(k+1), so nothing overflows at large t.
    """
    t = int(t)
    if t < 0:
        raise ValueError("t must be >= 0")
    w = np.zeros(t + 1)
    kc = t // 2
    w[kc] = math.exp(math.lgamma(t + 1) - math.lgamma(kc + 1) - math.lgamma(t - kc + 1) - t * math.log(2))
    for k in range(kc, t):
        w[k + 1] = w[k] * (t - k) / (k + 1)
    for k in range(kc, 0, -1):
        w[k - 1] = w[k] * k / (t - k + 1)
    w /= math.fsum(w)
    probs = np.zeros(2 * t + 1)
    probs[::2] = w
    return PositionDistribution(-t, probs)


def total_variation(a: PositionDistribution, b: PositionDistribution) -> float:
    pa, pb, _ = _align(a, b)
    return 0.5 * float(math.fsum(np.abs(pa - pb)))


def expected_tv_error(stderr) -> float:
    """
    Expected TV distance produced by independent Gaussian errors with the given per-site stderr.

    Uses E|N(0, s^2)| = s sqrt(2/pi).
    """
    return 0.5 * math.sqrt(2.0 / math.pi) * float(math.fsum(np.asarray(stderr, dtype=np.float64)))


def summarize(result) -> MomentSummary:
    """
    Mean and variance of a distribution, or of an ensemble's final mean distribution.

    For an ensemble the standard errors across runs are attached.
    """
    if isinstance(result, PositionDistribution):
        return MomentSummary(result.mean, result.variance)
    dist = result.distribution
    entry = result.moments.at(result.steps)
    return MomentSummary(dist.mean, dist.variance, entry.stderr_mean, entry.stderr_variance)


# --------------------------------------------------------------------------- I/O


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _write_csv(path: Path, header: Iterable[str], rows: Iterable[Iterable]) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header))
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _payload(data) -> dict[str, Any]:
    if isinstance(data, PositionDistribution):
        return {
            "distribution": {
                "x": data.positions.tolist(),
                "probability": data.probabilities.tolist(),
            }
        }
    if isinstance(data, MomentSeries):
        return {"moments": {k: v.tolist() for k, v in data.columns().items()}}
    if isinstance(data, dict):
        out: dict[str, Any] = {}
        for key, value in data.items():
            if isinstance(value, (PositionDistribution, MomentSeries)):
                out[key] = next(iter(_payload(value).values()))
            elif isinstance(value, np.ndarray):
                out[key] = value.tolist()
            else:
                out[key] = value
        return out
    raise TypeError(f"cannot export {type(data).__name__}")


def export(data, format: str, destination, meta: dict | None = None) -> Path:
    """
    Write a distribution, moment series or dict of those to `destination`.

    CSV layouts are ``x,probability`` and ``t,mean,variance[,stderr_mean,stderr_variance]``;
    JSON is ``{"meta": {...}, "data": {...}}``.  Floats round-trip exactly.
    """
    path = Path(destination)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if format == "csv":
            if isinstance(data, PositionDistribution):
                _write_csv(path, ["x", "probability"], zip(data.positions, data.probabilities))
            elif isinstance(data, MomentSeries):
                cols = data.columns()
                _write_csv(path, cols.keys(), zip(*cols.values()))
            else:
                raise TypeError(f"CSV export needs a distribution or moment series, got {type(data).__name__}")
        elif format == "json":
            doc = {"meta": dict(meta or {}), "data": _payload(data)}
            path.write_text(json.dumps(doc, indent=1, allow_nan=False) + "\n")
        else:
            raise ValueError(f"unknown format {format!r} (expected csv or json)")
    except OSError as exc:
        raise OSError(f"failed writing {path}: {exc.strerror or exc}") from exc
    return path


def read_distribution_csv(path) -> PositionDistribution:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if rows[0] != ["x", "probability"]:
        raise ValueError(f"{path}: not a distribution CSV")
    xs = [int(r[0]) for r in rows[1:]]
    ps = [float(r[1]) for r in rows[1:]]
    if xs != list(range(xs[0], xs[0] + len(xs))):
        raise ValueError(f"{path}: positions are not consecutive")
    return PositionDistribution(xs[0], np.array(ps))


def read_series_csv(path) -> MomentSeries:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    cols = {h: [r[i] for r in body] for i, h in enumerate(header)}
    t = np.array([int(v) for v in cols.pop("t")])
    f = {k: np.array([float(v) for v in vs]) for k, vs in cols.items()}
    return MomentSeries(
        t,
        f.pop("mean"),
        f.pop("variance"),
        f.pop("stderr_mean", None),
        f.pop("stderr_variance", None),
        extra=f,
    )


def read_json(path) -> dict[str, Any]:
    """Load an exported JSON document, rebuilding distributions and series."""
    doc = json.loads(Path(path).read_text())
    data = {}
    for key, value in doc["data"].items():
        if isinstance(value, dict) and set(value) == {"x", "probability"}:
            data[key] = PositionDistribution(value["x"][0] if value["x"] else 0, np.array(value["probability"]))
        elif isinstance(value, dict) and {"t", "mean", "variance"} <= set(value):
            v = dict(value)
            data[key] = MomentSeries(
                v.pop("t"), v.pop("mean"), v.pop("variance"),
                None if "stderr_mean" not in v else np.array(v.pop("stderr_mean")),
                None if "stderr_variance" not in v else np.array(v.pop("stderr_variance")),
                extra={k: np.array(a) for k, a in v.items()},
            )
        else:
            data[key] = value
    return {"meta": doc["meta"], "data": data}
