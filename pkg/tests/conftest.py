import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

PI = math.pi
THETAS = (PI / 16, PI / 8, 3 * PI / 16, PI / 4)

finite = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False)


@st.composite
def density_matrices(draw):
    g = np.array(draw(st.lists(finite, min_size=8, max_size=8))).reshape(2, 2, 2)
    g = g[0] + 1j * g[1]
    rho = g @ g.conj().T
    tr = np.trace(rho).real
    if tr < 1e-6:
        return np.diag([1.0, 0.0]).astype(complex)
    return rho / tr


@st.composite
def coin_states(draw):
    from decoherent_walk.coin import CoinState

    v = np.array(draw(st.lists(finite, min_size=4, max_size=4)))
    n = np.linalg.norm(v)
    if n < 1e-3:
        return CoinState.right()
    v = v / n
    return CoinState(complex(v[0], v[1]), complex(v[2], v[3]))


def random_density(rng):
    g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


@pytest.fixture
def rng():
    return np.random.default_rng(20021)


# ------------------------------------------------------------ acceptance report
_VERDICTS: dict[int, list[tuple[bool, str]]] = {}


@pytest.fixture
def verdict():
    """Record one check of a numbered acceptance criterion, then assert it."""

    def record(criterion: int, ok: bool, detail: str):
        _VERDICTS.setdefault(criterion, []).append((bool(ok), detail))
        print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_VERDICTS):
        checks = _VERDICTS[n]
        status = "PASS" if all(ok for ok, _ in checks) else "FAIL"
        details = "; ".join(f"{'ok' if ok else 'FAILED'}: {d}" for ok, d in checks)
        terminalreporter.write_line(f"[{status}] criterion {n:2d} | {details}")
