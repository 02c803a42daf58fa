import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=30, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def illustrative():
    from qfames.models import build_illustrative, eigendecompose
    from qfames.stateprep import states_from_overlaps

    h, phi = build_illustrative()
    spec = eigendecompose(h)
    return h, phi, spec, states_from_overlaps(spec, phi)


def kron_chain(ops):
    out = np.ones((1, 1))
    for o in ops:
        out = np.kron(out, o)
    return out


PAULI = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}


_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def record(request):
    """Store one pass/fail line per acceptance criterion and echo it."""
    store = request.config.stash.setdefault(_ACCEPTANCE, {})

    def _record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        store[number] = line
        print(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash.get(_ACCEPTANCE, {})
    if store:
        terminalreporter.section("acceptance criteria")
        for n in sorted(store):
            terminalreporter.write_line(store[n])
