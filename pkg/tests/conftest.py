"""Suite-wide bookkeeping.

Every ``Decomposition`` built anywhere in the run has its orthogonality
error recorded, and every L1-constrained update of SPC its L1 slack, so
the acceptance module can check them across the whole suite. Acceptance
tests are moved to the end of the run for that reason, and their verdicts
are listed in the terminal summary.
"""
import importlib

import numpy as np
import pytest

# the package re-exports functions under the module names
engine = importlib.import_module("smssvd.engine")
spc = importlib.import_module("smssvd.spc")

ORTHO_ERRORS: list[float] = []
L1_EXCESS: list[float] = []
VERDICTS: dict[str, tuple[bool, str]] = {}

_orig_init = engine.Decomposition.__init__


def _recording_init(self, *args, **kwargs):
    _orig_init(self, *args, **kwargs)
    ORTHO_ERRORS.append(self.orthogonality_error())


engine.Decomposition.__init__ = _recording_init

_orig_l1 = spc.l1_unit_update


def _recording_l1(a, c):
    u = _orig_l1(a, c)
    L1_EXCESS.append(float(np.abs(u).sum() - c))
    return u


spc.l1_unit_update = _recording_l1


def pytest_collection_modifyitems(config, items):
    items.sort(key=lambda it: it.nodeid.split("::")[0].endswith("test_acceptance.py"))


@pytest.fixture
def verdict():
    """``verdict(name, ok, detail)`` stores a criterion result for the summary."""

    def record(name: str, ok: bool, detail: str = ""):
        VERDICTS[name] = (bool(ok), detail)
        print(f"{name}: {'PASS' if ok else 'FAIL'} {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(VERDICTS):
        ok, detail = VERDICTS[name]
        terminalreporter.write_line(f"{name}: {'PASS' if ok else 'FAIL'}  {detail}")
