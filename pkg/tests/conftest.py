import numpy as np
import pytest

from digidiffeo.grid import DisplacementField

# -- helpers shared across test modules ---------------------------------------


def random_field(rng, extents, amplitude):
    """Unsmoothed uniform displacements in [-amplitude, amplitude]."""
    data = rng.uniform(-amplitude, amplitude, size=(*extents, len(extents)))
    return DisplacementField.from_array(data)


def rotate90(field: DisplacementField, k: int, axes=(0, 1)) -> DisplacementField:
    """Rotate lattice and vectors together by ``k`` quarter turns in the ``axes`` plane.

    ``np.rot90`` sends index ``p`` to ``(N_j - 1 - p_j, p_i)`` on the two axes,
    i.e. the rotation ``(a, b) -> (-b, a)``; vectors get the same rotation.
    """
    i, j = axes
    data = np.array(field.data)
    for _ in range(k % 4):
        data = np.rot90(data, 1, axes=(i, j)).copy()
        ui, uj = data[..., i].copy(), data[..., j].copy()
        data[..., i] = -uj
        data[..., j] = ui
    return DisplacementField.from_array(data)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# -- acceptance summary -------------------------------------------------------

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion reported in the summary")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    label = _LABELS.get(report.nodeid)
    if label is not None:
        _criteria[label] = "PASS" if report.passed else "FAIL"


_LABELS = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            _LABELS[item.nodeid] = mark.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_criteria, key=lambda s: int(s.split()[0][2:])):
        terminalreporter.write_line(f"{_criteria[label]:4s}  {label}")
