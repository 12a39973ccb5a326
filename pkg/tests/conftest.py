import numpy as np
import pytest

from hsiband.bandselect import BandSubset, SelectionThresholds
from hsiband.datacube import SyntheticSpec, generate_synthetic
from hsiband.wrapper import EvaluationRecord


def record(accuracy, n_bands, defined=True, th=(0.0, 0.5)):
    th = SelectionThresholds(*th)
    return EvaluationRecord(th, BandSubset(tuple(range(n_bands)), th), float(accuracy), defined)


class TableEvaluator:
    """Evaluator backed by explicit (accuracy, n_bands) tables; NaN accuracy = undefined."""

    def __init__(self, grid, accuracy, bands):
        self.grid = grid
        self.accuracy = np.asarray(accuracy, dtype=float)
        self.bands = np.asarray(bands, dtype=int)
        self.calls = []
        self._index = {
            (round(grid.thresholds(p).th_redundancy, 12), round(grid.thresholds(p).th_relevance, 12)): p
            for p in grid.points()
        }

    def point_of(self, th):
        return self._index[(round(th.th_redundancy, 12), round(th.th_relevance, 12))]

    def __call__(self, th):
        p = self.point_of(th)
        self.calls.append(p)
        acc = self.accuracy[p]
        if np.isnan(acc):
            return EvaluationRecord(th, BandSubset((), th), 0.0, False)
        return EvaluationRecord(th, BandSubset(tuple(range(self.bands[p])), th), float(acc), True)


@pytest.fixture
def small_synthetic():
    spec = SyntheticSpec(width=16, height=16, n_classes=3, relevant_bands=2,
                         redundant_copies_per_relevant=1, noise_bands=2, noise_amplitude=0.3)
    return generate_synthetic(spec, seed=3)


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is not None and call.when == "call":
        item.user_properties.append(("criterion", marker.args[0]))


def pytest_terminal_summary(terminalreporter):
    rows = []
    for outcome in ("passed", "failed", "skipped"):
        for rep in terminalreporter.stats.get(outcome, []):
            props = dict(getattr(rep, "user_properties", []))
            if "criterion" in props:
                rows.append((props["criterion"], outcome.upper()))
            elif outcome == "skipped" and "test_acceptance" in getattr(rep, "nodeid", ""):
                rows.append((rep.nodeid.split("::")[-1], "SKIPPED"))
    if rows:
        terminalreporter.section("acceptance criteria")
        for name, outcome in sorted(rows):
            terminalreporter.write_line(f"{outcome:8s} {name}")
