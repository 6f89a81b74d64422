import numpy as np
import pytest

from pqselect.classify import KnnConfig
from pqselect.evalcore import Criterion, make_folds
from pqselect.features import Dataset, featurize_dataset
from pqselect.synth import SynthesisConfig, build_dataset


def toy_dataset(seed=0, per_class=40, spread=0.12, n_noise=9):
    """Three classes separated by three informative columns, then pure-noise columns."""
    rng = np.random.default_rng(seed)
    y = np.repeat([1, 2, 3], per_class)
    X = rng.uniform(0.0, 1.0, (y.size, 3 + n_noise))
    centers = np.array([[0.2, 0.5, 0.8], [0.8, 0.2, 0.5], [0.5, 0.8, 0.2]])
    X[:, :3] = centers[y - 1] + rng.normal(0.0, spread, (y.size, 3))
    return Dataset(X, y)


def all_masks(n):
    """Every non-empty mask over ``n`` features, as a (2**n - 1, n) bool array."""
    codes = np.arange(1, 2 ** n)
    return ((codes[:, None] >> np.arange(n)) & 1).astype(bool)


@pytest.fixture(scope="session")
def toy():
    return toy_dataset()


@pytest.fixture(scope="session")
def toy_criterion(toy):
    return Criterion(toy, KnnConfig(), make_folds(toy, 0))


@pytest.fixture(scope="session")
def small_pq():
    """Featurised pure events, 10 per class (140 rows x 99 features)."""
    return featurize_dataset(build_dataset(SynthesisConfig(rng_seed=3), 10))


# -- acceptance summary: one PASS/FAIL line per criterion -------------------------

_CRITERIA = {}


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    number = props.get("criterion")
    if number is None:
        return
    entry = _CRITERIA.setdefault(number, {"title": props["title"], "outcome": "PASS",
                                          "measured": []})
    if report.failed:
        entry["outcome"] = "FAIL"
    elif report.skipped and entry["outcome"] == "PASS":
        entry["outcome"] = "SKIP"
    if report.when == "call":
        entry["measured"] += [v for k, v in report.user_properties if k == "measured"]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        e = _CRITERIA[number]
        line = f"criterion {number:>2}: {e['outcome']}  {e['title']}"
        if e["measured"]:
            line += "  [" + "; ".join(e["measured"]) + "]"
        terminalreporter.write_line(line)


@pytest.fixture(autouse=True)
def _criterion_tag(request):
    marker = request.node.get_closest_marker("criterion")
    if marker is not None:
        number, title = marker.args
        request.node.user_properties.append(("criterion", number))
        request.node.user_properties.append(("title", title))
    yield


@pytest.fixture
def measured(request):
    """Attach a measured value to the acceptance summary line."""
    def note(text):
        request.node.user_properties.append(("measured", text))
    return note
