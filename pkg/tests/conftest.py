import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rcs.dataset import LabeledDataset

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def blobs(counts, dim=2, seed=0, spread=4.0):
    """One unit-variance Gaussian blob per class."""
    r = np.random.default_rng(seed)
    means = r.normal(0, spread, (len(counts), dim))
    xs = [r.normal(means[c], 1.0, (n, dim)) for c, n in enumerate(counts)]
    return LabeledDataset(np.vstack(xs), np.repeat(np.arange(len(counts)), counts))


WINE = __import__("pathlib").Path(__file__).resolve().parents[1] / "data" / "wine.csv"


@pytest.fixture(scope="session")
def wine():
    from rcs.dataset import load_csv
    return load_csv(WINE, "class")


def wine_fold(ds):
    """Wine rows trimmed to per-class counts 50, 42 and 35."""
    keep = np.concatenate([np.flatnonzero(ds.labels == ds.label_names.index(name))[:n]
                           for name, n in (("2", 50), ("1", 42), ("3", 35))])
    return ds.subset(np.sort(keep))


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def verdict():
    """Record one acceptance line: ``verdict(n, ok, detail)``."""
    def record(n: int, ok: bool, detail: str) -> bool:
        ACCEPTANCE[n] = (bool(ok), detail)
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
