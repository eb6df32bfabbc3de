"""Pytest configuration and fixtures."""

from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from src.observability.logger import configure_logging


def pytest_addoption(parser):
    parser.addoption("--run-slow", action="store_true", default=False, help="run slow training tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: trains a model for many epochs")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def quiet_logging(tmp_path_factory):
    """Send run logs to a temp directory and keep the console clean."""
    configure_logging("WARNING", tmp_path_factory.mktemp("logs"), console=False)
    yield


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def correlated_frame(n_rows: int, seed: int = 0) -> pd.DataFrame:
    """Two categorical columns where `b` mostly follows `a`, plus a number."""
    gen = np.random.default_rng(seed)
    a = gen.choice(["x", "y", "z"], size=n_rows, p=[0.5, 0.3, 0.2])
    follow = {"x": "p", "y": "q", "z": "r"}
    b = np.array([follow[v] if gen.random() < 0.9 else "s" for v in a])
    amount = np.round(gen.normal(50.0, 10.0, size=n_rows), 1)
    return pd.DataFrame({"a": a, "b": b, "amount": [str(v) for v in amount]})


def sequence_frame(n_groups: int, seed: int = 0) -> pd.DataFrame:
    """Event table: per group an increasing step counter and a state column."""
    gen = np.random.default_rng(seed)
    rows = []
    for g in range(n_groups):
        for step in range(int(gen.integers(1, 5))):
            rows.append({"user": f"u{g}", "step": str(step), "state": "start" if step == 0 else "next"})
    return pd.DataFrame(rows, columns=["user", "step", "state"])


def write_csv(df: pd.DataFrame, path: Path) -> Path:
    df.to_csv(path, index=False, lineterminator="\n")
    return path


@pytest.fixture
def flat_csv(tmp_path) -> Path:
    return write_csv(correlated_frame(200), tmp_path / "people.csv")
