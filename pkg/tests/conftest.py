"""Shared fixtures for the TVOR test suite."""

import os

import pytest
from click.testing import CliRunner

from cli import create_cli
from engine import Dataset
from histogram import Histogram
from simulation import make_synthetic_dataset, planted_outlier_spec

FIXTURES_DIR = os.path.join(os.path.dirname(__file__), os.pardir, 'fixtures')
PLANTED_SEED = 20240601


def histogram_with(label: str, size: int, variation: int, origin: int = 0) -> Histogram:
    """Two-bin histogram with the given N and DTV (same parity, variation <= size)."""
    assert 0 <= variation <= size and (size - variation) % 2 == 0
    return Histogram(label, origin, [(size + variation) // 2, (size - variation) // 2])


def fixture_path(name: str) -> str:
    return os.path.abspath(os.path.join(FIXTURES_DIR, name))


@pytest.fixture(scope='session')
def planted_dataset() -> Dataset:
    """60 smooth beta(2, 3) histograms plus one 30%-heaped histogram labelled 'planted'."""
    return make_synthetic_dataset(planted_outlier_spec(), PLANTED_SEED)


@pytest.fixture
def cli():
    return create_cli()


@pytest.fixture
def runner():
    return CliRunner(mix_stderr=False)


@pytest.fixture
def near_uniform_csv() -> str:
    return fixture_path('near_uniform.csv')
