"""Shared fixtures: the four shipped experiment configurations with their
clean datasets, generated once per session."""

from pathlib import Path

import pytest

from reglsl import background_field, generate_dataset
from reglsl.experiments import parse_config

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


class ExperimentData:
    """Config plus simulated clean perturbed/background datasets."""

    def __init__(self, name):
        self.config = parse_config(CONFIG_DIR / f"{name}.cfg")
        self.sources = self.config.sources()
        self.data = generate_dataset(
            self.config.grid, self.config.true_field(), self.config.lambdas, self.sources
        )
        self.background = generate_dataset(
            self.config.grid,
            background_field(self.config.grid, self.config.equation),
            self.config.lambdas,
            self.sources,
        )


@pytest.fixture(scope="session")
def siso_schrodinger():
    return ExperimentData("siso_schrodinger")


@pytest.fixture(scope="session")
def siso_helmholtz():
    return ExperimentData("siso_helmholtz")


@pytest.fixture(scope="session")
def mimo_schrodinger():
    return ExperimentData("mimo_schrodinger")


@pytest.fixture(scope="session")
def mimo_helmholtz():
    return ExperimentData("mimo_helmholtz")
