"""Shared fixtures: one desk-scale trained bundle reused across pipeline
and CLI tests (training it once keeps the suite under control)."""

import pytest

from cablediag.pipeline import train_pipeline
from cablediag.scenario import TASK_IDS, ScenarioConfig, generate_dataset

BUNDLE_N = 200           # >= 10x the largest featureset (16 features)


@pytest.fixture(scope="session")
def desk_config() -> ScenarioConfig:
    return ScenarioConfig(seed=0)


@pytest.fixture(scope="session")
def desk_datasets(desk_config):
    return {task: generate_dataset(desk_config, BUNDLE_N, task)
            for task in TASK_IDS}


@pytest.fixture(scope="session")
def desk_bundle(desk_datasets):
    return train_pipeline(desk_datasets)
