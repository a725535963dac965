"""Shared fixtures: tiny synthetic corpora and processed samples."""

import numpy as np
import pytest

from s4mi.executor.synthetic import synthetic_samples
from s4mi.model.config import PreprocessProfile, SyntheticSpec
from s4mi.model.enums import PreprocessMode
from s4mi.preprocessing.pipeline import preprocess_all


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def tiny_spec():
    return SyntheticSpec(n_images=12, image_size=16, foreground_fraction=0.25, seed=3)


@pytest.fixture
def tiny_profile():
    return PreprocessProfile(mode=PreprocessMode.INTERPOLATE, intermediate_size=16, target_size=16,
                             normalize_red=False)


@pytest.fixture
def tiny_samples(tiny_spec, tiny_profile):
    """12 processed 16×16 RGB samples with binary masks and hue labels."""
    return preprocess_all(synthetic_samples(tiny_spec), tiny_profile)


@pytest.fixture
def output_root(tmp_path, monkeypatch):
    monkeypatch.delenv('S4MI_OUTPUT_ROOT', raising=False)
    return tmp_path / 'results'
