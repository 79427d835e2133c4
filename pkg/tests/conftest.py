import dataclasses
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from medsynth.procedural import capsule_human, write_demo_assets
from medsynth.scene import load_config

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


@pytest.fixture(scope="session")
def demo_root(tmp_path_factory) -> Path:
    """Small procedural asset bundle shared by the rendering tests."""
    root = tmp_path_factory.mktemp("assets")
    write_demo_assets(root, seed=3, human_textures_per_gender=4, backgrounds=4, shape_rows=40,
                      garments_per_gender=1)
    return root


@pytest.fixture(scope="session")
def dr_config(demo_root):
    return load_config(demo_root / "configs" / "dr_cad.json")


@pytest.fixture(scope="session")
def sdr_config(demo_root):
    return load_config(demo_root / "configs" / "sdr_scans.json")


@pytest.fixture(scope="session")
def small_dr_config(dr_config):
    return dataclasses.replace(dr_config, image_size=(192, 192))


@pytest.fixture(scope="session")
def small_sdr_config(sdr_config):
    return dataclasses.replace(sdr_config, image_size=(192, 192))


@pytest.fixture(scope="session")
def male_body():
    return capsule_human("male")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
