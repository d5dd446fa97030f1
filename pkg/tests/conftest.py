import json
from importlib import resources
from pathlib import Path

import pytest

import missionrisk as mr

TERRA_DIR = Path(str(resources.files("missionrisk.data").joinpath("terra")))


@pytest.fixture(scope="session")
def terra_paths() -> dict[str, Path]:
    paths = {name: TERRA_DIR / f"{name}.json"
             for name in ("catalog", "mission", "assessment")}
    for path in paths.values():
        assert path.is_file(), f"packaged fixture missing: {path}"
    return paths


@pytest.fixture(scope="session")
def terra_docs(terra_paths) -> dict[str, dict]:
    return {name: json.loads(path.read_text())
            for name, path in terra_paths.items()}


@pytest.fixture(scope="session")
def terra_catalog(terra_paths) -> mr.Catalog:
    return mr.load_catalog(terra_paths["catalog"])


@pytest.fixture(scope="session")
def terra_mission(terra_paths) -> mr.MissionSpec:
    return mr.load_mission(terra_paths["mission"])


@pytest.fixture(scope="session")
def terra_assessment(terra_paths) -> mr.Assessment:
    return mr.load_assessment(terra_paths["assessment"])


@pytest.fixture(scope="session")
def terra_result(terra_catalog, terra_mission, terra_assessment) -> mr.AssessmentResult:
    return mr.run_assessment(terra_catalog, terra_mission.mission_graph(),
                             terra_mission.attack_chains, terra_assessment)
