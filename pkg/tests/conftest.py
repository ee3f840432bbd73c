import json
import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "scripts"))

# Worked one-image example: candidate plus five references for image 544.
FIXTURE_CANDIDATE = "A baseball player is swinging his bat to hit the ball."
FIXTURE_REFERENCES = [
    "A man swinging a bat at a baseball on a field.",
    "A man that has a baseball bat standing in the dirt.",
    "The stands are packed as a baseball player in a gray uniform holds a bat"
    " as a catcher holds out his mitt.",
    "A baseball player holding a bat over the top of a base.",
    "A baseball game is going on for the crowd.",
]


@pytest.fixture
def fixture_candidate():
    return FIXTURE_CANDIDATE


@pytest.fixture
def fixture_references():
    return list(FIXTURE_REFERENCES)


@pytest.fixture
def synth_annotations(tmp_path):
    """Seeded 60-image COCO-style file for pipeline tests."""
    from make_synthetic_coco import generate

    path = tmp_path / "synth.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(generate(60, seed=7), fh, indent=1)
        fh.write("\n")
    return str(path)
