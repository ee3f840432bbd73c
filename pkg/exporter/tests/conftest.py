import json

import pytest


@pytest.fixture
def candidate_file(tmp_path):
    path = tmp_path / "candidates.json"
    path.write_text(json.dumps([
        {"image_id": 544, "caption": "A baseball player swinging a bat."},
        {"image_id": 9, "caption": "Two dogs run across the wet sand."},
        {"image_id": 23, "caption": "A red kite flies over the beach."},
    ]))
    return str(path)


@pytest.fixture
def annotation_file(tmp_path):
    path = tmp_path / "annotations.json"
    path.write_text(json.dumps({"annotations": [
        {"image_id": 544, "id": 101, "caption": "A man swinging a baseball bat."},
        {"image_id": 544, "id": 102, "caption": "A player at home plate."},
        {"image_id": 9, "id": 103, "caption": "Dogs playing on a beach."},
    ]}))
    return str(path)


@pytest.fixture
def image_dir(tmp_path):
    d = tmp_path / "imgs"
    d.mkdir()
    (d / "544.png").write_bytes(b"not-really-a-png-544")
    (d / "9.jpg").write_bytes(b"jpeg-bytes-9")
    (d / "notes.txt").write_text("ignored: not an image extension")
    return str(d)
