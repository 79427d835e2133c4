import json
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from medsynth.annotate import read_frame
from medsynth.cli import main
from medsynth.dataset import DatasetManifest


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["make-assets", "--out", str(root / "assets"), "--size", "96"]) == 0
    return root


@pytest.fixture(scope="module")
def generated(workspace):
    out = workspace / "dr"
    cfg = workspace / "assets" / "configs" / "dr_cad.json"
    assert main(["generate", "--config", str(cfg), "--out", str(out), "--count", "6", "--seed", "4"]) == 0
    return out


def test_generate_layout(generated):
    manifest = DatasetManifest.load(generated / "manifest.json")
    assert len(manifest.entries) == 6
    manifest.validate_files(generated)
    names = sorted(p.name for p in (generated / "train").iterdir())
    assert names[:5] == ["000000.cls.png", "000000.depth.png", "000000.inst.png", "000000.json", "000000.rgb.png"]
    with Image.open(generated / "train" / "000000.rgb.png") as im:
        assert im.size == (96, 96)


def test_generate_appends_and_coco(workspace, generated):
    cfg = workspace / "assets" / "configs" / "sdr_cad.json"
    out = workspace / "mixed"
    assert main(["generate", "--config", str(cfg), "--out", str(out), "--count", "2", "--split", "test",
                 "--format", "coco"]) == 0
    assert main(["generate", "--config", str(cfg), "--out", str(out), "--count", "2", "--split", "test",
                 "--start-index", "2"]) == 0
    manifest = DatasetManifest.load(out / "manifest.json")
    assert [e.id for e in manifest.entries] == [f"test/{i:06d}" for i in range(4)]
    coco = json.loads((out / "test.coco.json").read_text())
    assert [c["name"] for c in coco["categories"]] == ["body", "gown", "shirt", "pants", "hat", "mask", "glove"]


def test_split_and_stats(generated, tmp_path, capsys):
    out = tmp_path / "split.json"
    assert main(["split", "--manifest", str(generated), "--ratios", "0.5,0.17,0.33", "--out", str(out)]) == 0
    counts = DatasetManifest.load(out).counts()
    assert sum(counts.values()) == 6
    capsys.readouterr()
    assert main(["stats", str(out)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split() == ["Dataset", "Train", "Validation", "Test", "Total"]


def test_evaluate_perfect_predictions(generated, tmp_path, capsys):
    manifest = DatasetManifest.load(generated / "manifest.json")
    preds = tmp_path / "p.jsonl"
    with open(preds, "w") as fh:
        for e in manifest.entries:
            for o in read_frame(generated / e.annotation).objects:
                fh.write(json.dumps({"frame": e.id, "class_id": o.class_id, "bbox": o.bbox.as_list(),
                                     "confidence": 0.9}) + "\n")
    capsys.readouterr()
    rc = main(["evaluate", "--manifest", str(generated), "--predictions", str(preds), "--split", "train",
               "--name", "oracle", "--out", str(tmp_path / "r.json")])
    assert rc == 0
    text = capsys.readouterr().out
    assert text.splitlines()[2].split() == ["oracle", "100.00", "100.00", "100.00", "100.00"]
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["oracle"]["all"]["mAP"] == 1.0


def test_augment_green_and_mosaic(generated, tmp_path):
    green = tmp_path / "green"
    assert main(["augment", "--manifest", str(generated), "--op", "green", "--probability", "0",
                 "--out", str(green)]) == 0
    src = np.asarray(Image.open(generated / "train" / "000001.rgb.png"))
    assert np.array_equal(np.asarray(Image.open(green / "train" / "000001.rgb.png")), src)
    mos = tmp_path / "mosaic"
    assert main(["augment", "--manifest", str(generated), "--op", "mosaic", "--size", "64", "--out", str(mos)]) == 0
    labels = json.loads((mos / "mosaic" / "000000.labels.json").read_text())
    boxes = np.array(labels["boxes"]).reshape(-1, 4)
    assert np.all(boxes >= 0) and np.all(boxes <= 64)


def test_composite(tmp_path):
    fg_dir = tmp_path / "fg" / "person1"
    fg_dir.mkdir(parents=True)
    fg = np.zeros((16, 16, 3), np.uint8)
    fg[..., 1] = 255
    fg[4:12, 4:12] = (180, 90, 70)
    Image.fromarray(fg).save(fg_dir / "a.png")
    bg_dir = tmp_path / "bg"
    bg_dir.mkdir()
    Image.fromarray(np.full((16, 16, 3), 33, np.uint8)).save(bg_dir / "b.png")
    out = tmp_path / "mr"
    assert main(["composite", "--foreground", str(tmp_path / "fg"), "--background", str(bg_dir),
                 "--out", str(out), "--softness", "0"]) == 0
    result = np.asarray(Image.open(out / "train" / "person1" / "a.png"))
    want = np.where((fg == (0, 255, 0)).all(-1, keepdims=True), 33, fg)
    assert np.array_equal(result, want)
    manifest = DatasetManifest.load(out / "manifest.json")
    assert manifest.entries[0].group == "person1" and manifest.entries[0].mode == "MR"


def test_errors_are_single_lines(tmp_path, capsys):
    assert main(["generate", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path / "o")]) == 1
    err = capsys.readouterr().err.strip()
    assert err.startswith("error:") and "\n" not in err
    assert main(["stats", str(tmp_path / "nothing.json")]) == 1
    assert capsys.readouterr().err.startswith("error:")


def test_environment_defaults(monkeypatch, generated, tmp_path):
    monkeypatch.setenv("MEDSYNTH_SEED", "5")
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["split", "--manifest", str(generated), "--out", str(a)]) == 0
    assert main(["split", "--manifest", str(generated), "--out", str(b), "--seed", "5"]) == 0
    assert a.read_text() == b.read_text()


def test_thread_count_does_not_change_output(workspace, tmp_path):
    cfg = str(workspace / "assets" / "configs" / "sdr_scans.json")
    for threads in ("1", "3"):
        assert main(["generate", "--config", cfg, "--out", str(tmp_path / threads), "--count", "4",
                     "--threads", threads]) == 0
    one = sorted(p.relative_to(tmp_path / "1") for p in (tmp_path / "1").rglob("*") if p.is_file())
    for rel in one:
        assert (tmp_path / "1" / rel).read_bytes() == (tmp_path / "3" / rel).read_bytes()
