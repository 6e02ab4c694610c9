import hashlib
import json

import numpy as np
import pytest

from portraitguide.cli import main
from portraitguide.strokes import StrokeSet, add_stroke, save_sketch

GALIF_CONFIG = {
    "galif": {
        "codebook_size": 16,
        "max_samples": 120,
        "max_fit_descriptors": 4000,
        "patch": 32,
    }
}


def run(argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Full offline pipeline over a small synthetic corpus, via the CLI."""
    root = tmp_path_factory.mktemp("cli")
    config = root / "config.json"
    config.write_text(json.dumps(GALIF_CONFIG))
    assert run(["--seed", 5, "make-corpus", "--out", root / "corpus", "--count", 6, "--size", 128]) == 0
    assert (
        run(
            [
                "build-dataset",
                "--masks", root / "corpus" / "masks",
                "--images", root / "corpus" / "images",
                "--out", root / "dataset",
            ]
        )
        == 0
    )
    manifest = root / "dataset" / "manifest.json"
    assert (
        run(
            ["--config", config, "--seed", 3,
             "train-codebook", "--manifest", manifest, "--out", root / "codebook.bin"]
        )
        == 0
    )
    assert (
        run(
            ["--config", config, "--seed", 3,
             "build-index", "--manifest", manifest,
             "--codebook", root / "codebook.bin", "--out", root / "corpus.idx"]
        )
        == 0
    )
    return root, config, manifest


def test_pipeline_artifacts_exist(pipeline):
    root, _, manifest = pipeline
    assert manifest.exists()
    assert (root / "codebook.bin").exists()
    assert (root / "corpus.idx").exists()


def test_missing_inputs_exit_2(tmp_path):
    assert run(["build-dataset", "--masks", tmp_path / "nope", "--images", tmp_path / "img",
                "--out", tmp_path / "o"]) == 2
    assert run(["train-codebook", "--manifest", tmp_path / "missing.json",
                "--out", tmp_path / "cb.bin"]) == 2
    assert run(["query", "--index", tmp_path / "no.idx", "--codebook", tmp_path / "no.cb",
                "--sketch", tmp_path / "no.json"]) == 2
    assert run(["build-dataset", "--masks", tmp_path / "m", "--images", tmp_path / "i",
                "--out", tmp_path / "o", "--palette", tmp_path / "missing-palette.json"]) == 2


def test_rerun_produces_identical_artifacts(pipeline):
    # same inputs, same output directory (the index stores entry paths
    # relative to its own location, so the location is part of the input)
    root, config, manifest = pipeline
    assert run(["--config", config, "--seed", 3,
                "train-codebook", "--manifest", manifest, "--out", root / "cb2.bin"]) == 0
    assert run(["--config", config, "--seed", 3,
                "build-index", "--manifest", manifest,
                "--codebook", root / "cb2.bin", "--out", root / "idx2.idx"]) == 0

    def digest(p):
        return hashlib.sha256(p.read_bytes()).hexdigest()

    assert digest(root / "cb2.bin") == digest(root / "codebook.bin")
    assert digest(root / "idx2.idx") == digest(root / "corpus.idx")


def test_query_self_contour_rank_one(pipeline, capsys):
    root, _, manifest = pipeline
    doc = json.loads(manifest.read_text())
    contour = manifest.parent / doc["entries"][0]["contour"]
    assert run(["--json", "query", "--index", root / "corpus.idx",
                "--codebook", root / "codebook.bin", "--sketch", contour, "-n", 3]) == 0
    report = json.loads(capsys.readouterr().out)
    assert len(report["results"]) == 3
    assert report["results"][0]["entry_id"] == doc["entries"][0]["entry_id"]
    assert report["results"][0]["similarity"] >= 0.999
    assert report["retrieval_ms"] < 360


def _ring(cx, cy, rx, ry, n=24):
    ts = np.linspace(0, 2 * np.pi, n, endpoint=False)
    return [[float(cx + rx * np.cos(t)), float(cy + ry * np.sin(t))] for t in ts]


def test_guide_writes_all_artifacts(pipeline, tmp_path, capsys):
    root, _, manifest = pipeline
    sketch = StrokeSet(canvas_size=(128, 128))
    sketch = add_stroke(sketch, _ring(64, 70, 38, 48), width=2)  # face outline
    sketch = add_stroke(sketch, _ring(47, 58, 6, 3), width=1)    # an eye
    sketch_path = tmp_path / "sketch.json"
    sketch_path.write_text(json.dumps(save_sketch(sketch)))
    out = tmp_path / "guide-out"
    assert run(["--json", "guide", "--index", root / "corpus.idx",
                "--codebook", root / "codebook.bin", "--manifest", manifest,
                "--sketch", sketch_path, "--out", out, "-n", 3]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["candidates"] == 3
    for name in ("sketch.png", "shadow.png", "merged_mask.png", "revised_contour.png",
                 "guidance_1.png", "guidance_2.png", "guidance_3.png", "report.json"):
        assert (out / name).exists(), name
    assert "retrieval_ms" in report and "synthesis_ms_per_candidate" in report


def test_guide_blank_sketch_refuses_mapping(pipeline, tmp_path, capsys):
    root, _, manifest = pipeline
    sketch_path = tmp_path / "blank.json"
    sketch_path.write_text(json.dumps(save_sketch(StrokeSet(canvas_size=(128, 128)))))
    out = tmp_path / "blank-out"
    assert run(["--json", "guide", "--index", root / "corpus.idx",
                "--codebook", root / "codebook.bin", "--sketch", sketch_path, "--out", out]) == 0
    report = json.loads(capsys.readouterr().out)
    assert any("blank sketch" in w for w in report["warnings"])
    assert not (out / "merged_mask.png").exists()
    assert not (out / "shadow.png").exists()


def test_usage_error_on_unknown_command(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["frobnicate"])
    assert exc.value.code == 2
