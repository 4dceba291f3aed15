import csv
import json
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from trailnav.cli import main
from trailnav.config import DEFAULTS, RunConfig
from trailnav.errors import ConfigInvalid, EmptyDirectory, InvalidWorld
from trailnav.mask_core import SegMask, load_mask, save_mask

from conftest import band_mask

WORLDS = Path(__file__).resolve().parents[1] / "worlds"


@pytest.fixture
def mask_dir(tmp_path):
    d = tmp_path / "masks"
    d.mkdir()
    for i in range(6):
        save_mask(band_mask(320, 240, 128, 192), d / f"f{i:03d}.png")
    return d


def _rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


# --- config --------------------------------------------------------------

def test_config_defaults_documented():
    assert all(isinstance(h, str) and h for _, h in DEFAULTS.values())
    assert RunConfig()["comp.enabled"] is True


def test_config_rejects_unknown_and_bad_values(tmp_path):
    with pytest.raises(ConfigInvalid):
        RunConfig({"comp.nope": 1})
    with pytest.raises(ConfigInvalid):
        RunConfig().set("planner.k_yaw=abc")
    with pytest.raises(ConfigInvalid):
        RunConfig().set("planner.k_yaw")
    with pytest.raises(ConfigInvalid):
        RunConfig({"comp.w_min": 0.9}).compensator_state()


def test_config_file_formats(tmp_path):
    kv = tmp_path / "a.cfg"
    kv.write_text("# comment\nplanner.k_yaw = 2.0\ncomp.enabled = false\n\nseed=4  # trailing\n")
    cfg = RunConfig.load(kv)
    assert cfg["planner.k_yaw"] == 2.0 and cfg["comp.enabled"] is False and cfg["seed"] == 4
    js = tmp_path / "a.json"
    js.write_text(json.dumps({"planner.k_lat": 1.0, "sim.duration_s": "auto"}))
    assert RunConfig.load(js)["planner.k_lat"] == 1.0


# --- replay --------------------------------------------------------------

def test_replay_fixed_point(mask_dir, tmp_path):
    out = tmp_path / "out"
    assert main(["replay", str(mask_dir), "--out", str(out)]) == 0
    rows = _rows(out / "commands.csv")
    assert len(rows) == 6 and abs(float(rows[-1]["yaw_rate"])) < 1e-9
    summary = json.loads((out / "summary.json").read_text())
    assert summary["rejects"] == 0 and summary["config"] == RunConfig().as_dict() and summary["seed"] == 0


def test_replay_corrupt_file_counts_as_reject(mask_dir, tmp_path):
    (mask_dir / "f002x.png").write_bytes(b"broken")
    out = tmp_path / "out"
    assert main(["replay", str(mask_dir), "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["frames"] == 7 and summary["rejects"] == 1
    assert summary["load_errors"] == [{"file": "f002x.png", "error": "MalformedImage"}]


def test_replay_byte_identical(mask_dir, tmp_path):
    for name in ("a", "b"):
        assert main(["replay", str(mask_dir), "--out", str(tmp_path / name), "--set", "planner.k_yaw=2"]) == 0
    for f in ("commands.csv", "summary.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_replay_latency_column(mask_dir, tmp_path):
    assert main(["replay", str(mask_dir), "--out", str(tmp_path / "o"), "--record-latency"]) == 0
    assert all(float(r["latency_ms"]) >= 0 for r in _rows(tmp_path / "o" / "commands.csv"))


def test_replay_empty_dir_exit_code(tmp_path):
    (tmp_path / "empty").mkdir()
    assert main(["replay", str(tmp_path / "empty"), "--out", str(tmp_path / "o")]) == EmptyDirectory.exit_code


def test_bad_config_exit_code(mask_dir, tmp_path):
    code = main(["replay", str(mask_dir), "--out", str(tmp_path / "o"), "--set", "bogus.key=1"])
    assert code == ConfigInvalid.exit_code


# --- simulate ------------------------------------------------------------

def test_simulate_smoke(tmp_path):
    out = tmp_path / "sim"
    assert main(["simulate", str(WORLDS / "garden.json"), "--speed", "0.8", "--out", str(out), "--seed", "7"]) == 0
    meta = json.loads((out / "metrics.json").read_text())
    assert meta["seed"] == 7 and meta["config"]["seed"] == 7
    (run,) = meta["runs"]
    assert run["completed"] is True and run["speed"] == 0.8
    assert _rows(out / "trace_v0.80.csv")[0].keys() == {"time_s", "x", "y", "heading", "lat_dev"}


@pytest.mark.slow
def test_simulate_sweep_five_records(tmp_path):
    out = tmp_path / "sweep"
    assert main(["simulate", str(WORLDS / "garden.json"), "--sweep", "--out", str(out)]) == 0
    runs = json.loads((out / "metrics.json").read_text())["runs"]
    assert [r["speed"] for r in runs] == [0.2, 0.4, 0.6, 0.8, 1.0]


def test_simulate_paired_seed_comparable(tmp_path):
    args = ["simulate", str(WORLDS / "garden.json"), "--seed", "7", "--set", "sim.blob_failure_prob=0.2",
            "--set", "sim.duration_s=8"]
    assert main(args + ["--out", str(tmp_path / "on")]) == 0
    assert main(args + ["--out", str(tmp_path / "off"), "--no-compensation"]) == 0
    on = json.loads((tmp_path / "on" / "metrics.json").read_text())
    off = json.loads((tmp_path / "off" / "metrics.json").read_text())
    assert on["runs"][0].keys() == off["runs"][0].keys()
    assert on["runs"][0]["compensation"] is True and off["runs"][0]["compensation"] is False
    diff = {k for k in on["config"] if on["config"][k] != off["config"][k]}
    assert diff == {"comp.enabled"}


def test_simulate_byte_identical(tmp_path):
    args = ["simulate", str(WORLDS / "garden.json"), "--seed", "3", "--set", "sim.blob_failure_prob=0.3",
            "--set", "sim.duration_s=6"]
    for name in ("a", "b"):
        assert main(args + ["--out", str(tmp_path / name)]) == 0
    for f in sorted(p.name for p in (tmp_path / "a").iterdir()):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_simulate_plots(tmp_path):
    pytest.importorskip("matplotlib")
    out = tmp_path / "p"
    assert main(["simulate", str(WORLDS / "garden.json"), "--set", "sim.duration_s=2", "--emit-plots",
                 "--out", str(out)]) == 0
    assert (out / "trace_v0.70.png").stat().st_size > 0


def test_simulate_invalid_world(tmp_path):
    bad = tmp_path / "w.json"
    bad.write_text('{"segments": []}')
    assert main(["simulate", str(bad), "--out", str(tmp_path / "o")]) == InvalidWorld.exit_code


# --- dataprep ------------------------------------------------------------

def test_dataprep_relabel(tmp_path):
    src = tmp_path / "ids"
    src.mkdir()
    ids = np.array([[7, 8, 21], [23, 24, 0]], dtype=np.uint8)
    Image.fromarray(ids, mode="L").save(src / "a.png")
    assert main(["dataprep", "relabel", str(src), "--out", str(tmp_path / "o")]) == 0
    assert load_mask(tmp_path / "o" / "a.png").data.tolist() == [[1, 1, 2], [0, 2, 0]]


def test_dataprep_relabel_unmapped_exit(tmp_path):
    from trailnav.errors import UnmappedId

    src = tmp_path / "ids"
    src.mkdir()
    Image.fromarray(np.full((2, 2), 99, dtype=np.uint8), mode="L").save(src / "a.png")
    assert main(["dataprep", "relabel", str(src), "--out", str(tmp_path / "o")]) == UnmappedId.exit_code


def test_dataprep_boxes(tmp_path):
    p = tmp_path / "b.csv"
    p.write_text("image,x,y,w,h\ng1.jpg,0,0,10,10\n")
    assert main(["dataprep", "boxes", str(p), "--size", "20x20", "--out", str(tmp_path / "o")]) == 0
    m = load_mask(tmp_path / "o" / "g1.png")
    assert m.count(1) == 100 and m.count(0) == 300


def test_dataprep_augment_replayable(tmp_path, mask_dir):
    from trailnav.dataprep import AugmentRecord, apply_augment

    for name in ("a", "b"):
        assert main(["dataprep", "augment", str(mask_dir), "--seed", "5", "--out", str(tmp_path / name)]) == 0
    recs = json.loads((tmp_path / "a" / "augment.json").read_text())["records"]
    assert recs == json.loads((tmp_path / "b" / "augment.json").read_text())["records"]
    r = recs[0]
    again = apply_augment(load_mask(mask_dir / r["file"]), AugmentRecord(r["flip"], r["angle_deg"]))
    assert again == load_mask(tmp_path / "a" / "f000.png")


# --- eval ----------------------------------------------------------------

def test_eval_hard_and_soft(tmp_path):
    gt, pred = tmp_path / "gt", tmp_path / "pred"
    gt.mkdir()
    pred.mkdir()
    g = SegMask(np.array([[1, 2, 0], [2, 1, 1]], dtype=np.uint8))
    save_mask(g, gt / "a.png")
    save_mask(g, gt / "b.png")
    save_mask(g, pred / "a.png")
    np.save(pred / "b.npy", np.full((2, 3, 3), 1 / 3))
    out = tmp_path / "o"
    assert main(["eval", str(gt), str(pred), "--out", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["images"] == 2 and rep["missing_predictions"] == []
    assert rep["cross_entropy"] == pytest.approx(np.log(3))
    rows = _rows(out / "per_image.csv")
    assert rows[0]["image"] == "a" and rows[0]["cross_entropy"] == "" and float(rows[0]["pixel_accuracy"]) == 1.0


def test_eval_dimension_mismatch_exit(tmp_path):
    from trailnav.errors import DimensionMismatch

    gt, pred = tmp_path / "gt", tmp_path / "pred"
    gt.mkdir()
    pred.mkdir()
    save_mask(SegMask(np.ones((2, 3), dtype=np.uint8)), gt / "a.png")
    save_mask(SegMask(np.ones((3, 3), dtype=np.uint8)), pred / "a.png")
    assert main(["eval", str(gt), str(pred), "--out", str(tmp_path / "o")]) == DimensionMismatch.exit_code


def test_config_subcommand(capsys):
    assert main(["config"]) == 0
    assert "comp.base_w1" in capsys.readouterr().out
