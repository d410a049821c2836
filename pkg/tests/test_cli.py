import json

import numpy as np
import pytest
from PIL import Image

from presstrack.cli import (ANN_FILE, EXIT_CONFIG, EXIT_OK, EXIT_PARSE, EXIT_RUNTIME, EXIT_USAGE, GT_FILE,
                            SEQ_FILE, TRAJ_FILE, bench, main)
from presstrack.config import RunConfig
from presstrack.io import MotRow, read_mot_csv, read_psq, read_trajectories, write_mot_csv
from presstrack.render import id_color


@pytest.fixture
def short_cfg(tmp_path):
    p = tmp_path / "short.json"
    p.write_text(json.dumps({"sim": {"duration": 8.0, "seed": 11}}))
    return p


@pytest.fixture
def sim_dir(tmp_path, short_cfg):
    out = tmp_path / "sim"
    assert main(["simulate", "--config", str(short_cfg), "--out-dir", str(out)]) == EXIT_OK
    return out


def test_simulate_default_config_files_parse(tmp_path):
    out = tmp_path / "d"
    assert main(["simulate", "--out-dir", str(out)]) == EXIT_OK
    seq = read_psq(out / SEQ_FILE)
    assert len(seq) == 3000
    assert read_mot_csv(out / GT_FILE)
    assert len(read_trajectories(out / TRAJ_FILE)) == 3
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "simulate" and manifest["seed"] == 0
    assert manifest["config"]["tracker"]["strategy"] == "uoe"
    assert set(manifest["timings_s"]) >= {"simulate", "write"}


def test_simulate_fixed_seed_identical_bytes(tmp_path, short_cfg):
    for name in ("a", "b"):
        assert main(["simulate", "--config", str(short_cfg), "--out-dir", str(tmp_path / name)]) == EXIT_OK
    for f in (SEQ_FILE, GT_FILE, ANN_FILE, TRAJ_FILE):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_labels_reproduce_gt(tmp_path, sim_dir):
    out = tmp_path / "labels.csv"
    rc = main(["labels", "--psq", str(sim_dir / SEQ_FILE), "--annotations", str(sim_dir / ANN_FILE),
               "--traj", str(sim_dir / TRAJ_FILE), "--out", str(out)])
    assert rc == EXIT_OK
    assert out.read_bytes() == (sim_dir / GT_FILE).read_bytes()


def test_track_noise_free_ids_equal_persons(tmp_path, sim_dir):
    out = tmp_path / "tracks.csv"
    assert main(["track", "--dets", str(sim_dir / GT_FILE), "--out", str(out)]) == EXIT_OK
    assert {r.id for r in read_mot_csv(out)} == {1, 2, 3}
    assert (tmp_path / "tracks.csv.manifest.json").exists()


def test_track_empty_dets(tmp_path):
    dets, out = tmp_path / "empty.csv", tmp_path / "t.csv"
    dets.write_text("")
    assert main(["track", "--dets", str(dets), "--out", str(out)]) == EXIT_OK
    assert out.read_text() == ""


def test_corrupt_then_both_strategies(tmp_path, sim_dir, short_cfg):
    dets = tmp_path / "dets.csv"
    assert main(["corrupt", "--gt", str(sim_dir / GT_FILE), "--config", str(short_cfg), "--out", str(dets)]) == 0
    rows = read_mot_csv(dets)
    assert rows and all(r.id == -1 for r in rows)
    for strategy in ("uoe", "ioukalman"):
        out = tmp_path / f"{strategy}.csv"
        assert main(["track", "--dets", str(dets), "--strategy", strategy, "--out", str(out)]) == EXIT_OK
        assert read_mot_csv(out)


def test_track_writes_crop_archive(tmp_path, sim_dir):
    crops = tmp_path / "crops"
    rc = main(["track", "--dets", str(sim_dir / GT_FILE), "--out", str(tmp_path / "t.csv"),
               "--psq", str(sim_dir / SEQ_FILE), "--crops-dir", str(crops)])
    assert rc == EXIT_OK
    assert (crops / "centers.csv").exists()
    assert sorted(p.name for p in crops.iterdir() if p.is_dir()) == ["track_1", "track_2", "track_3"]


def test_eval_hyp_equals_gt(capsys, sim_dir):
    gt = str(sim_dir / GT_FILE)
    assert main(["eval", "--gt", gt, "--hyp", gt]) == EXIT_OK
    out = capsys.readouterr().out
    assert "MOTA%=100.000" in out
    assert json.loads(out[out.index("{"):])["mot"]["mota"] == 1.0


def test_eval_three_frame_miss(tmp_path, capsys):
    gt, hyp, js = tmp_path / "gt.csv", tmp_path / "hyp.csv", tmp_path / "r.json"
    write_mot_csv(gt, [MotRow(k, 1, 0, 0, 5, 5) for k in (1, 2, 3)])
    write_mot_csv(hyp, [MotRow(k, 9, 0, 0, 5, 5) for k in (1, 3)])
    assert main(["eval", "--gt", str(gt), "--hyp", str(hyp), "--json", str(js)]) == EXIT_OK
    assert "MOTA%=66.667" in capsys.readouterr().out
    assert json.loads(js.read_text())["mot"]["frag"] == 1


def test_eval_trajectory_self(capsys, sim_dir):
    gt, traj = str(sim_dir / GT_FILE), str(sim_dir / TRAJ_FILE)
    assert main(["eval", "--gt", gt, "--hyp", gt, "--gt-traj", traj, "--est-traj", traj]) == EXIT_OK
    out = capsys.readouterr().out
    doc = json.loads(out[out.index("{"):])
    assert doc["trajectory"]["rte_pct"] == 0.0
    assert "rte_pct=0.0" in out


def test_eval_empty_gt_is_runtime_error(tmp_path):
    gt = tmp_path / "gt.csv"
    gt.write_text("")
    assert main(["eval", "--gt", str(gt), "--hyp", str(gt)]) == EXIT_RUNTIME


def test_render_probes(tmp_path):
    from presstrack.frames import PressureSequence, SparseFrame
    from presstrack.io import write_psq

    g = np.zeros((40, 40))
    g[5:10, 5:10] = 1.0
    psq, tracks = tmp_path / "s.psq", tmp_path / "t.csv"
    write_psq(psq, PressureSequence(40, 40, 25.0, [SparseFrame.from_dense(g), SparseFrame.empty()]))
    write_mot_csv(tracks, [MotRow(1, 1, 4, 4, 8, 8), MotRow(1, 2, 20, 20, 10, 5), MotRow(2, 1, 4, 4, 8, 8)])
    out = tmp_path / "png"
    assert main(["render", "--psq", str(psq), "--tracks", str(tracks), "--out-dir", str(out), "--scale", "2"]) == 0
    f1 = np.asarray(Image.open(out / "frame_1.png"))
    f2 = np.asarray(Image.open(out / "frame_2.png"))
    assert tuple(f1[8, 8]) == id_color(1) and tuple(f1[40, 40]) == id_color(2)
    assert tuple(f2[8, 8]) == id_color(1)  # same id, same color on the next frame


def test_bench_reports_positive_throughput(capsys):
    assert main(["bench", "--repeat", "2", "--frames", "300"]) == EXIT_OK
    assert "frames_per_s=" in capsys.readouterr().out


def test_bench_repeatable_within_20_percent():
    cfg = RunConfig()
    a = bench(cfg, repeat=7)
    b = bench(cfg, repeat=7)
    assert a["frames_per_s"] > 0
    assert abs(a["median_s"] - b["median_s"]) / min(a["median_s"], b["median_s"]) < 0.2


def test_pipeline_outputs_and_report(tmp_path, short_cfg, capsys):
    out = tmp_path / "p"
    assert main(["pipeline", "--config", str(short_cfg), "--out-dir", str(out)]) == EXIT_OK
    report = json.loads((out / "report.json").read_text())
    assert 0.5 < report["mot"]["mota"] <= 1.0
    assert "MOTA%=" in capsys.readouterr().out


@pytest.mark.parametrize("argv, code", [
    (["track", "--dets", "missing.csv", "--out", "x.csv"], EXIT_RUNTIME),
    (["frobnicate"], EXIT_USAGE),
    (["track", "--out", "x.csv"], EXIT_USAGE),
])
def test_exit_codes(tmp_path, monkeypatch, argv, code):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == code


def test_config_and_parse_exit_codes(tmp_path):
    bad_cfg = tmp_path / "c.json"
    bad_cfg.write_text(json.dumps({"tracker": {"conf_discard": 0.9}}))
    dets = tmp_path / "d.csv"
    dets.write_text("1,-1,0,0,1,1,0.9\n")
    assert main(["track", "--dets", str(dets), "--config", str(bad_cfg), "--out", str(tmp_path / "t")]) == EXIT_CONFIG
    dets.write_text("1,-1,0,0,1\n")
    assert main(["track", "--dets", str(dets), "--out", str(tmp_path / "t")]) == EXIT_PARSE
    psq = tmp_path / "s.psq"
    psq.write_text("NOPE\n")
    assert main(["render", "--psq", str(psq), "--out-dir", str(tmp_path / "r")]) == EXIT_PARSE


@pytest.mark.parametrize("level, shown", [("INFO", True), ("WARNING", False)])
def test_log_level_env(monkeypatch, tmp_path, caplog, level, shown):
    monkeypatch.setenv("PRESSTRACK_LOG", level)
    dets = tmp_path / "d.csv"
    write_mot_csv(dets, [MotRow(1, -1, 0, 0, 5, 5, 0.9)])
    assert main(["track", "--dets", str(dets), "--out", str(tmp_path / "t.csv")]) == EXIT_OK
    assert any("stage track" in r.getMessage() for r in caplog.records) == shown
