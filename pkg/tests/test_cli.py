import json
import subprocess
import sys
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from clotquant.cli import main
from clotquant.image_core import RoiMask, write_pgm
from clotquant.stats import linear_fit
from clotquant.synth import ClotScene, Disk, add_noise, expected_components, render, scene_to_dict, GrowthModel

SVG_NS = "{http://www.w3.org/2000/svg}"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def three_disks(tmp_path):
    scene = ClotScene(64, 64, clots=(Disk(12, 12, 5), Disk(45, 20, 6), Disk(30, 50, 4)))
    p = tmp_path / "three.pgm"
    write_pgm(p, render(scene))
    return p, scene


def _write_scene(tmp_path, area_rate=8.0, noise=0.0, seed=1, name="scene.json"):
    scene = ClotScene(80, 80, clots=(Disk(20, 20, 3), Disk(55, 30, 4), Disk(35, 60, 2)))
    p = tmp_path / name
    p.write_text(json.dumps(scene_to_dict(scene, GrowthModel(area_rate, (), noise, seed))))
    return p


# ----------------------------------------------------------------- analyze


def test_analyze_three_disks(capsys, three_disks):
    path, scene = three_disks
    code, out, _ = run(capsys, "analyze", path)
    assert code == 0
    d = json.loads(out)
    assert d["n_clots"] == expected_components(scene).count == 3
    assert d["settings"] == {
        "threshold": "otsu",
        "polarity": "dark",
        "connectivity": 8,
        "min_size": 5,
        "roi": "full",
        "median_radius": 0,
        "min_contrast": 25,
    }
    assert d["alarm"] is None


def test_analyze_clot_free(capsys, tmp_path):
    p = tmp_path / "clean.pgm"
    write_pgm(p, add_noise(render(ClotScene(48, 48)), 3, 9))
    code, out, _ = run(capsys, "analyze", p)
    assert code == 0
    assert json.loads(out)["n_clots"] == 0


def test_analyze_clot_free_disk_roi_scene(capsys, tmp_path):
    p = tmp_path / "clean.pgm"
    write_pgm(p, render(ClotScene(48, 48, roi=RoiMask.disk(24, 24, 20))))
    code, out, _ = run(capsys, "analyze", p)
    assert code == 0
    assert json.loads(out)["n_clots"] == 0


def test_analyze_constant_exit_3(capsys, tmp_path):
    p = tmp_path / "flat.pgm"
    write_pgm(p, np.full((10, 10), 200, np.uint8))
    code, _, err = run(capsys, "analyze", p, "--threshold", "otsu")
    assert code == 3
    assert "intensity" in err


def test_analyze_decode_error_exit_2(capsys, tmp_path):
    p = tmp_path / "bad.pgm"
    p.write_bytes(b"P5 4 4 255\n\x00\x01")
    assert run(capsys, "analyze", p)[0] == 2
    assert run(capsys, "analyze", tmp_path / "missing.pgm")[0] == 2


def test_analyze_csv(capsys, three_disks):
    path, _ = three_disks
    code, out, _ = run(capsys, "analyze", path, "--format", "csv")
    assert code == 0
    header, row = out.strip().split("\n")
    assert header == "timestamp,n_clots,cumulative_area,occlusion_fraction,largest_clot"
    assert row.split(",")[1] == "3"


def test_analyze_flags(capsys, three_disks, tmp_path):
    path, _ = three_disks
    labels = tmp_path / "labels.pgm"
    code, out, _ = run(
        capsys, "analyze", path, "--threshold", "128", "--connectivity", "4", "--min-size", "0",
        "--roi", "disk:32,32,40", "--alarm-occlusion", "0.01", "--labels-out", labels,
    )
    assert code == 0
    d = json.loads(out)
    assert d["threshold_used"] == 128
    assert d["alarm"]["state"] == "alarm" and d["alarm"]["reason"] == "occlusion"
    assert labels.read_bytes().startswith(b"P5 64 64 255\n")


@pytest.mark.parametrize(
    "argv",
    [
        ["analyze", "x.pgm", "--bogus"],
        ["analyze", "x.pgm", "--threshold", "300"],
        ["analyze", "x.pgm", "--connectivity", "6"],
        ["analyze", "x.pgm", "--roi", "square"],
        ["frobnicate"],
        [],
    ],
)
def test_usage_errors_exit_1(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 1
    assert "usage:" in capsys.readouterr().err


def test_bad_alarm_limit_exit_1(capsys, three_disks):
    path, _ = three_disks
    code, _, err = run(capsys, "analyze", path, "--alarm-occlusion", "3")
    assert code == 1


# ------------------------------------------------------------ synth/batch


def test_synth_manifest_timestamps(capsys, tmp_path):
    scene = _write_scene(tmp_path)
    out_dir = tmp_path / "frames"
    code, _, _ = run(capsys, "synth", scene, "--frames", 6, "--interval", 10, "--out-dir", out_dir)
    assert code == 0
    lines = (out_dir / "manifest.csv").read_text().splitlines()
    assert lines[0] == "timestamp_min,branch_id,image_path"
    assert [ln.split(",")[0] for ln in lines[1:]] == ["0", "10", "20", "30", "40", "50"]
    assert len(list(out_dir.glob("frame_*.pgm"))) == 6


def test_synth_deterministic(capsys, tmp_path):
    scene = _write_scene(tmp_path, noise=4.0)
    for d in ("a", "b"):
        assert run(capsys, "synth", scene, "--frames", 2, "--out-dir", tmp_path / d, "--seed", 5)[0] == 0
    for name in ("frame_0000.pgm", "frame_0001.pgm", "manifest.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    run(capsys, "synth", scene, "--frames", 1, "--out-dir", tmp_path / "c", "--seed", 6)
    assert (tmp_path / "c" / "frame_0000.pgm").read_bytes() != (tmp_path / "a" / "frame_0000.pgm").read_bytes()


def test_synth_invalid_scene(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"width": 10}')
    assert run(capsys, "synth", p, "--out-dir", tmp_path / "o")[0] == 2
    p.write_text("not json")
    assert run(capsys, "synth", p, "--out-dir", tmp_path / "o")[0] == 2
    assert run(capsys, "synth", tmp_path / "nope.json", "--out-dir", tmp_path / "o")[0] == 2


def test_batch_growth_session(capsys, tmp_path):
    scene = _write_scene(tmp_path)
    frames = tmp_path / "frames"
    run(capsys, "synth", scene, "--frames", 10, "--interval", 10, "--out-dir", frames)
    code, out, _ = run(capsys, "batch", frames / "manifest.csv", "--out-dir", tmp_path / "out")
    assert code == 0
    session = json.loads((tmp_path / "out" / "session_branch-0.json").read_text())
    assert len(session["reports"]) == 10
    assert session["correlation"]["r"] >= 0.99
    csv_lines = (tmp_path / "out" / "session_branch-0.csv").read_text().splitlines()
    assert len(csv_lines) == 11


def test_batch_skips_unreadable_frame(capsys, tmp_path):
    scene = _write_scene(tmp_path)
    frames = tmp_path / "frames"
    run(capsys, "synth", scene, "--frames", 5, "--out-dir", frames)
    (frames / "frame_0002.pgm").write_bytes(b"garbage")
    code, _, err = run(capsys, "batch", frames / "manifest.csv")
    assert code == 0
    assert "warning" in err and "frame_0002.pgm" in err
    session = json.loads((frames / "session_branch-0.json").read_text())
    assert len(session["reports"]) == 4
    assert len(session["skipped"]) == 1


def test_batch_empty_manifest_exit_4(capsys, tmp_path):
    m = tmp_path / "m.csv"
    m.write_text("timestamp_min,branch_id,image_path\n")
    assert run(capsys, "batch", m)[0] == 4


def test_batch_missing_manifest_exit_2(capsys, tmp_path):
    assert run(capsys, "batch", tmp_path / "nope.csv")[0] == 2


def test_batch_all_frames_bad_exit_4(capsys, tmp_path):
    m = tmp_path / "m.csv"
    m.write_text("timestamp_min,branch_id,image_path\n0,1,a.pgm\n5,1,b.pgm\n")
    assert run(capsys, "batch", m)[0] == 4


def test_batch_branches(capsys, tmp_path):
    for bid in (1, 2):
        run(capsys, "synth", _write_scene(tmp_path), "--frames", 3, "--out-dir", tmp_path / f"b{bid}", "--branch-id", bid)
    rows = ["timestamp_min,branch_id,image_path"]
    for bid in (1, 2):
        rows += (tmp_path / f"b{bid}" / "manifest.csv").read_text().splitlines()[1:]
    rows = [r.replace("frame_", f"b{r.split(',')[1]}/frame_") if i else r for i, r in enumerate(rows)]
    m = tmp_path / "all.csv"
    m.write_text("\n".join(rows) + "\n")
    assert run(capsys, "batch", m)[0] == 0
    assert (tmp_path / "session_branch-1.json").exists()
    assert (tmp_path / "session_branch-2.json").exists()


# -------------------------------------------------------------------- plot


def _session_file(tmp_path, points):
    reports = [
        {"timestamp": t, "cumulative_area": a, "n_clots": 1, "clot_densities": [a], "occlusion_fraction": 0.0,
         "largest_clot": a, "roi_area": 10000, "min_size_used": 5}
        for t, a in points
    ]
    p = tmp_path / "session.json"
    p.write_text(json.dumps({"reports": reports}))
    return p


def _svg(path):
    return ET.parse(path).getroot()


def test_plot_points_and_fit(capsys, tmp_path):
    pts = [(0, 10), (10, 30), (20, 45), (30, 70), (40, 88), (50, 110)]
    out = tmp_path / "p.svg"
    assert run(capsys, "plot", _session_file(tmp_path, pts), out)[0] == 0
    root = _svg(out)
    assert len(root.findall(f"{SVG_NS}circle")) == 6
    assert len(root.findall(f"{SVG_NS}line")) == 1
    meta = json.loads(root.find(f"{SVG_NS}metadata").text)
    slope, icpt = linear_fit([p[0] for p in pts], [p[1] for p in pts])
    assert meta["fit"]["slope"] == slope > 0
    assert meta["fit"]["intercept"] == icpt
    text = " ".join(t.text or "" for t in root.iter(f"{SVG_NS}text"))
    assert "(min)" in text and "(px)" in text


def test_plot_zero_variance_no_line(capsys, tmp_path):
    out = tmp_path / "p.svg"
    assert run(capsys, "plot", _session_file(tmp_path, [(0, 50), (10, 50), (20, 50)]), out)[0] == 0
    root = _svg(out)
    assert len(root.findall(f"{SVG_NS}circle")) == 3
    assert root.findall(f"{SVG_NS}line") == []


def test_plot_empty_session_exit_4(capsys, tmp_path):
    assert run(capsys, "plot", _session_file(tmp_path, []), tmp_path / "p.svg")[0] == 4


def test_plot_missing_session_exit_2(capsys, tmp_path):
    assert run(capsys, "plot", tmp_path / "none.json", tmp_path / "p.svg")[0] == 2


def test_module_entry_point(three_disks):
    path, _ = three_disks
    proc = subprocess.run([sys.executable, "-m", "clotquant", "analyze", str(path)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["n_clots"] == 3
    proc = subprocess.run([sys.executable, "-m", "clotquant", "analyze", "--nope"], capture_output=True, text=True)
    assert proc.returncode == 1
