import json
import subprocess
import sys

import numpy as np
import pytest

from monostereo.cli import format_value, main, parse_report
from monostereo.core import DisparityField
from monostereo.io import read_image, write_image, write_kitti_png, write_mask, write_pfm, write_relative_depth_png
from fixtures import scene_manifest, tree_bytes


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def fields(tmp_path, rng):
    """pred, gt and mono files with mono = (2*pred + 1) / 128, exact in float32."""
    pred = rng.integers(1, 40, (12, 12)).astype(float)
    gt = pred + rng.integers(-1, 2, (12, 12))
    write_pfm(pred, tmp_path / "pred.pfm")
    write_pfm(gt, tmp_path / "gt.pfm")
    write_pfm((2 * pred + 1) / 128, tmp_path / "mono.pfm")
    return tmp_path


class TestReportFormat:
    def test_format_value(self):
        assert format_value(0.1) == "0.1"
        assert format_value(np.float64(1 / 3)) == repr(1 / 3)
        assert format_value(True) == "true"
        assert format_value(7) == "7"

    def test_parse_round_trip(self):
        text = "epe=0.75\nd1=0.0\nevaluated_pixels=4\nfallback=false\n"
        assert parse_report(text) == {"epe": 0.75, "d1": 0.0, "evaluated_pixels": 4, "fallback": False}

    @pytest.mark.parametrize("line", ["Epe=1", "no_equals", "=3", "a b=1"])
    def test_parse_rejects(self, line):
        with pytest.raises(ValueError):
            parse_report(line)


class TestEval:
    def test_hand_example(self, capsys, tmp_path):
        write_pfm(np.array([[1.0, 2.0], [3.0, 4.0]]), tmp_path / "p.pfm")
        write_pfm(np.array([[1.0, 1.0], [5.0, 4.0]]), tmp_path / "g.pfm")
        code, out, _ = run(capsys, "eval", "--pred", tmp_path / "p.pfm", "--gt", tmp_path / "g.pfm",
                           "--json-out", tmp_path / "r.json")
        assert code == 0
        assert out == "epe=0.75\nd1=0.0\nbad2=0.0\nevaluated_pixels=4\n"
        assert json.loads((tmp_path / "r.json").read_text()) == parse_report(out)

    def test_identity_with_kitti_gt(self, capsys, tmp_path, rng):
        gt = DisparityField(rng.integers(1, 5000, (6, 7)) / 256, rng.random((6, 7)) > 0.5)
        write_kitti_png(gt, tmp_path / "g.png")
        code, out, _ = run(capsys, "eval", "--pred", tmp_path / "g.png", "--gt", tmp_path / "g.png")
        rep = parse_report(out)
        assert code == 0 and rep["epe"] == 0.0 and rep["evaluated_pixels"] == int(gt.valid.sum())

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "eval", "--pred", tmp_path / "none.pfm", "--gt", tmp_path / "none.pfm")
        assert code == 1
        assert "error" in json.loads(err)


@pytest.mark.filterwarnings("ignore:fewer than 2 pixels:RuntimeWarning")
class TestAlignLoss:
    def test_align_recovers_affine(self, capsys, fields):
        code, out, err = run(capsys, "align", "--pred", fields / "pred.pfm", "--mono", fields / "mono.pfm")
        rep = parse_report(out)
        assert code == 0
        assert rep["a"] == pytest.approx(2 / 128, abs=1e-12)
        assert rep["b"] == pytest.approx(1 / 128, abs=1e-12)
        assert rep["dssi"] < 1e-20
        assert rep["pixels"] == 144

    def test_loss_total(self, capsys, fields):
        code, out, _ = run(capsys, "loss", "--pred", fields / "pred.pfm", "--mono", fields / "mono.pfm",
                           "--gt", fields / "gt.pfm", "--beta", "0.5")
        rep = parse_report(out)
        assert code == 0
        assert rep["total"] == rep["sparse"] + 0.5 * rep["dssi"]
        assert list(rep)[-3:] == ["sparse", "beta", "total"]

    def test_mono_mask(self, capsys, fields):
        mask = np.zeros((12, 12), bool)
        mask[:3] = True
        write_mask(mask, fields / "m.png")
        _, out, _ = run(capsys, "align", "--pred", fields / "pred.pfm", "--mono", fields / "mono.pfm",
                        "--mono-mask", fields / "m.png")
        assert parse_report(out)["pixels"] == 36

    @pytest.mark.parametrize("extra", [["--q", "1.5"], ["--iterations", "0"], ["--q", "x"]])
    def test_usage_errors(self, capsys, fields, extra):
        code, _, _ = run(capsys, "align", "--pred", fields / "pred.pfm", "--mono", fields / "mono.pfm", *extra)
        assert code == 2

    def test_degenerate_is_operational_error(self, capsys, tmp_path):
        write_pfm(np.full((4, 4), 3.0), tmp_path / "p.pfm")
        write_pfm(np.full((4, 4), 0.5), tmp_path / "m.pfm")
        code, _, err = run(capsys, "align", "--pred", tmp_path / "p.pfm", "--mono", tmp_path / "m.pfm")
        assert code == 1
        assert json.loads(err)["error"] == "DegenerateFitError"


class TestEdgeMask:
    def test_relative_with_alpha(self, capsys, tmp_path):
        rel = np.tile([1.0, 1.0, 1.0, 0.25, 0.25], (2, 1))
        write_relative_depth_png(rel, tmp_path / "r.png")
        code, out, _ = run(capsys, "edge-mask", "--disparity", tmp_path / "r.png", "--relative",
                           "--alpha", "8", "--tau", "3", "--out", tmp_path / "e.png")
        assert code == 0
        assert parse_report(out)["edge_pixels"] == 2

    def test_negative_tau(self, capsys, tmp_path):
        write_pfm(np.zeros((2, 2)), tmp_path / "d.pfm")
        assert run(capsys, "edge-mask", "--disparity", tmp_path / "d.pfm", "--tau", "-1")[0] == 2


class TestInpaint:
    def test_builtin(self, capsys, tmp_path, rng):
        img = rng.random((4, 6, 3))
        write_image(img, tmp_path / "i.png")
        holes = np.zeros((4, 6), bool)
        holes[:, 2] = True
        write_mask(holes, tmp_path / "m.png")
        code, out, _ = run(capsys, "inpaint", "--image", tmp_path / "i.png", "--mask", tmp_path / "m.png",
                           "--out", tmp_path / "o.png")
        assert code == 0 and parse_report(out)["holes"] == 4
        got = read_image(tmp_path / "o.png")
        src = read_image(tmp_path / "i.png")
        assert np.array_equal(got[:, 2], src[:, 3])

    def test_external_without_command(self, capsys, tmp_path, monkeypatch):
        monkeypatch.delenv("MONOSTEREO_INPAINT_COMMAND", raising=False)
        code, _, _ = run(capsys, "inpaint", "--image", tmp_path / "i.png", "--mask", tmp_path / "m.png",
                         "--out", tmp_path / "o.png", "--backend", "external")
        assert code == 2

    def test_external_failure(self, capsys, tmp_path, rng):
        write_image(rng.random((3, 3, 3)), tmp_path / "i.png")
        write_mask(np.eye(3, dtype=bool), tmp_path / "m.png")
        cmd = f"{sys.executable} -c 'import sys; sys.exit(3)' {{image}} {{mask}} {{output}}"
        code, _, err = run(capsys, "inpaint", "--image", tmp_path / "i.png", "--mask", tmp_path / "m.png",
                           "--out", tmp_path / "o.png", "--backend", "external", "--backend-command", cmd)
        assert code == 1
        assert json.loads(err)["error"] == "BackendError"


class TestMix:
    def test_counts(self, capsys):
        code, out, _ = run(capsys, "mix", "--count", "12000", "--seed", "4")
        ids = out.split()
        assert code == 0 and len(ids) == 12000
        assert set(ids) == {"synthetic", "generated-mono", "real"}

    @pytest.mark.parametrize("weights", ["a=0", "a", "a=1,a=2", "a=x"])
    def test_bad_weights(self, capsys, weights):
        assert run(capsys, "mix", "--count", "3", "--weights", weights)[0] == 2


class TestGenerate:
    def test_twice_identical(self, capsys, tmp_path):
        manifest = scene_manifest(tmp_path / "src", count=3, h=16, w=24)
        for name in ("a", "b"):
            code, out, _ = run(capsys, "generate", "--manifest", manifest, "--out", tmp_path / name,
                               "--seed", "9", "--d-min", "2", "--d-max", "6")
            assert code == 0
            assert parse_report(out)["generated"] == 3
        assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")

    def test_partial_failure(self, capsys, tmp_path):
        manifest = scene_manifest(tmp_path / "src", count=2, h=8, w=8)
        (tmp_path / "src" / "depth" / "img001.png").write_bytes(b"corrupt")
        code, out, err = run(capsys, "generate", "--manifest", manifest, "--out", tmp_path / "o",
                             "--d-min", "1", "--d-max", "2")
        assert code == 1
        assert parse_report(out)["failed"] == 1
        assert json.loads(err.strip().splitlines()[-1])["failure"]["id"] == "img001"
        assert len((tmp_path / "o" / "manifest.jsonl").read_text().splitlines()) == 2

    @pytest.mark.parametrize("extra", [["--d-min", "0"], ["--jobs", "0"], ["--d-min", "9", "--d-max", "3"]])
    def test_usage_errors(self, capsys, tmp_path, extra):
        manifest = scene_manifest(tmp_path / "src", count=1, h=8, w=8)
        assert run(capsys, "generate", "--manifest", manifest, "--out", tmp_path / "o", *extra)[0] == 2

    def test_missing_manifest(self, capsys, tmp_path):
        assert run(capsys, "generate", "--manifest", tmp_path / "x.jsonl", "--out", tmp_path / "o")[0] == 1


def test_usage_exit_codes(capsys):
    assert run(capsys)[0] == 2
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys, "eval")[0] == 2
    assert run(capsys, "--version")[0] == 0


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "monostereo", "mix", "--count", "3"], capture_output=True, text=True)
    assert proc.returncode == 0 and len(proc.stdout.split()) == 3
