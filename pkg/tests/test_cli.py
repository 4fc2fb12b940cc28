import json
import os

import pytest

from laminmate.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestExactCommands:
    def test_classify(self, capsys):
        code, out, _ = run(capsys, "classify", "5/6")
        assert code == 0
        doc = json.loads(out)
        assert doc == {"angle": "5/6", "preperiod": 1, "period": 2,
                       "touch_angle": True, "touch_exponent": 1}

    def test_pair(self, capsys):
        code, out, _ = run(capsys, "pair", "--period", "3")
        assert code == 0
        assert out.splitlines() == ["1/7 2/7", "3/7 4/7", "5/7 6/7"]

    def test_bounded(self, capsys):
        code, out, _ = run(capsys, "bounded", "--phi1", "3/15",
                           "--phi2", "4/15")
        assert code == 0
        assert out.strip() == "phi1: none, phi2: n=2"

    def test_bounded_domain_error(self, capsys):
        code, _, err = run(capsys, "bounded", "--phi1", "1/3", "--phi2", "2/3")
        assert code == 1
        assert "1/2-limb" in err

    def test_strip(self, capsys):
        code, out, _ = run(capsys, "strip", "--phi1", "1/7", "--phi2", "2/7")
        assert code == 0
        assert out.strip() == "1/7 9/56 15/56 2/7"

    def test_usage_error_exit_code(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["classify", "not-an-angle"])
        assert info.value.code == 2

    def test_unknown_command(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["frobnicate"])
        assert info.value.code == 2


class TestArtifacts:
    def test_lamination_json(self, capsys, tmp_path):
        path = tmp_path / "lam.json"
        code, _, _ = run(capsys, "lamination", "--depth", "4",
                         "--out", str(path))
        assert code == 0
        doc = json.loads(path.read_text())
        assert len(doc["leaves"]) == 2 ** 5
        assert doc["leaves"][0]["a"] == "1/3"

    def test_lamination_reproducible(self, capsys, tmp_path):
        p1 = tmp_path / "a.json"
        p2 = tmp_path / "b.json"
        run(capsys, "lamination", "--depth", "5", "--out", str(p1))
        run(capsys, "lamination", "--depth", "5", "--out", str(p2))
        assert p1.read_bytes() == p2.read_bytes()

    def test_ray_csv(self, capsys, tmp_path):
        path = tmp_path / "ray.csv"
        code, _, err = run(capsys, "ray", "--kind", "parameter",
                           "--angle", "1/6", "--tend", "1e-6",
                           "--out", str(path))
        assert code == 0
        lines = path.read_text().splitlines()
        assert lines[0] == "t,re,im"
        assert "landing estimate" in err
        # landing near i
        assert "+0.999" in err or "+1j" in err or "1.0j" in err or "0.9999" in err

    def test_ray_reproducible(self, capsys, tmp_path):
        p1 = tmp_path / "r1.csv"
        p2 = tmp_path / "r2.csv"
        run(capsys, "ray", "--kind", "dynamic", "--angle", "1/7",
            "--out", str(p1))
        run(capsys, "ray", "--kind", "dynamic", "--angle", "1/7",
            "--out", str(p2))
        assert p1.read_bytes() == p2.read_bytes()

    def test_pinch_output(self, capsys, tmp_path):
        path = tmp_path / "pinch.json"
        code, _, _ = run(capsys, "pinch", "--depth", "3", "--out", str(path))
        assert code == 0
        doc = json.loads(path.read_text())
        assert doc["limb_boundary"] == ["1/3", "2/3"]
        assert ["5/6", "1/6"] in doc["pairs"]
        assert len(doc["pairs"]) == 2 ** 4 - 1

    def test_bounded_table(self, capsys, tmp_path):
        path = tmp_path / "table.csv"
        code, _, _ = run(capsys, "bounded-table", "--max-period", "4",
                         "--out", str(path))
        assert code == 0
        lines = path.read_text().splitlines()
        assert lines[0] == "period,phi1,phi2,witness_phi1,witness_phi2"
        assert any(line.startswith("4,1/5,4/15") for line in lines)

    def test_render_disk_svg(self, capsys, tmp_path):
        path = tmp_path / "disk.svg"
        code, _, _ = run(capsys, "render", "disk", "--depth", "2",
                         "--out", str(path))
        assert code == 0
        assert path.read_text().count("<path") == 8

    def test_render_m2_png_with_sidecar(self, capsys, tmp_path):
        path = tmp_path / "m2.png"
        code, _, _ = run(capsys, "render", "m2", "--width", "32",
                         "--height", "32", "--max-iter", "60",
                         "--threads", "2", "--out", str(path))
        assert code == 0
        assert path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
        sidecar = json.loads((tmp_path / "m2.png.json").read_text())
        assert sidecar["width"] == 32

    def test_member_and_misiurewicz(self, capsys):
        code, out, _ = run(capsys, "member", "--family", "m2",
                           "--point=-4,0")
        assert code == 0
        assert json.loads(out)["status"] == "escaped"
        code, out, _ = run(capsys, "misiurewicz", "--preperiod", "2",
                           "--period", "2", "--seed", "0.2,1.1")
        assert code == 0
        c = json.loads(out)["c"]
        assert abs(c[0]) < 1e-9 and abs(c[1] - 1) < 1e-9

    def test_bubble_ray_json(self, capsys, tmp_path):
        path = tmp_path / "bubble.json"
        code, _, _ = run(capsys, "bubble-ray", "--angle", "1/3",
                         "--depth", "6", "--out", str(path))
        assert code == 0
        doc = json.loads(path.read_text())
        assert doc["finite"] is True
        assert doc["chain"] == [["1/3", "2/3"]]
        assert abs(float(doc["landing_estimate"][0])
                   - 0.6180339887498949) < 1e-9

    def test_threads_env_override(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("LAMIN_MATE_THREADS", "3")
        path = tmp_path / "m2.png"
        code, _, _ = run(capsys, "render", "m2", "--width", "16",
                         "--height", "16", "--max-iter", "40",
                         "--out", str(path))
        assert code == 0


class TestVerifyCommand:
    def test_verify_combinat(self, capsys):
        code, out, _ = run(capsys, "verify", "combinat")
        assert code == 0
        lines = out.strip().splitlines()
        assert all(line.startswith("PASS") for line in lines[:-1])
        assert lines[-1].endswith("checks passed")

    def test_verify_json(self, capsys):
        code, out, _ = run(capsys, "verify", "lamination", "--json")
        assert code == 0
        doc = json.loads(out)
        assert all(entry["passed"] for entry in doc)
