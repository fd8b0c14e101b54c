import json

import pytest

from conftest import DATA
from lfgc import io
from lfgc.cli import main

SCENE = {
    "grid": [5, 5], "view": [32, 32], "seed": 3,
    "background": {"disparity": 0, "intensity": 90, "texture": {"kind": "gradient", "slope": [1, 0.5]}},
    "layers": [{"shape": "rect", "box": [6, 10, 10, 10], "disparity": 1, "intensity": 200},
               {"shape": "rect", "box": [22, 4, 6, 8], "disparity": -1, "intensity": 40}],
}


@pytest.fixture(scope="module")
def lfdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    spec = root / "scene.json"
    spec.write_text(json.dumps(SCENE))
    assert main(["synth", str(spec), str(root / "lf")]) == 0
    return root / "lf"


def test_synth_layout_and_repeatability(lfdir, tmp_path):
    files = sorted(p.name for p in lfdir.iterdir())
    assert "lf.json" in files and sum(f.startswith("view_") for f in files) == 25
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps(SCENE))
    assert main(["synth", str(spec), str(tmp_path / "again")]) == 0
    for name in files:
        assert (lfdir / name).read_bytes() == (tmp_path / "again" / name).read_bytes()


def test_synth_invalid_spec(tmp_path, capsys):
    bad = dict(SCENE, layers=[{"box": [0, 0, 4, 4], "disparity": 3}])
    spec = tmp_path / "bad.json"
    spec.write_text(json.dumps(bad))
    assert main(["synth", str(spec), str(tmp_path / "o")]) == 2
    assert "leaves the frame" in capsys.readouterr().err


def test_quality_matrix_stored_labels(lfdir, tmp_path):
    for scheme, ref in (("topleft", (0, 0)), ("center", (2, 2))):
        out = tmp_path / f"{scheme}.csv"
        assert main(["quality-matrix", str(lfdir), str(out), "--scheme", scheme, "--labels", "stored"]) == 0
        rows = [r.split(",") for r in out.read_text().splitlines()]
        assert rows[ref[0]][ref[1]] == "1.000"
        assert all(v == "1.000" for r in rows for v in r)


def test_optimize_refs(tmp_path, capsys):
    out = tmp_path / "k.json"
    assert main(["optimize-refs", str(DATA / "greek_topleft.csv"), "--json", str(out)]) == 0
    assert "k_h=4 k_v=4" in capsys.readouterr().out
    assert json.loads(out.read_text()) == {"k_h": 4, "k_v": 4}
    assert main(["optimize-refs", str(DATA / "sideboard_topleft.csv")]) == 0
    assert "k_h=3 k_v=4" in capsys.readouterr().out


def test_encode_decode_eval_lossless(lfdir, tmp_path, capsys):
    stream = tmp_path / "x.lfgc"
    assert main(["encode", str(lfdir), str(stream), "--scheme", "multiview", "--kh", "3", "--kv", "3",
                 "--no-quant", "--n-segments", "30", "--max-nodes", "400"]) == 0
    enc = json.loads(capsys.readouterr().out)
    assert enc["blocks"] == 4 and "encode_s" in enc
    assert main(["decode", str(stream), str(tmp_path / "dec")]) == 0
    assert "decode_s" in json.loads(capsys.readouterr().out)
    assert main(["eval", str(lfdir), str(tmp_path / "dec"), "--stream", str(stream)]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["psnr_y"] == "inf" or res["psnr_y"] >= 90


def test_config_precedence(lfdir, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"scheme": "center", "n_segments": 30, "max_nodes": 400, "qp_rest": 40}))
    a, b = tmp_path / "a.lfgc", tmp_path / "b.lfgc"
    assert main(["encode", str(lfdir), str(a), "--config", str(cfg)]) == 0
    assert json.loads(capsys.readouterr().out)["references"] == ["(3,3)"]
    assert main(["encode", str(lfdir), str(b), "--config", str(cfg), "--scheme", "topleft"]) == 0
    assert json.loads(capsys.readouterr().out)["references"] == ["(1,1)"]


def test_truncated_stream_exit_code(lfdir, tmp_path, capsys):
    stream = tmp_path / "t.lfgc"
    assert main(["encode", str(lfdir), str(stream), "--scheme", "topleft", "--n-segments", "30",
                 "--max-nodes", "400"]) == 0
    data = stream.read_bytes()
    stream.write_bytes(data[: len(data) // 2])
    capsys.readouterr()
    assert main(["decode", str(stream), str(tmp_path / "d")]) == 2
    assert "malformed stream at offset" in capsys.readouterr().err


def test_usage_errors():
    assert main([]) == 1
    assert main(["encode"]) == 1
    assert main(["encode", "a", "b", "--scheme", "spiral"]) == 1
    assert main(["encode", "a", "b", "--workers", "0"]) == 1


def test_missing_input_is_data_error(tmp_path):
    assert main(["encode", str(tmp_path / "nope"), str(tmp_path / "o.lfgc")]) == 2


def test_segment(lfdir, tmp_path):
    assert main(["segment", str(lfdir), str(tmp_path / "seg"), "--views", "1,1;3,3", "--n-segments", "20"]) == 0
    assert io.read_labels(tmp_path / "seg" / "labels_01_01.pgm").n_labels <= 20
    assert (tmp_path / "seg" / "table_03_03.json").exists()


def test_rd_sweep(lfdir, tmp_path):
    out = tmp_path / "rd.csv"
    assert main(["rd-sweep", str(lfdir), str(out), "--scheme", "topleft", "--n-segments", "30",
                 "--max-nodes", "400", "--qp-list", "10,40"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "scheme,qp_first,qp_rest,bpp,psnr_y,enc_s,dec_s" and len(lines) == 3
