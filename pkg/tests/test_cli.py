import csv
import shutil

import numpy as np
import pytest

from leptonstore.cli import main
from leptonstore.codec.container import parse_container

from helpers import flat_gray, jpeg_bytes


@pytest.fixture(scope="module")
def small(tmp_path_factory, stat_paths, test_paths):
    root = tmp_path_factory.mktemp("cli")
    for split, paths in (("stat", stat_paths[:8]), ("test", test_paths[:6])):
        (root / split).mkdir()
        for p in paths:
            shutil.copy(p, root / split / p.name)
    return root


def run(*argv):
    return main([str(a) for a in argv])


def test_profile_deterministic_with_skip_report(small, tmp_path):
    (tmp_path / "c").mkdir()
    for p in (small / "stat").iterdir():
        shutil.copy(p, tmp_path / "c" / p.name)
    (tmp_path / "c" / "broken.jpg").write_bytes(b"not a jpeg")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run("profile", "--corpus", tmp_path / "c", "--out", a, "--jobs", 2, "--skip-report", tmp_path / "s") == 0
    assert run("profile", "--corpus", tmp_path / "c", "--out", b, "--jobs", 1) == 0
    assert a.read_bytes() == b.read_bytes()
    assert "broken.jpg" in (tmp_path / "s").read_text()


def test_profile_flat_gray(tmp_path):
    (tmp_path / "g").mkdir()
    (tmp_path / "g" / "gray.jpg").write_bytes(flat_gray(32))
    out = tmp_path / "h.csv"
    assert run("profile", "--corpus", tmp_path / "g", "--out", out, "--jobs", 1) == 0
    models = {row["model"] for row in csv.DictReader(out.open())}
    assert any(m.startswith("nz_7x7") for m in models)
    assert not any(m.startswith("exp_7x7") for m in models)


def test_profile_empty_corpus_fails(tmp_path):
    (tmp_path / "e").mkdir()
    assert run("profile", "--corpus", tmp_path / "e", "--out", tmp_path / "x.csv") == 1


@pytest.fixture(scope="module")
def built(small, tmp_path_factory):
    d = tmp_path_factory.mktemp("built")
    assert run("profile", "--corpus", small / "stat", "--out", d / "hist.csv", "--jobs", 1) == 0
    assert run("build", "--histogram", d / "hist.csv", "--ways", 32, "--depth", 2048, "--out", d / "fixed.lptb",
               "--plan", d / "plan.csv") == 0
    assert run("build", "--corpus", small / "stat", "--test-corpus", small / "test", "--ways", 16,
               "--depth-policy", "min-zero-overflow", "--out", d / "mz.lptb", "--jobs", 1) == 0
    assert run("build", "--histogram", d / "hist.csv", "--ways", 1, "--depth", 2, "--models", "exp_7x7_0",
               "--ma-ratio", 0.5, "--out", d / "tiny.lptb") == 0
    return d


def test_build_is_pure(built):
    again = built / "again.lptb"
    assert run("build", "--histogram", built / "hist.csv", "--ways", 32, "--depth", 2048, "--out", again) == 0
    assert again.read_bytes() == (built / "fixed.lptb").read_bytes()
    plan = {r["model"]: r["choice"] for r in csv.DictReader((built / "plan.csv").open())}
    assert plan["exp_7x7_0"] == "OPTIMIZED"        # 2048/10780 < 0.3
    assert plan["res_dc_0"] == "ORIGINAL"          # depth exceeds range


def test_build_rejects_indivisible_depth(built, tmp_path):
    assert run("build", "--histogram", built / "hist.csv", "--ways", 32, "--depth", 1000,
               "--out", tmp_path / "x.lptb") == 1


def test_encode_decode_bounded(small, built, tmp_path):
    jpeg = next((small / "stat").iterdir())
    leps = tmp_path / "a.leps"
    assert run("encode", "--jpeg", jpeg, "--tables", built / "mz.lptb", "--out", leps) == 0
    assert parse_container(leps.read_bytes()).mode_name == "BOUNDED"
    assert run("encode", "--jpeg", jpeg, "--out", tmp_path / "u.leps") == 0
    assert (parse_container(leps.read_bytes()).payload
            == parse_container((tmp_path / "u.leps").read_bytes()).payload)
    assert run("decode", "--input", leps, "--tables", built / "mz.lptb", "--out", tmp_path / "a.lpcf",
               "--jpeg", tmp_path / "a.jpg") == 0
    assert (tmp_path / "a.jpg").read_bytes()[:2] == b"\xff\xd8"
    assert run("verify", "--jpeg", tmp_path / "a.jpg", "--tables", built / "mz.lptb") == 0
    # wrong tables
    assert run("decode", "--input", leps, "--tables", built / "fixed.lptb", "--out", tmp_path / "b.lpcf") == 4
    assert run("decode", "--input", leps, "--out", tmp_path / "b.lpcf") == 4


def test_overflow_and_fallback(small, built, tmp_path):
    jpeg = next((small / "test").iterdir())
    log = tmp_path / "ov.csv"
    assert run("encode", "--jpeg", jpeg, "--tables", built / "tiny.lptb", "--overflow-log", log,
               "--out", tmp_path / "x.leps") == 3
    lines = log.read_text().splitlines()
    assert lines[0] == "model,index,set_index,image" and len(lines) > 1
    assert not (tmp_path / "x.leps").exists()
    assert run("encode", "--jpeg", jpeg, "--tables", built / "tiny.lptb", "--fallback",
               "--overflow-log", log, "--out", tmp_path / "x.leps") == 0
    assert parse_container((tmp_path / "x.leps").read_bytes()).mode_name == "UNBOUNDED_FALLBACK"
    assert run("decode", "--input", tmp_path / "x.leps", "--out", tmp_path / "x.lpcf") == 0
    assert run("build", "--histogram", built / "hist.csv", "--ways", 1, "--depth", 2, "--models", "exp_7x7_0",
               "--ma-ratio", 0.5, "--merge-overflow-log", log, "--out", tmp_path / "r.lptb") == 0
    assert (tmp_path / "r.lptb").read_bytes() != (built / "tiny.lptb").read_bytes()


def test_verify_corpus_and_tiny_image(small, built, tmp_path, capsys):
    assert run("verify", "--corpus", small / "test", "--tables", built / "fixed.lptb", "--fallback") == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 6
    tiny = tmp_path / "t.jpg"
    tiny.write_bytes(jpeg_bytes(np.full((8, 8), 90, np.uint8)))
    assert run("verify", "--jpeg", tiny) == 0
    assert "PASS" in capsys.readouterr().out


def test_verify_tampered_container(small, tmp_path, capsys):
    jpeg = next((small / "stat").iterdir())
    leps = tmp_path / "a.leps"
    assert run("encode", "--jpeg", jpeg, "--out", leps) == 0
    data = bytearray(leps.read_bytes())
    data[len(data) // 2] ^= 0x10
    (tmp_path / "bad.leps").write_bytes(bytes(data))
    assert run("verify", "--jpeg", jpeg, "--input", tmp_path / "bad.leps") == 1
    assert "FAIL" in capsys.readouterr().out
    assert run("decode", "--input", tmp_path / "bad.leps", "--out", tmp_path / "z") == 5


def test_exit_codes_for_bad_inputs(tmp_path):
    prog = tmp_path / "p.jpg"
    prog.write_bytes(jpeg_bytes(np.zeros((16, 16, 3)), progressive=True))
    assert run("encode", "--jpeg", prog, "--out", tmp_path / "p.leps") == 6
    junk = tmp_path / "j.jpg"
    junk.write_bytes(b"\xff\xd8\xff\x00garbage")
    assert run("encode", "--jpeg", junk, "--out", tmp_path / "j.leps") == 7


def test_sweep_full_range_column_zero(small, tmp_path):
    out = tmp_path / "s.csv"
    assert run("sweep", "--corpus", small / "stat", "--test-corpus", small / "test", "--ways", "8,16",
               "--models", "exp_7x7_0,exp_edge_0", "--depths", "999999", "--out", out, "--jobs", 1) == 0
    rows = list(csv.DictReader(out.open()))
    assert rows and all(float(r["overflow_rate"]) == 0 for r in rows)


def test_report_writes_three_csvs_deterministically(small, tmp_path):
    args = ["report", "--corpus", small / "stat", "--test-corpus", small / "test", "--ways", "32",
            "--jobs", 1]
    assert run(*args, "--out", tmp_path / "r1") == 0
    assert run(*args, "--out", tmp_path / "r2") == 0
    for name in ("utilization.csv", "mindepth.csv", "sweep.csv"):
        assert (tmp_path / "r1" / name).read_bytes() == (tmp_path / "r2" / name).read_bytes()
    util = {r["model"]: float(r["ratio"]) for r in csv.DictReader((tmp_path / "r1" / "utilization.csv").open())}
    seq = [util[f"exp_7x7_{k}"] for k in range(11)]
    assert all(a >= b for a, b in zip(seq, seq[1:]))
