import hashlib
import json
import subprocess
import sys


from isp.cli import main


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def digest(text):
    return hashlib.sha256(text.encode()).hexdigest()


def test_solve_byte_identical(data_dir, capsys):
    argv = ["solve", "--catalog", str(data_dir / "small.csv"), "--embedding", "tfidf", "--seed", "7"]
    code1, out1, _ = run(argv, capsys)
    code2, out2, _ = run(argv, capsys)
    assert code1 == code2 == 0
    assert digest(out1) == digest(out2)
    doc = json.loads(out1)
    assert doc["schema_version"] == 1
    assert doc["manifest"]["seed"] == 7 and doc["manifest"]["wall_time"] is None
    assert doc["result"]["coverage"]["overall"] == 1.0


def test_solve_with_t_and_pairs(data_dir, capsys):
    code, out, _ = run(["solve", "--catalog", str(data_dir / "small.csv"), "--pairs", "genre:language",
                        "--t", "3", "--backend", "greedy"], capsys)
    assert code == 0
    res = json.loads(out)["result"]
    assert len(res["selections"]["final"]["item_ids"]) == 3
    assert any("×" in k for k in res["coverage"]["per_category"])


def test_missing_catalog(capsys):
    code, _, err = run(["solve", "--catalog", "nope.csv"], capsys)
    assert code == 2
    assert err.startswith("error: catalog not found")


def test_usage_errors(capsys):
    assert run([], capsys)[0] == 1
    assert run(["solve"], capsys)[0] == 1
    assert run(["solve", "--t", "x"], capsys)[0] == 1
    code, _, err = run(["frobnicate"], capsys)
    assert code == 1 and err.startswith("error:")


def test_parse_error_exit_two(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("id,text,genre\nm1,,a\nm1,,b\n")
    code, _, err = run(["solve", "--catalog", str(bad)], capsys)
    assert code == 2 and "m1" in err


def test_warmstart_and_coverage(data_dir, tmp_path, capsys):
    warm = tmp_path / "warm.txt"
    warm.write_text("c000\nc001\nc002\n")
    base = ["--catalog", str(data_dir / "clustered.csv"), "--embedding", f"file:{data_dir / 'clustered.emb'}"]
    code, out, _ = run(["warmstart", *base, "--warm", str(warm), "--q", "0.1"], capsys)
    assert code == 0
    res = json.loads(out)["result"]
    assert res["n_matched"] + res["n_unmatched"] == 197
    code, out, _ = run(["coverage", *base, "--selection", str(warm), "--q", "0.1"], capsys)
    assert code == 0
    res = json.loads(out)["result"]
    assert res["selection"] == ["c000", "c001", "c002"]
    assert res["after_warmstart"]["coverage"]["covered"] >= res["coverage"]["covered"]


def test_coverage_reads_solve_report(data_dir, tmp_path, capsys):
    report = tmp_path / "solve.json"
    assert run(["solve", "--catalog", str(data_dir / "small.csv"), "--out", str(report)], capsys)[0] == 0
    code, out, _ = run(["coverage", "--catalog", str(data_dir / "small.csv"), "--selection", str(report)], capsys)
    assert code == 0
    assert json.loads(out)["result"]["coverage"]["overall"] == 1.0


def test_simulate_matches_golden(data_dir, capsys):
    code, out, _ = run(["simulate", "--config", str(data_dir / "sim.json"), "--table"], capsys)
    assert code == 0
    assert out == (data_dir / "sim_table.golden.txt").read_text()


def test_simulate_threads_same_report(data_dir, tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    cfg = str(data_dir / "sim.json")
    assert run(["simulate", "--config", cfg, "--out", str(a)], capsys)[0] == 0
    assert run(["simulate", "--config", cfg, "--threads", "4", "--out", str(b)], capsys)[0] == 0
    da, db = json.loads(a.read_text()), json.loads(b.read_text())
    assert da["result"] == db["result"]


def test_config_missing_keys(tmp_path, data_dir, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"catalog": str(data_dir / "clustered.csv")}))
    code, _, err = run(["simulate", "--config", str(cfg)], capsys)
    assert code == 1 and "K" in err


def test_timing_flag(data_dir, capsys):
    code, out, _ = run(["solve", "--catalog", str(data_dir / "small.csv"), "--timing"], capsys)
    assert code == 0
    assert json.loads(out)["manifest"]["wall_time"] >= 0


def test_console_entry_point(data_dir):
    proc = subprocess.run([sys.executable, "-m", "isp.cli", "solve", "--catalog", str(data_dir / "missing.csv")],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert "error: catalog not found" in proc.stderr
