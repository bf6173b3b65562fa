import json

import pytest

from injurybench.cli import main
from injurybench.dyadic import Dyadic, pow2
from injurybench.tracekit import deserialize, read_sequence_csv, write_sequence_csv
from conftest import fixture_dir


@pytest.fixture()
def run_dir(tmp_path):
    out = tmp_path / "run"
    config = fixture_dir() / "minimal_phi.json"
    code = main([
        "run", "--engine", "A", "--stages", "20",
        "--phi-config", str(config), "--out", str(out),
    ])
    assert code == 0
    return out


def test_run_outputs(run_dir, capsys):
    trace = deserialize((run_dir / "trace.jsonl").read_bytes())
    assert trace.T == 20
    seq = read_sequence_csv(str(run_dir / "sequence.csv"))
    assert seq == trace.x
    assert seq[2] == Dyadic(1)  # identity-at-0 hand simulation


def test_run_is_deterministic(tmp_path, capsys):
    config = fixture_dir() / "minimal_phi.json"
    digests = []
    for name in ("one", "two"):
        out = tmp_path / name
        assert main(["run", "--engine", "B", "--stages", "30",
                     "--phi-config", str(config), "--out", str(out)]) == 0
        digests.append(capsys.readouterr().out.strip())
    assert digests[0] == digests[1]


def test_run_deterministic_across_processes(tmp_path, capsys):
    import subprocess
    import sys

    config = fixture_dir() / "minimal_phi.json"
    out = tmp_path / "inproc"
    assert main(["run", "--engine", "A", "--stages", "40",
                 "--phi-config", str(config), "--out", str(out)]) == 0
    in_process = capsys.readouterr().out.strip()
    result = subprocess.run(
        [sys.executable, "-m", "injurybench.cli", "run", "--engine", "A",
         "--stages", "40", "--phi-config", str(config),
         "--out", str(tmp_path / "subproc")],
        capture_output=True, text=True, check=True,
        env={"PYTHONHASHSEED": "271828", "PATH": "/usr/bin:/bin"},
    )
    assert result.stdout.strip() == in_process


def test_run_empty_config_stays_at_zero(tmp_path, capsys):
    config = tmp_path / "empty.json"
    config.write_text('{"slots": []}', encoding="utf-8")
    out = tmp_path / "b1"
    assert main(["run", "--engine", "B", "--stages", "1",
                 "--phi-config", str(config), "--out", str(out)]) == 0
    rows = (out / "sequence.csv").read_text().strip().split("\n")
    assert rows[1:] == ["0,0,0", "1,0,0"]


def test_run_bad_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    code = main(["run", "--engine", "A", "--stages", "5",
                 "--phi-config", str(bad), "--out", str(tmp_path / "o")])
    assert code == 2


def test_verify_valid_trace(run_dir, tmp_path, capsys):
    report_path = tmp_path / "report.json"
    code = main(["verify", str(run_dir / "trace.jsonl"),
                 "--checks", "monotonicity,convergence,jump_sums,settlement",
                 "--report", str(report_path)])
    assert code == 0
    payload = json.loads(report_path.read_text())
    assert {entry["check"] for entry in payload} >= {"monotonicity", "convergence"}
    assert all(entry["status"] == "pass" for entry in payload)


def test_verify_corrupted_trace(run_dir, tmp_path):
    data = (run_dir / "trace.jsonl").read_bytes().decode().split("\n")
    data[2] = "{oops"
    broken = tmp_path / "broken.jsonl"
    broken.write_text("\n".join(data), encoding="utf-8")
    assert main(["verify", str(broken)]) == 2


def test_verify_mutated_trace_fails(run_dir, tmp_path):
    # inflate a recorded jump in the raw JSONL: checks must go red
    lines = (run_dir / "trace.jsonl").read_bytes().decode().rstrip("\n").split("\n")
    changed = None
    for i, line in enumerate(lines[1:], start=1):
        obj = json.loads(line)
        if obj["jump"]["m"] != "0":
            obj["jump"] = {"m": "5", "k": 0}
            lines[i] = json.dumps(obj, sort_keys=True, separators=(",", ":"))
            changed = i
            break
    assert changed is not None
    mutated = tmp_path / "mutated.jsonl"
    mutated.write_text("\n".join(lines) + "\n", encoding="utf-8")
    assert main(["verify", str(mutated), "--checks", "convergence"]) == 1


def test_verify_unknown_check(run_dir):
    assert main(["verify", str(run_dir / "trace.jsonl"), "--checks", "bogus"]) == 2


def test_verify_incomplete_only_exits_three(tmp_path, capsys):
    # the default registry at a short horizon leaves some requirement
    # checks horizon-conditional without any failure
    out = tmp_path / "short"
    assert main(["run", "--engine", "A", "--stages", "50", "--out", str(out)]) == 0
    capsys.readouterr()
    assert main(["verify", str(out / "trace.jsonl")]) == 3


def test_truepath(run_dir, capsys):
    assert main(["truepath", str(run_dir / "trace.jsonl")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert set(out) >= {"path", "stable_upto", "window"}
    assert main(["truepath", str(run_dir / "trace.jsonl"),
                 "--window", "0", "999"]) == 2


def test_export_dot_and_csv(run_dir, tmp_path, capsys):
    config = fixture_dir() / "minimal_phi.json"
    tiny = tmp_path / "tiny"
    assert main(["run", "--engine", "A", "--stages", "1",
                 "--phi-config", str(config), "--out", str(tiny)]) == 0
    dot = tmp_path / "tree.dot"
    assert main(["export", str(tiny / "trace.jsonl"),
                 "--format", "dot", "--out", str(dot)]) == 0
    text = dot.read_text()
    assert text.count("->") == 0  # single-node tree at T = 1
    assert "λ" in text

    jumps_csv = tmp_path / "jumps.csv"
    assert main(["export", str(run_dir / "trace.jsonl"),
                 "--format", "csv", "--out", str(jumps_csv)]) == 0
    trace = deserialize((run_dir / "trace.jsonl").read_bytes())
    rows = jumps_csv.read_text().strip().split("\n")[1:]
    assert len(rows) == len(trace.jump_stages())


def test_speed_subcommands(tmp_path, capsys):
    seq_csv = tmp_path / "seq.csv"
    values = [Dyadic(1) - pow2(-n) for n in range(12)]
    write_sequence_csv(values, str(seq_csv))

    assert main(["speed", "indices", "--sequence", str(seq_csv),
                 "--limit", "1/2^0", "--rho", "1/2^1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["indices"] == list(range(11))

    out_csv = tmp_path / "shifted.csv"
    assert main(["speed", "regain2speed", "--sequence", str(seq_csv),
                 "--limit", "1/2^0", "--out", str(out_csv)]) == 0
    capsys.readouterr()
    shifted = read_sequence_csv(str(out_csv))
    assert shifted[0] == Dyadic(-1)

    assert main(["speed", "speed2regain", "--affine", "2", "0",
                 "--rho", "1/2^2", "--n-max", "8"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["k"] == 2 and out["m"] == 4
    assert out["g"] == [n // 2 for n in range(9)]

    assert main(["speed", "certify", "--sequence", str(seq_csv),
                 "--limit", "1/2^0", "--affine", "1", "0"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["indices"] == list(range(12))


def test_speed_precondition_surfaces(tmp_path):
    seq_csv = tmp_path / "flat.csv"
    write_sequence_csv([Dyadic(0), Dyadic(0)], str(seq_csv))
    assert main(["speed", "indices", "--sequence", str(seq_csv),
                 "--limit", "1/2^0", "--rho", "1/2^1"]) == 2
    assert main(["speed", "certify", "--sequence", str(seq_csv),
                 "--limit", "1/2^0"]) == 2  # no modulus given
