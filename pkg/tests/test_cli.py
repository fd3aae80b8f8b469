import csv
import io
import json

import numpy as np
import pytest

from cartanflow import make_space, sample_p_gaussian, save_matrix
from cartanflow.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_csv(text):
    data_lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(io.StringIO("\n".join(data_lines))))
    return rows[0], rows[1:]


def test_spaces_list_json(capsys):
    code, out, _ = run_cli(capsys, "spaces", "list", "--format", "json")
    assert code == 0
    payload = json.loads(out)
    assert len(payload["spaces"]) == 8
    kinds = {r["kind"] for r in payload["spaces"]}
    assert kinds == {"aiii", "bdi", "cii", "ai", "aii", "diii", "ci", "a2"}


def test_spaces_list_text(capsys):
    code, out, _ = run_cli(capsys, "spaces", "list", "--format", "text")
    assert code == 0 and "aiii" in out and "roots" in out


def test_decompose_seeded(capsys):
    code, out, _ = run_cli(
        capsys, "decompose", "--class", "aiii", "--m", "3", "--n", "2", "--seed", "5"
    )
    assert code == 0
    payload = json.loads(out)
    assert len(payload["q"]) == 2
    assert payload["residual"] <= 1e-9
    # reproducibility
    code2, out2, _ = run_cli(
        capsys, "decompose", "--class", "aiii", "--m", "3", "--n", "2", "--seed", "5"
    )
    assert out2 == out


def test_decompose_from_file(tmp_path, capsys):
    d = make_space("ai", 0, 3)
    X = sample_p_gaussian(d, 9)
    path = tmp_path / "x.json"
    save_matrix(path, X)
    code, out, _ = run_cli(
        capsys, "decompose", "--class", "ai", "--n", "3", "--input", str(path)
    )
    assert code == 0
    assert json.loads(out)["residual"] <= 1e-9


def test_decompose_exact_slice(capsys):
    code, out, _ = run_cli(
        capsys,
        "decompose", "--class", "aiii", "--m", "3", "--n", "2",
        "--seed", "5", "--exact-slice",
    )
    assert code == 0
    payload = json.loads(out)
    assert "r_canonical" in payload and "m_elem" in payload


def test_decompose_validation_exit_2(capsys):
    code, _, err = run_cli(
        capsys, "decompose", "--class", "aiii", "--m", "1", "--n", "2", "--seed", "1"
    )
    assert code == 2 and err.startswith("error: validation:")


def test_decompose_needs_input_or_seed(capsys):
    code, _, err = run_cli(capsys, "decompose", "--class", "aiii", "--m", "2", "--n", "1")
    assert code == 2 and "error:" in err


def test_density_both(capsys):
    code, out, _ = run_cli(
        capsys,
        "density", "--class", "aiii", "--m", "2", "--n", "1", "--q", "2", "--method", "both",
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["closed"] == pytest.approx(8.0)
    assert payload["ratio"] == pytest.approx(payload["constant"], rel=1e-8)


def test_density_wrong_q_length(capsys):
    code, _, err = run_cli(
        capsys, "density", "--class", "aiii", "--m", "3", "--n", "2", "--q", "1.0"
    )
    assert code == 2 and "error: validation" in err


def test_sample_csv(tmp_path, capsys):
    out_file = tmp_path / "hist.csv"
    code, _, _ = run_cli(
        capsys,
        "sample", "--class", "aiii", "--m", "2", "--n", "1",
        "--count", "2000", "--bins", "16", "--seed", "7", "--out", str(out_file),
    )
    assert code == 0
    text = out_file.read_text()
    assert text.startswith("# tool=cartanflow")
    header, rows = parse_csv(text)
    assert header == [
        "bin_lo", "bin_hi", "count", "empirical_density", "theoretical_density",
    ]
    assert sum(int(r[2]) for r in rows) == 2000


def test_sample_csv_multirank_has_coordinate_column(tmp_path, capsys):
    out_file = tmp_path / "hist2.csv"
    code, _, _ = run_cli(
        capsys,
        "sample", "--class", "aiii", "--m", "3", "--n", "2",
        "--count", "500", "--bins", "8", "--seed", "7", "--out", str(out_file),
    )
    assert code == 0
    header, rows = parse_csv(out_file.read_text())
    assert header[0] == "coordinate"
    assert {r[0] for r in rows} == {"0", "1"}


def test_sample_thread_invariance(tmp_path, capsys):
    f1, f2 = tmp_path / "a.csv", tmp_path / "b.csv"
    base = ["sample", "--class", "aiii", "--m", "2", "--n", "1",
            "--count", "20000", "--bins", "32", "--seed", "3"]
    assert run_cli(capsys, *base, "--threads", "1", "--out", str(f1))[0] == 0
    assert run_cli(capsys, *base, "--threads", "4", "--out", str(f2))[0] == 0
    strip = lambda t: [ln for ln in t.splitlines() if not ln.startswith("# threads")]
    assert strip(f1.read_text()) == strip(f2.read_text())


def test_flow_csv_with_compare(tmp_path, capsys):
    out_file = tmp_path / "flow.csv"
    code, _, _ = run_cli(
        capsys,
        "flow", "--class", "aiii", "--m", "2", "--n", "1",
        "--seed", "3", "--t-max", "0.5", "--steps", "50", "--compare",
        "--out", str(out_file),
    )
    assert code == 0
    header, rows = parse_csv(out_file.read_text())
    assert header[:3] == ["t", "q_1", "H"]
    assert header[-1] == "deviation"
    assert len(rows) == 51
    energies = np.array([float(r[2]) for r in rows])
    assert np.max(np.abs(energies - energies[0])) <= 1e-8 * max(1.0, abs(energies[0]))
    devs = np.array([float(r[-1]) for r in rows])
    assert devs.max() <= 1e-6


def test_verify_density_cli(capsys):
    code, out, _ = run_cli(
        capsys,
        "verify-density", "--class", "ai", "--n", "2",
        "--count", "20000", "--bins", "32", "--seed", "7",
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["pass"] is True
    assert payload["ks_statistic"] <= payload["threshold"]


def test_verify_density_consistency_exit_3(capsys, monkeypatch):
    import cartanflow.sampling as sampling
    from cartanflow.linalg import ConsistencyError

    def broken(d, *a, **k):
        raise ConsistencyError("ratio varies")

    monkeypatch.setattr(sampling, "density_constant", broken)
    code, _, err = run_cli(
        capsys, "verify-density", "--class", "ai", "--n", "2", "--count", "100", "--bins", "4"
    )
    assert code == 3 and err.startswith("error: consistency:")


def test_threads_env_fallback(monkeypatch):
    monkeypatch.setenv("CARTANFLOW_THREADS", "3")
    from cartanflow.cli import build_parser

    args = build_parser().parse_args(
        ["sample", "--class", "aiii", "--m", "2", "--n", "1", "--count", "10"]
    )
    assert args.threads == 3


def test_atomic_write_no_partial_on_failure(tmp_path, capsys):
    out_file = tmp_path / "x.json"
    code, _, err = run_cli(
        capsys,
        "decompose", "--class", "aiii", "--m", "1", "--n", "2",
        "--seed", "1", "--out", str(out_file),
    )
    assert code == 2
    assert not out_file.exists()
