import os

import numpy as np
import pytest

from cutgap.cli import main
from cutgap.config import RunConfig, derive_seed, parse_config_file
from cutgap.metrics import FiniteMetric, metric_to_text
from cutgap.unique_games import plant_instance, ug_to_text
from cutgap.verifier import long_code_proof, proof_to_text


def read(path):
    with open(path) as fh:
        return fh.read()


def test_config_parsing_and_validation(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("k = 3\neta = 0.2  # comment\nwindow = typical\n")
    kwargs = parse_config_file(cfg_file.read_text())
    cfg = RunConfig(**kwargs).validate()
    assert cfg.k == 3 and cfg.eta == 0.2
    with pytest.raises(ValueError):
        RunConfig(t=2).validate()
    with pytest.raises(ValueError):
        RunConfig(l_in=3).validate()
    with pytest.raises(ValueError):
        parse_config_file("unknown = 1")
    assert derive_seed(5, "opt_search") == 5 * 1009 + 1


def test_build_ug_deterministic_outputs(tmp_path):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    for out in (out_a, out_b):
        code = main([
            "build-ug", "--k", "2", "--eta", "0.25", "--seed", "7",
            "--budget-triples", "5000", "--out", str(out),
        ])
        assert code == 0
    for name in ("ug_instance.txt", "basis.txt", "ug_report.tsv", "summary.txt"):
        assert read(out_a / name) == read(out_b / name)


def test_build_ug_window_error(tmp_path, capsys):
    code = main(["build-ug", "--k", "2", "--eta", "0.05", "--out", str(tmp_path)])
    assert code == 1
    assert "FAIL build-ug" in capsys.readouterr().out


def test_build_ug_invalid_k():
    with pytest.raises(ValueError):
        main(["build-ug", "--k", "9", "--eta", "0.2", "--out", "/tmp/x"])


def test_build_bes_pipeline_and_gap_row(tmp_path):
    import time

    started = time.time()
    out = tmp_path / "run"
    code = main([
        "build-ug", "--k", "2", "--eta", "0.3", "--seed", "3",
        "--budget-triples", "5000", "--out", str(out),
    ])
    assert code == 0
    code = main([
        "build-bes", "--k", "2", "--eta", "0.3", "--epsilon", "0.3",
        "--t", "1", "--seed", "3", "--budget-triples", "5000",
        "--ug-file", str(out / "ug_instance.txt"), "--out", str(out),
    ])
    assert code == 0
    assert time.time() - started < 60.0  # the k=2 end-to-end budget
    rows = read(out / "gap_row.tsv").strip().splitlines()
    header = rows[1].split("\t")
    assert header == ["k", "eta", "epsilon", "t", "sdp_objective",
                      "best_cut_weight", "ratio", "balance"]
    values = rows[2].split("\t")
    assert values[0] == "2"
    assert float(values[7]) <= 5 / 6 + 1e-9
    cut_lines = read(out / "best_cut.txt").split()
    assert len(cut_lines) == 64 and set(cut_lines) <= {"1", "-1"}


def test_build_bes_deterministic_outputs(tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        code = main([
            "build-bes", "--k", "2", "--eta", "0.3", "--epsilon", "0.2",
            "--t", "1", "--seed", "9", "--budget-triples", "2000",
            "--budget-samples", "2000", "--out", str(out),
        ])
        assert code == 0
        outs.append(out)
    for name in ("bes_instance.txt", "gap_row.tsv", "best_cut.txt", "bes_summary.txt"):
        assert read(outs[0] / name) == read(outs[1] / name)


def test_build_bes_missing_ug_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        main([
            "build-bes", "--k", "2", "--eta", "0.3", "--epsilon", "0.3",
            "--ug-file", str(tmp_path / "nope.txt"), "--out", str(tmp_path),
        ])


def test_verify_detects_tampered_weight(tmp_path, capsys):
    out = tmp_path / "run"
    main(["build-ug", "--k", "2", "--eta", "0.25", "--seed", "1",
          "--budget-triples", "2000", "--out", str(out)])
    text = read(out / "ug_instance.txt")
    lines = text.splitlines()
    parts = lines[1].split()
    parts[2] = "0.5"  # tamper one weight: the sum is no longer 1
    lines[1] = " ".join(parts)
    bad = out / "tampered.txt"
    bad.write_text("\n".join(lines) + "\n")
    code = main(["verify", "--ug-file", str(bad)])
    assert code == 1
    assert "FAIL ug_structure" in capsys.readouterr().out


def test_verify_detects_corrupted_basis(tmp_path, capsys):
    out = tmp_path / "run"
    main(["build-ug", "--k", "2", "--eta", "0.25", "--seed", "1",
          "--budget-triples", "2000", "--out", str(out)])
    text = read(out / "basis.txt").splitlines()
    # flip one entry of one basis row: orthonormality breaks
    row = text[2].split()
    row[0] = str(-int(row[0]))
    text[2] = " ".join(row)
    bad = out / "bad_basis.txt"
    bad.write_text("\n".join(text) + "\n")
    code = main(["verify", "--ug-file", str(out / "ug_instance.txt"),
                 "--basis-file", str(bad)])
    assert code == 1
    assert "FAIL basis_orthonormality" in capsys.readouterr().out


def test_verify_clean_artifacts_pass(tmp_path, capsys):
    out = tmp_path / "run"
    main(["build-ug", "--k", "2", "--eta", "0.3", "--seed", "2",
          "--budget-triples", "2000", "--out", str(out)])
    code = main(["verify", "--ug-file", str(out / "ug_instance.txt"),
                 "--basis-file", str(out / "basis.txt")])
    assert code == 0
    got = capsys.readouterr().out
    assert "OK ug_relabel_invariance" in got
    assert "OK ug_expansion_identity" in got


def test_pcp_command(tmp_path, capsys):
    u, hidden = plant_instance(6, 3, 0.1, 0.8, seed=0)
    ug_file = tmp_path / "ug.txt"
    ug_file.write_text(ug_to_text(u))
    proof_file = tmp_path / "proof.txt"
    proof_file.write_text(proof_to_text(long_code_proof(hidden, 3)))
    code = main([
        "pcp", "--ug-file", str(ug_file), "--proof-file", str(proof_file),
        "--epsilon", "0.2", "--samples", "20000", "--seed", "1", "--loose",
    ])
    assert code == 0
    got = capsys.readouterr().out
    assert "acceptance_exact" in got and "decoded_value" in got


def test_distortion_command(tmp_path, capsys):
    d = np.array([[0, 1, 2, 1], [1, 0, 1, 2], [2, 1, 0, 1], [1, 2, 1, 0]], float)
    mfile = tmp_path / "metric.txt"
    mfile.write_text(metric_to_text(FiniteMetric(d)))
    code = main(["distortion", "--metric-file", str(mfile)])
    assert code == 0
    got = capsys.readouterr().out
    assert "distortion\t1" in got
    # export-only mode
    code = main(["distortion", "--metric-file", str(mfile),
                 "--export", str(tmp_path / "prog.lp")])
    assert code == 0
    assert (tmp_path / "prog.lp").read_text().startswith("OBJECTIVE min")


def test_gram_cache_env_override(monkeypatch):
    from cutgap.cli import _gram_cache_entries

    assert _gram_cache_entries() == 4096
    monkeypatch.setenv("CUTGAP_GRAM_CACHE", "128")
    assert _gram_cache_entries() == 128


def test_round_command(tmp_path, capsys):
    lines = ["GRAPH 4", "0 1 0.0 1.0", "2 3 0.0 1.0", "0 2 1.0 0.0", "1 3 1.0 0.0"]
    gfile = tmp_path / "graph.txt"
    gfile.write_text("\n".join(lines) + "\n")
    code = main(["round", "--graph-file", str(gfile), "--seed", "2"])
    assert code == 0
    got = capsys.readouterr().out
    assert "demand_cut" in got
