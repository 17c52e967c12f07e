"""Command-line interface, report files, manifest reproducibility."""

import csv

import pytest
import yaml

from qnetcap.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_capacity_exact_five_node(capsys):
    code, out, _ = run(capsys, "capacity", "--topology", "five_node", "--threads", "1")
    assert code == 0
    assert "1.2121" in out
    assert "mode:                 exact" in out


def test_capacity_exact_abilene(capsys):
    code, out, _ = run(capsys, "capacity", "--topology", "abilene", "--threads", "1")
    assert code == 0
    assert "0.8301" in out


def test_capacity_unknown_topology(capsys):
    code, _, err = run(capsys, "capacity", "--topology", "nonexistent")
    assert code == 1
    assert "neither a bundled dataset" in err


def test_capacity_topology_from_file(tmp_path, capsys):
    path = tmp_path / "net.yaml"
    path.write_text(
        "nodes: [{id: s}, {id: t}]\n"
        "links: [{u: s, v: t, p: 0.3}]\n"
        "endpoints: {source: s, sink: t}\n"
    )
    code, out, _ = run(capsys, "capacity", "--topology", str(path), "--threads", "1")
    assert code == 0
    assert "capacity:             0.3" in out


def test_capacity_truncated_needs_top_k(capsys):
    code, _, err = run(capsys, "capacity", "--topology", "five_node", "--mode", "truncated")
    assert code == 1
    assert "--top-k" in err


def test_capacity_truncated(capsys):
    code, out, _ = run(
        capsys, "capacity", "--topology", "five_node", "--mode", "truncated",
        "--top-k", "64",
    )
    assert code == 0
    assert "bounds:" in out


def test_capacity_budget_guard(capsys):
    code, _, err = run(
        capsys, "capacity", "--topology", "five_node", "--budget", "10"
    )
    assert code == 1
    assert "truncated_capacity or sampled_capacity" in err


def test_capacity_report_file_and_reproducibility(tmp_path, capsys):
    out1 = tmp_path / "a.yaml"
    out2 = tmp_path / "b.yaml"
    for path in (out1, out2):
        code, _, _ = run(
            capsys, "capacity", "--topology", "five_node", "--threads", "1",
            "--out", str(path),
        )
        assert code == 0
    docs = []
    for path in (out1, out2):
        text = path.read_text()
        doc = yaml.safe_load(text)
        assert doc["report"]["value"] == pytest.approx(1.2121, abs=5e-4)
        assert doc["manifest"]["command"] == "capacity"
        assert doc["manifest"]["topology_digest"]
        docs.append(text)
    # identical bytes apart from the manifest timestamp line
    strip = lambda text: [l for l in text.splitlines() if not l.startswith("  timestamp:")]
    assert strip(docs[0]) == strip(docs[1])


def test_capacity_per_state_csv(tmp_path, capsys):
    target = tmp_path / "states.csv"
    code, _, _ = run(
        capsys, "capacity", "--topology", "five_node", "--threads", "1",
        "--per-state", str(target),
    )
    assert code == 0
    with open(target) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 5760
    assert set(rows[0]) == {"state_index", "state_counts", "probability", "capacity"}


def test_capacity_sampled(capsys):
    code, out, _ = run(
        capsys, "capacity", "--topology", "five_node", "--mode", "sampled",
        "--samples", "2000", "--seed", "3", "--threads", "1",
    )
    assert code == 0
    assert "stderr:" in out


def test_snapshot_both_solvers_agree(capsys):
    code, out, _ = run(
        capsys, "snapshot", "--topology", "five_node", "--solver", "both"
    )
    assert code == 0
    assert "3.415" in out
    assert "agree" in out


def test_snapshot_empty_state(capsys):
    code, out, _ = run(
        capsys, "snapshot", "--topology", "five_node", "--state", "empty"
    )
    assert code == 0
    assert "objective:            0" in out
    assert "paths (0):" in out


def test_snapshot_explicit_state(capsys):
    code, out, _ = run(
        capsys, "snapshot", "--topology", "five_node", "--state", "0-4=1,0-1"
    )
    assert code == 0
    assert "objective:            1" in out  # only the direct pair delivers


def test_snapshot_surfnet_full_matches_capacity_module(capsys):
    from qnetcap import datasets
    from qnetcap.capacity import full_state_capacity

    code, out, _ = run(capsys, "snapshot", "--topology", "surfnet")
    assert code == 0
    expected = full_state_capacity(datasets.load_dataset("surfnet"))
    objective = float(
        next(l for l in out.splitlines() if l.startswith("objective:")).split()[-1]
    )
    assert objective == pytest.approx(expected, abs=1e-9)


def test_snapshot_rejects_bad_link(capsys):
    code, _, err = run(
        capsys, "snapshot", "--topology", "five_node", "--state", "9-9=1"
    )
    assert code == 1
    assert "unknown link" in err


def test_snapshot_rejects_count_over_capacity(capsys):
    code, _, err = run(
        capsys, "snapshot", "--topology", "five_node", "--state", "0-4=2"
    )
    assert code == 1
    assert "outside" in err


def test_verify_demo_c6_partial_constraints(capsys):
    code, out, _ = run(
        capsys, "verify", "--topology", "demo_c6", "--assignment", "demo_c6_bad",
        "--constraints", "c7,c8,c9",
    )
    assert code == 0
    assert "C7: PASS" in out and "C8: PASS" in out and "C9: PASS" in out
    assert "FEASIBLE" in out.splitlines()[-1]


def test_verify_demo_c6_all_constraints(capsys):
    code, out, _ = run(
        capsys, "verify", "--topology", "demo_c6", "--assignment", "demo_c6_bad"
    )
    assert code == 0
    assert "C6: FAIL" in out
    assert "('2', '3')" in out
    assert "INFEASIBLE" in out


def test_verify_demo_c7_only_c7_fails(capsys):
    code, out, _ = run(
        capsys, "verify", "--topology", "demo_c7", "--assignment", "demo_c7_bad"
    )
    assert code == 0
    assert "C7: FAIL" in out
    for tag in ("BOUNDS", "C6", "C8", "C9"):
        assert f"{tag}: PASS" in out


def test_verify_assignment_file(tmp_path, capsys):
    path = tmp_path / "zero.yaml"
    path.write_text("flows: []\nmatchings: []\n")
    code, out, _ = run(
        capsys, "verify", "--topology", "five_node", "--assignment", str(path)
    )
    assert code == 0
    assert "objective: 0" in out
    assert "FEASIBLE" in out


def test_simulate_chain(capsys):
    code, out, _ = run(
        capsys, "simulate", "--topology", "five_node", "--samples", "2000",
        "--seed", "7",
    )
    assert code == 0
    assert "mean delivered:" in out


def test_simulate_rejects_zero_samples(capsys):
    code, _, err = run(
        capsys, "simulate", "--topology", "five_node", "--samples", "0"
    )
    assert code == 1
    assert "samples" in err


def test_datasets_list(capsys):
    code, out, _ = run(capsys, "datasets", "list")
    assert code == 0
    for name in ("five_node", "abilene", "abilene_mux2", "nsfnet", "surfnet"):
        assert name in out


def test_datasets_export_matches_bundle(tmp_path, capsys):
    from qnetcap import datasets

    target = tmp_path / "surfnet.yaml"
    code, _, _ = run(capsys, "datasets", "export", "surfnet", "--out", str(target))
    assert code == 0
    assert target.read_text() == datasets.dataset_text("surfnet")


def test_datasets_export_unknown(capsys):
    code, _, err = run(capsys, "datasets", "export", "bogus")
    assert code == 1
    assert "unknown dataset" in err


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
