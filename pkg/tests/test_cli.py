"""CLI surface: subcommands, manifests, determinism, exit codes."""

import hashlib
import json
import math

import numpy as np
import pytest

from rsketch import cli
from rsketch import io as rio
from rsketch.errors import ConvergenceError


def run(capsys, *argv) -> tuple[int, str, str]:
    code = cli.main([str(a) for a in argv])
    cap = capsys.readouterr()
    return code, cap.out, cap.err


# =============================================================================
# gen
# =============================================================================


def test_gen_complete_writes_six_edges(tmp_path, capsys):
    out = tmp_path / "k4.edges"
    code, _, _ = run(capsys, "gen", "--kind", "complete", "--n", 4,
                     "--seed", 0, "--out", out)
    assert code == 0
    data = [ln for ln in out.read_text().splitlines()
            if ln and not ln.startswith("#")]
    assert len(data) == 6


def test_gen_deterministic_per_seed(tmp_path, capsys):
    a, b = tmp_path / "a.edges", tmp_path / "b.edges"
    for out in (a, b):
        code, _, _ = run(capsys, "gen", "--kind", "random-regular", "--n", 100,
                         "--d", 8, "--seed", 7, "--out", out)
        assert code == 0
    assert a.read_bytes() == b.read_bytes()


def test_gen_seed_generated_and_printed(tmp_path, capsys):
    out = tmp_path / "g.edges"
    code, _, err = run(capsys, "gen", "--kind", "complete", "--n", 5, "--out", out)
    assert code == 0
    assert "generated seed" in err


def test_gen_manifest_hashes_output(tmp_path, capsys):
    out = tmp_path / "g.edges"
    run(capsys, "gen", "--kind", "complete", "--n", 6, "--seed", 1, "--out", out)
    man = json.loads((tmp_path / "g.edges.manifest.json").read_text())
    assert man["command"] == "gen" and man["seed"] == 1
    assert man["outputs"][0]["sha256"] == hashlib.sha256(out.read_bytes()).hexdigest()


def test_gen_infeasible_spec_exits_2(tmp_path, capsys):
    code, _, err = run(capsys, "gen", "--kind", "random-regular", "--n", 9,
                       "--d", 3, "--seed", 0, "--out", tmp_path / "x.edges")
    assert code == 2 and "error" in err


# =============================================================================
# sketch + query
# =============================================================================


@pytest.fixture
def small_graph(tmp_path, capsys):
    out = tmp_path / "g.edges"
    run(capsys, "gen", "--kind", "random-regular", "--n", 60, "--d", 6,
        "--seed", 3, "--out", out)
    return out


def test_sketch_round_trip_and_determinism(tmp_path, capsys, small_graph):
    s1, s2 = tmp_path / "s1.bin", tmp_path / "s2.bin"
    for out, workers in ((s1, 1), (s2, 4)):
        code, _, _ = run(capsys, "sketch", small_graph, "--epsilon", 0.5,
                         "--seed", 11, "--workers", workers, "--out", out)
        assert code == 0
    # same seed, different worker counts: byte-identical sketch files
    assert s1.read_bytes() == s2.read_bytes()
    sk = rio.load_sketch_binary(s1)
    assert sk.n == 60


def test_sketch_two_vertex_then_query_gives_one(tmp_path, capsys):
    g = tmp_path / "edge.edges"
    g.write_text("0 1 1.0\n")
    s = tmp_path / "edge.sketch"
    code, out, _ = run(capsys, "sketch", g, "--epsilon", 0.5, "--seed", 0,
                       "--out", s)
    assert code == 0
    code, out, _ = run(capsys, "query", s, "--pair", 0, 1, "--json")
    assert code == 0
    rec = json.loads(out)["queries"][0]
    assert rec["resistance"] == pytest.approx(1.0, abs=1e-12)


def test_query_duplicate_pairs_identical(tmp_path, capsys, small_graph):
    s = tmp_path / "s.bin"
    run(capsys, "sketch", small_graph, "--epsilon", 0.5, "--seed", 1, "--out", s)
    pairs = tmp_path / "p.txt"
    pairs.write_text("0 7\n0 7\n0 7\n")
    code, out, _ = run(capsys, "query", s, "--pairs", pairs, "--json")
    vals = [q["resistance"] for q in json.loads(out)["queries"]]
    assert code == 0 and len(set(vals)) == 1


def test_query_exact_column(tmp_path, capsys, small_graph):
    s = tmp_path / "s.bin"
    run(capsys, "sketch", small_graph, "--epsilon", 0.4, "--seed", 1, "--out", s)
    pairs = tmp_path / "p.txt"
    rng = np.random.default_rng(0)
    pairs.write_text("".join(f"{a} {b}\n" for a, b in
                             (rng.choice(60, 2, replace=False) for _ in range(50))))
    code, out, _ = run(capsys, "query", s, "--pairs", pairs,
                       "--graph", small_graph, "--json")
    assert code == 0
    recs = json.loads(out)["queries"]
    within = sum(r["rel_error"] <= 0.4 for r in recs)
    assert within >= 0.95 * len(recs)


def test_query_without_pairs_exits_2(tmp_path, capsys, small_graph):
    s = tmp_path / "s.bin"
    run(capsys, "sketch", small_graph, "--epsilon", 0.6, "--seed", 1, "--out", s)
    code, _, err = run(capsys, "query", s)
    assert code == 2 and "error" in err


def test_sketch_estimate_nu2_flag_matches_default(tmp_path, capsys, small_graph):
    a, b = tmp_path / "a.bin", tmp_path / "b.bin"
    code, _, _ = run(capsys, "sketch", small_graph, "--epsilon", 0.5,
                     "--estimate-nu2", "--seed", 11, "--out", a)
    assert code == 0
    run(capsys, "sketch", small_graph, "--epsilon", 0.5, "--seed", 11, "--out", b)
    assert a.read_bytes() == b.read_bytes()


def test_sketch_low_gap_needs_force(tmp_path, capsys):
    # A 50-cycle has normalized spectral gap ~0.008, under the 0.01 floor.
    g = tmp_path / "c50.edges"
    run(capsys, "gen", "--kind", "random-regular", "--n", 50, "--d", 2,
        "--seed", 5, "--out", g)
    s = tmp_path / "c50.bin"
    code, _, err = run(capsys, "sketch", g, "--epsilon", 2.0, "--seed", 9,
                       "--out", s)
    assert code == 2
    assert "--force" in err and "spectral gap" in err
    assert not s.exists()


def test_sketch_force_overrides_floor(tmp_path, capsys, monkeypatch):
    # A genuine sub-floor build costs ~t0^3 walk steps, so exercise the
    # override on a two-vertex graph with the estimate pinned below the
    # floor instead of a real slow-mixing graph.
    monkeypatch.setattr(cli, "estimate_spectral_gap", lambda g: 0.009)
    g = tmp_path / "edge.edges"
    g.write_text("0 1 1.0\n")
    s = tmp_path / "edge.bin"
    code, _, err = run(capsys, "sketch", g, "--epsilon", 2.0, "--seed", 9,
                       "--out", s)
    assert code == 2 and "--force" in err
    code, _, _ = run(capsys, "sketch", g, "--epsilon", 2.0, "--seed", 9,
                     "--out", s, "--force")
    assert code == 0
    assert rio.load_sketch_binary(s).params.nu2 == pytest.approx(0.009)


def test_query_exact_flag_requires_graph(tmp_path, capsys, small_graph):
    s = tmp_path / "s.bin"
    run(capsys, "sketch", small_graph, "--epsilon", 0.6, "--seed", 1, "--out", s)
    code, _, err = run(capsys, "query", s, "--pair", 0, 1, "--exact")
    assert code == 2 and "--graph" in err
    code, out, _ = run(capsys, "query", s, "--pair", 0, 1, "--exact",
                       "--graph", small_graph, "--json")
    assert code == 0
    assert "rel_error" in json.loads(out)["queries"][0]


# =============================================================================
# trees
# =============================================================================


def test_trees_exact_k4(tmp_path, capsys):
    g = tmp_path / "k4.edges"
    run(capsys, "gen", "--kind", "complete", "--n", 4, "--seed", 0, "--out", g)
    code, out, _ = run(capsys, "trees", g, "--exact", "--json")
    doc = json.loads(out)
    assert code == 0
    assert doc["count"] == pytest.approx(16.0)


def test_trees_exact_cycle_ten(tmp_path, capsys):
    g = tmp_path / "c10.edges"
    run(capsys, "gen", "--kind", "random-regular", "--n", 10, "--d", 2,
        "--seed", 0, "--out", g)
    code, out, _ = run(capsys, "trees", g, "--exact", "--json")
    assert code == 0
    assert json.loads(out)["count"] == pytest.approx(10.0)


def test_trees_approx_k50_within_budget(tmp_path, capsys):
    g = tmp_path / "k50.edges"
    run(capsys, "gen", "--kind", "complete", "--n", 50, "--seed", 0, "--out", g)
    code, out, _ = run(capsys, "trees", g, "--delta", 0.5, "--seed", 5, "--json")
    assert code == 0
    doc = json.loads(out)
    assert abs(doc["log_count"] - 48 * math.log(50)) <= math.log(1.5)
    man = json.loads((tmp_path / "k50.edges.trees.manifest.json").read_text())
    assert man["command"] == "trees" and man["seed"] == 5


def test_trees_requires_mode(tmp_path, capsys):
    g = tmp_path / "k4.edges"
    run(capsys, "gen", "--kind", "complete", "--n", 4, "--seed", 0, "--out", g)
    code, _, err = run(capsys, "trees", g)
    assert code == 2 and "delta" in err


def test_trees_oracle_cap_exits_3(tmp_path, capsys):
    g = tmp_path / "big.edges"
    run(capsys, "gen", "--kind", "random-regular", "--n", 2100, "--d", 2,
        "--seed", 0, "--out", g)
    code, _, err = run(capsys, "trees", g, "--exact")
    assert code == 3 and "2048" in err


def test_missing_file_exits_2(capsys):
    code, _, err = run(capsys, "trees", "nope.edges", "--exact")
    assert code == 2 and "error" in err


# =============================================================================
# dd
# =============================================================================


def test_dd_two_by_two(tmp_path, capsys):
    m = tmp_path / "m.ddm"
    m.write_text("2\n0 0 2.0\n1 1 2.0\n0 1 -1.0\n")
    code, out, _ = run(capsys, "dd", m, "--delta", 0.5, "--seed", 0, "--json")
    assert code == 0
    doc = json.loads(out)
    assert abs(doc["log_det"] - math.log(3.0)) <= math.log(1.5)


def test_dd_diagonal_exact(tmp_path, capsys):
    m = tmp_path / "diag.ddm"
    m.write_text("3\n0 0 2.0\n1 1 4.0\n2 2 5.0\n")
    code, out, _ = run(capsys, "dd", m, "--delta", 0.5, "--seed", 0, "--json")
    assert code == 0
    assert json.loads(out)["log_det"] == pytest.approx(math.log(40.0))


def test_dd_rejects_non_dominant_naming_row(tmp_path, capsys):
    m = tmp_path / "bad.ddm"
    m.write_text("2\n0 0 0.5\n1 1 2.0\n0 1 -1.0\n")
    code, _, err = run(capsys, "dd", m)
    assert code == 2 and "row 0" in err


def test_dd_validate_only(tmp_path, capsys):
    m = tmp_path / "m.ddm"
    m.write_text("2\n0 0 3.0\n1 1 3.0\n0 1 -1.0\n")
    code, out, _ = run(capsys, "dd", m, "--json")
    assert code == 0
    assert json.loads(out)["certified_alpha"] == pytest.approx(2.0)


def test_dd_reff_prints_schur_resistances(tmp_path, capsys):
    # Completion of [[2,-1],[-1,2]] is a unit triangle; eliminating the
    # slack vertex leaves a single edge of weight 1.5, so R(0,1) = 2/3
    # (also the degree floor, hence exact at any epsilon).
    m = tmp_path / "m.ddm"
    m.write_text("2\n0 0 2.0\n0 1 -1.0\n1 1 2.0\n")
    pairs = tmp_path / "p.txt"
    pairs.write_text("0 1\n")
    code, out, _ = run(capsys, "dd", m, "--reff", pairs, "--seed", 11, "--json")
    assert code == 0
    payload = json.loads(out)
    assert payload["pairs"] == 1
    assert payload["resistances"][0]["resistance"] == pytest.approx(2.0 / 3.0)
    code2, out2, _ = run(capsys, "dd", m, "--reff", pairs, "--seed", 11, "--json")
    assert code2 == 0 and out2 == out


def test_dd_reff_and_delta_conflict(tmp_path, capsys):
    m = tmp_path / "m.ddm"
    m.write_text("2\n0 0 2.0\n0 1 -1.0\n1 1 2.0\n")
    pairs = tmp_path / "p.txt"
    pairs.write_text("0 1\n")
    code, _, err = run(capsys, "dd", m, "--reff", pairs, "--delta", "0.5",
                       "--seed", 1)
    assert code == 2
    assert "--delta" in err and "--reff" in err


# =============================================================================
# shared plumbing
# =============================================================================


def test_manifest_override_path(tmp_path, capsys):
    g = tmp_path / "g.edges"
    man = tmp_path / "custom.json"
    run(capsys, "gen", "--kind", "complete", "--n", 4, "--seed", 0,
        "--out", g, "--manifest", man)
    assert json.loads(man.read_text())["command"] == "gen"


def test_convergence_error_exits_4(tmp_path, capsys, small_graph, monkeypatch):
    def boom(g):
        raise ConvergenceError("power iteration stalled", iterations=10, residual=1.0)
    monkeypatch.setattr(cli, "estimate_spectral_gap", boom)
    code, _, err = run(capsys, "sketch", small_graph, "--epsilon", 0.5,
                       "--seed", 0, "--out", tmp_path / "s.bin")
    assert code == 4 and "stalled" in err
