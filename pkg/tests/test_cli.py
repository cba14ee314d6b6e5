import csv
import json
import shutil
import subprocess
import sys

import pytest

from perturbtree.cli import main
from perturbtree.digraph import min_semidegree, read_edge_list
from perturbtree.trees import check_ordering, parse_ordering, read_tree


def run(*argv):
    return main([str(a) for a in argv])


def test_gen_base_and_tree(tmp_path):
    base = tmp_path / "base.txt"
    assert run("gen-base", "--n", 30, "--alpha", 0.3, "--style", "blown-cycle", "-o", base) == 0
    with open(base) as fh:
        assert min_semidegree(read_edge_list(fh)) >= 9
    tree_file, order_file = tmp_path / "tree.txt", tmp_path / "order.txt"
    assert run("gen-tree", "--n", 25, "--delta", 3, "--seed", 4, "-o", tree_file, "--ordering", order_file) == 0
    with open(tree_file) as fh:
        tree = read_tree(fh)
    assert tree.max_total_degree <= 3
    assert check_ordering(tree, parse_ordering(order_file.read_text()))


def test_gen_random_mirrored(tmp_path):
    out = tmp_path / "r.txt"
    assert run("gen-random", "--n", 20, "--p", 0.3, "--mirrored", "--seed", 1, "-o", out) == 0
    with open(out) as fh:
        g = read_edge_list(fh)
    assert g.reverse() == g


def test_embed_verify_roundtrip(tmp_path):
    tree, host, emb = tmp_path / "t.txt", tmp_path / "h.txt", tmp_path / "e.txt"
    run("gen-tree", "--n", 30, "--delta", 3, "-o", tree)
    run("gen-random", "--n", 40, "--p", 0.4, "--seed", 2, "-o", host)
    assert run("embed", "--tree", tree, "--host", host, "--random-only", "--seed", 3, "-o", emb) == 0
    assert len(emb.read_text().splitlines()) == 30
    big_tree = tmp_path / "t40.txt"
    run("gen-tree", "--n", 40, "--delta", 3, "-o", big_tree)
    emb40 = tmp_path / "e40.txt"
    assert run("embed", "--tree", big_tree, "--host", host, "--random-only", "-o", emb40) == 0
    assert run("verify", "--tree", big_tree, "--graph", host, "--embedding", emb40) == 0
    empty = tmp_path / "empty.txt"
    run("gen-random", "--n", 40, "--p", 0, "-o", empty)
    assert run("verify", "--tree", big_tree, "--graph", empty, "--embedding", emb40) == 1


def test_oracle_exit_codes(tmp_path, capsys):
    path, k22, k24 = tmp_path / "p4.txt", tmp_path / "k22.txt", tmp_path / "k24.txt"
    run("gen-tree", "--n", 4, "--family", "directed-path", "-o", path)
    run("gen-base", "--n", 4, "--alpha", 0.5, "-o", k22)
    witness = tmp_path / "w.txt"
    assert run("oracle", "--tree", path, "--graph", k22, "--witness", witness) == 0
    assert "contained" in capsys.readouterr().out
    assert len(witness.read_text().splitlines()) == 4
    path6 = tmp_path / "p6.txt"
    run("gen-tree", "--n", 6, "--family", "directed-path", "-o", path6)
    k24.write_text("digraph 6 16\n" + "".join(f"{a} {b}\n{b} {a}\n" for a in range(2) for b in range(2, 6)))
    assert run("oracle", "--tree", path6, "--graph", k24) == 1


def test_invalid_input_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("graph 3\n")
    tree = tmp_path / "t.txt"
    run("gen-tree", "--n", 3, "-o", tree)
    assert run("oracle", "--tree", tree, "--graph", bad) == 2
    assert run("gen-base", "--n", 10, "--alpha", 0.9) == 2
    assert run("verify", "--tree", tree, "--graph", tmp_path / "missing.txt", "--embedding", bad) == 2
    assert "error" in capsys.readouterr().err


def test_absorb_count_csv(tmp_path, capsys):
    tree, host, emb, out, fig = (tmp_path / x for x in ("t.txt", "h.txt", "e.txt", "c.csv", "hist.png"))
    run("gen-random", "--n", 20, "--p", 0.9, "--seed", 1, "-o", host)
    order_file = tmp_path / "o.txt"
    run("gen-tree", "--n", 20, "--delta", 3, "-o", tree, "--ordering", order_file)
    with open(tree) as fh:
        t = read_tree(fh)
    order = parse_ordering(order_file.read_text())
    # embed the 18 vertices of a breadth-first prefix onto hosts 0..17
    prefix = sorted({x for e in order[:17] for x in t.edges[e]})
    emb.write_text("".join(f"{v} {h}\n" for h, v in enumerate(prefix)))
    capsys.readouterr()
    assert run("absorb-count", "--tree", tree, "--graph", host, "--embedding", emb, "-o", out, "--figure", fig) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 2 * 20 * 20 and set(rows[0]) == {"u", "w", "sign", "count"}
    summary = json.loads(capsys.readouterr().err)
    assert summary["min_count"] == min(int(r["count"]) for r in rows)
    assert summary["unembedded"] == 2 and fig.stat().st_size > 0


def test_concentration_outputs(tmp_path):
    out, js, fig = tmp_path / "x.csv", tmp_path / "s.json", tmp_path / "f.png"
    code = run("concentration", "--n", 60, "--alpha", 0.9, "--delta", 3, "--gamma", 0.1, "--trials", 200,
               "--base-style", "random-repair", "--csv", out, "--json", js, "--figure", fig)
    assert code == 0
    header = out.read_text().splitlines()[0]
    assert header == "triple_id,trial,count"
    summary = json.loads(js.read_text())
    assert summary["trials"] == 200 and summary["good_not_absorbing"] == 0
    assert fig.exists()


def _config(tmp_path, **overrides):
    cfg = dict(n=80, alpha=0.3, delta=3, c=15, seed=5) | overrides
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def test_run_replay_files_identical(tmp_path):
    cfg = _config(tmp_path)
    outputs = []
    for k in range(2):
        rec, wit = tmp_path / f"rec{k}.json", tmp_path / f"wit{k}.txt"
        code = run("run", "--config", cfg, "--trial", 3, "--record", rec, "--witness", wit)
        outputs.append((code, rec.read_bytes(), wit.read_bytes() if wit.exists() else b""))
    assert outputs[0] == outputs[1]
    assert "timings" not in json.loads(outputs[0][1])


def test_run_bad_config(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"n": 80, "alpha": 0.3}')
    assert run("run", "--config", path) == 2
    path.write_text("{not json")
    assert run("run", "--config", path) == 2


def test_sweep_outputs(tmp_path):
    grid = tmp_path / "grid.json"
    grid.write_text(json.dumps({"base": {"n": 60, "alpha": 0.3, "delta": 3}, "grid": {"c": [3, 20]}}))
    cells, trials, fig = tmp_path / "cells.csv", tmp_path / "trials.csv", tmp_path / "sweep.png"
    assert run("sweep", "--config", grid, "--trials", 3, "--csv", cells, "--trials-csv", trials, "--figure", fig) == 0
    rows = list(csv.DictReader(cells.open()))
    assert [float(r["c"]) for r in rows] == [3, 20]
    assert {"rate", "wilson_low", "wilson_high", "monotone_violation"} <= set(rows[0])
    assert len(list(csv.DictReader(trials.open()))) == 6
    assert fig.stat().st_size > 0


@pytest.mark.skipif(shutil.which("perturbtree") is None, reason="console script not installed")
def test_console_script():
    out = subprocess.run(["perturbtree", "--help"], capture_output=True, text=True, check=True)
    assert "sweep" in out.stdout
    mod = subprocess.run([sys.executable, "-m", "perturbtree", "gen-base", "--n", "4", "--alpha", "0.5"],
                         capture_output=True, text=True, check=True)
    assert mod.stdout.startswith("digraph 4 8")
