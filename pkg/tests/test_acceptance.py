"""Acceptance criteria 1-10, each at its stated tolerance and time limit."""

import json
import math
import subprocess
import sys
import time
from fractions import Fraction

import pytest
from _instances import engineered_instances
from _report import record

from perturbtree.absorption import complete_embedding, greedy_star_pack
from perturbtree.concentration import (
    GoodStarParams,
    azuma_tail,
    good_star_probability,
    monte_carlo_good_frequency,
    run_concentration_experiment,
    sample_triples,
)
from perturbtree.digraph import Digraph, union
from perturbtree.embedding import Embedding, embed_almost, verify_embedding
from perturbtree.models import dense_base, doubled_complete_bipartite, sample_binomial_digraph, sample_mirrored_digraph
from perturbtree.oracle import contains_tree_bruteforce
from perturbtree.pipeline import PipelineConfig, build_instance, run_trial, sweep
from perturbtree.seeding import derive_seed, stream
from perturbtree.trees import family_tree, prefix_subtree, random_tree, valid_ordering


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.start


def test_criterion_01_closed_form_probability():
    with Timer() as t:
        params = GoodStarParams(30, 0.3, 3, 0.1)
        exact = good_star_probability(params, 1, 0, exact=True)
        samples = 100_000
        freq = monte_carlo_good_frequency(1, 0, 30, params.designated_size, samples, derive_seed(1, "acceptance"))
        p = float(exact)
        z = (freq - p) / math.sqrt(p * (1 - p) / samples)
    ok = exact == Fraction(9, 870) and abs(z) <= 3 and t.seconds < 10
    record(1, ok, f"P = {exact} exactly, Monte Carlo {freq:.6f} (z = {z:+.2f}), {t.seconds:.2f}s")
    assert ok


def test_criterion_02_azuma():
    with Timer() as t:
        value = azuma_tail(100, 1.0, 20.0)
        rel = abs(value - 2 * math.exp(-2)) / (2 * math.exp(-2))
        rng = stream(2, "acceptance")
        monotone = True
        for _ in range(1000):
            steps = int(rng.integers(1, 1000))
            diff = float(rng.uniform(0.1, 5))
            eps = float(rng.uniform(0, 100))
            bump = float(rng.uniform(0, 10))
            base = azuma_tail(steps, diff, eps)
            monotone &= azuma_tail(steps, diff, eps + bump) <= base
            monotone &= azuma_tail(steps + int(rng.integers(1, 50)), diff, eps) >= base
            monotone &= azuma_tail(steps, diff + bump, eps) >= base
    ok = rel <= 1e-12 and monotone and t.seconds < 1
    record(2, ok, f"azuma(100, 1, 20) = {value:.10f}, rel err {rel:.1e}, monotone on 1000 points, {t.seconds:.3f}s")
    assert ok


def test_criterion_03_star_packing():
    with Timer() as t:
        smallest = math.inf
        ok = True
        for k in range(100):
            tree = random_tree(200, 3, derive_seed(3, k))
            pack = greedy_star_pack(tree)
            covered = set()
            for st in pack.stars:
                ok &= set(st.s_plus) == set(tree.out_neighbors(st.center))
                ok &= set(st.s_minus) == set(tree.in_neighbors(st.center))
                ok &= covered.isdisjoint(st.vertices)
                covered.update(st.vertices)
            smallest = min(smallest, len(pack))
    ok = ok and smallest >= 20 and t.seconds < 5
    record(3, ok, f"100 packs disjoint and full, smallest has {smallest} stars (bound 20), {t.seconds:.2f}s")
    assert ok


def test_criterion_04_absorption_correctness():
    with Timer() as t:
        instances = engineered_instances(200, max_n=60)
        failures = 0
        for inst in instances:
            assert inst.minimum >= 2 * inst.missing
            try:
                phi = complete_embedding(inst.tree, inst.order, inst.phi0, inst.graph, inst.pack, debug=True)
            except Exception:
                failures += 1
                continue
            failures += not verify_embedding(inst.tree, inst.graph, phi)
    sizes = [inst.tree.n for inst in instances]
    ok = failures == 0 and max(sizes) <= 60 and t.seconds < 60
    record(4, ok, f"{len(instances) - failures}/{len(instances)} engineered instances completed and verified "
                  f"(n {min(sizes)}..{max(sizes)}), debug checks on, {t.seconds:.1f}s")
    assert ok


def test_criterion_05_good_implies_absorbing():
    with Timer() as t:
        n = 120
        params = GoodStarParams(n, 0.3, 3, 1 / 20)
        base = dense_base(n, 0.3, "doubled-bipartite")
        tree = random_tree(114, 3, derive_seed(5, "tree"))
        triples = sample_triples(n, derive_seed(5, "triples"), random_count=256, adversarial=32)
        report = run_concentration_experiment(
            base, tree, greedy_star_pack(tree), params, triples, 1000, derive_seed(5, "injections")
        )
    ok = report.good_events > 0 and report.good_not_absorbing == 0 and t.seconds < 30
    record(5, ok, f"{report.good_events} good stars over 1000 injections x {len(triples)} triples, "
                  f"{report.good_not_absorbing} not absorbing, {t.seconds:.1f}s")
    assert ok


def test_criterion_06_oracle_anchors():
    with Timer() as t:
        a = contains_tree_bruteforce(family_tree("directed-path", 4), doubled_complete_bipartite(2, 2))[0]
        b = contains_tree_bruteforce(family_tree("directed-path", 6), doubled_complete_bipartite(2, 4))[0]
        cycle = Digraph(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
        c = contains_tree_bruteforce(family_tree("anti-directed-path", 4), cycle)[0]
    ok = a and not b and not c and t.seconds < 1
    record(6, ok, f"K22 path {a}, K24 path {b}, C4 anti-directed {c}, {t.seconds:.3f}s")
    assert ok


def test_criterion_07_coupling():
    with Timer() as t:
        tree = family_tree("directed-path", 4)
        samples = 100_000
        rng_d, rng_m = stream(7, "binomial"), stream(7, "mirrored")
        hits_d = sum(contains_tree_bruteforce(tree, sample_binomial_digraph(5, 0.3, rng_d))[0] for _ in range(samples))
        hits_m = sum(contains_tree_bruteforce(tree, sample_mirrored_digraph(5, 0.3, rng_m))[0] for _ in range(samples))
        pd, pm = hits_d / samples, hits_m / samples
        sigma = math.sqrt(pd * (1 - pd) / samples + pm * (1 - pm) / samples)
    ok = pd >= pm - 3 * sigma and t.seconds < 120
    record(7, ok, f"P[T in D] = {pd:.4f} >= P[T in D*] = {pm:.4f} - 3 sigma ({sigma:.4f}), {t.seconds:.1f}s")
    assert ok


def test_criterion_08_concentration():
    with Timer() as t:
        n = 120
        params = GoodStarParams(n, 0.3, 3, 1 / 20)
        base = dense_base(n, 0.3, "doubled-bipartite")
        tree = random_tree(114, 3, derive_seed(8, "tree"))
        triples = sample_triples(n, derive_seed(8, "triples"))
        report = run_concentration_experiment(
            base, tree, greedy_star_pack(tree), params, triples, 2000, derive_seed(8, "injections")
        )
        s = report.summary()
    ok = s["all_within_4_sigma"] and s["azuma_holds_all"] and t.seconds < 300
    record(8, ok, f"N = {s['N']}, E[X] = {s['expected_good']:.4f}, max |z| = {s['max_abs_z']:.2f} over "
                  f"{s['triples']} triples, max P[X < E/2] = {s['max_pr_below_half']:.4f} vs smallest Azuma "
                  f"bound {s['min_azuma_bound']:.4f}, {t.seconds:.1f}s")
    assert ok


def _check_success(cfg, tree, base, rec):
    """Re-verify a successful trial from scratch: final map against D, and the
    almost-embedding of the prefix against the random edges alone."""
    random_part = sample_binomial_digraph(cfg.n, cfg.c / cfg.n, derive_seed(cfg.seed, rec.trial_index, "random-part"))
    final = Embedding.from_mapping(list(rec.witness), cfg.n, cfg.n)
    if not verify_embedding(tree, union(base, random_part), final):
        return False
    order = valid_ordering(tree, cfg.root)
    k = cfg.prefix_size
    sub, originals = prefix_subtree(tree, order, k - 1)
    prefix_phi = embed_almost(sub, range(k - 1), random_part, derive_seed(cfg.seed, rec.trial_index, "almost-embed"), cfg.policy)
    if not verify_embedding(sub, random_part, prefix_phi):
        return False
    # absorption moves at most one star centre per missing vertex
    moved = sum(final[t] != prefix_phi[s] for s, t in enumerate(originals))
    return moved <= cfg.n - k


@pytest.mark.slow
def test_criterion_09_monotone_sweep():
    with Timer() as t:
        grid = [PipelineConfig(n=300, alpha=0.3, delta=3, c=c, eps=0.05) for c in (2, 5, 10, 15)]
        cells = sweep(grid, trials=50)
        tree, base = build_instance(grid[0])
        reverified = all(_check_success(cell.config, tree, base, r) for cell in cells for r in cell.records if r.success)
    rates = ", ".join(f"c={cell.config.c:g}: {cell.successes}/50 [{cell.interval[0]:.2f}, {cell.interval[1]:.2f}]"
                      for cell in cells)
    monotone = not any(cell.monotone_violation for cell in cells)
    ok = monotone and reverified and all(cell.valid for cell in cells) and t.seconds < 900
    record(9, ok, f"{rates}; monotone {monotone}, successes re-verified {reverified}, {t.seconds:.0f}s")
    assert ok


def test_criterion_10_determinism(tmp_path):
    with Timer() as t:
        cfg = PipelineConfig(n=150, alpha=0.3, delta=3, c=15, seed=10)
        tree, base = build_instance(cfg)
        same_records = all(run_trial(cfg, tree, base, k) == run_trial(cfg, tree, base, k) for k in range(5))
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps(cfg.to_dict()))
        files = []
        for attempt in range(2):
            rec, wit = tmp_path / f"record{attempt}.json", tmp_path / f"witness{attempt}.txt"
            subprocess.run(
                [sys.executable, "-m", "perturbtree", "run", "--config", str(config), "--trial", "2",
                 "--record", str(rec), "--witness", str(wit)],
                capture_output=True, check=False,
            )
            files.append((rec.read_bytes(), wit.read_bytes() if wit.exists() else None))
        same_files = files[0] == files[1] and files[0][1] is not None
    ok = same_records and same_files
    record(10, ok, f"5 replayed trials identical {same_records}, record and witness files byte-identical across "
                   f"processes {same_files}, {t.seconds:.1f}s")
    assert ok
