"""Command line entry point.

Exit codes: 0 success, 1 phase failure (no embedding, tree not contained,
verification failed), 2 invalid input.
"""

from __future__ import annotations

import argparse
import contextlib
import dataclasses
import json
import sys
from pathlib import Path
from typing import Iterator, TextIO

from . import absorption, concentration, models, oracle, pipeline, trees
from .digraph import Digraph, read_edge_list, union, write_edge_list
from .embedding import (
    EmbeddingFailed,
    RetryPolicy,
    embed_almost,
    embedding_violations,
    read_embedding,
    verify_embedding,
    write_embedding,
)
from .seeding import derive_seed

EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 1, 2


@contextlib.contextmanager
def _output(path: str | None) -> Iterator[TextIO]:
    if path is None or path == "-":
        yield sys.stdout
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            yield fh


def _read_graph(path: str) -> Digraph:
    with open(path) as fh:
        return read_edge_list(fh)


def _read_tree(path: str) -> trees.OrientedTree:
    with open(path) as fh:
        return trees.read_tree(fh)


def cmd_gen_base(args) -> int:
    graph = models.dense_base(args.n, args.alpha, args.style, args.seed)
    with _output(args.output) as out:
        write_edge_list(graph, out)
    return EXIT_OK


def cmd_gen_tree(args) -> int:
    if args.family:
        tree = trees.family_tree(args.family, args.n)
    else:
        tree = trees.random_tree(args.n, args.delta, args.seed)
    with _output(args.output) as out:
        trees.write_tree(tree, out)
    if args.ordering:
        with _output(args.ordering) as out:
            out.write(trees.format_ordering(trees.valid_ordering(tree, args.root)))
    return EXIT_OK


def cmd_gen_random(args) -> int:
    p = args.p if args.p is not None else args.c / args.n
    sampler = models.sample_mirrored_digraph if args.mirrored else models.sample_binomial_digraph
    graph = sampler(args.n, p, args.seed)
    with _output(args.output) as out:
        write_edge_list(graph, out)
    return EXIT_OK


def cmd_embed(args) -> int:
    tree = _read_tree(args.tree)
    host = _read_graph(args.host)
    order = trees.valid_ordering(tree, args.root)
    try:
        phi = embed_almost(tree, order, host, args.seed, RetryPolicy(args.budget, args.restarts))
    except EmbeddingFailed as failure:
        print(f"embedding failed: {failure}", file=sys.stderr)
        return EXIT_FAIL
    target = host
    if args.base and not args.random_only:
        target = union(_read_graph(args.base), host)
    # a tree smaller than the host is checked through its own vertex set
    ok = not embedding_violations(tree, target, phi)
    with _output(args.output) as out:
        write_embedding(phi, out)
    print(f"verified against {'random part' if target is host else 'base ∪ random'}: {ok}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


def _mapped_subtree_pack(tree: trees.OrientedTree, phi) -> absorption.StarPack:
    mapped = set(phi.mapped())
    edges = [e for e in tree.edges if e[0] in mapped and e[1] in mapped]
    if len(edges) != len(mapped) - 1:
        raise ValueError("mapped vertices do not span a subtree")
    originals = sorted(mapped)
    relabel = {v: i for i, v in enumerate(originals)}
    sub = trees.OrientedTree(len(originals), tuple((relabel[a], relabel[b]) for a, b in edges))
    return absorption.greedy_star_pack(sub).relabeled(originals)


def cmd_absorb_count(args) -> int:
    tree = _read_tree(args.tree)
    graph = _read_graph(args.graph)
    with open(args.embedding) as fh:
        phi = read_embedding(fh, tree.n, graph.n)
    pack = _mapped_subtree_pack(tree, phi)
    if args.pack_size is not None:
        pack = pack.truncated(args.pack_size)
    mats = absorption.absorbing_count_matrices(pack, phi, graph)
    with _output(args.output) as out:
        out.write("u,w,sign,count\n")
        for sign in absorption.SIGNS:
            mat = mats[sign]
            for u in range(graph.n):
                row = mat[u]
                out.write("".join(f"{u},{w},{sign},{int(row[w])}\n" for w in range(graph.n)))
    free = phi.unused_hosts()
    lowest = absorption.min_absorbing_over_triples(pack, phi, graph, free)
    summary = {
        "pack_size": len(pack),
        "unembedded": len(free),
        "threshold": 2 * len(free),
        "min_count": lowest.count,
        "argmin": list(lowest.triple),
        "min_count_unembedded": lowest.restricted_count,
        "argmin_unembedded": list(lowest.restricted_triple) if lowest.restricted_triple else None,
    }
    print(json.dumps(summary), file=sys.stderr)
    if args.figure:
        from .plotting import plot_absorbing_histogram

        plot_absorbing_histogram([mats["+"], mats["-"]], 2 * len(free), args.figure)
    return EXIT_OK


def cmd_concentration(args) -> int:
    params = concentration.GoodStarParams(args.n, args.alpha, args.delta, args.gamma)
    base = models.dense_base(args.n, args.alpha, args.base_style, args.seed)
    tree_n = args.tree_n or models.ceil_fraction((1 - args.eps) * args.n)
    tree = trees.random_tree(tree_n, args.delta, derive_seed(args.seed, "tree"))
    pack = absorption.greedy_star_pack(tree).truncated(params.n_cap)
    triples = concentration.sample_triples(args.n, derive_seed(args.seed, "triples"), full=args.full)
    report = concentration.run_concentration_experiment(
        base, tree, pack, params, triples, args.trials, derive_seed(args.seed, "injections")
    )
    with _output(args.csv) as out:
        out.write("triple_id,trial,count\n")
        for j, t, x in report.csv_rows():
            out.write(f"{j},{t},{x}\n")
    summary = report.summary()
    summary["per_triple"] = [dataclasses.asdict(s) | {"triple": list(s.triple)} for s in report.summaries]
    with _output(args.json) as out:
        json.dump(summary, out, indent=2)
        out.write("\n")
    if args.figure:
        from .plotting import plot_concentration

        plot_concentration(report, args.figure)
    return EXIT_OK


def cmd_oracle(args) -> int:
    tree = _read_tree(args.tree)
    graph = _read_graph(args.graph)
    found, witness = oracle.contains_tree_bruteforce(tree, graph, args.limit)
    print("contained" if found else "not contained")
    if found and args.witness:
        with _output(args.witness) as out:
            write_embedding(witness, out)
    return EXIT_OK if found else EXIT_FAIL


def _load_json(path: str):
    with open(path) as fh:
        return json.load(fh)


def cmd_run(args) -> int:
    cfg = pipeline.PipelineConfig.from_dict(_load_json(args.config))
    tree, base = pipeline.build_instance(cfg)
    if args.tree:
        tree = _read_tree(args.tree)
    if args.base:
        base = _read_graph(args.base)
    record = pipeline.run_trial(cfg, tree, base, args.trial)
    if args.record:
        with _output(args.record) as out:
            # wall-clock timings stay out of the file so replays are byte-identical
            data = {k: v for k, v in dataclasses.asdict(record).items() if k != "timings"}
            json.dump(data, out, indent=2, default=list)
            out.write("\n")
    if args.witness and record.witness is not None:
        with _output(args.witness) as out:
            out.writelines(f"{t} {h}\n" for t, h in enumerate(record.witness))
    pipeline.write_csv([record.row()], sys.stdout)
    return EXIT_OK if record.success else EXIT_FAIL


def cmd_sweep(args) -> int:
    grid = pipeline.grid_from_json(_load_json(args.config))
    cells = pipeline.sweep(grid, args.trials, args.parallelism)
    with _output(args.csv) as out:
        pipeline.write_csv([cell.row() for cell in cells], out)
    if args.trials_csv:
        with _output(args.trials_csv) as out:
            pipeline.write_csv([dict(cell=cell.index, **r.row()) for cell in cells for r in cell.records], out)
    if args.figure:
        from .plotting import plot_sweep

        plot_sweep(cells, args.figure)
    return EXIT_OK


def cmd_verify(args) -> int:
    tree = _read_tree(args.tree)
    graph = _read_graph(args.graph)
    with open(args.embedding) as fh:
        phi = read_embedding(fh, tree.n, graph.n)
    if verify_embedding(tree, graph, phi):
        print("valid")
        return EXIT_OK
    for u, v in embedding_violations(tree, graph, phi):
        print(f"missing image of tree edge {u} {v}: {phi[u]} {phi[v]}")
    return EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="perturbtree", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-base", help="dense base digraph with minimum semidegree ceil(alpha n)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--style", choices=models.BASE_STYLES, default="doubled-bipartite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen_base)

    p = sub.add_parser("gen-tree", help="random degree-capped tree or a named family")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta", type=int, default=3)
    p.add_argument("--family", choices=trees.FAMILIES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--root", type=int, default=0)
    p.add_argument("--ordering", help="also write the breadth-first valid ordering here")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen_tree)

    p = sub.add_parser("gen-random", help="binomial D(n,p) or mirrored D*(n,p) random digraph")
    p.add_argument("--n", type=int, required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--p", type=float)
    group.add_argument("--c", type=float, help="use p = c/n")
    p.add_argument("--mirrored", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen_random)

    p = sub.add_parser("embed", help="embed a tree into a host using host edges only")
    p.add_argument("--tree", required=True)
    p.add_argument("--host", required=True, help="graph whose edges the embedder may use")
    p.add_argument("--base", help="base graph; verification uses base ∪ host unless --random-only")
    p.add_argument("--random-only", action="store_true", help="verify against the host alone")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--root", type=int, default=0)
    p.add_argument("--budget", type=int, default=10_000)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("absorb-count", help="absorbing-star counts for every (u, sign, w)")
    p.add_argument("--tree", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--embedding", required=True)
    p.add_argument("--pack-size", type=int)
    p.add_argument("--figure")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_absorb_count)

    p = sub.add_parser("concentration", help="Monte Carlo good-star concentration experiment")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--delta", type=int, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=0.05, help="tree has ceil((1-eps) n) vertices")
    p.add_argument("--tree-n", type=int)
    p.add_argument("--base-style", choices=models.BASE_STYLES, default="doubled-bipartite")
    p.add_argument("--full", action="store_true", help="all 2n^2 triples instead of a sample")
    p.add_argument("--csv")
    p.add_argument("--json", required=True)
    p.add_argument("--figure")
    p.set_defaults(func=cmd_concentration)

    p = sub.add_parser("oracle", help="exhaustive containment test for small hosts")
    p.add_argument("--tree", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--limit", type=int, default=oracle.DEFAULT_LIMIT)
    p.add_argument("--witness")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("run", help="one end-to-end trial from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--trial", type=int, default=0)
    p.add_argument("--tree")
    p.add_argument("--base")
    p.add_argument("--record")
    p.add_argument("--witness")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="success rates over a grid of configs")
    p.add_argument("--config", required=True)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--parallelism", type=int, default=1)
    p.add_argument("--csv")
    p.add_argument("--trials-csv")
    p.add_argument("--figure")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="check an embedding file against a tree and graph")
    p.add_argument("--tree", required=True)
    p.add_argument("--graph", required=True)
    p.add_argument("--embedding", required=True)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError, TypeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
