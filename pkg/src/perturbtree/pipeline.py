"""End-to-end trials: almost-embed a prefix into the random edges, then absorb
the rest using the dense base graph; plus grid sweeps over trial farms."""

from __future__ import annotations

import csv
import dataclasses
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence, TextIO

from statsmodels.stats.proportion import proportion_confint

from .absorption import (
    AbsorptionStep,
    CompletionFailed,
    StarPack,
    complete_embedding,
    greedy_star_pack,
    min_absorbing_over_triples,
)
from .concentration import GoodStarParams
from .digraph import Digraph, min_semidegree, union
from .embedding import Embedding, EmbeddingFailed, RetryPolicy, embed_almost, verify_embedding
from .models import ceil_fraction, dense_base, sample_binomial_digraph
from .seeding import derive_seed
from .trees import FAMILIES, OrientedTree, family_tree, prefix_subtree, random_tree, valid_ordering

PACK_CAPS = ("gamma", "lemma", "none")


@dataclass(frozen=True)
class PipelineConfig:
    n: int
    alpha: float
    delta: int
    c: float
    eps: float = 0.05
    gamma: float | None = None
    backtrack_budget: int = 10_000
    max_restarts: int = 20
    seed: int = 0
    threshold: int | None = None
    base_style: str = "doubled-bipartite"
    tree: str = "random"
    pack_cap: str = "none"
    root: int = 0

    def __post_init__(self) -> None:
        if not 0 < self.eps < 1 / 3:
            raise ValueError(f"eps must lie in (0, 1/3), got {self.eps}")
        if self.c < 0 or self.c / self.n > 1:
            raise ValueError(f"c={self.c} gives edge probability outside [0, 1]")
        if self.pack_gamma * self.n < 1:
            raise ValueError("gamma * n must be at least 1")
        if self.pack_cap not in PACK_CAPS:
            raise ValueError(f"pack_cap must be one of {PACK_CAPS}")
        if self.tree != "random" and self.tree not in FAMILIES:
            raise ValueError(f"tree must be 'random' or one of {FAMILIES}")

    @property
    def pack_gamma(self) -> float:
        return self.gamma if self.gamma is not None else 1 / (2 * (self.delta**2 + 1))

    @property
    def prefix_size(self) -> int:
        return ceil_fraction((1 - self.eps) * self.n)

    @property
    def absorb_threshold(self) -> int:
        return self.threshold if self.threshold is not None else 2 * ceil_fraction(self.eps * self.n)

    @property
    def policy(self) -> RetryPolicy:
        return RetryPolicy(self.backtrack_budget, self.max_restarts)

    def good_star_params(self) -> GoodStarParams:
        return GoodStarParams(self.n, self.alpha, self.delta, self.pack_gamma)

    def pack_limit(self) -> int | None:
        if self.pack_cap == "gamma":
            return ceil_fraction(self.pack_gamma * self.n)
        if self.pack_cap == "lemma":
            return self.good_star_params().n_cap
        return None

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PipelineConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


def build_instance(cfg: PipelineConfig) -> tuple[OrientedTree, Digraph]:
    """The fixed tree and base graph of a config; independent of ``c``."""
    if cfg.tree == "random":
        tree = random_tree(cfg.n, cfg.delta, derive_seed(cfg.seed, "tree"))
    else:
        tree = family_tree(cfg.tree, cfg.n)
    base = dense_base(cfg.n, cfg.alpha, cfg.base_style, derive_seed(cfg.seed, "base"))
    return tree, base


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    seed: int
    config: tuple[tuple[str, Any], ...]
    prefix_size: int
    unembedded: int
    random_edges: int
    almost_ok: bool
    almost_depth: int
    pack_size: int
    lemma_cap: int
    threshold: int
    min_abs_all: int | None = None
    min_abs_restricted: int | None = None
    min_abs_base: int | None = None
    min_abs_lemma: int | None = None
    min_abs_encountered: int | None = None
    hypothesis_met: bool | None = None
    completion_ok: bool = False
    completion_step: int | None = None
    completion_message: str = ""
    verified: bool = False
    prefix_in_random: bool | None = None
    witness: tuple[int, ...] | None = None
    timings: dict[str, float] = field(default_factory=dict, compare=False)

    @property
    def success(self) -> bool:
        return self.completion_ok and self.verified

    def row(self) -> dict[str, Any]:
        cfg = dict(self.config)
        return {
            "trial": self.trial_index,
            "c": cfg["c"],
            "n": cfg["n"],
            "prefix_size": self.prefix_size,
            "unembedded": self.unembedded,
            "random_edges": self.random_edges,
            "almost_ok": int(self.almost_ok),
            "almost_depth": self.almost_depth,
            "pack_size": self.pack_size,
            "lemma_cap": self.lemma_cap,
            "threshold": self.threshold,
            "min_abs_all": _blank(self.min_abs_all),
            "min_abs_restricted": _blank(self.min_abs_restricted),
            "min_abs_base": _blank(self.min_abs_base),
            "min_abs_lemma": _blank(self.min_abs_lemma),
            "min_abs_encountered": _blank(self.min_abs_encountered),
            "hypothesis_met": _blank(self.hypothesis_met),
            "completion_ok": int(self.completion_ok),
            "completion_step": _blank(self.completion_step),
            "verified": int(self.verified),
            "prefix_in_random": _blank(self.prefix_in_random),
            **{f"time_{k}": round(v, 6) for k, v in self.timings.items()},
        }


def _blank(value: Any) -> Any:
    if value is None:
        return ""
    return int(value) if isinstance(value, bool) else value


def run_trial(cfg: PipelineConfig, tree: OrientedTree, base: Digraph, trial_index: int) -> TrialRecord:
    """One full attempt at embedding ``tree`` into ``base ∪ D(n, c/n)``.

    Failures are recorded in the returned record rather than raised.
    """
    n = cfg.n
    if tree.n != n or base.n != n:
        raise ValueError("tree and base must have cfg.n vertices")
    if min_semidegree(base) < ceil_fraction(cfg.alpha * n):
        raise ValueError("base graph violates the minimum semidegree alpha*n")
    timings: dict[str, float] = {}
    clock = time.perf_counter()

    def lap(name: str) -> None:
        nonlocal clock
        now = time.perf_counter()
        timings[name] = now - clock
        clock = now

    order = valid_ordering(tree, cfg.root)
    k = cfg.prefix_size
    sub, originals = prefix_subtree(tree, order, k - 1)
    random_part = sample_binomial_digraph(n, cfg.c / n, derive_seed(cfg.seed, trial_index, "random-part"))
    graph = union(base, random_part)
    lap("sample")

    full_pack = greedy_star_pack(sub)
    limit = cfg.pack_limit()
    pack_sub = full_pack if limit is None else full_pack.truncated(limit)
    pack: StarPack = pack_sub.relabeled(originals)
    lemma_pack = full_pack.truncated(cfg.good_star_params().n_cap).relabeled(originals)
    common = dict(
        trial_index=trial_index,
        seed=cfg.seed,
        config=tuple(sorted(cfg.to_dict().items())),
        prefix_size=k,
        unembedded=n - k,
        random_edges=random_part.edge_count,
        pack_size=len(pack),
        lemma_cap=cfg.good_star_params().n_cap,
        threshold=cfg.absorb_threshold,
    )

    try:
        sub_phi = embed_almost(sub, range(k - 1), random_part, derive_seed(cfg.seed, trial_index, "almost-embed"), cfg.policy)
    except EmbeddingFailed as failure:
        lap("almost_embed")
        return TrialRecord(**common, almost_ok=False, almost_depth=failure.depth, timings=timings)
    lap("almost_embed")
    phi0 = Embedding(n, n)
    for s, t in enumerate(originals):
        phi0.assign(t, sub_phi[s])
    prefix_in_random = verify_embedding(sub, random_part, sub_phi)

    unembedded = phi0.unused_hosts()
    lowest = min_absorbing_over_triples(pack, phi0, graph, unembedded)
    lowest_base = min_absorbing_over_triples(pack, phi0, base)
    lowest_lemma = min_absorbing_over_triples(lemma_pack, phi0, base)
    lap("absorb_count")

    steps: list[AbsorptionStep] = []
    record = dict(
        common,
        almost_ok=True,
        almost_depth=k,
        min_abs_all=lowest.count,
        min_abs_restricted=lowest.restricted_count,
        min_abs_base=lowest_base.count,
        min_abs_lemma=lowest_lemma.count,
        hypothesis_met=lowest.count >= cfg.absorb_threshold,
        prefix_in_random=prefix_in_random,
    )
    try:
        phi = complete_embedding(tree, order, phi0, graph, pack, log=steps)
    except CompletionFailed as failure:
        lap("complete")
        encountered = min([s.available for s in steps] + [0])
        return TrialRecord(
            **record,
            min_abs_encountered=encountered,
            completion_step=failure.step,
            completion_message=str(failure),
            timings=timings,
        )
    lap("complete")
    verified = verify_embedding(tree, graph, phi)
    lap("verify")
    return TrialRecord(
        **record,
        min_abs_encountered=min((s.available for s in steps), default=None),
        completion_ok=True,
        verified=verified,
        witness=tuple(phi.forward.tolist()),
        timings=timings,
    )


def wilson_interval(successes: int, trials: int) -> tuple[float, float]:
    if trials == 0:
        return 0.0, 1.0
    lo, hi = proportion_confint(successes, trials, alpha=0.05, method="wilson")
    return float(lo), float(hi)


@dataclass
class CellResult:
    index: int
    config: PipelineConfig
    records: list[TrialRecord]
    valid: bool = True
    reason: str = ""
    monotone_violation: bool = False

    @property
    def successes(self) -> int:
        return sum(r.success for r in self.records)

    @property
    def rate(self) -> float:
        return self.successes / len(self.records) if self.records else math.nan

    @property
    def interval(self) -> tuple[float, float]:
        return wilson_interval(self.successes, len(self.records))

    def row(self) -> dict[str, Any]:
        cfg = self.config
        lo, hi = self.interval if self.valid else (math.nan, math.nan)
        recs = self.records
        return {
            "cell": self.index,
            "n": cfg.n,
            "alpha": cfg.alpha,
            "delta": cfg.delta,
            "c": cfg.c,
            "eps": cfg.eps,
            "gamma": cfg.pack_gamma,
            "pack_cap": cfg.pack_cap,
            "base_style": cfg.base_style,
            "trials": len(recs),
            "successes": self.successes,
            "rate": self.rate,
            "wilson_low": lo,
            "wilson_high": hi,
            "almost_rate": sum(r.almost_ok for r in recs) / len(recs) if recs else math.nan,
            "hypothesis_rate": sum(bool(r.hypothesis_met) for r in recs) / len(recs) if recs else math.nan,
            "valid": int(self.valid),
            "monotone_violation": int(self.monotone_violation),
            "note": self.reason,
        }


def _run_task(task: tuple[PipelineConfig, OrientedTree, Digraph, int]) -> TrialRecord:
    return run_trial(*task)


def _flag_monotonicity(cells: Sequence[CellResult]) -> None:
    groups: dict[tuple, list[CellResult]] = {}
    for cell in cells:
        if not cell.valid:
            continue
        key = tuple((k, v) for k, v in sorted(cell.config.to_dict().items()) if k != "c")
        groups.setdefault(key, []).append(cell)
    for members in groups.values():
        members.sort(key=lambda cell: cell.config.c)
        for i, low in enumerate(members):
            for high in members[i + 1 :]:
                if high.config.c > low.config.c and low.interval[0] > high.interval[1]:
                    low.monotone_violation = high.monotone_violation = True


def sweep(
    grid: Sequence[PipelineConfig],
    trials: int,
    parallelism: int = 1,
    instance: tuple[OrientedTree, Digraph] | None = None,
) -> list[CellResult]:
    """Run ``trials`` trials per config; cells whose instance is rejected are
    marked invalid.  Results are ordered by (cell, trial) whatever the
    completion order of the workers."""
    if not grid:
        raise ValueError("empty grid")
    cells: list[CellResult] = []
    tasks = []
    instances: dict[tuple, tuple[OrientedTree, Digraph]] = {}
    for index, cfg in enumerate(grid):
        cell = CellResult(index, cfg, [])
        cells.append(cell)
        try:
            if instance is not None:
                tree, base = instance
            else:
                key = (cfg.n, cfg.alpha, cfg.delta, cfg.seed, cfg.base_style, cfg.tree)
                if key not in instances:
                    instances[key] = build_instance(cfg)
                tree, base = instances[key]
            if tree.n != cfg.n or base.n != cfg.n:
                raise ValueError("instance size does not match config")
            if min_semidegree(base) < ceil_fraction(cfg.alpha * cfg.n):
                raise ValueError("base graph violates the minimum semidegree alpha*n")
        except ValueError as err:
            cell.valid = False
            cell.reason = str(err)
            continue
        tasks.extend((index, (cfg, tree, base, t)) for t in range(trials))

    if parallelism > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(_run_task, [task for _, task in tasks], chunksize=1))
    else:
        results = [_run_task(task) for _, task in tasks]
    for (index, _), record in zip(tasks, results):
        cells[index].records.append(record)
    for cell in cells:
        cell.records.sort(key=lambda r: r.trial_index)
    _flag_monotonicity(cells)
    return cells


def grid_from_json(data: dict[str, Any] | list[dict[str, Any]]) -> list[PipelineConfig]:
    """Either a list of configs, or ``{"base": {...}, "grid": {"c": [...], ...}}``
    expanded as a cartesian product in key order."""
    if isinstance(data, list):
        return [PipelineConfig.from_dict(d) for d in data]
    base = dict(data.get("base", {}))
    axes = list(data.get("grid", {}).items())
    configs = [base]
    for key, values in axes:
        configs = [dict(cfg, **{key: v}) for cfg in configs for v in values]
    return [PipelineConfig.from_dict(cfg) for cfg in configs]


def write_csv(rows: Iterable[dict[str, Any]], stream: TextIO) -> None:
    rows = list(rows)
    if not rows:
        return
    fieldnames = list(rows[0])
    for row in rows[1:]:
        fieldnames.extend(k for k in row if k not in fieldnames)
    writer = csv.DictWriter(stream, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
