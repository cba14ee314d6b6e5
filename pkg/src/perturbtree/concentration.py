"""Good-star probabilities, the Azuma-Hoeffding tail, and Monte Carlo checks
of good-star concentration under exactly uniform injections.

A star is *good* for a triple (u, sign, w) when its centre lands in a
designated part of u's sign-neighbourhood and its out/in-leaves land in
designated parts of w's out/in-neighbourhoods; the three designated sets are
pairwise disjoint and of equal size, so a good star is absorbing.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .absorption import PLUS, SIGNS, StarPack, is_absorbing
from .digraph import Digraph, min_semidegree
from .embedding import Embedding, sample_uniform_injections
from .models import ceil_fraction, floor_fraction
from .seeding import SeedLike, as_generator
from .trees import OrientedTree

Number = float | Fraction


def falling_factorial(n: int, i: int) -> int:
    if i < 0:
        raise ValueError("falling factorial of negative length")
    if i > n:
        return 0
    return math.perm(n, i)


@dataclass(frozen=True)
class GoodStarParams:
    n: int
    alpha: float
    delta: int
    gamma: float

    @property
    def alpha_prime(self) -> float:
        return self.alpha / 3

    @property
    def n_cap(self) -> int:
        return ceil_fraction(min(self.gamma * self.n, self.alpha * self.n / (6 * (self.delta + 1))))

    @property
    def designated_size(self) -> int:
        """Size of each designated set, floor(alpha' n)."""
        return floor_fraction(self.alpha * self.n / 3)


@dataclass(frozen=True)
class ResidualFractions:
    """Unused fractions of N*(u), N+(w), N-(w) and of the whole host."""

    a_star: Number
    a_plus: Number
    a_minus: Number
    b: Number

    @classmethod
    def from_counts(cls, a_star: int, a_plus: int, a_minus: int, b: int, n: int) -> "ResidualFractions":
        return cls(Fraction(a_star, n), Fraction(a_plus, n), Fraction(a_minus, n), Fraction(b, n))


def _as_count(fraction: Number, n: int) -> int:
    value = fraction * n
    count = round(value)
    if abs(value - count) > 1e-6:
        raise ValueError(f"residual fraction {fraction} is not a multiple of 1/{n}")
    return int(count)


def conditional_good_probability(
    res: ResidualFractions, s_plus: int, s_minus: int, n: int, exact: bool = False
) -> Number:
    """P[star good] given unused set sizes; falling factorials are exact integers,
    followed by a single division (a Fraction when ``exact``)."""
    centre = _as_count(res.a_star, n)
    plus = _as_count(res.a_plus, n)
    minus = _as_count(res.a_minus, n)
    host = _as_count(res.b, n)
    s = s_plus + s_minus + 1
    if s > host:
        return Fraction(0) if exact else 0.0
    numerator = centre * falling_factorial(plus, s_plus) * falling_factorial(minus, s_minus)
    denominator = falling_factorial(host, s)
    return Fraction(numerator, denominator) if exact else numerator / denominator


def good_star_probability(p: GoodStarParams, s_plus: int, s_minus: int, exact: bool = False) -> Number:
    m = p.designated_size
    res = ResidualFractions.from_counts(m, m, m, p.n, p.n)
    return conditional_good_probability(res, s_plus, s_minus, p.n, exact=exact)


def expected_good_stars(p: GoodStarParams, profile: Sequence[tuple[int, int]]) -> float:
    """Sum of good-star probabilities; ``profile`` is a list of (|S+|, |S-|)."""
    return math.fsum(good_star_probability(p, sp, sm) for sp, sm in profile)


def good_count_variance(p: GoodStarParams, profile: Sequence[tuple[int, int]]) -> float:
    """Exact variance of the good-star count under a uniform injection."""
    n, m = p.n, p.designated_size
    shapes = Counter(profile)
    prob = {sh: good_star_probability(p, *sh, exact=True) for sh in shapes}
    var = Fraction(0)
    for sh, k in shapes.items():
        var += k * prob[sh] * (1 - prob[sh])
    for sh1, k1 in shapes.items():
        for sh2, k2 in shapes.items():
            pairs = k1 * (k1 - 1) if sh1 == sh2 else k1 * k2
            if not pairs:
                continue
            s = sh1[0] + sh1[1] + sh2[0] + sh2[1] + 2
            joint = Fraction(
                falling_factorial(m, 2)
                * falling_factorial(m, sh1[0] + sh2[0])
                * falling_factorial(m, sh1[1] + sh2[1]),
                falling_factorial(n, s),
            )
            var += pairs * (joint - prob[sh1] * prob[sh2])
    return float(var)


def azuma_tail(steps: int, diff_bound: float, eps: float) -> float:
    """``min(1, 2 exp(-eps^2 / (2 N L^2)))``."""
    if steps < 1 or diff_bound <= 0 or eps < 0:
        raise ValueError("need N >= 1, L > 0 and eps >= 0")
    return min(1.0, 2.0 * math.exp(-(eps**2) / (2.0 * steps * diff_bound**2)))


def designated_sets(graph: Digraph, u: int, sign: str, w: int, size: int) -> tuple[list[int], list[int], list[int]]:
    """Disjoint N*(u), N+(w), N-(w) of ``size`` each: smallest ids first, greedily."""
    first = graph.out_neighbors(u) if sign == PLUS else graph.in_neighbors(u)
    centre = list(first[:size])
    taken = set(centre)
    plus = [x for x in graph.out_neighbors(w) if x not in taken][:size]
    taken.update(plus)
    minus = [x for x in graph.in_neighbors(w) if x not in taken][:size]
    if min(len(centre), len(plus), len(minus)) < size:
        raise ValueError(f"neighbourhoods of ({u}, {sign}, {w}) too small for disjoint sets of size {size}")
    return centre, plus, minus


def sample_triples(
    n: int, seed: SeedLike, random_count: int = 64, adversarial: int = 8, full: bool = False
) -> list[tuple[int, str, int]]:
    """Random (u, sign, w) triples plus ``adversarial`` ones with u = w; all 2n^2 if ``full``."""
    if full:
        return [(u, s, w) for s in SIGNS for u in range(n) for w in range(n)]
    rng = as_generator(seed)
    triples = []
    for _ in range(random_count):
        u, w = rng.integers(n, size=2).tolist()
        triples.append((u, SIGNS[int(rng.integers(2))], w))
    for _ in range(adversarial):
        u = int(rng.integers(n))
        triples.append((u, SIGNS[int(rng.integers(2))], u))
    return triples


def monte_carlo_good_frequency(
    s_plus: int, s_minus: int, n: int, size: int, samples: int, seed: SeedLike
) -> float:
    """Fraction of uniform injections of one star into [n] that are good for
    designated sets {0..size-1}, {size..2size-1}, {2size..3size-1}."""
    s = s_plus + s_minus + 1
    rows = sample_uniform_injections(s, n, samples, seed)
    good = rows[:, 0] < size
    good &= ((rows[:, 1 : 1 + s_plus] >= size) & (rows[:, 1 : 1 + s_plus] < 2 * size)).all(axis=1)
    good &= ((rows[:, 1 + s_plus :] >= 2 * size) & (rows[:, 1 + s_plus :] < 3 * size)).all(axis=1)
    return float(good.mean())


def _ff_array(x: np.ndarray, i: int) -> np.ndarray:
    x = np.maximum(x, 0).astype(np.float64)
    out = np.ones_like(x)
    for j in range(i):
        out *= np.maximum(x - j, 0)
    return out


def _shape_prob(centre, plus, minus, host, shape) -> np.ndarray:
    sp, sm = shape
    den = _ff_array(host, sp + sm + 1)
    num = np.maximum(centre, 0) * _ff_array(plus, sp) * _ff_array(minus, sm)
    return np.divide(num, den, out=np.zeros_like(den), where=den > 0)


@dataclass
class TripleSummary:
    triple: tuple[int, str, int]
    mean: float
    std: float
    expected: float
    sigma: float
    z: float
    pr_below_half: float
    pr_deviation_half: float
    azuma_bound: float
    quantiles: tuple[float, float, float]
    max_step: float
    max_single_diff: float
    c4_hat: float
    crude_c4: float
    sandwich_violations: int

    @property
    def within_4_sigma(self) -> bool:
        return abs(self.mean - self.expected) <= 4 * self.sigma

    @property
    def azuma_holds(self) -> bool:
        return self.pr_below_half <= self.azuma_bound

    @property
    def c4_flag(self) -> bool:
        return self.c4_hat > self.crude_c4 + 1e-12


@dataclass
class ConcentrationReport:
    params: GoodStarParams
    stars_used: int
    trials: int
    triples: list[tuple[int, str, int]]
    counts: np.ndarray  # trials x triples
    expected: float
    variance: float
    summaries: list[TripleSummary]
    good_events: int = 0
    good_not_absorbing: int = 0
    extras: dict = field(default_factory=dict)

    @property
    def min_over_triples(self) -> np.ndarray:
        return self.counts.min(axis=1)

    def summary(self) -> dict:
        return {
            "n": self.params.n,
            "alpha": self.params.alpha,
            "delta": self.params.delta,
            "gamma": self.params.gamma,
            "N": self.stars_used,
            "designated_size": self.params.designated_size,
            "trials": self.trials,
            "triples": len(self.triples),
            "expected_good": self.expected,
            "variance_good": self.variance,
            "max_abs_z": max((abs(s.z) for s in self.summaries), default=0.0),
            "all_within_4_sigma": all(s.within_4_sigma for s in self.summaries),
            "azuma_holds_all": all(s.azuma_holds for s in self.summaries),
            "max_pr_below_half": max((s.pr_below_half for s in self.summaries), default=0.0),
            "min_azuma_bound": min((s.azuma_bound for s in self.summaries), default=1.0),
            "max_c4_hat": max((s.c4_hat for s in self.summaries), default=0.0),
            "c4_flags": sum(s.c4_flag for s in self.summaries),
            "sandwich_violations": sum(s.sandwich_violations for s in self.summaries),
            "fraction_trials_min_positive": float((self.min_over_triples > 0).mean()),
            "good_events": self.good_events,
            "good_not_absorbing": self.good_not_absorbing,
        }

    def csv_rows(self) -> Iterable[tuple[int, int, int]]:
        for t in range(self.counts.shape[0]):
            for j in range(self.counts.shape[1]):
                yield j, t, int(self.counts[t, j])


def run_concentration_experiment(
    base: Digraph,
    tree: OrientedTree,
    pack: StarPack,
    params: GoodStarParams,
    triples: Sequence[tuple[int, str, int]],
    trials: int,
    seed: SeedLike,
    check_absorbing: bool = True,
) -> ConcentrationReport:
    """Count good stars for each triple over ``trials`` uniform injections of
    ``tree`` into ``base`` and compare with the closed forms.

    The pack is cut to its first N stars.  The star-exposure martingale
    ``E[X | first k stars placed]`` is replayed exactly on every trial to
    measure its step sizes.
    """
    n = params.n
    if base.n != n or tree.n > n:
        raise ValueError("base must have n vertices and the tree at most n")
    if min_semidegree(base) < ceil_fraction(params.alpha * n):
        raise ValueError("base graph violates the minimum semidegree alpha*n")
    m = params.designated_size
    if m < params.delta + 1:
        raise ValueError(f"designated sets of size {m} cannot host a star with {params.delta + 1} vertices")
    stars = pack.stars[: params.n_cap]
    big = [s for s in stars if len(s.vertices) > params.delta + 1]
    if big:
        raise ValueError(f"star centred at {big[0].center} exceeds degree bound {params.delta}")
    N = len(stars)
    profile = [s.shape for s in stars]
    expected = expected_good_stars(params, profile)
    variance = good_count_variance(params, profile)

    rng = as_generator(seed)
    images = sample_uniform_injections(tree.n, n, trials, rng)
    centre_img = images[:, [s.center for s in stars]]
    plus_img = [images[:, list(s.s_plus)] for s in stars]
    minus_img = [images[:, list(s.s_minus)] for s in stars]
    all_img = [images[:, list(s.vertices)] for s in stars]

    shapes = sorted(set(profile))
    # stars with index > k of each shape, k = 0..N
    later = {sh: np.array([sum(1 for i in range(k, N) if profile[i] == sh) for k in range(N + 1)]) for sh in shapes}

    counts = np.zeros((trials, len(triples)), dtype=np.int64)
    summaries = []
    good_events = good_not_absorbing = 0
    for j, (u, sign, w) in enumerate(triples):
        cset, pset, mset = designated_sets(base, u, sign, w, m)
        in_c = np.zeros(n, dtype=bool)
        in_c[cset] = True
        in_p = np.zeros(n, dtype=bool)
        in_p[pset] = True
        in_m = np.zeros(n, dtype=bool)
        in_m[mset] = True

        good = np.zeros((trials, N), dtype=bool)
        # exposure: residual set sizes after the first k stars are placed
        res_c = np.full((trials, N + 1), m, dtype=np.int64)
        res_p = res_c.copy()
        res_m = res_c.copy()
        res_b = np.full((trials, N + 1), n, dtype=np.int64)
        for k in range(N):
            g = in_c[centre_img[:, k]]
            if plus_img[k].shape[1]:
                g &= in_p[plus_img[k]].all(axis=1)
            if minus_img[k].shape[1]:
                g &= in_m[minus_img[k]].all(axis=1)
            good[:, k] = g
            verts = all_img[k]
            res_c[:, k + 1] = res_c[:, k] - in_c[verts].sum(axis=1)
            res_p[:, k + 1] = res_p[:, k] - in_p[verts].sum(axis=1)
            res_m[:, k + 1] = res_m[:, k] - in_m[verts].sum(axis=1)
            res_b[:, k + 1] = res_b[:, k] - verts.shape[1]
        x = good.sum(axis=1)
        counts[:, j] = x

        if check_absorbing and good.any():
            for t, k in zip(*np.nonzero(good)):
                good_events += 1
                phi = Embedding(tree.n, n)
                phi.forward[:] = images[t]
                phi.inverse[images[t]] = np.arange(tree.n)
                if not is_absorbing(stars[k], phi, base, u, sign, w):
                    good_not_absorbing += 1

        # martingale replay
        realised = np.concatenate([np.zeros((trials, 1)), np.cumsum(good, axis=1)], axis=1)
        pending = np.zeros((trials, N + 1))
        max_single = 0.0
        crude = 0.0
        violations = 0
        for sh in shapes:
            f = _shape_prob(res_c, res_p, res_m, res_b, sh)  # f[:, k] = E[X_i | first k placed]
            pending += f * later[sh][None, :]
            if N:
                active = later[sh][1:] > 0  # some star of this shape still pending after step k
                diff = np.abs(f[:, 1:] - f[:, :-1])[:, active]
                if diff.size:
                    max_single = max(max_single, float(diff.max()))
                d = params.delta + 1
                lo = _shape_prob(res_c[:, :-1] - d, res_p[:, :-1] - d, res_m[:, :-1] - d, res_b[:, :-1], sh)
                hi = _shape_prob(res_c[:, :-1], res_p[:, :-1], res_m[:, :-1], res_b[:, :-1] - d, sh)
                prev = f[:, :-1]
                now = f[:, 1:]
                bad = ((now < lo - 1e-12) | (now > hi + 1e-12))[:, active]
                violations += int(bad.sum())
                span = np.maximum(hi - prev, prev - lo)[:, active]
                if span.size:
                    crude = max(crude, float(span.max()))
        martingale = realised + pending
        steps = np.abs(np.diff(martingale, axis=1)) if N else np.zeros((trials, 0))
        max_step = float(steps.max()) if steps.size else 0.0
        c4_hat = n * max_single
        diff_bound = 1.0 + c4_hat
        sigma = math.sqrt(variance / trials)
        mean = float(x.mean())
        summaries.append(
            TripleSummary(
                triple=(u, sign, w),
                mean=mean,
                std=float(x.std(ddof=1)) if trials > 1 else 0.0,
                expected=expected,
                sigma=sigma,
                z=(mean - expected) / sigma if sigma > 0 else 0.0,
                pr_below_half=float((x < expected / 2).mean()),
                pr_deviation_half=float((np.abs(x - expected) >= expected / 2).mean()),
                azuma_bound=azuma_tail(max(N, 1), diff_bound, expected / 2),
                quantiles=tuple(float(q) for q in np.quantile(x - expected, [0.05, 0.5, 0.95])),
                max_step=max_step,
                max_single_diff=max_single,
                c4_hat=c4_hat,
                crude_c4=n * crude,
                sandwich_violations=violations,
            )
        )

    return ConcentrationReport(
        params=params,
        stars_used=N,
        trials=trials,
        triples=list(triples),
        counts=counts,
        expected=expected,
        variance=variance,
        summaries=summaries,
        good_events=good_events,
        good_not_absorbing=good_not_absorbing,
    )
