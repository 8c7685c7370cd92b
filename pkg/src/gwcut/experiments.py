"""Verification suites, convergence experiments and their reports."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import stats as sstats

from . import coding, crt, metric, offspring
from .cut import coupled_cut_trees, mb_leaf_depth, trace_from_clocks
from .cut import splitting
from .offspring import BINARY, TEST_LAWS, OffspringDist, norming
from .rng import map_replicates, substream
from .sampler import InfeasibleError, leaf_probability, sample_gw_n_leaves
from .trees import hat_transform

SCHEMA_VERSION = 1
LEVEL = 0.01


def ks_two_sample(xs, ys) -> tuple[float, float]:
    """Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size == 0 or ys.size == 0:
        raise ValueError("both samples must be nonempty")
    res = sstats.ks_2samp(xs, ys, method="asymp")
    return float(res.statistic), float(res.pvalue)


# --- reports ---------------------------------------------------------------


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    passed: bool
    anchor: str
    mandatory: bool = True
    detail: dict = field(default_factory=dict)
    seconds: float = field(default=0.0, compare=False)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        opt = "" if self.mandatory else " (monitored)"
        return f"{flag} {self.name}: value={self.value:.6g} threshold={self.threshold:.6g}{opt}  [{self.anchor}]"


@dataclass
class Report:
    kind: str
    config: dict
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.mandatory)

    def to_dict(self) -> dict:
        checks = []
        for c in self.checks:
            d = asdict(c)
            d.pop("seconds")  # timings would break byte-identical reports
            checks.append(_jsonable(d))
        return {"schema_version": SCHEMA_VERSION, "kind": self.kind, "config": _jsonable(self.config),
                "passed": self.passed, "checks": checks}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        lines = [f"{self.kind} report: {'PASS' if self.passed else 'FAIL'}"]
        lines += [c.line() for c in self.checks]
        return "\n".join(lines)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return None if math.isnan(x) else (str(x) if math.isinf(x) else x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def _timed(fn: Callable[[], Check]) -> Check:
    start = time.perf_counter()
    c = fn()
    c.seconds = time.perf_counter() - start
    return c


# --- exact checks ------------------------------------------------------------


def _feasible(nu: OffspringDist, n: int) -> bool:
    return leaf_probability(nu, n) > 0


def check_splitting_law(laws: Mapping[str, OffspringDist], n_max: int = 6,
                        formula: splitting.SplitFormula = splitting.split_probability) -> Check:
    worst_gap = 0.0
    worst_total = 0.0
    cases = []
    for name, nu in laws.items():
        for n in range(2, n_max + 1):
            if not _feasible(nu, n):
                continue
            law = splitting.first_cut_law_exact(nu, n, formula)
            worst_gap = max(worst_gap, law.max_gap)
            worst_total = max(worst_total, abs(law.formula_total - 1))
            cases.append(f"{name}:{n}")
    value = max(worst_gap, worst_total)
    return Check("splitting_law", value, 1e-12, bool(cases) and value <= 1e-12,
                 "q(k) = (k-1)/(k+1) nu_k (n+1)/(n-1) P(S_{k+1}=n+1) / (nu_0 P(S_1=n))",
                 detail={"max_gap": worst_gap, "max_total_error": worst_total, "cases": cases})


def check_cyclic_identities(laws: Mapping[str, OffspringDist], n_max: int = 40,
                            tail_eps: float = offspring.TAIL_EPS) -> Check:
    worst = 0.0  # largest excess over the allowed error
    gap_leaf = gap_vertex = 0.0
    for nu in laws.values():
        for n in range(1, n_max + 1):
            allowed = 1e-12 + n * tail_eps
            for j in range(1, n + 1):
                g1 = offspring.cyclic_identity_gap(nu, j, n, tail_eps)
                g2 = offspring.vertex_cyclic_identity_gap(nu, j, n)
                gap_leaf, gap_vertex = max(gap_leaf, g1), max(gap_vertex, g2)
                worst = max(worst, g1 - allowed, g2 - 1e-12)
    return Check("cyclic_identities", worst, 0.0, worst <= 0,
                 "P(S_j=n) = (j/n) P(W~_n=-j) and P(S^V_j=n) = (j/n) P(W_n=-j)",
                 detail={"max_leaf_gap": gap_leaf, "max_vertex_gap": gap_vertex, "n_max": n_max})


def _instances(laws: Mapping[str, OffspringDist], count: int, n_max: int, seed: int, key: int):
    """(law, tree) pairs with n uniform on the feasible values up to n_max."""
    names = list(laws)
    feasible = {name: [n for n in range(1, n_max + 1) if _feasible(laws[name], n)] for name in names}
    for r in range(count):
        rng = substream(seed, key, r)
        name = names[r % len(names)]
        n = int(rng.choice(feasible[name]))
        yield name, n, sample_gw_n_leaves(laws[name], n, rng), rng


def check_count_identities(laws, instances: int = 10_000, n_max: int = 50, seed: int = 0) -> Check:
    bad = []
    for name, n, t, rng in _instances(laws, instances, n_max, seed, 101):
        c = coupled_cut_trees(t, rng)
        t_hat = c.tree_hat
        ok = (len(t_hat) == 2 * n - 1 and len(t_hat) - 1 == 2 * n - 2 and c.mod.n_leaves == 2 * n - 1
              and (n == 1 or c.edge.n_leaves == 2 * n - 2))
        if not ok:
            bad.append((name, n))
    return Check("count_identities", len(bad), 0, not bad,
                 "hat tree has 2n-1 vertices and 2n-2 edges; 2n-1 and 2n-2 cut-tree leaves",
                 detail={"instances": instances, "violations": bad[:10]})


def check_coupling(laws, instances: int = 10_000, n_max: int = 50, seed: int = 0) -> Check:
    worst = {"tree_hat": 0.0, "vertex_mod": 0.0, "mod_edge": 0.0}
    for _name, _n, t, rng in _instances(laws, instances, n_max, seed, 102):
        for k, v in coupled_cut_trees(t, rng).distortions().items():
            worst[k] = max(worst[k], v)
    value = max(worst.values())
    return Check("coupling_distortion", value, 2.0, value <= 2.0,
                 "distortion <= 2, so pointed GH distance <= 1, for the three natural correspondences",
                 detail={"instances": instances, "max_distortion": worst})


def check_coding(laws, instances: int = 10_000, n_max: int = 50, seed: int = 0) -> Check:
    bad = 0
    for _name, _n, t, _rng in _instances(laws, instances, n_max, seed, 103):
        b = coding.encode(t)
        if coding.decode(b.lukasiewicz) != t:
            bad += 1
            continue
        t_hat = hat_transform(t)
        maps = coding.index_maps(t, t_hat)
        X, lam = b.lukasiewicz.values, b.leaf_count
        # psi by direct counting: every earlier vertex and the extra leaves placed right after it
        extra = [max(k - 2, 0) for k in t.degrees]
        direct = [j + sum(extra[:j]) for j in range(len(t))]
        if any(maps.phi[maps.psi[j]] != j for j in range(len(t))):
            bad += 1
        elif list(maps.psi) != direct or any(maps.psi[j] != X[j] + 2 * lam[j] for j in range(len(t))):
            bad += 1
    return Check("coding_identities", bad, 0, bad == 0,
                 "decode(encode(t)) = t, phi(psi(j)) = j, psi(j) = X_j + 2 Lambda_j",
                 detail={"instances": instances})


def check_local_limit(nu: OffspringDist = BINARY, ns: Sequence[int] = (100, 400, 1600), bound: float = 0.05) -> Check:
    gaps = [offspring.local_limit_gap(nu, n) for n in ns]
    decreasing = all(b < a for a, b in zip(gaps, gaps[1:]))
    return Check("local_limit", gaps[0], bound, gaps[0] < bound and decreasing,
                 "sup_k |a~_n P(W~_n=k) - p_1(k/a~_n)|, p_1(x) = exp(-x^2/4)/(2 sqrt(pi))",
                 detail={"n": list(ns), "gaps": gaps, "strictly_decreasing": decreasing})


def random_prokhorov_instance(rng: np.random.Generator):
    """Random metric space on 2-4 points (a random weighted tree) with two random measures."""
    m = int(rng.integers(2, 5))
    parents = [-1] + [int(rng.integers(0, v)) for v in range(1, m)]
    lengths = np.round(rng.uniform(0.05, 0.8, m), 2)
    D = metric.tree_distances(parents, lengths)
    mu = rng.dirichlet(np.ones(m))
    nu = rng.dirichlet(np.ones(m))
    return D, mu, nu


def check_prokhorov(instances: int = 200, seed: int = 0, tol: float = 1e-9) -> Check:
    worst = 0.0
    for r in range(instances):
        D, mu, nu = random_prokhorov_instance(substream(seed, 104, r))
        worst = max(worst, abs(metric.prokhorov(D, mu, nu) - metric.prokhorov_bruteforce(D, mu, nu)))
    return Check("prokhorov_oracle", worst, tol, worst <= tol,
                 "max-flow Prokhorov distance equals the subset-enumeration value",
                 detail={"instances": instances})


def check_mb_law(nu: OffspringDist = BINARY, n: int = 3,
                 formula: splitting.SplitFormula = splitting.split_probability) -> Check:
    gap = splitting.law_gap(splitting.cut_tree_shape_law(nu, n, modified=True), splitting.mb_shape_law(nu, n, formula))
    return Check("mb_law", gap, 1e-12, gap <= 1e-12,
                 "law of the whole modified cut-tree shape equals the Markov branching law",
                 detail={"n": n})


@dataclass(frozen=True)
class VerifyConfig:
    laws: Mapping[str, OffspringDist] = field(default_factory=lambda: dict(TEST_LAWS))
    instances: int = 10_000
    n_max_sampled: int = 50
    seed: int = 0
    prokhorov_instances: int = 200
    formula: splitting.SplitFormula = splitting.split_probability

    def describe(self) -> dict:
        return {"laws": {k: v.spec() for k, v in self.laws.items()}, "instances": self.instances,
                "n_max_sampled": self.n_max_sampled, "seed": self.seed,
                "prokhorov_instances": self.prokhorov_instances,
                "formula": getattr(self.formula, "__name__", "custom")}


def _guard(name: str, anchor: str, fn: Callable[[], Check]) -> Check:
    try:
        return _timed(fn)
    except (InfeasibleError, ValueError) as exc:
        return Check(name, math.nan, math.nan, False, anchor, detail={"error": str(exc)})


def run_verification(config: VerifyConfig = VerifyConfig()) -> Report:
    """Every exact check; infeasible inputs show up as failed checks."""
    c = config
    rep = Report("verification", c.describe())
    rep.checks = [
        _guard("splitting_law", "first-cut law", lambda: check_splitting_law(c.laws, 6, c.formula)),
        _guard("cyclic_identities", "cyclic lemma", lambda: check_cyclic_identities(c.laws)),
        _guard("count_identities", "counts", lambda: check_count_identities(c.laws, c.instances, c.n_max_sampled, c.seed)),
        _guard("coupling_distortion", "coupling", lambda: check_coupling(c.laws, c.instances, c.n_max_sampled, c.seed)),
        _guard("coding_identities", "coding", lambda: check_coding(c.laws, c.instances, c.n_max_sampled, c.seed)),
        _guard("local_limit", "local limit", lambda: check_local_limit()),
        _guard("prokhorov_oracle", "Prokhorov", lambda: check_prokhorov(c.prokhorov_instances, c.seed)),
        _guard("mb_law", "Markov branching", lambda: check_mb_law(BINARY, 3, c.formula)),
    ]
    return rep


# --- convergence experiment ------------------------------------------------

OBSERVABLES = ("tree", "hat_tree", "mod_cut", "edge_cut", "mb_tree", "line_breaking")


@dataclass(frozen=True)
class _ObservableJob:
    nu: OffspringDist
    n: int

    def __call__(self, rng: np.random.Generator, _i: int):
        nu, n = self.nu, self.n
        const = norming(nu, n)
        t = sample_gw_n_leaves(nu, n, rng)
        leaf = t.leaves[int(rng.integers(len(t.leaves)))]
        c = coupled_cut_trees(t, rng)
        t_hat = c.tree_hat
        hat_leaf = t_hat.leaves[int(rng.integers(len(t_hat.leaves)))]
        mod_leaf = c.mod.leaves[int(rng.integers(c.mod.n_leaves))]
        obs = {
            "tree": t.depths[leaf] / const.c_n,
            "hat_tree": t_hat.depths[hat_leaf] / const.c_n,
            "mod_cut": c.mod.depths[mod_leaf] / const.c_prime,
        }
        pair = None
        if n >= 2:
            d_leaf = c.edge.leaves[int(rng.integers(c.edge.n_leaves))]
            obs["edge_cut"] = c.edge.depths[d_leaf] / const.c_prime
            # rates k_v / (2 a~) on the hat tree are a~ times slower than the shared clocks
            hat_clocks = np.full(len(t_hat), np.inf)
            hat_clocks[[i for i, o in enumerate(t_hat.origin) if o >= 0]] = c.clocks * const.a_tilde
            trace = trace_from_clocks(t_hat, hat_clocks)
            i, j = (int(x) for x in rng.choice(np.arange(1, len(t_hat)), size=2, replace=False))
            dh = t_hat.depths
            lca = _lca_depth(t_hat, i, j)
            pair = {
                "i": i, "j": j,
                "tree_distance": (dh[i] + dh[j] - 2 * lca) / const.c_n,
                "cut_distance": trace.delta(i, j) / const.c_prime,
                "scaled_cut_distance": const.a_tilde / (n - 1) * trace.delta(i, j),
                "delta_prime": trace.delta_prime(i, j),
            }
        else:
            obs["edge_cut"] = 0.0
        obs["mb_tree"] = mb_leaf_depth(nu, n, rng) / const.c_prime
        obs["line_breaking"] = float(crt.line_break_sample(1, rng).dist[0, 1])
        return obs, pair


def _lca_depth(t, i: int, j: int) -> int:
    anc = set()
    x = i
    while x >= 0:
        anc.add(x)
        x = t.parents[x]
    x = j
    while x not in anc:
        x = t.parents[x]
    return t.depths[x]


@dataclass(frozen=True)
class ConvergenceConfig:
    nu: OffspringDist = BINARY
    n_values: tuple[int, ...] = (1000,)
    replicates: int = 2000
    seed: int = 0
    n_seeds: int = 3
    threads: int = 1
    out_dir: str | None = None
    fmt: str = "csv"
    level: float = LEVEL
    mean_tolerance: float = 0.10

    def describe(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k not in ("nu", "threads", "out_dir")}
        d["nu"] = self.nu.spec()
        return d


def convergence_samples(nu: OffspringDist, n: int, replicates: int, seed: int, seed_index: int = 0,
                        threads: int = 1):
    """Per replicate: the six observables and, for n >= 2, one pair of edge distances."""
    res = map_replicates(_ObservableJob(nu, n), replicates, seed, key=(n, 31, seed_index), threads=threads)
    obs = {k: np.array([r[0][k] for r in res]) for k in OBSERVABLES}
    pairs = [r[1] for r in res if r[1] is not None]
    return obs, pairs


def _write_samples(out: Path, n: int, s: int, obs, pairs, fmt: str):
    out.mkdir(parents=True, exist_ok=True)
    stem = f"n{n}_seed{s}"
    if fmt == "json":
        (out / f"observables_{stem}.json").write_text(json.dumps({k: v.tolist() for k, v in obs.items()}))
        (out / f"gp_pairs_{stem}.json").write_text(json.dumps(pairs))
        return
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["replicate", *OBSERVABLES])
    for r in range(len(obs[OBSERVABLES[0]])):
        w.writerow([r, *(repr(float(obs[k][r])) for k in OBSERVABLES)])
    (out / f"observables_{stem}.csv").write_text(buf.getvalue())
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = ["i", "j", "tree_distance", "cut_distance", "scaled_cut_distance", "delta_prime"]
    w.writerow(cols)
    for p in pairs:
        w.writerow([p[c] for c in cols])
    (out / f"gp_pairs_{stem}.csv").write_text(buf.getvalue())


def run_convergence(config: ConvergenceConfig = ConvergenceConfig()) -> Report:
    """Pairwise two-sample KS tests between the six rescaled observables.

    A pair passes when its p-value exceeds the level for a majority of the
    seeds; the scaling check compares the mean rescaled leaf height of the tree
    with the line-breaking mean over all seeds.
    """
    c = config
    if c.nu.variance <= 0:
        raise ValueError("convergence runs need a finite positive variance")
    rep = Report("convergence", c.describe())
    for n in c.n_values:
        if not _feasible(c.nu, n):
            rep.checks.append(Check(f"n={n}: feasible", 0.0, 1.0, False, "P(lambda = n) > 0"))
            continue
        pvals: dict[tuple[str, str], list[float]] = {p: [] for p in itertools.combinations(OBSERVABLES, 2)}
        tree_obs, oracle_obs = [], []
        for s in range(c.n_seeds):
            obs, pairs = convergence_samples(c.nu, n, c.replicates, c.seed, s, c.threads)
            if c.out_dir:
                _write_samples(Path(c.out_dir), n, s, obs, pairs, c.fmt)
            tree_obs.append(obs["tree"])
            oracle_obs.append(obs["line_breaking"])
            for a, b in pvals:
                pvals[(a, b)].append(ks_two_sample(obs[a], obs[b])[1] if n > 1 or a == b else 1.0)
        for (a, b), ps in pvals.items():
            if n == 1:
                continue
            wins = sum(p > c.level for p in ps)
            rep.checks.append(Check(
                f"n={n}: KS {a} vs {b}", float(np.median(ps)), c.level, wins * 2 > len(ps),
                "rescaled leaf heights share the Brownian CRT limit",
                detail={"p_values": ps, "seeds_passing": wins}))
        tree_mean = float(np.concatenate(tree_obs).mean())
        oracle_mean = float(np.concatenate(oracle_obs).mean())
        if n == 1:
            rep.checks.append(Check("n=1: degenerate", tree_mean, 0.0, tree_mean == 0.0, "a one-leaf tree is a point"))
            continue
        rel = abs(tree_mean / oracle_mean - 1)
        rep.checks.append(Check(
            f"n={n}: mean height vs line-breaking", rel, c.mean_tolerance, rel <= c.mean_tolerance,
            "E[height of a uniform leaf] / c_n -> sqrt(pi/2)",
            detail={"tree_mean": tree_mean, "oracle_mean": oracle_mean, "sqrt_pi_over_2": crt.RAYLEIGH_MEAN}))
    if c.out_dir:
        Path(c.out_dir).mkdir(parents=True, exist_ok=True)
        (Path(c.out_dir) / "report.json").write_text(rep.to_json())
    return rep


# --- fragmentation and generation-profile experiments ------------------------


def run_fragmentation(nu: OffspringDist, n_values: Sequence[int], replicates: int, seed: int,
                      threads: int = 1, mass: str = "edges") -> Report:
    from .cut import fragmentation_inequality_mc

    rep = Report("fragmentation", {"nu": nu.spec(), "n_values": list(n_values), "replicates": replicates,
                                   "seed": seed, "mass": mass})
    for n in n_values:
        r = fragmentation_inequality_mc(nu, n, replicates, seed, threads, mass)
        for label, chk in (("pair", r.pair), ("root", r.root_pair)):
            rep.checks.append(Check(
                f"n={n}: distance inequality ({label})", chk.lhs - chk.rhs, 3 * chk.se, chk.passed,
                "E|(a~/(n-1)) delta - delta'|^2 <= (a~/(n-1)) E[delta'(0,i) + delta'(0,j)]",
                detail={"lhs": chk.lhs, "rhs": chk.rhs, "se": chk.se}))
        rep.checks.append(Check(
            f"n={n}: tail integrals nonincreasing", r.tails[-1], r.tails[0], r.tails_nonincreasing,
            "E[int_{2^l}^inf mu dt], l = 0..6", detail={"tails": list(r.tails), "se": list(r.tails_se)}))
        rep.checks.append(Check(
            f"n={n}: mean modified root distance", r.mean_delta_prime, math.inf, True,
            "E[delta'(0, xi)] stays bounded in n", mandatory=False,
            detail={"se": r.mean_delta_prime_se, "time_scale_ratio_k_vs_k_minus_1": r.time_scale_ratio}))
    return rep
