"""Command line entry point: ``gwcut <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiments
from .cut import coupled_cut_trees, edge_cut_tree, vertex_cut_tree, mod_cut_tree
from .offspring import TEST_LAWS, OffspringDist, OffspringError
from .rng import substream
from .sampler import METHODS, SamplerConfig, SamplerError, sample_gw_n_leaves, sample_many
from .trees import dumps_lines, hat_transform


def _nu(text: str) -> OffspringDist:
    if text in TEST_LAWS:
        return TEST_LAWS[text]
    try:
        return OffspringDist.parse(text)
    except OffspringError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _write(path: str | None, text: str):
    if path in (None, "-"):
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


def _emit_report(rep: experiments.Report, out_dir: str | None, fmt: str, name: str) -> int:
    print(rep.to_text())
    if out_dir:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / f"{name}.json").write_text(rep.to_json())
        if fmt == "csv":
            lines = ["name,value,threshold,passed"]
            lines += [f'"{c.name}",{c.value!r},{c.threshold!r},{c.passed}' for c in rep.checks]
            (Path(out_dir) / f"{name}.csv").write_text("\n".join(lines) + "\n")
    return 0 if rep.passed else 1


def cmd_verify(a) -> int:
    laws = {"custom": a.nu} if a.nu is not None else dict(TEST_LAWS)
    cfg = experiments.VerifyConfig(laws=laws, instances=a.replicates, seed=a.seed)
    return _emit_report(experiments.run_verification(cfg), a.out_dir, a.format, "verify_report")


def cmd_sample(a) -> int:
    trees = sample_many(a.nu, a.n_leaves, a.replicates, a.seed, SamplerConfig(method=a.method), a.threads)
    _write(a.out, dumps_lines(trees))
    return 0


def cmd_cuttree(a) -> int:
    rng = substream(a.seed, 7, a.n_leaves)
    t = sample_gw_n_leaves(a.nu, a.n_leaves, rng)
    if a.kind == "coupled":
        c = coupled_cut_trees(t, rng)
        payload = {
            "tree": json.loads(t.to_json()),
            "vertex": json.loads(c.vertex.to_json()),
            "mod": json.loads(c.mod.to_json()),
            "edge": json.loads(c.edge.to_json()),
            "mod_edge_pairs": [[int(x), int(y)] for x, y in zip(c.mod_d.left, c.mod_d.right)],
            "distortion": c.distortions(),
        }
        text = json.dumps(payload, separators=(",", ":"))
    elif a.kind == "vertex":
        text = vertex_cut_tree(t, rng).to_json()
    elif a.kind == "mod":
        text = mod_cut_tree(t, rng).to_json()
    else:
        text = edge_cut_tree(hat_transform(t), rng).to_json()
    _write(a.out, text)
    return 0


def cmd_converge(a) -> int:
    cfg = experiments.ConvergenceConfig(
        nu=a.nu, n_values=tuple(a.n_leaves), replicates=a.replicates, seed=a.seed,
        n_seeds=a.seeds, threads=a.threads, out_dir=a.out_dir, fmt=a.format,
    )
    rep = experiments.run_convergence(cfg)
    print(rep.to_text())
    return 0 if rep.passed else 1


def cmd_fragment(a) -> int:
    rep = experiments.run_fragmentation(a.nu, a.n_leaves, a.replicates, a.seed, a.threads, a.mass)
    return _emit_report(rep, a.out_dir, a.format, "fragment_report")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gwcut", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, n_multi=False, n_default=None, reps=1000):
        sp.add_argument("--nu", type=_nu, default=None if sp.prog.endswith("verify") else TEST_LAWS["binary"],
                        help='offspring law "k:p,k:p,..." or one of: ' + ", ".join(TEST_LAWS))
        if n_multi:
            sp.add_argument("--n-leaves", type=int, nargs="+", default=n_default)
        elif n_default is not False:
            sp.add_argument("--n-leaves", type=int, required=n_default is None, default=n_default)
        sp.add_argument("--replicates", type=int, default=reps)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--out-dir", default=None)
        sp.add_argument("--format", choices=("csv", "json"), default="json")

    v = sub.add_parser("verify", help="run the exact verification suite")
    common(v, n_default=False, reps=10_000)
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("sample", help="sample conditioned trees as JSON lines")
    common(s)
    s.add_argument("--method", choices=METHODS, default="cyclic")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_sample)

    c = sub.add_parser("cuttree", help="sample one tree and one of its cut-trees")
    common(c)
    c.add_argument("--kind", choices=("vertex", "mod", "edge", "coupled"), required=True)
    c.add_argument("--out", default="-")
    c.set_defaults(func=cmd_cuttree)

    g = sub.add_parser("converge", help="two-sample tests of rescaled observables")
    common(g, n_multi=True, n_default=[1000], reps=2000)
    g.add_argument("--seeds", type=int, default=3, help="independent seeds for the majority rule")
    g.set_defaults(func=cmd_converge)

    f = sub.add_parser("fragment", help="Monte Carlo checks on the timed fragmentation")
    common(f, n_multi=True, n_default=[50, 200], reps=10_000)
    f.add_argument("--mass", choices=("edges", "leaves"), default="edges")
    f.set_defaults(func=cmd_fragment)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SamplerError, OffspringError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
