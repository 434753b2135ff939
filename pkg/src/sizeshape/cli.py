"""Command-line entry point: ``sizeshape {simulate,fit,summarize,distance,replicate-table1}``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical error.  The
seed falls back to the ``SNS_SEED`` environment variable, then to 0.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import format_table1, summarize
from .exceptions import DataFormatError, DegenerateConfigurationError, DegenerateConstraintError, NumericalError
from .geometry import decompose, helmertize, ss_distance
from .io import (
    read_chain,
    read_configurations,
    read_matrix,
    read_priors,
    read_truth,
    sha256,
    state_to_dict,
    write_chain,
    write_configurations,
    write_json,
)
from .model import Dataset, Priors
from .sampler import SamplerConfig, gibbs_run, make_rng
from .study import median_table, replicate_table1, table_rows
from .synthetic import default_scenario, generate, raw_configurations

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4


class UsageError(Exception):
    pass


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("SNS_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"SNS_SEED must be an integer, got {env!r}") from None


def _manifest(subcommand: str, config: dict, seed: int, t0: float, inputs=(), outputs=()) -> dict:
    return {
        "subcommand": subcommand,
        "config": config,
        "seed": seed,
        "version": __version__,
        "wall_time_s": round(time.perf_counter() - t0, 3),
        "inputs": {str(p): sha256(p) for p in inputs},
        "outputs": {Path(p).name: sha256(p) for p in outputs},
    }


def cmd_simulate(args) -> int:
    t0 = time.perf_counter()
    seed = _seed(args)
    spec = default_scenario(args.p, args.n, args.kappa, seed=seed)
    data, truth = generate(spec, keep_pre_forms=args.raw)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataset_path, truth_path = out / "dataset.csv", out / "truth.json"
    if args.raw:
        coords = raw_configurations(truth.pre_forms, make_rng(seed, 1))
    else:
        coords = data.y
    write_configurations(dataset_path, coords)
    write_json(truth_path, {
        "scenario": {"p": spec.p, "n": spec.n, "kappa": spec.kappa, "k": spec.k, "d": spec.d, "seed": seed},
        "raw": state_to_dict(truth.raw),
        "identified": state_to_dict(truth.identified),
        "orientations": truth.orientations.tolist(),
    })
    config = {"p": args.p, "n": args.n, "kappa": args.kappa, "raw": args.raw}
    write_json(out / "manifest.json",
               _manifest("simulate", config, seed, t0, outputs=[dataset_path, truth_path]))
    print(f"wrote {dataset_path} and {truth_path}")
    return 0


def load_dataset(path, raw: bool) -> Dataset:
    """Read configurations, remove location (if ``raw``) and reduce to size-and-shape."""
    coords, z, ids = read_configurations(path)
    ys = []
    for obj, x in zip(ids, coords):
        try:
            pre = helmertize(x) if raw else x
            ys.append(decompose(pre)[0].y)
        except DegenerateConfigurationError as exc:
            raise DegenerateConfigurationError(f"object {obj}: {exc}") from None
        except ValueError as exc:
            raise DataFormatError(f"object {obj}: {exc}") from None
    y = np.stack(ys)
    return Dataset(y, np.ones((len(y), 1)) if z is None else z)


def cmd_fit(args) -> int:
    t0 = time.perf_counter()
    if args.priors is None and not args.default_priors:
        raise UsageError("give --priors FILE or --default-priors")
    seed = _seed(args)
    data = load_dataset(args.data, args.raw)
    if args.priors is not None:
        priors = read_priors(args.priors, data.k, data.p, data.d)
    else:
        priors = Priors.default(data.k, data.p, data.d)
    try:
        priors.check_dataset(data)
    except ValueError as exc:
        raise DataFormatError(f"config error: {exc}") from None
    config = SamplerConfig(
        iterations=args.iterations, burn_in=args.burn_in, seed=seed, thin=args.thin,
        euler_step=args.euler_step, store_rotations=False,
    )
    chain = gibbs_run(data, priors, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    chain_path = out / "chain.csv"
    write_chain(chain_path, chain)
    cfg = {
        "iterations": config.iterations, "burn_in": config.burn_in, "thin": config.thin,
        "euler_step": config.euler_step, "euler_chart": config.euler_chart,
        "scale_euler_step": config.scale_euler_step, "rotation_steps": config.rotation_steps,
        "priors": "default" if args.priors is None else str(args.priors), "raw": args.raw,
        "n": data.n, "k": data.k, "p": data.p, "d": data.d,
    }
    manifest = _manifest("fit", cfg, seed, t0, inputs=[args.data], outputs=[chain_path])
    manifest["acceptance_rate"] = chain.acceptance_rate
    manifest["n_draws"] = len(chain)
    write_json(out / "fit_manifest.json", manifest)
    rate = "" if chain.acceptance_rate is None else f", rotation acceptance {chain.acceptance_rate:.3f}"
    print(f"wrote {len(chain)} draws to {chain_path}{rate}")
    return 0


def cmd_summarize(args) -> int:
    chain = read_chain(args.chain)
    truth = read_truth(args.truth) if args.truth else None
    summary = summarize(chain, truth)
    doc = summary.to_dict()
    if args.out:
        write_json(args.out, doc)
    else:
        print(json.dumps(doc, indent=2, sort_keys=True))
    if truth is not None:
        scenario = json.loads(Path(args.truth).read_text()).get("scenario", {})
        p = chain.beta.shape[1]
        row = (scenario.get("n", len(chain)), scenario.get("kappa", ""),
               summary.rho if p == 2 else None, summary.rho if p == 3 else None)
        print(format_table1([row]), file=sys.stderr if not args.out else sys.stdout)
    return 0


def cmd_distance(args) -> int:
    a, b = read_matrix(args.a), read_matrix(args.b)
    if a.shape != b.shape:
        raise DataFormatError(f"shape mismatch: {a.shape} vs {b.shape}")
    print(repr(ss_distance(a, b)))
    return 0


def cmd_replicate(args) -> int:
    t0 = time.perf_counter()
    seed = _seed(args)
    results = replicate_table1(args.replicates, seed, args.iterations, args.burn_in, args.jobs)
    medians = median_table(results)
    rows = table_rows(medians)
    print(format_table1(rows))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "table1.json", {
            "replicates": [r.__dict__ for r in results],
            "median": [{"p": p, "kappa": k, "n": n, "rho": v} for (p, k, n), v in medians.items()],
        })
        cfg = {"replicates": args.replicates, "iterations": args.iterations, "burn_in": args.burn_in}
        write_json(out / "manifest.json",
                   _manifest("replicate-table1", cfg, seed, t0, outputs=[out / "table1.json"]))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sizeshape", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate a dataset from the default scenario")
    s.add_argument("--p", type=int, choices=(2, 3), required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--kappa", type=float, required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", default="out")
    s.add_argument("--raw", action="store_true", help="write (k+1)-landmark configurations")
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("fit", help="run the sampler on a configuration CSV")
    f.add_argument("data")
    f.add_argument("--priors")
    f.add_argument("--default-priors", action="store_true")
    f.add_argument("--iterations", type=int, default=5000)
    f.add_argument("--burn-in", type=int, default=3000)
    f.add_argument("--thin", type=int, default=1)
    f.add_argument("--euler-step", type=float, default=0.5)
    f.add_argument("--seed", type=int)
    f.add_argument("--raw", action="store_true", help="input rows are (k+1)-landmark configurations")
    f.add_argument("--out", default="out")
    f.set_defaults(func=cmd_fit)

    m = sub.add_parser("summarize", help="posterior summary of a chain CSV")
    m.add_argument("chain")
    m.add_argument("--truth")
    m.add_argument("--out")
    m.set_defaults(func=cmd_summarize)

    d = sub.add_parser("distance", help="size-and-shape distance between two k x p matrices")
    d.add_argument("a")
    d.add_argument("b")
    d.set_defaults(func=cmd_distance)

    r = sub.add_parser("replicate-table1", help="run the full (p, kappa, n) simulation grid")
    r.add_argument("--replicates", type=int, default=5)
    r.add_argument("--iterations", type=int, default=5000)
    r.add_argument("--burn-in", type=int, default=3000)
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("--seed", type=int)
    r.add_argument("--out")
    r.set_defaults(func=cmd_replicate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"sizeshape: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, DegenerateConstraintError) as exc:
        print(f"sizeshape: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataFormatError, DegenerateConfigurationError, OSError) as exc:
        print(f"sizeshape: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"sizeshape: invalid argument: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
