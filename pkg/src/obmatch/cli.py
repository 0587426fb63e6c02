"""Command-line front end.

Subcommands: gen, run, ratio, audit, sweep, verify.  Data goes to
stdout or --out; diagnostics go to stderr.  Every command is
byte-deterministic given equal flags and inputs.  Exit codes: 0 ok,
1 acceptance failure (verify only), 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from pathlib import Path

from .audit import audit
from .engines import ClassMismatchError, RankAssignment, draw_ranks, run_algorithm
from .harness import estimate_ratio, sweep_mu
from .instance import (
    Instance,
    InstanceParseError,
    ProblemClass,
    gen_example_no_surpass,
    gen_example_three,
    gen_planted,
    gen_random,
    gen_upper_triangular,
    instance_to_dict,
    mu,
    read_instance,
)

ALGORITHM_CHOICES = ("ranking", "single_valued", "general", "greedy", "msvv")


def _instance_id(instance: Instance) -> str:
    blob = json.dumps(instance_to_dict(instance), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")


def _rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()))
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _load_ranks(instance: Instance, path: str) -> RankAssignment:
    """--ranks file: JSON array of per-bidder w values, in bidder-id order."""
    values = json.loads(Path(path).read_text())
    ids = sorted(b.id for b in instance.bidders)
    if not isinstance(values, list) or len(values) != len(ids):
        raise ValueError(
            f"ranks file must hold exactly {len(ids)} values, one per bidder"
        )
    return RankAssignment.from_ranks(dict(zip(ids, map(float, values))))


def _write_instance_json(instance: Instance, out: str | None) -> None:
    _emit(json.dumps(instance_to_dict(instance), indent=1), out)
    header = {"id": _instance_id(instance)}
    if instance.problem_class is ProblemClass.GENERAL:
        header["mu"] = str(mu(instance))
    print(json.dumps(header), file=sys.stderr if out is None else sys.stdout)


def cmd_gen(args) -> int:
    family = args.family
    if family == "upper_triangular":
        if args.n is None or args.n < 1:
            raise ValueError("upper_triangular needs --n >= 1")
        _write_instance_json(gen_upper_triangular(args.n), args.out)
        return 0
    if family == "example_three":
        if args.W is None or args.W < 1:
            raise ValueError("example_three needs --W >= 1")
        out_dir = Path(args.out) if args.out else Path(".")
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, inst in zip(("I1", "I2", "I3"), gen_example_three(args.W)):
            path = out_dir / f"{name}.json"
            path.write_text(json.dumps(instance_to_dict(inst), indent=1) + "\n")
            print(json.dumps({"file": str(path), "id": _instance_id(inst), "mu": str(mu(inst))}))
        return 0
    if family == "example_no_surpass":
        if args.alpha is None or args.k is None:
            raise ValueError("example_no_surpass needs --alpha and --k")
        _write_instance_json(gen_example_no_surpass(args.alpha, args.k), args.out)
        return 0
    # random / planted: class is keyed off which shape flag is present
    # (--mu -> general, --k -> single_valued, neither -> obm).
    if args.mu is not None:
        cls = ProblemClass.GENERAL
    elif args.k is not None:
        cls = ProblemClass.SINGLE_VALUED
    else:
        cls = ProblemClass.OBM
    n = args.n if args.n is not None else 20
    m = args.m if args.m is not None else max(2, n // 4)
    if family == "planted":
        inst = gen_planted(cls, n, m, args.mu if args.mu is not None else 1.0, seed=args.seed)
    else:
        density = args.density if args.density is not None else 0.4
        if cls is ProblemClass.OBM:
            inst = gen_random(cls, n, m, density, seed=args.seed)
        elif cls is ProblemClass.SINGLE_VALUED:
            inst = gen_random(cls, n, m, density, bid_range=(1, 5),
                              budget_policy=(1, args.k), seed=args.seed)
        else:
            inst = gen_random(cls, n, m, density, bid_range=(1, 5),
                              budget_policy=(3, 12), seed=args.seed)
    _write_instance_json(inst, args.out)
    return 0


def cmd_run(args) -> int:
    instance = read_instance(args.instance)
    ranks = None
    if args.algorithm in ("ranking", "single_valued", "general"):
        if args.ranks is not None:
            ranks = _load_ranks(instance, args.ranks)
        else:
            ranks = draw_ranks(instance, args.seed)
    outcome = run_algorithm(instance, args.algorithm, ranks, trace=args.trace)
    data = outcome.to_dict()
    data["seed"] = list(ranks.seed) if ranks is not None and ranks.seed else None
    if args.trace and outcome.trace is not None:
        data["trace"] = [
            {
                "query": s.query,
                "available": s.available,
                "offers": s.offers,
                "accepted": s.accepted,
            }
            for s in outcome.trace.steps
        ]
    _emit(json.dumps(data, indent=1), args.out)
    return 0


def cmd_ratio(args) -> int:
    instance = read_instance(args.instance)
    est = estimate_ratio(
        instance, args.algorithm, args.trials, args.seed, allow_bound=True
    )
    row = {"instance_id": _instance_id(instance), **est.to_dict()}
    if args.format == "csv":
        _emit(_rows_to_csv([row]), args.out)
    else:
        _emit(json.dumps(row, indent=1), args.out)
    return 0


def cmd_audit(args) -> int:
    instance = read_instance(args.instance)
    if args.ranks is not None:
        assignments = [_load_ranks(instance, args.ranks)]
    else:
        assignments = [
            draw_ranks(instance, [args.seed, t]) for t in range(args.trials)
        ]
    reports = [audit(instance, ranks) for ranks in assignments]
    if args.format == "csv":
        chunks = [reports[0].violations_csv()]
        for rep in reports[1:]:
            body = rep.violations_csv().splitlines(keepends=True)[1:]
            chunks.extend(body)
        _emit("".join(chunks), args.out)
    else:
        payload = {
            "instance_id": _instance_id(instance),
            "reports": [rep.to_dict() for rep in reports],
        }
        _emit(json.dumps(payload, indent=1), args.out)
    return 0


def cmd_sweep(args) -> int:
    targets = [float(x) for x in args.mu.split(",")] if args.mu else [0.2, 0.1, 0.05, 0.01]
    cells = sweep_mu(targets, m=args.m, trials=args.trials, seed=args.seed)
    rows = [c.to_dict() for c in cells]
    if args.format == "json":
        _emit(json.dumps(rows, indent=1), args.out)
    else:
        _emit(_rows_to_csv(rows), args.out)
    return 0


def cmd_verify(args) -> int:
    from .verify import run_all

    results = run_all(args.scale)
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="obmatch",
        description="Budget-oblivious online matching: generators, engines, auditor.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write an instance file")
    p.add_argument("--family", required=True,
                   choices=["upper_triangular", "example_three", "example_no_surpass",
                            "random", "planted"])
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--W", type=int)
    p.add_argument("--alpha", type=int)
    p.add_argument("--k", type=int,
                   help="single-valued capacity bound (selects the single-valued class for random/planted)")
    p.add_argument("--mu", type=float,
                   help="smallness target (selects the general class for random/planted)")
    p.add_argument("--density", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="file path (directory for example_three)")
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("run", help="one run of one algorithm")
    p.add_argument("instance")
    p.add_argument("algorithm", choices=ALGORITHM_CHOICES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ranks", help="JSON array of per-bidder w values in [0,1]")
    p.add_argument("--trace", action="store_true")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("ratio", help="Monte-Carlo competitive-ratio estimate")
    p.add_argument("instance")
    p.add_argument("algorithm", choices=ALGORITHM_CHOICES)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1,
                   help="worker cap; output is identical for any value")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_ratio)

    p = sub.add_parser("audit", help="removal-run audit of the lemma properties")
    p.add_argument("instance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1, help="number of audited rank draws")
    p.add_argument("--ranks", help="JSON array of per-bidder w values in [0,1]")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_audit)

    p = sub.add_parser("sweep", help="smallness-parameter sweep on planted instances")
    p.add_argument("--mu", help="comma-separated targets, default 0.2,0.1,0.05,0.01")
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--format", choices=["json", "csv"], default="csv")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--scale", choices=["smoke", "full"], default="smoke")
    p.set_defaults(fn=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (InstanceParseError, ClassMismatchError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
