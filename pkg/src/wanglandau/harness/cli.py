"""Command-line entry point: ``wanglandau {run,replicate,oracle} CONFIG``.

Exit status is 0 on success, 1 for configuration/validation errors and 2 for
errors raised while running.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import ConfigError, load_config
from .runner import compute_oracle, run_replicates, run_single

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def _parser():
    p = argparse.ArgumentParser(prog="wanglandau", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in [("run", "run a single chain and write its trace"),
                        ("replicate", "run an ensemble of independent chains"),
                        ("oracle", "write the exact oracle file for the model")]:
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("config", help="experiment JSON file")
        sp.add_argument("--seed", type=int, help="override master_seed")
        sp.add_argument("--steps", type=int, help="override n_steps")
        sp.add_argument("--out", help="override the output directory")
        if name == "replicate":
            sp.add_argument("--oracle", help="oracle JSON to compare the covariances against")
            sp.add_argument("--workers", type=int, help="concurrent replicate workers")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config).with_overrides(
            master_seed=args.seed, n_steps=args.steps, outputs=args.out,
            workers=getattr(args, "workers", None))
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        if args.command == "run":
            summary, _ = run_single(cfg)
            print(json.dumps(summary.to_json(), sort_keys=True))
        elif args.command == "replicate":
            doc = run_replicates(cfg, oracle=args.oracle)
            keys = ("replicates", "n_steps", "mean_theta", "comparison")
            print(json.dumps({k: doc[k] for k in keys if k in doc}, sort_keys=True))
        else:
            if not cfg_is_discrete(cfg):
                print("note: U_star and rho are unsupported on the torus; writing theta_star only",
                      file=sys.stderr)
            doc = compute_oracle(cfg)
            print(json.dumps(doc, sort_keys=True))
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cfg_is_discrete(cfg) -> bool:
    from .config import build_components
    return build_components(cfg).model.space.is_discrete


if __name__ == "__main__":
    sys.exit(main())
