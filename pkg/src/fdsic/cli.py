"""Command-line entry point: ``fdsic sweep|budget|single|config``."""

import argparse
import logging
import sys

import numpy as np

from . import config as config_mod
from .estimation import export_estimates
from .harness import format_powers, parse_scenarios, run_link_budget, run_single, run_sweep, scenario_from_flags
from .waveform import export_iq

log = logging.getLogger("fdsic")


def _u64(text):
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _scenario(text):
    if text not in ("a", "b", "c", "all"):
        raise argparse.ArgumentTypeError("scenario must be one of a, b, c, all")
    return text


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file (defaults apply to missing keys)")
    common.add_argument("--seed", type=_u64, help="master seed, overrides sweep.seed")
    common.add_argument("--out", help="output CSV path (stdout when omitted)")
    common.add_argument("--lenient", action="store_true", help="warn instead of failing on unknown config keys")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="fdsic", description="Full-duplex MIMO self-interference simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", parents=[common], help="SINR versus transmit power")
    sw.add_argument("--scenario", type=_scenario, default="all", help="a, b, c or all (default)")
    sw.add_argument("--realizations", type=_positive_int, help="realizations per point")
    sw.add_argument("--jobs", type=_positive_int, help="worker processes")
    sw.add_argument("--detail", help="also write per-realization SINR to this CSV")

    sub.add_parser("budget", parents=[common], help="analytic power levels versus transmit power")

    si = sub.add_parser("single", parents=[common], help="one realization with a per-stage power dump")
    si.add_argument("--scenario", type=_scenario, help="a, b, c or all; default follows the config flags")
    si.add_argument("--tx-dbm", type=float, help="transmit power (default: top of the sweep)")
    si.add_argument("--realization", type=int, default=0)
    si.add_argument("--realizations", type=_positive_int, default=1, help="run this many consecutive realizations")
    si.add_argument("--save-channel", help="write the drawn SI channel as JSON")
    si.add_argument("--save-iq", help="write the transmit frame as binary I/Q")
    si.add_argument("--save-estimates", help="write the fitted estimates as JSON")

    cf = sub.add_parser("config", parents=[common], help="print the effective configuration and its hash")
    cf.add_argument("--hash-only", action="store_true")
    return parser


def _load_config(args):
    cfg = config_mod.load(args.config, strict=not args.lenient) if args.config else config_mod.SimConfig()
    if args.seed is not None:
        cfg = cfg.replace(sweep__seed=args.seed)
    return cfg


def _write(text, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
        log.info("wrote %s", path)
    else:
        sys.stdout.write(text)


def cmd_sweep(args, cfg):
    res = run_sweep(cfg, args.scenario, realizations=args.realizations, n_jobs=args.jobs)
    _write(res.to_csv(), args.out)
    if args.detail:
        res.detail_csv(args.detail)
    if args.out:
        print(res.summary())
    return 0


def cmd_budget(args, cfg):
    report = run_link_budget(cfg)
    _write(report.to_csv(), args.out)
    return 0


def cmd_single(args, cfg):
    if args.scenario is None:
        scenarios = [scenario_from_flags(cfg.flags)]
    else:
        scenarios = parse_scenarios(args.scenario)
    tx = cfg.sweep.tx_max_dbm if args.tx_dbm is None else args.tx_dbm
    rows = ["scenario,tx_dbm,realization,sinr_db"]
    for sc in scenarios:
        for r in range(args.realization, args.realization + args.realizations):
            res = run_single(cfg, tx, sc, realization=r)
            print(format_powers(res), file=sys.stderr if not args.out else sys.stdout)
            rows.append(f"{sc.name},{tx!r},{r},{res.sinr_db!r}")
    if args.save_channel:
        res.channel.save(args.save_channel)
    if args.save_iq:
        export_iq(args.save_iq, res.frame)
    if args.save_estimates:
        lin = res.estimates.get("stage_a")
        nl = res.estimates.get("stage_b")
        export_estimates(args.save_estimates, lin.estimate_ if lin is not None else None,
                         getattr(nl, "coeffs_", None))
    _write("\n".join(rows) + "\n", args.out)
    return 0


def cmd_config(args, cfg):
    digest = config_mod.config_hash(cfg)
    if args.hash_only:
        print(digest)
    else:
        _write(f"# config hash {digest}\n" + config_mod.dumps(cfg), args.out)
    return 0


COMMANDS = {"sweep": cmd_sweep, "budget": cmd_budget, "single": cmd_single, "config": cmd_config}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    try:
        cfg = _load_config(args)
        return COMMANDS[args.command](args, cfg)
    except (config_mod.ConfigError, OSError, ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"fdsic {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
