import os
import sys
import logging
import argparse
from dotenv import load_dotenv
from lib.config import PRESETS, AXIS_NAMES, FORMATS, OBSERVABLE_NAMES, parse_config
from lib.errors import ConfigError, DiscordSimError
from lib.output_manager import OutputManager
from lib.scenario_manager import ScenarioManager
from lib.logger import setup_logger

# Load environment variables from .env file
load_dotenv()

# Initialize logger configuration
setup_logger()

DISCORD_WORKERS = os.getenv("DISCORD_WORKERS")

COMMAND_MODES = {"evolve": "evolve", "steady": "steady", "sweep": "sweep2d", "preset": "figure-preset"}


def _parse_axis(text: str) -> dict:
    """name:start:stop:count"""
    parts = text.split(":")
    if len(parts) != 4:
        raise ConfigError([f"--axis: expected name:start:stop:count, got {text!r}"])
    name, start, stop, count = parts
    try:
        return {"name": name, "start": float(start), "stop": float(stop), "count": int(count)}
    except ValueError:
        raise ConfigError([f"--axis: non-numeric bounds or count in {text!r}"]) from None


class ScenarioArgumentParser(argparse.ArgumentParser):
    """Reports bad flags as configuration errors instead of exiting"""

    def error(self, message):
        raise ConfigError([f"{self.prog}: {message}"])


def build_parser() -> argparse.ArgumentParser:
    common = ScenarioArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON scenario document; flags override it")
    group = common.add_argument_group("model")
    group.add_argument("--g", type=float, dest="g")
    group.add_argument("--gamma", type=float)
    group.add_argument("--kappa", type=float)
    group.add_argument("--n-T", type=float, dest="n_T")
    group.add_argument("--m-T", type=float, dest="m_T")
    group.add_argument("--cutoff", type=int)
    group = common.add_argument_group("grid")
    group.add_argument("--axis", action="append", metavar="NAME:START:STOP:COUNT",
                       help=f"sweep axis, NAME one of {', '.join(AXIS_NAMES)}")
    group.add_argument("--t-max", type=float, dest="t_max")
    group.add_argument("--dt", type=float)
    group.add_argument("--report-every", type=float, dest="report_every")
    group = common.add_argument_group("output")
    group.add_argument("--output", help="output file (stdout when omitted)")
    group.add_argument("--format", choices=FORMATS)
    group.add_argument("--dump-states", action="store_true", default=None)
    common.add_argument("--workers", type=int)

    parser = ScenarioArgumentParser(description="Discord and concurrence of two atoms in a noisy cavity")
    subparsers = parser.add_subparsers(dest="command", required=True)
    subparsers.add_parser("evolve", parents=[common], help="time series from |g g 0>")
    subparsers.add_parser("steady", parents=[common], help="steady states over at most one axis")
    subparsers.add_parser("sweep", parents=[common], help="steady states over two axes")
    preset = subparsers.add_parser("preset", parents=[common], help="figure regime presets")
    preset.add_argument("name", choices=sorted(PRESETS))
    audit = subparsers.add_parser("audit-cutoff", parents=[common], help="smallest converged Fock cutoff")
    audit.add_argument("--observable", choices=OBSERVABLE_NAMES)
    audit.add_argument("--tol", type=float)
    settling = subparsers.add_parser("settling-report", parents=[common], help="discord settling time in seconds")
    settling.add_argument("--physical-g", type=float, dest="physical_g", help="coupling in rad/s")
    return parser


def overrides_from_args(args) -> dict:
    """Nested config fragment holding only the flags that were given"""
    def pick(*names):
        return {name: getattr(args, name) for name in names if getattr(args, name, None) is not None}

    overrides = {
        "params": pick("g", "gamma", "kappa", "n_T", "m_T", "cutoff"),
        "time": pick("t_max", "dt", "report_every"),
        "output": {
            **({"path": args.output} if args.output else {}),
            **({"format": args.format} if args.format else {}),
            **({"dump_states": True} if args.dump_states else {}),
        },
    }
    if args.command in COMMAND_MODES:
        overrides["mode"] = COMMAND_MODES[args.command]
    if args.command == "preset":
        overrides["preset"] = args.name
    if args.axis:
        overrides["axes"] = [_parse_axis(text) for text in args.axis]
    workers = args.workers if args.workers is not None else DISCORD_WORKERS
    if workers is not None:
        try:
            overrides["workers"] = int(workers)
        except ValueError:
            raise ConfigError([f"workers: expected an integer, got {workers!r}"]) from None
    if getattr(args, "physical_g", None) is not None:
        overrides["physical_g"] = args.physical_g
    audit = {k: v for k, v in (("observable", getattr(args, "observable", None)),
                               ("tol", getattr(args, "tol", None))) if v is not None}
    if audit:
        overrides["audit"] = audit
    return {k: v for k, v in overrides.items() if v != {}}


def load_config(args):
    text = ""
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as f:
                text = f.read()
        except OSError as e:
            raise ConfigError([f"--config: cannot read {args.config}: {e.strerror}"]) from None
    return parse_config(text, overrides_from_args(args))


def main(argv=None) -> int:
    logger = logging.getLogger(__name__)

    try:
        args = build_parser().parse_args(argv)
        logger.info(f"Starting discord simulator: {args.command}")
        config = load_config(args)
        manager = ScenarioManager(config)

        if args.command == "audit-cutoff":
            cutoff = manager.audit_cutoff()
            print(f"{config.audit_observable} converged at cutoff {cutoff}")
        elif args.command == "settling-report":
            report = manager.settling_report()
            print(f"settling time: {report.seconds:.6e} s ({report.time:.6g}/g, plateau {report.plateau:.6e})")
        else:
            result = manager.run_scenario()
            OutputManager(config.output_format).write(result, config.output_path)

        logger.info("Discord simulator completed successfully")
        return 0

    except ConfigError as e:
        for error in e.errors:
            print(f"config error: {error}", file=sys.stderr)
        logger.error(f"Invalid configuration ({len(e.errors)} problem(s))")
        return e.exit_code
    except DiscordSimError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        logger.error(f"Discord simulator failed: {e}")
        return e.exit_code
    except Exception as e:
        logger.error(f"Discord simulator failed: {e}", exc_info=True)
        # Re-raise the exception to ensure proper exit code
        raise


if __name__ == "__main__":
    sys.exit(main())
