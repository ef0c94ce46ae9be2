import argparse
import sys
from collections.abc import Sequence

from bergman import VERSION
from bergman import exceptions
from bergman import optmanager
from bergman.commands import COMMANDS
from bergman.commands import RunConfig
from bergman.log import BergmanLogHandler
from bergman.options import Options
from bergman.output import open_output
from bergman.output import write_json
from bergman.output import write_table
from bergman.verify import LEVELS
from bergman.verify import cmd_verify


EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_NOT_CONVERGED = 3

# Dedicated flags and the options they set.
FLAGS = {
    "weight": "weight.name",
    "n": "grid.n",
    "alphas": "grid.alphas",
    "b": "grid.b",
    "d": "grid.d",
    "y": "grid.y",
    "symbol": "grid.symbol",
    "route": "grid.route",
    "tol": "tolerances.quad",
    "out": "output.path",
    "format": "output.format",
    "log_level": "log.level",
}


def _common_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", metavar="PATH", help="TOML configuration file with [weight], [grid], [tolerances] and [output] tables")
    parser.add_argument(
        "--set",
        type=str,
        dest="setopt",
        default=[],
        action="append",
        metavar="option[=value]",
        help="""
        Set a configuration value. Booleans without a value are set to
        true; sequences take comma separated values or repeated
        invocations for the same option.
        """
    )
    parser.add_argument("--weight", help="weight profile: gamma, expcap or logplus")
    parser.add_argument("--n", help="dimension of H^n")
    parser.add_argument("--alphas", help="comma separated weight exponents")
    parser.add_argument("--b", help="comma separated base heights")
    parser.add_argument("--d", help="comma separated horizontal separations")
    parser.add_argument("--y", help="comma separated second heights (default: y = b)")
    parser.add_argument("--symbol", help="vertical symbol: one, exp, exp:c, inv1p or ratio")
    parser.add_argument("--route", help="kernel route: radial, holomorphic-reduction or closed-form")
    parser.add_argument("--tol", help="quadrature tolerance")
    parser.add_argument("--out", help="output file (default: standard output)")
    parser.add_argument("--format", help="csv or json")
    parser.add_argument("--log-level", dest="log_level", help="debug, info, warn or error")
    return parser


def make_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="bergman", usage="%(prog)s [--version] command [options]")
    parser.add_argument(
        "--version",
        action="store_true",
        help="show version number and exit"
    )
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.add_parser("kernel", parents=[common], help="R_α at every (α, point)")
    sub.add_parser("diag", parents=[common], help="diagonal R_α with its holomorphic expression and leading term")
    sub.add_parser("asym", parents=[common], help="diagonal against the leading asymptotic term, with fits")
    sub.add_parser("berezin", parents=[common], help="Berezin transform of a vertical symbol with expansion residuals")
    verify = sub.add_parser("verify", parents=[common], help="run the verification suite")
    verify.add_argument("--level", choices=LEVELS, default="quick", help="quick (gamma closed forms) or full")
    verify.add_argument("--only", action="append", default=[], metavar="PREFIX", help="run only checks whose id starts with PREFIX")
    return parser


def configure(options: Options, args: argparse.Namespace) -> None:
    """
    Apply defaults < config file < --set < dedicated flags.
    """
    if args.config:
        optmanager.load_path(options, args.config)
    options.set(*args.setopt)
    specs = [
        f"{option}={value}"
        for flag, option in FLAGS.items()
        if (value := getattr(args, flag, None)) is not None
    ]
    options.set(*specs)


def main(argv: Sequence[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)

    if args.version:
        print(VERSION)
        return EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    options = Options()
    handler = BergmanLogHandler()
    handler.install()
    options.subscribe(handler.configure, "log.level")
    handler.configure(options, {"log.level"})
    try:
        configure(options, args)
        cfg = RunConfig.from_options(options)
        if args.command == "verify":
            report = cmd_verify(args.level, args.only)
            with open_output(cfg.output_path) as out:
                write_json(report.to_dict(), out)
            if not report.passed:
                failed = ", ".join(c.id for c in report.failures)
                raise exceptions.VerificationError(f"Failed checks: {failed}")
            return EXIT_OK

        table = COMMANDS[args.command](cfg)
        write_table(table, cfg.output_format, cfg.output_path)
        if not table.converged:
            raise exceptions.ConvergenceError("Some quadratures did not reach the requested tolerance; the table was still written")
        return EXIT_OK
    except (exceptions.OptionError, exceptions.DomainError) as ex:
        print(f"{parser.prog}: {ex}", file=sys.stderr)
        return EXIT_USAGE
    except exceptions.VerificationError as ex:
        print(f"{parser.prog}: {ex}", file=sys.stderr)
        return EXIT_VERIFY_FAILED
    except exceptions.ConvergenceError as ex:
        print(f"{parser.prog}: {ex}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    finally:
        handler.remove()


if __name__ == "__main__":
    sys.exit(main())
