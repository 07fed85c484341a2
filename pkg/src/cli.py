"""
WCT Lab command line
Entry point for the check, spectrum, polar, oracle, campaign and recognize commands.

Exit codes: 0 clean, 1 violation or disagreement found, 2 input error.
"""

import argparse
import asyncio
import logging
import sys
from typing import List, Optional

from src import __version__
from src.config import get_settings
from src.criteria import split_class_specs
from src.lab_interface import DEFAULT_CLASSES, WctLabInterface


def configure_logging(level: Optional[str] = None, log_file: Optional[str] = None) -> None:
    settings = get_settings()
    level = getattr(logging, (level or settings.log_level).upper(), logging.INFO)
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        filename=log_file or settings.log_file,
    )
    console = logging.StreamHandler(sys.stderr)
    console.setLevel(logging.WARNING)
    formatter = logging.Formatter('%(levelname)s: %(message)s')
    console.setFormatter(formatter)
    logging.getLogger('').addHandler(console)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='wctlab',
        description='Weighted conditional type operators on finite atomic spaces',
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    parser.add_argument('--log-level', help='log level for the log file (default from env)')
    parser.add_argument('--log-file', help='log file path (default from env)')
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--json', dest='output', metavar='PATH',
                        help='also write the report as JSON')
    commands = parser.add_subparsers(dest='command', required=True)

    check = commands.add_parser('check', parents=[common],
                                help='pointwise class criteria for a scenario')
    check.add_argument('scenario')
    check.add_argument('--classes', type=split_class_specs, metavar='SPECS',
                       help="comma-separated class specs "
                            f"(default: {','.join(DEFAULT_CLASSES)})")
    check.add_argument('--tol', type=float)
    check.add_argument('--form', choices=('operator', 'displayed'), default='operator')
    check.add_argument('--samples', type=int, help='oracle samples for Unknown verdicts')
    check.add_argument('--seed', type=int)

    spectrum = commands.add_parser('spectrum', parents=[common],
                                   help='spectra, Riesz idempotents and kernels')
    spectrum.add_argument('scenario')
    spectrum.add_argument('--n', type=int, default=1)
    spectrum.add_argument('--k', type=int, default=1)
    spectrum.add_argument('--points', type=int, default=64, help='contour quadrature points')

    polar = commands.add_parser('polar', parents=[common],
                                help='polar decomposition and Aluthge transform')
    polar.add_argument('scenario')

    oracle = commands.add_parser('oracle', parents=[common],
                                 help='brute-force search for a violating vector')
    oracle.add_argument('scenario')
    oracle.add_argument('--class', dest='class_spec', default='q*p', metavar='SPEC')
    oracle.add_argument('--samples', type=int)
    oracle.add_argument('--seed', type=int)
    oracle.add_argument('--workers', type=int)
    oracle.add_argument('--ascent-steps', type=int)
    oracle.add_argument('--tol', type=float)

    campaign = commands.add_parser('campaign', parents=[common],
                                   help='randomized criterion/oracle cross-check')
    campaign.add_argument('--count', type=int, default=100)
    campaign.add_argument('--seed', type=int, default=0)
    campaign.add_argument('--generators', type=lambda s: [g.strip() for g in s.split(',')],
                          help='comma-separated generator tags')
    campaign.add_argument('--classes', type=split_class_specs, metavar='SPECS',
                          help='comma-separated class specs (default: q*p)')
    campaign.add_argument('--max-atoms', type=int, default=8)
    campaign.add_argument('--max-blocks', type=int, default=4)
    campaign.add_argument('--samples', type=int)
    campaign.add_argument('--workers', type=int)

    recognize = commands.add_parser('recognize', parents=[common],
                                    help='is a matrix of the form E(w·)?')
    recognize.add_argument('matrix')
    recognize.add_argument('--tol', type=float)
    return parser


async def run(args: argparse.Namespace) -> int:
    interface = WctLabInterface()
    options = {k: v for k, v in vars(args).items()
               if k not in ('command', 'log_level', 'log_file') and v is not None}
    response = await interface.process_command(args.command, **options)

    if response['status'] == 'success':
        print("\n".join(response['response']))
    else:
        print(f"Error: {response['message']}", file=sys.stderr)
    return response['exit_code']


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 2
    configure_logging(args.log_level, args.log_file)
    try:
        return asyncio.run(run(args))
    except KeyboardInterrupt:
        print("\n\nExiting...")
        return 2
    except Exception as e:
        print(f"\nFatal error: {str(e)}", file=sys.stderr)
        logging.error(f"Fatal error: {str(e)}", exc_info=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
