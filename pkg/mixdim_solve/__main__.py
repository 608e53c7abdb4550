# Copyright (C) 2026 - Today: mixdim-solve contributors
# License AGPL-3.0 or later (http://www.gnu.org/licenses/agpl.html).

import argparse
import sys

import argcomplete

from .config import _AVAILABLE_VERBS
from .exception import MixdimException
from .harness import Experiment, load_config
from .log import logger, setup_logger


def get_parser():

    main_parser = argparse.ArgumentParser(formatter_class=argparse.RawTextHelpFormatter)

    main_parser.add_argument(
        "verb",
        choices=_AVAILABLE_VERBS,
        help="mesh: build and export the fitted mesh\n"
        "solve: solve once, export the solution\n"
        "convergence: energy errors against a refined reference\n"
        "iterations: PCG iteration counts over (h, A_iface, B, H)\n"
        "diagnose: walk, corners, Poincare constant, spectral bounds",
    )

    main_parser.add_argument(
        "-g",
        "--geometry",
        dest="geometry",
        type=str,
        help="Segment file (x1 y1 x2 y2 per line), 'chords:COUNT',"
        " 'segments:COUNT[:MAX_LENGTH]' or 'none'.",
    )

    main_parser.add_argument("-s", "--seed", dest="seed", type=int)

    main_parser.add_argument(
        "--h", dest="h", type=float, help="Target mesh size of the base mesh."
    )

    main_parser.add_argument(
        "-l",
        "--levels",
        dest="levels",
        type=int,
        help="Number of mesh levels (base mesh and its refinements).",
    )

    main_parser.add_argument(
        "--extra",
        dest="extra",
        type=int,
        help="Refinements of the reference solution above the finest level.",
    )

    main_parser.add_argument(
        "--H",
        dest="H",
        type=str,
        help="Coarse mesh sizes of the preconditioner, comma separated.",
    )

    main_parser.add_argument(
        "--A-iface",
        dest="A_iface",
        type=str,
        help="Interface conductivities, 'const:V' or 'uniform:A,B',"
        " several separated by '|'.",
    )

    main_parser.add_argument(
        "--B", dest="B", type=str, help="Coupling coefficients, comma separated."
    )

    main_parser.add_argument(
        "--rtol",
        dest="rtol",
        type=float,
        help="Relative tolerance on the preconditioned residual.",
    )

    main_parser.add_argument(
        "--solver",
        dest="solver",
        choices=["direct", "pcg"],
        help="Solver of the 'solve' and 'convergence' verbs.",
    )

    main_parser.add_argument("-o", "--out", dest="out", type=str)

    main_parser.add_argument("-j", "--threads", dest="threads", type=int)

    main_parser.add_argument(
        "-c",
        "--config",
        dest="config",
        type=str,
        help="YAML file with experiment settings; flags take precedence.",
    )

    main_parser.add_argument(
        "-p",
        "--preset",
        dest="preset",
        type=str,
        help="Name of a packaged experiment, e.g. 'iterations_infinite'.",
    )

    main_parser.add_argument(
        "-u",
        "--unpreconditioned",
        action="store_const",
        const=True,
        default=None,
        help="Also count plain CG iterations in the iteration study.",
    )

    main_parser.add_argument(
        "-ll",
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        dest="log_level",
        default="INFO",
        type=str,
    )

    main_parser.add_argument(
        "-lp",
        "--log-path",
        dest="log_path",
        default=False,
        type=str,
    )

    return main_parser


def main(args=False):
    # Parse Arguments
    parser = get_parser()
    argcomplete.autocomplete(parser, always_complete_options=False)
    if args:
        args = parser.parse_args(args)
    else:
        args = parser.parse_args()

    # Set log level
    setup_logger(args.log_level, args.log_path)

    try:
        overrides = {
            key: getattr(args, key)
            for key in (
                "geometry", "seed", "h", "levels", "extra", "H", "A_iface", "B",
                "rtol", "solver", "out", "threads", "unpreconditioned",
            )
        }
        config = load_config(args.config, args.preset, overrides)

        # run the experiment
        Experiment(config).run(args.verb)

    except MixdimException as e:
        logger.error("%s: %s" % (type(e).__name__, e))
        sys.exit(1)
    except KeyboardInterrupt:
        pass


if __name__ == "__main__":
    main(sys.argv[1:])
