"""BEE - Main module

This module is the command-line front door of the pipeline:

    python src/main.py {pretrain,explain,eval,curves,selftest}
                       [--config PATH] [--set key=value ...] [--out DIR]
                       [--index i | --image CSV [--label y]]
                       [--ablation] [--quiet]

Exit codes: 0 on success, 1 on a configuration or snapshot error,
2 on a failure during the run itself.
"""

# Path setup
import os
import sys

root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
src = os.path.join(root, "src")
if root not in sys.path: sys.path.append(root)
if src not in sys.path: sys.path.append(src)

# File-specific imports
import argparse                                                 # noqa: E402
from initialization import initialization, prepare_run          # noqa: E402
from pretraining import pretraining, solver_settings            # noqa: E402
from inference import explain                                   # noqa: E402
from experiments import evaluation, curves, ablation            # noqa: E402
from selftest import selftest                                   # noqa: E402
from snapshot import load_snapshot                              # noqa: E402
from models import build_model                                  # noqa: E402
from dataset import Dataset, load_grid_csv                      # noqa: E402
from util.general import parse_override                         # noqa: E402

COMMANDS = ("pretrain", "explain", "eval", "curves", "selftest")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


class ArgumentParser(argparse.ArgumentParser):
    """Parser raising a ValueError instead of exiting on bad arguments."""

    def error(self, message):
        raise ValueError(f"\n{message}")


def build_parser() -> argparse.ArgumentParser:
    parser = ArgumentParser(prog="bee", description=__doc__.split("\n")[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", default=None,
                        help="JSON config file (see config_template.json)")
    parser.add_argument("--set", dest="overrides", action="append",
                        default=[], metavar="KEY=VALUE",
                        help="setting override, repeatable")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--index", type=int, default=0,
                        help="test instance explained by 'explain'")
    parser.add_argument("--image", default=None,
                        help="grid CSV image explained by 'explain' "
                             "instead of a test instance")
    parser.add_argument("--label", type=int, default=0,
                        help="class explained for --image")
    parser.add_argument("--ablation", action="store_true",
                        help="also run the T / n ablations with 'eval'")
    parser.add_argument("--quiet", action="store_true")

    return parser


def load_image(path: str, label: int, settings: dict) -> Dataset:
    """
    This function loads a grid CSV image for the configured model and
    checks its shape and class against the model.
    """

    model = build_model(settings["model"], settings["modelSeed"])
    image = load_grid_csv(path, label, model.input_shape[0])

    x, y = image[0]
    if x.shape != model.input_shape:
        raise ValueError(f"\nImage shape {x.shape} doesn't match the input "
                         f"shape {model.input_shape} of '{model.name}'.")
    model.check_class(y)

    return image


def run_command(argv: list) -> int:
    """
    This function parses the arguments, sets up the run and dispatches
    the subcommand. It returns the exit code.
    """

    # Configuration phase
    try:
        args = build_parser().parse_args(argv)
        overrides = dict(parse_override(item) for item in args.overrides)
        if args.out is not None:
            overrides["outputDir"] = args.out
        verbose = not args.quiet

        paths, settings = initialization(args.config, overrides, verbose)

        image = None
        if args.image is not None:
            if args.command != "explain":
                raise ValueError("\n--image is only used by 'explain'.")
            image = load_image(args.image, args.label, settings)

        states = {}
        if args.command in ("explain", "eval", "curves"):
            strategies = {"explain": [settings["strategy"]],
                          "eval": settings["methods"],
                          "curves": settings["strategies"]}[args.command]
            bandit_needed = any(strategy in ("fBEE", "pBEE", "IG-fBEE")
                                for strategy in strategies)
            if args.command == "eval" and args.ablation:
                bandit_needed = True
            if bandit_needed:
                snapshot = load_snapshot(paths["snapshot"],
                                         settings["masterSeed"],
                                         solver_settings(settings))
                if snapshot.model_seed != settings["modelSeed"]:
                    raise ValueError(
                        f"\nSnapshot was pretrained for model seed "
                        f"{snapshot.model_seed}, not {settings['modelSeed']}.")
                states = snapshot.states
    except (ValueError, TypeError, KeyError, FileNotFoundError) as msg:
        print(f"Configuration error: {msg}", file=sys.stderr)
        return EXIT_CONFIG

    # Run phase
    try:
        if args.command == "selftest":
            selftest(paths, settings, verbose)
            return EXIT_OK

        run = prepare_run(settings, verbose)

        if args.command == "pretrain":
            pretraining(paths, settings, run, verbose)
        elif args.command == "explain":
            if image is None:
                explain(paths, settings, run, states, args.index, verbose)
            else:
                explain(paths, settings, run, states, 0, verbose, image)
        elif args.command == "eval":
            evaluation(paths, settings, run, states, verbose)
            if args.ablation:
                ablation(paths, settings, run, states, verbose)
        else:
            curves(paths, settings, run, states, verbose)
    except Exception as msg:
        print(f"Run failed: {msg}", file=sys.stderr)
        return EXIT_RUNTIME

    return EXIT_OK


def main():
    """
    Main function of the BEE pipeline.
    """

    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
