"""Command-line interface for hin-embed.

Every stage command (``analyze``, ``extract``, ``train``, ``eval``,
``export``) runs that one stage of the pipeline against the output
directory; ``run`` runs the configured stages in order. Config keys can be
given in a flat ``key = value`` file (``--config``) and overridden with the
matching ``--flag``.
"""

import argparse
import logging
import sys
from collections.abc import Sequence
from typing import Any, Optional

from . import __version__
from .config import STAGES, THREADS_ENV, Variant, config_keys
from .exceptions import HinError
from .pipeline import run_pipeline, run_variants
from .synthetic import SyntheticSpec, write_synthetic

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")

STAGE_HELP = {
    "analyze": "measure D(r) and S(r) of every relation and categorize it AR or IR",
    "extract": "extract weighted node-relation triples for every relation",
    "train": "train node and relation embeddings",
    "eval": "score embeddings by clustering, classification and link prediction",
    "export": "write embeddings and the node index as TSV",
}


def _flag(key: str) -> str:
    return "--" + key.replace("_", "-")


def _metavar(spec: dict[str, Any]) -> str:
    if "enum" in spec:
        return "{" + ",".join(spec["enum"]) + "}"
    if spec.get("type") == "array":
        return "A,B,..."
    types = spec.get("type", "string")
    types = [types] if isinstance(types, str) else types
    main = next((t for t in types if t != "null"), "string")
    return {
        "integer": "INT",
        "number": "NUM",
        "boolean": "true|false",
    }.get(main, "VALUE")


def add_config_flags(parser: argparse.ArgumentParser) -> None:
    """Add ``--config`` plus one flag per accepted config key."""
    parser.add_argument(
        "-c", "--config", help="flat key = value config file (flags override it)"
    )
    group = parser.add_argument_group("config keys")
    for key, spec in config_keys().items():
        group.add_argument(
            _flag(key),
            dest=key,
            default=None,
            metavar=_metavar(spec),
            help=spec.get("description"),
        )


def collect_overrides(args: argparse.Namespace) -> dict[str, Any]:
    return {
        key: getattr(args, key)
        for key in config_keys()
        if getattr(args, key, None) is not None
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hin-embed",
        description="Relation structure-aware embedding of heterogeneous "
        "information networks.",
        epilog=f"{THREADS_ENV} sets the default number of training workers.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument(
        "--log-level", default="INFO", choices=LOG_LEVELS, help="logging verbosity"
    )
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")
    commands.required = True

    run = commands.add_parser("run", help="run the configured pipeline stages")
    add_config_flags(run)
    run.add_argument("--progress", action="store_true", help="show progress bars")

    for stage in STAGES:
        sub = commands.add_parser(stage, help=STAGE_HELP[stage])
        add_config_flags(sub)
        sub.add_argument(
            "--progress", action="store_true", help="show progress bars"
        )
        if stage == "train":
            sub.add_argument("--resume", metavar="CHECKPOINT", help="continue a run")
            sub.add_argument(
                "--stop-after",
                type=int,
                metavar="EPOCHS",
                help="stop after this many epochs (resume later)",
            )

    variants = commands.add_parser(
        "variants", help="compare loss assignments on the same tasks"
    )
    add_config_flags(variants)
    variants.add_argument(
        "--variants",
        dest="variant_names",
        default=",".join(v.value for v in Variant),
        metavar="A,B,...",
        help="variants to compare (default: all)",
    )
    variants.add_argument(
        "--sweep",
        action="append",
        default=[],
        metavar="NAME=V1,V2,...",
        help="clustering NMI per value of d (dimension) or k (negatives); "
        "repeatable",
    )

    synth = commands.add_parser(
        "synth", help="write a synthetic network with planted communities"
    )
    synth.add_argument("output", help="directory receiving the generated files")
    defaults = SyntheticSpec()
    for name, value in defaults.to_dict().items():
        synth.add_argument(
            _flag(name),
            dest=name,
            type=type(value),
            default=value,
            help=f"default: {value}",
        )
    return parser


def _run_stage(args: argparse.Namespace) -> int:
    overrides = collect_overrides(args)
    if args.command != "run":
        overrides["stages"] = args.command
    manifest = run_pipeline(
        args.config,
        overrides,
        progress=args.progress,
        resume=getattr(args, "resume", None),
        stop_after=getattr(args, "stop_after", None),
    )
    for name, digest in manifest.outputs.items():
        print(f"{name}\t{digest}")
    return 0


def _run_variants(args: argparse.Namespace) -> int:
    names = [v.strip() for v in args.variant_names.split(",") if v.strip()]
    table, sweeps = run_variants(
        args.config, collect_overrides(args), variants=names, sweeps=args.sweep
    )
    sys.stdout.write(table.to_tsv())
    for name, results in sweeps.items():
        print(f"{name}\tnmi")
        for value, nmi in results:
            print(f"{value}\t{nmi:.4f}")
    return 0


def _run_synth(args: argparse.Namespace) -> int:
    spec = SyntheticSpec(
        **{name: getattr(args, name) for name in SyntheticSpec().to_dict()}
    )
    for kind, path in write_synthetic(args.output, spec).items():
        print(f"{kind}\t{path}")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Entry point of the ``hin-embed`` command.

    Returns:
        0 on success, 1 on domain or I/O errors (argparse exits with 2 on
        usage errors)
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format=LOG_FORMAT)
    logger.debug("Running command %s", args.command)

    try:
        if args.command == "variants":
            return _run_variants(args)
        if args.command == "synth":
            return _run_synth(args)
        return _run_stage(args)
    except (HinError, OSError) as e:
        print(f"hin-embed: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
