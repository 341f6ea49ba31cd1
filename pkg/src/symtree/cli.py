"""Command-line front end: import, derive, merge, export, serve.

Exit codes: 0 success, 2 parse/validation failure, 3 input dimension
mismatch. All output documents are canonical JSON so identical runs
produce identical bytes.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import canon
from .analysis import AnalysisError, DimensionError, Scope
from .archive import ArchiveError, parse_interchange, serialize_interchange
from .derivation import DerivationError
from .export import ExportError, ExportOptions, to_dot, to_json, tree_from_doc
from .ir import IRValidationError, NetworkIR
from .keras_import import ModelArchiveError, parse_model_archive
from .merging import MergeError
from .pipeline import (
    RunParams,
    derive_paths,
    merge_path_docs,
    parse_inputs_text,
    paths_to_doc,
)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_DIMENSION = 3

_SCOPE_FLAG = {"winner": Scope.WINNER_ONLY, "all": Scope.ALL_OUTPUTS}


class CliError(Exception):
    """User-facing failure; carries the process exit code."""

    def __init__(self, message: str, code: int = EXIT_INVALID) -> None:
        super().__init__(message)
        self.code = code


def _read_text(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc


def _read_json(path: str) -> dict:
    text = _read_text(path)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise CliError(f"{path}: expected a JSON object at top level")
    return doc


def _write_bytes(path: str, payload: bytes) -> None:
    try:
        if path == "-":
            sys.stdout.buffer.write(payload)
            sys.stdout.buffer.flush()
        else:
            with open(path, "wb") as fh:
                fh.write(payload)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}") from exc


def _load_network(path: str) -> NetworkIR:
    text = _read_text(path)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise CliError(f"{path}: expected a JSON object at top level")
    try:
        if "model_config" in doc and "weights" in doc:
            return parse_model_archive(doc["model_config"], doc["weights"])
        return parse_interchange(text)
    except (ModelArchiveError, ArchiveError, IRValidationError) as exc:
        raise CliError(f"{path}: {exc}") from exc


def _params_from_args(args: argparse.Namespace) -> RunParams:
    try:
        return RunParams(
            theta=args.theta,
            epsilon=args.epsilon,
            scope=_SCOPE_FLAG[args.scope],
            relevance_mode=args.mode,
            rho=args.rho,
        ).validate()
    except AnalysisError as exc:
        raise CliError(str(exc)) from exc


def cmd_import(args: argparse.Namespace) -> int:
    net = _load_network(args.model)
    _write_bytes(args.output, serialize_interchange(net))
    return EXIT_OK


def cmd_derive(args: argparse.Namespace) -> int:
    net = _load_network(args.network)
    params = _params_from_args(args)
    text = _read_text(args.inputs)
    try:
        vectors = parse_inputs_text(text, width=net.layers[0].width)
    except DimensionError as exc:
        raise CliError(str(exc), EXIT_DIMENSION) from exc
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    try:
        _, paths = derive_paths(net, vectors, params)
    except DimensionError as exc:
        raise CliError(str(exc), EXIT_DIMENSION) from exc
    except AnalysisError as exc:
        raise CliError(str(exc)) from exc
    doc = paths_to_doc(net, params, paths)
    _write_bytes(args.output, canon.dump_bytes(doc))
    return EXIT_OK


def cmd_merge(args: argparse.Namespace) -> int:
    docs = [_read_json(path) for path in args.paths]
    try:
        tree = merge_path_docs(docs)
    except (MergeError, AnalysisError, ValueError) as exc:
        raise CliError(str(exc)) from exc
    _write_bytes(args.output, to_json(tree))
    return EXIT_OK


def cmd_export(args: argparse.Namespace) -> int:
    doc = _read_json(args.tree)
    try:
        tree = tree_from_doc(doc)
        options = ExportOptions(format=args.format)
        if args.format == "dot":
            payload = to_dot(tree, options).encode("utf-8")
        else:
            payload = to_json(tree)
    except (ExportError, MergeError, ValueError) as exc:
        raise CliError(str(exc)) from exc
    _write_bytes(args.output, payload)
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    net = _load_network(args.network)
    from .service import run  # heavy import kept off the batch paths

    run(net, host=args.host, port=args.port)
    return EXIT_OK


def _add_param_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--theta", type=float, default=0.5,
                        help="relevance threshold in [0, 1]")
    parser.add_argument("--epsilon", type=float, default=0.0,
                        help="static pruning threshold, >= 0")
    parser.add_argument("--scope", choices=sorted(_SCOPE_FLAG), default="winner",
                        help="trace the winning output only, or all outputs")
    parser.add_argument("--mode", choices=["threshold", "mass"],
                        default="threshold",
                        help="relevance criterion: fixed ratio or cumulative mass")
    parser.add_argument("--rho", type=float, default=None,
                        help="cumulative contribution share for --mode mass")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="symtree",
        description="Extract rule-like decision trees from feedforward networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_import = sub.add_parser("import", help="convert a model archive to interchange form")
    p_import.add_argument("model", help="model archive or interchange JSON file")
    p_import.add_argument("-o", "--output", default="-", help="interchange output path")
    p_import.set_defaults(func=cmd_import)

    p_derive = sub.add_parser("derive", help="derive one decision path per input vector")
    p_derive.add_argument("network", help="interchange or model archive JSON file")
    p_derive.add_argument("inputs", help="inputs file, one comma-separated vector per line")
    p_derive.add_argument("-o", "--output", default="-", help="paths file output path")
    _add_param_flags(p_derive)
    p_derive.set_defaults(func=cmd_derive)

    p_merge = sub.add_parser("merge", help="merge paths files into a decision tree")
    p_merge.add_argument("paths", nargs="+", help="paths file(s) from derive")
    p_merge.add_argument("-o", "--output", default="-", help="tree output path")
    p_merge.set_defaults(func=cmd_merge)

    p_export = sub.add_parser("export", help="render a tree file as JSON or DOT")
    p_export.add_argument("tree", help="tree JSON file from merge")
    p_export.add_argument("--format", choices=["dot", "json"], default="json")
    p_export.add_argument("-o", "--output", default="-", help="rendered output path")
    p_export.set_defaults(func=cmd_export)

    p_serve = sub.add_parser("serve", help="serve the inspection API over HTTP")
    p_serve.add_argument("network", help="interchange or model archive JSON file")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8753)
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad flags, which matches our validation code
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except DimensionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except (
        AnalysisError, DerivationError, MergeError, ExportError, IRValidationError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
