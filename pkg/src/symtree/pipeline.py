"""End-to-end derivation pipeline shared by the CLI and the HTTP service.

Sequence per run: propagate bounds, statically prune at epsilon, then per
input trace, relevance, and path derivation; paths merge into one tree.
Paths files embed a content hash of the source interchange document so
paths from different networks can never be merged silently.
"""

from __future__ import annotations

from dataclasses import dataclass

from .analysis import (
    AnalysisError,
    DimensionError,
    Scope,
    forward,
    propagate_bounds,
    prune_static,
    relevance,
)
from .archive import network_digest
from .derivation import DecisionPath, derive_path
from .export import path_from_doc, path_to_doc
from .ir import NetworkIR
from .merging import DecisionTree, MergeError, merge_paths


@dataclass(frozen=True)
class RunParams:
    theta: float = 0.5
    epsilon: float = 0.0
    scope: Scope = Scope.WINNER_ONLY
    relevance_mode: str = "threshold"
    rho: float | None = None

    def validate(self) -> "RunParams":
        if not 0.0 <= self.theta <= 1.0:
            raise AnalysisError(f"theta must be in [0, 1], got {self.theta}")
        if self.epsilon < 0:
            raise AnalysisError("epsilon must be >= 0")
        if self.relevance_mode == "mass" and (
            self.rho is None or not 0.0 < self.rho <= 1.0
        ):
            raise AnalysisError("mass mode needs rho in (0, 1]")
        return self


def prepare_network(net: NetworkIR, params: RunParams) -> NetworkIR:
    """Bounds + static pruning; the minimized structure drives derivation."""
    bounds = propagate_bounds(net)
    return prune_static(net, bounds, params.epsilon)


def derive_one(net: NetworkIR, x, params: RunParams) -> DecisionPath:
    trace = forward(net, x)
    rel = relevance(
        net,
        trace,
        params.theta,
        params.scope,
        mode=params.relevance_mode,
        rho=params.rho,
    )
    return derive_path(net, trace, rel)


def derive_paths(
    net: NetworkIR, inputs, params: RunParams
) -> tuple[NetworkIR, list[DecisionPath]]:
    params.validate()
    pruned = prepare_network(net, params)
    return pruned, [derive_one(pruned, x, params) for x in inputs]


def _params_doc(params: RunParams) -> dict:
    doc = {
        "theta": params.theta,
        "epsilon": params.epsilon,
        "scope": params.scope.value,
        "relevance_mode": params.relevance_mode,
    }
    if params.rho is not None:
        doc["rho"] = params.rho
    return doc


def paths_to_doc(
    net: NetworkIR, params: RunParams, paths: list[DecisionPath]
) -> dict:
    return {
        "network_name": net.name,
        "network_hash": network_digest(net),
        **_params_doc(params),
        "paths": [path_to_doc(p) for p in paths],
    }


def params_from_doc(doc: dict) -> RunParams:
    return RunParams(
        theta=float(doc.get("theta", 0.5)),
        epsilon=float(doc.get("epsilon", 0.0)),
        scope=Scope(doc.get("scope", "winner_only")),
        relevance_mode=doc.get("relevance_mode", "threshold"),
        rho=doc.get("rho"),
    ).validate()


def merge_path_docs(docs: list[dict]) -> DecisionTree:
    """Merge one or more paths documents; they must share one network."""
    if not docs:
        raise MergeError("no paths documents to merge")
    head = docs[0]
    params = params_from_doc(head)
    for other in docs[1:]:
        if other.get("network_hash") != head.get("network_hash"):
            raise MergeError(
                "paths documents come from different networks "
                f"({head.get('network_hash')!r} vs {other.get('network_hash')!r})"
            )
        if params_from_doc(other) != params:
            raise MergeError(
                "paths documents were derived under different parameters"
            )
    paths = [path_from_doc(p) for doc in docs for p in doc.get("paths", ())]
    return merge_paths(
        paths,
        network_name=head.get("network_name", ""),
        network_hash=head.get("network_hash", ""),
        theta=params.theta,
        epsilon=params.epsilon,
        scope=params.scope,
        relevance_mode=params.relevance_mode,
        rho=params.rho,
    )


def tree_for_inputs(net: NetworkIR, inputs, params: RunParams) -> DecisionTree:
    """Derive + merge in-process (what the service does per request)."""
    pruned, paths = derive_paths(net, inputs, params)
    return merge_paths(
        paths,
        network_name=net.name,
        network_hash=network_digest(net),
        theta=params.theta,
        epsilon=params.epsilon,
        scope=params.scope,
        relevance_mode=params.relevance_mode,
        rho=params.rho,
    )


def parse_inputs_text(text: str, width: int | None = None) -> list[list[float]]:
    """One comma-separated float vector per line; # starts a comment."""
    vectors: list[list[float]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            vec = [float(part) for part in line.split(",")]
        except ValueError:
            raise ValueError(f"inputs line {lineno}: not a float vector") from None
        if width is not None and len(vec) != width:
            raise DimensionError(
                f"inputs line {lineno}: {len(vec)} values, expected {width}"
            )
        vectors.append(vec)
    return vectors
