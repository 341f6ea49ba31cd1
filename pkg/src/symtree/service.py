"""Local HTTP API for interactive network inspection.

One server holds one network and one current input vector (a single
session). Reads are concurrent; mutating posts are mutually exclusive,
and a post arriving while another mutation runs gets 409. The tree
returned by /derive is the canonical export document, byte-identical to
what the batch pipeline writes for the same input and parameters.
"""

from __future__ import annotations

import threading

import numpy as np
from fastapi import FastAPI, Response
from fastapi.middleware.cors import CORSMiddleware

from . import canon
from .analysis import (
    AnalysisError,
    DimensionError,
    IntervalBounds,
    Scope,
    decision_label,
    forward,
    propagate_bounds,
)
from .archive import network_digest
from .derivation import DerivationError
from .export import path_to_doc, to_json, tree_to_doc
from .ir import LayerKind, NetworkIR
from .merging import merge_paths
from .pipeline import RunParams, derive_one, prepare_network

_SCOPE_NAMES = {
    "winner": Scope.WINNER_ONLY,
    "winner_only": Scope.WINNER_ONLY,
    "all": Scope.ALL_OUTPUTS,
    "all_outputs": Scope.ALL_OUTPUTS,
}


class ApiError(Exception):
    def __init__(self, status: int, message: str) -> None:
        super().__init__(message)
        self.status = status
        self.message = message


def _midpoint_input(net: NetworkIR) -> np.ndarray:
    ranges = net.input_spec.ranges()
    return np.array([(lo + hi) / 2.0 for lo, hi in ranges], dtype=np.float64)


class Session:
    """Mutable server state: one network, one current input, last tree."""

    def __init__(self, net: NetworkIR) -> None:
        self.net = net
        self.digest = network_digest(net)
        self.bounds: IntervalBounds = propagate_bounds(net)
        self.input = _midpoint_input(net)
        self.trace = forward(net, self.input)
        self.last_params: RunParams | None = None
        self.tree_bytes: bytes | None = None
        self._lock = threading.Lock()

    def mutate(self):
        if not self._lock.acquire(blocking=False):
            raise ApiError(409, "another update is in flight; retry")
        return self._lock

    # ---- read views -------------------------------------------------

    def network_summary(self) -> dict:
        layers = []
        for layer in self.net.layers:
            if layer.kind is LayerKind.FLATTEN_REMAP:
                layers.append(
                    {"index": layer.index, "kind": layer.kind.value,
                     "width": layer.width}
                )
                continue
            layers.append(
                {
                    "index": layer.index,
                    "kind": layer.kind.value,
                    "activation": layer.activation.value,
                    "input_function": layer.input_function.value,
                    "filter_count": len(layer.filters),
                    "neuron_counts": [len(f.neurons) for f in layer.filters],
                    "width": layer.width,
                }
            )
        return {
            "name": self.net.name,
            "input_width": self.net.input_width,
            "output_labels": list(self.net.output_labels),
            "layers": layers,
        }

    def _out_edges(self, layer_idx: int, flat: int) -> list[dict]:
        if layer_idx + 1 >= len(self.net.layers):
            return []
        nxt = self.net.layers[layer_idx + 1]
        if nxt.kind is LayerKind.FLATTEN_REMAP:
            # a permutation: report the one pass-through slot it feeds
            return [
                {"layer": nxt.index, "target": None, "target_flat": q,
                 "weight": 1.0}
                for q, src in enumerate(nxt.remap or ())
                if src == flat
            ]
        out = []
        for fi, filt in enumerate(nxt.filters):
            for ni, neuron in enumerate(filt.neurons):
                for src, w in neuron.in_edges:
                    if src == flat:
                        out.append(
                            {"layer": nxt.index, "target": [nxt.index, fi, ni],
                             "target_flat": nxt.flat_index(fi, ni), "weight": w}
                        )
        return out

    def neuron_detail(self, l: int, f: int, n: int) -> dict:
        if not 0 <= l < len(self.net.layers):
            raise ApiError(404, f"no layer {l}")
        layer = self.net.layers[l]
        if layer.kind is LayerKind.FLATTEN_REMAP:
            raise ApiError(404, f"layer {l} has no addressable neurons")
        if not 0 <= f < len(layer.filters):
            raise ApiError(404, f"no filter {f} in layer {l}")
        filt = layer.filters[f]
        if not 0 <= n < len(filt.neurons):
            raise ApiError(404, f"no neuron {n} in layer {l} filter {f}")
        neuron = filt.neurons[n]
        flat = layer.flat_index(f, n)

        in_edges = []
        in_activations = []
        prev = self.net.layers[l - 1] if l > 0 else None
        for src, w in neuron.in_edges:
            coords = None
            if prev is not None and prev.kind is not LayerKind.FLATTEN_REMAP:
                pf, pn = prev.position_of(src)
                coords = [prev.index, pf, pn]
            value = float(self.trace.values[l - 1][src])
            in_activations.append(value)
            in_edges.append(
                {"layer": l - 1, "source": coords, "source_flat": src,
                 "weight": w, "activation_value": value}
            )

        weights = [e["weight"] for e in in_edges]
        return {
            "id": [l, f, n],
            "flat": flat,
            "bias": neuron.bias,
            "activation": layer.activation.value,
            "input_function": layer.input_function.value,
            "in_edges": in_edges,
            "out_edges": self._out_edges(l, flat),
            "net": float(self.trace.nets[l][flat]),
            "output": float(self.trace.values[l][flat]),
            "output_min": float(self.bounds.lo[l][flat]),
            "output_max": float(self.bounds.hi[l][flat]),
            "average_input_activation": (
                sum(in_activations) / len(in_activations) if in_activations else None
            ),
            "average_weight": (sum(weights) / len(weights) if weights else None),
        }

    def trace_summary(self) -> dict:
        return {
            "input": [float(v) for v in self.input],
            "decision_index": self.trace.decision_index,
            "decision": decision_label(self.net, self.trace),
            "outputs": [float(v) for v in self.trace.outputs],
            "output_labels": list(self.net.output_labels),
            "values": [[float(v) for v in vals] for vals in self.trace.values],
        }

    # ---- mutations --------------------------------------------------

    def set_input(self, vector) -> dict:
        lock = self.mutate()
        try:
            if not isinstance(vector, (list, tuple)) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool)
                for v in vector
            ):
                raise ApiError(400, "vector must be a list of numbers")
            try:
                trace = forward(self.net, vector)
            except (DimensionError, AnalysisError) as exc:
                raise ApiError(400, str(exc)) from exc
            self.input = np.asarray(vector, dtype=np.float64)
            self.trace = trace
            return self.trace_summary()
        finally:
            lock.release()

    def derive(self, body: dict) -> bytes:
        lock = self.mutate()
        try:
            scope_name = body.get("scope", "winner")
            if scope_name not in _SCOPE_NAMES:
                raise ApiError(400, f"unknown scope {scope_name!r}")
            try:
                params = RunParams(
                    theta=float(body.get("theta", 0.5)),
                    epsilon=float(body.get("epsilon", 0.0)),
                    scope=_SCOPE_NAMES[scope_name],
                    relevance_mode=body.get("mode", "threshold"),
                    rho=body.get("rho"),
                ).validate()
            except (AnalysisError, TypeError, ValueError) as exc:
                raise ApiError(400, str(exc)) from exc
            try:
                pruned = prepare_network(self.net, params)
                path = derive_one(pruned, self.input, params)
            except (DimensionError, AnalysisError, DerivationError) as exc:
                raise ApiError(400, str(exc)) from exc
            tree = merge_paths(
                [path],
                network_name=self.net.name,
                network_hash=self.digest,
                theta=params.theta,
                epsilon=params.epsilon,
                scope=params.scope,
                relevance_mode=params.relevance_mode,
                rho=params.rho,
            )
            self.last_params = params
            self.tree_bytes = to_json(tree)
            return canon.dump_bytes(
                {"path": path_to_doc(path), "tree": tree_to_doc(tree)}
            )
        finally:
            lock.release()


def create_app(net: NetworkIR) -> FastAPI:
    session = Session(net)
    app = FastAPI(title="symtree inspector api")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["GET", "POST"],
        allow_headers=["*"],
    )
    app.state.session = session

    def fail(exc: ApiError) -> Response:
        body = canon.dump_bytes({"error": exc.message})
        return Response(content=body, status_code=exc.status,
                        media_type="application/json")

    @app.get("/network")
    def get_network():
        return session.network_summary()

    @app.get("/neuron/{l}/{f}/{n}")
    def get_neuron(l: int, f: int, n: int):
        try:
            return session.neuron_detail(l, f, n)
        except ApiError as exc:
            return fail(exc)

    @app.post("/inputs")
    def post_inputs(body: dict):
        try:
            if "vector" not in body:
                raise ApiError(400, "body must contain 'vector'")
            return session.set_input(body["vector"])
        except ApiError as exc:
            return fail(exc)

    @app.post("/derive")
    def post_derive(body: dict | None = None):
        try:
            payload = session.derive(body or {})
        except ApiError as exc:
            return fail(exc)
        return Response(content=payload, media_type="application/json")

    @app.get("/tree")
    def get_tree():
        if session.tree_bytes is None:
            return fail(ApiError(404, "no tree derived yet"))
        return Response(content=session.tree_bytes,
                        media_type="application/json")

    return app


def run(net: NetworkIR, host: str = "127.0.0.1", port: int = 8753) -> None:
    import uvicorn

    uvicorn.run(create_app(net), host=host, port=port, log_level="warning")
