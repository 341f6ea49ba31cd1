"""Interchange archive: the canonical on-disk form of a network.

UTF-8 JSON with top-level keys `name`, `input_spec`, `layers`,
`output_labels`.  Serialization is canonical (sorted keys, 17-significant-
digit floats), so structurally equal networks produce identical bytes and a
stable content hash.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any

from . import canon
from .ir import (
    ActivationKind,
    ExactMatch,
    FilterIR,
    InputFunction,
    InputInfo,
    InputSpec,
    InputSymbol,
    IntervalMatch,
    IRValidationError,
    LayerIR,
    LayerKind,
    NetworkIR,
    NeuronId,
    NeuronIR,
)


class ArchiveError(ValueError):
    """Malformed interchange document."""


def serialize_interchange(net: NetworkIR) -> bytes:
    doc = {
        "name": net.name,
        "input_spec": [_input_doc(i) for i in net.input_spec.inputs],
        "layers": [_layer_doc(l) for l in net.layers],
        "output_labels": list(net.output_labels),
    }
    return canon.dump_bytes(doc)


def parse_interchange(archive_bytes: bytes | str) -> NetworkIR:
    try:
        doc = json.loads(archive_bytes)
    except json.JSONDecodeError as e:
        raise ArchiveError(f"not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ArchiveError("top level must be an object")
    try:
        name = _expect(doc, "name", str)
        spec_doc = _expect(doc, "input_spec", list)
        layers_doc = _expect(doc, "layers", list)
    except KeyError as e:
        raise ArchiveError(f"missing key {e.args[0]!r}") from e
    if not layers_doc:
        raise ArchiveError("no layers")

    input_spec = InputSpec(inputs=tuple(_parse_input(d) for d in spec_doc))
    layers = tuple(_parse_layer(i, d) for i, d in enumerate(layers_doc))
    labels = tuple(doc.get("output_labels", ()))
    net = NetworkIR(name=name, input_spec=input_spec, layers=layers,
                    output_labels=labels)
    try:
        return net.validate()
    except IRValidationError as e:
        raise ArchiveError(str(e)) from e


def network_digest(net: NetworkIR) -> str:
    """Content hash of the canonical archive bytes."""
    return hashlib.sha256(serialize_interchange(net)).hexdigest()


# --------------------------------------------------------------------------
# document builders


def _input_doc(info: InputInfo) -> dict[str, Any]:
    symbols = []
    for s in info.symbols:
        if isinstance(s.match, ExactMatch):
            match: dict[str, float] = {"eq": s.match.value}
        else:
            match = {"lo": s.match.lo, "hi": s.match.hi}
        symbols.append({"label": s.label, "match": match})
    return {"name": info.name, "symbols": symbols}


def _layer_doc(layer: LayerIR) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "kind": layer.kind.value,
        "activation": layer.activation.value,
        "filters": [_filter_doc(f) for f in layer.filters],
    }
    if layer.kind is LayerKind.FLATTEN_REMAP:
        doc["remap"] = list(layer.remap or ())
    return doc


def _filter_doc(filt: FilterIR) -> dict[str, Any]:
    neurons = []
    for n in filt.neurons:
        ndoc: dict[str, Any] = {"in_edges": [[s, w] for s, w in n.in_edges]}
        if filt.bias is None:
            ndoc["bias"] = n.bias
        neurons.append(ndoc)
    return {"bias": filt.bias, "neurons": neurons}


# --------------------------------------------------------------------------
# document readers


def _expect(doc: dict, key: str, typ: type) -> Any:
    val = doc[key]
    if not isinstance(val, typ):
        raise ArchiveError(f"key {key!r} must be {typ.__name__}")
    return val


def _parse_input(d: Any) -> InputInfo:
    if not isinstance(d, dict) or "name" not in d or "symbols" not in d:
        raise ArchiveError(f"bad input_spec entry: {d!r}")
    symbols = []
    for s in d["symbols"]:
        m = s.get("match", {})
        if "eq" in m:
            match: ExactMatch | IntervalMatch = ExactMatch(float(m["eq"]))
        elif "lo" in m and "hi" in m:
            match = IntervalMatch(float(m["lo"]), float(m["hi"]))
        else:
            raise ArchiveError(f"bad matcher {m!r} for input {d['name']!r}")
        symbols.append(InputSymbol(label=str(s["label"]), match=match))
    return InputInfo(name=str(d["name"]), symbols=tuple(symbols))


def _parse_layer(index: int, d: Any) -> LayerIR:
    if not isinstance(d, dict):
        raise ArchiveError(f"layer {index} is not an object")
    try:
        kind = LayerKind(d.get("kind"))
    except ValueError:
        raise ArchiveError(f"layer {index}: unknown kind {d.get('kind')!r}") from None
    try:
        activation = ActivationKind(d.get("activation", "linear"))
    except ValueError:
        raise ArchiveError(
            f"layer {index}: unknown activation kind {d.get('activation')!r}"
        ) from None
    input_function = (
        InputFunction.MAX if kind is LayerKind.MAXPOOL_FORM else InputFunction.SUM
    )
    if "input_function" in d and d["input_function"] != input_function.value:
        raise ArchiveError(f"layer {index}: input_function mismatch with kind")

    filters = []
    for fi, fdoc in enumerate(d.get("filters", [])):
        shared = fdoc.get("bias")
        neurons = []
        for ni, ndoc in enumerate(fdoc.get("neurons", [])):
            raw_edges = ndoc.get("in_edges", [])
            try:
                edges = tuple((int(s), float(w)) for s, w in raw_edges)
            except (TypeError, ValueError) as e:
                raise ArchiveError(
                    f"layer {index} filter {fi} neuron {ni}: bad in_edges"
                ) from e
            if shared is not None:
                bias = float(shared)
            elif "bias" in ndoc:
                bias = float(ndoc["bias"])
            else:
                bias = 0.0
            neurons.append(
                NeuronIR(id=NeuronId(index, fi, ni), in_edges=edges, bias=bias)
            )
        filters.append(FilterIR.of(neurons))

    remap = tuple(int(i) for i in d["remap"]) if "remap" in d else None
    return LayerIR(
        index=index,
        kind=kind,
        filters=tuple(filters),
        activation=activation,
        input_function=input_function,
        remap=remap,
    )
