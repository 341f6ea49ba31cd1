"""Network intermediate representation.

A network is a flat list of layers in feedforward form: every neuron draws
weighted edges only from the immediately preceding layer.  Convolution and
pooling layers appear here only after lowering (see :mod:`symtree.lowering`);
flatten layers survive as pure index permutations with no neurons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterator, NamedTuple, Sequence


class ActivationKind(str, Enum):
    LINEAR = "linear"
    RELU = "relu"
    SIGMOID = "sigmoid"
    TANH = "tanh"
    SOFTMAX = "softmax"


class LayerKind(str, Enum):
    INPUT = "input"
    DENSE_FORM = "dense-form"
    MAXPOOL_FORM = "maxpool-form"
    FLATTEN_REMAP = "flatten-remap"
    OUTPUT = "output"


class InputFunction(str, Enum):
    SUM = "sum"
    MAX = "max"


class NeuronId(NamedTuple):
    layer: int
    filter: int
    neuron: int


class IRValidationError(ValueError):
    """Raised when a network violates a structural invariant."""


def _finite(x: float, what: str) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise IRValidationError(f"{what} must be finite, got {x!r}")
    return x


# --------------------------------------------------------------------------
# Input symbols


@dataclass(frozen=True)
class ExactMatch:
    value: float

    def matches(self, v: float) -> bool:
        return v == self.value


@dataclass(frozen=True)
class IntervalMatch:
    """Half-open interval [lo, hi)."""

    lo: float
    hi: float

    def matches(self, v: float) -> bool:
        return self.lo <= v < self.hi


Matcher = ExactMatch | IntervalMatch


@dataclass(frozen=True)
class InputSymbol:
    label: str
    match: Matcher


@dataclass(frozen=True)
class InputInfo:
    """One input neuron: its information name and its symbol table."""

    name: str
    symbols: tuple[InputSymbol, ...]

    def value_range(self) -> tuple[float, float]:
        los, his = [], []
        for s in self.symbols:
            if isinstance(s.match, ExactMatch):
                los.append(s.match.value)
                his.append(s.match.value)
            else:
                los.append(s.match.lo)
                his.append(s.match.hi)
        return min(los), max(his)


@dataclass(frozen=True)
class InputSpec:
    inputs: tuple[InputInfo, ...]

    def __len__(self) -> int:
        return len(self.inputs)

    def ranges(self) -> list[tuple[float, float]]:
        """Per-input [lo, hi] covering every symbol matcher."""
        return [info.value_range() for info in self.inputs]

    def validate(self) -> None:
        names = [info.name for info in self.inputs]
        if len(set(names)) != len(names):
            raise IRValidationError("input names must be unique")
        for info in self.inputs:
            if not info.symbols:
                raise IRValidationError(f"input {info.name!r} has no symbols")
            for s in info.symbols:
                if isinstance(s.match, IntervalMatch) and not s.match.lo < s.match.hi:
                    raise IRValidationError(
                        f"input {info.name!r} symbol {s.label!r}: empty interval"
                    )
            for i, a in enumerate(info.symbols):
                for b in info.symbols[i + 1 :]:
                    if _matchers_overlap(a.match, b.match):
                        raise IRValidationError(
                            f"input {info.name!r}: overlapping matchers "
                            f"{a.label!r} and {b.label!r}"
                        )


def _matchers_overlap(a: Matcher, b: Matcher) -> bool:
    if isinstance(a, ExactMatch) and isinstance(b, ExactMatch):
        return a.value == b.value
    if isinstance(a, ExactMatch):
        return b.matches(a.value)
    if isinstance(b, ExactMatch):
        return a.matches(b.value)
    return a.lo < b.hi and b.lo < a.hi


# --------------------------------------------------------------------------
# Neurons, filters, layers


@dataclass(frozen=True)
class NeuronIR:
    """One neuron: weighted edges from the preceding layer plus a bias.

    Edge sources are flat indices into the preceding layer (after that
    layer's own flatten remap, if it is one).
    """

    id: NeuronId
    in_edges: tuple[tuple[int, float], ...]
    bias: float = 0.0


@dataclass(frozen=True)
class FilterIR:
    neurons: tuple[NeuronIR, ...]
    bias: float | None = None  # shared value, or None when per-neuron

    @staticmethod
    def of(neurons: Sequence[NeuronIR]) -> "FilterIR":
        neurons = tuple(neurons)
        biases = {n.bias for n in neurons}
        shared = biases.pop() if len(biases) == 1 else None
        return FilterIR(neurons=neurons, bias=shared)


@dataclass(frozen=True)
class LayerIR:
    index: int
    kind: LayerKind
    filters: tuple[FilterIR, ...] = ()
    activation: ActivationKind = ActivationKind.LINEAR
    input_function: InputFunction = InputFunction.SUM
    remap: tuple[int, ...] | None = None  # flatten-remap layers only

    @property
    def width(self) -> int:
        if self.kind is LayerKind.FLATTEN_REMAP:
            return len(self.remap or ())
        return sum(len(f.neurons) for f in self.filters)

    def iter_neurons(self) -> Iterator[NeuronIR]:
        for f in self.filters:
            yield from f.neurons

    @cached_property
    def filter_offsets(self) -> tuple[int, ...]:
        offs, total = [], 0
        for f in self.filters:
            offs.append(total)
            total += len(f.neurons)
        return tuple(offs)

    def flat_index(self, filter_idx: int, neuron_idx: int) -> int:
        return self.filter_offsets[filter_idx] + neuron_idx

    def position_of(self, flat: int) -> tuple[int, int]:
        """Flat index -> (filter, neuron-within-filter)."""
        for fi in range(len(self.filters) - 1, -1, -1):
            off = self.filter_offsets[fi]
            if flat >= off:
                return fi, flat - off
        raise IndexError(flat)

    def neuron_at(self, flat: int) -> NeuronIR:
        fi, ni = self.position_of(flat)
        return self.filters[fi].neurons[ni]


@dataclass(frozen=True)
class NetworkIR:
    """Immutable layered network; safe to share across threads."""

    name: str
    input_spec: InputSpec
    layers: tuple[LayerIR, ...]
    output_labels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.output_labels and self.layers:
            labels = tuple(f"d{i}" for i in range(self.layers[-1].width))
            object.__setattr__(self, "output_labels", labels)

    @property
    def input_width(self) -> int:
        return self.layers[0].width

    @property
    def output_layer(self) -> LayerIR:
        return self.layers[-1]

    def hidden_layers(self) -> list[LayerIR]:
        """Layers with neurons strictly between input and output."""
        return [
            l
            for l in self.layers[1:-1]
            if l.kind in (LayerKind.DENSE_FORM, LayerKind.MAXPOOL_FORM)
        ]

    def validate(self) -> "NetworkIR":
        if not self.layers:
            raise IRValidationError("no layers")
        if self.layers[0].kind is not LayerKind.INPUT:
            raise IRValidationError("layer 0 must have kind 'input'")
        if self.layers[-1].kind is not LayerKind.OUTPUT:
            raise IRValidationError("last layer must have kind 'output'")
        self.input_spec.validate()
        if len(self.input_spec) != self.layers[0].width:
            raise IRValidationError(
                f"input_spec has {len(self.input_spec)} entries but the input "
                f"layer has {self.layers[0].width} neurons"
            )
        if len(self.output_labels) != self.layers[-1].width:
            raise IRValidationError("output_labels length != output width")
        for li, layer in enumerate(self.layers):
            self._validate_layer(li, layer)
        return self

    def _validate_layer(self, li: int, layer: LayerIR) -> None:
        if layer.index != li:
            raise IRValidationError(f"layer {li} carries index {layer.index}")
        is_pool = layer.kind is LayerKind.MAXPOOL_FORM
        if (layer.input_function is InputFunction.MAX) != is_pool:
            raise IRValidationError(
                f"layer {li}: input_function 'max' iff kind 'maxpool-form'"
            )
        if layer.activation is ActivationKind.SOFTMAX and layer.kind is not LayerKind.OUTPUT:
            raise IRValidationError("softmax permitted only on the output layer")
        if layer.kind is LayerKind.FLATTEN_REMAP:
            if layer.filters:
                raise IRValidationError(f"layer {li}: flatten-remap carries neurons")
            if layer.remap is None:
                raise IRValidationError(f"layer {li}: flatten-remap without remap")
            prev_width = self.layers[li - 1].width
            if sorted(layer.remap) != list(range(prev_width)):
                raise IRValidationError(
                    f"layer {li}: remap is not a permutation of 0..{prev_width - 1}"
                )
            return
        if layer.remap is not None:
            raise IRValidationError(f"layer {li}: remap on non-flatten layer")
        if layer.width < 1:
            raise IRValidationError(f"layer {li} has no neurons")
        prev_width = self.layers[li - 1].width if li > 0 else 0
        for fi, filt in enumerate(layer.filters):
            # canonical form: shared bias recorded iff all neurons agree
            biases = {n.bias for n in filt.neurons}
            expected = biases.pop() if len(biases) == 1 else None
            if filt.bias != expected:
                raise IRValidationError(
                    f"layer {li} filter {fi}: bias field must be "
                    f"{expected!r} (use FilterIR.of)"
                )
            for ni, neuron in enumerate(filt.neurons):
                nid = NeuronId(li, fi, ni)
                if tuple(neuron.id) != nid:
                    raise IRValidationError(f"neuron at {nid} carries id {neuron.id}")
                _finite(neuron.bias, f"bias of {nid}")
                seen: set[int] = set()
                for src, w in neuron.in_edges:
                    if li == 0:
                        raise IRValidationError("input-layer neurons take no edges")
                    if not 0 <= src < prev_width:
                        raise IRValidationError(
                            f"{nid}: edge source {src} outside preceding layer"
                        )
                    if src in seen:
                        raise IRValidationError(f"{nid}: duplicate edge source {src}")
                    seen.add(src)
                    _finite(w, f"weight of edge {src}->{nid}")

    # -- indexing helpers -------------------------------------------------

    def neuron(self, nid: NeuronId | tuple[int, int, int]) -> NeuronIR:
        l, f, n = nid
        return self.layers[l].filters[f].neurons[n]

    def flat_of(self, nid: NeuronId | tuple[int, int, int]) -> int:
        l, f, n = nid
        return self.layers[l].flat_index(f, n)

    def id_at(self, layer: int, flat: int) -> NeuronId:
        f, n = self.layers[layer].position_of(flat)
        return NeuronId(layer, f, n)

    def edge_count(self) -> int:
        return sum(len(n.in_edges) for l in self.layers for n in l.iter_neurons())


def make_neurons(
    layer: int, filter_idx: int, edges_per_neuron: Sequence[Sequence[tuple[int, float]]],
    biases: Sequence[float],
) -> tuple[NeuronIR, ...]:
    """Build a filter's neurons with consistent ids."""
    return tuple(
        NeuronIR(
            id=NeuronId(layer, filter_idx, ni),
            in_edges=tuple((int(s), float(w)) for s, w in edges),
            bias=float(biases[ni]),
        )
        for ni, edges in enumerate(edges_per_neuron)
    )


def input_layer(width: int, filters: Sequence[int] | None = None) -> LayerIR:
    """Input layer; `filters` optionally splits the width (channel grouping)."""
    sizes = list(filters) if filters is not None else [width]
    if sum(sizes) != width:
        raise IRValidationError("filter sizes do not sum to input width")
    filts = []
    for fi, size in enumerate(sizes):
        neurons = make_neurons(0, fi, [[] for _ in range(size)], [0.0] * size)
        filts.append(FilterIR.of(neurons))
    return LayerIR(index=0, kind=LayerKind.INPUT, filters=tuple(filts))


def dense_layer(
    index: int,
    weights: Sequence[Sequence[float]],
    biases: Sequence[float],
    activation: ActivationKind,
    kind: LayerKind = LayerKind.DENSE_FORM,
) -> LayerIR:
    """Fully connected layer from a [in, out] weight matrix."""
    n_in = len(weights)
    n_out = len(biases)
    edges = [
        [(src, float(weights[src][j])) for src in range(n_in)] for j in range(n_out)
    ]
    neurons = make_neurons(index, 0, edges, biases)
    return LayerIR(index=index, kind=kind, filters=(FilterIR.of(neurons),),
                   activation=activation)


def network_from_dense_weights(
    name: str,
    input_spec: InputSpec,
    layer_weights: Sequence[tuple[Sequence[Sequence[float]], Sequence[float], ActivationKind]],
    output_labels: Sequence[str] = (),
) -> NetworkIR:
    """Assemble a plain dense network from [in, out] matrices."""
    layers = [input_layer(len(input_spec))]
    last = len(layer_weights)
    for i, (w, b, act) in enumerate(layer_weights, start=1):
        kind = LayerKind.OUTPUT if i == last else LayerKind.DENSE_FORM
        layers.append(dense_layer(i, w, b, act, kind=kind))
    return NetworkIR(
        name=name,
        input_spec=input_spec,
        layers=tuple(layers),
        output_labels=tuple(output_labels),
    ).validate()


def uniform_input_spec(names: Sequence[str], lo: float = -1e30, hi: float = 1e30) -> InputSpec:
    """Catch-all spec: one wide interval symbol per input."""
    return InputSpec(
        inputs=tuple(
            InputInfo(name=n, symbols=(InputSymbol("any", IntervalMatch(lo, hi)),))
            for n in names
        )
    )
