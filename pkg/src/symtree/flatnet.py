"""Flat array form of a network, shared by both compute backends.

Each neuron-bearing layer becomes CSR-style arrays (indptr/src/w/bias) over
the layer's flat neuron order; flatten layers become a permutation array.
The numpy backend additionally needs a column-wise iteration schedule (one
step per within-row edge ordinal) so that it accumulates every row in edge
storage order, exactly like the compiled kernels do.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .ir import ActivationKind, InputFunction, LayerIR, LayerKind, NetworkIR


@dataclass
class FlatLayer:
    kind: LayerKind
    activation: ActivationKind
    input_function: InputFunction
    width: int
    indptr: np.ndarray  # int64 [width+1]
    src: np.ndarray  # int64 [nnz]
    w: np.ndarray  # float64 [nnz]
    bias: np.ndarray  # float64 [width]
    remap: np.ndarray | None = None  # int64, flatten layers only

    @cached_property
    def edge_row(self) -> np.ndarray:
        """Row index of every edge, aligned with src/w."""
        counts = np.diff(self.indptr)
        return np.repeat(np.arange(self.width, dtype=np.int64), counts)

    @cached_property
    def schedule(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Per edge ordinal k: (rows with > k edges, their k-th edge index)."""
        counts = np.diff(self.indptr)
        steps = []
        for k in range(int(counts.max(initial=0))):
            rows = np.nonzero(counts > k)[0].astype(np.int64)
            steps.append((rows, self.indptr[rows] + k))
        return steps


def _flatten_layer(layer: LayerIR) -> FlatLayer:
    remap = np.asarray(layer.remap, dtype=np.int64)
    n = len(remap)
    return FlatLayer(
        kind=layer.kind,
        activation=layer.activation,
        input_function=layer.input_function,
        width=n,
        indptr=np.zeros(n + 1, dtype=np.int64),
        src=np.empty(0, dtype=np.int64),
        w=np.empty(0, dtype=np.float64),
        bias=np.zeros(n, dtype=np.float64),
        remap=remap,
    )


def _neuron_layer(layer: LayerIR) -> FlatLayer:
    neurons = list(layer.iter_neurons())
    indptr = np.zeros(len(neurons) + 1, dtype=np.int64)
    srcs: list[int] = []
    ws: list[float] = []
    for j, n in enumerate(neurons):
        for s, w in n.in_edges:
            srcs.append(s)
            ws.append(w)
        indptr[j + 1] = len(srcs)
    return FlatLayer(
        kind=layer.kind,
        activation=layer.activation,
        input_function=layer.input_function,
        width=len(neurons),
        indptr=indptr,
        src=np.asarray(srcs, dtype=np.int64),
        w=np.asarray(ws, dtype=np.float64),
        bias=np.asarray([n.bias for n in neurons], dtype=np.float64),
    )


@dataclass
class FlatNet:
    input_width: int
    layers: list[FlatLayer | None]  # aligned with net.layers; entry 0 is None


_cache: dict[int, FlatNet] = {}


def compile_network(net: NetworkIR) -> FlatNet:
    key = id(net)
    hit = _cache.get(key)
    if hit is not None:
        return hit
    flat = FlatNet(
        input_width=net.input_width,
        layers=[None]
        + [
            _flatten_layer(l) if l.kind is LayerKind.FLATTEN_REMAP else _neuron_layer(l)
            for l in net.layers[1:]
        ],
    )
    _cache[key] = flat
    weakref.finalize(net, _cache.pop, key, None)
    return flat
