"""Forward evaluation, interval activation bounds, static pruning, relevance.

Everything here is pure over an immutable network: traces for different
inputs can be computed concurrently, and pruning returns a new network.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import expit

from . import backend
from .flatnet import FlatNet, compile_network
from .ir import (
    ActivationKind,
    FilterIR,
    InputFunction,
    LayerIR,
    LayerKind,
    NetworkIR,
    NeuronIR,
    NeuronId,
)

# widening absorbs libm rounding on transcendental activations; it also
# covers the reassociation slack between the softmax bound formula and the
# forward softmax
WIDEN = 1e-12
ZERO_GUARD = 1e-12


class AnalysisError(ValueError):
    pass


class DimensionError(AnalysisError):
    """Input vector length does not match the network's input width."""


class Scope(str, Enum):
    WINNER_ONLY = "winner_only"
    ALL_OUTPUTS = "all_outputs"


# --------------------------------------------------------------------------
# forward pass


def _softmax(net: np.ndarray) -> np.ndarray:
    e = np.exp(net - net.max())
    return e / e.sum()


def apply_activation(kind: ActivationKind, net: np.ndarray) -> np.ndarray:
    if kind is ActivationKind.LINEAR:
        return net.copy()
    if kind is ActivationKind.RELU:
        return np.maximum(net, 0.0)
    if kind is ActivationKind.SIGMOID:
        return expit(net)
    if kind is ActivationKind.TANH:
        return np.tanh(net)
    if kind is ActivationKind.SOFTMAX:
        return _softmax(net)
    raise AnalysisError(f"unknown activation {kind!r}")


@dataclass
class ActivationTrace:
    """Per-layer pre-activation sums and output activations for one input."""

    nets: list[np.ndarray]
    values: list[np.ndarray]

    @property
    def outputs(self) -> np.ndarray:
        return self.values[-1]

    @property
    def decision_index(self) -> int:
        # np.argmax takes the first maximum: lowest-index tie-break
        return int(np.argmax(self.values[-1]))


def _as_input_vector(net: NetworkIR, x) -> np.ndarray:
    v = np.ascontiguousarray(x, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != net.input_width:
        raise DimensionError(
            f"input has {v.size} values, network takes {net.input_width}"
        )
    if not np.all(np.isfinite(v)):
        raise AnalysisError("input vector contains non-finite values")
    return v


def forward(net: NetworkIR, x, flat: FlatNet | None = None) -> ActivationTrace:
    v = _as_input_vector(net, x)
    if flat is None:
        flat = compile_network(net)
    nets = [v]
    values = [v]
    for fl in flat.layers[1:]:
        prev = values[-1]
        if fl.kind is LayerKind.FLATTEN_REMAP:
            permuted = prev[fl.remap]
            nets.append(permuted)
            values.append(permuted)
            continue
        if fl.input_function is InputFunction.MAX:
            n = backend.net_max(fl, prev)
        else:
            n = backend.net_sum(fl, prev)
        nets.append(n)
        values.append(apply_activation(fl.activation, n))
    return ActivationTrace(nets=nets, values=values)


def decision_label(net: NetworkIR, trace: ActivationTrace) -> str:
    return net.output_labels[trace.decision_index]


# --------------------------------------------------------------------------
# interval bounds


@dataclass
class IntervalBounds:
    """Sound per-layer [lo, hi] enclosures of net inputs and activations."""

    net_lo: list[np.ndarray]
    net_hi: list[np.ndarray]
    lo: list[np.ndarray]
    hi: list[np.ndarray]


def _softmax_bounds(lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = lo.shape[0]
    if n == 1:
        return np.array([1.0]), np.array([1.0])
    m = hi.max()
    e_lo = np.exp(lo - m)
    e_hi = np.exp(hi - m)
    # sum the other components directly (no subtraction trick) so the
    # denominators keep small relative error even when one term dominates
    others = ~np.eye(n, dtype=bool)
    sum_lo_others = (e_lo * others).sum(axis=1)
    sum_hi_others = (e_hi * others).sum(axis=1)
    den_max = e_hi + sum_lo_others
    den_min = e_lo + sum_hi_others
    s_max = np.divide(e_hi, den_max, out=np.ones(n), where=den_max > 0)
    s_min = np.divide(e_lo, den_min, out=np.zeros(n), where=den_min > 0)
    return s_min, s_max


def _activation_bounds(
    kind: ActivationKind, lo: np.ndarray, hi: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    if kind is ActivationKind.LINEAR:
        return lo.copy(), hi.copy()
    if kind is ActivationKind.RELU:
        return np.maximum(lo, 0.0), np.maximum(hi, 0.0)
    if kind is ActivationKind.SIGMOID:
        return expit(lo) - WIDEN, expit(hi) + WIDEN
    if kind is ActivationKind.TANH:
        return np.tanh(lo) - WIDEN, np.tanh(hi) + WIDEN
    if kind is ActivationKind.SOFTMAX:
        s_min, s_max = _softmax_bounds(lo, hi)
        return np.clip(s_min - WIDEN, 0.0, 1.0), np.clip(s_max + WIDEN, 0.0, 1.0)
    raise AnalysisError(f"unknown activation {kind!r}")


def propagate_bounds(
    net: NetworkIR,
    input_ranges: list[tuple[float, float]] | None = None,
    flat: FlatNet | None = None,
) -> IntervalBounds:
    if input_ranges is None:
        input_ranges = net.input_spec.ranges()
    if len(input_ranges) != net.input_width:
        raise DimensionError(
            f"{len(input_ranges)} ranges for {net.input_width} inputs"
        )
    in_lo = np.asarray([r[0] for r in input_ranges], dtype=np.float64)
    in_hi = np.asarray([r[1] for r in input_ranges], dtype=np.float64)
    if not (np.all(np.isfinite(in_lo)) and np.all(np.isfinite(in_hi))):
        raise AnalysisError("input ranges must be finite")
    if np.any(in_lo > in_hi):
        raise AnalysisError("input range with lo > hi")
    if flat is None:
        flat = compile_network(net)
    bounds = IntervalBounds(
        net_lo=[in_lo], net_hi=[in_hi], lo=[in_lo], hi=[in_hi]
    )
    for fl in flat.layers[1:]:
        lo_prev, hi_prev = bounds.lo[-1], bounds.hi[-1]
        if fl.kind is LayerKind.FLATTEN_REMAP:
            plo, phi = lo_prev[fl.remap], hi_prev[fl.remap]
            bounds.net_lo.append(plo)
            bounds.net_hi.append(phi)
            bounds.lo.append(plo)
            bounds.hi.append(phi)
            continue
        if fl.input_function is InputFunction.MAX:
            nlo, nhi = backend.bounds_max(fl, lo_prev, hi_prev)
        else:
            nlo, nhi = backend.bounds_sum(fl, lo_prev, hi_prev)
        alo, ahi = _activation_bounds(fl.activation, nlo, nhi)
        bounds.net_lo.append(nlo)
        bounds.net_hi.append(nhi)
        bounds.lo.append(alo)
        bounds.hi.append(ahi)
    return bounds


# --------------------------------------------------------------------------
# static pruning


def _kept_edge_mask(net: NetworkIR, bounds: IntervalBounds, eps: float) -> list:
    """Per layer, per neuron: boolean keep-mask over its in_edges."""
    masks: list[list[np.ndarray] | None] = [None]
    for li, layer in enumerate(net.layers[1:], start=1):
        if layer.kind is LayerKind.FLATTEN_REMAP:
            masks.append(None)
            continue
        lo, hi = bounds.lo[li - 1], bounds.hi[li - 1]
        per_neuron = []
        for neuron in layer.iter_neurons():
            if not neuron.in_edges:
                per_neuron.append(np.zeros(0, dtype=bool))
                continue
            src = np.asarray([s for s, _ in neuron.in_edges])
            w = np.asarray([wt for _, wt in neuron.in_edges])
            if layer.input_function is InputFunction.MAX:
                # pool taps are structural, never thresholded away
                keep = w != 0.0
            else:
                reach = np.maximum(np.abs(w * lo[src]), np.abs(w * hi[src]))
                keep = (w != 0.0) & (reach >= eps)
            per_neuron.append(keep)
        masks.append(per_neuron)
    return masks


def prune_static(
    net: NetworkIR, bounds: IntervalBounds | None, eps: float
) -> NetworkIR:
    """Drop edges with bounded |contribution| < eps, then unreachable neurons."""
    if eps < 0:
        raise AnalysisError("epsilon must be >= 0")
    if bounds is None:
        bounds = propagate_bounds(net)
    masks = _kept_edge_mask(net, bounds, eps)

    last = len(net.layers) - 1
    retained: list[np.ndarray] = [np.ones(l.width, dtype=bool) for l in net.layers]
    for li in range(last - 1, 0, -1):
        nxt = net.layers[li + 1]
        ret = np.zeros(net.layers[li].width, dtype=bool)
        if nxt.kind is LayerKind.FLATTEN_REMAP:
            remap = np.asarray(nxt.remap)
            ret[remap] = retained[li + 1]
        else:
            for j, neuron in enumerate(nxt.iter_neurons()):
                if not retained[li + 1][j] or not neuron.in_edges:
                    continue
                keep = masks[li + 1][j]
                for (s, _), k in zip(neuron.in_edges, keep):
                    if k:
                        ret[s] = True
        retained[li] = ret

    renumber: list[np.ndarray] = []
    for mask in retained:
        r = np.full(mask.shape[0], -1, dtype=np.int64)
        r[mask] = np.arange(int(mask.sum()))
        renumber.append(r)

    new_layers = []
    for li, layer in enumerate(net.layers):
        if not retained[li].any():
            raise AnalysisError(
                f"pruning at eps={eps} removed every neuron of layer {li}"
            )
        if layer.kind is LayerKind.FLATTEN_REMAP:
            remap = [
                int(renumber[li - 1][p])
                for q, p in enumerate(layer.remap or ())
                if retained[li][q]
            ]
            new_layers.append(
                LayerIR(
                    index=li,
                    kind=layer.kind,
                    activation=layer.activation,
                    input_function=layer.input_function,
                    remap=tuple(remap),
                )
            )
            continue
        new_filters = []
        flat = 0
        for filt in layer.filters:
            kept_neurons = []
            for neuron in filt.neurons:
                if retained[li][flat]:
                    if li == 0:
                        edges: tuple = ()
                    else:
                        keep = masks[li][flat]
                        edges = tuple(
                            (int(renumber[li - 1][s]), wt)
                            for (s, wt), k in zip(neuron.in_edges, keep)
                            if k
                        )
                    kept_neurons.append(
                        NeuronIR(
                            id=NeuronId(li, len(new_filters), len(kept_neurons)),
                            in_edges=edges,
                            bias=neuron.bias,
                        )
                    )
                flat += 1
            if kept_neurons:
                new_filters.append(FilterIR.of(kept_neurons))
        new_layers.append(
            LayerIR(
                index=li,
                kind=layer.kind,
                filters=tuple(new_filters),
                activation=layer.activation,
                input_function=layer.input_function,
            )
        )
    return NetworkIR(
        name=net.name,
        input_spec=net.input_spec,
        layers=tuple(new_layers),
        output_labels=net.output_labels,
    ).validate()


# --------------------------------------------------------------------------
# relevance


@dataclass
class RelevanceGraph:
    """Per-input relevant edges and retained neurons under threshold theta.

    Edge flag arrays align with the flat edge storage of each layer
    (``compile_network(net).layers[li]``); ``local`` holds the bare ratio
    criterion, ``final`` is local AND consumer retained.
    """

    theta: float
    scope: Scope
    local: list[np.ndarray | None]
    final: list[np.ndarray | None]
    retained: list[np.ndarray]

    def relevant_sources(self, flat_net: FlatNet, li: int, j: int) -> np.ndarray:
        """Edge source indices of layer li, neuron j with final relevance."""
        fl = flat_net.layers[li]
        s, e = int(fl.indptr[j]), int(fl.indptr[j + 1])
        flags = self.final[li][s:e]
        return fl.src[s:e][flags]


def _local_flags_threshold(
    fl, prev_values: np.ndarray, theta: float
) -> np.ndarray:
    contribs = fl.w * prev_values[fl.src]
    if fl.input_function is InputFunction.MAX:
        flags = np.zeros(len(fl.src), dtype=bool)
        arg = backend.seg_argmax(fl, contribs)
        flags[arg[arg >= 0]] = True
        return flags
    abs_contribs = np.abs(contribs)
    row_max = np.maximum(backend.seg_absmax(fl, contribs), np.abs(fl.bias))
    live = row_max >= ZERO_GUARD
    return live[fl.edge_row] & (abs_contribs >= theta * row_max[fl.edge_row])


def _local_flags_mass(fl, prev_values: np.ndarray, rho: float) -> np.ndarray:
    contribs = np.abs(fl.w * prev_values[fl.src])
    if fl.input_function is InputFunction.MAX:
        return _local_flags_threshold(fl, prev_values, 0.0)
    flags = np.zeros(len(fl.src), dtype=bool)
    for j in range(fl.width):
        s, e = int(fl.indptr[j]), int(fl.indptr[j + 1])
        row = contribs[s:e]
        total = row.sum() + abs(float(fl.bias[j]))
        if total < ZERO_GUARD:
            continue
        # smallest contribution prefix (bias included) covering rho of total
        ranked = np.sort(np.append(row, abs(float(fl.bias[j]))))[::-1]
        need = rho * total
        covered = 0.0
        cutoff = 0.0
        for v in ranked:
            covered += v
            cutoff = v
            if covered >= need:
                break
        flags[s:e] = row >= cutoff
    return flags


def relevance(
    net: NetworkIR,
    trace: ActivationTrace,
    theta: float,
    scope: Scope = Scope.WINNER_ONLY,
    *,
    mode: str = "threshold",
    rho: float | None = None,
    flat: FlatNet | None = None,
) -> RelevanceGraph:
    if not 0.0 <= theta <= 1.0:
        raise AnalysisError(f"theta must be in [0, 1], got {theta}")
    scope = Scope(scope)
    if mode not in ("threshold", "mass"):
        raise AnalysisError(f"unknown relevance mode {mode!r}")
    if mode == "mass":
        if rho is None or not 0.0 < rho <= 1.0:
            raise AnalysisError("mass mode needs rho in (0, 1]")
    if flat is None:
        flat = compile_network(net)

    last = len(net.layers) - 1
    local: list[np.ndarray | None] = [None]
    for li in range(1, last + 1):
        fl = flat.layers[li]
        if fl.kind is LayerKind.FLATTEN_REMAP:
            local.append(None)
            continue
        prev_values = trace.values[li - 1]
        if mode == "mass":
            local.append(_local_flags_mass(fl, prev_values, float(rho)))
        else:
            local.append(_local_flags_threshold(fl, prev_values, theta))

    retained: list[np.ndarray] = [
        np.zeros(l.width, dtype=bool) for l in net.layers
    ]
    if scope is Scope.WINNER_ONLY:
        retained[last][trace.decision_index] = True
    else:
        retained[last][:] = True

    final: list[np.ndarray | None] = [None] * (last + 1)
    for li in range(last, 0, -1):
        fl = flat.layers[li]
        if fl.kind is LayerKind.FLATTEN_REMAP:
            retained[li - 1][fl.remap] = retained[li]
            continue
        fin = local[li] & retained[li][fl.edge_row]
        final[li] = fin
        np.logical_or.at(retained[li - 1], fl.src[fin], True)
    return RelevanceGraph(
        theta=theta, scope=scope, local=local, final=final, retained=retained
    )


def resolve_to_real(net: NetworkIR, li: int) -> tuple[int, np.ndarray | None]:
    """Nearest non-flatten layer at or below li-1, with the position map.

    Returns (layer index, m) where edge source s of layer li sits at
    position m[s] (or s when m is None) of that layer.
    """
    idx = li - 1
    m: np.ndarray | None = None
    while net.layers[idx].kind is LayerKind.FLATTEN_REMAP:
        r = np.asarray(net.layers[idx].remap, dtype=np.int64)
        m = r if m is None else r[m]
        idx -= 1
    return idx, m


def real_hidden_layers(net: NetworkIR) -> list[int]:
    """Indices of neuron-bearing layers strictly between input and output."""
    return [
        li
        for li in range(1, len(net.layers) - 1)
        if net.layers[li].kind is not LayerKind.FLATTEN_REMAP
    ]
