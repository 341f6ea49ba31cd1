"""Per-input hierarchical decision paths and symbol binding.

A path records, for one traced input, the relevant penultimate-layer
neurons as top-level edges; every deeper retained neuron hangs off the
subpath of its first retained successor, so each retained neuron appears in
exactly one edge.  First-hidden-layer edges carry the symbols of their
relevantly connected inputs; deeper edges carry the union over their
subpath.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .analysis import ActivationTrace, RelevanceGraph, resolve_to_real
from .flatnet import compile_network
from .ir import InputInfo, InputSpec, LayerKind, NetworkIR, NeuronId


class DerivationError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class SymbolTuple:
    filler: str  # symbol label, e.g. "warm"
    role: str  # information name of the input neuron, e.g. "temperature"


ConfigSet = frozenset


def config_key(configs: frozenset) -> tuple:
    """Canonical comparison/sort key for a config set."""
    return tuple(sorted((t.role, t.filler) for t in configs))


@dataclass(frozen=True)
class PathEdge:
    neuron: NeuronId
    configs: frozenset
    subpath: "DecisionPath | None" = None


@dataclass(frozen=True)
class DecisionPath:
    levels: tuple[tuple[PathEdge, ...], ...]
    decision: str = ""
    input: tuple[float, ...] = ()

    def iter_edges(self):
        """Depth-first preorder: each edge, then its subpath's edges."""
        for level in self.levels:
            for edge in level:
                yield edge
                if edge.subpath is not None:
                    yield from edge.subpath.iter_edges()


def symbol_for_input(
    input_spec: InputSpec, input_neuron: int, value: float
) -> SymbolTuple:
    info: InputInfo = input_spec.inputs[input_neuron]
    matches = [s for s in info.symbols if s.match.matches(value)]
    if len(matches) != 1:
        raise DerivationError(
            f"input {info.name!r}: value {value!r} matches "
            f"{len(matches)} symbols, expected exactly 1"
        )
    return SymbolTuple(filler=matches[0].label, role=info.name)


def edge_input_configs(edge: PathEdge) -> frozenset:
    """Configs of a leaf edge, or the union over its subpath."""
    if edge.subpath is None:
        return edge.configs
    out: frozenset = frozenset()
    for level in edge.subpath.levels:
        for sub in level:
            out = out | edge_input_configs(sub)
    return out


@dataclass
class _Draft:
    neuron: NeuronId
    configs: frozenset = frozenset()
    children: list = field(default_factory=list)

    def freeze(self, first_hidden: int) -> PathEdge:
        if self.neuron.layer == first_hidden:
            if self.children:
                raise DerivationError("first-hidden edge cannot carry a subpath")
            return PathEdge(neuron=self.neuron, configs=self.configs)
        subs = tuple(c.freeze(first_hidden) for c in self.children)
        if not subs:
            return PathEdge(neuron=self.neuron, configs=frozenset())
        configs = frozenset().union(*(e.configs for e in subs))
        return PathEdge(
            neuron=self.neuron,
            configs=configs,
            subpath=DecisionPath(levels=(subs,)),
        )


def derive_path(
    net: NetworkIR,
    trace: ActivationTrace,
    relgraph: RelevanceGraph,
    input_spec: InputSpec | None = None,
) -> DecisionPath:
    if input_spec is None:
        input_spec = net.input_spec
    flat = compile_network(net)
    x = trace.values[0]
    decision = net.output_labels[trace.decision_index]

    hidden = [
        li
        for li in range(1, len(net.layers) - 1)
        if net.layers[li].kind is not LayerKind.FLATTEN_REMAP
    ]
    if not hidden:
        return DecisionPath(levels=(), decision=decision, input=tuple(x))

    penult = hidden[-1]
    first_hidden = hidden[0]

    # retained sources of the output layer resolve onto the penultimate layer
    drafts: dict[tuple[int, int], _Draft] = {}
    top: list[_Draft] = []
    for j in np.nonzero(relgraph.retained[penult])[0]:
        d = _Draft(neuron=net.id_at(penult, int(j)))
        drafts[(penult, int(j))] = d
        top.append(d)
    if not top:
        raise DerivationError(
            f"no relevant neurons at the penultimate layer "
            f"(theta={relgraph.theta} too aggressive)"
        )

    # walk consumer layers downward, attaching each retained neuron to the
    # subpath of its first retained successor
    for upper, lower in zip(hidden[::-1], hidden[-2::-1]):
        real, m = resolve_to_real(net, upper)
        if real != lower:
            raise DerivationError(
                f"layer {upper} draws from layer {real}, expected {lower}"
            )
        fl = flat.layers[upper]
        successor: dict[int, int] = {}
        for j in range(fl.width):
            if not relgraph.retained[upper][j]:
                continue
            for s in relgraph.relevant_sources(flat, upper, j):
                pos = int(s) if m is None else int(m[s])
                successor.setdefault(pos, j)
        for pos in np.nonzero(relgraph.retained[lower])[0]:
            pos = int(pos)
            j = successor.get(pos)
            if j is None:
                # retained implies a relevant edge into a retained consumer
                raise DerivationError(
                    f"retained neuron {net.id_at(lower, pos)} has no "
                    f"relevant successor"
                )
            d = _Draft(neuron=net.id_at(lower, pos))
            drafts[(lower, pos)] = d
            drafts[(upper, j)].children.append(d)

    # first-hidden configs come straight from relevantly connected inputs
    real, m = resolve_to_real(net, first_hidden)
    if real != 0:
        raise DerivationError("first hidden layer does not draw from inputs")
    for (li, j), d in drafts.items():
        if li != first_hidden:
            continue
        srcs = relgraph.relevant_sources(flat, first_hidden, j)
        pos = srcs if m is None else m[srcs]
        d.configs = frozenset(
            symbol_for_input(input_spec, int(p), float(x[p])) for p in pos
        )

    edges = tuple(d.freeze(first_hidden) for d in top)
    return DecisionPath(levels=(edges,), decision=decision, input=tuple(x))


class BoundSymbols(NamedTuple):
    matrix: np.ndarray
    vector: np.ndarray


def bind_symbols(
    fillers: Sequence[Sequence[float]], roles: Sequence[Sequence[float]]
) -> BoundSymbols:
    """Tensor-product binding: sum of outer(filler_i, role_i) plus flat view."""
    if len(fillers) != len(roles):
        raise DerivationError("fillers and roles must pair up")
    fs = [np.asarray(f, dtype=np.float64) for f in fillers]
    rs = [np.asarray(r, dtype=np.float64) for r in roles]
    if not fs:
        raise DerivationError("nothing to bind")
    fdim, rdim = fs[0].shape[0], rs[0].shape[0]
    if any(f.ndim != 1 or f.shape[0] != fdim for f in fs) or any(
        r.ndim != 1 or r.shape[0] != rdim for r in rs
    ):
        raise DerivationError("inconsistent filler/role dimensions")
    matrix = np.zeros((fdim, rdim))
    for f, r in zip(fs, rs):
        matrix += np.outer(f, r)
    return BoundSymbols(matrix=matrix, vector=matrix.reshape(-1))
