"""Merge per-input decision paths into one hierarchical decision tree.

Paths are linearized depth-first into (neuron id, interned config set)
label sequences and merged as words into a prefix trie.  Two paths share a
node chain exactly as long as their label prefixes are equal; the merge
criterion is exact equality of neuron id and config-set content.  Leaves
aggregate support counts; the same full sequence ending in two different
decisions is a hard error.
"""

from __future__ import annotations

from dataclasses import dataclass

from .analysis import Scope, forward, propagate_bounds, prune_static, relevance
from .derivation import DecisionPath, config_key, derive_path
from .ir import NetworkIR, NeuronId


class MergeError(ValueError):
    pass


class ConfigStore:
    """Interning table for config sets: set equality iff id equality."""

    def __init__(self) -> None:
        self._ids: dict[tuple, int] = {}
        self._sets: list[frozenset] = []
        self._refs: list[int] = []

    def __len__(self) -> int:
        return len(self._sets)

    def intern(self, configs: frozenset) -> int:
        key = config_key(configs)
        cid = self._ids.get(key)
        if cid is None:
            cid = len(self._sets)
            self._ids[key] = cid
            self._sets.append(frozenset(configs))
            self._refs.append(0)
        self._refs[cid] += 1
        return cid

    def get(self, cid: int) -> frozenset:
        return self._sets[cid]

    def refcount(self, cid: int) -> int:
        return self._refs[cid]

    def ids(self) -> range:
        return range(len(self._sets))


@dataclass(frozen=True)
class TreeEdgeLabel:
    neuron: NeuronId
    config_id: int


class TrieNode:
    __slots__ = ("children", "decision", "support")

    def __init__(self) -> None:
        self.children: dict[tuple[NeuronId, int], TrieNode] = {}
        self.decision: str | None = None
        self.support: int = 0

    def sorted_children(self, store: ConfigStore):
        """Children in canonical order: neuron id, then config content."""
        return sorted(
            self.children.items(),
            key=lambda kv: (tuple(kv[0][0]), config_key(store.get(kv[0][1]))),
        )


@dataclass
class DecisionTree:
    root: TrieNode
    store: ConfigStore
    network_name: str = ""
    network_hash: str = ""
    theta: float = 0.5
    epsilon: float = 0.0
    scope: Scope = Scope.WINNER_ONLY
    relevance_mode: str = "threshold"
    rho: float | None = None

    def node_count(self) -> int:
        def count(node: TrieNode) -> int:
            return 1 + sum(count(c) for c in node.children.values())

        return count(self.root)

    def leaf_count(self) -> int:
        def count(node: TrieNode) -> int:
            own = 1 if node.decision is not None else 0
            return own + sum(count(c) for c in node.children.values())

        return count(self.root)

    def lookup_steps(self, steps) -> str | None:
        """Walk (neuron id, config set) steps; decision on a full match."""
        node = self.root
        for neuron, configs in steps:
            key = config_key(configs)
            for (nid, cid), child in node.children.items():
                if nid == neuron and config_key(self.store.get(cid)) == key:
                    node = child
                    break
            else:
                return None
        return node.decision


def raw_steps(path: DecisionPath) -> list[tuple[NeuronId, frozenset]]:
    """Uninterned linearization of a path."""
    return [(e.neuron, e.configs) for e in path.iter_edges()]


def linearize(path: DecisionPath, store: ConfigStore) -> list[TreeEdgeLabel]:
    """Depth-first label sequence of a path, interning its config sets."""
    return [
        TreeEdgeLabel(neuron=e.neuron, config_id=store.intern(e.configs))
        for e in path.iter_edges()
    ]


def merge_paths(paths, **metadata) -> DecisionTree:
    store = ConfigStore()
    root = TrieNode()
    for path in paths:
        if not path.decision:
            raise MergeError("path without a decision cannot be merged")
        node = root
        for label in linearize(path, store):
            node = node.children.setdefault((label.neuron, label.config_id), TrieNode())
        if node.decision is not None and node.decision != path.decision:
            raise MergeError(
                f"conflicting decisions {node.decision!r} vs "
                f"{path.decision!r} on one label sequence"
            )
        node.decision = path.decision
        node.support += 1
    return DecisionTree(root=root, store=store, **metadata)


def tree_lookup(
    tree: DecisionTree,
    x,
    net: NetworkIR,
    theta: float | None = None,
    scope: Scope | None = None,
    *,
    mode: str | None = None,
    rho: float | None = None,
    prepared: bool = False,
) -> str | None:
    """Re-derive x's path on net and walk the tree; None on no-match.

    Parameters default to the ones recorded on the tree. Pass
    prepared=True when net is already pruned at the tree's epsilon.
    """
    theta = tree.theta if theta is None else theta
    scope = tree.scope if scope is None else scope
    mode = tree.relevance_mode if mode is None else mode
    rho = tree.rho if rho is None else rho
    if not prepared:
        net = prune_static(net, propagate_bounds(net), tree.epsilon)
    trace = forward(net, x)
    rel = relevance(net, trace, theta, scope, mode=mode, rho=rho)
    path = derive_path(net, trace, rel)
    return tree.lookup_steps(raw_steps(path))
