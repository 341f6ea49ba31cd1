"""Decision tree and path serialization: canonical JSON and DOT.

Exports are deterministic: children are walked in canonical order (neuron
id, then config content) and config-set ids are renumbered in walk order,
so equal trees produce identical bytes no matter how they were built.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import canon
from .analysis import Scope
from .derivation import DecisionPath, PathEdge, SymbolTuple, config_key
from .ir import NeuronId
from .merging import ConfigStore, DecisionTree, TrieNode


class ExportError(ValueError):
    pass


@dataclass(frozen=True)
class ExportOptions:
    format: str = "dot"
    include_configs: bool = True
    max_label_len: int = 64

    def __post_init__(self) -> None:
        if self.format not in ("dot", "json"):
            raise ExportError(f"format must be dot|json, got {self.format!r}")
        if self.max_label_len < 8:
            raise ExportError("max_label_len must be >= 8")


# --------------------------------------------------------------------------
# tree JSON


def _config_docs(pairs: tuple) -> list[dict]:
    return [{"filler": filler, "role": role} for role, filler in pairs]


def _neuron_doc(nid: NeuronId) -> dict:
    return {"layer": nid.layer, "filter": nid.filter, "neuron": nid.neuron}


def _neuron_from_doc(doc) -> NeuronId:
    if isinstance(doc, dict):
        return NeuronId(int(doc["layer"]), int(doc["filter"]), int(doc["neuron"]))
    return NeuronId(*(int(v) for v in doc))


def tree_to_doc(tree: DecisionTree) -> dict:
    config_ids: dict[tuple, int] = {}
    config_sets: dict[str, list] = {}

    def intern(cid: int) -> int:
        key = config_key(tree.store.get(cid))
        new = config_ids.get(key)
        if new is None:
            new = len(config_ids)
            config_ids[key] = new
            config_sets[str(new)] = _config_docs(key)
        return new

    def node_doc(node: TrieNode, test: NeuronId | None) -> dict:
        doc: dict = {"test": _neuron_doc(test) if test is not None else None}
        children = []
        for (nid, cid), child in node.sorted_children(tree.store):
            label = {"neuron": _neuron_doc(nid), "config_set": intern(cid)}
            if child.children:
                children.append({"label": label, "node": node_doc(child, nid)})
            else:
                children.append(
                    {
                        "label": label,
                        "leaf": {
                            "decision": child.decision,
                            "support": child.support,
                        },
                    }
                )
        doc["children"] = children
        if node.decision is not None and node.children:
            # a merged path ended here while longer ones continue
            doc["leaf"] = {"decision": node.decision, "support": node.support}
        return doc

    root = node_doc(tree.root, None)
    doc = {
        "network_name": tree.network_name,
        "network_hash": tree.network_hash,
        "theta": tree.theta,
        "epsilon": tree.epsilon,
        "scope": tree.scope.value,
        "relevance_mode": tree.relevance_mode,
        "config_sets": config_sets,
        "root": root,
    }
    if tree.rho is not None:
        doc["rho"] = tree.rho
    return doc


def tree_from_doc(doc: dict) -> DecisionTree:
    try:
        return _tree_from_doc(doc)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ExportError):
            raise
        raise ExportError(f"not a decision tree document: {exc!r}") from exc


def _tree_from_doc(doc: dict) -> DecisionTree:
    store = ConfigStore()
    id_map: dict[int, int] = {}
    for key in sorted(doc.get("config_sets", {}), key=int):
        configs = frozenset(
            SymbolTuple(filler=p["filler"], role=p["role"])
            for p in doc["config_sets"][key]
        )
        id_map[int(key)] = store.intern(configs)

    def build(node_doc: dict) -> TrieNode:
        node = TrieNode()
        leaf = node_doc.get("leaf")
        for entry in node_doc.get("children", ()):
            label = entry["label"]
            nid = _neuron_from_doc(label["neuron"])
            cid = id_map[int(label["config_set"])]
            if "node" in entry:
                child = build(entry["node"])
            else:
                child = TrieNode()
                child.decision = entry["leaf"]["decision"]
                child.support = int(entry["leaf"]["support"])
            node.children[(nid, cid)] = child
        if leaf is not None:
            node.decision = leaf["decision"]
            node.support = int(leaf["support"])
        return node

    return DecisionTree(
        root=build(doc["root"]),
        store=store,
        network_name=doc.get("network_name", ""),
        network_hash=doc.get("network_hash", ""),
        theta=float(doc.get("theta", 0.5)),
        epsilon=float(doc.get("epsilon", 0.0)),
        scope=Scope(doc.get("scope", "winner_only")),
        relevance_mode=doc.get("relevance_mode", "threshold"),
        rho=doc.get("rho"),
    )


# --------------------------------------------------------------------------
# path JSON


def _edge_doc(edge: PathEdge) -> dict:
    doc: dict = {
        "neuron": _neuron_doc(edge.neuron),
        "configs": _config_docs(config_key(edge.configs)),
    }
    if edge.subpath is not None:
        doc["sub"] = [_edge_doc(e) for level in edge.subpath.levels for e in level]
    return doc


def path_to_doc(path: DecisionPath) -> dict:
    return {
        "decision": path.decision,
        "input": list(path.input),
        "edges": [_edge_doc(e) for level in path.levels for e in level],
    }


def _edge_from_doc(doc: dict) -> PathEdge:
    configs = frozenset(
        SymbolTuple(filler=p["filler"], role=p["role"]) for p in doc["configs"]
    )
    subpath = None
    if doc.get("sub"):
        subpath = DecisionPath(
            levels=(tuple(_edge_from_doc(e) for e in doc["sub"]),)
        )
    return PathEdge(neuron=_neuron_from_doc(doc["neuron"]), configs=configs,
                    subpath=subpath)


def path_from_doc(doc: dict) -> DecisionPath:
    edges = tuple(_edge_from_doc(e) for e in doc.get("edges", ()))
    return DecisionPath(
        levels=(edges,) if edges else (),
        decision=doc["decision"],
        input=tuple(float(v) for v in doc.get("input", ())),
    )


def to_json(obj) -> bytes:
    if isinstance(obj, DecisionTree):
        return canon.dump_bytes(tree_to_doc(obj))
    if isinstance(obj, DecisionPath):
        return canon.dump_bytes(path_to_doc(obj))
    raise ExportError(f"cannot export {type(obj).__name__} to JSON")


def tree_from_json(data: bytes | str) -> DecisionTree:
    import json

    return tree_from_doc(json.loads(data))


# --------------------------------------------------------------------------
# DOT


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def _clip(text: str, limit: int) -> str:
    return text if len(text) <= limit else text[: limit - 1] + "…"


def _neuron_text(nid: NeuronId) -> str:
    return f"L{nid.layer} F{nid.filter} N{nid.neuron}"


def _config_text(pairs: tuple) -> str:
    return "{" + ", ".join(filler for _, filler in pairs) + "}"


def to_dot(tree: DecisionTree, options: ExportOptions | None = None) -> str:
    opts = options or ExportOptions()
    nodes: list[str] = []
    edges: list[str] = []
    depths: dict[int, list[str]] = {}
    counter = [0]

    def fresh() -> str:
        name = f"n{counter[0]}"
        counter[0] += 1
        return name

    def leaf_node(decision: str, support: int, depth: int) -> str:
        name = fresh()
        label = _clip(f"{decision}\nsupport {support}", opts.max_label_len)
        nodes.append(f'  {name} [label="{_dot_escape(label)}", shape=box];')
        depths.setdefault(depth, []).append(name)
        return name

    def walk(node: TrieNode, name: str, depth: int) -> None:
        if node.decision is not None and node.children:
            term = leaf_node(node.decision, node.support, depth + 1)
            edges.append(f"  {name} -> {term};")
        for (nid, cid), child in node.sorted_children(tree.store):
            text = _neuron_text(nid)
            if opts.include_configs:
                text += " " + _config_text(config_key(tree.store.get(cid)))
            text = _clip(text, opts.max_label_len)
            if child.children:
                cname = fresh()
                nodes.append(
                    f'  {cname} [label="{_dot_escape(_clip(_neuron_text(nid), opts.max_label_len))}"];'
                )
                depths.setdefault(depth + 1, []).append(cname)
                edges.append(f'  {name} -> {cname} [label="{_dot_escape(text)}"];')
                walk(child, cname, depth + 1)
            else:
                cname = leaf_node(child.decision or "", child.support, depth + 1)
                edges.append(f'  {name} -> {cname} [label="{_dot_escape(text)}"];')

    root_name = fresh()
    root_label = _clip(tree.network_name or "root", opts.max_label_len)
    nodes.append(f'  {root_name} [label="{_dot_escape(root_label)}", shape=ellipse];')
    depths.setdefault(0, []).append(root_name)
    walk(tree.root, root_name, 0)

    lines = ["digraph decision_tree {", "  rankdir=TB;"]
    lines.extend(nodes)
    lines.extend(edges)
    for depth in sorted(depths):
        group = "; ".join(depths[depth])
        lines.append(f"  {{ rank=same; {group}; }}")
    lines.append("}")
    return "\n".join(lines) + "\n"
