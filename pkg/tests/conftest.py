"""Shared fixtures: independent oracles and random network generators.

The oracles here are deliberately written against raw arrays, not the
package IR, so equivalence tests compare two separate implementations.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from symtree.ir import (
    ActivationKind,
    InputInfo,
    InputSpec,
    InputSymbol,
    IntervalMatch,
    NetworkIR,
    network_from_dense_weights,
    uniform_input_spec,
)

# --------------------------------------------------------------------------
# dense forward oracle (plain matrix arithmetic, no IR involved)


def oracle_activation(name: str, v: np.ndarray) -> np.ndarray:
    if name == "linear":
        return v
    if name == "relu":
        return np.where(v > 0, v, 0.0)
    if name == "sigmoid":
        return 1.0 / (1.0 + np.exp(-v))
    if name == "tanh":
        return np.tanh(v)
    if name == "softmax":
        e = np.exp(v - np.max(v))
        return e / np.sum(e)
    raise ValueError(name)


def oracle_dense_forward(weights, biases, acts, x):
    """Per-layer matmul reference: weights[i] is [in, out]."""
    v = np.asarray(x, dtype=np.float64)
    for w, b, act in zip(weights, biases, acts):
        v = oracle_activation(act, v @ np.asarray(w) + np.asarray(b))
    return v


# --------------------------------------------------------------------------
# convolution / pooling oracles (nested loops, channels-last)


def _pad_amounts(in_dim: int, k: int, s: int, padding: str) -> tuple[int, int]:
    if padding == "valid":
        return 0, 0
    out = math.ceil(in_dim / s)
    total = max((out - 1) * s + k - in_dim, 0)
    return total // 2, total - total // 2


def naive_conv(x: np.ndarray, kernel: np.ndarray, strides, padding: str) -> np.ndarray:
    """Direct nested-loop convolution; x is [spatial..., in_ch]."""
    rank = x.ndim - 1
    spatial = x.shape[:-1]
    kdims = kernel.shape[:rank]
    in_ch, out_ch = kernel.shape[rank], kernel.shape[rank + 1]
    assert x.shape[-1] == in_ch

    lo = [_pad_amounts(spatial[d], kdims[d], strides[d], padding)[0] for d in range(rank)]
    if padding == "valid":
        out_dims = [(spatial[d] - kdims[d]) // strides[d] + 1 for d in range(rank)]
    else:
        out_dims = [math.ceil(spatial[d] / strides[d]) for d in range(rank)]

    out = np.zeros(tuple(out_dims) + (out_ch,))
    for opos in itertools.product(*(range(d) for d in out_dims)):
        for oc in range(out_ch):
            acc = 0.0
            for tap in itertools.product(*(range(k) for k in kdims)):
                ipos = tuple(
                    opos[d] * strides[d] - lo[d] + tap[d] for d in range(rank)
                )
                if any(p < 0 or p >= spatial[d] for d, p in enumerate(ipos)):
                    continue  # zero padding contributes nothing
                for ic in range(in_ch):
                    acc += x[ipos + (ic,)] * kernel[tap + (ic, oc)]
            out[opos + (oc,)] = acc
    return out


def naive_maxpool(x: np.ndarray, pool, strides, padding: str) -> np.ndarray:
    """Windowed max per channel; padded positions are simply absent."""
    rank = x.ndim - 1
    spatial = x.shape[:-1]
    ch = x.shape[-1]
    lo = [_pad_amounts(spatial[d], pool[d], strides[d], padding)[0] for d in range(rank)]
    if padding == "valid":
        out_dims = [(spatial[d] - pool[d]) // strides[d] + 1 for d in range(rank)]
    else:
        out_dims = [math.ceil(spatial[d] / strides[d]) for d in range(rank)]

    out = np.zeros(tuple(out_dims) + (ch,))
    for opos in itertools.product(*(range(d) for d in out_dims)):
        for c in range(ch):
            best = None
            for tap in itertools.product(*(range(k) for k in pool)):
                ipos = tuple(
                    opos[d] * strides[d] - lo[d] + tap[d] for d in range(rank)
                )
                if any(p < 0 or p >= spatial[d] for d, p in enumerate(ipos)):
                    continue
                v = x[ipos + (c,)]
                if best is None or v > best:
                    best = v
            assert best is not None, "empty pooling window"
            out[opos + (c,)] = best
    return out


# --------------------------------------------------------------------------
# random generators


def random_dense_spec(rng: np.random.Generator, width: int, lo=-1.0, hi=1.0):
    return uniform_input_spec([f"x{i}" for i in range(width)], lo=lo, hi=hi)


def random_dense_net(
    rng: np.random.Generator,
    widths=None,
    acts=None,
    name: str = "net",
) -> tuple[NetworkIR, list, list, list]:
    """Random dense network plus the raw arrays for the oracle."""
    if widths is None:
        depth = int(rng.integers(2, 5))
        widths = [int(rng.integers(2, 7)) for _ in range(depth + 1)]
    if acts is None:
        pool = [ActivationKind.RELU, ActivationKind.SIGMOID, ActivationKind.TANH,
                ActivationKind.LINEAR]
        acts = [pool[int(rng.integers(len(pool)))] for _ in widths[1:-1]]
        acts.append(
            ActivationKind.SOFTMAX if rng.random() < 0.5 else ActivationKind.LINEAR
        )
    weights, biases = [], []
    for i in range(1, len(widths)):
        weights.append(rng.normal(0, 1.0, (widths[i - 1], widths[i])).tolist())
        biases.append(rng.normal(0, 0.5, widths[i]).tolist())
    spec = random_dense_spec(rng, widths[0])
    net = network_from_dense_weights(
        name, spec, list(zip(weights, biases, acts)),
    )
    return net, weights, biases, [a.value for a in acts]


def symbolic_spec(names_and_tables) -> InputSpec:
    """InputSpec from {name: [(label, lo, hi), ...]} style entries."""
    infos = []
    for name, table in names_and_tables:
        symbols = tuple(
            InputSymbol(label, IntervalMatch(lo, hi)) for label, lo, hi in table
        )
        infos.append(InputInfo(name=name, symbols=symbols))
    return InputSpec(inputs=tuple(infos))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)


# --------------------------------------------------------------------------
# DOT grammar checker (no graphviz in the sandbox; this is the oracle)


def check_dot(text: str) -> dict:
    """Validate the DOT subset we emit; returns node/edge tallies.

    Grammar: digraph ID { stmt* } where stmt is a node declaration
    `ID [attrs];`, an edge `ID -> ID [attrs];`, an attribute default
    `key=value;`, or a rank group `{ rank=same; ID; ... }`.
    """
    pos = 0
    n = len(text)

    def err(msg):
        line = text.count("\n", 0, pos) + 1
        raise AssertionError(f"DOT parse error line {line}: {msg}")

    def skip_ws():
        nonlocal pos
        while pos < n and text[pos] in " \t\r\n":
            pos += 1

    def take(tok: str) -> bool:
        nonlocal pos
        skip_ws()
        if text.startswith(tok, pos):
            pos += len(tok)
            return True
        return False

    def expect(tok: str):
        if not take(tok):
            err(f"expected {tok!r} at ...{text[pos:pos + 30]!r}")

    def ident() -> str:
        nonlocal pos
        skip_ws()
        if pos < n and text[pos] == '"':
            end = pos + 1
            while end < n:
                if text[end] == "\\":
                    end += 2
                    continue
                if text[end] == '"':
                    break
                end += 1
            if end >= n:
                err("unterminated quoted string")
            token = text[pos : end + 1]
            pos = end + 1
            return token
        start = pos
        while pos < n and (text[pos].isalnum() or text[pos] in "_."):
            pos += 1
        if pos == start:
            err("expected identifier")
        return text[start:pos]

    def attr_list():
        expect("[")
        while True:
            ident()
            expect("=")
            ident()
            skip_ws()
            if take(","):
                continue
            break
        expect("]")

    nodes, edges = set(), []
    expect("digraph")
    ident()
    expect("{")
    while True:
        skip_ws()
        if take("}"):
            break
        if pos >= n:
            err("unexpected end of input")
        if take("{"):
            # rank group
            ident()
            expect("=")
            ident()
            expect(";")
            while not take("}"):
                ident()
                expect(";")
            continue
        name = ident()
        skip_ws()
        if take("->"):
            target = ident()
            skip_ws()
            if pos < n and text[pos] == "[":
                attr_list()
            expect(";")
            edges.append((name, target))
            continue
        if take("="):
            ident()
            expect(";")
            continue
        skip_ws()
        if pos < n and text[pos] == "[":
            attr_list()
        expect(";")
        nodes.add(name)
    skip_ws()
    assert pos == n, "trailing content after digraph"
    for a, b in edges:
        assert a in nodes and b in nodes, f"edge {a}->{b} references undeclared node"
    return {"nodes": nodes, "edges": edges}
