"""Forward-pass throughput: compiled kernels vs the numpy fallback.

Run:  python3 benchmarks/bench_forward.py [--inputs N] [--seed S]

Both backends must produce bit-identical traces; the benchmark asserts
that before timing anything.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from symtree import backend
from symtree.analysis import forward
from symtree.flatnet import compile_network
from symtree.ir import ActivationKind, network_from_dense_weights, uniform_input_spec


def build_net(rng: np.random.Generator, widths: list[int]):
    spec = uniform_input_spec([f"x{i}" for i in range(widths[0])], lo=-1.0, hi=1.0)
    layer_weights = []
    acts = [ActivationKind.TANH] * (len(widths) - 2) + [ActivationKind.SOFTMAX]
    for i in range(1, len(widths)):
        w = rng.normal(0, 1.0 / np.sqrt(widths[i - 1]), (widths[i - 1], widths[i]))
        b = rng.normal(0, 0.1, widths[i])
        layer_weights.append((w.tolist(), b.tolist(), acts[i - 1]))
    return network_from_dense_weights("bench", spec, layer_weights)


def run_backend(name: str, net, flat, inputs) -> tuple[float, list]:
    backend.use(name)
    outs = []
    start = time.perf_counter()
    for x in inputs:
        outs.append(forward(net, x, flat).outputs)
    return time.perf_counter() - start, outs


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--inputs", type=int, default=300)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    shapes = [[16, 64, 64, 8], [64, 256, 256, 128, 10], [128, 512, 512, 16]]
    print(f"{'network':>24} {'python':>10} {'compiled':>10} {'speedup':>8}")
    for widths in shapes:
        net = build_net(rng, widths)
        flat = compile_network(net)
        inputs = rng.uniform(-1, 1, (args.inputs, widths[0]))
        t_py, out_py = run_backend("python", net, flat, inputs)
        if "compiled" not in backend.available():
            print(f"{'x'.join(map(str, widths)):>24} {t_py:>9.3f}s {'n/a':>10}")
            continue
        t_c, out_c = run_backend("compiled", net, flat, inputs)
        for a, b in zip(out_py, out_c):
            assert np.array_equal(a, b), "backends disagree bit-for-bit"
        label = "x".join(map(str, widths))
        print(f"{label:>24} {t_py:>9.3f}s {t_c:>9.3f}s {t_py / t_c:>7.2f}x")
    backend.use("auto")


if __name__ == "__main__":
    main()
