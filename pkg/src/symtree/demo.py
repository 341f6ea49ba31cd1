"""A small hand-built terrain classifier used as a working example.

Three inputs (temperature, altitude, humidity in [0, 1]) feed sigmoid
gate neurons, a relu copy layer, and a seven-way softmax. The weights
are chosen so each output dominates a distinct region of symbol cells,
which makes the derived trees easy to eyeball.
"""

from __future__ import annotations

import numpy as np

from .archive import serialize_interchange
from .ir import (
    ActivationKind,
    InputInfo,
    InputSpec,
    InputSymbol,
    IntervalMatch,
    NetworkIR,
    network_from_dense_weights,
)

LANDSCAPE_LABELS = (
    "mountain", "swamp", "forest", "steppe", "mangrove", "jungle", "savannah",
)

_GATE = 12.0  # sigmoid steepness; sharp enough that symbol cells decide


def landscape_spec() -> InputSpec:
    def interval(label: str, lo: float, hi: float) -> InputSymbol:
        return InputSymbol(label, IntervalMatch(lo, hi))

    return InputSpec(
        inputs=(
            InputInfo(
                name="temperature",
                symbols=(interval("cool", 0.0, 0.5), interval("warm", 0.5, 1.01)),
            ),
            InputInfo(
                name="altitude",
                symbols=(interval("flat", 0.0, 0.5), interval("steep", 0.5, 1.01)),
            ),
            InputInfo(
                name="humidity",
                symbols=(
                    interval("dry", 0.0, 1 / 3),
                    interval("medium", 1 / 3, 2 / 3),
                    interval("wet", 2 / 3, 1.01),
                ),
            ),
        )
    )


def landscape_network() -> NetworkIR:
    g = _GATE
    # hidden 1 (sigmoid): warm, steep, wet, dry gates on the three inputs
    w1 = [
        [g, 0.0, 0.0, 0.0],   # temperature -> warm
        [0.0, g, 0.0, 0.0],   # altitude -> steep
        [0.0, 0.0, g, -g],    # humidity -> wet, dry
    ]
    b1 = [-g * 0.5, -g * 0.5, -g * (2 / 3), g * (1 / 3)]
    # hidden 2 (relu): pass-throughs plus mid = relu(1 - wet - dry)
    w2 = [
        [1.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0, -1.0],
        [0.0, 0.0, 0.0, 1.0, -1.0],
    ]
    b2 = [0.0, 0.0, 0.0, 0.0, 1.0]
    # output (softmax): rows are warm2, steep2, wet2, dry2, mid
    w3 = [
        [0.0, -4.0, -4.0, -4.0, 4.0, 4.0, 4.0],
        [10.0, -10.0, -10.0, -10.0, -10.0, -10.0, -10.0],
        [0.0, 4.0, 0.0, 0.0, 4.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 4.0, 0.0, 0.0, 4.0],
        [0.0, 0.0, 4.0, 0.0, 0.0, 4.0, 0.0],
    ]
    b3 = [0.0, 4.0, 4.0, 4.0, 0.0, 0.0, 0.0]
    return network_from_dense_weights(
        "landscape",
        landscape_spec(),
        [
            (w1, b1, ActivationKind.SIGMOID),
            (w2, b2, ActivationKind.RELU),
            (w3, b3, ActivationKind.SOFTMAX),
        ],
        output_labels=LANDSCAPE_LABELS,
    )


def landscape_grid() -> list[list[float]]:
    """200 probe points chosen off every symbol boundary."""
    coarse = [0.0, 0.2, 0.4, 0.6, 0.8]
    fine = np.linspace(0.0, 1.0, 8)
    return [
        [t, a, float(h)]
        for t in coarse
        for a in coarse
        for h in fine
    ]


def write_demo_files(directory: str) -> tuple[str, str]:
    """Write the interchange document and a grid inputs file; return paths."""
    import os

    net_path = os.path.join(directory, "landscape.json")
    inputs_path = os.path.join(directory, "landscape_inputs.txt")
    with open(net_path, "wb") as fh:
        fh.write(serialize_interchange(landscape_network()))
    with open(inputs_path, "w", encoding="utf-8") as fh:
        fh.write("# temperature, altitude, humidity\n")
        for vec in landscape_grid():
            fh.write(",".join(repr(v) for v in vec) + "\n")
    return net_path, inputs_path
