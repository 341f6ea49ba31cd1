#!/usr/bin/env python3
"""Export a Keras .h5 model archive to the engine's interchange JSON.

Usage: export_model.py <model.h5> <out.json>

Reads the archive's model_config attribute and per-layer kernel/bias
datasets, converts everything to 64-bit, and writes the interchange
document the analysis engine consumes. Prints a manifest of what was
exported. Exits 0 on success, 1 on any failure (unsupported layer
classes are reported by name).
"""

from __future__ import annotations

import json
import sys

import h5py
import numpy as np

from symtree.archive import serialize_interchange
from symtree.keras_import import SUPPORTED, parse_model_archive

USAGE = "usage: export_model.py <model.h5> <out.json>"


def read_model_config(h5: h5py.File) -> dict:
    raw = h5.attrs.get("model_config")
    if raw is None:
        raise ValueError("archive has no model_config attribute")
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")
    return json.loads(raw)


def collect_weights(h5: h5py.File) -> dict[str, np.ndarray]:
    """Find kernel/bias datasets under model_weights/<layer>/**.

    The nesting between the layer group and its datasets differs across
    framework versions ("fc1/kernel:0" vs "fc1/<model>/fc1/kernel"), so
    datasets are discovered by leaf name rather than by fixed path.
    """
    if "model_weights" not in h5:
        raise ValueError("archive has no model_weights group")
    table: dict[str, np.ndarray] = {}
    for layer_name, group in h5["model_weights"].items():
        if not isinstance(group, h5py.Group):
            continue

        found: dict[str, np.ndarray] = {}

        def visit(name: str, obj) -> None:
            if not isinstance(obj, h5py.Dataset):
                return
            leaf = name.rsplit("/", 1)[-1].split(":", 1)[0]
            if leaf not in ("kernel", "bias"):
                return
            if leaf in found:
                raise ValueError(
                    f"layer {layer_name!r} has more than one {leaf} dataset"
                )
            found[leaf] = np.asarray(obj[()], dtype=np.float64)

        group.visititems(visit)
        for kind, arr in found.items():
            table[f"{layer_name}/{kind}"] = arr
    return table


def layer_classes(model_config: dict) -> list[tuple[str, str]]:
    inner = model_config.get("config", model_config)
    out = []
    for entry in inner.get("layers", []):
        cls = entry.get("class_name", "?")
        name = entry.get("config", {}).get("name", cls)
        out.append((cls, name))
    return out


def export_model(src: str, dst: str) -> dict:
    with h5py.File(src, "r") as h5:
        model_config = read_model_config(h5)
        weights = collect_weights(h5)

    classes = layer_classes(model_config)
    unsupported = sorted({cls for cls, _ in classes if cls not in SUPPORTED})
    if unsupported:
        raise ValueError("unsupported layer class(es): " + ", ".join(unsupported))

    net = parse_model_archive(model_config, weights)
    payload = serialize_interchange(net)
    with open(dst, "wb") as fh:
        fh.write(payload)

    return {
        "source": src,
        "model": net.name,
        "layer_classes": [f"{cls}({name})" for cls, name in classes],
        "weight_shapes": {k: list(v.shape) for k, v in sorted(weights.items())},
        "output": dst,
        "output_bytes": len(payload),
    }


def main(argv: list[str]) -> int:
    if len(argv) != 2:
        print(USAGE, file=sys.stderr)
        return 1
    src, dst = argv
    try:
        manifest = export_model(src, dst)
    except (OSError, ValueError, KeyError) as exc:
        # ModelArchiveError subclasses ValueError
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(manifest, indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
