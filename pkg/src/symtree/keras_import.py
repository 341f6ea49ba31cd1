"""Build a network from a Keras-style model_config plus a weight table.

The weight table maps ``"<layer_name>/kernel"`` and ``"<layer_name>/bias"``
to arrays (dense kernels [in, out]; conv kernels [spatial..., in_ch,
out_ch], channels last).  Only sequential chains of InputLayer, Dense,
Conv1D/2D/3D, MaxPooling1D/2D/3D, and Flatten are supported; conv, pool,
and flatten layers are lowered to feedforward form on the way in.
"""

from __future__ import annotations

import dataclasses
import json
from typing import Any, Mapping

import numpy as np

from .ir import (
    ActivationKind,
    InputSpec,
    LayerIR,
    LayerKind,
    NetworkIR,
    dense_layer,
    input_layer,
    uniform_input_spec,
)
from .lowering import (
    ConvSpec,
    ShapeND,
    compute_output_shape,
    lower_conv,
    lower_flatten,
    lower_maxpool,
)


class ModelArchiveError(ValueError):
    pass


SUPPORTED = {
    "InputLayer",
    "Dense",
    "Conv1D",
    "Conv2D",
    "Conv3D",
    "MaxPooling1D",
    "MaxPooling2D",
    "MaxPooling3D",
    "Flatten",
}

_CONV_RANK = {"Conv1D": 1, "Conv2D": 2, "Conv3D": 3}
_POOL_RANK = {"MaxPooling1D": 1, "MaxPooling2D": 2, "MaxPooling3D": 3}


def _activation(cfg: Mapping[str, Any]) -> ActivationKind:
    act = cfg.get("activation", "linear") or "linear"
    try:
        return ActivationKind(act)
    except ValueError:
        raise ModelArchiveError(f"unsupported activation {act!r}") from None


def _batch_shape(cfg: Mapping[str, Any]) -> tuple[int, ...] | None:
    shape = cfg.get("batch_shape") or cfg.get("batch_input_shape")
    if shape is None:
        return None
    dims = tuple(int(d) for d in shape[1:])
    if not dims or any(d < 1 for d in dims):
        raise ModelArchiveError(f"bad input shape {shape!r}")
    return dims


def _as_shape(dims: tuple[int, ...]) -> ShapeND | int:
    """Keras shapes are channels-last; 1 trailing dim means already flat."""
    if len(dims) == 1:
        return dims[0]
    return ShapeND(spatial=dims[:-1], channels=dims[-1])


def _tuple_of(val: Any, rank: int, what: str) -> tuple[int, ...]:
    if isinstance(val, int):
        return (val,) * rank
    out = tuple(int(v) for v in val)
    if len(out) != rank:
        raise ModelArchiveError(f"{what} must have {rank} entries, got {val!r}")
    return out


def _weights(
    table: Mapping[str, Any], layer_name: str, kind: str, required: bool = True
) -> np.ndarray | None:
    key = f"{layer_name}/{kind}"
    if key not in table:
        if required:
            raise ModelArchiveError(f"missing weight group {key!r}")
        return None
    return np.asarray(table[key], dtype=np.float64)


def _layer_entries(cfg: Any) -> tuple[str, list]:
    if isinstance(cfg, str):
        cfg = json.loads(cfg)
    if not isinstance(cfg, dict):
        raise ModelArchiveError("model_config must be a JSON object")
    if cfg.get("class_name") not in (None, "Sequential"):
        raise ModelArchiveError(
            f"unsupported model class {cfg.get('class_name')!r} (Sequential only)"
        )
    inner = cfg.get("config", cfg)
    layers = inner.get("layers")
    if not isinstance(layers, list) or not layers:
        raise ModelArchiveError("model_config lists no layers")
    return inner.get("name", "model"), layers


def parse_model_archive(
    model_config: Any,
    weight_table: Mapping[str, Any],
    *,
    input_spec: InputSpec | None = None,
    name: str | None = None,
) -> NetworkIR:
    model_name, entries = _layer_entries(model_config)
    shape: ShapeND | int | None = None
    layers: list[LayerIR] = []

    for entry in entries:
        cls = entry.get("class_name")
        cfg = entry.get("config", {})
        layer_name = cfg.get("name", cls)
        if cls not in SUPPORTED:
            raise ModelArchiveError(f"unsupported layer class {cls!r}")

        if cls == "InputLayer":
            dims = _batch_shape(cfg)
            if dims is None:
                raise ModelArchiveError("InputLayer without a shape")
            shape = _as_shape(dims)
            continue

        if shape is None:
            dims = _batch_shape(cfg)
            if dims is None:
                raise ModelArchiveError(
                    f"layer {layer_name!r} appears before any input shape"
                )
            shape = _as_shape(dims)
        if not layers:
            if isinstance(shape, ShapeND):
                width = shape.size
                groups = [shape.spatial_size] * shape.channels
            else:
                width = shape
                groups = None
            layers.append(input_layer(width, groups))

        index = len(layers)
        if cls == "Dense":
            if isinstance(shape, ShapeND):
                raise ModelArchiveError(
                    f"Dense layer {layer_name!r} needs flat input; add Flatten"
                )
            units = int(cfg["units"])
            kernel = _weights(weight_table, layer_name, "kernel")
            bias = _weights(weight_table, layer_name, "bias", required=False)
            if bias is None:
                bias = np.zeros(units)
            if kernel.shape != (shape, units):
                raise ModelArchiveError(
                    f"layer {layer_name!r}: kernel shape {kernel.shape} does "
                    f"not match ({shape}, {units})"
                )
            if bias.shape != (units,):
                raise ModelArchiveError(f"layer {layer_name!r}: bad bias shape")
            layers.append(
                dense_layer(index, kernel, bias, _activation(cfg))
            )
            shape = units
        elif cls in _CONV_RANK:
            rank = _CONV_RANK[cls]
            if not isinstance(shape, ShapeND):
                raise ModelArchiveError(
                    f"conv layer {layer_name!r} needs a spatial input shape"
                )
            if cfg.get("data_format", "channels_last") != "channels_last":
                raise ModelArchiveError("only channels_last data is supported")
            filters = int(cfg["filters"])
            kernel = _weights(weight_table, layer_name, "kernel")
            bias = _weights(weight_table, layer_name, "bias", required=False)
            if bias is None:
                bias = np.zeros(filters)
            kdims = _tuple_of(cfg["kernel_size"], rank, "kernel_size")
            expected = kdims + (shape.channels, filters)
            if kernel.shape != expected:
                raise ModelArchiveError(
                    f"layer {layer_name!r}: kernel shape {kernel.shape} does "
                    f"not match kernel_size/filters {expected}"
                )
            spec = ConvSpec(
                rank=rank,
                kernel=kernel,
                strides=_tuple_of(cfg.get("strides", 1), rank, "strides"),
                padding=cfg.get("padding", "valid"),
                bias=bias,
            )
            lowered = lower_conv(spec, shape, index=index)
            layers.append(dataclasses.replace(lowered, activation=_activation(cfg)))
            out_spatial = compute_output_shape(
                rank, shape, kdims, spec.strides, spec.padding
            ).spatial
            shape = ShapeND(spatial=out_spatial, channels=filters)
        elif cls in _POOL_RANK:
            rank = _POOL_RANK[cls]
            if not isinstance(shape, ShapeND):
                raise ModelArchiveError(
                    f"pooling layer {layer_name!r} needs a spatial input shape"
                )
            pool = _tuple_of(cfg.get("pool_size", 2), rank, "pool_size")
            strides_cfg = cfg.get("strides")
            strides = (
                pool if strides_cfg is None else _tuple_of(strides_cfg, rank, "strides")
            )
            padding = cfg.get("padding", "valid")
            layers.append(
                lower_maxpool(rank, pool, strides, padding, shape, index=index)
            )
            out_spatial = compute_output_shape(
                rank, shape, pool, strides, padding
            ).spatial
            shape = ShapeND(spatial=out_spatial, channels=shape.channels)
        elif cls == "Flatten":
            if not isinstance(shape, ShapeND):
                raise ModelArchiveError(
                    f"Flatten layer {layer_name!r} on already-flat input"
                )
            layers.append(lower_flatten(shape, index=index))
            shape = shape.size

    if len(layers) < 2:
        raise ModelArchiveError("model has no weighted layers")
    last = layers[-1]
    if last.kind is not LayerKind.DENSE_FORM:
        raise ModelArchiveError(
            "network must end in a Dense or convolutional layer"
        )
    layers[-1] = dataclasses.replace(last, kind=LayerKind.OUTPUT)

    if input_spec is None:
        input_spec = uniform_input_spec([f"i{k}" for k in range(layers[0].width)])
    return NetworkIR(
        name=name or model_name,
        input_spec=input_spec,
        layers=tuple(layers),
    ).validate()
