"""Lowering of convolution, max-pooling, and flatten layers.

Every lowered layer is an ordinary sparse feedforward layer: one filter per
output channel, one neuron per output spatial position (row-major), edges
only for kernel taps that land on real (unpadded) input positions.  Neuron
flat order everywhere is filter-major: channel c, spatial offset p maps to
flat index ``c * n_spatial + p``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

from .ir import (
    ActivationKind,
    FilterIR,
    InputFunction,
    LayerIR,
    LayerKind,
    NeuronId,
    NeuronIR,
)


class LoweringError(ValueError):
    pass


@dataclass(frozen=True)
class ShapeND:
    spatial: tuple[int, ...]
    channels: int

    def __post_init__(self) -> None:
        if self.channels < 1 or any(d < 1 for d in self.spatial):
            raise LoweringError(f"all dims must be >= 1, got {self}")

    @property
    def rank(self) -> int:
        return len(self.spatial)

    @property
    def spatial_size(self) -> int:
        return math.prod(self.spatial)

    @property
    def size(self) -> int:
        return self.spatial_size * self.channels


@dataclass(frozen=True)
class ConvSpec:
    rank: int
    kernel: np.ndarray  # [spatial..., in_ch, out_ch]
    strides: tuple[int, ...]
    padding: str  # 'valid' | 'same'
    bias: np.ndarray  # per output channel

    def __post_init__(self) -> None:
        k = np.asarray(self.kernel, dtype=np.float64)
        object.__setattr__(self, "kernel", k)
        object.__setattr__(self, "bias", np.asarray(self.bias, dtype=np.float64))
        if self.rank not in (1, 2, 3):
            raise LoweringError(f"rank must be 1..3, got {self.rank}")
        if k.ndim != self.rank + 2:
            raise LoweringError(
                f"kernel has {k.ndim} dims, expected rank+2 = {self.rank + 2}"
            )
        if len(self.strides) != self.rank:
            raise LoweringError("strides length must equal rank")
        if any(s < 1 for s in self.strides) or any(d < 1 for d in k.shape[: self.rank]):
            raise LoweringError("kernel dims and strides must be >= 1")
        if self.padding not in ("valid", "same"):
            raise LoweringError(f"unknown padding {self.padding!r}")
        if self.bias.shape != (k.shape[-1],):
            raise LoweringError("bias length must equal output channel count")

    @property
    def kernel_dims(self) -> tuple[int, ...]:
        return self.kernel.shape[: self.rank]

    @property
    def in_channels(self) -> int:
        return self.kernel.shape[-2]

    @property
    def out_channels(self) -> int:
        return self.kernel.shape[-1]


def compute_output_shape(
    rank: int,
    in_shape: ShapeND,
    kernel_dims: Sequence[int],
    strides: Sequence[int],
    padding: str,
) -> ShapeND:
    """Spatial output extent; channels are passed through unchanged."""
    if in_shape.rank != rank or len(kernel_dims) != rank or len(strides) != rank:
        raise LoweringError("rank mismatch between shape, kernel, and strides")
    out = []
    for d, k, s in zip(in_shape.spatial, kernel_dims, strides):
        if padding == "valid":
            if k > d:
                raise LoweringError(
                    f"valid padding needs kernel {k} <= input extent {d}"
                )
            out.append((d - k) // s + 1)
        elif padding == "same":
            out.append(-(-d // s))  # ceil
        else:
            raise LoweringError(f"unknown padding {padding!r}")
    return ShapeND(spatial=tuple(out), channels=in_shape.channels)


def _pad_low(in_dim: int, k: int, stride: int, out_dim: int, padding: str) -> int:
    if padding == "valid":
        return 0
    total = max((out_dim - 1) * stride + k - in_dim, 0)
    return total // 2  # the odd unit goes to the high-index side


def _window_origins(
    in_shape: ShapeND,
    kernel_dims: Sequence[int],
    strides: Sequence[int],
    padding: str,
) -> tuple[ShapeND, list[tuple[int, ...]]]:
    """Output shape plus, per output position (row-major), the window origin."""
    out_shape = compute_output_shape(
        in_shape.rank, in_shape, kernel_dims, strides, padding
    )
    pads = [
        _pad_low(d, k, s, o, padding)
        for d, k, s, o in zip(
            in_shape.spatial, kernel_dims, strides, out_shape.spatial
        )
    ]
    origins = [
        tuple(p * s - pad for p, s, pad in zip(pos, strides, pads))
        for pos in product(*(range(o) for o in out_shape.spatial))
    ]
    return out_shape, origins


def _row_major(pos: Sequence[int], dims: Sequence[int]) -> int:
    idx = 0
    for p, d in zip(pos, dims):
        idx = idx * d + p
    return idx


def lower_conv(spec: ConvSpec, in_shape: ShapeND, *, index: int = 1) -> LayerIR:
    """Unroll a convolution into a sparsely connected feedforward layer."""
    if in_shape.channels != spec.in_channels:
        raise LoweringError(
            f"input has {in_shape.channels} channels, kernel expects "
            f"{spec.in_channels}"
        )
    out_shape, origins = _window_origins(
        in_shape, spec.kernel_dims, spec.strides, spec.padding
    )
    n_spatial_in = in_shape.spatial_size
    taps = list(product(*(range(k) for k in spec.kernel_dims)))

    filters = []
    for oc in range(spec.out_channels):
        bias = float(spec.bias[oc])
        neurons = []
        for ni, origin in enumerate(origins):
            edges = []
            for ic in range(spec.in_channels):
                for tap in taps:
                    in_pos = tuple(o + t for o, t in zip(origin, tap))
                    if any(
                        p < 0 or p >= d for p, d in zip(in_pos, in_shape.spatial)
                    ):
                        continue  # padded tap: no edge
                    src = ic * n_spatial_in + _row_major(in_pos, in_shape.spatial)
                    w = float(spec.kernel[tap + (ic, oc)])
                    edges.append((src, w))
            neurons.append(
                NeuronIR(id=NeuronId(index, oc, ni), in_edges=tuple(edges), bias=bias)
            )
        filters.append(FilterIR.of(neurons))

    return LayerIR(
        index=index,
        kind=LayerKind.DENSE_FORM,
        filters=tuple(filters),
        activation=ActivationKind.LINEAR,
        input_function=InputFunction.SUM,
    )


def lower_maxpool(
    rank: int,
    pool_dims: Sequence[int],
    strides: Sequence[int],
    padding: str,
    in_shape: ShapeND,
    *,
    index: int = 1,
) -> LayerIR:
    """Per-channel windowed max as a layer with weight-1 edges."""
    if in_shape.rank != rank:
        raise LoweringError("rank mismatch between pool and input shape")
    out_shape, origins = _window_origins(in_shape, pool_dims, strides, padding)
    n_spatial_in = in_shape.spatial_size
    taps = list(product(*(range(k) for k in pool_dims)))

    filters = []
    for c in range(in_shape.channels):
        neurons = []
        for ni, origin in enumerate(origins):
            edges = []
            for tap in taps:
                in_pos = tuple(o + t for o, t in zip(origin, tap))
                if any(p < 0 or p >= d for p, d in zip(in_pos, in_shape.spatial)):
                    continue
                src = c * n_spatial_in + _row_major(in_pos, in_shape.spatial)
                edges.append((src, 1.0))
            neurons.append(
                NeuronIR(id=NeuronId(index, c, ni), in_edges=tuple(edges), bias=0.0)
            )
        filters.append(FilterIR.of(neurons))

    return LayerIR(
        index=index,
        kind=LayerKind.MAXPOOL_FORM,
        filters=tuple(filters),
        activation=ActivationKind.LINEAR,
        input_function=InputFunction.MAX,
    )


def lower_flatten(in_shape: ShapeND, *, index: int = 1) -> LayerIR:
    """Permutation from filter-major layer order to channels-last row-major."""
    n_spatial = in_shape.spatial_size
    c_count = in_shape.channels
    remap = tuple(
        c * n_spatial + p for p in range(n_spatial) for c in range(c_count)
    )
    return LayerIR(
        index=index,
        kind=LayerKind.FLATTEN_REMAP,
        filters=(),
        activation=ActivationKind.LINEAR,
        input_function=InputFunction.SUM,
        remap=remap,
    )
