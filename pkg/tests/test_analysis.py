import numpy as np
import pytest

from conftest import oracle_dense_forward, random_dense_net, symbolic_spec

from symtree.analysis import (
    AnalysisError,
    DimensionError,
    Scope,
    decision_label,
    forward,
    propagate_bounds,
    prune_static,
    relevance,
)
from symtree.flatnet import compile_network
from symtree.ir import (
    ActivationKind,
    NeuronId,
    network_from_dense_weights,
    uniform_input_spec,
)


def edge_flags(net, arr, li, j):
    """Slice per-edge flag array arr (flat CSR layout) for neuron j of layer li."""
    fl = compile_network(net).layers[li]
    s, e = int(fl.indptr[j]), int(fl.indptr[j + 1])
    return arr[s:e]


def gate_net(acts=(ActivationKind.SIGMOID, ActivationKind.LINEAR)):
    """3 inputs -> 2 hidden -> 2 outputs with easy-to-trace weights."""
    spec = symbolic_spec(
        [("altitude", [("flat", -0.01, 0.5), ("high", 0.5, 1.01)]),
         ("temperature", [("cold", -0.01, 0.5), ("warm", 0.5, 1.01)]),
         ("humidity", [("dry", -0.01, 0.5), ("wet", 0.5, 1.01)])]
    )
    w1 = [[1.0, -2.0], [3.0, 0.5], [0.25, 1.5]]
    b1 = [0.1, -0.2]
    w2 = [[2.0, -1.0], [1.0, 1.0]]
    b2 = [0.0, 0.3]
    return network_from_dense_weights(
        "gate", spec, [(w1, b1, acts[0]), (w2, b2, acts[1])],
    ), (w1, b1, w2, b2)


class TestForward:
    def test_worked_first_layer_arithmetic(self):
        # altitude=0, temperature=1, humidity=0.5: net = w1 + 0.5*w2 + bias
        net, (w1, b1, w2, b2) = gate_net()
        trace = forward(net, [0.0, 1.0, 0.5])
        want0 = w1[1][0] * 1.0 + w1[2][0] * 0.5 + b1[0]
        want1 = w1[1][1] * 1.0 + w1[2][1] * 0.5 + b1[1]
        assert trace.nets[1][0] == pytest.approx(want0, abs=1e-12)
        assert trace.nets[1][1] == pytest.approx(want1, abs=1e-12)

    def test_all_zero_relu_network(self):
        spec = uniform_input_spec(["a", "b"])
        net = network_from_dense_weights(
            "z", spec,
            [([[0.0, 0.0], [0.0, 0.0]], [0.0, 0.0], ActivationKind.RELU),
             ([[0.0], [0.0]], [0.0], ActivationKind.LINEAR)],
        )
        trace = forward(net, [5.0, -3.0])
        assert list(trace.values[1]) == [0.0, 0.0]
        assert list(trace.outputs) == [0.0]

    def test_matches_matrix_oracle(self, rng):
        for _ in range(50):
            net, w, b, acts = random_dense_net(rng)
            x = rng.uniform(-1, 1, net.input_width)
            got = forward(net, x).outputs
            want = oracle_dense_forward(w, b, acts, x)
            assert np.max(np.abs(got - want)) <= 1e-9

    def test_softmax_outputs_sum_to_one(self, rng):
        net, *_ = random_dense_net(
            rng, widths=[3, 5, 4],
            acts=[ActivationKind.TANH, ActivationKind.SOFTMAX],
        )
        out = forward(net, rng.uniform(-1, 1, 3)).outputs
        assert abs(float(np.sum(out)) - 1.0) <= 1e-9

    def test_dimension_mismatch(self):
        net, _ = gate_net()
        with pytest.raises(DimensionError):
            forward(net, [1.0, 2.0])

    def test_non_finite_input(self):
        net, _ = gate_net()
        with pytest.raises(AnalysisError):
            forward(net, [1.0, float("nan"), 0.0])

    def test_argmax_tie_breaks_low_index(self):
        spec = uniform_input_spec(["a"])
        net = network_from_dense_weights(
            "tie", spec, [([[1.0, 1.0]], [0.0, 0.0], ActivationKind.LINEAR)],
        )
        trace = forward(net, [2.0])
        assert trace.decision_index == 0
        assert decision_label(net, trace) == "d0"


class TestBounds:
    def test_linear_interval_sum(self):
        spec = uniform_input_spec(["a", "b", "c"], lo=0.0, hi=1.0)
        net = network_from_dense_weights(
            "s", spec,
            [([[1.0], [1.0], [1.0]], [0.0], ActivationKind.LINEAR)],
        )
        bounds = propagate_bounds(net)
        assert bounds.lo[1][0] == 0.0
        assert bounds.hi[1][0] == 3.0

    def test_relu_clips_interval(self):
        spec = uniform_input_spec(["a"], lo=-2.0, hi=5.0)
        net = network_from_dense_weights(
            "r", spec, [([[1.0, 1.0]], [0.0, 0.0], ActivationKind.RELU),
                        ([[1.0], [1.0]], [0.0], ActivationKind.LINEAR)],
        )
        bounds = propagate_bounds(net)
        assert bounds.net_lo[1][0] == -2.0 and bounds.net_hi[1][0] == 5.0
        assert bounds.lo[1][0] == 0.0 and bounds.hi[1][0] == 5.0

    def test_negative_weight_orientation(self):
        spec = uniform_input_spec(["a"], lo=1.0, hi=2.0)
        net = network_from_dense_weights(
            "n", spec, [([[-3.0]], [0.0], ActivationKind.LINEAR)],
        )
        bounds = propagate_bounds(net)
        assert bounds.lo[1][0] == -6.0 and bounds.hi[1][0] == -3.0

    def test_softmax_bounds_clamped_to_unit(self, rng):
        net, *_ = random_dense_net(
            rng, widths=[2, 3, 4],
            acts=[ActivationKind.RELU, ActivationKind.SOFTMAX],
        )
        bounds = propagate_bounds(net)
        assert np.all(bounds.lo[-1] >= 0.0)
        assert np.all(bounds.hi[-1] <= 1.0)

    def test_sampling_never_escapes(self, rng):
        for _ in range(10):
            net, *_ = random_dense_net(rng)
            bounds = propagate_bounds(net)
            ranges = net.input_spec.ranges()
            for _ in range(100):
                x = [rng.uniform(lo, hi) for lo, hi in ranges]
                trace = forward(net, x)
                for li in range(1, len(net.layers)):
                    v = trace.values[li]
                    assert np.all(v >= bounds.lo[li]) and np.all(v <= bounds.hi[li])


class TestPrune:
    def test_epsilon_zero_removes_only_exact_zero_weights(self):
        spec = uniform_input_spec(["a", "b"], lo=-1.0, hi=1.0)
        net = network_from_dense_weights(
            "z0", spec,
            [([[1.0, 0.0], [0.5, 2.0]], [0.1, 0.2], ActivationKind.TANH),
             ([[1.0], [1e-30]], [0.0], ActivationKind.LINEAR)],
        )
        pruned = prune_static(net, propagate_bounds(net), 0.0)
        assert pruned.edge_count() == net.edge_count() - 1
        out_edges = pruned.layers[2].filters[0].neurons[0].in_edges
        assert any(w == 1e-30 for _, w in out_edges)

    def test_dead_hidden_neuron_removed(self):
        spec = uniform_input_spec(["a", "b"], lo=0.0, hi=1.0)
        # second hidden neuron only ever feeds the output with weight 0
        net = network_from_dense_weights(
            "dead", spec,
            [([[1.0, 1.0], [1.0, 1.0]], [0.0, 0.0], ActivationKind.RELU),
             ([[1.0], [0.0]], [0.0], ActivationKind.LINEAR)],
        )
        pruned = prune_static(net, propagate_bounds(net), 0.0)
        assert pruned.layers[1].width == 1
        x = [0.3, 0.7]
        assert forward(pruned, x).outputs[0] == forward(net, x).outputs[0]

    def test_small_epsilon_small_deviation(self, rng):
        for _ in range(5):
            net, *_ = random_dense_net(rng)
            bounds = propagate_bounds(net)
            pruned = prune_static(net, bounds, 1e-8)
            ranges = net.input_spec.ranges()
            for _ in range(50):
                x = [rng.uniform(lo, hi) for lo, hi in ranges]
                diff = np.abs(forward(net, x).outputs - forward(pruned, x).outputs)
                assert np.max(diff) <= 1e-6

    def test_negative_epsilon_rejected(self, rng):
        net, *_ = random_dense_net(rng)
        with pytest.raises(AnalysisError):
            prune_static(net, propagate_bounds(net), -1e-9)

    def test_aggressive_epsilon_emptying_layer_errors(self):
        spec = uniform_input_spec(["a"], lo=0.0, hi=1.0)
        net = network_from_dense_weights(
            "t", spec, [([[1e-3]], [0.0], ActivationKind.RELU),
                        ([[1e-3]], [0.0], ActivationKind.LINEAR)],
        )
        with pytest.raises(AnalysisError):
            prune_static(net, propagate_bounds(net), 1e6)


def brute_force_relevant(net, trace, theta):
    """Oracle: per neuron, filter in-edges by the ratio criterion directly."""
    out = {}
    for li, layer in enumerate(net.layers):
        if li == 0 or layer.kind.value == "flatten-remap":
            continue
        prev = trace.values[li - 1]
        for fi, filt in enumerate(layer.filters):
            for ni, neuron in enumerate(filt.neurons):
                if layer.input_function.value == "max":
                    contribs = [prev[s] * w for s, w in neuron.in_edges]
                    best = max(range(len(contribs)), key=lambda i: contribs[i])
                    # strict first-max semantics
                    for i, c in enumerate(contribs):
                        if c > contribs[best]:
                            best = i
                    flags = [i == best for i in range(len(contribs))]
                else:
                    contribs = [abs(prev[s] * w) for s, w in neuron.in_edges]
                    rowmax = max(contribs + [abs(neuron.bias)])
                    if rowmax < 1e-12:
                        flags = [False] * len(contribs)
                    else:
                        flags = [c >= theta * rowmax for c in contribs]
                out[NeuronId(li, fi, ni)] = flags
    return out


class TestRelevance:
    def test_theta_one_keeps_only_max_contribution(self, rng):
        net, *_ = random_dense_net(rng, widths=[3, 4, 2])
        x = rng.uniform(-1, 1, 3)
        trace = forward(net, x)
        rel = relevance(net, trace, 1.0, Scope.WINNER_ONLY)
        prev = trace.values[1]
        neuron = net.layers[2].filters[0].neurons[trace.decision_index]
        contribs = [abs(prev[s] * w) for s, w in neuron.in_edges]
        rowmax = max(contribs + [abs(neuron.bias)])
        flags = edge_flags(net, rel.local[2], 2, trace.decision_index)
        for (src, w), flag in zip(neuron.in_edges, flags):
            assert flag == (abs(prev[src] * w) >= rowmax)

    def test_nested_in_theta_and_matches_brute_force(self, rng):
        for _ in range(8):
            net, *_ = random_dense_net(rng)
            x = rng.uniform(-1, 1, net.input_width)
            trace = forward(net, x)
            previous = None
            for theta in (0.0, 0.25, 0.5, 0.75, 1.0):
                rel = relevance(net, trace, theta, Scope.ALL_OUTPUTS)
                oracle = brute_force_relevant(net, trace, theta)
                current = set()
                for nid, flags in oracle.items():
                    got = edge_flags(net, rel.local[nid.layer],
                                     nid.layer, net.flat_of(nid))
                    assert list(got) == flags, (theta, nid)
                    current |= {
                        (nid, k) for k, f in enumerate(flags) if f
                    }
                if previous is not None:
                    assert current <= previous
                previous = current

    def test_zero_guard_blocks_all(self):
        spec = uniform_input_spec(["a"], lo=0.0, hi=1.0)
        net = network_from_dense_weights(
            "g", spec,
            [([[1e-15]], [0.0], ActivationKind.LINEAR),
             ([[1.0]], [0.0], ActivationKind.LINEAR)],
        )
        trace = forward(net, [1.0])
        rel = relevance(net, trace, 0.0, Scope.WINNER_ONLY)
        assert not rel.local[1].any()

    def test_scope_winner_vs_all(self, rng):
        net, *_ = random_dense_net(rng, widths=[3, 4, 3])
        x = rng.uniform(-1, 1, 3)
        trace = forward(net, x)
        rel_w = relevance(net, trace, 0.3, Scope.WINNER_ONLY)
        rel_a = relevance(net, trace, 0.3, Scope.ALL_OUTPUTS)
        assert rel_w.retained[-1].sum() == 1
        assert rel_a.retained[-1].sum() == net.layers[-1].width
        # all-outputs retains at least what winner-only does
        for lw, la in zip(rel_w.retained, rel_a.retained):
            assert np.all(la >= lw)

    def test_invalid_theta_rejected(self, rng):
        net, *_ = random_dense_net(rng)
        trace = forward(net, np.zeros(net.input_width))
        for bad in (-0.1, 1.5):
            with pytest.raises(AnalysisError):
                relevance(net, trace, bad, Scope.WINNER_ONLY)

    def test_retained_sets_match_topdown_oracle(self, rng):
        net, *_ = random_dense_net(rng, widths=[4, 5, 4, 3])
        x = rng.uniform(-1, 1, 4)
        trace = forward(net, x)
        rel = relevance(net, trace, 0.5, Scope.WINNER_ONLY)
        oracle = brute_force_relevant(net, trace, 0.5)
        # re-derive every retained set from the per-edge oracle flags
        want = [np.zeros(l.width, dtype=bool) for l in net.layers]
        want[-1][trace.decision_index] = True
        for li in range(len(net.layers) - 1, 0, -1):
            layer = net.layers[li]
            for fi, filt in enumerate(layer.filters):
                for ni, neuron in enumerate(filt.neurons):
                    j = layer.flat_index(fi, ni)
                    if not want[li][j]:
                        continue
                    flags = oracle[NeuronId(li, fi, ni)]
                    for (src, _), f in zip(neuron.in_edges, flags):
                        if f:
                            want[li - 1][src] = True
        for got, exp in zip(rel.retained, want):
            assert np.array_equal(got, exp)

    def test_mass_mode_covers_requested_share(self, rng):
        net, *_ = random_dense_net(rng, widths=[3, 4, 2])
        x = rng.uniform(-1, 1, 3)
        trace = forward(net, x)
        rel = relevance(net, trace, 0.5, Scope.WINNER_ONLY,
                        mode="mass", rho=0.8)
        prev = trace.values[1]
        j = trace.decision_index
        neuron = net.layers[2].filters[0].neurons[j]
        contribs = [abs(prev[s] * w) for s, w in neuron.in_edges]
        total = sum(contribs) + abs(neuron.bias)
        flags = edge_flags(net, rel.local[2], 2, j)
        covered = sum(c for c, f in zip(contribs, flags) if f)
        if total > 1e-12:
            # kept edges plus (maybe) the bias cover at least rho of the mass
            assert covered + abs(neuron.bias) >= 0.8 * total - 1e-12

    def test_mass_mode_requires_rho(self, rng):
        net, *_ = random_dense_net(rng)
        trace = forward(net, np.zeros(net.input_width))
        with pytest.raises(AnalysisError):
            relevance(net, trace, 0.5, Scope.WINNER_ONLY, mode="mass")


class TestScaleInvariance:
    def test_final_layer_scaling_preserves_decision_and_relevance(self, rng):
        from symtree.ir import FilterIR, LayerIR, NeuronIR, NetworkIR

        for _ in range(5):
            net, *_ = random_dense_net(rng, widths=[3, 4, 3])
            x = rng.uniform(-1, 1, 3)
            base_trace = forward(net, x)
            base_rel = relevance(net, base_trace, 0.5, Scope.WINNER_ONLY)
            for c in (0.5, 2.0, 10.0):
                last = net.layers[-1]
                scaled_neurons = tuple(
                    NeuronIR(
                        id=nr.id,
                        in_edges=tuple((s, w * c) for s, w in nr.in_edges),
                        bias=nr.bias * c,
                    )
                    for nr in last.filters[0].neurons
                )
                scaled_layer = LayerIR(
                    index=last.index, kind=last.kind,
                    filters=(FilterIR.of(scaled_neurons),),
                    activation=last.activation,
                )
                scaled = NetworkIR(
                    name=net.name, input_spec=net.input_spec,
                    layers=net.layers[:-1] + (scaled_layer,),
                    output_labels=net.output_labels,
                ).validate()
                trace = forward(scaled, x)
                assert trace.decision_index == base_trace.decision_index
                rel = relevance(scaled, trace, 0.5, Scope.WINNER_ONLY)
                li = len(net.layers) - 1
                assert np.array_equal(rel.local[li], base_rel.local[li])
                assert np.array_equal(rel.retained[li - 1],
                                      base_rel.retained[li - 1])
