"""End-to-end tests for the .h5 export utility.

These are the only tests that import the deep-learning framework; the
models stay tiny so building, saving, and predicting is fast.
"""

import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from symtree.analysis import forward
from symtree.archive import parse_interchange

SCRIPT = Path(__file__).resolve().parents[1] / "exporter" / "export_model.py"


def run_exporter(*args):
    cmd = [sys.executable, str(SCRIPT), *map(str, args)]
    return subprocess.run(cmd, capture_output=True, text=True)


def flat_input(x):
    # engine input layout is channel-major
    x = np.asarray(x, dtype=np.float64)
    return np.moveaxis(x, -1, 0).reshape(-1)


def report(number, title, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"\n[{status}] criterion {number}: {title} ({detail})")
    assert ok, f"criterion {number}: {title} ({detail})"


@pytest.fixture(scope="module")
def keras():
    os.environ.setdefault("TF_CPP_MIN_LOG_LEVEL", "3")
    import keras

    return keras


@pytest.fixture(scope="module")
def export_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("export")


@pytest.fixture(scope="module")
def dense_case(keras, export_dir):
    keras.utils.set_random_seed(7)
    model = keras.Sequential(
        [
            keras.Input(shape=(3,)),
            keras.layers.Dense(5, activation="tanh", name="fc1"),
            keras.layers.Dense(4, activation="relu", name="fc2"),
            keras.layers.Dense(2, activation="softmax", name="head"),
        ],
        name="mlp",
    )
    h5 = export_dir / "mlp.h5"
    out = export_dir / "mlp.json"
    model.save(h5)
    res = run_exporter(h5, out)
    assert res.returncode == 0, res.stderr
    return model, h5, out, res


@pytest.fixture(scope="module")
def conv_case(keras, export_dir):
    keras.utils.set_random_seed(11)
    model = keras.Sequential(
        [
            keras.Input(shape=(5, 5, 2)),
            keras.layers.Conv2D(3, (2, 2), activation="relu", name="conv"),
            keras.layers.MaxPooling2D((2, 2), name="pool"),
            keras.layers.Flatten(name="flat"),
            keras.layers.Dense(3, activation="softmax", name="head"),
        ],
        name="cnn",
    )
    h5 = export_dir / "cnn.h5"
    out = export_dir / "cnn.json"
    model.save(h5)
    res = run_exporter(h5, out)
    assert res.returncode == 0, res.stderr
    return model, h5, out, res


class TestParity:
    def parity_gap(self, model, doc_path, rng, flatten=None):
        net = parse_interchange(doc_path.read_bytes())
        shape = model.input_shape[1:]
        x = rng.uniform(-1.0, 1.0, size=(100, *shape)).astype(np.float32)
        preds = model.predict(x, verbose=0)
        worst = 0.0
        for row, want in zip(x, preds):
            v = np.asarray(row, dtype=np.float64)
            got = forward(net, flatten(v) if flatten else v).outputs
            worst = max(worst, float(np.max(np.abs(got - want))))
        return worst

    def test_criterion_9_exporter_parity(self, dense_case, conv_case, rng):
        dense_gap = self.parity_gap(dense_case[0], dense_case[2], rng)
        conv_gap = self.parity_gap(conv_case[0], conv_case[2], rng, flat_input)
        report(
            9,
            "exporter parity on tiny Dense and Conv2D models",
            dense_gap <= 1e-5 and conv_gap <= 1e-5,
            f"100 inputs each: dense max |diff| {dense_gap:.3e}, "
            f"conv max |diff| {conv_gap:.3e}, tol 1e-5",
        )

    def test_document_is_engine_parseable(self, dense_case):
        net = parse_interchange(dense_case[2].read_bytes())
        assert net.name == "mlp"
        assert len(net.input_spec) == 3
        assert [len(l.filters[0].neurons) for l in net.layers[1:]] == [5, 4, 2]


class TestManifest:
    def test_manifest_fields(self, dense_case):
        model, h5, out, res = dense_case
        manifest = json.loads(res.stdout)
        assert manifest["source"] == str(h5)
        assert manifest["model"] == "mlp"
        assert manifest["layer_classes"] == [
            "InputLayer(input_layer)",
            "Dense(fc1)",
            "Dense(fc2)",
            "Dense(head)",
        ]
        assert manifest["weight_shapes"]["fc1/kernel"] == [3, 5]
        assert manifest["weight_shapes"]["head/bias"] == [2]
        assert manifest["output_bytes"] == out.stat().st_size

    def test_conv_manifest_shapes(self, conv_case):
        manifest = json.loads(conv_case[3].stdout)
        assert manifest["weight_shapes"]["conv/kernel"] == [2, 2, 2, 3]
        # pool/flatten carry no weights
        assert not any(k.startswith(("pool/", "flat/")) for k in manifest["weight_shapes"])

    def test_export_is_deterministic(self, dense_case, export_dir):
        again = export_dir / "mlp_again.json"
        res = run_exporter(dense_case[1], again)
        assert res.returncode == 0, res.stderr
        assert again.read_bytes() == dense_case[2].read_bytes()


class TestFailures:
    def test_unsupported_layer_named_in_error(self, keras, export_dir):
        model = keras.Sequential(
            [
                keras.Input(shape=(4,)),
                keras.layers.Dense(3, activation="relu", name="fc"),
                keras.layers.Dropout(0.5, name="drop"),
                keras.layers.Dense(2, name="head"),
            ],
            name="dropnet",
        )
        h5 = export_dir / "dropnet.h5"
        model.save(h5)
        out = export_dir / "dropnet.json"
        res = run_exporter(h5, out)
        assert res.returncode == 1
        assert "Dropout" in res.stderr
        assert not out.exists()

    def test_missing_archive_exits_1(self, export_dir):
        res = run_exporter(export_dir / "nope.h5", export_dir / "nope.json")
        assert res.returncode == 1
        assert "error:" in res.stderr

    def test_wrong_argument_count_prints_usage(self):
        res = run_exporter()
        assert res.returncode == 1
        assert "usage:" in res.stderr
