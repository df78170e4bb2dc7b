# SPDX-License-Identifier: Apache-2.0
"""Smoke tests for the Python bindings.

Runs as a plain script (no pytest dependency): every check raises on
failure and the script prints one line per passing group.
"""

import json
import math
import os
import tempfile

import amos


def check(condition, message):
    if not condition:
        raise AssertionError(message)


def test_unit_basics():
    check(amos.heaviside(0.0) == 1.0, "heaviside(0) must be 1")
    check(amos.heaviside(-0.5) == 0.0, "heaviside(-0.5) must be 0")

    params = amos.build_relu_unit(3, 1.0)
    ev = amos.evaluate_unit(params, 0.6)
    check(ev.y == 0.5, f"expected 0.5, got {ev.y}")
    check(list(ev.z) == [1, 0, 0], f"unexpected spikes {list(ev.z)}")
    check(ev.spike_count == 1, "one spike expected")

    check(amos.parameter_count(1, 10) == 75, "relu K=10 has 75 parameters")
    check(amos.parameter_count(2, 40) == 940, "mult K=40 has 940 parameters")
    check(amos.reference_activation(amos.GateKind.sigmoid, 0.0) == 0.5,
          "sigmoid(0) = 0.5")
    check(amos.reference_activation(amos.GateKind.mult, 3.0, -2.0) == -6.0,
          "mult(3,-2) = -6")


def test_training_is_deterministic():
    target = amos.TargetFunction.named(amos.GateKind.sigmoid)
    cfg = amos.TrainConfig()
    cfg.K = 4
    cfg.epochs = 3
    cfg.sample_count = 64
    cfg.batch_size = 16
    cfg.rng_seed = 5
    a = amos.train_unit(target, cfg)
    b = amos.train_unit(target, cfg)
    check(a.mse_history == b.mse_history, "training must be deterministic")
    check(len(a.mse_history) == 3, "one entry per epoch")
    check(a.final_grid_mse == b.final_grid_mse, "grid MSE must match")
    check(all(math.isfinite(v) for v in a.mse_history), "finite history")


def test_compile_and_simulate():
    g = amos.AnnGraph()
    inp = g.add_input(2)
    d1 = g.add_dense(inp, [[1.0, 0.5], [-0.25, 0.75], [0.5, -0.5]],
                     [0.0, 0.1, -0.1])
    a1 = g.add_activation(d1, amos.GateKind.relu)
    d2 = g.add_dense(a1, [[0.5, 0.25, -0.5]], [0.05])
    g.set_output(d2)
    g.validate()

    lib = amos.UnitLibrary()
    lib.insert(amos.build_relu_unit(10, 4.0))
    net, report = amos.compile_graph(g, lib)
    check(net.latency == 11, f"latency must be K+1, got {net.latency}")
    check(net.num_gates == 30, "3 lanes x 10 neurons")
    check(report.neuron_count == 30, "report neuron count")
    check(report.unit_k == {"relu": 10}, "unit K map")
    net.validate()

    inputs = [[0.3, -0.2], [1.0, 1.0], [-0.5, 0.25], [0.0, 0.0]]
    piped = amos.run_stream(net, inputs, "pipelined")
    single = amos.run_stream(net, inputs, "single")
    check(piped.steps == net.latency + len(inputs) - 1, "steps = L + N - 1")
    check(piped.outputs == single.outputs, "pipelined == single outputs")
    check(all(s <= net.num_gates for s in piped.spikes_per_inference),
          "at most one spike per neuron per inference")

    counts = amos.count_spikes(piped)
    check(counts.total == piped.total_spikes, "count_spikes total")

    eq = amos.verify_equivalence(g, net, lib, inputs)
    check(eq.samples == 4, "verified sample count")
    check(eq.max_abs_deviation < 0.05, "tight conversion on this range")


def test_json_round_trip():
    params = amos.build_relu_unit(4, 2.0)
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "params.json")
        amos.save_params(path, params)
        with open(path) as f:
            raw = json.load(f)
        check(raw["K"] == 4, "K field")
        check(raw["kind"] == "relu", "kind tag")
        back = amos.load_params(path)
        check(back.T == params.T, "thresholds survive round-trip")
        check(back.d == params.d, "readout weights survive round-trip")

        g = amos.AnnGraph()
        inp = g.add_input(1)
        act = g.add_activation(inp, amos.GateKind.relu)
        g.set_output(act)
        gpath = os.path.join(tmp, "graph.json")
        amos.save_graph(gpath, g)
        g2 = amos.load_graph(gpath)
        check(len(g2) == len(g), "graph node count survives round-trip")

        lib = amos.UnitLibrary()
        lib.insert(params)
        net, _ = amos.compile_graph(g2, lib)
        npath = os.path.join(tmp, "net.json")
        amos.save_network(npath, net, lib)
        loaded = amos.load_network(npath)
        check(loaded.net.latency == net.latency, "network latency round-trip")
        check(loaded.lib.has(amos.GateKind.relu), "library travels with it")


def test_cli_in_process():
    with tempfile.TemporaryDirectory() as tmp:
        out = os.path.join(tmp, "relu.json")
        code = amos.run_cli(["build-relu", "--k", "10", "--out", out])
        check(code == 0, f"build-relu exit code {code}")
        check(os.path.exists(out), "params file written")
        check(amos.run_cli(["no-such-command"]) == 2, "usage errors exit 2")


def main():
    tests = [
        test_unit_basics,
        test_training_is_deterministic,
        test_compile_and_simulate,
        test_json_round_trip,
        test_cli_in_process,
    ]
    for test in tests:
        test()
        print(f"ok: {test.__name__}")
    print(f"{len(tests)} smoke test groups passed")


if __name__ == "__main__":
    main()
