// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>
#include <set>

#include "amos/compile.hpp"
#include "amos/sim.hpp"
#include "helpers.hpp"

using namespace amos;
using amos::testing::close_rel;

namespace {

/// Input(1) -> Activation(kind) -> Output: the single-unit network.
AnnGraph single_unit_graph(GateKind kind)
{
	AnnGraph g;
	const int in = g.add_input(1);
	const int a = g.add_activation(in, kind);
	g.set_output(a);
	return g;
}

/// Input(2) -> two selector denses -> Multiply -> Output.
AnnGraph mult_graph()
{
	AnnGraph g;
	const int in = g.add_input(2);
	Matrix sel0(1, 2), sel1(1, 2);
	sel0(0, 0) = 1.0;
	sel1(0, 1) = 1.0;
	const int a = g.add_dense(in, sel0, {0.0});
	const int b = g.add_dense(in, sel1, {0.0});
	const int m = g.add_multiply(a, b);
	g.set_output(m);
	return g;
}

}  // namespace

TEST_CASE("a K=1 unit compiles with no laterals and latency 2")
{
	UnitLibrary lib;
	lib.insert(build_relu_unit(1, 2.0));
	auto [net, report] = compile_graph(single_unit_graph(GateKind::relu), lib);
	CHECK(net.gates.size() == 1);
	CHECK(net.gates[0].synapses.empty());
	CHECK(net.latency == 2);
	CHECK(report.latency == 2);
	REQUIRE(report.stages.size() == 1);
	CHECK(report.stages[0].stage_latency == 2);
	// K=1: all delays inid {0, 1} territory.
	const auto delays = distinct_delays(net);
	for (int d : delays) {
		CHECK(d >= 0);
		CHECK(d <= 1);
	}
}

TEST_CASE("the compiled relu K=3 unit streams its quantized output at t=4")
{
	UnitLibrary lib;
	lib.insert(build_relu_unit(3, 1.0));
	auto [net, report] = compile_graph(single_unit_graph(GateKind::relu), lib);
	CHECK(net.latency == 4);
	net.validate();

	// Constant stream of x = 0.6: 0.5 appears at step 4 and stays.
	const std::vector<Vector> inputs(8, Vector{0.6});
	const auto sim = run_stream(net, inputs, SimMode::pipelined);
	CHECK(sim.first_output_step == 4);
	CHECK(sim.steps == 4 + 8 - 1);
	for (const auto &out : sim.outputs) {
		CHECK(out == Vector{0.5});
	}

	// Exactly one spike per presentation for x = 0.6.
	for (long long s : sim.spikes_per_inference) {
		CHECK(s == 1);
	}
}

TEST_CASE("dual-input mult units tap both operands on the same schedule")
{
	UnitLibrary lib;
	const auto mult = amos::testing::random_unit(4, 2, GateKind::mult, 21);
	lib.insert(mult);
	auto [net, report] = compile_graph(mult_graph(), lib);
	net.validate();
	REQUIRE(net.gates.size() == 4);
	// Gate i carries taps from input 0 with weight c_i and input 1 with
	// weight c2_i, arriving at the same step.
	std::vector<std::vector<const InputTap *>> taps(net.gates.size());
	for (const auto &tap : net.input_taps) {
		taps[tap.gate].push_back(&tap);
	}
	for (int i = 0; i < 4; ++i) {
		REQUIRE(taps[i].size() == 2);
		CHECK(taps[i][0]->input == 0);
		CHECK(taps[i][0]->weight == mult.c[i]);
		CHECK(taps[i][1]->input == 1);
		CHECK(taps[i][1]->weight == mult.c2[i]);
		CHECK(taps[i][0]->delay == taps[i][1]->delay);
	}
	CHECK(net.latency == 5);

	// Behaviour matches the reference unit on a few operand pairs.
	for (const auto &[a, b] : std::vector<std::pair<double, double>>{
	         {0.3, -0.7}, {0.0, 0.9}, {-0.5, -0.5}}) {
		const auto sim =
		    run_stream(net, {Vector{a, b}}, SimMode::single);
		CHECK(sim.outputs[0][0] ==
		      doctest::Approx(evaluate_unit(mult, a, b).y).epsilon(1e-12));
	}
}

TEST_CASE("single hidden relu layer: latency 11 and 10 neurons per lane")
{
	std::mt19937_64 rng(6);
	UnitLibrary lib;
	lib.insert(build_relu_unit(10, 8.0));
	AnnGraph g;
	const int in = g.add_input(4);
	const int d1 = g.add_dense(in, amos::testing::random_matrix(5, 4, rng),
	                           amos::testing::random_vector(5, rng));
	const int a = g.add_activation(d1, GateKind::relu);
	const int d2 = g.add_dense(a, amos::testing::random_matrix(3, 5, rng),
	                           amos::testing::random_vector(3, rng));
	g.set_output(d2);
	auto [net, report] = compile_graph(g, lib);
	CHECK(report.latency == 11);
	CHECK(report.neuron_count == 10 * 5);
	CHECK(report.converted_gate_count == 5);
	CHECK(report.unit_k.at("relu") == 10);
	for (const auto &stage : report.stages) {
		CHECK(stage.stage_latency == 11);
	}
	// Single stage of K=10 units: at most K+1 distinct delays.
	CHECK(distinct_delays(net).size() <= 11);
}

TEST_CASE("two stacked relu layers double the latency")
{
	std::mt19937_64 rng(7);
	UnitLibrary lib;
	lib.insert(build_relu_unit(10, 8.0));
	AnnGraph g;
	int cur = g.add_input(3);
	for (int layer = 0; layer < 2; ++layer) {
		cur = g.add_dense(cur, amos::testing::random_matrix(3, 3, rng),
		                  amos::testing::random_vector(3, rng));
		cur = g.add_activation(cur, GateKind::relu);
	}
	g.set_output(cur);
	auto [net, report] = compile_graph(g, lib);
	CHECK(report.latency == 22);
	net.validate();
}

TEST_CASE("SE gating path latency is the sum of sigmoid and mult stages")
{
	UnitLibrary lib;
	lib.insert(amos::testing::random_unit(8, 1, GateKind::sigmoid, 41));
	lib.insert(amos::testing::random_unit(40, 2, GateKind::mult, 42));
	AnnGraph g;
	const int in = g.add_input(1);
	const int se = g.add_se_block(in, 1, Matrix::identity(1), {0.0},
	                              Matrix::identity(1), {0.0});
	g.set_output(se);
	const AnnGraph expanded = expand_se_blocks(g);
	auto [net, report] = compile_graph(expanded, lib);
	CHECK(report.latency == (8 + 1) + (40 + 1));
	CHECK(report.neuron_count == 48);
	net.validate();
}

TEST_CASE("residual branches are delay-padded to meet at the merge")
{
	std::mt19937_64 rng(9);
	const auto lib = amos::testing::test_library();
	AnnGraph g;
	const int in = g.add_input(3);
	const int trunk = g.add_dense(in, amos::testing::random_matrix(3, 3, rng),
	                              amos::testing::random_vector(3, rng));
	int branch = g.add_dense(trunk, amos::testing::random_matrix(3, 3, rng),
	                         amos::testing::random_vector(3, rng));
	branch = g.add_activation(branch, GateKind::relu);
	branch = g.add_dense(branch, amos::testing::random_matrix(3, 3, rng),
	                     amos::testing::random_vector(3, rng));
	const int merged = g.add_add(trunk, branch);
	const int out = g.add_activation(merged, GateKind::sigmoid);
	g.set_output(out);

	auto [net, report] = compile_graph(g, lib);
	net.validate();  // structural retiming balance
	// Deepest path: relu stage then sigmoid stage.
	const int expected =
	    (lib.require(GateKind::relu).K + 1) +
	    (lib.require(GateKind::sigmoid).K + 1);
	CHECK(report.latency == expected);
}

TEST_CASE("missing unit kinds are reported by name")
{
	UnitLibrary lib;
	lib.insert(build_relu_unit(4, 1.0));
	AnnGraph g;
	const int in = g.add_input(2);
	const int a = g.add_activation(in, GateKind::swish);
	g.set_output(a);
	try {
		compile_graph(g, lib);
		FAIL("expected invalid_argument");
	}
	catch (const std::invalid_argument &e) {
		CHECK(std::string(e.what()).find("swish") != std::string::npos);
	}
}

TEST_CASE("compile_graph refuses unexpanded SE macros")
{
	const auto lib = amos::testing::test_library();
	AnnGraph g;
	const int in = g.add_input(1);
	const int se = g.add_se_block(in, 1, Matrix::identity(1), {0.0},
	                              Matrix::identity(1), {0.0});
	g.set_output(se);
	CHECK_THROWS_AS(compile_graph(g, lib), std::invalid_argument);
}

TEST_CASE("distinct_delays of an empty network is empty")
{
	SpikingNetwork net;
	CHECK(distinct_delays(net).empty());
}

TEST_CASE("latency law and retiming balance on random toy graphs")
{
	const auto lib = amos::testing::test_library();
	for (std::uint64_t seed = 100; seed < 125; ++seed) {
		const AnnGraph g = amos::testing::random_toy_graph(seed);
		auto [net, report] = compile_graph(g, lib);
		net.validate();
		CHECK(report.latency ==
		      amos::testing::depth_oracle(g, lib));
		for (const auto &stage : report.stages) {
			CHECK(stage.stage_latency == stage.K + 1);
		}
		long long k_sum = 0;
		for (const auto &stage : report.stages) {
			k_sum += stage.K;
		}
		CHECK(report.neuron_count == k_sum);
		CHECK(report.neuron_count ==
		      static_cast<long long>(net.gates.size()));
	}
}

TEST_CASE("unit parameters are shared across instances of a kind")
{
	// Two relu layers: every gate's threshold pattern repeats per unit, and
	// the report maps the kind to a single K.
	UnitLibrary lib;
	lib.insert(build_relu_unit(4, 2.0));
	std::mt19937_64 rng(3);
	AnnGraph g;
	int cur = g.add_input(2);
	for (int layer = 0; layer < 2; ++layer) {
		cur = g.add_dense(cur, amos::testing::random_matrix(2, 2, rng),
		                  Vector(2, 0.0));
		cur = g.add_activation(cur, GateKind::relu);
	}
	g.set_output(cur);
	auto [net, report] = compile_graph(g, lib);
	CHECK(report.unit_k.size() == 1);
	CHECK(report.unit_k.at("relu") == 4);
	// With zero biases the thresholds repeat the shared parameter vector.
	const auto &expect = lib.require(GateKind::relu).T;
	for (std::size_t unit = 0; unit < net.gates.size() / 4; ++unit) {
		for (int i = 0; i < 4; ++i) {
			CHECK(net.gates[unit * 4 + i].threshold == expect[i]);
		}
	}
}
