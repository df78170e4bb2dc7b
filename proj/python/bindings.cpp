// SPDX-License-Identifier: Apache-2.0
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "amos/cli.hpp"
#include "amos/compile.hpp"
#include "amos/graph.hpp"
#include "amos/io.hpp"
#include "amos/sim.hpp"
#include "amos/train.hpp"
#include "amos/unit.hpp"

namespace py = pybind11;
using namespace amos;

namespace {

Matrix matrix_from_rows(const std::vector<std::vector<double>> &rows)
{
	if (rows.empty() || rows[0].empty()) {
		throw std::invalid_argument("weights must be a non-empty nested list");
	}
	Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
	for (std::size_t r = 0; r < rows.size(); ++r) {
		if (rows[r].size() != rows[0].size()) {
			throw std::invalid_argument("weight rows have unequal lengths");
		}
		for (std::size_t c = 0; c < rows[r].size(); ++c) {
			m(static_cast<int>(r), static_cast<int>(c)) = rows[r][c];
		}
	}
	return m;
}

SimMode mode_from_string(const std::string &mode)
{
	if (mode == "pipelined") {
		return SimMode::pipelined;
	}
	if (mode == "single") {
		return SimMode::single;
	}
	throw std::invalid_argument("mode must be 'pipelined' or 'single'");
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
	m.doc() = "Spiking subcircuits that emulate ANN gates with at most one "
	          "spike per neuron, an ANN-to-SNN compiler and a clocked "
	          "pipelined simulator";

	py::enum_<GateKind>(m, "GateKind")
	    .value("relu", GateKind::relu)
	    .value("sigmoid", GateKind::sigmoid)
	    .value("swish", GateKind::swish)
	    .value("mult", GateKind::mult)
	    .value("identity", GateKind::identity);
	m.def("gate_kind_from_string", &gate_kind_from_string);

	py::class_<AmosUnitParams>(m, "AmosUnitParams")
	    .def(py::init<>())
	    .def_readwrite("arity", &AmosUnitParams::arity)
	    .def_readwrite("K", &AmosUnitParams::K)
	    .def_readwrite("c", &AmosUnitParams::c)
	    .def_readwrite("c2", &AmosUnitParams::c2)
	    .def_readwrite("d", &AmosUnitParams::d)
	    .def_readwrite("h", &AmosUnitParams::h)
	    .def_readwrite("T", &AmosUnitParams::T)
	    .def_readwrite("kind", &AmosUnitParams::kind)
	    .def_readwrite("domain", &AmosUnitParams::domain)
	    .def("validate", &AmosUnitParams::validate)
	    .def("__repr__", [](const AmosUnitParams &p) {
		    return "<AmosUnitParams kind=" + to_string(p.kind) +
		           " K=" + std::to_string(p.K) + ">";
	    });

	py::class_<UnitEvaluation>(m, "UnitEvaluation")
	    .def_readonly("y", &UnitEvaluation::y)
	    .def_readonly("z", &UnitEvaluation::z)
	    .def_readonly("spike_count", &UnitEvaluation::spike_count);

	m.def("heaviside", &heaviside, py::arg("v"));
	m.def("evaluate_unit", &evaluate_unit, py::arg("params"), py::arg("x"),
	      py::arg("x2") = std::nullopt);
	m.def("build_relu_unit", &build_relu_unit, py::arg("k"), py::arg("alpha"));
	m.def("parameter_count", &parameter_count, py::arg("arity"), py::arg("k"));
	m.def("reference_activation", &reference_activation, py::arg("kind"),
	      py::arg("x"), py::arg("x2") = std::nullopt);

	py::class_<TargetFunction>(m, "TargetFunction")
	    .def(py::init<>())
	    .def_readwrite("arity", &TargetFunction::arity)
	    .def_readwrite("domain", &TargetFunction::domain)
	    .def_readwrite("kind", &TargetFunction::kind)
	    .def_readwrite("tabulated", &TargetFunction::tabulated)
	    .def_static("named",
	                py::overload_cast<GateKind>(&TargetFunction::named))
	    .def_static(
	        "named",
	        py::overload_cast<GateKind, std::vector<std::array<double, 2>>>(
	            &TargetFunction::named))
	    .def("__call__", &TargetFunction::operator(), py::arg("x"),
	         py::arg("x2") = 0.0);

	py::class_<TrainConfig>(m, "TrainConfig")
	    .def(py::init<>())
	    .def_readwrite("K", &TrainConfig::K)
	    .def_readwrite("sample_count", &TrainConfig::sample_count)
	    .def_readwrite("epochs", &TrainConfig::epochs)
	    .def_readwrite("learning_rate", &TrainConfig::learning_rate)
	    .def_readwrite("batch_size", &TrainConfig::batch_size)
	    .def_readwrite("gamma", &TrainConfig::gamma)
	    .def_readwrite("rng_seed", &TrainConfig::rng_seed)
	    .def_readwrite("init_scheme", &TrainConfig::init_scheme);
	m.def("default_train_config", &default_train_config, py::arg("kind"),
	      py::arg("k"));

	py::class_<TrainReport>(m, "TrainReport")
	    .def_readonly("params", &TrainReport::params)
	    .def_readonly("mse_history", &TrainReport::mse_history)
	    .def_readonly("final_grid_mse", &TrainReport::final_grid_mse);

	m.def("pseudo_derivative", &pseudo_derivative, py::arg("v"),
	      py::arg("gamma"));
	m.def("soft_step", &soft_step, py::arg("v"), py::arg("gamma"));
	m.def("train_unit", &train_unit, py::arg("target"), py::arg("config"),
	      py::call_guard<py::gil_scoped_release>());
	m.def("eval_mse", &eval_mse, py::arg("params"), py::arg("target"),
	      py::arg("grid_points_per_axis"));

	py::class_<AnnGraph>(m, "AnnGraph")
	    .def(py::init<>())
	    .def("add_input", &AnnGraph::add_input, py::arg("dim"))
	    .def(
	        "add_dense",
	        [](AnnGraph &g, int input,
	           const std::vector<std::vector<double>> &weights,
	           const Vector &bias) {
		        return g.add_dense(input, matrix_from_rows(weights), bias);
	        },
	        py::arg("input"), py::arg("weights"), py::arg("bias"))
	    .def("add_activation", &AnnGraph::add_activation, py::arg("input"),
	         py::arg("kind"))
	    .def("add_add", &AnnGraph::add_add, py::arg("lhs"), py::arg("rhs"))
	    .def("add_multiply", &AnnGraph::add_multiply, py::arg("lhs"),
	         py::arg("rhs"))
	    .def("add_global_avg_pool", &AnnGraph::add_global_avg_pool,
	         py::arg("input"), py::arg("groups"))
	    .def(
	        "add_se_block",
	        [](AnnGraph &g, int input, int pool_groups,
	           const std::vector<std::vector<double>> &reduce_w,
	           const Vector &reduce_b,
	           const std::vector<std::vector<double>> &expand_w,
	           const Vector &expand_b) {
		        return g.add_se_block(input, pool_groups,
		                              matrix_from_rows(reduce_w), reduce_b,
		                              matrix_from_rows(expand_w), expand_b);
	        },
	        py::arg("input"), py::arg("pool_groups"), py::arg("reduce_weights"),
	        py::arg("reduce_bias"), py::arg("expand_weights"),
	        py::arg("expand_bias"))
	    .def("set_output", &AnnGraph::set_output, py::arg("input"))
	    .def("validate", &AnnGraph::validate)
	    .def("input_dim", &AnnGraph::input_dim)
	    .def("node_dim", &AnnGraph::node_dim, py::arg("id"))
	    .def_readonly("output_id", &AnnGraph::output_id)
	    .def("__len__",
	         [](const AnnGraph &g) { return g.nodes.size(); });

	m.def("ann_forward", &ann_forward, py::arg("graph"), py::arg("input"));
	m.def("collapse_linear", &collapse_linear, py::arg("graph"));
	m.def("expand_se_blocks", &expand_se_blocks, py::arg("graph"));

	py::class_<UnitLibrary>(m, "UnitLibrary")
	    .def(py::init<>())
	    .def("insert", &UnitLibrary::insert, py::arg("params"))
	    .def("has", &UnitLibrary::has, py::arg("kind"))
	    .def("require", &UnitLibrary::require, py::arg("kind"),
	         py::return_value_policy::copy);

	py::class_<SpikingNetwork>(m, "SpikingNetwork")
	    .def_readonly("input_dim", &SpikingNetwork::input_dim)
	    .def_readonly("latency", &SpikingNetwork::latency)
	    .def_property_readonly(
	        "num_gates",
	        [](const SpikingNetwork &n) { return n.gates.size(); })
	    .def_property_readonly(
	        "num_input_taps",
	        [](const SpikingNetwork &n) { return n.input_taps.size(); })
	    .def("validate", &SpikingNetwork::validate)
	    .def("max_delay", &SpikingNetwork::max_delay);

	py::class_<UnitInstanceInfo>(m, "UnitInstanceInfo")
	    .def_readonly("node_id", &UnitInstanceInfo::node_id)
	    .def_readonly("lane", &UnitInstanceInfo::lane)
	    .def_readonly("kind", &UnitInstanceInfo::kind)
	    .def_readonly("K", &UnitInstanceInfo::K)
	    .def_readonly("stage_latency", &UnitInstanceInfo::stage_latency)
	    .def_readonly("input_step", &UnitInstanceInfo::input_step);

	py::class_<ConversionReport>(m, "ConversionReport")
	    .def_readonly("converted_gate_count",
	                  &ConversionReport::converted_gate_count)
	    .def_readonly("neuron_count", &ConversionReport::neuron_count)
	    .def_readonly("synapse_count", &ConversionReport::synapse_count)
	    .def_readonly("latency", &ConversionReport::latency)
	    .def_readonly("unit_k", &ConversionReport::unit_k)
	    .def_readonly("stages", &ConversionReport::stages);

	m.def("compile_graph", &compile_graph, py::arg("graph"), py::arg("library"));
	m.def("distinct_delays", &distinct_delays, py::arg("network"));

	py::class_<SimReport>(m, "SimReport")
	    .def_readonly("mode", &SimReport::mode)
	    .def_readonly("n_inputs", &SimReport::n_inputs)
	    .def_readonly("latency", &SimReport::latency)
	    .def_readonly("first_output_step", &SimReport::first_output_step)
	    .def_readonly("steps", &SimReport::steps)
	    .def_readonly("outputs", &SimReport::outputs)
	    .def_readonly("total_spikes", &SimReport::total_spikes)
	    .def_readonly("idle_spikes", &SimReport::idle_spikes)
	    .def_readonly("spikes_per_inference", &SimReport::spikes_per_inference)
	    .def_readonly("peak_simultaneous_spikes",
	                  &SimReport::peak_simultaneous_spikes)
	    .def_readonly("raster", &SimReport::raster);

	m.def(
	    "run_stream",
	    [](const SpikingNetwork &net, const std::vector<Vector> &inputs,
	       const std::string &mode, bool record_raster) {
		    SimOptions options;
		    options.record_raster = record_raster;
		    return run_stream(net, inputs, mode_from_string(mode), options);
	    },
	    py::arg("network"), py::arg("inputs"), py::arg("mode") = "pipelined",
	    py::arg("record_raster") = false,
	    py::call_guard<py::gil_scoped_release>());

	py::class_<SpikeCounts>(m, "SpikeCounts")
	    .def_readonly("per_inference", &SpikeCounts::per_inference)
	    .def_readonly("total", &SpikeCounts::total)
	    .def_readonly("idle", &SpikeCounts::idle);
	m.def("count_spikes", &count_spikes, py::arg("report"));

	py::class_<EquivalenceReport>(m, "EquivalenceReport")
	    .def_readonly("samples", &EquivalenceReport::samples)
	    .def_readonly("max_abs_deviation", &EquivalenceReport::max_abs_deviation)
	    .def_readonly("mean_abs_deviation",
	                  &EquivalenceReport::mean_abs_deviation)
	    .def_readonly("agreement", &EquivalenceReport::agreement)
	    .def_readonly("unit_mse", &EquivalenceReport::unit_mse);
	m.def("verify_equivalence", &verify_equivalence, py::arg("graph"),
	      py::arg("network"), py::arg("library"), py::arg("inputs"),
	      py::call_guard<py::gil_scoped_release>());

	py::class_<LoadedNetwork>(m, "LoadedNetwork")
	    .def_readonly("net", &LoadedNetwork::net)
	    .def_readonly("lib", &LoadedNetwork::lib);

	m.def("save_params", &save_params, py::arg("path"), py::arg("params"));
	m.def("load_params", &load_params, py::arg("path"));
	m.def("save_graph", &save_graph, py::arg("path"), py::arg("graph"));
	m.def("load_graph", &load_graph, py::arg("path"));
	m.def(
	    "save_network",
	    [](const std::string &path, const SpikingNetwork &net,
	       const UnitLibrary *lib) { save_network(path, net, lib); },
	    py::arg("path"), py::arg("network"), py::arg("library") = nullptr);
	m.def("load_network", &load_network, py::arg("path"));

	m.def(
	    "run_cli",
	    [](const std::vector<std::string> &args) { return run_cli(args); },
	    py::arg("args"), "Invoke the command-line surface in-process");
}
