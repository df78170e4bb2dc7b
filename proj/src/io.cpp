// SPDX-License-Identifier: Apache-2.0
#include "amos/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <variant>

#include "amos/errors.hpp"

namespace amos {

namespace {

using njson = nlohmann::json;

const njson &require(const njson &j, const char *field, int node = -1)
{
	if (!j.is_object() || !j.contains(field)) {
		throw SchemaError("missing field", node, field);
	}
	return j.at(field);
}

double as_double(const njson &j, const char *field, int node = -1)
{
	const njson &v = require(j, field, node);
	if (!v.is_number()) {
		throw SchemaError("expected a number", node, field);
	}
	const double x = v.get<double>();
	if (!std::isfinite(x)) {
		throw SchemaError("expected a finite number", node, field);
	}
	return x;
}

long long as_int(const njson &j, const char *field, int node = -1)
{
	const njson &v = require(j, field, node);
	if (!v.is_number_integer()) {
		throw SchemaError("expected an integer", node, field);
	}
	return v.get<long long>();
}

std::string as_string(const njson &j, const char *field, int node = -1)
{
	const njson &v = require(j, field, node);
	if (!v.is_string()) {
		throw SchemaError("expected a string", node, field);
	}
	return v.get<std::string>();
}

std::vector<double> as_double_vec(const njson &j, const char *field,
                                  int node = -1)
{
	const njson &v = require(j, field, node);
	if (!v.is_array()) {
		throw SchemaError("expected an array of numbers", node, field);
	}
	std::vector<double> out;
	out.reserve(v.size());
	for (const auto &e : v) {
		if (!e.is_number() || !std::isfinite(e.get<double>())) {
			throw SchemaError("expected finite numbers", node, field);
		}
		out.push_back(e.get<double>());
	}
	return out;
}

Matrix as_matrix(const njson &j, const char *field, int node = -1)
{
	const njson &v = require(j, field, node);
	if (!v.is_array() || v.empty()) {
		throw SchemaError("expected a non-empty nested array", node, field);
	}
	Matrix m;
	m.rows = static_cast<int>(v.size());
	for (const auto &row : v) {
		if (!row.is_array()) {
			throw SchemaError("expected nested arrays", node, field);
		}
		if (m.cols == 0) {
			m.cols = static_cast<int>(row.size());
			if (m.cols == 0) {
				throw SchemaError("matrix rows must be non-empty", node,
				                  field);
			}
		}
		else if (static_cast<int>(row.size()) != m.cols) {
			throw SchemaError("matrix rows have unequal lengths", node, field);
		}
		for (const auto &e : row) {
			if (!e.is_number() || !std::isfinite(e.get<double>())) {
				throw SchemaError("expected finite numbers", node, field);
			}
			m.data.push_back(e.get<double>());
		}
	}
	return m;
}

ojson matrix_to_json(const Matrix &m)
{
	ojson rows = ojson::array();
	for (int r = 0; r < m.rows; ++r) {
		ojson row = ojson::array();
		for (int c = 0; c < m.cols; ++c) {
			row.push_back(m(r, c));
		}
		rows.push_back(std::move(row));
	}
	return rows;
}

GateKind kind_from_field(const njson &j, const char *field, int node = -1)
{
	const std::string s = as_string(j, field, node);
	try {
		return gate_kind_from_string(s);
	}
	catch (const std::invalid_argument &) {
		throw SchemaError("unknown gate kind '" + s + "'", node, field);
	}
}

}  // namespace

ojson params_to_json(const AmosUnitParams &params)
{
	params.validate();
	ojson j;
	j["kind"] = to_string(params.kind);
	j["arity"] = params.arity;
	j["K"] = params.K;
	j["c"] = params.c;
	if (params.arity == 2) {
		j["c2"] = params.c2;
	}
	j["d"] = params.d;
	j["h"] = params.h;
	j["T"] = params.T;
	if (!params.domain.empty()) {
		ojson dom = ojson::array();
		for (const auto &iv : params.domain) {
			dom.push_back(ojson::array({iv[0], iv[1]}));
		}
		j["domain"] = std::move(dom);
	}
	return j;
}

AmosUnitParams params_from_json(const njson &j)
{
	AmosUnitParams p;
	p.kind = kind_from_field(j, "kind");
	p.arity = static_cast<int>(as_int(j, "arity"));
	p.K = static_cast<int>(as_int(j, "K"));
	p.c = as_double_vec(j, "c");
	if (p.arity == 2) {
		p.c2 = as_double_vec(j, "c2");
	}
	p.d = as_double_vec(j, "d");
	p.h = as_double_vec(j, "h");
	p.T = as_double_vec(j, "T");
	if (j.contains("domain")) {
		const njson &dom = j.at("domain");
		if (!dom.is_array()) {
			throw SchemaError("expected an array of intervals", -1, "domain");
		}
		for (const auto &iv : dom) {
			if (!iv.is_array() || iv.size() != 2 || !iv[0].is_number() ||
			    !iv[1].is_number()) {
				throw SchemaError("expected [lo, hi] pairs", -1, "domain");
			}
			p.domain.push_back({iv[0].get<double>(), iv[1].get<double>()});
		}
	}
	try {
		p.validate();
	}
	catch (const std::invalid_argument &e) {
		throw SchemaError(std::string("invalid unit parameters: ") + e.what());
	}
	return p;
}

ojson graph_to_json(const AnnGraph &g)
{
	g.validate();
	ojson j;
	j["input_dim"] = g.input_dim();
	j["output_id"] = g.output_id;
	ojson nodes = ojson::array();
	for (int id = 0; id < static_cast<int>(g.nodes.size()); ++id) {
		ojson n;
		n["id"] = id;
		std::visit(
		    [&](const auto &node) {
			    using T = std::decay_t<decltype(node)>;
			    if constexpr (std::is_same_v<T, InputNode>) {
				    n["kind"] = "input";
				    n["inputs"] = ojson::array();
				    n["dim"] = node.dim;
			    }
			    else if constexpr (std::is_same_v<T, DenseNode>) {
				    n["kind"] = "dense";
				    n["inputs"] = ojson::array({node.input});
				    n["weights"] = matrix_to_json(node.weights);
				    n["bias"] = node.bias;
			    }
			    else if constexpr (std::is_same_v<T, ActivationNode>) {
				    n["kind"] = "activation";
				    n["inputs"] = ojson::array({node.input});
				    n["activation"] = to_string(node.kind);
			    }
			    else if constexpr (std::is_same_v<T, AddNode>) {
				    n["kind"] = "add";
				    n["inputs"] = ojson::array({node.lhs, node.rhs});
			    }
			    else if constexpr (std::is_same_v<T, MultiplyNode>) {
				    n["kind"] = "multiply";
				    n["inputs"] = ojson::array({node.lhs, node.rhs});
			    }
			    else if constexpr (std::is_same_v<T, GlobalAvgPoolNode>) {
				    n["kind"] = "global_avg_pool";
				    n["inputs"] = ojson::array({node.input});
				    n["groups"] = node.groups;
			    }
			    else if constexpr (std::is_same_v<T, SeBlockNode>) {
				    n["kind"] = "se_block";
				    n["inputs"] = ojson::array({node.input});
				    n["pool_groups"] = node.pool_groups;
				    n["reduce_weights"] = matrix_to_json(node.reduce_weights);
				    n["reduce_bias"] = node.reduce_bias;
				    n["expand_weights"] = matrix_to_json(node.expand_weights);
				    n["expand_bias"] = node.expand_bias;
			    }
			    else {
				    n["kind"] = "output";
				    n["inputs"] = ojson::array({node.input});
			    }
		    },
		    g.nodes[id]);
		nodes.push_back(std::move(n));
	}
	j["nodes"] = std::move(nodes);
	return j;
}

namespace {

std::vector<int> node_input_ids(const njson &n, int id, std::size_t expected)
{
	const njson &inputs = require(n, "inputs", id);
	if (!inputs.is_array() || inputs.size() != expected) {
		throw SchemaError("expected " + std::to_string(expected) +
		                      " predecessor reference(s)",
		                  id, "inputs");
	}
	std::vector<int> out;
	for (const auto &e : inputs) {
		if (!e.is_number_integer()) {
			throw SchemaError("expected integer node ids", id, "inputs");
		}
		out.push_back(e.get<int>());
	}
	return out;
}

}  // namespace

AnnGraph graph_from_json(const njson &j)
{
	AnnGraph g;
	const njson &nodes = require(j, "nodes");
	if (!nodes.is_array()) {
		throw SchemaError("'nodes' must be an array");
	}
	int id = 0;
	for (const auto &n : nodes) {
		if (!n.is_object()) {
			throw SchemaError("node entries must be objects", id);
		}
		if (as_int(n, "id", id) != id) {
			throw SchemaError("node ids must be consecutive from 0", id, "id");
		}
		const std::string kind = as_string(n, "kind", id);
		if (kind == "input") {
			g.add_input(static_cast<int>(as_int(n, "dim", id)));
		}
		else if (kind == "dense") {
			const auto in = node_input_ids(n, id, 1);
			std::vector<double> bias = as_double_vec(n, "bias", id);
			g.add_dense(in[0], as_matrix(n, "weights", id), std::move(bias));
		}
		else if (kind == "activation") {
			const auto in = node_input_ids(n, id, 1);
			g.add_activation(in[0], kind_from_field(n, "activation", id));
		}
		else if (kind == "add") {
			const auto in = node_input_ids(n, id, 2);
			g.add_add(in[0], in[1]);
		}
		else if (kind == "multiply") {
			const auto in = node_input_ids(n, id, 2);
			g.add_multiply(in[0], in[1]);
		}
		else if (kind == "global_avg_pool") {
			const auto in = node_input_ids(n, id, 1);
			g.add_global_avg_pool(in[0],
			                      static_cast<int>(as_int(n, "groups", id)));
		}
		else if (kind == "se_block") {
			const auto in = node_input_ids(n, id, 1);
			g.add_se_block(in[0],
			               static_cast<int>(as_int(n, "pool_groups", id)),
			               as_matrix(n, "reduce_weights", id),
			               as_double_vec(n, "reduce_bias", id),
			               as_matrix(n, "expand_weights", id),
			               as_double_vec(n, "expand_bias", id));
		}
		else if (kind == "output") {
			const auto in = node_input_ids(n, id, 1);
			g.set_output(in[0]);
		}
		else {
			throw SchemaError("unknown node kind '" + kind + "'", id, "kind");
		}
		++id;
	}
	if (j.contains("output_id") &&
	    as_int(j, "output_id") != g.output_id) {
		throw SchemaError("output_id does not match the output node", -1,
		                  "output_id");
	}
	try {
		g.validate();
		if (j.contains("input_dim") &&
		    as_int(j, "input_dim") != g.input_dim()) {
			throw SchemaError("input_dim does not match the input node", -1,
			                  "input_dim");
		}
	}
	catch (const std::invalid_argument &e) {
		throw SchemaError(std::string("invalid graph: ") + e.what());
	}
	return g;
}

ojson network_to_json(const SpikingNetwork &net, const UnitLibrary *lib,
                      const ConversionReport *report)
{
	ojson j;
	j["input_dim"] = net.input_dim;
	j["latency"] = net.latency;
	ojson gates = ojson::array();
	for (int g = 0; g < static_cast<int>(net.gates.size()); ++g) {
		ojson gate;
		gate["id"] = g;
		gate["threshold"] = net.gates[g].threshold;
		ojson syns = ojson::array();
		for (const auto &syn : net.gates[g].synapses) {
			ojson s;
			s["src"] = syn.src;
			s["w"] = syn.weight;
			s["delay"] = syn.delay;
			syns.push_back(std::move(s));
		}
		gate["synapses"] = std::move(syns);
		gates.push_back(std::move(gate));
	}
	j["gates"] = std::move(gates);
	ojson taps = ojson::array();
	for (const auto &tap : net.input_taps) {
		ojson t;
		t["gate"] = tap.gate;
		t["input"] = tap.input;
		t["w"] = tap.weight;
		t["delay"] = tap.delay;
		taps.push_back(std::move(t));
	}
	j["input_taps"] = std::move(taps);
	ojson readout = ojson::array();
	for (const auto &lane : net.readout) {
		ojson l;
		l["bias"] = lane.bias;
		ojson terms = ojson::array();
		for (const auto &term : lane.terms) {
			ojson t;
			if (term.from_input) {
				t["input"] = term.src;
			}
			else {
				t["gate"] = term.src;
			}
			t["w"] = term.weight;
			t["delay"] = term.delay;
			terms.push_back(std::move(t));
		}
		l["terms"] = std::move(terms);
		readout.push_back(std::move(l));
	}
	j["readout"] = std::move(readout);
	j["fire_offsets"] = net.fire_offset;
	if (lib != nullptr && !lib->units.empty()) {
		ojson units;
		for (const auto &[kind, params] : lib->units) {
			units[kind] = params_to_json(params);
		}
		j["unit_library"] = std::move(units);
	}
	if (report != nullptr) {
		j["report"] = conversion_report_to_json(*report);
	}
	return j;
}

LoadedNetwork network_from_json(const njson &j)
{
	LoadedNetwork out;
	SpikingNetwork &net = out.net;
	net.input_dim = static_cast<int>(as_int(j, "input_dim"));
	net.latency = static_cast<int>(as_int(j, "latency"));
	const njson &gates = require(j, "gates");
	if (!gates.is_array()) {
		throw SchemaError("'gates' must be an array");
	}
	int id = 0;
	for (const auto &gj : gates) {
		if (as_int(gj, "id", id) != id) {
			throw SchemaError("gate ids must be consecutive from 0", id, "id");
		}
		ThresholdGate gate;
		gate.threshold = as_double(gj, "threshold", id);
		const njson &syns = require(gj, "synapses", id);
		if (!syns.is_array()) {
			throw SchemaError("'synapses' must be an array", id, "synapses");
		}
		for (const auto &sj : syns) {
			GateSynapse syn;
			syn.src = static_cast<int>(as_int(sj, "src", id));
			syn.weight = as_double(sj, "w", id);
			syn.delay = static_cast<int>(as_int(sj, "delay", id));
			if (syn.src < 0 || syn.src >= id) {
				throw SchemaError("synapse source must precede its gate", id,
				                  "src");
			}
			gate.synapses.push_back(syn);
		}
		net.gates.push_back(std::move(gate));
		++id;
	}
	for (const auto &tj : require(j, "input_taps")) {
		InputTap tap;
		tap.gate = static_cast<int>(as_int(tj, "gate"));
		tap.input = static_cast<int>(as_int(tj, "input"));
		tap.weight = as_double(tj, "w");
		tap.delay = static_cast<int>(as_int(tj, "delay"));
		if (tap.gate < 0 || tap.gate >= id) {
			throw SchemaError("tap gate out of range", tap.gate, "gate");
		}
		net.input_taps.push_back(tap);
	}
	for (const auto &lj : require(j, "readout")) {
		ReadoutLane lane;
		lane.bias = as_double(lj, "bias");
		for (const auto &tj : require(lj, "terms")) {
			ReadoutTerm term;
			if (tj.contains("input")) {
				term.from_input = true;
				term.src = static_cast<int>(as_int(tj, "input"));
			}
			else {
				term.from_input = false;
				term.src = static_cast<int>(as_int(tj, "gate"));
			}
			term.weight = as_double(tj, "w");
			term.delay = static_cast<int>(as_int(tj, "delay"));
			lane.terms.push_back(term);
		}
		net.readout.push_back(std::move(lane));
	}
	if (j.contains("fire_offsets")) {
		const auto offsets = as_double_vec(j, "fire_offsets");
		for (double v : offsets) {
			net.fire_offset.push_back(static_cast<int>(v));
		}
	}
	else {
		// Derive: a gate evaluates wavefront 0 when its inputs arrive.
		net.fire_offset.assign(net.gates.size(), 0);
		for (const auto &tap : net.input_taps) {
			net.fire_offset[tap.gate] =
			    std::max(net.fire_offset[tap.gate], tap.delay);
		}
		for (int g = 0; g < static_cast<int>(net.gates.size()); ++g) {
			for (const auto &syn : net.gates[g].synapses) {
				net.fire_offset[g] = std::max(
				    net.fire_offset[g], net.fire_offset[syn.src] + syn.delay);
			}
		}
	}
	if (net.fire_offset.size() != net.gates.size()) {
		throw SchemaError("fire_offsets length mismatch", -1, "fire_offsets");
	}
	if (j.contains("unit_library")) {
		for (const auto &[kind, pj] : j.at("unit_library").items()) {
			AmosUnitParams params = params_from_json(pj);
			if (to_string(params.kind) != kind) {
				throw SchemaError("unit library key does not match its kind",
				                  -1, "unit_library");
			}
			out.lib.units[kind] = std::move(params);
		}
	}
	return out;
}

ojson conversion_report_to_json(const ConversionReport &report)
{
	ojson j;
	j["converted_gates"] = report.converted_gate_count;
	j["neurons"] = report.neuron_count;
	j["synapses"] = report.synapse_count;
	j["latency"] = report.latency;
	ojson ks;
	for (const auto &[kind, k] : report.unit_k) {
		ks[kind] = k;
	}
	j["unit_k"] = std::move(ks);
	ojson stages = ojson::array();
	for (const auto &stage : report.stages) {
		ojson s;
		s["node"] = stage.node_id;
		s["lane"] = stage.lane;
		s["kind"] = stage.kind;
		s["k"] = stage.K;
		s["latency"] = stage.stage_latency;
		s["input_step"] = stage.input_step;
		s["first_gate"] = stage.first_gate;
		stages.push_back(std::move(s));
	}
	j["per_layer_latency"] = std::move(stages);
	return j;
}

ojson sim_report_to_json(const SimReport &report)
{
	ojson j;
	j["mode"] = report.mode;
	j["n_inputs"] = report.n_inputs;
	j["latency"] = report.latency;
	j["first_output_step"] = report.first_output_step;
	j["steps"] = report.steps;
	j["total_spikes"] = report.total_spikes;
	j["idle_spikes"] = report.idle_spikes;
	j["spikes_per_inference"] = report.spikes_per_inference;
	j["peak_simultaneous_spikes"] = report.peak_simultaneous_spikes;
	ojson outputs = ojson::array();
	for (const auto &out : report.outputs) {
		outputs.push_back(out);
	}
	j["outputs"] = std::move(outputs);
	return j;
}

ojson train_report_to_json(const TrainReport &report)
{
	ojson j;
	j["epochs"] = report.mse_history.size();
	j["final_grid_mse"] = report.final_grid_mse;
	j["mse_history"] = report.mse_history;
	j["params"] = params_to_json(report.params);
	return j;
}

ojson train_config_to_json(const TrainConfig &cfg)
{
	ojson j;
	j["K"] = cfg.K;
	j["sample_count"] = cfg.sample_count;
	j["epochs"] = cfg.epochs;
	j["learning_rate"] = cfg.learning_rate;
	j["batch_size"] = cfg.batch_size;
	j["gamma"] = cfg.gamma;
	j["rng_seed"] = cfg.rng_seed;
	j["init_scheme"] = cfg.init_scheme;
	return j;
}

TrainConfig train_config_from_json(const njson &j, const TrainConfig &defaults)
{
	TrainConfig cfg = defaults;
	if (!j.is_object()) {
		throw SchemaError("train config must be a JSON object");
	}
	if (j.contains("K")) cfg.K = static_cast<int>(as_int(j, "K"));
	if (j.contains("sample_count"))
		cfg.sample_count = static_cast<int>(as_int(j, "sample_count"));
	if (j.contains("epochs")) cfg.epochs = static_cast<int>(as_int(j, "epochs"));
	if (j.contains("learning_rate"))
		cfg.learning_rate = as_double(j, "learning_rate");
	if (j.contains("batch_size"))
		cfg.batch_size = static_cast<int>(as_int(j, "batch_size"));
	if (j.contains("gamma")) cfg.gamma = as_double(j, "gamma");
	if (j.contains("rng_seed"))
		cfg.rng_seed = static_cast<std::uint64_t>(as_int(j, "rng_seed"));
	if (j.contains("init_scheme")) cfg.init_scheme = as_string(j, "init_scheme");
	try {
		cfg.validate();
	}
	catch (const std::invalid_argument &e) {
		throw SchemaError(std::string("invalid train config: ") + e.what());
	}
	return cfg;
}

ojson dataset_to_json(const Dataset &data)
{
	ojson j;
	ojson inputs = ojson::array();
	for (const auto &v : data.inputs) {
		inputs.push_back(v);
	}
	j["inputs"] = std::move(inputs);
	if (!data.labels.empty()) {
		j["labels"] = data.labels;
	}
	return j;
}

Dataset dataset_from_json(const njson &j)
{
	Dataset data;
	const njson &inputs = require(j, "inputs");
	if (!inputs.is_array()) {
		throw SchemaError("'inputs' must be an array of vectors");
	}
	for (const auto &v : inputs) {
		if (!v.is_array()) {
			throw SchemaError("'inputs' must contain arrays");
		}
		Vector vec;
		for (const auto &e : v) {
			if (!e.is_number() || !std::isfinite(e.get<double>())) {
				throw SchemaError("dataset inputs must be finite numbers");
			}
			vec.push_back(e.get<double>());
		}
		data.inputs.push_back(std::move(vec));
	}
	if (j.contains("labels")) {
		for (const auto &e : j.at("labels")) {
			if (!e.is_number_integer()) {
				throw SchemaError("labels must be integers");
			}
			data.labels.push_back(e.get<int>());
		}
		if (data.labels.size() != data.inputs.size()) {
			throw SchemaError("labels length does not match inputs");
		}
	}
	return data;
}

njson load_json_file(const std::string &path)
{
	std::ifstream in(path);
	if (!in) {
		throw SchemaError("cannot open file '" + path + "'");
	}
	njson j;
	try {
		in >> j;
	}
	catch (const njson::parse_error &e) {
		throw SchemaError("JSON parse error in '" + path + "': " + e.what());
	}
	return j;
}

void save_json_file(const std::string &path, const ojson &j)
{
	std::ofstream out(path);
	if (!out) {
		throw SchemaError("cannot write file '" + path + "'");
	}
	out << j.dump(2) << "\n";
}

void save_params(const std::string &path, const AmosUnitParams &params)
{
	save_json_file(path, params_to_json(params));
}

AmosUnitParams load_params(const std::string &path)
{
	return params_from_json(load_json_file(path));
}

void save_graph(const std::string &path, const AnnGraph &g)
{
	save_json_file(path, graph_to_json(g));
}

AnnGraph load_graph(const std::string &path)
{
	return graph_from_json(load_json_file(path));
}

void save_network(const std::string &path, const SpikingNetwork &net,
                  const UnitLibrary *lib, const ConversionReport *report)
{
	save_json_file(path, network_to_json(net, lib, report));
}

LoadedNetwork load_network(const std::string &path)
{
	return network_from_json(load_json_file(path));
}

Dataset load_dataset(const std::string &path)
{
	return dataset_from_json(load_json_file(path));
}

namespace {

void write_csv(const std::string &path, const std::string &content)
{
	std::ofstream out(path);
	if (!out) {
		throw SchemaError("cannot write file '" + path + "'");
	}
	out << content;
}

std::string format_double(double v)
{
	char buf[32];
	std::snprintf(buf, sizeof buf, "%.17g", v);
	return buf;
}

}  // namespace

void write_mse_csv(const std::string &path, const std::vector<double> &history)
{
	std::string content = "epoch,mse\n";
	for (std::size_t i = 0; i < history.size(); ++i) {
		content += std::to_string(i) + "," + format_double(history[i]) + "\n";
	}
	write_csv(path, content);
}

void write_raster_csv(const std::string &path,
                      const std::vector<std::pair<int, int>> &raster)
{
	std::string content = "step,gate\n";
	for (const auto &[step, gate] : raster) {
		content += std::to_string(step) + "," + std::to_string(gate) + "\n";
	}
	write_csv(path, content);
}

}  // namespace amos
