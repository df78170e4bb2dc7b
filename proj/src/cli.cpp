// SPDX-License-Identifier: Apache-2.0
#include "amos/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>

#include <CLI11.hpp>

#include "amos/errors.hpp"
#include "amos/sim.hpp"
#include "amos/train.hpp"

namespace amos {

namespace {

struct UsageError : std::runtime_error {
	using std::runtime_error::runtime_error;
};

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag)
{
	if (flag) {
		return *flag;
	}
	if (const char *env = std::getenv("AMOS_SEED")) {
		try {
			return std::stoull(env);
		}
		catch (const std::exception &) {
			throw UsageError("AMOS_SEED is not a valid integer");
		}
	}
	return 1;
}

std::vector<std::array<double, 2>> parse_domain(
    const std::vector<double> &values, int arity)
{
	if (values.empty()) {
		return {};
	}
	if (static_cast<int>(values.size()) != 2 * arity) {
		throw UsageError("--domain expects " + std::to_string(2 * arity) +
		                 " values (lo hi per input)");
	}
	std::vector<std::array<double, 2>> out;
	for (int a = 0; a < arity; ++a) {
		out.push_back({values[2 * a], values[2 * a + 1]});
	}
	return out;
}

std::string default_csv_path(const std::string &params_path)
{
	const auto dot = params_path.rfind('.');
	const std::string stem =
	    dot == std::string::npos ? params_path : params_path.substr(0, dot);
	return stem + "_mse.csv";
}

std::string format_double(double v)
{
	char buf[32];
	std::snprintf(buf, sizeof buf, "%.17g", v);
	return buf;
}

std::string default_report_path(const std::string &params_path)
{
	const auto dot = params_path.rfind('.');
	const std::string stem =
	    dot == std::string::npos ? params_path : params_path.substr(0, dot);
	return stem + "_report.json";
}

void cmd_train_unit(const std::string &kind_str, int k,
                    const std::vector<double> &domain_values,
                    const std::string &config_path, bool closed_form,
                    std::optional<double> alpha,
                    std::optional<std::uint64_t> seed,
                    const CLI::App *sub, TrainConfig flag_cfg,
                    const std::string &out_path, std::string csv_path,
                    std::string report_path)
{
	const GateKind kind = gate_kind_from_string(kind_str);
	if (closed_form) {
		if (kind != GateKind::relu) {
			throw UsageError("--closed-form is only available for relu");
		}
		const double a = alpha.value_or(std::ldexp(1.0, k));
		AmosUnitParams params = build_relu_unit(k, a);
		save_params(out_path, params);
		std::cout << "wrote " << out_path << " ("
		          << parameter_count(params.arity, params.K)
		          << " parameters, closed form, alpha=" << format_double(a)
		          << ")\n";
		return;
	}

	TargetFunction target = TargetFunction::named(kind);
	const auto domain = parse_domain(domain_values, target.arity);
	if (!domain.empty()) {
		target.domain = domain;
		target.validate();
	}

	TrainConfig cfg = default_train_config(kind, k);
	if (!config_path.empty()) {
		cfg = train_config_from_json(load_json_file(config_path), cfg);
	}
	cfg.K = k;
	// Explicit flags override the config file.
	if (sub->count("--epochs")) cfg.epochs = flag_cfg.epochs;
	if (sub->count("--samples")) cfg.sample_count = flag_cfg.sample_count;
	if (sub->count("--batch")) cfg.batch_size = flag_cfg.batch_size;
	if (sub->count("--lr")) cfg.learning_rate = flag_cfg.learning_rate;
	if (sub->count("--gamma")) cfg.gamma = flag_cfg.gamma;
	if (sub->count("--init")) cfg.init_scheme = flag_cfg.init_scheme;
	cfg.rng_seed = resolve_seed(seed);
	cfg.validate();

	const TrainReport report = train_unit(target, cfg);
	save_params(out_path, report.params);
	if (csv_path.empty()) {
		csv_path = default_csv_path(out_path);
	}
	write_mse_csv(csv_path, report.mse_history);
	if (report_path.empty()) {
		report_path = default_report_path(out_path);
	}
	save_json_file(report_path, train_report_to_json(report));
	std::cout << "wrote " << out_path << " ("
	          << parameter_count(report.params.arity, report.params.K)
	          << " parameters), " << csv_path << " and " << report_path
	          << "\n"
	          << "final grid mse: " << format_double(report.final_grid_mse)
	          << "\n";
}

void cmd_build_relu(int k, std::optional<double> alpha,
                    const std::string &out_path)
{
	const double a = alpha.value_or(std::ldexp(1.0, k));
	AmosUnitParams params = build_relu_unit(k, a);
	save_params(out_path, params);
	std::cout << "wrote " << out_path << " ("
	          << parameter_count(params.arity, params.K)
	          << " parameters, alpha=" << format_double(a) << ")\n";
}

void cmd_curve(const std::string &params_path, int resolution,
               const std::string &out_path)
{
	const AmosUnitParams params = load_params(params_path);
	if (params.domain.size() != static_cast<std::size_t>(params.arity)) {
		throw SchemaError("params file lacks a domain to sweep", -1, "domain");
	}
	if (resolution < 2) {
		throw UsageError("--resolution must be >= 2");
	}
	std::ofstream out(out_path);
	if (!out) {
		throw SchemaError("cannot write file '" + out_path + "'");
	}
	if (params.arity == 1) {
		out << "x,target,amos\n";
		const auto &iv = params.domain[0];
		for (int i = 0; i < resolution; ++i) {
			const double x = iv[0] + (iv[1] - iv[0]) * i / (resolution - 1);
			const double f = reference_activation(params.kind, x);
			const double y = evaluate_unit(params, x).y;
			out << format_double(x) << "," << format_double(f) << ","
			    << format_double(y) << "\n";
		}
	}
	else {
		out << "x,y,abs_error\n";
		const auto &ix = params.domain[0];
		const auto &iy = params.domain[1];
		for (int i = 0; i < resolution; ++i) {
			const double x = ix[0] + (ix[1] - ix[0]) * i / (resolution - 1);
			for (int j = 0; j < resolution; ++j) {
				const double y =
				    iy[0] + (iy[1] - iy[0]) * j / (resolution - 1);
				const double f = reference_activation(params.kind, x, y);
				const double approx = evaluate_unit(params, x, y).y;
				out << format_double(x) << "," << format_double(y) << ","
				    << format_double(std::abs(f - approx)) << "\n";
			}
		}
	}
	std::cout << "wrote " << out_path << "\n";
}

void cmd_convert(const std::string &graph_path,
                 const std::vector<std::string> &unit_paths,
                 const std::string &out_path, const std::string &report_path)
{
	AnnGraph g = load_graph(graph_path);
	UnitLibrary lib;
	for (const auto &path : unit_paths) {
		lib.insert(load_params(path));
	}
	g = expand_se_blocks(g);
	g = collapse_linear(g);
	auto [net, report] = compile_graph(g, lib);
	save_network(out_path, net, &lib, &report);
	if (!report_path.empty()) {
		save_json_file(report_path, conversion_report_to_json(report));
	}
	std::cout << "wrote " << out_path << ": " << report.neuron_count
	          << " neurons, " << report.synapse_count << " synapses, latency "
	          << report.latency << "\n";
}

void cmd_verify(const std::string &graph_path, const std::string &net_path,
                const std::string &dataset_path, std::optional<int> n,
                const std::string &out_path)
{
	const AnnGraph g = load_graph(graph_path);
	const LoadedNetwork loaded = load_network(net_path);
	const Dataset data = load_dataset(dataset_path);
	if (data.inputs.empty()) {
		throw UsageError("dataset is empty");
	}
	const int count = n.value_or(static_cast<int>(data.inputs.size()));
	if (count < 1 || count > static_cast<int>(data.inputs.size())) {
		throw UsageError("--n out of range for the dataset");
	}
	std::vector<Vector> inputs(data.inputs.begin(),
	                           data.inputs.begin() + count);
	const EquivalenceReport report =
	    verify_equivalence(g, loaded.net, loaded.lib, inputs);
	if (!out_path.empty()) {
		save_json_file(out_path, equivalence_report_to_json(report));
	}
	std::cout << "samples: " << report.samples
	          << "\nmax abs deviation: " << format_double(report.max_abs_deviation)
	          << "\nmean abs deviation: "
	          << format_double(report.mean_abs_deviation)
	          << "\nagreement: " << format_double(report.agreement) << "\n";
}

void cmd_bench(const std::string &net_path, int n, const std::string &mode_str,
               std::optional<std::uint64_t> seed,
               const std::string &dataset_path, const std::string &out_path)
{
	if (n < 1) {
		throw UsageError("--n must be >= 1");
	}
	const LoadedNetwork loaded = load_network(net_path);
	std::vector<Vector> inputs;
	if (!dataset_path.empty()) {
		const Dataset data = load_dataset(dataset_path);
		if (data.inputs.empty()) {
			throw UsageError("dataset is empty");
		}
		for (int i = 0; i < n; ++i) {
			inputs.push_back(data.inputs[i % data.inputs.size()]);
		}
	}
	else {
		std::mt19937_64 rng(resolve_seed(seed));
		std::uniform_real_distribution<double> u(-1.0, 1.0);
		for (int i = 0; i < n; ++i) {
			Vector v(loaded.net.input_dim);
			for (double &x : v) {
				x = u(rng);
			}
			inputs.push_back(std::move(v));
		}
	}
	const SimMode mode =
	    mode_str == "single" ? SimMode::single : SimMode::pipelined;
	const SimReport report = run_stream(loaded.net, inputs, mode);
	if (!out_path.empty()) {
		save_json_file(out_path, sim_report_to_json(report));
	}
	long long max_spikes = 0;
	for (long long s : report.spikes_per_inference) {
		max_spikes = std::max(max_spikes, s);
	}
	std::cout << "mode: " << report.mode << "\nsteps: " << report.steps
	          << "\nthroughput: "
	          << format_double(static_cast<double>(n) /
	                           static_cast<double>(std::max<long long>(
	                               report.steps, 1)))
	          << " inputs/step\ntotal spikes: " << report.total_spikes
	          << "\nmax spikes per inference: " << max_spikes << " (of "
	          << loaded.net.gates.size() << " neurons)\n";
}

void cmd_simulate(const std::string &net_path, const std::string &dataset_path,
                  const std::string &mode_str, const std::string &out_path,
                  const std::string &raster_path)
{
	const LoadedNetwork loaded = load_network(net_path);
	const Dataset data = load_dataset(dataset_path);
	if (data.inputs.empty()) {
		throw UsageError("dataset is empty");
	}
	const SimMode mode =
	    mode_str == "single" ? SimMode::single : SimMode::pipelined;
	SimOptions options;
	options.record_raster = !raster_path.empty();
	const SimReport report = run_stream(loaded.net, data.inputs, mode, options);
	save_json_file(out_path, sim_report_to_json(report));
	if (!raster_path.empty()) {
		write_raster_csv(raster_path, report.raster);
	}
	std::cout << "wrote " << out_path << " (" << report.n_inputs
	          << " inputs, " << report.steps << " steps, "
	          << report.total_spikes << " spikes)\n";
}

}  // namespace

EquivalenceReport verify_equivalence(const AnnGraph &g,
                                     const SpikingNetwork &net,
                                     const UnitLibrary &lib,
                                     const std::vector<Vector> &inputs)
{
	if (inputs.empty()) {
		throw std::invalid_argument("verify_equivalence: no inputs");
	}
	EquivalenceReport report;
	report.samples = static_cast<int>(inputs.size());

	const SimReport sim = run_stream(net, inputs, SimMode::pipelined);
	double dev_sum = 0.0;
	long long dev_n = 0;
	int agree = 0;
	for (std::size_t k = 0; k < inputs.size(); ++k) {
		const Vector ann = ann_forward(g, inputs[k]);
		const Vector &snn = sim.outputs[k];
		if (ann.size() != snn.size()) {
			throw std::invalid_argument(
			    "verify_equivalence: output dimension mismatch");
		}
		std::size_t ann_arg = 0, snn_arg = 0;
		for (std::size_t i = 0; i < ann.size(); ++i) {
			const double dev = std::abs(ann[i] - snn[i]);
			report.max_abs_deviation = std::max(report.max_abs_deviation, dev);
			dev_sum += dev;
			dev_n += 1;
			if (ann[i] > ann[ann_arg]) {
				ann_arg = i;
			}
			if (snn[i] > snn[snn_arg]) {
				snn_arg = i;
			}
		}
		if (ann_arg == snn_arg) {
			agree += 1;
		}
	}
	report.mean_abs_deviation = dev_sum / static_cast<double>(dev_n);
	report.agreement =
	    static_cast<double>(agree) / static_cast<double>(inputs.size());

	for (const auto &[kind_str, params] : lib.units) {
		if (params.domain.size() != static_cast<std::size_t>(params.arity)) {
			continue;  // no domain recorded; nothing to sweep
		}
		if (params.kind == GateKind::identity) {
			continue;
		}
		TargetFunction target =
		    TargetFunction::named(params.kind, params.domain);
		report.unit_mse[kind_str] =
		    eval_mse(params, target, params.arity == 1 ? 1001 : 201);
	}
	return report;
}

ojson equivalence_report_to_json(const EquivalenceReport &report)
{
	ojson j;
	j["samples"] = report.samples;
	j["max_abs_deviation"] = report.max_abs_deviation;
	j["mean_abs_deviation"] = report.mean_abs_deviation;
	j["agreement"] = report.agreement;
	ojson mse;
	for (const auto &[kind, value] : report.unit_mse) {
		mse[kind] = value;
	}
	j["unit_mse"] = std::move(mse);
	return j;
}

int run_cli(int argc, const char *const *argv)
{
	CLI::App app{"AMOS spiking subcircuits: train units, compile ANNs into "
	             "clocked threshold-gate networks, simulate and verify them"};
	app.require_subcommand(1);

	// train-unit
	std::string tu_kind;
	int tu_k = 0;
	std::vector<double> tu_domain;
	std::string tu_config, tu_out = "params.json", tu_csv, tu_report;
	bool tu_closed = false;
	std::optional<double> tu_alpha;
	std::optional<std::uint64_t> tu_seed;
	TrainConfig tu_flags;
	auto *train = app.add_subcommand(
	    "train-unit", "Train (or construct) one unit and write its parameters");
	train->add_option("--kind", tu_kind, "relu, sigmoid, swish or mult")
	    ->required();
	train->add_option("--k", tu_k, "number of neurons in the unit");
	train->add_option("--domain", tu_domain,
	                  "lo hi per input (2 values, 4 for mult)")
	    ->expected(2, 4);
	train->add_option("--config", tu_config, "TrainConfig JSON file");
	train->add_option("--epochs", tu_flags.epochs, "training epochs");
	train->add_option("--samples", tu_flags.sample_count, "samples per epoch");
	train->add_option("--batch", tu_flags.batch_size, "minibatch size");
	train->add_option("--lr", tu_flags.learning_rate, "learning rate");
	train->add_option("--gamma", tu_flags.gamma, "pseudo-derivative width");
	train->add_option("--init", tu_flags.init_scheme, "spread or ladder");
	train->add_option("--seed", tu_seed, "rng seed (or env AMOS_SEED)");
	train->add_flag("--closed-form", tu_closed,
	                "emit the closed-form relu unit, no training");
	train->add_option("--alpha", tu_alpha,
	                  "closed-form approximation range (default 2^K)");
	train->add_option("--out", tu_out, "output params JSON path");
	train->add_option("--mse-csv", tu_csv, "epoch/mse CSV path");
	train->add_option("--report", tu_report, "train report JSON path");
	train->callback([&] {
		if (tu_k == 0) {
			const GateKind kind = gate_kind_from_string(tu_kind);
			tu_k = kind == GateKind::relu      ? 10
			       : kind == GateKind::sigmoid ? 8
			       : kind == GateKind::swish   ? 12
			                                   : 40;
		}
		cmd_train_unit(tu_kind, tu_k, tu_domain, tu_config, tu_closed,
		               tu_alpha, tu_seed, train, tu_flags, tu_out, tu_csv,
		               tu_report);
	});

	// build-relu
	int br_k = 10;
	std::optional<double> br_alpha;
	std::string br_out = "relu_params.json";
	auto *build = app.add_subcommand(
	    "build-relu", "Write the closed-form relu unit parameters");
	build->add_option("--k", br_k, "number of neurons")->required();
	build->add_option("--alpha", br_alpha, "approximation range (default 2^K)");
	build->add_option("--out", br_out, "output params JSON path");
	build->callback([&] { cmd_build_relu(br_k, br_alpha, br_out); });

	// curve
	std::string cv_params, cv_out = "curve.csv";
	int cv_res = 0;
	auto *curve = app.add_subcommand(
	    "curve", "Sweep a unit over its domain and write a CSV");
	curve->add_option("--params", cv_params, "unit params JSON")->required();
	curve->add_option("--resolution", cv_res, "points per axis");
	curve->add_option("--out", cv_out, "output CSV path");
	curve->callback([&] {
		AmosUnitParams p = load_params(cv_params);
		const int res = cv_res > 0 ? cv_res : (p.arity == 1 ? 1001 : 201);
		cmd_curve(cv_params, res, cv_out);
	});

	// convert
	std::string cg_graph, cg_out = "network.json", cg_report;
	std::vector<std::string> cg_units;
	auto *convert = app.add_subcommand(
	    "convert", "Compile an ANN graph into a spiking network");
	convert->add_option("--graph", cg_graph, "ANN graph JSON")->required();
	convert->add_option("--unit", cg_units, "unit params JSON (repeatable)")
	    ->required();
	convert->add_option("--out", cg_out, "output network JSON path");
	convert->add_option("--report", cg_report, "conversion report JSON path");
	convert->callback(
	    [&] { cmd_convert(cg_graph, cg_units, cg_out, cg_report); });

	// verify
	std::string vf_graph, vf_net, vf_data, vf_out;
	std::optional<int> vf_n;
	auto *verify = app.add_subcommand(
	    "verify", "Compare ANN forward pass against the spiking network");
	verify->add_option("--graph", vf_graph, "ANN graph JSON")->required();
	verify->add_option("--network", vf_net, "network JSON")->required();
	verify->add_option("--dataset", vf_data, "dataset JSON")->required();
	verify->add_option("--n", vf_n, "number of inputs (default: all)");
	verify->add_option("--out", vf_out, "equivalence report JSON path");
	verify->callback([&] { cmd_verify(vf_graph, vf_net, vf_data, vf_n, vf_out); });

	// bench
	std::string bn_net, bn_mode = "pipelined", bn_data, bn_out;
	int bn_n = 1000;
	std::optional<std::uint64_t> bn_seed;
	auto *bench = app.add_subcommand(
	    "bench", "Stream inputs through a network and report throughput");
	bench->add_option("--network", bn_net, "network JSON")->required();
	bench->add_option("--n", bn_n, "number of inputs");
	bench->add_option("--mode", bn_mode, "pipelined or single")
	    ->check(CLI::IsMember({"pipelined", "single"}));
	bench->add_option("--seed", bn_seed, "rng seed for random inputs");
	bench->add_option("--dataset", bn_data, "dataset JSON instead of random");
	bench->add_option("--out", bn_out, "sim report JSON path");
	bench->callback(
	    [&] { cmd_bench(bn_net, bn_n, bn_mode, bn_seed, bn_data, bn_out); });

	// simulate
	std::string sm_net, sm_data, sm_mode = "pipelined", sm_out = "sim.json",
	            sm_raster;
	auto *simulate = app.add_subcommand(
	    "simulate", "Run a dataset through a network and write the report");
	simulate->add_option("--network", sm_net, "network JSON")->required();
	simulate->add_option("--dataset", sm_data, "dataset JSON")->required();
	simulate->add_option("--mode", sm_mode, "pipelined or single")
	    ->check(CLI::IsMember({"pipelined", "single"}));
	simulate->add_option("--out", sm_out, "sim report JSON path");
	simulate->add_option("--raster", sm_raster, "spike raster CSV path");
	simulate->callback(
	    [&] { cmd_simulate(sm_net, sm_data, sm_mode, sm_out, sm_raster); });

	try {
		app.parse(argc, argv);
	}
	catch (const CLI::ParseError &e) {
		const int code = app.exit(e);
		return code == 0 ? 0 : 2;
	}
	catch (const UsageError &e) {
		std::cerr << "error: " << e.what() << "\n";
		return 2;
	}
	catch (const SchemaError &e) {
		std::cerr << "error: " << e.what() << "\n";
		return 3;
	}
	catch (const DivergenceError &e) {
		std::cerr << "error: " << e.what() << "\n";
		return 4;
	}
	catch (const std::invalid_argument &e) {
		std::cerr << "error: " << e.what() << "\n";
		return 3;
	}
	catch (const std::exception &e) {
		std::cerr << "error: " << e.what() << "\n";
		return 1;
	}
	return 0;
}

int run_cli(const std::vector<std::string> &args)
{
	std::vector<const char *> argv;
	argv.push_back("amos");
	for (const auto &a : args) {
		argv.push_back(a.c_str());
	}
	return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace amos
