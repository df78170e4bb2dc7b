// SPDX-License-Identifier: Apache-2.0
#include "amos/compile.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>

namespace amos {

int SpikingNetwork::max_delay() const
{
	int d = 0;
	for (const auto &gate : gates) {
		for (const auto &syn : gate.synapses) {
			d = std::max(d, syn.delay);
		}
	}
	for (const auto &tap : input_taps) {
		d = std::max(d, tap.delay);
	}
	for (const auto &lane : readout) {
		for (const auto &term : lane.terms) {
			d = std::max(d, term.delay);
		}
	}
	return d;
}

void SpikingNetwork::validate() const
{
	const int n = static_cast<int>(gates.size());
	if (fire_offset.size() != gates.size()) {
		throw std::invalid_argument("network: fire_offset size mismatch");
	}
	for (int g = 0; g < n; ++g) {
		for (const auto &syn : gates[g].synapses) {
			if (syn.src < 0 || syn.src >= g) {
				throw std::invalid_argument(
				    "network: synapse source must precede its gate");
			}
			if (syn.delay < 1) {
				throw std::invalid_argument(
				    "network: gate-to-gate delay must be >= 1");
			}
			if (fire_offset[syn.src] + syn.delay != fire_offset[g]) {
				throw std::invalid_argument(
				    "network: synapse delay breaks retiming balance");
			}
		}
	}
	for (const auto &tap : input_taps) {
		if (tap.gate < 0 || tap.gate >= n || tap.input < 0 ||
		    tap.input >= input_dim) {
			throw std::invalid_argument("network: tap endpoint out of range");
		}
		if (tap.delay < 1 || tap.delay != fire_offset[tap.gate]) {
			throw std::invalid_argument(
			    "network: tap delay breaks retiming balance");
		}
	}
	for (const auto &lane : readout) {
		for (const auto &term : lane.terms) {
			if (term.from_input) {
				if (term.src < 0 || term.src >= input_dim) {
					throw std::invalid_argument(
					    "network: readout input index out of range");
				}
				if (term.delay != latency) {
					throw std::invalid_argument(
					    "network: readout input delay breaks retiming balance");
				}
			}
			else {
				if (term.src < 0 || term.src >= n) {
					throw std::invalid_argument(
					    "network: readout gate index out of range");
				}
				if (term.delay < 1 ||
				    fire_offset[term.src] + term.delay != latency) {
					throw std::invalid_argument(
					    "network: readout delay breaks retiming balance");
				}
			}
		}
	}
}

void UnitLibrary::insert(const AmosUnitParams &params)
{
	params.validate();
	units[to_string(params.kind)] = params;
}

bool UnitLibrary::has(GateKind kind) const
{
	return units.count(to_string(kind)) > 0;
}

const AmosUnitParams &UnitLibrary::require(GateKind kind) const
{
	const auto it = units.find(to_string(kind));
	if (it == units.end()) {
		throw std::invalid_argument("unit library has no entry for kind '" +
		                            to_string(kind) + "'");
	}
	return it->second;
}

NetworkBuilder::NetworkBuilder(int input_dim)
{
	if (input_dim < 1) {
		throw std::invalid_argument("network input dimension must be >= 1");
	}
	m_net.input_dim = input_dim;
}

int NetworkBuilder::ready_step(const AffineForm &form) const
{
	int ready = 0;
	for (const auto &term : form.terms) {
		if (!term.emitter.from_input) {
			ready = std::max(ready, m_out_ready[term.emitter.idx]);
		}
	}
	// Input emitters are ready at presentation time; the +1 is the step the
	// weighted sum takes to reach the consumer.
	return ready + 1;
}

AffineForm compile_unit(NetworkBuilder &builder, const AmosUnitParams &params,
                        const AffineForm &x, const AffineForm *x2,
                        UnitInstanceInfo *info)
{
	params.validate();
	if ((params.arity == 2) != (x2 != nullptr)) {
		throw std::invalid_argument("compile_unit: arity mismatch");
	}
	SpikingNetwork &net = builder.m_net;
	const int K = params.K;

	int base = builder.ready_step(x);
	if (x2 != nullptr) {
		base = std::max(base, builder.ready_step(*x2));
	}

	const int first_gate = static_cast<int>(net.gates.size());
	for (int i = 0; i < K; ++i) {
		ThresholdGate gate;
		// Fold the input-form biases into the threshold.
		gate.threshold = params.T[i] - params.c[i] * x.bias;
		if (x2 != nullptr) {
			gate.threshold -= params.c2[i] * x2->bias;
		}
		const int eval_step = base + i;
		auto wire_input = [&](const AffineForm &form, double coeff) {
			for (const auto &term : form.terms) {
				const double w = coeff * term.weight;
				if (term.emitter.from_input) {
					net.input_taps.push_back(
					    InputTap{first_gate + i, term.emitter.idx, w,
					             eval_step});
				}
				else {
					const int src = term.emitter.idx;
					gate.synapses.push_back(GateSynapse{
					    src, w, eval_step - net.fire_offset[src]});
				}
			}
		};
		wire_input(x, params.c[i]);
		if (x2 != nullptr) {
			wire_input(*x2, params.c2[i]);
		}
		// Lateral inhibition from every earlier gate of this unit.
		for (int j = 0; j < i; ++j) {
			gate.synapses.push_back(GateSynapse{
			    first_gate + j, -params.h[i * (i - 1) / 2 + j], i - j});
		}
		net.gates.push_back(std::move(gate));
		net.fire_offset.push_back(eval_step);
		builder.m_out_ready.push_back(base + K);
	}

	if (info != nullptr) {
		info->kind = to_string(params.kind);
		info->K = K;
		info->first_gate = first_gate;
		info->stage_latency = K + 1;
		info->input_step = base;
	}

	AffineForm out;
	out.terms.reserve(K);
	for (int i = 0; i < K; ++i) {
		out.terms.push_back(
		    AffineTerm{Emitter{false, first_gate + i}, params.d[i]});
	}
	return out;
}

SpikingNetwork NetworkBuilder::finish(std::vector<AffineForm> output_lanes)
{
	int latency = 0;
	for (const auto &lane : output_lanes) {
		for (const auto &term : lane.terms) {
			if (!term.emitter.from_input) {
				latency = std::max(latency, m_out_ready[term.emitter.idx]);
			}
		}
	}
	m_net.latency = latency;
	m_net.readout.clear();
	m_net.readout.reserve(output_lanes.size());
	for (const auto &lane : output_lanes) {
		ReadoutLane out;
		out.bias = lane.bias;
		for (const auto &term : lane.terms) {
			if (term.emitter.from_input) {
				out.terms.push_back(
				    ReadoutTerm{true, term.emitter.idx, term.weight, latency});
			}
			else {
				const int src = term.emitter.idx;
				out.terms.push_back(ReadoutTerm{
				    false, src, term.weight, latency - m_net.fire_offset[src]});
			}
		}
		m_net.readout.push_back(std::move(out));
	}
	return std::move(m_net);
}

namespace {

/// Vector-valued signal: one affine form per lane.
using Bundle = std::vector<AffineForm>;

void accumulate(AffineForm &acc, const AffineForm &form, double scale)
{
	acc.bias += scale * form.bias;
	for (const auto &term : form.terms) {
		bool merged = false;
		for (auto &existing : acc.terms) {
			if (existing.emitter == term.emitter) {
				existing.weight += scale * term.weight;
				merged = true;
				break;
			}
		}
		if (!merged) {
			acc.terms.push_back(AffineTerm{term.emitter, scale * term.weight});
		}
	}
}

}  // namespace

std::pair<SpikingNetwork, ConversionReport> compile_graph(const AnnGraph &g,
                                                          const UnitLibrary &lib)
{
	g.validate();
	for (const auto &node : g.nodes) {
		if (std::holds_alternative<SeBlockNode>(node)) {
			throw std::invalid_argument(
			    "compile_graph: graph still contains SE macro nodes; run "
			    "expand_se_blocks first");
		}
	}

	NetworkBuilder builder(g.input_dim());
	ConversionReport report;
	std::vector<Bundle> bundles(g.nodes.size());

	for (int id = 0; id < static_cast<int>(g.nodes.size()); ++id) {
		const AnnNode &node = g.nodes[id];
		std::visit(
		    [&](const auto &n) {
			    using T = std::decay_t<decltype(n)>;
			    if constexpr (std::is_same_v<T, InputNode>) {
				    Bundle b(n.dim);
				    for (int k = 0; k < n.dim; ++k) {
					    b[k].terms.push_back(
					        AffineTerm{Emitter{true, k}, 1.0});
				    }
				    bundles[id] = std::move(b);
			    }
			    else if constexpr (std::is_same_v<T, DenseNode>) {
				    const Bundle &in = bundles[n.input];
				    Bundle b(n.weights.rows);
				    for (int r = 0; r < n.weights.rows; ++r) {
					    b[r].bias = n.bias[r];
					    for (int c = 0; c < n.weights.cols; ++c) {
						    const double w = n.weights(r, c);
						    if (w != 0.0) {
							    accumulate(b[r], in[c], w);
						    }
					    }
				    }
				    bundles[id] = std::move(b);
			    }
			    else if constexpr (std::is_same_v<T, ActivationNode>) {
				    const Bundle &in = bundles[n.input];
				    if (n.kind == GateKind::identity) {
					    bundles[id] = in;
					    return;
				    }
				    const AmosUnitParams &params = lib.require(n.kind);
				    if (params.arity != 1) {
					    throw std::invalid_argument(
					        "unit for kind '" + to_string(n.kind) +
					        "' must have arity 1");
				    }
				    Bundle b(in.size());
				    for (std::size_t lane = 0; lane < in.size(); ++lane) {
					    UnitInstanceInfo info;
					    b[lane] = compile_unit(builder, params, in[lane],
					                           nullptr, &info);
					    info.node_id = id;
					    info.lane = static_cast<int>(lane);
					    report.stages.push_back(info);
				    }
				    bundles[id] = std::move(b);
			    }
			    else if constexpr (std::is_same_v<T, AddNode>) {
				    const Bundle &lhs = bundles[n.lhs];
				    const Bundle &rhs = bundles[n.rhs];
				    Bundle b(lhs.size());
				    for (std::size_t lane = 0; lane < lhs.size(); ++lane) {
					    b[lane] = lhs[lane];
					    accumulate(b[lane], rhs[lane], 1.0);
				    }
				    bundles[id] = std::move(b);
			    }
			    else if constexpr (std::is_same_v<T, MultiplyNode>) {
				    const AmosUnitParams &params =
				        lib.require(GateKind::mult);
				    if (params.arity != 2) {
					    throw std::invalid_argument(
					        "unit for kind 'mult' must have arity 2");
				    }
				    const Bundle &lhs = bundles[n.lhs];
				    const Bundle &rhs = bundles[n.rhs];
				    Bundle b(lhs.size());
				    for (std::size_t lane = 0; lane < lhs.size(); ++lane) {
					    UnitInstanceInfo info;
					    b[lane] = compile_unit(builder, params, lhs[lane],
					                           &rhs[lane], &info);
					    info.node_id = id;
					    info.lane = static_cast<int>(lane);
					    report.stages.push_back(info);
				    }
				    bundles[id] = std::move(b);
			    }
			    else if constexpr (std::is_same_v<T, GlobalAvgPoolNode>) {
				    const Bundle &in = bundles[n.input];
				    const int group_size =
				        static_cast<int>(in.size()) / n.groups;
				    Bundle b(n.groups);
				    const double inv = 1.0 / group_size;
				    for (int grp = 0; grp < n.groups; ++grp) {
					    for (int k = 0; k < group_size; ++k) {
						    accumulate(b[grp],
						               in[static_cast<std::size_t>(grp) *
						                      group_size +
						                  k],
						               inv);
					    }
				    }
				    bundles[id] = std::move(b);
			    }
			    else if constexpr (std::is_same_v<T, OutputNode>) {
				    bundles[id] = bundles[n.input];
			    }
			    else {
				    throw std::invalid_argument(
				        "compile_graph: unsupported node kind");
			    }
		    },
		    node);
	}

	SpikingNetwork net = builder.finish(bundles[g.output_id]);

	report.converted_gate_count = static_cast<int>(report.stages.size());
	report.neuron_count = static_cast<long long>(net.gates.size());
	long long synapses = static_cast<long long>(net.input_taps.size());
	for (const auto &gate : net.gates) {
		synapses += static_cast<long long>(gate.synapses.size());
	}
	for (const auto &lane : net.readout) {
		synapses += static_cast<long long>(lane.terms.size());
	}
	report.synapse_count = synapses;
	report.latency = net.latency;
	for (const auto &stage : report.stages) {
		report.unit_k[stage.kind] = stage.K;
	}

	net.validate();
	return {std::move(net), std::move(report)};
}

std::set<int> distinct_delays(const SpikingNetwork &net)
{
	std::set<int> out;
	for (const auto &gate : net.gates) {
		for (const auto &syn : gate.synapses) {
			out.insert(syn.delay);
		}
	}
	for (const auto &tap : net.input_taps) {
		out.insert(tap.delay);
	}
	for (const auto &lane : net.readout) {
		for (const auto &term : lane.terms) {
			out.insert(term.delay);
		}
	}
	return out;
}

}  // namespace amos
