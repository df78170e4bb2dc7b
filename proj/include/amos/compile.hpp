// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "amos/graph.hpp"
#include "amos/unit.hpp"

namespace amos {

/// Spike-carrying connection between threshold gates.
struct GateSynapse {
	int src = -1;
	double weight = 0.0;
	int delay = 0;  // >= 1 between gates
};

struct ThresholdGate {
	double threshold = 0.0;
	std::vector<GateSynapse> synapses;
};

/// Analog network input applied to a gate through a weighted, delayed tap.
struct InputTap {
	int gate = -1;
	int input = -1;
	double weight = 0.0;
	int delay = 0;
};

/// One term of the analog linear readout: either a gate spike or a network
/// input, weighted and delayed so that every term of one presentation
/// arrives at the same step.
struct ReadoutTerm {
	bool from_input = false;
	int src = -1;
	double weight = 0.0;
	int delay = 0;
};

struct ReadoutLane {
	double bias = 0.0;
	std::vector<ReadoutTerm> terms;
};

/// A clocked feedforward network of threshold gates with integer synaptic
/// delays and a linear readout. An input presented at step t produces its
/// readout at step t + latency; gate g evaluates that presentation's
/// wavefront at step t + fire_offset[g].
struct SpikingNetwork {
	int input_dim = 0;
	std::vector<ThresholdGate> gates;
	std::vector<InputTap> input_taps;
	std::vector<ReadoutLane> readout;
	std::vector<int> fire_offset;
	int latency = 0;

	int max_delay() const;
	/// Structural retiming check: every synapse, tap and readout term must
	/// connect consecutive wavefront stages exactly (src offset + delay ==
	/// dst offset). Throws std::invalid_argument on violation.
	void validate() const;
};

/// Shared unit parameters per gate kind used by the conversion.
struct UnitLibrary {
	std::map<std::string, AmosUnitParams> units;

	void insert(const AmosUnitParams &params);
	bool has(GateKind kind) const;
	const AmosUnitParams &require(GateKind kind) const;
};

struct UnitInstanceInfo {
	int node_id = -1;       // graph node this unit instance belongs to
	int lane = 0;           // vector component within the node
	std::string kind;
	int K = 0;
	int first_gate = -1;
	int stage_latency = 0;  // always K + 1
	int input_step = 0;     // step at which gate 1 evaluates wavefront 0
};

struct ConversionReport {
	int converted_gate_count = 0;   // ANN gate instances converted
	long long neuron_count = 0;     // total threshold gates
	long long synapse_count = 0;    // gate synapses + taps + readout terms
	std::vector<UnitInstanceInfo> stages;
	int latency = 0;
	std::map<std::string, int> unit_k;
};

/// A scalar signal expressed over spike/input emitters: bias + sum of
/// weighted sources. This is how linear graph nodes (dense, add, pool)
/// travel through the compiler without creating neurons.
struct Emitter {
	bool from_input = false;
	int idx = -1;
	bool operator==(const Emitter &) const = default;
};

struct AffineTerm {
	Emitter emitter;
	double weight = 0.0;
};

struct AffineForm {
	double bias = 0.0;
	std::vector<AffineTerm> terms;
};

/// Incrementally builds a SpikingNetwork while tracking, per gate, the step
/// at which it fires for wavefront 0 and the step at which its unit's output
/// sum is complete.
class NetworkBuilder {
public:
	explicit NetworkBuilder(int input_dim);

	/// Step at which a weighted sum over `form` is complete and can feed a
	/// consumer: one past the latest source (0 for input-only forms).
	int ready_step(const AffineForm &form) const;

	SpikingNetwork finish(std::vector<AffineForm> output_lanes);

	const SpikingNetwork &network() const { return m_net; }

	friend AffineForm compile_unit(NetworkBuilder &builder,
	                               const AmosUnitParams &params,
	                               const AffineForm &x, const AffineForm *x2,
	                               UnitInstanceInfo *info);

private:
	SpikingNetwork m_net;
	std::vector<int> m_out_ready;  // per gate: input_step + K of its unit
};

/// Instantiates the K threshold gates of one unit reading the scalar signal
/// `x` (and `x2` for arity-2 units). Gate i receives every source of the
/// input form with weight c_i * w and delay (i-1) + align, the lateral j->i
/// synapse carries weight -h(i,j) and delay i-j, and the form biases fold
/// into the thresholds. Returns the unit's output signal, whose terms carry
/// the readout weights d_i; its weighted sum completes K+1 steps after the
/// unit's own input sum.
AffineForm compile_unit(NetworkBuilder &builder, const AmosUnitParams &params,
                        const AffineForm &x, const AffineForm *x2 = nullptr,
                        UnitInstanceInfo *info = nullptr);

/// Lowers a collapsed, SE-expanded graph: activations and multiplies become
/// unit instances; dense/add/pool nodes become weighted sums on the fan-in
/// side of downstream units (or of the readout). Parallel branches are
/// delay-padded so merging operands meet at equal total delay.
std::pair<SpikingNetwork, ConversionReport> compile_graph(
    const AnnGraph &g, const UnitLibrary &lib);

/// Set of synaptic delay values used anywhere in the network.
std::set<int> distinct_delays(const SpikingNetwork &net);

}  // namespace amos
