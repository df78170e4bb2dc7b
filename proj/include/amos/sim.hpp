// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "amos/compile.hpp"

namespace amos {

/// Mutable run state of one network. Synchronous clocked semantics: calling
/// step(input) processes the current time index t — the optional input is
/// presented at t, every gate thresholds the contributions whose delays
/// expire at t, fired spikes enter their outgoing delay lines, and the
/// readout value arriving at t is collected — then advances to t + 1.
class SimState {
public:
	explicit SimState(const SpikingNetwork &net, bool record_raster = false);

	/// Time index the next call to step() will process.
	int time() const { return m_time; }

	/// Runs one step; returns the gates that fired, in gate order.
	const std::vector<int> &step(const Vector *input = nullptr);

	/// Readout vector collected by the most recent step.
	const Vector &last_output() const { return m_last_output; }

	long long total_spikes() const { return m_total_spikes; }
	/// Spikes attributed to presentation slots (slot = step - fire_offset).
	const std::vector<long long> &spikes_per_slot() const
	{
		return m_slot_spikes;
	}
	/// Spikes fired before any wavefront reached the gate (negative slots).
	long long early_spikes() const { return m_early_spikes; }
	long long peak_simultaneous() const { return m_peak_simultaneous; }
	const std::vector<std::pair<int, int>> &raster() const { return m_raster; }

private:
	struct Outgoing {
		int target = -1;  // gate id, or readout lane when to_readout
		bool to_readout = false;
		double weight = 0.0;
		int delay = 0;
	};

	const SpikingNetwork &m_net;
	int m_time = 0;
	bool m_record_raster;
	std::vector<std::vector<Outgoing>> m_outgoing;  // per gate
	std::vector<std::vector<double>> m_pending;     // per gate, ring buffer
	std::vector<std::vector<double>> m_lane_pending;
	std::vector<int> m_fired;
	Vector m_last_output;
	long long m_total_spikes = 0;
	long long m_early_spikes = 0;
	long long m_peak_simultaneous = 0;
	std::vector<long long> m_slot_spikes;
	std::vector<std::pair<int, int>> m_raster;
};

enum class SimMode { pipelined, single };

std::string to_string(SimMode mode);

struct SimReport {
	std::string mode;
	int n_inputs = 0;
	int latency = 0;
	int first_output_step = 0;
	/// Final time index processed: latency + N - 1 in pipelined mode,
	/// N * latency summed over runs in single mode.
	long long steps = 0;
	std::vector<Vector> outputs;  // outputs[k] belongs to input k
	long long total_spikes = 0;
	/// Spikes not attributable to any presented input (idle firing of gates
	/// whose folded thresholds are non-positive, before or after the
	/// presented wavefronts pass through).
	long long idle_spikes = 0;
	std::vector<long long> spikes_per_inference;
	long long peak_simultaneous_spikes = 0;
	std::vector<std::pair<int, int>> raster;  // (step, gate) when recorded
};

struct SimOptions {
	bool record_raster = false;
};

/// Streams N inputs through the network. Pipelined mode presents input k at
/// step k and collects its output at step k + latency; single mode runs each
/// input through a fresh state. Pipelined outputs equal single-mode outputs
/// exactly.
SimReport run_stream(const SpikingNetwork &net,
                     const std::vector<Vector> &inputs, SimMode mode,
                     const SimOptions &options = {});

struct SpikeCounts {
	std::vector<long long> per_inference;
	long long total = 0;
	long long idle = 0;
};

SpikeCounts count_spikes(const SimReport &report);

}  // namespace amos
