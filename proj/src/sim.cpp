// SPDX-License-Identifier: Apache-2.0
#include "amos/sim.hpp"

#include <algorithm>
#include <stdexcept>

namespace amos {

SimState::SimState(const SpikingNetwork &net, bool record_raster)
    : m_net(net), m_record_raster(record_raster)
{
	const int n = static_cast<int>(net.gates.size());
	if (net.fire_offset.size() != net.gates.size()) {
		throw std::invalid_argument("SimState: network lacks fire offsets");
	}

	std::vector<int> max_in(n, 0);
	for (int g = 0; g < n; ++g) {
		for (const auto &syn : net.gates[g].synapses) {
			max_in[g] = std::max(max_in[g], syn.delay);
		}
	}
	for (const auto &tap : net.input_taps) {
		max_in[tap.gate] = std::max(max_in[tap.gate], tap.delay);
	}

	m_outgoing.resize(n);
	for (int g = 0; g < n; ++g) {
		for (const auto &syn : net.gates[g].synapses) {
			m_outgoing[syn.src].push_back(
			    Outgoing{g, false, syn.weight, syn.delay});
		}
	}
	int lane_max = net.latency;
	for (int lane = 0; lane < static_cast<int>(net.readout.size()); ++lane) {
		for (const auto &term : net.readout[lane].terms) {
			lane_max = std::max(lane_max, term.delay);
			if (!term.from_input) {
				m_outgoing[term.src].push_back(
				    Outgoing{lane, true, term.weight, term.delay});
			}
		}
	}

	m_pending.resize(n);
	for (int g = 0; g < n; ++g) {
		m_pending[g].assign(max_in[g] + 1, 0.0);
	}
	m_lane_pending.assign(net.readout.size(),
	                      std::vector<double>(lane_max + 1, 0.0));
	m_last_output.assign(net.readout.size(), 0.0);
}

const std::vector<int> &SimState::step(const Vector *input)
{
	const int t = m_time;

	if (input != nullptr) {
		if (static_cast<int>(input->size()) != m_net.input_dim) {
			throw std::invalid_argument("step: input dimension mismatch");
		}
		for (const auto &tap : m_net.input_taps) {
			auto &ring = m_pending[tap.gate];
			ring[(t + tap.delay) % ring.size()] +=
			    tap.weight * (*input)[tap.input];
		}
		for (std::size_t lane = 0; lane < m_net.readout.size(); ++lane) {
			auto &ring = m_lane_pending[lane];
			for (const auto &term : m_net.readout[lane].terms) {
				if (term.from_input) {
					ring[(t + term.delay) % ring.size()] +=
					    term.weight * (*input)[term.src];
				}
			}
			ring[(t + m_net.latency) % ring.size()] +=
			    m_net.readout[lane].bias;
		}
	}

	m_fired.clear();
	const int n = static_cast<int>(m_net.gates.size());
	for (int g = 0; g < n; ++g) {
		auto &ring = m_pending[g];
		const std::size_t slot = t % ring.size();
		const double sum = ring[slot];
		ring[slot] = 0.0;
		if (sum >= m_net.gates[g].threshold) {
			m_fired.push_back(g);
			for (const auto &out : m_outgoing[g]) {
				if (out.to_readout) {
					auto &lring = m_lane_pending[out.target];
					lring[(t + out.delay) % lring.size()] += out.weight;
				}
				else {
					auto &tring = m_pending[out.target];
					tring[(t + out.delay) % tring.size()] += out.weight;
				}
			}
			const int rel = t - m_net.fire_offset[g];
			if (rel < 0) {
				m_early_spikes += 1;
			}
			else {
				if (rel >= static_cast<int>(m_slot_spikes.size())) {
					m_slot_spikes.resize(rel + 1, 0);
				}
				m_slot_spikes[rel] += 1;
			}
			if (m_record_raster) {
				m_raster.emplace_back(t, g);
			}
		}
	}
	m_total_spikes += static_cast<long long>(m_fired.size());
	m_peak_simultaneous =
	    std::max(m_peak_simultaneous, static_cast<long long>(m_fired.size()));

	for (std::size_t lane = 0; lane < m_lane_pending.size(); ++lane) {
		auto &ring = m_lane_pending[lane];
		const std::size_t slot = t % ring.size();
		m_last_output[lane] = ring[slot];
		ring[slot] = 0.0;
	}

	m_time = t + 1;
	return m_fired;
}

std::string to_string(SimMode mode)
{
	return mode == SimMode::pipelined ? "pipelined" : "single";
}

SimReport run_stream(const SpikingNetwork &net,
                     const std::vector<Vector> &inputs, SimMode mode,
                     const SimOptions &options)
{
	if (inputs.empty()) {
		throw std::invalid_argument("run_stream: need at least one input");
	}
	const int n_inputs = static_cast<int>(inputs.size());
	const int latency = net.latency;

	SimReport report;
	report.mode = to_string(mode);
	report.n_inputs = n_inputs;
	report.latency = latency;
	report.first_output_step = latency;
	report.outputs.reserve(inputs.size());
	report.spikes_per_inference.assign(n_inputs, 0);

	if (mode == SimMode::pipelined) {
		SimState state(net, options.record_raster);
		const int last = latency + n_inputs - 1;
		for (int t = 0; t <= last; ++t) {
			const Vector *input = t < n_inputs ? &inputs[t] : nullptr;
			state.step(input);
			if (t >= latency) {
				report.outputs.push_back(state.last_output());
			}
		}
		report.steps = last;
		report.total_spikes = state.total_spikes();
		report.peak_simultaneous_spikes = state.peak_simultaneous();
		report.idle_spikes = state.early_spikes();
		const auto &slots = state.spikes_per_slot();
		for (std::size_t q = 0; q < slots.size(); ++q) {
			if (q < static_cast<std::size_t>(n_inputs)) {
				report.spikes_per_inference[q] = slots[q];
			}
			else {
				report.idle_spikes += slots[q];
			}
		}
		report.raster = state.raster();
		return report;
	}

	for (int k = 0; k < n_inputs; ++k) {
		SimState state(net, options.record_raster);
		for (int t = 0; t <= latency; ++t) {
			state.step(t == 0 ? &inputs[k] : nullptr);
		}
		report.outputs.push_back(state.last_output());
		report.steps += latency;
		report.total_spikes += state.total_spikes();
		report.peak_simultaneous_spikes = std::max(
		    report.peak_simultaneous_spikes, state.peak_simultaneous());
		report.idle_spikes += state.early_spikes();
		const auto &slots = state.spikes_per_slot();
		for (std::size_t q = 0; q < slots.size(); ++q) {
			if (q == 0) {
				report.spikes_per_inference[k] = slots[q];
			}
			else {
				report.idle_spikes += slots[q];
			}
		}
		if (options.record_raster) {
			for (const auto &[t, g] : state.raster()) {
				report.raster.emplace_back(t, g);
			}
		}
	}
	return report;
}

SpikeCounts count_spikes(const SimReport &report)
{
	SpikeCounts counts;
	counts.per_inference = report.spikes_per_inference;
	counts.total = report.total_spikes;
	counts.idle = report.idle_spikes;
	return counts;
}

}  // namespace amos
