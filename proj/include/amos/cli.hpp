// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "amos/compile.hpp"
#include "amos/graph.hpp"
#include "amos/io.hpp"

namespace amos {

/// ANN/SNN agreement statistics over a sample of inputs.
struct EquivalenceReport {
	int samples = 0;
	double max_abs_deviation = 0.0;
	double mean_abs_deviation = 0.0;
	/// Fraction of samples whose output argmax matches between the exact
	/// ANN forward pass and the spiking readout.
	double agreement = 0.0;
	/// Grid MSE of each library unit against its reference gate function.
	std::map<std::string, double> unit_mse;
};

EquivalenceReport verify_equivalence(const AnnGraph &g,
                                     const SpikingNetwork &net,
                                     const UnitLibrary &lib,
                                     const std::vector<Vector> &inputs);

ojson equivalence_report_to_json(const EquivalenceReport &report);

/// Entry point of the `amos` tool. Exit codes: 0 success, 2 usage,
/// 3 data/schema, 4 numerical failure.
int run_cli(int argc, const char *const *argv);
int run_cli(const std::vector<std::string> &args);

}  // namespace amos
