// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "amos/compile.hpp"
#include "amos/graph.hpp"
#include "amos/sim.hpp"
#include "amos/train.hpp"
#include "amos/unit.hpp"

namespace amos {

// Keys keep insertion order so emitted files diff cleanly.
using ojson = nlohmann::ordered_json;

ojson params_to_json(const AmosUnitParams &params);
AmosUnitParams params_from_json(const nlohmann::json &j);

ojson graph_to_json(const AnnGraph &g);
AnnGraph graph_from_json(const nlohmann::json &j);

struct LoadedNetwork {
	SpikingNetwork net;
	UnitLibrary lib;  // empty when the file carries no unit library
};

ojson network_to_json(const SpikingNetwork &net,
                      const UnitLibrary *lib = nullptr,
                      const ConversionReport *report = nullptr);
LoadedNetwork network_from_json(const nlohmann::json &j);

ojson conversion_report_to_json(const ConversionReport &report);
ojson sim_report_to_json(const SimReport &report);

ojson train_report_to_json(const TrainReport &report);

ojson train_config_to_json(const TrainConfig &cfg);
/// Reads a config; fields absent from the JSON keep their values from
/// `defaults`.
TrainConfig train_config_from_json(const nlohmann::json &j,
                                   const TrainConfig &defaults);

struct Dataset {
	std::vector<Vector> inputs;
	std::vector<int> labels;  // optional; empty when absent
};

ojson dataset_to_json(const Dataset &data);
Dataset dataset_from_json(const nlohmann::json &j);

// File helpers. Parse and schema failures raise SchemaError.
nlohmann::json load_json_file(const std::string &path);
void save_json_file(const std::string &path, const ojson &j);

void save_params(const std::string &path, const AmosUnitParams &params);
AmosUnitParams load_params(const std::string &path);

void save_graph(const std::string &path, const AnnGraph &g);
AnnGraph load_graph(const std::string &path);

void save_network(const std::string &path, const SpikingNetwork &net,
                  const UnitLibrary *lib = nullptr,
                  const ConversionReport *report = nullptr);
LoadedNetwork load_network(const std::string &path);

Dataset load_dataset(const std::string &path);

void write_mse_csv(const std::string &path,
                   const std::vector<double> &history);
void write_raster_csv(const std::string &path,
                      const std::vector<std::pair<int, int>> &raster);

}  // namespace amos
