#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "deepmag/dataset.hpp"
#include "deepmag/evm.hpp"
#include "deepmag/magnify.hpp"
#include "deepmag/nn.hpp"

namespace deepmag::config {

struct EvalConfig {
  double noise_floor = 1e-3;
  int max_shift = 8;
};

/// Everything the command-line tool can be configured with. Every section of
/// the JSON file is optional; unknown keys raise ArgumentError.
struct RunConfig {
  data::DatasetConfig synth;
  nn::TrainConfig train;
  magnify::AscentConfig ascent;  // gamma < 0 means "pipeline default"
  magnify::ReconConfig recon;
  evm::EvmConfig evm;
  EvalConfig eval;

  RunConfig();
};

RunConfig parse(const nlohmann::json& j);
RunConfig load(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace deepmag::config
