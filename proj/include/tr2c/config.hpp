#pragma once

#include <string>
#include <vector>

#include "tr2c/trainer.hpp"

namespace tr2c {

// Plain-text `key = value` run configuration. Unknown keys are rejected;
// missing keys keep the defaults baked into TrainConfig.
// Keys: lambda1, lambda2, epsilon, window_s, d_pre, d, iterations, eta,
// optimizer, seed, k_clusters, sinkhorn_iters, sinkhorn_tau,
// enable_rho, enable_rho_c, enable_temporal.
TrainConfig parse_config_file(const std::string& path);
TrainConfig parse_config_text(const std::string& text, const std::string& origin);

// Fully resolved key/value view of a config, in the canonical key order.
std::vector<std::pair<std::string, std::string>> config_echo(const TrainConfig& cfg);

}  // namespace tr2c
