#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tr2c/network.hpp"
#include "tr2c/sinkhorn.hpp"

namespace tr2c {

enum class Optimizer { PlainGd, Adam };

struct TrainConfig {
    int iterations = 500;
    double eta = 5e-3;
    Optimizer optimizer = Optimizer::PlainGd;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    int window = 2;
    int k_clusters = 3;
    int dim_pre = 512;
    int dim_out = 64;
    CodingConfig coding;
    SinkhornConfig sinkhorn;
};

struct TraceRow {
    int iter = 0;
    double loss = 0.0;
    double rho = 0.0;
    double rho_c = 0.0;
    double reg = 0.0;
    double grad_norm = 0.0;
    double ms = 0.0;
};

using RunTrace = std::vector<TraceRow>;

void write_trace_csv(const RunTrace& trace, const std::string& path);

struct TrainResult {
    NetworkParams params;
    Affinity affinity;
    RunTrace trace;
};

// One full-batch run: forward, Sinkhorn affinity, loss, backward through the
// Sinkhorn projection and the network, parameter update; T iterations.
// Throws NumericalError naming the offending term if the loss goes non-finite.
TrainResult train(const Matrix& x, const TrainConfig& cfg);

// Central finite differences (step 1e-5) of the total loss over a random
// sample of parameter coordinates versus the analytic gradient; returns the
// max relative error, |fd - an| / max(1, |fd|, |an|).
double finite_diff_check(const Matrix& x, const TrainConfig& cfg, int n_sampled);

}  // namespace tr2c
