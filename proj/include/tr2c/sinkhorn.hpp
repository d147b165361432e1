#pragma once

#include "tr2c/objective.hpp"

namespace tr2c {

struct SinkhornConfig {
    int iterations = 10;
    double tau = 1.0;
    double epsilon_floor = 1e-12;
};

struct Affinity {
    Matrix gamma;
    double row_tol = 0.0;  // max |row sum - 1| achieved
    double col_tol = 0.0;
};

// K = exp(M / tau) entrywise (row-max shifted against overflow; the shift is
// exactly absorbed by the first row normalization), then `iterations` rounds
// of row normalization followed by column normalization.
Affinity sinkhorn_project(const Matrix& m, const SinkhornConfig& cfg);

// d<upstream, sinkhorn_project(M)> / dM by replaying the forward pass and
// unrolling the normalization recursions in reverse.
Matrix sinkhorn_backward(const Matrix& m, const SinkhornConfig& cfg, const Matrix& upstream);

}  // namespace tr2c
