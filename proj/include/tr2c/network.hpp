#pragma once

#include <cstdint>
#include <string>

#include "tr2c/objective.hpp"

namespace tr2c {

// Two-layer ReLU encoder (D -> d_pre -> d_pre) with two linear heads
// (d_pre -> d each): feature head g and cluster head h.
struct NetworkParams {
    int dim_in = 0;    // D
    int dim_pre = 0;   // d_pre
    int dim_out = 0;   // d
    Matrix w1, w2, wg, wh;  // stored out-dim x in-dim
    Vector b1, b2, bg, bh;

    std::int64_t count() const;
};

NetworkParams network_init(int dim_in, int dim_pre, int dim_out, std::uint64_t seed);

struct ForwardCache {
    Matrix x;            // input, D x N
    Matrix a1, h1;       // layer-1 pre-activation / activation
    Matrix a2, h2;       // layer-2
    Matrix z_raw, y_raw; // head outputs before normalization
    Vector z_norm, y_norm;
    Matrix z, y;         // unit-column outputs
};

ForwardCache network_forward(const NetworkParams& p, const Matrix& x);

// Gradients of a scalar loss given its adjoints on the normalized heads.
// The column normalization backpropagates as (I - z z^T) / ||z_raw||.
NetworkParams network_backward(const NetworkParams& p, const ForwardCache& cache,
                               const Matrix& d_z, const Matrix& d_y);

// Checkpoint: magic "TR2C", version u16, dims (D, d_pre, d) as u32, then all
// tensors as little-endian f64, row-major in the in-dim x out-dim reading, in
// field order w1, b1, w2, b2, wg, bg, wh, bh.
void save_checkpoint(const NetworkParams& p, const std::string& path);
NetworkParams load_checkpoint(const std::string& path);

}  // namespace tr2c
