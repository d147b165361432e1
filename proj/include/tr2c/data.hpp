#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tr2c/objective.hpp"

namespace tr2c {

enum class MatrixFormat { Csv, Bin };

// CSV: D rows of N comma-separated values, no header.
// BIN: magic "MTX1", u32 rows, u32 cols, then row-major little-endian f32.
Matrix load_matrix(const std::string& path, MatrixFormat format);
void save_matrix(const Matrix& m, const std::string& path, MatrixFormat format);

// by extension: .bin -> Bin, anything else -> Csv
MatrixFormat format_for_path(const std::string& path);

std::vector<int> load_labels(const std::string& path);
void save_labels(const std::vector<int>& labels, const std::string& path);

struct SyntheticSpec {
    int k = 3;
    int dim = 30;
    int rank = 3;
    std::vector<int> segments = {100, 100, 100};
    double sigma = 0.05;
    std::uint64_t seed = 0;
};

// K mutually orthogonal rank-r bases from one QR of a seeded Gaussian matrix;
// each frame is a random unit-norm combination within its segment's basis plus
// N(0, sigma^2 I) ambient noise. Segments are contiguous in time.
std::pair<Matrix, std::vector<int>> generate_synthetic(const SyntheticSpec& spec);

struct NoiseSpec {
    double sigma = 0.0;
    std::uint64_t seed = 0;
};

// X + G with G_ij iid N(0, sigma^2); sigma = 0 returns X unchanged.
Matrix corrupt(const Matrix& x, const NoiseSpec& spec);

struct PcaResult {
    Matrix projections;               // k x N
    std::vector<double> explained;    // per-component variance fractions
};

// Column-centered SVD projection onto the top-k components. Sign convention:
// the largest-magnitude entry of each component direction is positive.
PcaResult pca_project(const Matrix& x, int k);

}  // namespace tr2c
