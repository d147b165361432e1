#include "tr2c/network.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include "tr2c/errors.hpp"
#include "tr2c/rng.hpp"

namespace tr2c {

namespace {

constexpr double kNormGuard = 1e-8;

Matrix uniform_fan_in(int rows, int cols, Rng& rng) {
    // fan_in is the input dimension, i.e. the column count of the out x in matrix
    const double bound = std::sqrt(1.0 / static_cast<double>(cols));
    Matrix w(rows, cols);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-bound, bound);
    return w;
}

void check_layer_finite(const Matrix& m, const char* layer) {
    if (!m.allFinite())
        throw NumericalError(std::string("network_forward: non-finite activations in ") + layer);
}

// normalize columns to unit norm; near-zero columns are nudged along e1
void normalize_columns(const Matrix& raw, Matrix& out, Vector& norms) {
    out = raw;
    norms.resize(raw.cols());
    for (Eigen::Index i = 0; i < raw.cols(); ++i) {
        double nrm = out.col(i).norm();
        if (nrm < kNormGuard) {
            out(0, i) += kNormGuard;
            nrm = out.col(i).norm();
        }
        norms(i) = nrm;
        out.col(i) /= nrm;
    }
}

}  // namespace

std::int64_t NetworkParams::count() const {
    const std::int64_t din = dim_in, dpre = dim_pre, dout = dim_out;
    return din * dpre + dpre + dpre * dpre + dpre + 2 * (dpre * dout + dout);
}

NetworkParams network_init(int dim_in, int dim_pre, int dim_out, std::uint64_t seed) {
    if (dim_in < 1 || dim_pre < 1 || dim_out < 1)
        throw InvalidInputError("network_init: dimensions must be positive");
    Rng rng(seed);
    NetworkParams p;
    p.dim_in = dim_in;
    p.dim_pre = dim_pre;
    p.dim_out = dim_out;
    p.w1 = uniform_fan_in(dim_pre, dim_in, rng);
    p.b1 = Vector::Zero(dim_pre);
    p.w2 = uniform_fan_in(dim_pre, dim_pre, rng);
    p.b2 = Vector::Zero(dim_pre);
    p.wg = uniform_fan_in(dim_out, dim_pre, rng);
    p.bg = Vector::Zero(dim_out);
    p.wh = uniform_fan_in(dim_out, dim_pre, rng);
    p.bh = Vector::Zero(dim_out);
    return p;
}

ForwardCache network_forward(const NetworkParams& p, const Matrix& x) {
    if (x.rows() != p.dim_in)
        throw InvalidInputError("network_forward: input feature dimension mismatch");
    ForwardCache c;
    c.x = x;
    c.a1.noalias() = p.w1 * x;
    c.a1.colwise() += p.b1;
    check_layer_finite(c.a1, "encoder layer 1");
    c.h1 = c.a1.cwiseMax(0.0);
    c.a2.noalias() = p.w2 * c.h1;
    c.a2.colwise() += p.b2;
    check_layer_finite(c.a2, "encoder layer 2");
    c.h2 = c.a2.cwiseMax(0.0);
    c.z_raw.noalias() = p.wg * c.h2;
    c.z_raw.colwise() += p.bg;
    check_layer_finite(c.z_raw, "feature head");
    c.y_raw.noalias() = p.wh * c.h2;
    c.y_raw.colwise() += p.bh;
    check_layer_finite(c.y_raw, "cluster head");
    normalize_columns(c.z_raw, c.z, c.z_norm);
    normalize_columns(c.y_raw, c.y, c.y_norm);
    return c;
}

NetworkParams network_backward(const NetworkParams& p, const ForwardCache& cache,
                               const Matrix& d_z, const Matrix& d_y) {
    if (d_z.rows() != p.dim_out || d_z.cols() != cache.x.cols() ||
        d_y.rows() != p.dim_out || d_y.cols() != cache.x.cols())
        throw InvalidInputError("network_backward: adjoint shape mismatch");

    // per column: d_raw = (d - z (z . d)) / ||raw||
    Matrix dz_raw = d_z;
    Matrix dy_raw = d_y;
    for (Eigen::Index i = 0; i < dz_raw.cols(); ++i) {
        dz_raw.col(i) -= cache.z.col(i) * cache.z.col(i).dot(d_z.col(i));
        dz_raw.col(i) /= cache.z_norm(i);
        dy_raw.col(i) -= cache.y.col(i) * cache.y.col(i).dot(d_y.col(i));
        dy_raw.col(i) /= cache.y_norm(i);
    }

    NetworkParams g;
    g.dim_in = p.dim_in;
    g.dim_pre = p.dim_pre;
    g.dim_out = p.dim_out;
    g.wg.noalias() = dz_raw * cache.h2.transpose();
    g.bg = dz_raw.rowwise().sum();
    g.wh.noalias() = dy_raw * cache.h2.transpose();
    g.bh = dy_raw.rowwise().sum();

    Matrix dh2 = p.wg.transpose() * dz_raw;
    dh2.noalias() += p.wh.transpose() * dy_raw;
    Matrix da2 = (dh2.array() * (cache.a2.array() > 0.0).cast<double>()).matrix();
    g.w2.noalias() = da2 * cache.h1.transpose();
    g.b2 = da2.rowwise().sum();

    Matrix dh1 = p.w2.transpose() * da2;
    Matrix da1 = (dh1.array() * (cache.a1.array() > 0.0).cast<double>()).matrix();
    g.w1.noalias() = da1 * cache.x.transpose();
    g.b1 = da1.rowwise().sum();
    return g;
}

namespace {

constexpr char kMagic[4] = {'T', 'R', '2', 'C'};
constexpr std::uint16_t kVersion = 1;

void write_raw(std::ofstream& f, const void* ptr, std::size_t bytes) {
    f.write(static_cast<const char*>(ptr), static_cast<std::streamsize>(bytes));
}

void read_raw(std::ifstream& f, void* ptr, std::size_t bytes, const std::string& path) {
    f.read(static_cast<char*>(ptr), static_cast<std::streamsize>(bytes));
    if (!f) throw InvalidInputError("load_checkpoint: truncated file " + path);
}

}  // namespace

// Matrices are stored out-dim x in-dim column-major in memory, which is byte
// for byte the declared in-dim x out-dim row-major tensor layout.
void save_checkpoint(const NetworkParams& p, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw InvalidInputError("save_checkpoint: cannot open " + path);
    write_raw(f, kMagic, 4);
    write_raw(f, &kVersion, sizeof kVersion);
    const std::uint32_t dims[3] = {static_cast<std::uint32_t>(p.dim_in),
                                   static_cast<std::uint32_t>(p.dim_pre),
                                   static_cast<std::uint32_t>(p.dim_out)};
    write_raw(f, dims, sizeof dims);
    write_raw(f, p.w1.data(), sizeof(double) * p.w1.size());
    write_raw(f, p.b1.data(), sizeof(double) * p.b1.size());
    write_raw(f, p.w2.data(), sizeof(double) * p.w2.size());
    write_raw(f, p.b2.data(), sizeof(double) * p.b2.size());
    write_raw(f, p.wg.data(), sizeof(double) * p.wg.size());
    write_raw(f, p.bg.data(), sizeof(double) * p.bg.size());
    write_raw(f, p.wh.data(), sizeof(double) * p.wh.size());
    write_raw(f, p.bh.data(), sizeof(double) * p.bh.size());
    if (!f) throw InvalidInputError("save_checkpoint: write failed for " + path);
}

NetworkParams load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InvalidInputError("load_checkpoint: cannot open " + path);
    char magic[4];
    read_raw(f, magic, 4, path);
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw InvalidInputError("load_checkpoint: bad magic in " + path);
    std::uint16_t version = 0;
    read_raw(f, &version, sizeof version, path);
    if (version != kVersion)
        throw InvalidInputError("load_checkpoint: unsupported version in " + path);
    std::uint32_t dims[3];
    read_raw(f, dims, sizeof dims, path);
    NetworkParams p;
    p.dim_in = static_cast<int>(dims[0]);
    p.dim_pre = static_cast<int>(dims[1]);
    p.dim_out = static_cast<int>(dims[2]);
    if (p.dim_in < 1 || p.dim_pre < 1 || p.dim_out < 1)
        throw InvalidInputError("load_checkpoint: bad dimensions in " + path);
    p.w1.resize(p.dim_pre, p.dim_in);
    p.b1.resize(p.dim_pre);
    p.w2.resize(p.dim_pre, p.dim_pre);
    p.b2.resize(p.dim_pre);
    p.wg.resize(p.dim_out, p.dim_pre);
    p.bg.resize(p.dim_out);
    p.wh.resize(p.dim_out, p.dim_pre);
    p.bh.resize(p.dim_out);
    read_raw(f, p.w1.data(), sizeof(double) * p.w1.size(), path);
    read_raw(f, p.b1.data(), sizeof(double) * p.b1.size(), path);
    read_raw(f, p.w2.data(), sizeof(double) * p.w2.size(), path);
    read_raw(f, p.b2.data(), sizeof(double) * p.b2.size(), path);
    read_raw(f, p.wg.data(), sizeof(double) * p.wg.size(), path);
    read_raw(f, p.bg.data(), sizeof(double) * p.bg.size(), path);
    read_raw(f, p.wh.data(), sizeof(double) * p.wh.size(), path);
    read_raw(f, p.bh.data(), sizeof(double) * p.bh.size(), path);
    return p;
}

}  // namespace tr2c
