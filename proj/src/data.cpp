#include "tr2c/data.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "tr2c/errors.hpp"
#include "tr2c/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary matrix format assumes a little-endian host");

namespace tr2c {

namespace {

constexpr char kBinMagic[4] = {'M', 'T', 'X', '1'};

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

double parse_double(std::string_view tok, Eigen::Index row, Eigen::Index col,
                    const std::string& path) {
    tok = trim(tok);
    double value = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        throw InvalidInputError(path + ": cannot parse value at row " + std::to_string(row) +
                                ", column " + std::to_string(col));
    if (!std::isfinite(value))
        throw InvalidInputError(path + ": non-finite value at row " + std::to_string(row) +
                                ", column " + std::to_string(col));
    return value;
}

Matrix load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInputError("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    Eigen::Index width = -1;
    while (std::getline(in, line)) {
        if (trim(line).empty() && in.peek() == std::char_traits<char>::eof()) break;
        std::vector<double> row;
        std::string_view rest(line);
        while (true) {
            const std::size_t comma = rest.find(',');
            const std::string_view tok = rest.substr(0, comma);
            row.push_back(parse_double(tok, static_cast<Eigen::Index>(rows.size()),
                                       static_cast<Eigen::Index>(row.size()), path));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (width < 0) width = static_cast<Eigen::Index>(row.size());
        if (static_cast<Eigen::Index>(row.size()) != width)
            throw InvalidInputError(path + ": row " + std::to_string(rows.size()) + " has " +
                                    std::to_string(row.size()) + " values, expected " +
                                    std::to_string(width));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InvalidInputError(path + ": empty matrix file");
    Matrix m(static_cast<Eigen::Index>(rows.size()), width);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
    return m;
}

void save_csv(const Matrix& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InvalidInputError("cannot open " + path + " for writing");
    char buf[64];
    std::string line;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        line.clear();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
            if (j) line += ',';
            line += buf;
        }
        line += '\n';
        out << line;
    }
    if (!out) throw InvalidInputError("write failed for " + path);
}

Matrix load_bin(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInputError("cannot open " + path);
    char magic[4];
    std::uint32_t rows = 0, cols = 0;
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&rows), 4);
    in.read(reinterpret_cast<char*>(&cols), 4);
    if (!in || std::memcmp(magic, kBinMagic, 4) != 0)
        throw InvalidInputError(path + ": not a MTX1 matrix file");
    if (rows == 0 || cols == 0) throw InvalidInputError(path + ": empty matrix file");
    const std::uint64_t count = static_cast<std::uint64_t>(rows) * cols;
    std::vector<float> data(count);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(count * 4));
    if (in.gcount() != static_cast<std::streamsize>(count * 4))
        throw InvalidInputError(path + ": truncated matrix file");
    Matrix m(rows, cols);
    for (std::uint32_t i = 0; i < rows; ++i)
        for (std::uint32_t j = 0; j < cols; ++j) {
            const float v = data[static_cast<std::size_t>(i) * cols + j];  // row-major
            if (!std::isfinite(v))
                throw InvalidInputError(path + ": non-finite value at row " + std::to_string(i) +
                                        ", column " + std::to_string(j));
            m(i, j) = static_cast<double>(v);
        }
    return m;
}

void save_bin(const Matrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInputError("cannot open " + path + " for writing");
    const std::uint32_t rows = static_cast<std::uint32_t>(m.rows());
    const std::uint32_t cols = static_cast<std::uint32_t>(m.cols());
    out.write(kBinMagic, 4);
    out.write(reinterpret_cast<const char*>(&rows), 4);
    out.write(reinterpret_cast<const char*>(&cols), 4);
    std::vector<float> data(static_cast<std::size_t>(rows) * cols);
    for (std::uint32_t i = 0; i < rows; ++i)
        for (std::uint32_t j = 0; j < cols; ++j)
            data[static_cast<std::size_t>(i) * cols + j] = static_cast<float>(m(i, j));
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * 4));
    if (!out) throw InvalidInputError("write failed for " + path);
}

}  // namespace

MatrixFormat format_for_path(const std::string& path) {
    return path.size() >= 4 && path.compare(path.size() - 4, 4, ".bin") == 0 ? MatrixFormat::Bin
                                                                             : MatrixFormat::Csv;
}

Matrix load_matrix(const std::string& path, MatrixFormat format) {
    return format == MatrixFormat::Bin ? load_bin(path) : load_csv(path);
}

void save_matrix(const Matrix& m, const std::string& path, MatrixFormat format) {
    if (m.rows() < 1 || m.cols() < 1) throw InvalidInputError("refusing to save empty matrix");
    if (!m.allFinite()) throw InvalidInputError("refusing to save non-finite matrix");
    if (format == MatrixFormat::Bin)
        save_bin(m, path);
    else
        save_csv(m, path);
}

std::vector<int> load_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInputError("cannot open " + path);
    std::vector<int> labels;
    std::string line;
    while (std::getline(in, line)) {
        const std::string_view tok = trim(line);
        if (tok.empty()) continue;
        int value = 0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
        if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
            throw InvalidInputError(path + ": cannot parse label on line " +
                                    std::to_string(labels.size() + 1));
        if (value < 0) throw InvalidInputError(path + ": negative label on line " +
                                               std::to_string(labels.size() + 1));
        labels.push_back(value);
    }
    if (labels.empty()) throw InvalidInputError(path + ": no labels found");
    return labels;
}

void save_labels(const std::vector<int>& labels, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InvalidInputError("cannot open " + path + " for writing");
    for (const int l : labels) out << l << '\n';
    if (!out) throw InvalidInputError("write failed for " + path);
}

std::pair<Matrix, std::vector<int>> generate_synthetic(const SyntheticSpec& spec) {
    if (spec.k < 1 || spec.dim < 1 || spec.rank < 1)
        throw InvalidInputError("synthetic: k, dim and rank must be positive");
    if (spec.rank * spec.k > spec.dim)
        throw InvalidInputError("synthetic: rank*k exceeds ambient dimension, subspaces cannot be independent");
    if (static_cast<int>(spec.segments.size()) != spec.k)
        throw InvalidInputError("synthetic: need one segment length per cluster");
    if (spec.sigma < 0.0) throw InvalidInputError("synthetic: sigma must be non-negative");
    Eigen::Index n = 0;
    for (const int len : spec.segments) {
        if (len < 1) throw InvalidInputError("synthetic: segment lengths must be positive");
        n += len;
    }

    Rng rng(spec.seed);
    const int span = spec.rank * spec.k;
    Matrix g(spec.dim, span);
    for (Eigen::Index j = 0; j < g.cols(); ++j)
        for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, j) = rng.gaussian();
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix bases = qr.householderQ() * Matrix::Identity(spec.dim, span);

    Matrix x(spec.dim, n);
    std::vector<int> labels(n);
    Eigen::Index col = 0;
    for (int seg = 0; seg < spec.k; ++seg) {
        const auto block = bases.middleCols(static_cast<Eigen::Index>(seg) * spec.rank, spec.rank);
        for (int t = 0; t < spec.segments[seg]; ++t, ++col) {
            Vector coeff(spec.rank);
            for (int r = 0; r < spec.rank; ++r) coeff(r) = rng.gaussian();
            coeff.normalize();
            x.col(col) = block * coeff;
            if (spec.sigma > 0.0)
                for (Eigen::Index i = 0; i < x.rows(); ++i)
                    x(i, col) += spec.sigma * rng.gaussian();
            labels[col] = seg;
        }
    }
    return {std::move(x), std::move(labels)};
}

Matrix corrupt(const Matrix& x, const NoiseSpec& spec) {
    if (spec.sigma < 0.0) throw InvalidInputError("corrupt: sigma must be non-negative");
    if (spec.sigma == 0.0) return x;  // exact passthrough, no RNG draws
    Rng rng(spec.seed);
    Matrix out = x;
    for (Eigen::Index j = 0; j < out.cols(); ++j)
        for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) += spec.sigma * rng.gaussian();
    return out;
}

PcaResult pca_project(const Matrix& x, int k) {
    if (k < 1 || k > std::min(x.rows(), x.cols()))
        throw InvalidInputError("pca: need 1 <= k <= min(rows, cols)");
    Matrix centered = x.colwise() - x.rowwise().mean();
    Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinU);
    const Vector& sv = svd.singularValues();
    const double total = sv.squaredNorm();

    Matrix components = svd.matrixU().leftCols(k);
    for (Eigen::Index c = 0; c < k; ++c) {
        Eigen::Index at = 0;
        components.col(c).cwiseAbs().maxCoeff(&at);
        if (components(at, c) < 0.0) components.col(c) = -components.col(c);
    }

    PcaResult out;
    out.projections = components.transpose() * centered;
    out.explained.resize(k);
    for (int c = 0; c < k; ++c) out.explained[c] = total > 0.0 ? sv(c) * sv(c) / total : 0.0;
    return out;
}

}  // namespace tr2c
