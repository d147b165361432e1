// shared utilities for the test binaries (doctest-free so acceptance can use it too)
#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <Eigen/Dense>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "tr2c/rng.hpp"

namespace testutil {

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    tr2c::Rng rng(seed);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.gaussian();
    return m;
}

inline Eigen::MatrixXd random_unit_columns(Eigen::Index rows, Eigen::Index cols,
                                           std::uint64_t seed) {
    Eigen::MatrixXd m = random_matrix(rows, cols, seed);
    for (Eigen::Index j = 0; j < cols; ++j) m.col(j).normalize();
    return m;
}

// random orthogonal matrix via QR of a Gaussian draw
inline Eigen::MatrixXd random_orthogonal(Eigen::Index n, std::uint64_t seed) {
    const Eigen::MatrixXd g = random_matrix(n, n, seed);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        const auto base = std::filesystem::temp_directory_path();
        for (int i = 0; i < 10000; ++i) {
            auto candidate = base / ("tr2c_test_" + std::to_string(::getpid()) + "_" +
                                     std::to_string(i));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path = candidate;
                return;
            }
        }
        std::abort();
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

// runs the tr2c binary with the given argument string, capturing output
inline CliResult run_cli(const std::string& args, const TempDir& dir) {
    const std::string out_path = dir.file("_cli_stdout");
    const std::string err_path = dir.file("_cli_stderr");
    const std::string cmd = std::string(TR2C_CLI_PATH) + " " + args + " > " + out_path + " 2> " +
                            err_path;
    const int status = std::system(cmd.c_str());
    CliResult r;
    if (status == -1)
        r.exit_code = -1;
    else if (WIFEXITED(status))
        r.exit_code = WEXITSTATUS(status);
    else
        r.exit_code = 128;
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    return r;
}

}  // namespace testutil
