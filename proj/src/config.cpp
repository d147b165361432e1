#include "tr2c/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>

#include "tr2c/errors.hpp"

namespace tr2c {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
    throw ConfigError(origin + ":" + std::to_string(line) + ": " + msg);
}

template <typename T>
T parse_num(std::string_view tok, const std::string& origin, int line, const char* key) {
    T value{};
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        fail(origin, line, std::string("invalid value for ") + key);
    return value;
}

bool parse_bool(std::string_view tok, const std::string& origin, int line, const char* key) {
    if (tok == "true" || tok == "1") return true;
    if (tok == "false" || tok == "0") return false;
    fail(origin, line, std::string(key) + " must be true, false, 1 or 0");
}

}  // namespace

TrainConfig parse_config_text(const std::string& text, const std::string& origin) {
    TrainConfig cfg;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) fail(origin, lineno, "expected key = value");
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view val = trim(line.substr(eq + 1));
        if (key.empty()) fail(origin, lineno, "empty key");
        if (val.empty()) fail(origin, lineno, "empty value for " + std::string(key));

        if (key == "lambda1") {
            cfg.coding.lambda1 = parse_num<double>(val, origin, lineno, "lambda1");
        } else if (key == "lambda2") {
            cfg.coding.lambda2 = parse_num<double>(val, origin, lineno, "lambda2");
        } else if (key == "epsilon") {
            cfg.coding.epsilon = parse_num<double>(val, origin, lineno, "epsilon");
        } else if (key == "window_s") {
            cfg.window = parse_num<int>(val, origin, lineno, "window_s");
        } else if (key == "d_pre") {
            cfg.dim_pre = parse_num<int>(val, origin, lineno, "d_pre");
        } else if (key == "d") {
            cfg.dim_out = parse_num<int>(val, origin, lineno, "d");
        } else if (key == "iterations") {
            cfg.iterations = parse_num<int>(val, origin, lineno, "iterations");
        } else if (key == "eta") {
            cfg.eta = parse_num<double>(val, origin, lineno, "eta");
        } else if (key == "optimizer") {
            if (val == "plain-gd")
                cfg.optimizer = Optimizer::PlainGd;
            else if (val == "adam")
                cfg.optimizer = Optimizer::Adam;
            else
                fail(origin, lineno, "optimizer must be plain-gd or adam");
        } else if (key == "seed") {
            cfg.seed = parse_num<std::uint64_t>(val, origin, lineno, "seed");
        } else if (key == "k_clusters") {
            cfg.k_clusters = parse_num<int>(val, origin, lineno, "k_clusters");
        } else if (key == "sinkhorn_iters") {
            cfg.sinkhorn.iterations = parse_num<int>(val, origin, lineno, "sinkhorn_iters");
        } else if (key == "sinkhorn_tau") {
            cfg.sinkhorn.tau = parse_num<double>(val, origin, lineno, "sinkhorn_tau");
        } else if (key == "enable_rho") {
            cfg.coding.enable_rho = parse_bool(val, origin, lineno, "enable_rho");
        } else if (key == "enable_rho_c") {
            cfg.coding.enable_rho_c = parse_bool(val, origin, lineno, "enable_rho_c");
        } else if (key == "enable_temporal") {
            cfg.coding.enable_temporal = parse_bool(val, origin, lineno, "enable_temporal");
        } else {
            fail(origin, lineno, "unknown key '" + std::string(key) + "'");
        }
    }

    const auto check = [&](bool ok, const char* msg) {
        if (!ok) throw ConfigError(origin + ": " + msg);
    };
    check(std::isfinite(cfg.coding.lambda1) && cfg.coding.lambda1 >= 0.0, "lambda1 must be >= 0");
    check(std::isfinite(cfg.coding.lambda2) && cfg.coding.lambda2 >= 0.0, "lambda2 must be >= 0");
    check(std::isfinite(cfg.coding.epsilon) && cfg.coding.epsilon > 0.0, "epsilon must be > 0");
    check(cfg.window >= 2 && cfg.window % 2 == 0, "window_s must be even and >= 2");
    check(cfg.dim_pre >= 1, "d_pre must be >= 1");
    check(cfg.dim_out >= 1, "d must be >= 1");
    check(cfg.iterations >= 1, "iterations must be >= 1");
    check(std::isfinite(cfg.eta) && cfg.eta > 0.0, "eta must be > 0");
    check(cfg.k_clusters >= 2, "k_clusters must be >= 2");
    check(cfg.sinkhorn.iterations >= 1, "sinkhorn_iters must be >= 1");
    check(std::isfinite(cfg.sinkhorn.tau) && cfg.sinkhorn.tau > 0.0, "sinkhorn_tau must be > 0");
    return cfg;
}

TrainConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

std::vector<std::pair<std::string, std::string>> config_echo(const TrainConfig& cfg) {
    char buf[64];
    const auto fmt = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    std::vector<std::pair<std::string, std::string>> out;
    out.emplace_back("lambda1", fmt(cfg.coding.lambda1));
    out.emplace_back("lambda2", fmt(cfg.coding.lambda2));
    out.emplace_back("epsilon", fmt(cfg.coding.epsilon));
    out.emplace_back("window_s", std::to_string(cfg.window));
    out.emplace_back("d_pre", std::to_string(cfg.dim_pre));
    out.emplace_back("d", std::to_string(cfg.dim_out));
    out.emplace_back("iterations", std::to_string(cfg.iterations));
    out.emplace_back("eta", fmt(cfg.eta));
    out.emplace_back("optimizer", cfg.optimizer == Optimizer::Adam ? "adam" : "plain-gd");
    out.emplace_back("seed", std::to_string(cfg.seed));
    out.emplace_back("k_clusters", std::to_string(cfg.k_clusters));
    out.emplace_back("sinkhorn_iters", std::to_string(cfg.sinkhorn.iterations));
    out.emplace_back("sinkhorn_tau", fmt(cfg.sinkhorn.tau));
    out.emplace_back("enable_rho", cfg.coding.enable_rho ? "true" : "false");
    out.emplace_back("enable_rho_c", cfg.coding.enable_rho_c ? "true" : "false");
    out.emplace_back("enable_temporal", cfg.coding.enable_temporal ? "true" : "false");
    return out;
}

}  // namespace tr2c
