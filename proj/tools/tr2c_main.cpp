// tr2c command-line driver: synthetic data, training, evaluation, sweeps, benchmarks.
#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "tr2c/clustering.hpp"
#include "tr2c/config.hpp"
#include "tr2c/data.hpp"
#include "tr2c/errors.hpp"
#include "tr2c/metrics.hpp"
#include "tr2c/rng.hpp"
#include "tr2c/trainer.hpp"

namespace {

using tr2c::Matrix;
using ordered_json = nlohmann::ordered_json;

// Runs independent tasks on a small worker pool. Results are written into
// caller-owned slots, so completion order never affects output order.
void run_parallel(std::vector<std::function<void()>>& tasks) {
    const std::size_t workers =
        std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), tasks.size());
    if (workers <= 1) {
        for (auto& t : tasks) t();
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(tasks.size());
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= tasks.size()) break;
                try {
                    tasks[i]();
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

tr2c::TrainConfig resolve_config(const std::string& path) {
    return path.empty() ? tr2c::TrainConfig{} : tr2c::parse_config_file(path);
}

ordered_json config_echo_json(const tr2c::TrainConfig& cfg) {
    ordered_json j;
    j["lambda1"] = cfg.coding.lambda1;
    j["lambda2"] = cfg.coding.lambda2;
    j["epsilon"] = cfg.coding.epsilon;
    j["window_s"] = cfg.window;
    j["d_pre"] = cfg.dim_pre;
    j["d"] = cfg.dim_out;
    j["iterations"] = cfg.iterations;
    j["eta"] = cfg.eta;
    j["optimizer"] = cfg.optimizer == tr2c::Optimizer::Adam ? "adam" : "plain-gd";
    j["seed"] = cfg.seed;
    j["k_clusters"] = cfg.k_clusters;
    j["sinkhorn_iters"] = cfg.sinkhorn.iterations;
    j["sinkhorn_tau"] = cfg.sinkhorn.tau;
    j["enable_rho"] = cfg.coding.enable_rho;
    j["enable_rho_c"] = cfg.coding.enable_rho_c;
    j["enable_temporal"] = cfg.coding.enable_temporal;
    return j;
}

ordered_json report_json(const tr2c::AccuracyResult& acc, double nmi_value,
                         const ordered_json& echo, std::uint64_t seed) {
    ordered_json j;
    j["acc"] = acc.acc;
    j["nmi"] = nmi_value;
    j["confusion"] = acc.confusion;
    j["matching"] = acc.matching;
    j["config_echo"] = echo;
    j["seed"] = seed;
    return j;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw tr2c::InvalidInputError("cannot open " + path + " for writing");
    out << text;
    if (!out) throw tr2c::InvalidInputError("write failed for " + path);
}

// one training run + spectral readout, used by the sweep commands
struct SweepResult {
    double acc = 0.0;
    double nmi = 0.0;
};

SweepResult run_and_score(const Matrix& x, const std::vector<int>& gt,
                          const tr2c::TrainConfig& cfg) {
    tr2c::TrainResult r = tr2c::train(x, cfg);
    const std::vector<int> pred =
        tr2c::spectral_cluster(r.affinity.gamma, cfg.k_clusters, cfg.seed);
    SweepResult out;
    out.acc = tr2c::accuracy(pred, gt).acc;
    out.nmi = tr2c::nmi(pred, gt);
    return out;
}

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
};

MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd m;
    for (const double x : xs) m.mean += x;
    m.mean /= static_cast<double>(xs.size());
    for (const double x : xs) m.std += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(m.std / static_cast<double>(xs.size()));
    return m;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int cmd_synth(const std::string& out, const std::string& labels_out, int dim, int rank,
              const std::vector<int>& segments, double sigma, std::uint64_t seed) {
    tr2c::SyntheticSpec spec;
    spec.k = static_cast<int>(segments.size());
    spec.dim = dim;
    spec.rank = rank;
    spec.segments = segments;
    spec.sigma = sigma;
    spec.seed = seed;
    auto [x, gt] = tr2c::generate_synthetic(spec);
    tr2c::save_matrix(x, out, tr2c::format_for_path(out));
    tr2c::save_labels(gt, labels_out);
    std::cout << "wrote " << x.rows() << "x" << x.cols() << " features to " << out << "\n";
    return 0;
}

int cmd_train(const std::string& features, const std::string& labels, const std::string& config,
              const std::string& out_dir, bool seed_set, std::uint64_t seed) {
    tr2c::TrainConfig cfg = resolve_config(config);
    if (seed_set) cfg.seed = seed;
    const Matrix x = tr2c::load_matrix(features, tr2c::format_for_path(features));

    std::filesystem::create_directories(out_dir);
    const auto path = [&](const char* name) { return out_dir + "/" + name; };

    tr2c::TrainResult result = tr2c::train(x, cfg);
    const std::vector<int> pred =
        tr2c::spectral_cluster(result.affinity.gamma, cfg.k_clusters, cfg.seed);

    tr2c::save_labels(pred, path("labels.txt"));
    tr2c::write_trace_csv(result.trace, path("trace.csv"));
    tr2c::save_checkpoint(result.params, path("checkpoint.bin"));

    if (!labels.empty()) {
        const std::vector<int> gt = tr2c::load_labels(labels);
        const tr2c::AccuracyResult acc = tr2c::accuracy(pred, gt);
        const double nmi_value = tr2c::nmi(pred, gt);
        write_text(path("report.json"),
                   report_json(acc, nmi_value, config_echo_json(cfg), cfg.seed).dump(2) + "\n");
        std::cout << "acc=" << acc.acc << " nmi=" << nmi_value << "\n";
    } else {
        std::cout << "trained " << cfg.iterations << " iterations, outputs in " << out_dir << "\n";
    }
    return 0;
}

int cmd_ablate(const std::string& features, const std::string& labels, const std::string& config,
               const std::string& out, int seeds) {
    if (seeds < 1) throw tr2c::InvalidInputError("ablate: --seeds must be >= 1");
    const tr2c::TrainConfig base = resolve_config(config);
    const Matrix x = tr2c::load_matrix(features, tr2c::format_for_path(features));
    const std::vector<int> gt = tr2c::load_labels(labels);

    // six ablations followed by the full loss
    constexpr bool kGates[7][3] = {{true, true, false}, {false, true, true}, {true, false, true},
                                   {true, false, false}, {false, true, false},
                                   {false, false, true}, {true, true, true}};

    std::vector<std::vector<SweepResult>> results(7, std::vector<SweepResult>(seeds));
    std::vector<std::function<void()>> tasks;
    for (int g = 0; g < 7; ++g)
        for (int s = 0; s < seeds; ++s)
            tasks.push_back([&, g, s] {
                tr2c::TrainConfig cfg = base;
                cfg.coding.enable_rho = kGates[g][0];
                cfg.coding.enable_rho_c = kGates[g][1];
                cfg.coding.enable_temporal = kGates[g][2];
                cfg.seed = base.seed + static_cast<std::uint64_t>(s);
                results[g][s] = run_and_score(x, gt, cfg);
            });
    run_parallel(tasks);

    std::string csv = "enable_rho,enable_rho_c,enable_temporal,acc_mean,nmi_mean\n";
    for (int g = 0; g < 7; ++g) {
        std::vector<double> accs, nmis;
        for (const SweepResult& r : results[g]) {
            accs.push_back(r.acc);
            nmis.push_back(r.nmi);
        }
        csv += std::string(kGates[g][0] ? "1" : "0") + "," + (kGates[g][1] ? "1" : "0") + "," +
               (kGates[g][2] ? "1" : "0") + "," + fmt(mean_std(accs).mean) + "," +
               fmt(mean_std(nmis).mean) + "\n";
    }
    write_text(out, csv);
    std::cout << "wrote ablation table to " << out << "\n";
    return 0;
}

int cmd_noise(const std::string& features, const std::string& labels, const std::string& config,
              const std::string& out, std::vector<double> sigmas, int seeds) {
    if (seeds < 1) throw tr2c::InvalidInputError("noise: --seeds must be >= 1");
    if (sigmas.empty()) throw tr2c::InvalidInputError("noise: --sigma list is empty");
    for (const double s : sigmas)
        if (!(s >= 0.0)) throw tr2c::InvalidInputError("noise: sigma values must be >= 0");
    std::sort(sigmas.begin(), sigmas.end());

    const tr2c::TrainConfig base = resolve_config(config);
    const Matrix x = tr2c::load_matrix(features, tr2c::format_for_path(features));
    const std::vector<int> gt = tr2c::load_labels(labels);

    const int ns = static_cast<int>(sigmas.size());
    std::vector<std::vector<SweepResult>> results(ns, std::vector<SweepResult>(seeds));
    std::vector<std::function<void()>> tasks;
    for (int si = 0; si < ns; ++si)
        for (int s = 0; s < seeds; ++s)
            tasks.push_back([&, si, s] {
                tr2c::TrainConfig cfg = base;
                cfg.seed = base.seed + static_cast<std::uint64_t>(s);
                tr2c::NoiseSpec noise;
                noise.sigma = sigmas[si];
                noise.seed = tr2c::splitmix64(cfg.seed ^
                                              (0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(si) + 1)));
                const Matrix xc = tr2c::corrupt(x, noise);
                results[si][s] = run_and_score(xc, gt, cfg);
            });
    run_parallel(tasks);

    std::string csv = "sigma,acc_mean,acc_std,nmi_mean,nmi_std\n";
    for (int si = 0; si < ns; ++si) {
        std::vector<double> accs, nmis;
        for (const SweepResult& r : results[si]) {
            accs.push_back(r.acc);
            nmis.push_back(r.nmi);
        }
        const MeanStd a = mean_std(accs), m = mean_std(nmis);
        csv += fmt(sigmas[si]) + "," + fmt(a.mean) + "," + fmt(a.std) + "," + fmt(m.mean) + "," +
               fmt(m.std) + "\n";
    }
    write_text(out, csv);
    std::cout << "wrote noise curve to " << out << "\n";
    return 0;
}

int cmd_bench(const std::string& config, const std::string& out, std::vector<int> ns, int input_dim,
              int reps) {
    if (ns.empty()) throw tr2c::InvalidInputError("bench: --n list is empty");
    if (input_dim < 1) throw tr2c::InvalidInputError("bench: --d must be >= 1");
    if (reps < 1) throw tr2c::InvalidInputError("bench: --reps must be >= 1");
    std::sort(ns.begin(), ns.end());
    const tr2c::TrainConfig base = resolve_config(config);

    std::string csv;
    for (const auto& [k, v] : tr2c::config_echo(base)) csv += "# " + k + " = " + v + "\n";
    csv += "# input_dim = " + std::to_string(input_dim) + "\n";
    csv += "# reps = " + std::to_string(reps) + " (plus one warmup iteration)\n";
    csv += "n,ms_per_iter\n";

    // benchmarks run sequentially so timings are not polluted by sibling runs
    for (const int n : ns) {
        if (n < std::max(2, base.k_clusters))
            throw tr2c::InvalidInputError("bench: n too small for the configured k_clusters");
        tr2c::Rng rng(tr2c::splitmix64(base.seed ^ static_cast<std::uint64_t>(n)));
        Matrix x(input_dim, n);
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) = rng.gaussian();

        tr2c::TrainConfig cfg = base;
        cfg.iterations = reps + 1;
        const tr2c::TrainResult r = tr2c::train(x, cfg);
        double ms = 0.0;
        for (int i = 1; i <= reps; ++i) ms += r.trace[i].ms;  // skip the warmup iteration
        ms /= reps;
        csv += std::to_string(n) + "," + fmt(ms) + "\n";
        std::cout << "n=" << n << " ms/iter=" << ms << "\n";
    }
    write_text(out, csv);
    return 0;
}

int cmd_pca(const std::string& features, const std::string& labels, int k,
            const std::string& out) {
    const Matrix x = tr2c::load_matrix(features, tr2c::format_for_path(features));
    const tr2c::PcaResult r = tr2c::pca_project(x, k);

    std::vector<int> gt;
    if (!labels.empty()) {
        gt = tr2c::load_labels(labels);
        if (static_cast<Eigen::Index>(gt.size()) != x.cols())
            throw tr2c::InvalidInputError("pca: label count does not match frame count");
    }

    // plot-ready export: one row per frame, header pc1..pck plus optional label
    std::string csv;
    for (int c = 0; c < k; ++c) csv += (c ? ",pc" : "pc") + std::to_string(c + 1);
    csv += gt.empty() ? "\n" : ",label\n";
    for (Eigen::Index i = 0; i < x.cols(); ++i) {
        for (int c = 0; c < k; ++c) csv += (c ? "," : "") + fmt(r.projections(c, i));
        if (!gt.empty()) csv += "," + std::to_string(gt[i]);
        csv += '\n';
    }
    write_text(out, csv);
    for (int c = 0; c < k; ++c)
        std::cout << "component " << c + 1 << " explained_variance=" << r.explained[c] << "\n";
    return 0;
}

int cmd_eval(const std::string& pred_path, const std::string& gt_path, const std::string& out) {
    const std::vector<int> pred = tr2c::load_labels(pred_path);
    const std::vector<int> gt = tr2c::load_labels(gt_path);
    const tr2c::AccuracyResult acc = tr2c::accuracy(pred, gt);
    const double nmi_value = tr2c::nmi(pred, gt);
    const std::string text =
        report_json(acc, nmi_value, ordered_json::object(), 0).dump(2) + "\n";
    if (!out.empty())
        write_text(out, text);
    else
        std::cout << text;
    std::cerr << "acc=" << acc.acc << " nmi=" << nmi_value << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tr2c: temporally consistent subspace clustering of frame sequences"};
    app.require_subcommand(1);

    std::string features, labels, config, out, pred;
    std::uint64_t seed = 0;
    int seeds = 5;

    auto* synth = app.add_subcommand("synth", "generate a synthetic union-of-subspaces sequence");
    int dim = 30, rank = 3;
    std::vector<int> segments{100, 100, 100};
    double sigma = 0.05;
    synth->add_option("--out", out, "output feature matrix (.csv or .bin)")->required();
    synth->add_option("--labels", labels, "output ground-truth labels file")->required();
    synth->add_option("--dim", dim, "ambient dimension D");
    synth->add_option("--rank", rank, "subspace rank r");
    synth->add_option("--segments", segments, "comma-separated segment lengths, one per cluster")
        ->delimiter(',');
    synth->add_option("--sigma", sigma, "additive Gaussian noise level");
    synth->add_option("--seed", seed, "generator seed");

    auto* train = app.add_subcommand("train", "train on a feature matrix and emit segmentation");
    train->add_option("--features", features, "input feature matrix (D rows x N columns)")
        ->required();
    train->add_option("--labels", labels, "optional ground-truth labels for the report");
    train->add_option("--config", config, "key = value config file");
    train->add_option("--out", out, "output directory")->required();
    auto* train_seed = train->add_option("--seed", seed, "override the config seed");

    auto* ablate = app.add_subcommand("ablate", "sweep loss-term gates and average over seeds");
    ablate->add_option("--features", features)->required();
    ablate->add_option("--labels", labels, "ground-truth labels")->required();
    ablate->add_option("--config", config);
    ablate->add_option("--out", out, "output CSV path")->required();
    ablate->add_option("--seeds", seeds, "number of seeds to average over");

    auto* noise = app.add_subcommand("noise", "noise-robustness curve over sigma values");
    std::vector<double> sigma_list;
    noise->add_option("--features", features)->required();
    noise->add_option("--labels", labels, "ground-truth labels")->required();
    noise->add_option("--config", config);
    noise->add_option("--out", out, "output CSV path")->required();
    noise->add_option("--sigma", sigma_list, "comma-separated noise levels")
        ->delimiter(',')
        ->required();
    noise->add_option("--seeds", seeds, "number of seeds per sigma");

    auto* bench = app.add_subcommand("bench", "time training iterations across sequence lengths");
    std::vector<int> n_list{200, 2000, 4000};
    int bench_d = 324, reps = 3;
    bench->add_option("--config", config);
    bench->add_option("--out", out, "output CSV path")->required();
    bench->add_option("--n", n_list, "comma-separated sequence lengths")->delimiter(',');
    bench->add_option("--d", bench_d, "input feature dimension");
    bench->add_option("--reps", reps, "timed iterations per n");

    auto* pca = app.add_subcommand("pca", "project features onto top principal components");
    int pca_k = 3;
    pca->add_option("--features", features)->required();
    pca->add_option("--labels", labels, "optional labels for the plot export");
    pca->add_option("--k", pca_k, "number of components");
    pca->add_option("--out", out, "output CSV (pc1..pck[,label] per frame)")->required();

    auto* eval = app.add_subcommand("eval", "score predicted labels against ground truth");
    eval->add_option("--pred", pred, "predicted labels file")->required();
    eval->add_option("--labels", labels, "ground-truth labels file")->required();
    eval->add_option("--out", out, "optional JSON report path (stdout otherwise)");

    try {
        app.parse(argc, argv);
        if (synth->parsed()) return cmd_synth(out, labels, dim, rank, segments, sigma, seed);
        if (train->parsed())
            return cmd_train(features, labels, config, out, train_seed->count() > 0, seed);
        if (ablate->parsed()) return cmd_ablate(features, labels, config, out, seeds);
        if (noise->parsed()) return cmd_noise(features, labels, config, out, sigma_list, seeds);
        if (bench->parsed()) return cmd_bench(config, out, n_list, bench_d, reps);
        if (pca->parsed()) return cmd_pca(features, labels, pca_k, out);
        if (eval->parsed()) return cmd_eval(pred, labels, out);
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const tr2c::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 1;
    } catch (const tr2c::InvalidInputError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 2;
    } catch (const tr2c::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
