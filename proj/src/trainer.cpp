#include "tr2c/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "tr2c/errors.hpp"
#include "tr2c/rng.hpp"

namespace tr2c {

namespace {

using Clock = std::chrono::steady_clock;

struct GradState {
    Matrix dz, dy;        // adjoints on the normalized heads
    LossTerms terms;
    double sinkhorn_ms = 0.0;
};

// loss and head adjoints for the current parameters; shared by train() and
// the finite-difference checker (which only needs the value)
LossTerms loss_and_head_adjoints(const ForwardCache& cache, const TemporalGraph& graph,
                                 const TrainConfig& cfg, Matrix* dz, Matrix* dy) {
    const Matrix sim = cache.y.transpose() * cache.y;
    Affinity aff = sinkhorn_project(sim, cfg.sinkhorn);
    if (!dz) return total_loss(cache.z, aff.gamma, graph, cfg.coding);

    LossAdjoints adj = loss_adjoints(cache.z, aff.gamma, graph, cfg.coding);
    *dz = std::move(adj.d_z);
    if (cfg.coding.enable_rho_c) {
        Matrix ds = sinkhorn_backward(sim, cfg.sinkhorn, adj.d_gamma);
        ds += ds.transpose().eval();
        dy->noalias() = cache.y * ds;
    } else {
        *dy = Matrix::Zero(cache.y.rows(), cache.y.cols());
    }
    return adj.terms;
}

void check_terms_finite(const LossTerms& t, int iter) {
    const char* bad = nullptr;
    if (!std::isfinite(t.rho)) bad = "rho";
    else if (!std::isfinite(t.rho_c)) bad = "rho_c";
    else if (!std::isfinite(t.reg)) bad = "reg";
    else if (!std::isfinite(t.total)) bad = "total";
    if (bad)
        throw NumericalError("train: non-finite loss term '" + std::string(bad) +
                             "' at iteration " + std::to_string(iter));
}

double grad_norm_sq(const NetworkParams& g) {
    return g.w1.squaredNorm() + g.b1.squaredNorm() + g.w2.squaredNorm() + g.b2.squaredNorm() +
           g.wg.squaredNorm() + g.bg.squaredNorm() + g.wh.squaredNorm() + g.bh.squaredNorm();
}

struct AdamState {
    NetworkParams m, v;
    explicit AdamState(const NetworkParams& p) {
        m = p;
        v = p;
        for (auto* s : {&m, &v}) {
            s->w1.setZero(); s->b1.setZero();
            s->w2.setZero(); s->b2.setZero();
            s->wg.setZero(); s->bg.setZero();
            s->wh.setZero(); s->bh.setZero();
        }
    }
};

template <typename Tensor>
void adam_update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, double eta,
                 double b1, double b2, double eps, int t) {
    m = b1 * m + (1.0 - b1) * grad;
    v = (b2 * v.array() + (1.0 - b2) * grad.array().square()).matrix();
    const double mc = 1.0 - std::pow(b1, t);
    const double vc = 1.0 - std::pow(b2, t);
    param.array() -= eta * (m.array() / mc) / ((v.array() / vc).sqrt() + eps);
}

void apply_update(NetworkParams& p, const NetworkParams& g, const TrainConfig& cfg,
                  AdamState* adam, int t) {
    if (cfg.optimizer == Optimizer::PlainGd) {
        p.w1 -= cfg.eta * g.w1; p.b1 -= cfg.eta * g.b1;
        p.w2 -= cfg.eta * g.w2; p.b2 -= cfg.eta * g.b2;
        p.wg -= cfg.eta * g.wg; p.bg -= cfg.eta * g.bg;
        p.wh -= cfg.eta * g.wh; p.bh -= cfg.eta * g.bh;
        return;
    }
    adam_update(p.w1, g.w1, adam->m.w1, adam->v.w1, cfg.eta, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, t);
    adam_update(p.b1, g.b1, adam->m.b1, adam->v.b1, cfg.eta, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, t);
    adam_update(p.w2, g.w2, adam->m.w2, adam->v.w2, cfg.eta, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, t);
    adam_update(p.b2, g.b2, adam->m.b2, adam->v.b2, cfg.eta, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, t);
    adam_update(p.wg, g.wg, adam->m.wg, adam->v.wg, cfg.eta, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, t);
    adam_update(p.bg, g.bg, adam->m.bg, adam->v.bg, cfg.eta, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, t);
    adam_update(p.wh, g.wh, adam->m.wh, adam->v.wh, cfg.eta, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, t);
    adam_update(p.bh, g.bh, adam->m.bh, adam->v.bh, cfg.eta, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, t);
}

}  // namespace

TrainResult train(const Matrix& x, const TrainConfig& cfg) {
    if (!x.allFinite()) throw InvalidInputError("train: non-finite input features");
    if (cfg.iterations < 1) throw ConfigError("train: iterations must be >= 1");
    if (cfg.eta <= 0.0) throw ConfigError("train: eta must be positive");
    if (cfg.k_clusters < 2) throw ConfigError("train: k_clusters must be >= 2");
    const Eigen::Index n = x.cols();
    if (n < cfg.k_clusters) throw InvalidInputError("train: fewer frames than clusters");

    const TemporalGraph graph = temporal_laplacian(static_cast<int>(n), cfg.window);
    NetworkParams params = network_init(static_cast<int>(x.rows()), cfg.dim_pre, cfg.dim_out,
                                        cfg.seed);
    AdamState adam(params);

    TrainResult res;
    res.trace.reserve(cfg.iterations);
    for (int it = 0; it < cfg.iterations; ++it) {
        const auto t0 = Clock::now();
        ForwardCache cache = network_forward(params, x);
        if (!cache.z.allFinite() || !cache.y.allFinite())
            throw NumericalError("train: non-finite representation at iteration " +
                                 std::to_string(it));
        Matrix dz, dy;
        LossTerms terms = loss_and_head_adjoints(cache, graph, cfg, &dz, &dy);
        check_terms_finite(terms, it);
        NetworkParams grads = network_backward(params, cache, dz, dy);
        apply_update(params, grads, cfg, &adam, it + 1);
        const auto t1 = Clock::now();

        TraceRow row;
        row.iter = it;
        row.loss = terms.total;
        row.rho = terms.rho;
        row.rho_c = terms.rho_c;
        row.reg = terms.reg;
        row.grad_norm = std::sqrt(grad_norm_sq(grads));
        row.ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        res.trace.push_back(row);
    }

    ForwardCache cache = network_forward(params, x);
    const Matrix sim = cache.y.transpose() * cache.y;
    res.affinity = sinkhorn_project(sim, cfg.sinkhorn);
    res.params = std::move(params);
    return res;
}

void write_trace_csv(const RunTrace& trace, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw InvalidInputError("write_trace_csv: cannot open " + path);
    f << "iter,loss,rho,rho_c,reg,grad_norm,ms\n";
    char buf[256];
    for (const TraceRow& r : trace) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.3f\n", r.iter,
                      r.loss, r.rho, r.rho_c, r.reg, r.grad_norm, r.ms);
        f << buf;
    }
}

double finite_diff_check(const Matrix& x, const TrainConfig& cfg, int n_sampled) {
    const TemporalGraph graph = temporal_laplacian(static_cast<int>(x.cols()), cfg.window);
    NetworkParams params = network_init(static_cast<int>(x.rows()), cfg.dim_pre, cfg.dim_out,
                                        cfg.seed);

    ForwardCache cache = network_forward(params, x);
    Matrix dz, dy;
    loss_and_head_adjoints(cache, graph, cfg, &dz, &dy);
    NetworkParams analytic = network_backward(params, cache, dz, dy);

    std::vector<std::pair<Matrix*, Matrix*>> mats = {
        {&params.w1, &analytic.w1}, {&params.w2, &analytic.w2},
        {&params.wg, &analytic.wg}, {&params.wh, &analytic.wh}};
    std::vector<std::pair<Vector*, Vector*>> vecs = {
        {&params.b1, &analytic.b1}, {&params.b2, &analytic.b2},
        {&params.bg, &analytic.bg}, {&params.bh, &analytic.bh}};

    auto loss_at = [&]() {
        ForwardCache c = network_forward(params, x);
        return loss_and_head_adjoints(c, graph, cfg, nullptr, nullptr).total;
    };

    const double h = 1e-5;
    Rng rng(splitmix64(cfg.seed ^ 0x5eedf00dULL));
    double worst = 0.0;
    for (int s = 0; s < n_sampled; ++s) {
        // pick a tensor proportionally to its size, then a coordinate in it
        std::int64_t total = 0;
        for (auto& [pm, am] : mats) total += pm->size();
        for (auto& [pv, av] : vecs) total += pv->size();
        std::int64_t pick = static_cast<std::int64_t>(rng.uniform_int(total));
        double* coord = nullptr;
        double analytic_val = 0.0;
        for (auto& [pm, am] : mats) {
            if (pick < pm->size()) {
                coord = pm->data() + pick;
                analytic_val = am->data()[pick];
                break;
            }
            pick -= pm->size();
        }
        if (!coord) {
            for (auto& [pv, av] : vecs) {
                if (pick < pv->size()) {
                    coord = pv->data() + pick;
                    analytic_val = av->data()[pick];
                    break;
                }
                pick -= pv->size();
            }
        }
        const double orig = *coord;
        *coord = orig + h;
        const double lp = loss_at();
        *coord = orig - h;
        const double lm = loss_at();
        *coord = orig;
        const double fd = (lp - lm) / (2.0 * h);
        const double rel = std::abs(fd - analytic_val) /
                           std::max({1.0, std::abs(fd), std::abs(analytic_val)});
        worst = std::max(worst, rel);
    }
    return worst;
}

}  // namespace tr2c
