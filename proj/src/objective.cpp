#include "tr2c/objective.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <string>

#include "tr2c/errors.hpp"

namespace tr2c {

namespace {

void check_finite(const Matrix& m, const char* who) {
    if (!m.allFinite()) throw InvalidInputError(std::string(who) + ": non-finite input");
}

// logdet of a symmetric positive definite matrix from its lower triangle
double logdet_spd(Matrix m, const char* who) {
    Eigen::LLT<Eigen::Ref<Matrix>> llt(m);
    if (llt.info() != Eigen::Success)
        throw NumericalError(std::string(who) + ": Cholesky factorization failed");
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

// logdet(I + a B B^T) via the smaller of the two Gram forms
double logdet_gram(const Matrix& b, double a, GramSide side) {
    const Eigen::Index rows = b.rows(), cols = b.cols();
    if (side == GramSide::Auto) side = rows <= cols ? GramSide::Left : GramSide::Right;
    if (side == GramSide::Left) {
        Matrix g = Matrix::Identity(rows, rows);
        g.selfadjointView<Eigen::Lower>().rankUpdate(b, a);
        return logdet_spd(std::move(g), "logdet");
    }
    Matrix g = Matrix::Identity(cols, cols);
    g.selfadjointView<Eigen::Lower>().rankUpdate(b.transpose(), a);
    return logdet_spd(std::move(g), "logdet");
}

// packed upper-triangle indexing: (i, j) with i <= j -> j(j+1)/2 + i
inline Eigen::Index packed_size(Eigen::Index d) { return d * (d + 1) / 2; }

}  // namespace

TemporalGraph temporal_laplacian(int n, int window) {
    if (n < 2) throw InvalidInputError("temporal_laplacian: need at least 2 frames");
    if (window < 2 || window % 2 != 0)
        throw ConfigError("temporal_laplacian: window size must be a positive even integer");
    return TemporalGraph{n, window};
}

Matrix TemporalGraph::affinity() const {
    const int h = window / 2;
    Matrix w = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = std::max(0, i - h); j <= std::min(n - 1, i + h); ++j) w(i, j) = 1.0;
    return w;
}

Matrix TemporalGraph::laplacian() const {
    Matrix w = affinity();
    Matrix l = -w;
    l.diagonal() += w.rowwise().sum();
    return l;
}

Matrix TemporalGraph::apply_laplacian(const Matrix& z) const {
    if (z.cols() != n) throw InvalidInputError("apply_laplacian: frame count mismatch");
    const int h = window / 2;
    Matrix zw = z;  // offset 0 term
    for (int off = 1; off <= h; ++off) {
        const int len = n - off;
        if (len <= 0) break;
        zw.leftCols(len) += z.rightCols(len);
        zw.rightCols(len) += z.leftCols(len);
    }
    Matrix out = z;
    for (int i = 0; i < n; ++i) {
        const double deg = std::min(n - 1, i + h) - std::max(0, i - h) + 1;
        out.col(i) *= deg;
    }
    out -= zw;
    return out;
}

double coding_rate(const Matrix& z, double epsilon, GramSide side) {
    check_finite(z, "coding_rate");
    if (epsilon <= 0.0) throw InvalidInputError("coding_rate: epsilon must be positive");
    const double d = static_cast<double>(z.rows());
    const double n = static_cast<double>(z.cols());
    const double alpha = d / (n * epsilon * epsilon);
    return 0.5 * logdet_gram(z, alpha, side);
}

double class_coding_rate(const Matrix& z, const std::vector<int>& labels, int k,
                         double epsilon) {
    check_finite(z, "class_coding_rate");
    const Eigen::Index n = z.cols();
    if (static_cast<Eigen::Index>(labels.size()) != n)
        throw InvalidInputError("class_coding_rate: label count does not match frame count");
    if (k < 1) throw InvalidInputError("class_coding_rate: class count must be positive");
    std::vector<int> counts(k, 0);
    for (int lbl : labels) {
        if (lbl < 0 || lbl >= k) throw InvalidInputError("class_coding_rate: label out of range");
        ++counts[lbl];
    }
    const double d = static_cast<double>(z.rows());
    double total = 0.0;
    for (int j = 0; j < k; ++j) {
        if (counts[j] == 0)
            throw InvalidInputError("class_coding_rate: empty class " + std::to_string(j));
        Matrix zj(z.rows(), counts[j]);
        Eigen::Index c = 0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (labels[i] == j) zj.col(c++) = z.col(i);
        const double nj = static_cast<double>(counts[j]);
        const double alpha = d / (nj * epsilon * epsilon);
        total += nj / (2.0 * static_cast<double>(n)) * logdet_gram(zj, alpha, GramSide::Auto);
    }
    return total;
}

namespace {

void check_affinity_basic(const Matrix& gamma, Eigen::Index n, const char* who) {
    if (gamma.rows() != n || gamma.cols() != n)
        throw InvalidInputError(std::string(who) + ": affinity shape does not match frame count");
    check_finite(gamma, who);
    if ((gamma.array() < 0.0).any())
        throw InvalidInputError(std::string(who) + ": affinity has negative entries");
}

// The standalone entry point insists on a doubly stochastic affinity. The
// training loop cannot: a few Sinkhorn rounds leave row sums off by up to
// ~1e-3, which is fine for the relaxed rate itself, so the loss path only
// runs the basic checks above.
void check_affinity(const Matrix& gamma, Eigen::Index n, const char* who) {
    check_affinity_basic(gamma, n, who);
    const double row_dev = (gamma.rowwise().sum().array() - 1.0).abs().maxCoeff();
    const double col_dev = (gamma.colwise().sum().array() - 1.0).abs().maxCoeff();
    if (row_dev > 1e-4 || col_dev > 1e-4)
        throw InvalidInputError(std::string(who) + ": affinity rows/columns must sum to 1");
}

// Shared core for the relaxed class rate. Always factors the d x d side,
// assembling all N column matrices M_j = I + b Z Diag(Gamma_j) Z^T through one
// packed-Gram GEMM. With gradients enabled it also produces
//   dZ = sum_j (2b/N) M_j^-1 Z Diag(Gamma_j)   and   dG_ij = (b/N) z_i^T M_j^-1 z_i.
struct RelaxedResult {
    double value = 0.0;
    Matrix d_z, d_gamma;
};

RelaxedResult relaxed_core(const Matrix& z, const Matrix& gamma, double epsilon,
                           bool with_grad) {
    const Eigen::Index d = z.rows(), n = z.cols();
    const double beta = static_cast<double>(d) / (epsilon * epsilon);
    const Eigen::Index p = packed_size(d);

    // packed outer products, up(:, i) = upper triangle of z_i z_i^T
    Matrix up(p, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto zi = z.col(i);
        Eigen::Index idx = 0;
        for (Eigen::Index c = 0; c < d; ++c)
            for (Eigen::Index r = 0; r <= c; ++r) up(idx++, i) = zi(r) * zi(c);
    }

    Matrix mvec(p, n);
    mvec.noalias() = up * gamma;

    Matrix sv;  // packed inverses, off-diagonal doubled so dot(up_i, sv_j) = z_i^T S_j z_i
    if (with_grad) sv.resize(p, n);

    Matrix mj(d, d);
    double value = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        Eigen::Index idx = 0;
        for (Eigen::Index c = 0; c < d; ++c) {
            for (Eigen::Index r = 0; r <= c; ++r) mj(c, r) = beta * mvec(idx++, j);
            mj(c, c) += 1.0;
        }
        Eigen::LLT<Eigen::Ref<Matrix>> llt(mj);  // reads the lower triangle
        if (llt.info() != Eigen::Success)
            throw NumericalError("relaxed_class_coding_rate: Cholesky factorization failed");
        value += 2.0 * llt.matrixLLT().diagonal().array().log().sum();
        if (with_grad) {
            Matrix sj = llt.solve(Matrix::Identity(d, d));
            Eigen::Index k = 0;
            for (Eigen::Index c = 0; c < d; ++c)
                for (Eigen::Index r = 0; r <= c; ++r)
                    sv(k++, j) = r == c ? sj(r, c) : 2.0 * sj(r, c);
        }
    }

    RelaxedResult res;
    res.value = value / static_cast<double>(n);
    if (!with_grad) return res;

    const double scale = beta / static_cast<double>(n);
    res.d_gamma.resize(n, n);
    res.d_gamma.noalias() = up.transpose() * sv;
    res.d_gamma *= scale;

    // pv(:, i) = packed sum_j Gamma_ij S_j (still doubled off-diagonal)
    Matrix pv(p, n);
    pv.noalias() = sv * gamma.transpose();
    res.d_z.resize(d, n);
    Matrix pi(d, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index idx = 0;
        for (Eigen::Index c = 0; c < d; ++c)
            for (Eigen::Index r = 0; r <= c; ++r) {
                const double v = r == c ? pv(idx, i) : 0.5 * pv(idx, i);
                pi(r, c) = v;
                pi(c, r) = v;
                ++idx;
            }
        res.d_z.col(i).noalias() = pi * z.col(i);
    }
    res.d_z *= 2.0 * scale;
    return res;
}

}  // namespace

double relaxed_class_coding_rate(const Matrix& z, const Matrix& gamma, double epsilon) {
    check_finite(z, "relaxed_class_coding_rate");
    check_affinity(gamma, z.cols(), "relaxed_class_coding_rate");
    return relaxed_core(z, gamma, epsilon, false).value;
}

double temporal_regularizer(const Matrix& z, const TemporalGraph& g) {
    check_finite(z, "temporal_regularizer");
    return z.cwiseProduct(g.apply_laplacian(z)).sum();
}

LossTerms total_loss(const Matrix& z, const Matrix& gamma, const TemporalGraph& g,
                     const CodingConfig& cfg) {
    LossTerms t;
    if (cfg.enable_rho) t.rho = coding_rate(z, cfg.epsilon);
    if (cfg.enable_rho_c) {
        check_finite(z, "total_loss");
        check_affinity_basic(gamma, z.cols(), "total_loss");
        t.rho_c = relaxed_core(z, gamma, cfg.epsilon, false).value;
    }
    if (cfg.enable_temporal) t.reg = temporal_regularizer(z, g);
    t.total = -(cfg.enable_rho ? t.rho : 0.0) + cfg.lambda1 * (cfg.enable_rho_c ? t.rho_c : 0.0) +
              cfg.lambda2 * (cfg.enable_temporal ? t.reg : 0.0);
    return t;
}

LossAdjoints loss_adjoints(const Matrix& z, const Matrix& gamma, const TemporalGraph& g,
                           const CodingConfig& cfg) {
    check_finite(z, "loss_adjoints");
    const Eigen::Index d = z.rows(), n = z.cols();
    LossAdjoints out;
    out.d_z = Matrix::Zero(d, n);
    out.d_gamma = Matrix::Zero(n, n);

    if (cfg.enable_rho) {
        const double alpha = static_cast<double>(d) / (static_cast<double>(n) *
                                                       cfg.epsilon * cfg.epsilon);
        if (d <= n) {
            Matrix gm = Matrix::Identity(d, d);
            gm.selfadjointView<Eigen::Lower>().rankUpdate(z, alpha);
            Eigen::LLT<Matrix> llt(gm);
            if (llt.info() != Eigen::Success)
                throw NumericalError("coding_rate: Cholesky factorization failed");
            out.terms.rho = llt.matrixLLT().diagonal().array().log().sum();
            out.d_z -= alpha * llt.solve(z);
        } else {
            // (I + a Z Z^T)^-1 Z = Z (I + a Z^T Z)^-1
            Matrix gm = Matrix::Identity(n, n);
            gm.selfadjointView<Eigen::Lower>().rankUpdate(z.transpose(), alpha);
            Eigen::LLT<Matrix> llt(gm);
            if (llt.info() != Eigen::Success)
                throw NumericalError("coding_rate: Cholesky factorization failed");
            out.terms.rho = llt.matrixLLT().diagonal().array().log().sum();
            out.d_z -= alpha * (z * llt.solve(Matrix::Identity(n, n)));
        }
    }

    if (cfg.enable_rho_c) {
        check_affinity_basic(gamma, n, "loss_adjoints");
        RelaxedResult rc = relaxed_core(z, gamma, cfg.epsilon, true);
        out.terms.rho_c = rc.value;
        out.d_z.noalias() += cfg.lambda1 * rc.d_z;
        out.d_gamma = cfg.lambda1 * rc.d_gamma;
    }

    if (cfg.enable_temporal) {
        Matrix zl = g.apply_laplacian(z);
        out.terms.reg = z.cwiseProduct(zl).sum();
        out.d_z.noalias() += (2.0 * cfg.lambda2) * zl;
    }

    out.terms.total = -(cfg.enable_rho ? out.terms.rho : 0.0) +
                      cfg.lambda1 * (cfg.enable_rho_c ? out.terms.rho_c : 0.0) +
                      cfg.lambda2 * (cfg.enable_temporal ? out.terms.reg : 0.0);
    return out;
}

}  // namespace tr2c
