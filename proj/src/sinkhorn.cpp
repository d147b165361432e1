#include "tr2c/sinkhorn.hpp"

#include <vector>

#include "tr2c/errors.hpp"

namespace tr2c {

namespace {

struct ForwardState {
    Matrix k0;                   // exp((M - rowmax) / tau), floored
    std::vector<Vector> u, v;    // scaling vectors per round; v[0] = ones
};

// Row and column scalings in multiplicative form: one round is
//   u <- 1 ./ (K0 v),  v <- 1 ./ (K0^T u)
// which reproduces alternating row-then-column normalization of
// diag(u) K0 diag(v). The row-max shift only rescales rows of K0 and is
// absorbed exactly by the first row normalization.
ForwardState run_forward(const Matrix& m, const SinkhornConfig& cfg) {
    if (!m.allFinite()) throw InvalidInputError("sinkhorn_project: non-finite input");
    if (m.rows() != m.cols() || m.rows() < 1)
        throw InvalidInputError("sinkhorn_project: input must be a nonempty square matrix");
    if (cfg.iterations < 1) throw ConfigError("sinkhorn_project: iterations must be >= 1");
    if (cfg.tau <= 0.0) throw ConfigError("sinkhorn_project: tau must be positive");

    ForwardState st;
    const Vector shift = m.rowwise().maxCoeff();
    st.k0 = (((m.colwise() - shift) / cfg.tau).array().exp()).cwiseMax(cfg.epsilon_floor);

    const Eigen::Index n = m.rows();
    st.u.reserve(cfg.iterations);
    st.v.reserve(cfg.iterations + 1);
    st.v.push_back(Vector::Ones(n));
    Vector u(n), v = st.v[0];
    for (int t = 0; t < cfg.iterations; ++t) {
        u = (st.k0 * v).cwiseInverse();
        st.u.push_back(u);
        v = (st.k0.transpose() * u).cwiseInverse();
        st.v.push_back(v);
    }
    return st;
}

Matrix assemble(const ForwardState& st) {
    return st.u.back().asDiagonal() * st.k0 * st.v.back().asDiagonal();
}

}  // namespace

Affinity sinkhorn_project(const Matrix& m, const SinkhornConfig& cfg) {
    ForwardState st = run_forward(m, cfg);
    Affinity out;
    out.gamma = assemble(st);
    out.row_tol = (out.gamma.rowwise().sum().array() - 1.0).abs().maxCoeff();
    out.col_tol = (out.gamma.colwise().sum().array() - 1.0).abs().maxCoeff();
    return out;
}

Matrix sinkhorn_backward(const Matrix& m, const SinkhornConfig& cfg, const Matrix& upstream) {
    if (upstream.rows() != m.rows() || upstream.cols() != m.cols())
        throw InvalidInputError("sinkhorn_backward: upstream shape mismatch");
    ForwardState st = run_forward(m, cfg);
    const Matrix& k0 = st.k0;
    const Vector& u_last = st.u.back();
    const Vector& v_last = st.v.back();

    // direct term of Gamma = diag(u) K0 diag(v)
    Matrix dk = upstream.array() * (u_last * v_last.transpose()).array();
    Vector du = (upstream.array() * k0.array()).matrix() * v_last;
    Vector dv = (upstream.array() * k0.array()).matrix().transpose() * u_last;

    // unroll the rounds in reverse; inside round t:
    //   v_t = 1 ./ w,  w = K0^T u_t      and      u_t = 1 ./ r,  r = K0 v_{t-1}
    for (int t = cfg.iterations - 1; t >= 0; --t) {
        Vector dw = -dv.cwiseProduct(st.v[t + 1].cwiseProduct(st.v[t + 1]));
        dk.noalias() += st.u[t] * dw.transpose();
        du.noalias() += k0 * dw;

        Vector dr = -du.cwiseProduct(st.u[t].cwiseProduct(st.u[t]));
        dk.noalias() += dr * st.v[t].transpose();
        dv.noalias() = k0.transpose() * dr;
        du.setZero();
    }
    // through the entrywise exponential; floored entries are constant in M and
    // the row-max shift cancels, so only live entries propagate
    Matrix dm = (dk.array() * k0.array() *
                 (k0.array() > cfg.epsilon_floor).cast<double>()).matrix();
    return dm / cfg.tau;
}

}  // namespace tr2c
