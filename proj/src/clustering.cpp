#include "tr2c/clustering.hpp"

#include <Eigen/Eigenvalues>
#include <limits>

#include "tr2c/errors.hpp"
#include "tr2c/rng.hpp"

namespace tr2c {

namespace {

// squared distance of every point (row) to the nearest of the chosen centroids
void min_sq_dist(const Matrix& pts, const Matrix& centroids, int n_centroids, Vector& d2) {
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (int c = 0; c < n_centroids; ++c)
            best = std::min(best, (pts.row(i) - centroids.row(c)).squaredNorm());
        d2(i) = best;
    }
}

Matrix seed_kmeanspp(const Matrix& pts, int k, Rng& rng) {
    const Eigen::Index n = pts.rows();
    Matrix centroids(k, pts.cols());
    centroids.row(0) = pts.row(static_cast<Eigen::Index>(rng.uniform_int(n)));
    Vector d2(n);
    for (int c = 1; c < k; ++c) {
        min_sq_dist(pts, centroids, c, d2);
        const double total = d2.sum();
        if (total <= 0.0) {
            centroids.row(c) = pts.row(static_cast<Eigen::Index>(rng.uniform_int(n)));
            continue;
        }
        const double r = rng.uniform01() * total;
        double cum = 0.0;
        Eigen::Index pick = n - 1;
        for (Eigen::Index i = 0; i < n; ++i) {
            cum += d2(i);
            if (cum > r) {
                pick = i;
                break;
            }
        }
        centroids.row(c) = pts.row(pick);
    }
    return centroids;
}

}  // namespace

std::vector<int> kmeans(const Matrix& points, int k, std::uint64_t seed, int restarts,
                        int max_iters) {
    const Eigen::Index n = points.rows();
    if (k < 1) throw InvalidInputError("kmeans: k must be positive");
    if (n < k) throw InvalidInputError("kmeans: fewer points than clusters");

    Rng rng(seed);
    std::vector<int> best_labels;
    double best_inertia = std::numeric_limits<double>::infinity();

    for (int rs = 0; rs < restarts; ++rs) {
        Matrix centroids = seed_kmeanspp(points, k, rng);
        std::vector<int> labels(n, -1);
        for (int it = 0; it < max_iters; ++it) {
            bool changed = false;
            for (Eigen::Index i = 0; i < n; ++i) {
                int nearest = 0;
                double nd = (points.row(i) - centroids.row(0)).squaredNorm();
                for (int c = 1; c < k; ++c) {
                    const double d = (points.row(i) - centroids.row(c)).squaredNorm();
                    if (d < nd) {  // ties keep the lowest centroid index
                        nd = d;
                        nearest = c;
                    }
                }
                if (labels[i] != nearest) {
                    labels[i] = nearest;
                    changed = true;
                }
            }
            if (!changed) break;

            Matrix sums = Matrix::Zero(k, points.cols());
            std::vector<int> counts(k, 0);
            for (Eigen::Index i = 0; i < n; ++i) {
                sums.row(labels[i]) += points.row(i);
                ++counts[labels[i]];
            }
            for (int c = 0; c < k; ++c) {
                if (counts[c] > 0) {
                    centroids.row(c) = sums.row(c) / counts[c];
                } else {
                    // re-seed an emptied cluster from the farthest point
                    Eigen::Index far = 0;
                    double fd = -1.0;
                    for (Eigen::Index i = 0; i < n; ++i) {
                        const double d = (points.row(i) - centroids.row(labels[i])).squaredNorm();
                        if (d > fd) {
                            fd = d;
                            far = i;
                        }
                    }
                    centroids.row(c) = points.row(far);
                }
            }
        }
        double inertia = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            inertia += (points.row(i) - centroids.row(labels[i])).squaredNorm();
        if (inertia < best_inertia) {  // ties keep the earliest restart
            best_inertia = inertia;
            best_labels = labels;
        }
    }
    return best_labels;
}

std::vector<int> spectral_cluster(const Matrix& gamma, int k, std::uint64_t seed) {
    const Eigen::Index n = gamma.rows();
    if (gamma.cols() != n || n < 1) throw InvalidInputError("spectral_cluster: gamma must be square");
    if (k < 1 || k > n) throw InvalidInputError("spectral_cluster: need 1 <= k <= frame count");
    if (!gamma.allFinite()) throw InvalidInputError("spectral_cluster: non-finite affinity");

    Matrix a = 0.5 * (gamma + gamma.transpose());
    Vector deg = a.rowwise().sum();
    if ((deg.array() <= 0.0).any())
        throw NumericalError("spectral_cluster: zero-degree row in affinity");
    Vector dinv_sqrt = deg.array().rsqrt();

    Matrix lsym = -(dinv_sqrt.asDiagonal() * a * dinv_sqrt.asDiagonal());
    lsym.diagonal().array() += 1.0;

    Eigen::SelfAdjointEigenSolver<Matrix> eig(lsym);
    if (eig.info() != Eigen::Success)
        throw NumericalError("spectral_cluster: eigendecomposition failed");
    Matrix embedding = eig.eigenvectors().leftCols(k);  // ascending eigenvalues

    for (Eigen::Index i = 0; i < n; ++i) {
        const double nrm = embedding.row(i).norm();
        if (nrm > 1e-12) embedding.row(i) /= nrm;
    }
    return kmeans(embedding, k, seed);
}

}  // namespace tr2c
