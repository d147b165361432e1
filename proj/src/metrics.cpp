#include "tr2c/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tr2c/errors.hpp"

namespace tr2c {

namespace {

void check_labels(const std::vector<int>& pred, const std::vector<int>& gt) {
    if (pred.empty() || pred.size() != gt.size())
        throw InvalidInputError("label sequences must be nonempty and equal length");
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] < 0 || gt[i] < 0)
            throw InvalidInputError("labels must be non-negative");
}

}  // namespace

// Maximum-score perfect matching on a square score matrix via the Kuhn-Munkres
// potentials formulation (O(n^3)). Returns the matched column for each row.
std::vector<int> hungarian_max(const Eigen::MatrixXd& score) {
    const int n = static_cast<int>(score.rows());
    if (score.cols() != n || n < 1) throw InvalidInputError("hungarian_max: matrix must be square");

    // minimize cost = (max entry) - score
    const double top = score.maxCoeff();
    const double inf = std::numeric_limits<double>::infinity();

    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);  // p[j]: row matched to column j (1-based)
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = (top - score(i0 - 1, j - 1)) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }

    std::vector<int> match(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] >= 1) match[p[j] - 1] = j - 1;
    return match;
}

AccuracyResult accuracy(const std::vector<int>& pred, const std::vector<int>& gt) {
    check_labels(pred, gt);
    const int kp = 1 + *std::max_element(pred.begin(), pred.end());
    const int kg = 1 + *std::max_element(gt.begin(), gt.end());
    const int k = std::max(kp, kg);

    AccuracyResult out;
    out.confusion.assign(kp, std::vector<long long>(kg, 0));
    for (std::size_t i = 0; i < pred.size(); ++i) ++out.confusion[pred[i]][gt[i]];

    Eigen::MatrixXd score = Eigen::MatrixXd::Zero(k, k);  // zero-padded to square
    for (int a = 0; a < kp; ++a)
        for (int b = 0; b < kg; ++b) score(a, b) = static_cast<double>(out.confusion[a][b]);

    const std::vector<int> match = hungarian_max(score);
    out.matching.assign(kp, -1);
    long long hit = 0;
    for (int a = 0; a < kp; ++a) {
        const int b = match[a];
        if (b < kg) {
            out.matching[a] = b;
            hit += out.confusion[a][b];
        }
    }
    out.acc = static_cast<double>(hit) / static_cast<double>(pred.size());
    return out;
}

double nmi(const std::vector<int>& pred, const std::vector<int>& gt) {
    check_labels(pred, gt);
    const std::size_t n = pred.size();
    const int kp = 1 + *std::max_element(pred.begin(), pred.end());
    const int kg = 1 + *std::max_element(gt.begin(), gt.end());

    std::vector<std::vector<long long>> joint(kp, std::vector<long long>(kg, 0));
    std::vector<long long> ca(kp, 0), cb(kg, 0);
    for (std::size_t i = 0; i < n; ++i) {
        ++joint[pred[i]][gt[i]];
        ++ca[pred[i]];
        ++cb[gt[i]];
    }

    // terms are summed in sorted order so the result is exactly invariant
    // under relabeling (the multiset of terms fixes the sum)
    const auto sorted_sum = [](std::vector<double>& terms) {
        std::sort(terms.begin(), terms.end());
        double s = 0.0;
        for (const double t : terms) s += t;
        return s;
    };

    const double dn = static_cast<double>(n);
    std::vector<double> ha_terms, hb_terms, mi_terms;
    for (int a = 0; a < kp; ++a)
        if (ca[a] > 0) {
            const double pa = ca[a] / dn;
            ha_terms.push_back(-pa * std::log(pa));
        }
    for (int b = 0; b < kg; ++b)
        if (cb[b] > 0) {
            const double pb = cb[b] / dn;
            hb_terms.push_back(-pb * std::log(pb));
        }
    for (int a = 0; a < kp; ++a)
        for (int b = 0; b < kg; ++b)
            if (joint[a][b] > 0) {
                const double pab = joint[a][b] / dn;
                mi_terms.push_back(pab *
                                   std::log(pab * dn * dn / (static_cast<double>(ca[a]) * cb[b])));
            }
    const double ha = sorted_sum(ha_terms);
    const double hb = sorted_sum(hb_terms);
    const double mi = sorted_sum(mi_terms);

    // single-cluster edge cases: two trivial partitions agree perfectly;
    // a trivial one against a non-trivial one shares no information
    if (ha == 0.0 && hb == 0.0) return 1.0;
    if (ha == 0.0 || hb == 0.0) return 0.0;
    return mi / std::sqrt(ha * hb);
}

}  // namespace tr2c
