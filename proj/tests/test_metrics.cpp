#include <doctest.h>

#include <algorithm>
#include <vector>

#include "helpers.hpp"
#include "tr2c/errors.hpp"
#include "tr2c/metrics.hpp"
#include "tr2c/rng.hpp"

using tr2c::Rng;

namespace {

// brute-force maximum assignment over all row->column permutations
double brute_force_best(const Eigen::MatrixXd& score) {
    const int n = static_cast<int>(score.rows());
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    double best = -1e300;
    do {
        double total = 0.0;
        for (int i = 0; i < n; ++i) total += score(i, perm[i]);
        best = std::max(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

std::vector<int> relabel(const std::vector<int>& labels, const std::vector<int>& bijection) {
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) out[i] = bijection[labels[i]];
    return out;
}

}  // namespace

TEST_CASE("accuracy: frozen hand examples") {
    const std::vector<int> gt{0, 0, 1, 1};
    const std::vector<int> pred{0, 1, 1, 1};
    const tr2c::AccuracyResult r = tr2c::accuracy(pred, gt);
    CHECK(r.acc == 0.75);
    REQUIRE(r.confusion.size() == 2);
    CHECK(r.confusion[0][0] == 1);
    CHECK(r.confusion[0][1] == 0);
    CHECK(r.confusion[1][0] == 1);
    CHECK(r.confusion[1][1] == 2);
    CHECK(r.matching == std::vector<int>{0, 1});

    CHECK(tr2c::accuracy(gt, gt).acc == 1.0);
    CHECK(tr2c::accuracy({1, 1, 0, 0}, gt).acc == 1.0);  // bijective relabeling
}

TEST_CASE("accuracy: unequal label counts pad to a square matching") {
    // three predicted clusters against two true ones: the extra cluster
    // matches a padding column and counts as errors
    const std::vector<int> gt{0, 0, 0, 1, 1, 1};
    const std::vector<int> pred{0, 0, 2, 1, 1, 2};
    const tr2c::AccuracyResult r = tr2c::accuracy(pred, gt);
    CHECK(r.acc == doctest::Approx(4.0 / 6.0).epsilon(1e-15));
    REQUIRE(r.matching.size() == 3);
    CHECK(r.matching[0] == 0);
    CHECK(r.matching[1] == 1);
    CHECK(r.matching[2] == -1);

    // two predicted labels against three true ones
    const std::vector<int> gt2{0, 0, 1, 1, 2, 2};
    const std::vector<int> pred2{0, 0, 1, 1, 1, 1};
    CHECK(tr2c::accuracy(pred2, gt2).acc == doctest::Approx(4.0 / 6.0).epsilon(1e-15));
}

TEST_CASE("accuracy and nmi: validation") {
    CHECK_THROWS_AS(tr2c::accuracy({}, {}), tr2c::InvalidInputError);
    CHECK_THROWS_AS(tr2c::accuracy({0, 1}, {0}), tr2c::InvalidInputError);
    CHECK_THROWS_AS(tr2c::accuracy({0, -1}, {0, 1}), tr2c::InvalidInputError);
    CHECK_THROWS_AS(tr2c::nmi({0, 1}, {0, 1, 1}), tr2c::InvalidInputError);
}

TEST_CASE("nmi: frozen hand examples and edge cases") {
    // independent 2x2 contingency table
    CHECK(tr2c::nmi({0, 1, 0, 1}, {0, 0, 1, 1}) == 0.0);
    // identical two-class partitions
    CHECK(tr2c::nmi({0, 0, 1, 1}, {0, 0, 1, 1}) == doctest::Approx(1.0).epsilon(1e-12));
    // constant pred against balanced gt: zero entropy on one side
    CHECK(tr2c::nmi({0, 0, 0, 0}, {0, 0, 1, 1}) == 0.0);
    CHECK(tr2c::nmi({0, 0, 1, 1}, {1, 1, 1, 1}) == 0.0);
    // both single-cluster: identical partitions by convention
    CHECK(tr2c::nmi({0, 0, 0}, {2, 2, 2}) == 1.0);
    // permuted identical partition keeps nmi 1
    CHECK(tr2c::nmi({1, 1, 0, 0}, {0, 0, 1, 1}) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("nmi: symmetric and within [0, 1]") {
    Rng rng(42);
    for (int t = 0; t < 30; ++t) {
        std::vector<int> a(20), b(20);
        for (int i = 0; i < 20; ++i) {
            a[i] = static_cast<int>(rng.uniform_int(4));
            b[i] = static_cast<int>(rng.uniform_int(3));
        }
        const double fwd = tr2c::nmi(a, b);
        CHECK(fwd == tr2c::nmi(b, a));
        CHECK(fwd >= 0.0);
        CHECK(fwd <= 1.0 + 1e-12);
    }
}

TEST_CASE("metrics: exact invariance under relabeling bijections") {
    Rng rng(43);
    for (int t = 0; t < 25; ++t) {
        const int k = 2 + static_cast<int>(rng.uniform_int(4));
        std::vector<int> pred(30), gt(30);
        for (int i = 0; i < 30; ++i) {
            pred[i] = static_cast<int>(rng.uniform_int(k));
            gt[i] = static_cast<int>(rng.uniform_int(k));
        }
        // make sure every label occurs so the bijection is onto
        for (int l = 0; l < k; ++l) {
            pred[l] = l;
            gt[30 - 1 - l] = l;
        }
        std::vector<int> bijection(k);
        for (int l = 0; l < k; ++l) bijection[l] = l;
        std::shuffle(bijection.begin(), bijection.end(),
                     std::mt19937(static_cast<unsigned>(1000 + t)));

        const double acc0 = tr2c::accuracy(pred, gt).acc;
        const double nmi0 = tr2c::nmi(pred, gt);
        CHECK(tr2c::accuracy(relabel(pred, bijection), gt).acc == acc0);
        CHECK(tr2c::accuracy(pred, relabel(gt, bijection)).acc == acc0);
        CHECK(tr2c::nmi(relabel(pred, bijection), gt) == nmi0);
        CHECK(tr2c::nmi(pred, relabel(gt, bijection)) == nmi0);
        CHECK(acc0 > 0.0);
        CHECK(acc0 <= 1.0);
    }
}

TEST_CASE("hungarian: matches brute force on random square matrices") {
    Rng rng(44);
    for (int t = 0; t < 40; ++t) {
        const int n = 2 + static_cast<int>(rng.uniform_int(5));  // up to 6x6
        Eigen::MatrixXd score(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                score(i, j) = t % 2 == 0 ? std::floor(rng.uniform(0.0, 50.0)) : rng.gaussian();
        const std::vector<int> match = tr2c::hungarian_max(score);

        std::vector<char> used(n, 0);
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            REQUIRE(match[i] >= 0);
            REQUIRE(match[i] < n);
            CHECK(!used[match[i]]);
            used[match[i]] = 1;
            total += score(i, match[i]);
        }
        CHECK(total == doctest::Approx(brute_force_best(score)).epsilon(1e-9));
    }
    CHECK_THROWS_AS(tr2c::hungarian_max(Eigen::MatrixXd::Zero(2, 3)), tr2c::InvalidInputError);
}
