#pragma once

#include <vector>

#include <Eigen/Dense>

namespace tr2c {

struct AccuracyResult {
    double acc = 0.0;
    std::vector<std::vector<long long>> confusion;  // [pred label][gt label] counts
    std::vector<int> matching;  // pred label -> matched gt label, -1 if padding
};

// Clustering accuracy: maximum-weight one-to-one label matching on the
// (square-padded) confusion matrix, solved by the Hungarian algorithm.
AccuracyResult accuracy(const std::vector<int>& pred, const std::vector<int>& gt);

// I(pred; gt) / sqrt(H(pred) H(gt)) with natural-log entropies.
// Both partitions single-cluster: 1.0. One entropy zero otherwise: 0.0.
double nmi(const std::vector<int>& pred, const std::vector<int>& gt);

// Maximum-total-cost assignment of rows to columns of a square matrix;
// returns the column picked for each row.
std::vector<int> hungarian_max(const Eigen::MatrixXd& score);

}  // namespace tr2c
