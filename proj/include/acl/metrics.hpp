#pragma once

#include <vector>

#include "acl/tensor.hpp"

namespace acl {

// Sample Pearson correlation. Lengths must match (DimensionError) and be
// >= 2 (ArgumentError); a constant series raises UndefinedCorrelation rather
// than returning NaN.
double pearson_correlation(const std::vector<double>& a,
                           const std::vector<double>& b);

struct PckSpec {
    double beta = 0.1;
    double box_h = 0.0;  // subject bounding box, pixels
    double box_w = 0.0;
};

// pred and truth are frames x (2*joints), flattened (x, y) pairs. A joint in
// a frame counts as correct when its Euclidean error is <= beta*max(h, w)
// (boundary inclusive). Returns the per-joint fraction of correct frames.
std::vector<double> pck_at(const Tensor& pred, const Tensor& truth,
                           const PckSpec& spec);

// Mean absolute error over all entries.
double mae(const Tensor& pred, const Tensor& truth);

}  // namespace acl
