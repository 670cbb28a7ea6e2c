#include "acl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "acl/error.hpp"

namespace acl {

double pearson_correlation(const std::vector<double>& a,
                           const std::vector<double>& b) {
    if (a.size() != b.size())
        throw DimensionError("pearson_correlation: lengths " +
                             std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()));
    const std::size_t n = a.size();
    if (n < 2)
        throw ArgumentError("pearson_correlation: need at least 2 samples");
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    if (va == 0.0 || vb == 0.0)
        throw UndefinedCorrelation(
            "pearson_correlation: constant input series");
    return cov / std::sqrt(va * vb);
}

std::vector<double> pck_at(const Tensor& pred, const Tensor& truth,
                           const PckSpec& spec) {
    if (pred.empty() || truth.empty())
        throw ArgumentError("pck_at: empty input");
    if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
        throw DimensionError("pck_at: prediction " + std::to_string(pred.rows()) +
                             "x" + std::to_string(pred.cols()) + " vs truth " +
                             std::to_string(truth.rows()) + "x" +
                             std::to_string(truth.cols()));
    if (pred.cols() % 2 != 0)
        throw DimensionError("pck_at: joint columns must come in (x, y) pairs");
    if (!(spec.beta > 0.0) || !(spec.box_h > 0.0) || !(spec.box_w > 0.0))
        throw ArgumentError("pck_at: beta and box extents must be positive");
    const int joints = pred.cols() / 2;
    const double thr = spec.beta * std::max(spec.box_h, spec.box_w);
    std::vector<double> frac(joints, 0.0);
    for (int j = 0; j < joints; ++j) {
        int hit = 0;
        for (int f = 0; f < pred.rows(); ++f) {
            const double dx = pred.at(f, 2 * j) - truth.at(f, 2 * j);
            const double dy = pred.at(f, 2 * j + 1) - truth.at(f, 2 * j + 1);
            if (std::sqrt(dx * dx + dy * dy) <= thr) ++hit;
        }
        frac[j] = static_cast<double>(hit) / pred.rows();
    }
    return frac;
}

double mae(const Tensor& pred, const Tensor& truth) {
    if (pred.empty() || truth.empty())
        throw ArgumentError("mae: empty input");
    if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
        throw DimensionError("mae: prediction " + std::to_string(pred.rows()) +
                             "x" + std::to_string(pred.cols()) + " vs truth " +
                             std::to_string(truth.rows()) + "x" +
                             std::to_string(truth.cols()));
    double acc = 0.0;
    const double* p = pred.data();
    const double* t = truth.data();
    for (std::size_t i = 0; i < pred.size(); ++i)
        acc += std::fabs(p[i] - t[i]);
    return acc / static_cast<double>(pred.size());
}

}  // namespace acl
