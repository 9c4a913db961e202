#include "vdp/stats.hpp"

#include <algorithm>
#include <cmath>

#include "vdp/error.hpp"

namespace vdp::stats {

std::optional<double> pearson(const Eigen::Ref<const Eigen::VectorXd>& a,
                              const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size()) throw ContractError("pearson: length mismatch");
  if (a.size() < 2) return std::nullopt;
  const Eigen::ArrayXd da = a.array() - a.mean();
  const Eigen::ArrayXd db = b.array() - b.mean();
  const double saa = (da * da).sum();
  const double sbb = (db * db).sum();
  if (!(saa > 0.0) || !(sbb > 0.0)) return std::nullopt;
  const double r = (da * db).sum() / std::sqrt(saa * sbb);
  return std::clamp(r, -1.0, 1.0);
}

std::optional<double> r_squared(const Eigen::Ref<const Eigen::VectorXd>& observed,
                                const Eigen::Ref<const Eigen::VectorXd>& predicted) {
  if (observed.size() != predicted.size()) {
    throw ContractError("r_squared: length mismatch");
  }
  const double ss_tot = (observed.array() - observed.mean()).square().sum();
  if (!(ss_tot > 0.0)) return std::nullopt;
  const double ss_res = (observed - predicted).squaredNorm();
  return 1.0 - ss_res / ss_tot;
}

double rmse(const Eigen::Ref<const Eigen::VectorXd>& a,
            const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size() || a.size() == 0) {
    throw ContractError("rmse: length mismatch or empty input");
  }
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

double population_std(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() == 0) throw ContractError("std of empty vector");
  return std::sqrt((v.array() - v.mean()).square().mean());
}

double median(std::vector<double> values) {
  if (values.empty()) throw ContractError("median of empty sample");
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

double sample_std(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

}  // namespace vdp::stats
