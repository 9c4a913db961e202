#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace vdp::stats {

/// Pearson correlation; nullopt if either series has zero variance or the
/// series are shorter than 2.
std::optional<double> pearson(const Eigen::Ref<const Eigen::VectorXd>& a,
                              const Eigen::Ref<const Eigen::VectorXd>& b);

/// Coefficient of determination of `predicted` against `observed`:
/// 1 - SS_res / SS_tot. nullopt if `observed` has zero variance.
std::optional<double> r_squared(const Eigen::Ref<const Eigen::VectorXd>& observed,
                                const Eigen::Ref<const Eigen::VectorXd>& predicted);

double rmse(const Eigen::Ref<const Eigen::VectorXd>& a,
            const Eigen::Ref<const Eigen::VectorXd>& b);

/// Population standard deviation (divides by n).
double population_std(const Eigen::Ref<const Eigen::VectorXd>& v);

/// Median of a nonempty sample (mean of the two middle values for even n).
double median(std::vector<double> values);

/// Sample standard deviation (divides by n - 1); 0 for n < 2.
double sample_std(std::span<const double> values);

}  // namespace vdp::stats
