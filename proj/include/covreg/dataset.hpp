#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace covreg {

// Immutable once constructed; every consumer treats it as read-only.
struct Dataset {
  Eigen::MatrixXd features;  // n x d
  Eigen::VectorXd target;    // n
  std::vector<std::string> feature_names;

  Eigen::Index n() const { return features.rows(); }
  Eigen::Index d() const { return features.cols(); }
};

// Validates shape, finiteness and unique feature names; throws InputError.
Dataset make_dataset(Eigen::MatrixXd features, Eigen::VectorXd target,
                     std::vector<std::string> feature_names);

struct TargetStats {
  double mean = 0.0;
  double std = 0.0;  // population convention (divide by n)
  double min = 0.0;
  double max = 0.0;
  double variance = 0.0;
};

TargetStats target_stats(const Dataset& ds);

// Header row required, comma separated, '.' decimal point, no quoting.
// Errors name the offending column/row.
Dataset load_csv(const std::filesystem::path& path, const std::string& target_column);

// Features in order, target written last under its own name. The optional
// extra column (e.g. the synthetic g_star) is appended after the target.
void write_csv(const Dataset& ds, const std::filesystem::path& path,
               const std::string& target_name = "y",
               const std::string& extra_name = "",
               const Eigen::VectorXd* extra = nullptr);

// Seeded uniform shuffle; sizes are (floor(n*f), n - floor(n*f)); row order
// inside each side follows the original dataset.
std::pair<Dataset, Dataset> train_test_split(const Dataset& ds, double train_fraction,
                                             std::uint64_t seed);

// The regression surface of the synthetic benchmark; depends on x[0..7] only.
double friedman_truth(const Eigen::Ref<const Eigen::RowVectorXd>& x);

struct SyntheticSample {
  Dataset data;
  Eigen::VectorXd truth;  // g*(X_i) per row
  double noise_sd = 0.0;
};

// Features i.i.d. uniform on {0.0, 0.1, ..., 0.9}; target = truth + N(0, sd).
// When noise_sd is absent it is chosen so that Var(truth) / sd^2 = 2, with
// Var estimated once on the generated sample.
SyntheticSample friedman_synthetic(Eigen::Index n, Eigen::Index d, std::uint64_t seed,
                                   std::optional<double> noise_sd = std::nullopt);

}  // namespace covreg
