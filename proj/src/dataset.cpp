#include "covreg/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "covreg/errors.hpp"
#include "covreg/rng.hpp"

namespace covreg {

Dataset make_dataset(Eigen::MatrixXd features, Eigen::VectorXd target,
                     std::vector<std::string> feature_names) {
  if (features.rows() < 1 || features.cols() < 1) {
    throw InputError("dataset: need at least one row and one feature");
  }
  if (target.size() != features.rows()) {
    throw InputError("dataset: target length does not match feature rows");
  }
  if (static_cast<Eigen::Index>(feature_names.size()) != features.cols()) {
    throw InputError("dataset: feature_names size does not match feature columns");
  }
  if (!features.allFinite() || !target.allFinite()) {
    throw InputError("dataset: non-finite entry");
  }
  std::set<std::string> unique(feature_names.begin(), feature_names.end());
  if (unique.size() != feature_names.size()) {
    throw InputError("dataset: duplicate feature name");
  }
  return Dataset{std::move(features), std::move(target), std::move(feature_names)};
}

TargetStats target_stats(const Dataset& ds) {
  TargetStats s;
  const Eigen::VectorXd& y = ds.target;
  s.mean = y.mean();
  s.variance = (y.array() - s.mean).square().sum() / static_cast<double>(y.size());
  s.std = std::sqrt(s.variance);
  s.min = y.minCoeff();
  s.max = y.maxCoeff();
  return s;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& raw, std::size_t row, const std::string& column) {
  const std::string cell = trim(raw);
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || cell.empty()) {
    throw InputError("csv: non-numeric value '" + cell + "' at data row " + std::to_string(row) +
                     ", column '" + column + "'");
  }
  if (!std::isfinite(value)) {
    throw InputError("csv: non-finite value at data row " + std::to_string(row) + ", column '" +
                     column + "'");
  }
  return value;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const std::string& target_column) {
  std::ifstream in(path);
  if (!in) throw InputError("csv: cannot open '" + path.string() + "'");

  std::string header;
  if (!std::getline(in, header)) throw InputError("csv: empty file '" + path.string() + "'");
  std::vector<std::string> names = split_line(header);
  for (auto& n : names) n = trim(n);

  Eigen::Index target_idx = -1;
  std::vector<std::string> feature_names;
  for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(names.size()); ++j) {
    if (names[static_cast<std::size_t>(j)] == target_column) {
      if (target_idx >= 0) throw InputError("csv: duplicate target column '" + target_column + "'");
      target_idx = j;
    } else {
      feature_names.push_back(names[static_cast<std::size_t>(j)]);
    }
  }
  if (target_idx < 0) throw InputError("csv: missing target column '" + target_column + "'");
  if (feature_names.empty()) throw InputError("csv: no feature columns besides target");

  std::vector<std::vector<double>> rows;
  std::vector<double> targets;
  std::string line;
  std::size_t row_no = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row_no;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != names.size()) {
      throw InputError("csv: data row " + std::to_string(row_no) + " has " +
                       std::to_string(cells.size()) + " fields, expected " +
                       std::to_string(names.size()));
    }
    std::vector<double> feats;
    feats.reserve(feature_names.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const double v = parse_cell(cells[j], row_no, names[j]);
      if (static_cast<Eigen::Index>(j) == target_idx) {
        targets.push_back(v);
      } else {
        feats.push_back(v);
      }
    }
    rows.push_back(std::move(feats));
  }
  if (rows.empty()) throw InputError("csv: no data rows in '" + path.string() + "'");

  Eigen::MatrixXd features(static_cast<Eigen::Index>(rows.size()),
                           static_cast<Eigen::Index>(feature_names.size()));
  Eigen::VectorXd target(static_cast<Eigen::Index>(targets.size()));
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    target[i] = targets[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < features.cols(); ++j) {
      features(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return make_dataset(std::move(features), std::move(target), std::move(feature_names));
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

void write_csv(const Dataset& ds, const std::filesystem::path& path,
               const std::string& target_name, const std::string& extra_name,
               const Eigen::VectorXd* extra) {
  std::ofstream out(path);
  if (!out) throw InputError("csv: cannot write '" + path.string() + "'");
  for (Eigen::Index j = 0; j < ds.d(); ++j) out << ds.feature_names[static_cast<std::size_t>(j)] << ',';
  out << target_name;
  if (extra != nullptr) out << ',' << extra_name;
  out << '\n';
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    for (Eigen::Index j = 0; j < ds.d(); ++j) out << format_double(ds.features(i, j)) << ',';
    out << format_double(ds.target[i]);
    if (extra != nullptr) out << ',' << format_double((*extra)[i]);
    out << '\n';
  }
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& ds, double train_fraction,
                                             std::uint64_t seed) {
  const auto n = static_cast<double>(ds.n());
  if (!(train_fraction > 0.0 && train_fraction < 1.0) || n * train_fraction < 1.0 ||
      n * (1.0 - train_fraction) < 1.0) {
    throw InputError("split: degenerate train fraction for n=" + std::to_string(ds.n()));
  }
  const auto train_size = static_cast<Eigen::Index>(std::floor(n * train_fraction));

  std::vector<Eigen::Index> order(static_cast<std::size_t>(ds.n()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Rng rng(seed);
  rng.shuffle(order);

  std::vector<Eigen::Index> train_rows(order.begin(), order.begin() + train_size);
  std::vector<Eigen::Index> test_rows(order.begin() + train_size, order.end());
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());

  auto take = [&](const std::vector<Eigen::Index>& idx) {
    Eigen::MatrixXd f(static_cast<Eigen::Index>(idx.size()), ds.d());
    Eigen::VectorXd t(static_cast<Eigen::Index>(idx.size()));
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
      f.row(i) = ds.features.row(idx[static_cast<std::size_t>(i)]);
      t[i] = ds.target[idx[static_cast<std::size_t>(i)]];
    }
    return Dataset{std::move(f), std::move(t), ds.feature_names};
  };
  return {take(train_rows), take(test_rows)};
}

double friedman_truth(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  double prod = 1.0;
  for (int j = 0; j < 3; ++j) {
    const double gap = 1.0 - x[j];
    prod *= std::exp(-3.0 * gap * gap);
  }
  const double s = std::sin(std::numbers::pi * x[5]);
  return 9.0 * prod - 0.8 * std::exp(-2.0 * (x[3] - x[4])) + 2.0 * s * s - 2.5 * (x[6] - x[7]);
}

SyntheticSample friedman_synthetic(Eigen::Index n, Eigen::Index d, std::uint64_t seed,
                                   std::optional<double> noise_sd) {
  if (d < 8) throw InputError("friedman_synthetic: needs d >= 8");
  if (n < 1) throw InputError("friedman_synthetic: needs n >= 1");

  Rng rng(seed);
  Eigen::MatrixXd features(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      features(i, j) = static_cast<double>(rng.next_below(10)) / 10.0;
    }
  }
  Eigen::VectorXd truth(n);
  for (Eigen::Index i = 0; i < n; ++i) truth[i] = friedman_truth(features.row(i));

  double sd = 0.0;
  if (noise_sd.has_value()) {
    sd = *noise_sd;
  } else {
    const double mean = truth.mean();
    const double var = (truth.array() - mean).square().sum() / static_cast<double>(n);
    sd = std::sqrt(var / 2.0);  // two-to-one signal-to-noise
  }

  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) target[i] = truth[i] + rng.next_normal(0.0, sd);

  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(d));
  for (Eigen::Index j = 0; j < d; ++j) names.push_back("x" + std::to_string(j + 1));

  return SyntheticSample{make_dataset(std::move(features), std::move(target), std::move(names)),
                         std::move(truth), sd};
}

}  // namespace covreg
