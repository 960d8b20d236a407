#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "geoinfer/common.hpp"

namespace geoinfer {

enum class ColumnRole { IndexFeature, MechanicalTarget, ClassLabel };

std::string to_string(ColumnRole role);
ColumnRole column_role_from_string(const std::string& s);

struct ColumnSchema {
  std::string name;
  ColumnRole role = ColumnRole::IndexFeature;
  std::string units;  // informational only
};

/// Column-schema'd sample table. Every schema column has a numeric column in
/// `values`; a ClassLabel column stores indices into `categories`. `missing`
/// marks cells that carry no value (the numeric entry is then meaningless).
class DataTable {
 public:
  DataTable() = default;
  DataTable(std::vector<ColumnSchema> schema, Matrix values, BoolMatrix missing,
            std::vector<std::string> categories = {});

  Eigen::Index n_rows() const { return values_.rows(); }
  Eigen::Index n_cols() const { return values_.cols(); }

  const std::vector<ColumnSchema>& schema() const { return schema_; }
  const Matrix& values() const { return values_; }
  const BoolMatrix& missing() const { return missing_; }
  const std::vector<std::string>& categories() const { return categories_; }

  double value(Eigen::Index row, Eigen::Index col) const { return values_(row, col); }
  bool is_missing(Eigen::Index row, Eigen::Index col) const { return missing_(row, col); }
  bool has_missing() const { return missing_.any(); }

  /// Index of the named column; throws if absent.
  Eigen::Index column_index(const std::string& name) const;
  /// Indices of all columns with the given role, in schema order.
  std::vector<Eigen::Index> columns_with_role(ColumnRole role) const;
  /// Index of the unique ClassLabel column, if any.
  std::optional<Eigen::Index> class_column() const;
  /// Per-row category names of the class column; empty if there is none.
  std::vector<std::string> class_labels() const;

  void set_value(Eigen::Index row, Eigen::Index col, double v);
  void set_missing(Eigen::Index row, Eigen::Index col, bool m) { missing_(row, col) = m; }

 private:
  std::vector<ColumnSchema> schema_;
  Matrix values_;
  BoolMatrix missing_;
  std::vector<std::string> categories_;
};

enum class SoilClass { Clay, Sand };

struct SoilSample {
  int n_value = 0;
  double vs = 0.0;
  SoilClass soil = SoilClass::Clay;
};

/// Shear-wave velocity from SPT blow count via the class-specific power laws
/// 100·N^(1/3) (Clay) and 80·N^(1/3) (Sand).
double vs_from_n(double n, SoilClass soil);

/// The built-in 16+16 sample synthetic soil dataset (values stored verbatim,
/// not recomputed, so golden tests catch formula regressions).
std::pair<DataTable, DataTable> builtin_soil_dataset();

/// Strict CSV reader: header must equal the schema names in order, '.' decimal
/// separator, empty cell = missing. Anything else in a cell is a parse error.
DataTable load_csv(const std::string& path, const std::vector<ColumnSchema>& schema);
void write_csv(const DataTable& table, const std::string& path);
std::string to_csv(const DataTable& table);
DataTable parse_csv(const std::string& text, const std::vector<ColumnSchema>& schema);

struct StandardizationStats {
  Vector mean;
  Vector stddev;  // population convention, clamped below by kStdFloor
};

inline constexpr double kStdFloor = 1e-9;

/// Per-column mean/std of the numeric columns of a fully observed table.
StandardizationStats fit_standardization(const DataTable& train);
StandardizationStats fit_standardization(const Matrix& columns);

/// Synthetic linear-Gaussian benchmark with a known joint distribution, used
/// to verify the imputation engine against exact conditional means.
struct OracleBenchmark {
  DataTable train;
  DataTable test;
  Matrix truth;  // fully observed test matrix
  Vector joint_mean;
  Matrix joint_cov;
  std::uint64_t seed = 0;
};

/// Schema of the oracle benchmark: six index features, five targets.
std::vector<ColumnSchema> oracle_schema();

OracleBenchmark generate_oracle_benchmark(std::uint64_t seed, int n_train, int n_test,
                                          double missing_rate);

/// Exact Gaussian conditional mean of a masked target given every observed
/// coordinate of the row, via Schur complement of the joint covariance.
double analytic_conditional_mean(const OracleBenchmark& oracle, Eigen::Index row,
                                 Eigen::Index target_col);

std::string oracle_to_json(const OracleBenchmark& oracle);
OracleBenchmark oracle_from_json(const std::string& text);

}  // namespace geoinfer
