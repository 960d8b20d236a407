#include "geoinfer/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace geoinfer {

using nlohmann::json;

std::string to_string(ColumnRole role) {
  switch (role) {
    case ColumnRole::IndexFeature: return "index_feature";
    case ColumnRole::MechanicalTarget: return "mechanical_target";
    case ColumnRole::ClassLabel: return "class_label";
  }
  throw std::logic_error("unknown column role");
}

ColumnRole column_role_from_string(const std::string& s) {
  if (s == "index_feature") return ColumnRole::IndexFeature;
  if (s == "mechanical_target") return ColumnRole::MechanicalTarget;
  if (s == "class_label") return ColumnRole::ClassLabel;
  throw std::invalid_argument("unknown column role: " + s);
}

DataTable::DataTable(std::vector<ColumnSchema> schema, Matrix values, BoolMatrix missing,
                     std::vector<std::string> categories)
    : schema_(std::move(schema)),
      values_(std::move(values)),
      missing_(std::move(missing)),
      categories_(std::move(categories)) {
  if (values_.cols() != static_cast<Eigen::Index>(schema_.size()))
    throw std::invalid_argument("DataTable: schema/value column count mismatch");
  if (missing_.rows() != values_.rows() || missing_.cols() != values_.cols())
    throw std::invalid_argument("DataTable: missing mask shape mismatch");
  std::set<std::string> names;
  for (const auto& col : schema_)
    if (!names.insert(col.name).second)
      throw std::invalid_argument("DataTable: duplicate column name '" + col.name + "'");
  int n_class = 0;
  for (const auto& col : schema_)
    if (col.role == ColumnRole::ClassLabel) ++n_class;
  if (n_class > 1) throw std::invalid_argument("DataTable: more than one class_label column");
  for (Eigen::Index i = 0; i < values_.rows(); ++i)
    for (Eigen::Index j = 0; j < values_.cols(); ++j)
      if (!missing_(i, j) && !std::isfinite(values_(i, j)))
        throw std::invalid_argument("DataTable: non-finite cell at row " + std::to_string(i) +
                                    ", column " + std::to_string(j));
}

Eigen::Index DataTable::column_index(const std::string& name) const {
  for (std::size_t j = 0; j < schema_.size(); ++j)
    if (schema_[j].name == name) return static_cast<Eigen::Index>(j);
  throw std::invalid_argument("DataTable: unknown column '" + name + "'");
}

std::vector<Eigen::Index> DataTable::columns_with_role(ColumnRole role) const {
  std::vector<Eigen::Index> out;
  for (std::size_t j = 0; j < schema_.size(); ++j)
    if (schema_[j].role == role) out.push_back(static_cast<Eigen::Index>(j));
  return out;
}

std::optional<Eigen::Index> DataTable::class_column() const {
  auto cols = columns_with_role(ColumnRole::ClassLabel);
  if (cols.empty()) return std::nullopt;
  return cols.front();
}

std::vector<std::string> DataTable::class_labels() const {
  auto col = class_column();
  if (!col) return {};
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(n_rows()));
  for (Eigen::Index i = 0; i < n_rows(); ++i) {
    if (missing_(i, *col)) throw std::invalid_argument("DataTable: missing class label in row " +
                                                       std::to_string(i));
    const auto idx = static_cast<std::size_t>(values_(i, *col));
    if (idx >= categories_.size())
      throw std::invalid_argument("DataTable: class index out of range in row " +
                                  std::to_string(i));
    out.push_back(categories_[idx]);
  }
  return out;
}

void DataTable::set_value(Eigen::Index row, Eigen::Index col, double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("DataTable: non-finite value");
  values_(row, col) = v;
  missing_(row, col) = false;
}

double vs_from_n(double n, SoilClass soil) {
  if (!std::isfinite(n) || n <= 0.0)
    throw std::domain_error("vs_from_n: blow count must be positive and finite");
  const double factor = soil == SoilClass::Clay ? 100.0 : 80.0;
  return factor * std::cbrt(n);
}

namespace {

struct FixtureRow {
  int n;
  double vs;
  SoilClass soil;
};

// Values stored verbatim from the source table; see vs_from_n for the curves.
constexpr FixtureRow kTrainRows[16] = {
    {1, 100.000, SoilClass::Clay},  {2, 125.992, SoilClass::Clay},
    {7, 191.293, SoilClass::Clay},  {12, 228.943, SoilClass::Clay},
    {15, 246.621, SoilClass::Clay}, {16, 251.984, SoilClass::Clay},
    {17, 257.128, SoilClass::Clay}, {18, 262.074, SoilClass::Clay},
    {20, 271.442, SoilClass::Clay}, {27, 300.000, SoilClass::Clay},
    {29, 307.232, SoilClass::Clay}, {29, 245.785, SoilClass::Sand},
    {42, 278.082, SoilClass::Sand}, {43, 280.272, SoilClass::Sand},
    {47, 288.706, SoilClass::Sand}, {48, 290.739, SoilClass::Sand},
};

constexpr FixtureRow kTestRows[16] = {
    {4, 158.740, SoilClass::Clay},  {5, 170.998, SoilClass::Clay},
    {9, 208.008, SoilClass::Clay},  {10, 215.443, SoilClass::Clay},
    {11, 222.398, SoilClass::Clay}, {28, 303.659, SoilClass::Clay},
    {38, 336.198, SoilClass::Clay}, {14, 192.811, SoilClass::Sand},
    {25, 233.921, SoilClass::Sand}, {27, 240.000, SoilClass::Sand},
    {30, 248.579, SoilClass::Sand}, {33, 256.603, SoilClass::Sand},
    {38, 268.958, SoilClass::Sand}, {40, 273.596, SoilClass::Sand},
    {45, 284.551, SoilClass::Sand}, {49, 292.744, SoilClass::Sand},
};

DataTable fixture_table(const FixtureRow* rows, int n) {
  std::vector<ColumnSchema> schema = {
      {"N", ColumnRole::IndexFeature, "blows/30cm"},
      {"Vs", ColumnRole::IndexFeature, "m/s"},
      {"soil", ColumnRole::ClassLabel, ""},
  };
  Matrix values(n, 3);
  BoolMatrix missing = BoolMatrix::Constant(n, 3, false);
  for (int i = 0; i < n; ++i) {
    values(i, 0) = rows[i].n;
    values(i, 1) = rows[i].vs;
    values(i, 2) = rows[i].soil == SoilClass::Clay ? 0.0 : 1.0;
  }
  return DataTable(std::move(schema), std::move(values), std::move(missing), {"Clay", "Sand"});
}

}  // namespace

std::pair<DataTable, DataTable> builtin_soil_dataset() {
  return {fixture_table(kTrainRows, 16), fixture_table(kTestRows, 16)};
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
  double out = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last || !std::isfinite(out))
    throw std::invalid_argument("CSV parse error at row " + std::to_string(row) + ", column " +
                                std::to_string(col) + ": '" + cell + "'");
  return out;
}

}  // namespace

DataTable parse_csv(const std::string& text, const std::vector<ColumnSchema>& schema) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("CSV schema error: empty file");
  auto header = split_line(line);
  if (header.size() != schema.size())
    throw std::invalid_argument("CSV schema error: expected " + std::to_string(schema.size()) +
                                " columns, found " + std::to_string(header.size()));
  for (std::size_t j = 0; j < schema.size(); ++j)
    if (header[j] != schema[j].name)
      throw std::invalid_argument("CSV schema error: header column " + std::to_string(j + 1) +
                                  " is '" + header[j] + "', expected '" + schema[j].name + "'");

  std::vector<std::vector<double>> rows;
  std::vector<std::vector<bool>> masks;
  std::vector<std::string> categories;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty() || line == "\r") continue;
    auto cells = split_line(line);
    if (cells.size() != schema.size())
      throw std::invalid_argument("CSV parse error at row " + std::to_string(row_no) + ": " +
                                  std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(schema.size()));
    std::vector<double> vals(schema.size(), 0.0);
    std::vector<bool> miss(schema.size(), false);
    for (std::size_t j = 0; j < schema.size(); ++j) {
      const std::string& cell = cells[j];
      if (cell.empty()) {
        miss[j] = true;
        continue;
      }
      if (schema[j].role == ColumnRole::ClassLabel) {
        auto it = std::find(categories.begin(), categories.end(), cell);
        if (it == categories.end()) {
          categories.push_back(cell);
          it = std::prev(categories.end());
        }
        vals[j] = static_cast<double>(it - categories.begin());
      } else {
        vals[j] = parse_cell(cell, row_no, j + 1);
      }
    }
    rows.push_back(std::move(vals));
    masks.push_back(std::move(miss));
  }

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(schema.size());
  Matrix values(n, d);
  BoolMatrix missing(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      values(i, j) = rows[i][j];
      missing(i, j) = masks[i][j];
    }
  return DataTable(schema, std::move(values), std::move(missing), std::move(categories));
}

DataTable load_csv(const std::string& path, const std::vector<ColumnSchema>& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open CSV file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), schema);
}

std::string to_csv(const DataTable& table) {
  std::ostringstream out;
  const auto& schema = table.schema();
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (j) out << ',';
    out << schema[j].name;
  }
  out << '\n';
  for (Eigen::Index i = 0; i < table.n_rows(); ++i) {
    for (Eigen::Index j = 0; j < table.n_cols(); ++j) {
      if (j) out << ',';
      if (table.is_missing(i, j)) continue;
      if (schema[j].role == ColumnRole::ClassLabel)
        out << table.categories()[static_cast<std::size_t>(table.value(i, j))];
      else
        out << format_sig12(table.value(i, j));
    }
    out << '\n';
  }
  return out.str();
}

void write_csv(const DataTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write CSV file: " + path);
  out << to_csv(table);
}

StandardizationStats fit_standardization(const Matrix& columns) {
  if (columns.rows() == 0) throw std::invalid_argument("fit_standardization: zero rows");
  StandardizationStats stats;
  stats.mean = columns.colwise().mean();
  stats.stddev.resize(columns.cols());
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    const double var = (columns.col(j).array() - stats.mean(j)).square().mean();
    stats.stddev(j) = std::max(std::sqrt(var), kStdFloor);
  }
  return stats;
}

StandardizationStats fit_standardization(const DataTable& train) {
  if (train.has_missing())
    throw std::invalid_argument("fit_standardization: table has missing cells");
  return fit_standardization(train.values());
}

namespace {

// Three-factor loading matrix for the fixed benchmark covariance. Row order
// matches oracle_schema(). Loadings are chosen so the first four targets are
// mutually correlated in [0.4, 0.8], the fifth is nearly independent, and the
// fourth target's index-feature correlation concentrates on the liquid limit.
constexpr double kLoadings[11][3] = {
    {0.35, 0.10, 0.00},   // sr
    {-0.45, 0.25, 0.00},  // gamma_t
    {0.55, -0.15, 0.00},  // e
    {0.30, 0.75, 0.00},   // ll
    {0.45, 0.30, 0.00},   // pl
    {0.80, 0.15, 0.00},   // w
    {-0.55, 0.30, 0.60},  // su
    {-0.50, 0.35, 0.55},  // eu
    {-0.60, 0.18, 0.55},  // sigma_p
    {-0.10, 0.70, 0.50},  // cc
    {0.05, -0.08, 0.05},  // cv
};

constexpr double kScales[11] = {1.0, 0.9, 1.1, 1.2, 0.8, 1.0, 1.1, 1.25, 1.0, 0.9, 1.15};
constexpr double kMeans[11] = {88.0, 16.5, 1.35, 62.0, 28.0, 48.0, 55.0, 32.0, 160.0, 0.75, 120.0};

Matrix oracle_covariance() {
  Matrix corr(11, 11);
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) {
      if (i == j) {
        corr(i, j) = 1.0;
        continue;
      }
      double s = 0.0;
      for (int f = 0; f < 3; ++f) s += kLoadings[i][f] * kLoadings[j][f];
      corr(i, j) = s;
    }
  Matrix cov(11, 11);
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) cov(i, j) = corr(i, j) * kScales[i] * kScales[j];
  return cov;
}

}  // namespace

std::vector<ColumnSchema> oracle_schema() {
  return {
      {"sr", ColumnRole::IndexFeature, "%"},
      {"gamma_t", ColumnRole::IndexFeature, "kN/m3"},
      {"e", ColumnRole::IndexFeature, ""},
      {"ll", ColumnRole::IndexFeature, "%"},
      {"pl", ColumnRole::IndexFeature, "%"},
      {"w", ColumnRole::IndexFeature, "%"},
      {"su", ColumnRole::MechanicalTarget, "kN/m2"},
      {"eu", ColumnRole::MechanicalTarget, "MN/m2"},
      {"sigma_p", ColumnRole::MechanicalTarget, "kN/m2"},
      {"cc", ColumnRole::MechanicalTarget, ""},
      {"cv", ColumnRole::MechanicalTarget, "m2/yr"},
  };
}

OracleBenchmark generate_oracle_benchmark(std::uint64_t seed, int n_train, int n_test,
                                          double missing_rate) {
  if (n_train < 50) throw std::invalid_argument("generate_oracle_benchmark: n_train must be >= 50");
  if (n_test < 1) throw std::invalid_argument("generate_oracle_benchmark: n_test must be >= 1");
  if (!(missing_rate > 0.0 && missing_rate < 1.0))
    throw std::invalid_argument("generate_oracle_benchmark: missing_rate must be in (0, 1)");

  OracleBenchmark out;
  out.seed = seed;
  out.joint_mean = Eigen::Map<const Vector>(kMeans, 11);
  out.joint_cov = oracle_covariance();

  Eigen::LLT<Matrix> llt(out.joint_cov);
  if (llt.info() != Eigen::Success)
    throw std::logic_error("generate_oracle_benchmark: covariance not positive definite");
  const Matrix chol = llt.matrixL();

  Rng rng(seed);
  auto sample = [&](int n) {
    Matrix m(n, 11);
    Vector z(11);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < 11; ++j) z(j) = rng.normal();
      m.row(i) = (out.joint_mean + chol * z).transpose();
    }
    return m;
  };

  const Matrix train_values = sample(n_train);
  const Matrix test_values = sample(n_test);

  auto schema = oracle_schema();
  out.train = DataTable(schema, train_values, BoolMatrix::Constant(n_train, 11, false));
  out.truth = test_values;

  BoolMatrix test_missing = BoolMatrix::Constant(n_test, 11, false);
  for (int i = 0; i < n_test; ++i)
    for (int j = 6; j < 11; ++j)
      if (rng.uniform() < missing_rate) test_missing(i, j) = true;
  out.test = DataTable(schema, test_values, std::move(test_missing));
  return out;
}

double analytic_conditional_mean(const OracleBenchmark& oracle, Eigen::Index row,
                                 Eigen::Index target_col) {
  const auto& test = oracle.test;
  if (row < 0 || row >= test.n_rows())
    throw std::invalid_argument("analytic_conditional_mean: row out of range");
  if (target_col < 0 || target_col >= test.n_cols())
    throw std::invalid_argument("analytic_conditional_mean: column out of range");
  if (!test.is_missing(row, target_col))
    throw std::invalid_argument("analytic_conditional_mean: target is observed in that row");

  std::vector<Eigen::Index> observed;
  for (Eigen::Index j = 0; j < test.n_cols(); ++j)
    if (!test.is_missing(row, j)) observed.push_back(j);
  if (observed.empty()) return oracle.joint_mean(target_col);

  const auto m = static_cast<Eigen::Index>(observed.size());
  Matrix cov_oo(m, m);
  Vector cov_to(m);
  Vector delta(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    cov_to(a) = oracle.joint_cov(target_col, observed[a]);
    delta(a) = test.value(row, observed[a]) - oracle.joint_mean(observed[a]);
    for (Eigen::Index b = 0; b < m; ++b) cov_oo(a, b) = oracle.joint_cov(observed[a], observed[b]);
  }
  return oracle.joint_mean(target_col) + cov_to.dot(cov_oo.ldlt().solve(delta));
}

namespace {

json schema_to_json(const std::vector<ColumnSchema>& schema) {
  json arr = json::array();
  for (const auto& col : schema)
    arr.push_back({{"name", col.name}, {"role", to_string(col.role)}, {"units", col.units}});
  return arr;
}

std::vector<ColumnSchema> schema_from_json(const json& arr) {
  std::vector<ColumnSchema> schema;
  for (const auto& item : arr)
    schema.push_back({item.at("name").get<std::string>(),
                      column_role_from_string(item.at("role").get<std::string>()),
                      item.value("units", std::string{})});
  return schema;
}

json table_to_json(const DataTable& table) {
  json values = json::array();
  json missing = json::array();
  for (Eigen::Index i = 0; i < table.n_rows(); ++i) {
    json vrow = json::array();
    json mrow = json::array();
    for (Eigen::Index j = 0; j < table.n_cols(); ++j) {
      vrow.push_back(table.is_missing(i, j) ? 0.0 : table.value(i, j));
      mrow.push_back(table.is_missing(i, j));
    }
    values.push_back(std::move(vrow));
    missing.push_back(std::move(mrow));
  }
  return {{"schema", schema_to_json(table.schema())},
          {"values", std::move(values)},
          {"missing", std::move(missing)},
          {"categories", table.categories()}};
}

DataTable table_from_json(const json& obj) {
  auto schema = schema_from_json(obj.at("schema"));
  const auto& jvalues = obj.at("values");
  const auto n = static_cast<Eigen::Index>(jvalues.size());
  const auto d = static_cast<Eigen::Index>(schema.size());
  Matrix values(n, d);
  BoolMatrix missing(n, d);
  const auto& jmissing = obj.at("missing");
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      values(i, j) = jvalues[i][j].get<double>();
      missing(i, j) = jmissing[i][j].get<bool>();
    }
  std::vector<std::string> categories = obj.value("categories", std::vector<std::string>{});
  return DataTable(std::move(schema), std::move(values), std::move(missing),
                   std::move(categories));
}

}  // namespace

std::string oracle_to_json(const OracleBenchmark& oracle) {
  json truth = json::array();
  for (Eigen::Index i = 0; i < oracle.truth.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < oracle.truth.cols(); ++j) row.push_back(oracle.truth(i, j));
    truth.push_back(std::move(row));
  }
  json mean = json::array();
  for (Eigen::Index j = 0; j < oracle.joint_mean.size(); ++j) mean.push_back(oracle.joint_mean(j));
  json cov = json::array();
  for (Eigen::Index i = 0; i < oracle.joint_cov.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < oracle.joint_cov.cols(); ++j)
      row.push_back(oracle.joint_cov(i, j));
    cov.push_back(std::move(row));
  }
  json obj = {{"schema", schema_to_json(oracle.train.schema())},
              {"train", table_to_json(oracle.train)},
              {"test", table_to_json(oracle.test)},
              {"truth", std::move(truth)},
              {"joint_mean", std::move(mean)},
              {"joint_cov", std::move(cov)},
              {"seed", oracle.seed}};
  return obj.dump(2);
}

OracleBenchmark oracle_from_json(const std::string& text) {
  const json obj = json::parse(text);
  OracleBenchmark out;
  out.train = table_from_json(obj.at("train"));
  out.test = table_from_json(obj.at("test"));
  const auto& jtruth = obj.at("truth");
  const auto n = static_cast<Eigen::Index>(jtruth.size());
  out.truth.resize(n, out.test.n_cols());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < out.test.n_cols(); ++j)
      out.truth(i, j) = jtruth[i][j].get<double>();
  const auto& jmean = obj.at("joint_mean");
  out.joint_mean.resize(static_cast<Eigen::Index>(jmean.size()));
  for (Eigen::Index j = 0; j < out.joint_mean.size(); ++j) out.joint_mean(j) = jmean[j];
  const auto& jcov = obj.at("joint_cov");
  out.joint_cov.resize(out.joint_mean.size(), out.joint_mean.size());
  for (Eigen::Index i = 0; i < out.joint_cov.rows(); ++i)
    for (Eigen::Index j = 0; j < out.joint_cov.cols(); ++j)
      out.joint_cov(i, j) = jcov[i][j].get<double>();
  out.seed = obj.at("seed").get<std::uint64_t>();
  return out;
}

}  // namespace geoinfer
