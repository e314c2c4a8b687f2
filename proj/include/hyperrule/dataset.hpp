#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hyperrule/matrix.hpp"

namespace hyperrule {

enum class ColumnKind { numerical, categorical };

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::numerical;
  std::vector<double> numbers;      // populated for numerical columns
  std::vector<std::string> tokens;  // populated for categorical columns

  std::size_t size() const { return kind == ColumnKind::numerical ? numbers.size() : tokens.size(); }
};

// Columnar table. Every column holds exactly `rows()` entries, names are
// unique and numerical entries are finite; the mutators enforce this.
class Dataset {
 public:
  Dataset() = default;

  std::size_t rows() const { return rows_; }
  std::size_t column_count() const { return columns_.size(); }
  const std::vector<Column>& columns() const { return columns_; }

  std::optional<std::size_t> find(const std::string& name) const;
  const Column& column(const std::string& name) const;
  bool has_column(const std::string& name) const { return find(name).has_value(); }

  void add_numerical(std::string name, std::vector<double> values);
  void add_categorical(std::string name, std::vector<std::string> tokens);
  void drop_column(const std::string& name);

  std::vector<std::string> names(ColumnKind kind) const;

  // New dataset holding the rows at `indices` (order preserved).
  Dataset select_rows(std::span<const std::size_t> indices) const;
  // Same rows, restricted to `names` in that order.
  Dataset select_columns(std::span<const std::string> names) const;

  // Numerical columns `names` as a row-major matrix.
  Matrix numerical_matrix(std::span<const std::string> names) const;

 private:
  void check_new_column(const std::string& name, std::size_t size) const;

  std::size_t rows_ = 0;
  std::vector<Column> columns_;
};

struct ColumnSchema {
  std::vector<std::string> numerical;
  std::vector<std::string> categorical;
};

// Reads an RFC-4180 style CSV with a mandatory header. Only the declared
// columns are kept, in declaration order (numerical first). Missing values
// and non-finite numbers are rejected.
Dataset load_csv(const std::filesystem::path& path, const ColumnSchema& schema);
Dataset parse_csv(std::string_view text, const ColumnSchema& schema);

// ---- scaling -------------------------------------------------------------

struct ColumnScale {
  std::string name;
  double min = 0.0;
  double max = 0.0;
  bool degenerate = false;

  friend bool operator==(const ColumnScale&, const ColumnScale&) = default;
};

struct ScalingParams {
  std::vector<ColumnScale> columns;

  const ColumnScale& at(const std::string& name) const;
  friend bool operator==(const ScalingParams&, const ScalingParams&) = default;
};

ScalingParams scale_fit(const Dataset& d, std::span<const std::string> numerical);
// Maps every numerical column to [0, 1]; the dataset's numerical columns must
// be exactly the fitted ones.
Dataset scale_apply(const Dataset& d, const ScalingParams& p);
double scale_value(double v, const ColumnScale& c);
double unscale_value(double v, const ColumnScale& c);
double unscale_value(double v, const std::string& column, const ScalingParams& p);

// ---- cyclical features ---------------------------------------------------

struct CyclicalComponents {
  double sin = 0.0;
  double cos = 0.0;
};

CyclicalComponents cyclical_encode(double v, double period);
// Inverse of cyclical_encode; result in [0, period).
double cyclical_decode(double s, double c, double period);

struct CyclicalFeature {
  std::string name;
  double period = 0.0;

  std::string sin_column() const { return name + "_sin"; }
  std::string cos_column() const { return name + "_cos"; }
  friend bool operator==(const CyclicalFeature&, const CyclicalFeature&) = default;
};

// Replaces numerical column `f.name` by its `_sin` / `_cos` components.
void expand_cyclical(Dataset& d, const CyclicalFeature& f);

// ---- categorical states --------------------------------------------------

// One token per categorical column, compared by exact token equality.
struct CategoricalState {
  std::vector<std::pair<std::string, std::string>> values;

  bool empty() const { return values.empty(); }
  std::string to_string() const;
  friend bool operator==(const CategoricalState&, const CategoricalState&) = default;
};

CategoricalState state_of_row(const Dataset& d, std::size_t row,
                              std::span<const std::string> categorical);

// Distinct observed combinations in first-appearance order.
std::vector<CategoricalState> unique_categorical_states(const Dataset& d,
                                                        std::span<const std::string> categorical);

std::vector<std::size_t> rows_matching(const Dataset& d, const CategoricalState& c);

// Rows of each input that match `c`; the categorical columns of `c` are
// dropped from both outputs.
std::pair<Dataset, Dataset> filter_category(const Dataset& non_anomalous, const Dataset& anomalous,
                                            const CategoricalState& c);

// ---- model input encoding ------------------------------------------------

struct CategoricalVocabulary {
  std::string column;
  std::vector<std::string> tokens;  // first-appearance order

  friend bool operator==(const CategoricalVocabulary&, const CategoricalVocabulary&) = default;
};

// Scaled numerical columns followed by one indicator column per
// (categorical column, token).
struct FeatureEncoding {
  std::vector<std::string> numerical;
  std::vector<CategoricalVocabulary> categorical;

  static FeatureEncoding fit(const Dataset& d, std::span<const std::string> numerical,
                             std::span<const std::string> categorical);

  std::size_t width() const;
  std::vector<std::string> feature_names() const;
  Matrix encode(const Dataset& d) const;

  friend bool operator==(const FeatureEncoding&, const FeatureEncoding&) = default;
};

}  // namespace hyperrule
