#include "hyperrule/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "hyperrule/errors.hpp"

namespace hyperrule {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix m;
  for (const auto& r : rows) m.append_row(r);
  return m;
}

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) throw DimensionError("row width does not match matrix width");
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

// ---- Dataset -------------------------------------------------------------

std::optional<std::size_t> Dataset::find(const std::string& name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (columns_[i].name == name) return i;
  return std::nullopt;
}

const Column& Dataset::column(const std::string& name) const {
  auto idx = find(name);
  if (!idx) throw SchemaError("unknown column '" + name + "'");
  return columns_[*idx];
}

void Dataset::check_new_column(const std::string& name, std::size_t size) const {
  if (has_column(name)) throw SchemaError("duplicate column '" + name + "'");
  if (!columns_.empty() && size != rows_)
    throw SchemaError("column '" + name + "' has " + std::to_string(size) + " rows, expected " +
                      std::to_string(rows_));
}

void Dataset::add_numerical(std::string name, std::vector<double> values) {
  check_new_column(name, values.size());
  for (double v : values)
    if (!std::isfinite(v)) throw SchemaError("non-finite value in column '" + name + "'");
  if (columns_.empty()) rows_ = values.size();
  columns_.push_back({std::move(name), ColumnKind::numerical, std::move(values), {}});
}

void Dataset::add_categorical(std::string name, std::vector<std::string> tokens) {
  check_new_column(name, tokens.size());
  if (columns_.empty()) rows_ = tokens.size();
  columns_.push_back({std::move(name), ColumnKind::categorical, {}, std::move(tokens)});
}

void Dataset::drop_column(const std::string& name) {
  auto idx = find(name);
  if (!idx) throw SchemaError("unknown column '" + name + "'");
  columns_.erase(columns_.begin() + static_cast<std::ptrdiff_t>(*idx));
}

std::vector<std::string> Dataset::names(ColumnKind kind) const {
  std::vector<std::string> out;
  for (const auto& c : columns_)
    if (c.kind == kind) out.push_back(c.name);
  return out;
}

Dataset Dataset::select_rows(std::span<const std::size_t> indices) const {
  Dataset out;
  out.rows_ = indices.size();
  out.columns_.reserve(columns_.size());
  for (const auto& c : columns_) {
    Column nc{c.name, c.kind, {}, {}};
    if (c.kind == ColumnKind::numerical) {
      nc.numbers.reserve(indices.size());
      for (auto i : indices) nc.numbers.push_back(c.numbers[i]);
    } else {
      nc.tokens.reserve(indices.size());
      for (auto i : indices) nc.tokens.push_back(c.tokens[i]);
    }
    out.columns_.push_back(std::move(nc));
  }
  return out;
}

Dataset Dataset::select_columns(std::span<const std::string> names) const {
  Dataset out;
  out.rows_ = rows_;
  for (const auto& n : names) {
    if (out.has_column(n)) throw SchemaError("duplicate column '" + n + "'");
    out.columns_.push_back(column(n));
  }
  return out;
}

Matrix Dataset::numerical_matrix(std::span<const std::string> names) const {
  std::vector<const Column*> cols;
  for (const auto& n : names) {
    const Column& c = column(n);
    if (c.kind != ColumnKind::numerical) throw SchemaError("column '" + n + "' is not numerical");
    cols.push_back(&c);
  }
  Matrix m(rows_, cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t i = 0; i < rows_; ++i) m(i, j) = cols[j]->numbers[i];
  return m;
}

// ---- CSV -----------------------------------------------------------------

namespace {

// Splits RFC-4180 text into records. Quoted fields may contain separators,
// doubled quotes and line breaks.
std::vector<std::vector<std::string>> split_records(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = record.size() == 1 && record[0].empty();
    if (!blank) records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (!field_started && field.empty()) {
          quoted = true;
          field_started = true;
        } else {
          field.push_back(ch);
        }
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(ch);
        field_started = true;
    }
  }
  if (quoted) throw ParseError("unterminated quoted field in CSV", records.size() + 1, "");
  if (!field.empty() || !record.empty()) end_record();
  return records;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

Dataset parse_csv(std::string_view text, const ColumnSchema& schema) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  auto records = split_records(text);
  if (records.empty()) throw SchemaError("empty CSV: header row missing");

  const auto& header = records.front();
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < header.size(); ++i) {
    std::string name(trim(header[i]));
    if (!position.emplace(name, i).second) throw SchemaError("duplicate header '" + name + "'");
  }

  auto locate = [&](const std::string& name) {
    auto it = position.find(name);
    if (it == position.end()) throw SchemaError("declared column '" + name + "' not in CSV header");
    return it->second;
  };

  std::unordered_set<std::string> declared;
  for (const auto* list : {&schema.numerical, &schema.categorical})
    for (const auto& n : *list)
      if (!declared.insert(n).second) throw SchemaError("column '" + n + "' declared twice");

  const std::size_t n_rows = records.size() - 1;
  for (std::size_t r = 1; r < records.size(); ++r)
    if (records[r].size() != header.size())
      throw ParseError("row " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                           " fields, header has " + std::to_string(header.size()),
                       r, "");

  Dataset d;
  for (const auto& name : schema.numerical) {
    const std::size_t col = locate(name);
    std::vector<double> values(n_rows);
    for (std::size_t r = 0; r < n_rows; ++r) {
      auto tok = trim(records[r + 1][col]);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (tok.empty() || ec != std::errc{} || ptr != tok.data() + tok.size() || !std::isfinite(v))
        throw ParseError("row " + std::to_string(r + 1) + ", column '" + name +
                             "': cannot parse '" + std::string(tok) + "' as a finite number",
                         r + 1, name);
      values[r] = v;
    }
    d.add_numerical(name, std::move(values));
  }
  for (const auto& name : schema.categorical) {
    const std::size_t col = locate(name);
    std::vector<std::string> tokens(n_rows);
    for (std::size_t r = 0; r < n_rows; ++r) {
      auto tok = trim(records[r + 1][col]);
      if (tok.empty())
        throw ParseError("row " + std::to_string(r + 1) + ", column '" + name + "': missing value",
                         r + 1, name);
      tokens[r] = std::string(tok);
    }
    d.add_categorical(name, std::move(tokens));
  }
  return d;
}

Dataset load_csv(const std::filesystem::path& path, const ColumnSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), schema);
}

// ---- scaling -------------------------------------------------------------

const ColumnScale& ScalingParams::at(const std::string& name) const {
  for (const auto& c : columns)
    if (c.name == name) return c;
  throw SchemaError("no scaling parameters for column '" + name + "'");
}

ScalingParams scale_fit(const Dataset& d, std::span<const std::string> numerical) {
  ScalingParams p;
  for (const auto& name : numerical) {
    const Column& c = d.column(name);
    if (c.kind != ColumnKind::numerical) throw SchemaError("column '" + name + "' is not numerical");
    if (c.numbers.empty()) throw SchemaError("cannot fit scaling on empty column '" + name + "'");
    auto [lo, hi] = std::minmax_element(c.numbers.begin(), c.numbers.end());
    p.columns.push_back({name, *lo, *hi, *lo == *hi});
  }
  return p;
}

double scale_value(double v, const ColumnScale& c) {
  return c.degenerate ? 0.0 : (v - c.min) / (c.max - c.min);
}

double unscale_value(double v, const ColumnScale& c) {
  return c.degenerate ? c.min : c.min + v * (c.max - c.min);
}

double unscale_value(double v, const std::string& column, const ScalingParams& p) {
  return unscale_value(v, p.at(column));
}

Dataset scale_apply(const Dataset& d, const ScalingParams& p) {
  auto numerical = d.names(ColumnKind::numerical);
  if (numerical.size() != p.columns.size())
    throw SchemaError("scaling parameters cover " + std::to_string(p.columns.size()) +
                      " columns, dataset has " + std::to_string(numerical.size()) + " numerical");
  Dataset out;
  for (const auto& c : d.columns()) {
    if (c.kind == ColumnKind::categorical) {
      out.add_categorical(c.name, c.tokens);
      continue;
    }
    const ColumnScale& s = p.at(c.name);
    std::vector<double> scaled(c.numbers.size());
    std::transform(c.numbers.begin(), c.numbers.end(), scaled.begin(),
                   [&](double v) { return scale_value(v, s); });
    out.add_numerical(c.name, std::move(scaled));
  }
  return out;
}

// ---- cyclical ------------------------------------------------------------

CyclicalComponents cyclical_encode(double v, double period) {
  if (!(period > 0.0)) throw ConfigError("cyclical period must be positive");
  const double angle = 2.0 * std::numbers::pi * v / period;
  return {std::sin(angle), std::cos(angle)};
}

double cyclical_decode(double s, double c, double period) {
  if (!(period > 0.0)) throw ConfigError("cyclical period must be positive");
  if (s == 0.0 && c == 0.0) throw Error("cannot decode angle of (0, 0)");
  double angle = std::atan2(s, c);
  if (angle < 0.0) angle += 2.0 * std::numbers::pi;
  double v = angle * period / (2.0 * std::numbers::pi);
  if (v >= period) v -= period;
  return v;
}

void expand_cyclical(Dataset& d, const CyclicalFeature& f) {
  const Column& c = d.column(f.name);
  if (c.kind != ColumnKind::numerical) throw SchemaError("cyclical column '" + f.name + "' is not numerical");
  std::vector<double> s(c.numbers.size()), co(c.numbers.size());
  for (std::size_t i = 0; i < c.numbers.size(); ++i) {
    auto enc = cyclical_encode(c.numbers[i], f.period);
    s[i] = enc.sin;
    co[i] = enc.cos;
  }
  d.drop_column(f.name);
  d.add_numerical(f.sin_column(), std::move(s));
  d.add_numerical(f.cos_column(), std::move(co));
}

// ---- categorical ---------------------------------------------------------

std::string CategoricalState::to_string() const {
  std::string out;
  for (const auto& [col, tok] : values) {
    if (!out.empty()) out += ", ";
    out += col + "=" + tok;
  }
  return out;
}

CategoricalState state_of_row(const Dataset& d, std::size_t row,
                              std::span<const std::string> categorical) {
  CategoricalState s;
  for (const auto& name : categorical) {
    const Column& c = d.column(name);
    if (c.kind != ColumnKind::categorical) throw SchemaError("column '" + name + "' is not categorical");
    s.values.emplace_back(name, c.tokens[row]);
  }
  return s;
}

std::vector<CategoricalState> unique_categorical_states(const Dataset& d,
                                                        std::span<const std::string> categorical) {
  if (categorical.empty()) throw SchemaError("no categorical columns given");
  std::vector<CategoricalState> states;
  std::unordered_set<std::string> seen;
  for (std::size_t r = 0; r < d.rows(); ++r) {
    auto s = state_of_row(d, r, categorical);
    // unit separator keeps token boundaries unambiguous
    std::string key;
    for (const auto& [col, tok] : s.values) key += tok + '\x1f';
    if (seen.insert(key).second) states.push_back(std::move(s));
  }
  return states;
}

std::vector<std::size_t> rows_matching(const Dataset& d, const CategoricalState& c) {
  std::vector<const Column*> cols;
  for (const auto& [name, tok] : c.values) cols.push_back(&d.column(name));
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < d.rows(); ++r) {
    bool match = true;
    for (std::size_t k = 0; k < cols.size() && match; ++k)
      match = cols[k]->tokens[r] == c.values[k].second;
    if (match) out.push_back(r);
  }
  return out;
}

std::pair<Dataset, Dataset> filter_category(const Dataset& non_anomalous, const Dataset& anomalous,
                                            const CategoricalState& c) {
  auto keep = [&](const Dataset& d) {
    auto rows = rows_matching(d, c);
    Dataset out = d.select_rows(rows);
    for (const auto& [name, tok] : c.values) out.drop_column(name);
    return out;
  };
  return {keep(non_anomalous), anomalous.column_count() == 0 ? Dataset{} : keep(anomalous)};
}

// ---- encoding ------------------------------------------------------------

FeatureEncoding FeatureEncoding::fit(const Dataset& d, std::span<const std::string> numerical,
                                     std::span<const std::string> categorical) {
  FeatureEncoding e;
  e.numerical.assign(numerical.begin(), numerical.end());
  for (const auto& name : e.numerical)
    if (d.column(name).kind != ColumnKind::numerical)
      throw SchemaError("column '" + name + "' is not numerical");
  for (const auto& name : categorical) {
    const Column& c = d.column(name);
    if (c.kind != ColumnKind::categorical) throw SchemaError("column '" + name + "' is not categorical");
    CategoricalVocabulary v{name, {}};
    std::unordered_set<std::string> seen;
    for (const auto& t : c.tokens)
      if (seen.insert(t).second) v.tokens.push_back(t);
    e.categorical.push_back(std::move(v));
  }
  return e;
}

std::size_t FeatureEncoding::width() const {
  std::size_t w = numerical.size();
  for (const auto& v : categorical) w += v.tokens.size();
  return w;
}

std::vector<std::string> FeatureEncoding::feature_names() const {
  std::vector<std::string> out = numerical;
  for (const auto& v : categorical)
    for (const auto& t : v.tokens) out.push_back(v.column + "=" + t);
  return out;
}

Matrix FeatureEncoding::encode(const Dataset& d) const {
  Matrix m(d.rows(), width());
  std::size_t j = 0;
  for (const auto& name : numerical) {
    const Column& c = d.column(name);
    if (c.kind != ColumnKind::numerical) throw SchemaError("column '" + name + "' is not numerical");
    for (std::size_t i = 0; i < d.rows(); ++i) m(i, j) = c.numbers[i];
    ++j;
  }
  for (const auto& v : categorical) {
    const Column& c = d.column(v.column);
    if (c.kind != ColumnKind::categorical) throw SchemaError("column '" + v.column + "' is not categorical");
    for (std::size_t i = 0; i < d.rows(); ++i) {
      // Tokens outside the vocabulary encode as all zeros.
      auto it = std::find(v.tokens.begin(), v.tokens.end(), c.tokens[i]);
      if (it != v.tokens.end()) m(i, j + static_cast<std::size_t>(it - v.tokens.begin())) = 1.0;
    }
    j += v.tokens.size();
  }
  return m;
}

}  // namespace hyperrule
