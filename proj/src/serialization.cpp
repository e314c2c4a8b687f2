#include "hyperrule/serialization.hpp"

#include <fstream>

#include "hyperrule/errors.hpp"

namespace hyperrule {

using json = nlohmann::ordered_json;

namespace {

void check_header(const json& j, const char* format) {
  if (!j.is_object() || j.value("format", "") != format)
    throw SchemaError(std::string("expected a '") + format + "' document");
  if (j.value("version", 0) != kFormatVersion)
    throw SchemaError(std::string("unsupported '") + format + "' version");
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, std::size_t cols) {
  Matrix m(0, cols);
  for (const auto& r : j) m.append_row(r.get<std::vector<double>>());
  return m;
}

const char* label_tag(Label l) { return l == Label::non_anomalous ? "non_anomalous" : "anomalous"; }

Label label_from(const std::string& s) {
  if (s == "non_anomalous") return Label::non_anomalous;
  if (s == "anomalous") return Label::anomalous;
  throw SchemaError("unknown label '" + s + "'");
}

}  // namespace

// ---- model ---------------------------------------------------------------

json to_json(const OcsvmModel& m) {
  json j;
  j["kernel"] = "rbf";
  j["gamma"] = m.kernel.gamma;
  j["nu"] = m.nu;
  j["rho"] = m.rho;
  j["n_train"] = m.n_train;
  j["iterations"] = m.iterations;
  j["dimension"] = m.dimension();
  j["support_indices"] = m.support_indices;
  j["alphas"] = m.alphas;
  j["support_vectors"] = matrix_to_json(m.support_vectors);
  return j;
}

OcsvmModel model_from_json(const json& j) {
  if (j.value("kernel", "") != "rbf") throw SchemaError("only rbf models are supported");
  OcsvmModel m;
  m.kernel.gamma = j.at("gamma").get<double>();
  m.nu = j.at("nu").get<double>();
  m.rho = j.at("rho").get<double>();
  m.n_train = j.at("n_train").get<std::size_t>();
  m.iterations = j.value("iterations", std::size_t{0});
  m.support_indices = j.at("support_indices").get<std::vector<std::size_t>>();
  m.alphas = j.at("alphas").get<std::vector<double>>();
  m.support_vectors = matrix_from_json(j.at("support_vectors"), j.at("dimension").get<std::size_t>());
  if (m.alphas.size() != m.support_vectors.rows())
    throw SchemaError("model has mismatched alphas and support vectors");
  return m;
}

json to_json(const CategoricalState& s) {
  json arr = json::array();
  for (const auto& [col, tok] : s.values) arr.push_back({{"column", col}, {"value", tok}});
  return arr;
}

CategoricalState state_from_json(const json& j) {
  CategoricalState s;
  for (const auto& e : j) s.values.emplace_back(e.at("column").get<std::string>(), e.at("value").get<std::string>());
  return s;
}

namespace {

json cyclical_to_json(const std::vector<CyclicalFeature>& cs) {
  json arr = json::array();
  for (const auto& c : cs) arr.push_back({{"name", c.name}, {"period", c.period}});
  return arr;
}

std::vector<CyclicalFeature> cyclical_from_json(const json& j) {
  std::vector<CyclicalFeature> out;
  for (const auto& e : j) out.push_back({e.at("name").get<std::string>(), e.at("period").get<double>()});
  return out;
}

}  // namespace

json to_json(const DetectorBundle& b) {
  json j;
  j["format"] = "hyperrule-model";
  j["version"] = kFormatVersion;
  j["mode"] = b.per_group ? "per_group" : "global";
  j["schema"] = {{"numerical", b.numerical}, {"categorical", b.categorical},
                 {"cyclical", cyclical_to_json(b.cyclical)}};
  json scaling = json::array();
  for (const auto& c : b.scaling.columns)
    scaling.push_back({{"name", c.name}, {"min", c.min}, {"max", c.max}, {"degenerate", c.degenerate}});
  j["scaling"] = scaling;
  json vocab = json::array();
  for (const auto& v : b.encoding.categorical) vocab.push_back({{"column", v.column}, {"tokens", v.tokens}});
  j["encoding"] = {{"numerical", b.encoding.numerical}, {"categorical", vocab}};
  j["training"] = {{"rows", b.training_rows}, {"anomalies", b.training_anomalies}};
  json parts = json::array();
  for (const auto& p : b.parts) {
    json pj = to_json(p.model);
    parts.push_back({{"state", to_json(p.state)}, {"model", pj}});
  }
  j["models"] = parts;
  return j;
}

DetectorBundle bundle_from_json(const json& j) {
  check_header(j, "hyperrule-model");
  DetectorBundle b;
  b.per_group = j.at("mode").get<std::string>() == "per_group";
  b.numerical = j.at("schema").at("numerical").get<std::vector<std::string>>();
  b.categorical = j.at("schema").at("categorical").get<std::vector<std::string>>();
  b.cyclical = cyclical_from_json(j.at("schema").at("cyclical"));
  for (const auto& c : j.at("scaling"))
    b.scaling.columns.push_back({c.at("name").get<std::string>(), c.at("min").get<double>(),
                                 c.at("max").get<double>(), c.at("degenerate").get<bool>()});
  b.encoding.numerical = j.at("encoding").at("numerical").get<std::vector<std::string>>();
  for (const auto& v : j.at("encoding").at("categorical"))
    b.encoding.categorical.push_back(
        {v.at("column").get<std::string>(), v.at("tokens").get<std::vector<std::string>>()});
  b.training_rows = j.at("training").at("rows").get<std::size_t>();
  b.training_anomalies = j.at("training").at("anomalies").get<std::size_t>();
  for (const auto& p : j.at("models"))
    b.parts.push_back({state_from_json(p.at("state")), model_from_json(p.at("model"))});
  return b;
}

// ---- rules ---------------------------------------------------------------

json to_json(const RuleSet& rs) {
  json j;
  j["format"] = "hyperrule-rules";
  j["version"] = kFormatVersion;
  j["label"] = label_tag(rs.label);
  j["scaled"] = rs.scaled;
  j["n_v"] = rs.n_v;
  j["numerical"] = rs.numerical;
  j["categorical"] = rs.categorical;
  j["cyclical"] = cyclical_to_json(rs.cyclical);
  json rules = json::array();
  for (const auto& r : rs.rules) {
    json bounds = json::array();
    for (const auto& iv : r.bounds) bounds.push_back({iv.lo, iv.hi});
    rules.push_back({{"state", to_json(r.state)},
                     {"bounds", bounds},
                     {"provenance",
                      {{"group", r.provenance.group},
                       {"cluster", r.provenance.cluster},
                       {"covered", r.provenance.covered}}}});
  }
  j["rules"] = rules;
  json discarded = json::array();
  for (const auto& d : rs.discarded)
    discarded.push_back({{"group", d.group}, {"cluster", d.cluster}, {"points", d.points}});
  j["discarded"] = discarded;
  return j;
}

RuleSet ruleset_from_json(const json& j) {
  check_header(j, "hyperrule-rules");
  RuleSet rs;
  rs.label = label_from(j.at("label").get<std::string>());
  rs.scaled = j.at("scaled").get<bool>();
  rs.n_v = j.at("n_v").get<std::size_t>();
  rs.numerical = j.at("numerical").get<std::vector<std::string>>();
  rs.categorical = j.at("categorical").get<std::vector<std::string>>();
  rs.cyclical = cyclical_from_json(j.at("cyclical"));
  for (const auto& rj : j.at("rules")) {
    Rule r;
    r.label = rs.label;
    r.state = state_from_json(rj.at("state"));
    for (const auto& b : rj.at("bounds")) r.bounds.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
    if (r.bounds.size() != rs.numerical.size()) throw SchemaError("rule bounds do not match numerical columns");
    const auto& p = rj.at("provenance");
    r.provenance = {p.at("group").get<std::size_t>(), p.at("cluster").get<std::size_t>(),
                    p.at("covered").get<std::size_t>()};
    rs.rules.push_back(std::move(r));
  }
  for (const auto& d : j.at("discarded"))
    rs.discarded.push_back({d.at("group").get<std::size_t>(), d.at("cluster").get<std::size_t>(),
                            d.at("points").get<std::size_t>()});
  return rs;
}

// ---- tree ----------------------------------------------------------------

json to_json(const DecisionTree& t) {
  json j;
  j["format"] = "hyperrule-tree";
  j["version"] = kFormatVersion;
  j["seed"] = t.seed;
  j["depth"] = t.depth();
  j["node_count"] = t.node_count();
  j["leaf_count"] = t.leaf_count();
  json features = json::array();
  for (const auto& f : t.features) {
    json fj{{"name", f.name}, {"indicator", f.indicator}};
    if (f.indicator) {
      fj["column"] = f.source_column;
      fj["token"] = f.token;
    }
    features.push_back(fj);
  }
  j["features"] = features;
  json nodes = json::array();
  for (const auto& n : t.nodes) {
    json nj{{"samples", n.samples}, {"positives", n.positives}, {"depth", n.depth}};
    if (n.leaf) {
      nj["label"] = label_tag(n.label);
      nj["purity"] = n.purity;
    } else {
      nj["feature"] = n.feature;
      nj["threshold"] = n.threshold;
      nj["left"] = n.left;
      nj["right"] = n.right;
    }
    nodes.push_back(nj);
  }
  j["nodes"] = nodes;
  return j;
}

DecisionTree tree_from_json(const json& j) {
  check_header(j, "hyperrule-tree");
  DecisionTree t;
  t.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& f : j.at("features")) {
    TreeFeature tf{f.at("name").get<std::string>(), f.at("indicator").get<bool>(), {}, {}};
    if (tf.indicator) {
      tf.source_column = f.at("column").get<std::string>();
      tf.token = f.at("token").get<std::string>();
    }
    t.features.push_back(std::move(tf));
  }
  for (const auto& nj : j.at("nodes")) {
    TreeNode n;
    n.samples = nj.at("samples").get<std::size_t>();
    n.positives = nj.at("positives").get<std::size_t>();
    n.depth = nj.at("depth").get<std::size_t>();
    n.leaf = nj.contains("label");
    if (n.leaf) {
      n.label = label_from(nj.at("label").get<std::string>());
      n.purity = nj.at("purity").get<double>();
    } else {
      n.feature = nj.at("feature").get<std::size_t>();
      n.threshold = nj.at("threshold").get<double>();
      n.left = nj.at("left").get<std::size_t>();
      n.right = nj.at("right").get<std::size_t>();
      n.label = 2 * n.positives >= n.samples ? Label::non_anomalous : Label::anomalous;
      n.purity = static_cast<double>(std::max(n.positives, n.samples - n.positives)) /
                 static_cast<double>(n.samples);
    }
    t.nodes.push_back(n);
  }
  return t;
}

// ---- files ---------------------------------------------------------------

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("invalid JSON in '" + path.string() + "': " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

}  // namespace hyperrule
