#include "hyperrule/pipeline.hpp"

#include <cstdio>
#include <set>

#include "hyperrule/svg_plot.hpp"

namespace hyperrule {

using json = nlohmann::ordered_json;

// ---- configuration -------------------------------------------------------

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  std::set<std::string> ok(known.begin(), known.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("invalid value for '") + key + "'");
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
  return p.is_absolute() ? p : base / p;
}

}  // namespace

RunConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  reject_unknown(j, {"id", "dataset", "columns", "ocsvm", "kmeans", "extraction", "surrogate", "output_dir"},
                 "config");
  RunConfig cfg;
  if (!j.contains("dataset")) throw ConfigError("config needs a 'dataset' path");
  cfg.dataset = resolve(base_dir, get_or<std::string>(j, "dataset", ""));
  cfg.id = get_or<std::string>(j, "id", cfg.dataset.stem().string());
  cfg.output_dir = resolve(base_dir, get_or<std::string>(j, "output_dir", "out"));

  const json cols = j.value("columns", json::object());
  reject_unknown(cols, {"numerical", "categorical", "cyclical"}, "columns");
  cfg.numerical = get_or<std::vector<std::string>>(cols, "numerical", {});
  cfg.categorical = get_or<std::vector<std::string>>(cols, "categorical", {});
  for (const auto& c : cols.value("cyclical", json::array())) {
    reject_unknown(c, {"name", "period"}, "cyclical column");
    cfg.cyclical.push_back({get_or<std::string>(c, "name", ""), get_or<double>(c, "period", 0.0)});
  }

  const json oc = j.value("ocsvm", json::object());
  reject_unknown(oc, {"nu", "gamma", "tol", "max_iter", "fit_per_group"}, "ocsvm");
  cfg.ocsvm.nu = get_or<double>(oc, "nu", 0.1);
  cfg.ocsvm.kernel.gamma = get_or<double>(oc, "gamma", 0.1);
  cfg.ocsvm.tol = get_or<double>(oc, "tol", 1e-3);
  if (oc.contains("max_iter") && !oc.at("max_iter").is_null())
    cfg.ocsvm.max_iter = get_or<std::size_t>(oc, "max_iter", 0);
  cfg.fit_per_group = get_or<bool>(oc, "fit_per_group", false);

  const json km = j.value("kmeans", json::object());
  reject_unknown(km, {"max_iter", "n_init", "seed"}, "kmeans");
  cfg.extraction.kmeans.max_iter = get_or<std::size_t>(km, "max_iter", 100);
  cfg.extraction.kmeans.n_init = get_or<std::size_t>(km, "n_init", 10);
  cfg.extraction.kmeans.seed = get_or<std::uint64_t>(km, "seed", 0);

  const json ex = j.value("extraction", json::object());
  reject_unknown(ex, {"discard_factor", "discard_threshold", "box_mode", "max_clusters", "targets",
                      "per_group_min_check"},
                 "extraction");
  cfg.extraction.discard_factor = get_or<double>(ex, "discard_factor", 1.0);
  const auto threshold = get_or<std::string>(ex, "discard_threshold", "vertices");
  if (threshold == "vertices") cfg.extraction.threshold = DiscardThreshold::vertices;
  else if (threshold == "clusters") cfg.extraction.threshold = DiscardThreshold::clusters;
  else throw ConfigError("discard_threshold must be 'vertices' or 'clusters'");
  const auto mode = get_or<std::string>(ex, "box_mode", "all");
  if (mode == "all") cfg.extraction.mode = BoxMode::all_points;
  else if (mode == "farthest") cfg.extraction.mode = BoxMode::farthest_vertices;
  else throw ConfigError("box_mode must be 'all' or 'farthest'");
  if (ex.contains("max_clusters") && !ex.at("max_clusters").is_null())
    cfg.extraction.max_clusters = get_or<std::size_t>(ex, "max_clusters", 0);
  const auto targets = get_or<std::string>(ex, "targets", "both");
  if (targets == "na") cfg.targets = TargetSelection::non_anomalous;
  else if (targets == "a") cfg.targets = TargetSelection::anomalous;
  else if (targets == "both") cfg.targets = TargetSelection::both;
  else throw ConfigError("targets must be 'na', 'a' or 'both'");
  cfg.extraction.per_group_min_check = get_or<bool>(ex, "per_group_min_check", false);

  const json sg = j.value("surrogate", json::object());
  reject_unknown(sg, {"seed"}, "surrogate");
  cfg.surrogate_seed = get_or<std::uint64_t>(sg, "seed", 42);

  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  json j;
  try {
    j = read_json(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return config_from_json(j, path.parent_path());
}

void validate(const RunConfig& cfg) {
  if (!(cfg.ocsvm.nu > 0.0 && cfg.ocsvm.nu <= 1.0)) throw ConfigError("nu must lie in (0, 1]");
  if (!(cfg.ocsvm.kernel.gamma > 0.0)) throw ConfigError("gamma must be positive");
  if (!(cfg.ocsvm.tol > 0.0)) throw ConfigError("tol must be positive");
  if (!(cfg.extraction.discard_factor > 0.0)) throw ConfigError("discard_factor must be positive");
  if (cfg.extraction.kmeans.n_init == 0) throw ConfigError("kmeans.n_init must be at least 1");
  if (cfg.numerical.empty() && cfg.categorical.empty() && cfg.cyclical.empty())
    throw ConfigError("no feature columns declared");
  std::set<std::string> names;
  auto claim = [&](const std::string& n) {
    if (n.empty()) throw ConfigError("empty column name");
    if (!names.insert(n).second) throw ConfigError("column '" + n + "' declared more than once");
  };
  for (const auto& n : cfg.numerical) claim(n);
  for (const auto& n : cfg.categorical) claim(n);
  for (const auto& c : cfg.cyclical) {
    claim(c.name);
    if (!(c.period > 0.0)) throw ConfigError("cyclical column '" + c.name + "' needs a positive period");
  }
  for (const auto& c : cfg.cyclical) {
    if (names.count(c.sin_column()) || names.count(c.cos_column()))
      throw ConfigError("cyclical column '" + c.name + "' collides with a declared column");
  }
}

// ---- preparation & detection --------------------------------------------

PreparedData prepare(const RunConfig& cfg) {
  ColumnSchema schema;
  schema.numerical = cfg.numerical;
  for (const auto& c : cfg.cyclical) schema.numerical.push_back(c.name);
  schema.categorical = cfg.categorical;

  PreparedData p;
  try {
    p.data = load_csv(cfg.dataset, schema);
  } catch (const SchemaError& e) {
    throw ConfigError(e.what());
  }
  for (const auto& c : cfg.cyclical) expand_cyclical(p.data, c);
  p.numerical = cfg.numerical;
  for (const auto& c : cfg.cyclical) {
    p.numerical.push_back(c.sin_column());
    p.numerical.push_back(c.cos_column());
  }
  p.categorical = cfg.categorical;
  p.scaling = scale_fit(p.data, p.numerical);
  return p;
}

DetectorBundle fit_detector(const PreparedData& prepared, const RunConfig& cfg) {
  DetectorBundle b;
  b.per_group = cfg.fit_per_group && !prepared.categorical.empty();
  b.numerical = prepared.numerical;
  b.categorical = prepared.categorical;
  b.cyclical = cfg.cyclical;
  b.scaling = prepared.scaling;
  const Dataset scaled = scale_apply(prepared.data, prepared.scaling);

  if (!b.per_group) {
    b.encoding = FeatureEncoding::fit(scaled, prepared.numerical, prepared.categorical);
    b.parts.push_back({{}, fit(b.encoding.encode(scaled), cfg.ocsvm)});
  } else {
    if (prepared.numerical.empty()) throw ConfigError("fit_per_group needs numerical columns");
    b.encoding = FeatureEncoding::fit(scaled, prepared.numerical, {});
    for (auto& state : unique_categorical_states(scaled, prepared.categorical)) {
      auto rows = rows_matching(scaled, state);
      const Dataset group = scaled.select_rows(rows);
      b.parts.push_back({state, fit(b.encoding.encode(group), cfg.ocsvm)});
    }
  }
  b.training_rows = prepared.data.rows();
  auto labels = detect(b, prepared.data);
  b.training_anomalies =
      static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::anomalous));
  return b;
}

std::vector<Label> detect(const DetectorBundle& bundle, const Dataset& data) {
  std::vector<std::string> used(bundle.numerical);
  used.insert(used.end(), bundle.categorical.begin(), bundle.categorical.end());
  const Dataset scaled = scale_apply(data.select_columns(used), bundle.scaling);
  const Matrix features = bundle.encoding.encode(scaled);
  std::vector<Label> out(data.rows(), Label::anomalous);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    if (!bundle.per_group) {
      out[i] = predict(bundle.parts.front().model, features.row(i));
      continue;
    }
    auto state = state_of_row(scaled, i, bundle.categorical);
    for (const auto& part : bundle.parts)
      if (part.state == state) out[i] = predict(part.model, features.row(i));
  }
  return out;
}

// ---- extraction ----------------------------------------------------------

ExtractArtifacts run_extract(const RunConfig& cfg) {
  validate(cfg);
  ExtractArtifacts a;
  a.prepared = prepare(cfg);
  a.bundle = fit_detector(a.prepared, cfg);
  a.predictions = detect(a.bundle, a.prepared.data);

  RuleColumns columns{a.prepared.numerical, a.prepared.categorical, cfg.cyclical};
  if (cfg.targets != TargetSelection::anomalous)
    a.non_anomalous = extract_rules(a.prepared.data, a.predictions, a.prepared.scaling,
                                    Label::non_anomalous, columns, cfg.extraction);
  if (cfg.targets != TargetSelection::non_anomalous)
    a.anomalous = extract_rules(a.prepared.data, a.predictions, a.prepared.scaling, Label::anomalous,
                                columns, cfg.extraction);
  return a;
}

json rules_document(const ExtractionResult& r, bool scaled) {
  json j = to_json(scaled ? r.scaled : r.rules);
  j["stats"] = {{"target_rows", r.stats.target_rows},
                {"other_rows", r.stats.other_rows},
                {"covered_rows", r.stats.covered_rows},
                {"discarded_rows", r.stats.discarded_rows}};
  return j;
}

void write_extract_artifacts(const ExtractArtifacts& a, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  write_json(out / "model.json", to_json(a.bundle));
  auto emit = [&](const std::optional<ExtractionResult>& r, const std::string& stem) {
    if (!r) return;
    write_json(out / (stem + ".json"), rules_document(*r, false));
    write_text(out / (stem + ".txt"), render_rules(r->rules));
    write_json(out / (stem + "_scaled.json"), rules_document(*r, true));
    write_text(out / (stem + "_scaled.txt"), render_rules(r->scaled));
  };
  emit(a.non_anomalous, "rules_na");
  emit(a.anomalous, "rules_a");
}

// ---- surrogate -----------------------------------------------------------

SurrogateArtifacts run_surrogate(const PreparedData& prepared, std::span<const Label> labels,
                                 std::uint64_t seed) {
  const FeatureEncoding enc = FeatureEncoding::fit(prepared.data, prepared.numerical, prepared.categorical);
  const Matrix x = enc.encode(prepared.data);
  std::vector<TreeFeature> features;
  for (const auto& n : enc.numerical) features.push_back({n, false, {}, {}});
  for (const auto& v : enc.categorical)
    for (const auto& t : v.tokens) features.push_back({v.column + "=" + t, true, v.column, t});

  SurrogateArtifacts s;
  s.tree = fit_tree(x, labels, seed, std::move(features));
  s.rules = tree_to_rules(s.tree);
  s.rows = x.rows();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) correct += s.tree.predict(x.row(i)) == labels[i] ? 1 : 0;
  s.training_accuracy = x.rows() == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(x.rows());
  return s;
}

void write_surrogate_artifacts(const SurrogateArtifacts& s, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  json j = to_json(s.tree);
  j["rule_counts"] = {{"non_anomalous", s.rules.non_anomalous.size()},
                      {"anomalous", s.rules.anomalous.size()}};
  j["training_accuracy"] = s.training_accuracy;
  write_json(out / "tree.json", j);
  std::string text = s.tree.summary() + "\n";
  for (const auto* group : {&s.rules.non_anomalous, &s.rules.anomalous})
    for (const auto& r : *group) text += render_tree_rule(r, s.tree) + "\n";
  write_text(out / "tree_rules.txt", text);
}

// ---- report --------------------------------------------------------------

ReportRow report_row(const std::string& id, const std::filesystem::path& dir) {
  ReportRow row;
  row.id = id;
  try {
    const json na_doc = read_json(dir / "rules_na.json");
    const RuleSet na = ruleset_from_json(na_doc);
    const RuleSet a = ruleset_from_json(read_json(dir / "rules_a.json"));
    const DecisionTree tree = tree_from_json(read_json(dir / "tree.json"));
    const DetectorBundle bundle = bundle_from_json(read_json(dir / "model.json"));

    row.proposal_na = na.rules.size();
    row.proposal_a = a.rules.size();
    const TreeRules tr = tree_to_rules(tree);
    row.tree_na = tr.non_anomalous.size();
    row.tree_a = tr.anomalous.size();
    row.discarded_clusters = na.discarded.size();
    const auto& st = na_doc.at("stats");
    const auto target = st.at("target_rows").get<std::size_t>();
    const auto covered = st.at("covered_rows").get<std::size_t>();
    row.coverage_pct = target == 0 ? 0.0 : 100.0 * static_cast<double>(covered) / static_cast<double>(target);
    row.anomaly_fraction = bundle.training_rows == 0
                               ? 0.0
                               : static_cast<double>(bundle.training_anomalies) /
                                     static_cast<double>(bundle.training_rows);
    row.ok = true;
  } catch (const std::exception& e) {
    row = ReportRow{};
    row.id = id;
    row.failure = e.what();
  }
  return row;
}

json report_json(const std::vector<ReportRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    json j{{"dataset", r.id}, {"status", r.ok ? "ok" : "failed"}};
    if (!r.ok) {
      j["error"] = r.failure;
    } else {
      j["rules"] = {{"proposal_na", r.proposal_na},
                    {"proposal_a", r.proposal_a},
                    {"dt_na", r.tree_na},
                    {"dt_a", r.tree_a}};
      j["discarded_clusters"] = r.discarded_clusters;
      j["coverage_pct"] = r.coverage_pct;
      j["anomaly_fraction"] = r.anomaly_fraction;
    }
    if (r.seconds) j["seconds"] = *r.seconds;
    arr.push_back(j);
  }
  return json{{"format", "hyperrule-report"}, {"version", kFormatVersion}, {"rows", arr}};
}

std::string report_text(const std::vector<ReportRow>& rows) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-20s %10s %10s %8s %8s %9s %9s %8s\n", "Dataset", "Prop.[NA]",
                "Prop.[A]", "DT[NA]", "DT[A]", "Discarded", "Coverage", "Anom.");
  out += buf;
  for (const auto& r : rows) {
    if (!r.ok) {
      out += r.id + "  FAILED: " + r.failure + "\n";
      continue;
    }
    std::snprintf(buf, sizeof buf, "%-20s %10zu %10zu %8zu %8zu %9zu %8.1f%% %7.1f%%", r.id.c_str(),
                  r.proposal_na, r.proposal_a, r.tree_na, r.tree_a, r.discarded_clusters, r.coverage_pct,
                  100.0 * r.anomaly_fraction);
    out += buf;
    if (r.seconds) {
      std::snprintf(buf, sizeof buf, "  %.2fs", *r.seconds);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

// ---- plot ----------------------------------------------------------------

std::string plot_svg(const PreparedData& prepared, std::span<const Label> predictions,
                     const RuleSet& rules, const std::optional<CategoricalState>& state) {
  if (prepared.numerical.size() != 2)
    throw ConfigError("plot needs exactly 2 numerical features, got " +
                      std::to_string(prepared.numerical.size()) +
                      "; select two numerical columns in the config");
  if (rules.scaled) throw ConfigError("plot expects rules in original units");
  if (rules.numerical != prepared.numerical) throw ConfigError("rules and dataset columns differ");
  if (!prepared.categorical.empty() && !state)
    throw ConfigError("dataset has categorical columns; select one state to plot");

  CategoricalState selected = state.value_or(CategoricalState{});
  PlotSpec spec;
  spec.title = std::string(rules.label == Label::non_anomalous ? "Non-anomalous" : "Anomalous") +
               " rules (" + std::to_string(rules.rules.size()) + ")" +
               (selected.empty() ? "" : " for " + selected.to_string());
  spec.x_label = prepared.numerical[0];
  spec.y_label = prepared.numerical[1];
  const Matrix x = prepared.data.numerical_matrix(prepared.numerical);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (!prepared.categorical.empty() && state_of_row(prepared.data, i, prepared.categorical) != selected)
      continue;
    spec.points.push_back({x(i, 0), x(i, 1), predictions[i] == Label::anomalous});
  }
  for (const auto& r : rules.rules) {
    if (r.state != selected) continue;
    spec.rects.push_back({r.bounds[0].lo, r.bounds[0].hi, r.bounds[1].lo, r.bounds[1].hi});
  }
  return render_svg(spec);
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const SchemaError*>(&e) ||
      dynamic_cast<const ParseError*>(&e))
    return 2;
  if (dynamic_cast<const InsufficientDataError*>(&e)) return 3;
  if (dynamic_cast<const NonConvergenceError*>(&e)) return 4;
  return 1;
}

}  // namespace hyperrule
