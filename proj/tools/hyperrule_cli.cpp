// Command-line front end: extract, surrogate, report, plot, explain.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hyperrule/pipeline.hpp"

using namespace hyperrule;
using json = nlohmann::ordered_json;

namespace {

const char* kind_of(const std::exception& e) {
  if (auto* err = dynamic_cast<const Error*>(&e)) return err->kind();
  return "error";
}

int fail(const std::exception& e, const std::optional<std::filesystem::path>& out_dir) {
  const int code = exit_code_for(e);
  json doc{{"error", kind_of(e)}, {"message", e.what()}, {"exit_code", code}};
  if (auto* nc = dynamic_cast<const ExtractionNonConvergence*>(&e)) {
    doc["clusters"] = nc->n_clusters();
    json boxes = json::array();
    for (const auto& b : nc->offending()) {
      json box = json::array();
      for (const auto& iv : b) box.push_back({iv.lo, iv.hi});
      boxes.push_back(box);
    }
    doc["offending_boxes"] = boxes;
  }
  if (auto* nc = dynamic_cast<const OcsvmNonConvergence*>(&e)) doc["kkt_violation"] = nc->violation();
  std::cerr << doc.dump() << "\n";
  if (out_dir) {
    try {
      write_json(*out_dir / "error.json", doc);
    } catch (const std::exception&) {
    }
  }
  return code;
}

struct CommonOptions {
  std::string config;
  std::string out;
};

RunConfig load_with_overrides(const CommonOptions& o) {
  RunConfig cfg = load_config(o.config);
  if (!o.out.empty()) cfg.output_dir = o.out;
  return cfg;
}

int cmd_extract(const CommonOptions& o, const std::string& target, std::optional<double> discard,
                const std::string& box_mode) {
  std::optional<std::filesystem::path> out_dir;
  try {
    RunConfig cfg = load_with_overrides(o);
    out_dir = cfg.output_dir;
    if (target == "na") cfg.targets = TargetSelection::non_anomalous;
    else if (target == "a") cfg.targets = TargetSelection::anomalous;
    else if (target == "both") cfg.targets = TargetSelection::both;
    if (discard) cfg.extraction.discard_factor = *discard;
    if (box_mode == "all") cfg.extraction.mode = BoxMode::all_points;
    else if (box_mode == "farthest") cfg.extraction.mode = BoxMode::farthest_vertices;
    validate(cfg);

    auto artifacts = run_extract(cfg);
    write_extract_artifacts(artifacts, cfg.output_dir);
    std::filesystem::remove(cfg.output_dir / "error.json");

    std::cout << cfg.id << ": " << artifacts.bundle.training_anomalies << " of "
              << artifacts.bundle.training_rows << " rows anomalous\n";
    for (const auto* r : {&artifacts.non_anomalous, &artifacts.anomalous}) {
      if (!*r) continue;
      const auto& res = **r;
      std::cout << "  " << to_string(res.rules.label) << ": " << res.rules.rules.size()
                << " rules (n_v = " << res.rules.n_v << ", discarded clusters "
                << res.rules.discarded.size() << ", covered " << res.stats.covered_rows << "/"
                << res.stats.target_rows << ")\n";
    }
    return 0;
  } catch (const std::exception& e) {
    return fail(e, out_dir);
  }
}

int cmd_surrogate(const CommonOptions& o) {
  std::optional<std::filesystem::path> out_dir;
  try {
    RunConfig cfg = load_with_overrides(o);
    out_dir = cfg.output_dir;
    PreparedData prepared = prepare(cfg);
    DetectorBundle bundle = fit_detector(prepared, cfg);
    auto labels = detect(bundle, prepared.data);
    auto s = run_surrogate(prepared, labels, cfg.surrogate_seed);
    write_surrogate_artifacts(s, cfg.output_dir);
    std::printf("%s\n", s.tree.summary().c_str());
    std::printf("rules: NA = %zu, A = %zu\n", s.rules.non_anomalous.size(), s.rules.anomalous.size());
    std::printf("training accuracy: %.2f%%\n", 100.0 * s.training_accuracy);
    return 0;
  } catch (const std::exception& e) {
    return fail(e, out_dir);
  }
}

int cmd_report(const std::vector<std::string>& configs, const std::string& out, bool run,
               bool with_timings) {
  std::vector<ReportRow> rows;
  for (const auto& path : configs) {
    std::string id = std::filesystem::path(path).stem().string();
    try {
      RunConfig cfg = load_config(path);
      id = cfg.id;
      std::optional<double> seconds;
      if (run) {
        const auto start = std::chrono::steady_clock::now();
        try {
          auto artifacts = run_extract(cfg);
          write_extract_artifacts(artifacts, cfg.output_dir);
          auto s = run_surrogate(artifacts.prepared, artifacts.predictions, cfg.surrogate_seed);
          write_surrogate_artifacts(s, cfg.output_dir);
          std::filesystem::remove(cfg.output_dir / "error.json");
        } catch (const std::exception& e) {
          fail(e, cfg.output_dir);
          ReportRow row;
          row.id = id;
          row.failure = e.what();
          rows.push_back(std::move(row));
          continue;
        }
        seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      }
      ReportRow row = report_row(id, cfg.output_dir);
      if (with_timings) row.seconds = seconds;
      rows.push_back(std::move(row));
    } catch (const std::exception& e) {
      ReportRow row;
      row.id = id;
      row.failure = e.what();
      rows.push_back(std::move(row));
    }
  }
  try {
    const std::filesystem::path dir = out.empty() ? std::filesystem::path(".") : std::filesystem::path(out);
    write_json(dir / "report.json", report_json(rows));
    const std::string text = report_text(rows);
    write_text(dir / "report.txt", text);
    std::cout << text;
  } catch (const std::exception& e) {
    return fail(e, std::nullopt);
  }
  return 0;
}

std::optional<CategoricalState> parse_state(const std::vector<std::string>& items,
                                            const std::vector<std::string>& categorical) {
  if (items.empty()) return std::nullopt;
  CategoricalState s;
  for (const auto& col : categorical) {
    bool found = false;
    for (const auto& it : items) {
      auto eq = it.find('=');
      if (eq == std::string::npos) throw ConfigError("--state expects column=value, got '" + it + "'");
      if (it.substr(0, eq) == col) {
        s.values.emplace_back(col, it.substr(eq + 1));
        found = true;
      }
    }
    if (!found) throw ConfigError("--state is missing categorical column '" + col + "'");
  }
  if (s.values.size() != items.size()) throw ConfigError("--state names an unknown column");
  return s;
}

void require_file(const std::string& path, const char* what) {
  if (!std::filesystem::exists(path))
    throw ConfigError(std::string(what) + " '" + path + "' not found; run extract first or pass its path");
}

int cmd_plot(const CommonOptions& o, std::string model_path, std::string rules_path,
             const std::vector<std::string>& state_items) {
  try {
    RunConfig cfg = load_config(o.config);
    if (model_path.empty()) model_path = (cfg.output_dir / "model.json").string();
    if (rules_path.empty()) rules_path = (cfg.output_dir / "rules_na.json").string();
    require_file(model_path, "model");
    require_file(rules_path, "rule file");
    const std::filesystem::path svg = o.out.empty() ? cfg.output_dir / "plot.svg" : std::filesystem::path(o.out);

    PreparedData prepared = prepare(cfg);
    if (prepared.numerical.size() != 2)
      throw ConfigError("plot needs exactly 2 numerical features, got " +
                        std::to_string(prepared.numerical.size()) +
                        "; select two numerical columns in the config");
    DetectorBundle bundle = bundle_from_json(read_json(model_path));
    auto labels = detect(bundle, prepared.data);
    RuleSet rules = ruleset_from_json(read_json(rules_path));
    write_text(svg, plot_svg(prepared, labels, rules, parse_state(state_items, prepared.categorical)));
    std::cout << "wrote " << svg.string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    return fail(e, std::nullopt);
  }
}

int cmd_explain(const CommonOptions& o, std::size_t row, std::string rules_path) {
  try {
    RunConfig cfg = load_config(o.config);
    if (rules_path.empty()) rules_path = (cfg.output_dir / "rules_na.json").string();
    require_file(rules_path, "rule file");
    PreparedData prepared = prepare(cfg);
    if (row >= prepared.data.rows())
      throw ConfigError("row " + std::to_string(row) + " out of range (" +
                        std::to_string(prepared.data.rows()) + " rows)");
    RuleSet rules = ruleset_from_json(read_json(rules_path));
    const Matrix x = prepared.data.numerical_matrix(rules.numerical);
    const CategoricalState state =
        rules.categorical.empty() ? CategoricalState{} : state_of_row(prepared.data, row, rules.categorical);
    Counterfactual cf = explain_point(x.row(row), state, rules, prepared.scaling);

    json changes = json::array();
    for (std::size_t j = 0; j < cf.deltas.size(); ++j) {
      if (cf.deltas[j] == 0.0) continue;
      changes.push_back({{"column", rules.numerical[j]},
                         {"from", cf.point[j]},
                         {"to", cf.point[j] + cf.deltas[j]},
                         {"delta", cf.deltas[j]}});
    }
    json doc{{"row", row},
             {"inside", cf.distance == 0.0},
             {"distance", cf.distance},
             {"rule_index", cf.rule_index},
             {"rule", render_rule(cf.nearest_rule, rules)},
             {"changes", changes}};
    std::cout << doc.dump(2) << "\n";
    return 0;
  } catch (const std::exception& e) {
    return fail(e, std::nullopt);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hypercube rule extraction for one-class SVM anomaly detection"};
  app.require_subcommand(1);

  CommonOptions extract_opts, surrogate_opts, plot_opts, explain_opts;
  std::string target = "";
  std::optional<double> discard;
  std::string box_mode;
  auto* extract = app.add_subcommand("extract", "Fit the detector and extract hypercube rules");
  extract->add_option("--config", extract_opts.config, "Run configuration (JSON)")->required();
  extract->add_option("--target", target, "Classes to explain")->check(CLI::IsMember({"na", "a", "both"}));
  extract->add_option("--discard-factor", discard, "Discard factor e (> 0)");
  extract->add_option("--box-mode", box_mode, "Hypercube construction")->check(CLI::IsMember({"all", "farthest"}));
  extract->add_option("--out", extract_opts.out, "Output directory (overrides config)");

  auto* surrogate = app.add_subcommand("surrogate", "Fit the overfit surrogate decision tree");
  surrogate->add_option("--config", surrogate_opts.config, "Run configuration (JSON)")->required();
  surrogate->add_option("--out", surrogate_opts.out, "Output directory (overrides config)");

  std::vector<std::string> report_configs;
  std::string report_out;
  bool report_run = false, report_timings = false;
  auto* report = app.add_subcommand("report", "Rule-count table over one or more runs");
  report->add_option("--config", report_configs, "Run configurations (repeatable)")->required();
  report->add_option("--out", report_out, "Directory for report.json / report.txt");
  report->add_flag("--run", report_run, "Run extract and surrogate before reporting");
  report->add_flag("--with-timings", report_timings, "Include wall-clock seconds (with --run)");

  std::string plot_model, plot_rules;
  std::vector<std::string> plot_state;
  auto* plot = app.add_subcommand("plot", "SVG of points and rule rectangles (2 numerical features)");
  plot->add_option("--config", plot_opts.config, "Run configuration (JSON)")->required();
  plot->add_option("--model", plot_model, "model.json (default: <output_dir>/model.json)");
  plot->add_option("--rules", plot_rules, "Rule file (default: <output_dir>/rules_na.json)");
  plot->add_option("--state", plot_state, "Categorical state, column=value (repeatable)");
  plot->add_option("--out", plot_opts.out, "SVG path (default: <output_dir>/plot.svg)");

  std::size_t explain_row = 0;
  std::string explain_rules;
  auto* explain = app.add_subcommand("explain", "Counterfactual for one dataset row");
  explain->add_option("--config", explain_opts.config, "Run configuration (JSON)")->required();
  explain->add_option("--row", explain_row, "Zero-based data row")->required();
  explain->add_option("--rules", explain_rules, "Rule file (default: <output_dir>/rules_na.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (*extract) return cmd_extract(extract_opts, target, discard, box_mode);
  if (*surrogate) return cmd_surrogate(surrogate_opts);
  if (*report) return cmd_report(report_configs, report_out, report_run, report_timings);
  if (*plot) return cmd_plot(plot_opts, plot_model, plot_rules, plot_state);
  if (*explain) return cmd_explain(explain_opts, explain_row, explain_rules);
  return 2;
}
