#include <fstream>

#include "doctest.h"

#include "hyperrule/errors.hpp"
#include "hyperrule/pipeline.hpp"
#include "hyperrule/svg_plot.hpp"
#include "support.hpp"

using namespace hyperrule;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

fs::path work_dir(const std::string& name) {
  const fs::path p = fs::path(TEST_WORK_DIR) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

// One shifted Gaussian cloud per categorical token.
std::string mixed_csv() {
  std::string s = "a,b,site\n";
  const auto m = testsupport::gaussian_cloud(120, 2, 31);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const bool north = i % 2 == 0;
    s += std::to_string(m(i, 0) + (north ? 0 : 4)) + "," + std::to_string(m(i, 1)) + "," +
         (north ? "north" : "south") + "\n";
  }
  return s;
}

}  // namespace

TEST_CASE("config defaults and path resolution") {
  const auto dir = work_dir("config_defaults");
  const json j{{"dataset", "data.csv"}, {"columns", {{"numerical", {"a", "b"}}}}};
  const auto cfg = config_from_json(j, dir);
  CHECK(cfg.dataset == dir / "data.csv");
  CHECK(cfg.output_dir == dir / "out");
  CHECK(cfg.id == "data");
  CHECK(cfg.ocsvm.nu == 0.1);
  CHECK(cfg.ocsvm.kernel.gamma == 0.1);
  CHECK(cfg.extraction.kmeans.n_init == 10);
  CHECK(cfg.extraction.kmeans.max_iter == 100);
  CHECK(cfg.extraction.kmeans.seed == 0);
  CHECK(cfg.extraction.discard_factor == 1.0);
  CHECK(cfg.surrogate_seed == 42);
  CHECK(cfg.targets == TargetSelection::both);
}

TEST_CASE("config errors") {
  const json base{{"dataset", "d.csv"}, {"columns", {{"numerical", {"a"}}}}};
  auto with = [&](const char* key, json value) {
    json j = base;
    j[key] = std::move(value);
    return j;
  };
  CHECK_THROWS_AS(config_from_json(with("bogus", 1), "."), ConfigError);
  CHECK_THROWS_AS(config_from_json(with("ocsvm", {{"nu", 0}}), "."), ConfigError);
  CHECK_THROWS_AS(config_from_json(with("ocsvm", {{"gamma", -1}}), "."), ConfigError);
  CHECK_THROWS_AS(config_from_json(with("ocsvm", {{"nu", "high"}}), "."), ConfigError);
  CHECK_THROWS_AS(config_from_json(with("extraction", {{"discard_factor", 0}}), "."), ConfigError);
  CHECK_THROWS_AS(config_from_json(with("extraction", {{"box_mode", "round"}}), "."), ConfigError);
  CHECK_THROWS_AS(config_from_json(with("columns", {{"numerical", {"a", "a"}}}), "."), ConfigError);
  CHECK_THROWS_AS(config_from_json(with("columns", {{"cyclical", {{{"name", "h"}, {"period", 0}}}}}), "."),
                  ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"columns", {{"numerical", {"a"}}}}}, "."), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("exit codes") {
  CHECK(exit_code_for(ConfigError("x")) == 2);
  CHECK(exit_code_for(SchemaError("x")) == 2);
  CHECK(exit_code_for(ParseError("x", 1, "c")) == 2);
  CHECK(exit_code_for(InsufficientDataError("x")) == 3);
  CHECK(exit_code_for(NonConvergenceError("x")) == 4);
  CHECK(exit_code_for(std::runtime_error("x")) == 1);
}

TEST_CASE("end-to-end run with a categorical column") {
  const auto dir = work_dir("mixed");
  write_file(dir / "mixed.csv", mixed_csv());
  const json j{{"id", "mixed"},
               {"dataset", "mixed.csv"},
               {"columns", {{"numerical", {"a", "b"}}, {"categorical", {"site"}}}},
               {"ocsvm", {{"nu", 0.1}, {"gamma", 2.0}}}};
  const auto cfg = config_from_json(j, dir);
  const auto art = run_extract(cfg);
  REQUIRE(art.non_anomalous);
  REQUIRE(art.anomalous);
  write_extract_artifacts(art, cfg.output_dir);
  const auto s = run_surrogate(art.prepared, art.predictions, cfg.surrogate_seed);
  CHECK(s.training_accuracy == 1.0);
  write_surrogate_artifacts(s, cfg.output_dir);

  for (const char* f : {"model.json", "rules_na.json", "rules_na.txt", "rules_a.json", "rules_a.txt",
                        "rules_na_scaled.json", "tree.json", "tree_rules.txt"})
    CHECK(fs::exists(cfg.output_dir / f));

  // Serialized model reproduces the predictions.
  const auto bundle = bundle_from_json(read_json(cfg.output_dir / "model.json"));
  CHECK(detect(bundle, art.prepared.data) == art.predictions);

  const auto row = report_row("mixed", cfg.output_dir);
  CHECK(row.ok);
  CHECK(row.proposal_na == art.non_anomalous->rules.rules.size());
  CHECK(row.proposal_a == art.anomalous->rules.rules.size());
  CHECK(row.tree_na == s.rules.non_anomalous.size());
  CHECK(row.tree_a == s.rules.anomalous.size());
  CHECK(report_text({row}).find("mixed") != std::string::npos);

  const auto c = testsupport::check_rules(art.prepared.data, art.predictions, art.non_anomalous->rules,
                                          art.non_anomalous->discarded_rows);
  CHECK(c.target_uncovered == 0);
  CHECK(c.other_covered == 0);

  const CategoricalState north{{{"site", "north"}}};
  const auto svg = plot_svg(art.prepared, art.predictions, art.non_anomalous->rules, north);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("class=\"rule\"") != std::string::npos);
  CHECK_THROWS_AS(plot_svg(art.prepared, art.predictions, art.non_anomalous->rules, std::nullopt), ConfigError);
}

TEST_CASE("per-group detectors treat unseen states as anomalous") {
  const auto dir = work_dir("per_group");
  write_file(dir / "mixed.csv", mixed_csv());
  json j{{"dataset", "mixed.csv"},
         {"columns", {{"numerical", {"a", "b"}}, {"categorical", {"site"}}}},
         {"ocsvm", {{"nu", 0.1}, {"gamma", 2.0}, {"fit_per_group", true}}}};
  const auto cfg = config_from_json(j, dir);
  const auto prepared = prepare(cfg);
  const auto bundle = fit_detector(prepared, cfg);
  CHECK(bundle.per_group);
  CHECK(bundle.parts.size() == 2);

  Dataset probe;
  probe.add_numerical("a", {0.0});
  probe.add_numerical("b", {0.0});
  probe.add_categorical("site", {"east"});
  CHECK(detect(bundle, probe) == std::vector<Label>{Label::anomalous});
}

TEST_CASE("serialization round trips") {
  const auto x = testsupport::gaussian_cloud(40, 2, 13);
  const auto m = fit(x, {0.2, {0.7}});
  const auto back = model_from_json(json::parse(to_json(m).dump()));
  for (std::size_t i = 0; i < x.rows(); ++i) CHECK(decision_function(back, x.row(i)) == decision_function(m, x.row(i)));

  RuleSet rs;
  rs.label = Label::anomalous;
  rs.scaled = false;
  rs.n_v = 4;
  rs.numerical = {"p", "q"};
  rs.categorical = {"c"};
  rs.rules.push_back({{{{"c", "z"}}}, {{0.1, 0.2}, {-1e300, 3.5}}, Label::anomalous, {0, 3, 9}});
  rs.discarded.push_back({0, 1, 2});
  CHECK(ruleset_from_json(json::parse(to_json(rs).dump())) == rs);

  std::vector<Label> y(40);
  for (std::size_t i = 0; i < 40; ++i) y[i] = x(i, 0) > 0 ? Label::non_anomalous : Label::anomalous;
  const auto t = fit_tree(x, y, 42);
  CHECK(tree_from_json(json::parse(to_json(t).dump())) == t);

  CHECK_THROWS_AS(ruleset_from_json(to_json(t)), SchemaError);
}

TEST_CASE("plot rejects anything but two numerical features") {
  PreparedData p;
  p.numerical = {"a", "b", "c"};
  CHECK_THROWS_AS(plot_svg(p, {}, RuleSet{}, std::nullopt), ConfigError);
}

TEST_CASE("svg marks rules, degenerate rules and point classes") {
  PlotSpec spec;
  spec.points = {{0, 0, false}, {1, 1, true}};
  spec.rects = {{0, 1, 0, 1}, {0.5, 0.5, 0.2, 0.2}};
  const auto svg = render_svg(spec);
  CHECK(svg.find("class=\"rule\"") != std::string::npos);
  CHECK(svg.find("class=\"rule degenerate\"") != std::string::npos);
  CHECK(svg.find("class=\"anomalous\"") != std::string::npos);
  CHECK(svg.find("class=\"normal\"") != std::string::npos);
}
