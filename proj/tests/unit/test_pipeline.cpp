#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <fmt/format.h>

#include "ppgage/dataset_io.hpp"
#include "ppgage/error.hpp"
#include "ppgage/pipeline/analyze.hpp"
#include "ppgage/pipeline/artifacts.hpp"
#include "ppgage/pipeline/config.hpp"
#include "ppgage/pipeline/stages.hpp"

using namespace ppgage;
using namespace ppgage::pipeline;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ppgage_test_" + name);
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig tiny_config(const fs::path& out, std::uint64_t seed = 3) {
  ExperimentConfig c;
  c.seed = seed;
  c.out_dir = out;
  c.cohort.n_subjects = 240;
  c.cohort.serial_fraction = 0.25;
  c.net.stem_channels = 4;
  c.net.stages = {{1, 8, 2}};
  c.net.se_reduction = 2;
  c.train.epochs = 2;
  c.train.batch_size = 64;
  return c;
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::invalid_input;
}

// Predictions equal to the effective age: the gap is the latent offset.
void write_oracle_predictions(const ExperimentConfig& c) {
  const auto records = read_dataset(c.out_dir / std::string(artifact::cohort));
  const CsvTable split = read_csv(c.out_dir / std::string(artifact::split));
  std::map<std::string, std::string> role;
  for (const auto& row : split.rows) role[row[0]] = row[1];
  CsvWriter out({"id", "visit", "role", "age", "prediction", "gap", "event_time", "event"});
  for (const PpgRecord& r : records) {
    out.row({std::to_string(r.subject_id), std::to_string(r.visit_index), role.at(std::to_string(r.subject_id)),
             num(r.calendar_age), num(r.effective_age()), num(r.latent_vascular_offset), num(r.event_time),
             std::to_string(r.event_flag)});
  }
  write_text(c.out_dir / std::string(artifact::predictions), out.str());
}

std::vector<std::vector<std::string>> rows_where(const CsvTable& t, const std::string& analysis, const std::string& model) {
  std::vector<std::vector<std::string>> out;
  for (const auto& r : t.rows)
    if (r[t.column("analysis")] == analysis && r[t.column("model")] == model) out.push_back(r);
  return out;
}

}  // namespace

TEST_CASE("config parses sections, rejects unknown keys and hashes canonically") {
  const auto j = nlohmann::json::parse(R"({
    "seed": 11, "out": "x",
    "cohort": {"n_subjects": 50, "hazard": {"log_hr_per_offset_year": 0.1}},
    "net": {"stages": [[1, 8, 2]]},
    "train": {"loss": "mae", "epochs": 4},
    "loss": {"kde_bandwidth": 0.7},
    "analysis": {"threshold": "sd"}
  })");
  const ExperimentConfig c = parse_config(j);
  CHECK(c.seed == 11);
  CHECK(c.cohort.n_subjects == 50);
  CHECK(c.cohort.hazard.log_hr_per_offset_year == 0.1);
  REQUIRE(c.net.stages.size() == 1);
  CHECK(c.net.stages[0].channels == 8);
  CHECK(c.train.loss == nn::LossKind::mae);
  CHECK(c.train.kde_bandwidth == 0.7);
  CHECK(c.analysis.threshold == ThresholdMode::sd);

  const ExperimentConfig again = parse_config(to_json(c));
  CHECK(config_hash(again) == config_hash(c));
  CHECK(to_json(again) == to_json(c));
  ExperimentConfig moved = c;
  moved.out_dir = "elsewhere";
  CHECK(config_hash(moved) == config_hash(c));
  moved.seed = 12;
  CHECK(config_hash(moved) != config_hash(c));

  CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"sed": 1})")), InvalidInput);
  CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"cohort": {"hazard": {"rate": 1}}})")), InvalidInput);
  CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"train": {"epochs": "many"}})")), InvalidInput);
  CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"analysis": {"threshold": "12"}})")), InvalidInput);
  CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"net": {"input_length": 64}})")), InvalidInput);
  CHECK_THROWS_AS(parse_config(nlohmann::json::parse(R"({"split": [1, 1]})")), InvalidInput);
  CHECK(code_of([] { load_config("/nonexistent/ppgage.json"); }) == ErrorCode::io);
}

TEST_CASE("stage seeds differ by stage and follow the master seed") {
  ExperimentConfig a, b;
  a.seed = 1;
  b.seed = 2;
  CHECK(stage_seed(a, "train") != stage_seed(a, "generate"));
  CHECK(stage_seed(a, "train") != stage_seed(b, "train"));
  CHECK(stage_seed(a, "train") == stage_seed(a, "train"));
}

TEST_CASE("generate writes identical bytes for a fixed seed") {
  const fs::path a = scratch("gen_a"), b = scratch("gen_b");
  run_generate(tiny_config(a));
  run_generate(tiny_config(b));
  CHECK(read_text(a / "cohort.jsonl") == read_text(b / "cohort.jsonl"));
  CHECK(read_text(a / "split.csv") == read_text(b / "split.csv"));
  const fs::path c = scratch("gen_c");
  run_generate(tiny_config(c, 4));
  CHECK(read_text(a / "cohort.jsonl") != read_text(c / "cohort.jsonl"));
  fs::remove_all(a);
  fs::remove_all(b);
  fs::remove_all(c);
}

TEST_CASE("generate record counts") {
  const fs::path dir = scratch("gen_counts");
  ExperimentConfig c = tiny_config(dir);
  c.cohort.n_subjects = 100;
  c.cohort.serial_fraction = 0.0;
  run_generate(c);
  CHECK(read_dataset(dir / "cohort.jsonl").size() == 100);

  c.cohort.n_subjects = 1000;
  c.cohort.serial_fraction = 0.2;
  run_generate(c);
  const auto recs = read_dataset(dir / "cohort.jsonl");
  std::size_t paired = 0;
  for (const auto& r : recs) paired += r.visit_index == 1;
  CHECK(paired == 200);
  const CsvTable split = read_csv(dir / "split.csv");
  std::size_t serial = 0;
  for (const auto& row : split.rows) serial += row[1] == "serial";
  CHECK(serial == 200);
  CHECK(split.rows.size() == 1000);
  fs::remove_all(dir);
}

TEST_CASE("roles keep serial subjects out of development") {
  CohortSpec spec;
  spec.n_subjects = 200;
  spec.serial_fraction = 0.3;
  const auto recs = sample_cohort(spec);
  const std::vector<double> ratios{8, 1, 1};
  const auto roles = assign_roles(recs, ratios, 9);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const bool has_second = (i + 1 < recs.size() && recs[i + 1].subject_id == recs[i].subject_id) ||
                            recs[i].visit_index == 1;
    CHECK((roles[i] == Role::serial) == has_second);
  }
}

TEST_CASE("tail MAE uses the lowest and highest label deciles") {
  const std::vector<double> labels{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<double> pred = labels;
  pred[0] = 3;   // error 2 on the lowest label
  pred[9] = 14;  // error 4 on the highest
  pred[5] = 100;
  CHECK(tail_mae(pred, labels) == doctest::Approx(3.0));
  CHECK_THROWS_AS(tail_mae(pred, labels, 0.0), InvalidInput);
}

TEST_CASE("train writes one metrics row per epoch and resumes exactly") {
  const fs::path full = scratch("train_full"), part = scratch("train_part");
  ExperimentConfig c = tiny_config(full);
  c.train.epochs = 3;
  run_generate(c);
  run_train(c);
  const CsvTable m = read_csv(full / "metrics.csv");
  CHECK(m.rows.size() == 3);
  CHECK(m.header.front() == "epoch");

  ExperimentConfig p = tiny_config(part);
  p.train.epochs = 1;
  run_generate(p);
  run_train(p);
  CHECK(read_csv(part / "metrics.csv").rows.size() == 1);
  p.train.epochs = 3;
  run_train(p, true);
  CHECK(read_text(part / "metrics.csv") == read_text(full / "metrics.csv"));
  CHECK(read_text(part / "checkpoint.bin") == read_text(full / "checkpoint.bin"));

  // Resuming under a different loss is refused.
  p.train.loss = nn::LossKind::mae;
  CHECK(code_of([&] { run_train(p, true); }) == ErrorCode::invalid_input);
  fs::remove_all(full);
  fs::remove_all(part);
}

TEST_CASE("mae and dist training produce different checkpoints") {
  const fs::path a = scratch("loss_dist"), b = scratch("loss_mae");
  ExperimentConfig c = tiny_config(a);
  c.train.epochs = 1;
  run_generate(c);
  run_train(c);
  c.out_dir = b;
  c.train.loss = nn::LossKind::mae;
  run_generate(c);
  run_train(c);
  CHECK(read_text(a / "checkpoint.bin") != read_text(b / "checkpoint.bin"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("train without a dataset reports the missing artifact") {
  const fs::path dir = scratch("train_missing");
  CHECK(code_of([&] { run_train(tiny_config(dir)); }) == ErrorCode::missing_artifact);
  CHECK(code_of([&] { run_train(tiny_config(dir), true); }) == ErrorCode::missing_artifact);
}

TEST_CASE("swapping the reference group inverts hazard ratios") {
  CohortSpec spec;
  spec.n_subjects = 600;
  spec.seed = 21;
  const auto recs = sample_cohort(spec);
  std::vector<double> time;
  std::vector<int> event;
  std::vector<std::string> group;
  for (const auto& r : recs) {
    time.push_back(r.event_time);
    event.push_back(r.event_flag);
    group.push_back(r.latent_vascular_offset > 2.0 ? "high" : "low");
  }
  const std::vector<std::string> levels{"low", "high"};
  const Eigen::MatrixXd none(static_cast<Eigen::Index>(time.size()), 0);
  const auto a = group_hazard_ratios(time, event, group, levels, "low", none, {});
  const auto b = group_hazard_ratios(time, event, group, levels, "high", none, {});
  REQUIRE(a[1].status == "ok");
  REQUIRE(b[0].status == "ok");
  CHECK(a[0].status == "reference");
  CHECK(a[0].row.ratio == 1.0);
  CHECK(std::abs(a[1].row.ratio * b[0].row.ratio - 1.0) < 1e-9);
  CHECK(std::abs(a[1].row.ci_low * b[0].row.ci_high - 1.0) < 1e-9);
  CHECK(a[1].row.ratio > 1.0);
}

TEST_CASE("degenerate groups are reported and the rest still fitted") {
  const std::vector<double> time{1, 2, 3, 4, 5, 6, 7, 8};
  const std::vector<int> event{1, 0, 1, 1, 0, 1, 0, 0};
  const std::vector<std::string> group{"a", "b", "a", "b", "a", "b", "c", "c"};
  const std::vector<std::string> levels{"a", "b", "c", "d"};
  const Eigen::MatrixXd none(8, 0);
  const auto r = group_hazard_ratios(time, event, group, levels, "a", none, {});
  CHECK(r[0].status == "reference");
  CHECK(r[1].status == "ok");
  CHECK(r[2].status == "no_events");
  CHECK(r[3].status == "empty");
  CHECK(r[3].n == 0);
  const auto none_ref = group_hazard_ratios(time, event, group, levels, "d", none, {});
  CHECK(none_ref[3].status == "reference_empty");
  CHECK(none_ref[0].status == "no_reference");
}

TEST_CASE("analysis with a null generator covers HR 1 and prints the reference as 1") {
  // Per stratum: the share of seeds whose CI covers 1.
  std::map<std::string, int> covered, total;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const fs::path dir = scratch("null_" + std::to_string(seed));
    ExperimentConfig c = tiny_config(dir, seed);
    c.cohort.n_subjects = 1000;
    c.cohort.serial_fraction = 0.1;
    c.cohort.hazard.log_hr_per_offset_year = 0.0;
    c.split_ratios = {1, 1, 8};
    run_generate(c);
    write_oracle_predictions(c);
    run_analyze(c);
    const CsvTable t = read_csv(dir / "cox_table.csv");
    for (const auto& row : rows_where(t, "strata", "1")) {
      if (row[t.column("status")] == "reference") {
        CHECK(row[t.column("hr")] == "1");
        continue;
      }
      REQUIRE(row[t.column("status")] == "ok");
      const std::string term = row[t.column("term")];
      ++total[term];
      covered[term] += std::stod(row[t.column("ci_low")]) <= 1.0 && 1.0 <= std::stod(row[t.column("ci_high")]);
    }
    fs::remove_all(dir);
  }
  for (const char* term : {"underestimation", "overestimation"}) {
    CHECK(total[term] == 100);
    CHECK(covered[term] >= 90);
  }
}

TEST_CASE("analysis recovers the direction of a true offset effect") {
  const fs::path dir = scratch("analysis_signal");
  ExperimentConfig c = tiny_config(dir, 5);
  c.cohort.n_subjects = 3000;
  c.cohort.serial_fraction = 0.2;
  c.cohort.hazard.log_hr_per_offset_year = 0.1;
  c.split_ratios = {1, 1, 8};
  run_generate(c);
  write_oracle_predictions(c);
  run_analyze(c);
  const CsvTable t = read_csv(dir / "cox_table.csv");
  for (const char* model : {"1", "2", "3"}) {
    const auto cont = rows_where(t, "continuous", model);
    REQUIRE(cont.size() == 1);
    CHECK(std::stod(cont[0][t.column("hr")]) > 1.0);
    CHECK(std::stod(cont[0][t.column("p")]) < 0.05);
    const auto strata = rows_where(t, "strata", model);
    REQUIRE(strata.size() == 3);
    CHECK(std::stod(strata[2][t.column("hr")]) > std::stod(strata[0][t.column("hr")]));
  }
  const CsvTable serial = read_csv(dir / "serial_table.csv");
  REQUIRE(serial.rows.size() == 4);
  CHECK(serial.rows[3][serial.column("status")] == "reference");
  CHECK(std::stod(serial.rows[0][serial.column("hr")]) > 1.0);

  const CsvTable curve = read_csv(dir / "hr_curve.csv");
  REQUIRE(!curve.rows.empty());
  for (const auto& row : curve.rows)
    if (std::stod(row[0]) == 0.0) CHECK(std::stod(row[1]) == doctest::Approx(1.0).epsilon(1e-12));
  const CsvTable lr = read_csv(dir / "logrank.csv");
  CHECK(lr.rows.size() == 5);
  for (const char* f : {"km_correct.csv", "km_overestimation.csv", "km_G4.csv", "or_table.csv"})
    CHECK(fs::exists(dir / f));
  fs::remove_all(dir);
}

TEST_CASE("full run reports no missing artifacts and is reproducible") {
  const fs::path a = scratch("run_a"), b = scratch("run_b");
  run_all(tiny_config(a));
  run_all(tiny_config(b));
  CHECK(run_report(tiny_config(a)).empty());
  CHECK(read_text(a / "metrics.csv") == read_text(b / "metrics.csv"));
  CHECK(read_text(a / "predictions.csv") == read_text(b / "predictions.csv"));
  CHECK(read_text(a / "cox_table.csv") == read_text(b / "cox_table.csv"));

  const std::string first = read_text(a / "summary.txt");
  run_report(tiny_config(a));
  CHECK(read_text(a / "summary.txt") == first);
  CHECK(first.find("[missing] 0") != std::string::npos);

  const RunManifest m = RunManifest::load_or_empty(a);
  CHECK(m.config_hash == config_hash(tiny_config(a)));
  for (const auto& [stage, files] : m.artifacts)
    for (const auto& f : files) CHECK(fs::exists(a / f));

  fs::remove(a / "checkpoint.bin");
  const auto missing = run_report(tiny_config(a));
  REQUIRE(missing.size() == 1);
  CHECK(missing[0] == "checkpoint.bin");
  CHECK(read_text(a / "summary.txt").find("checkpoint.bin MISSING") != std::string::npos);
  CHECK(code_of([&] { run_evaluate(tiny_config(a)); }) == ErrorCode::missing_artifact);
  fs::remove_all(a);
  fs::remove_all(b);
}
