#include "ppgage/pipeline/stages.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "internal.hpp"
#include "ppgage/dataset_io.hpp"
#include "ppgage/error.hpp"
#include "ppgage/log.hpp"
#include "ppgage/nn/checkpoint.hpp"
#include "ppgage/survival/agreement.hpp"

namespace ppgage::pipeline {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

std::vector<Role> assign_roles(std::span<const PpgRecord> records, std::span<const double> ratios,
                               std::uint64_t seed) {
  std::unordered_set<std::uint64_t> serial;
  for (const PpgRecord& r : records)
    if (r.visit_index > 0) serial.insert(r.subject_id);

  std::vector<std::size_t> dev_rows;
  std::vector<PpgRecord> dev;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (serial.count(records[i].subject_id)) continue;
    dev_rows.push_back(i);
    dev.push_back(records[i]);
  }
  std::vector<Role> roles(records.size(), Role::serial);
  const SplitIndices s = split_dataset(dev, ratios, seed);
  for (std::size_t i : s.train) roles[dev_rows[i]] = Role::train;
  for (std::size_t i : s.selection) roles[dev_rows[i]] = Role::selection;
  for (std::size_t i : s.holdout) roles[dev_rows[i]] = Role::holdout;
  return roles;
}

nn::Dataset make_dataset(std::span<const PpgRecord> records, std::span<const Role> roles, Role role) {
  require(records.size() == roles.size(), "one role per record required");
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (roles[i] == role) rows.push_back(i);
  const std::size_t L = records.empty() ? 0 : records.front().waveform.size();
  nn::Dataset d;
  d.waveforms = nn::Tensor(rows.size(), 1, L);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const PpgRecord& r = records[rows[i]];
    require(r.waveform.size() == L, "records have different waveform lengths");
    std::copy(r.waveform.begin(), r.waveform.end(), d.waveforms.sample(i).begin());
    d.labels.push_back(r.calendar_age);
  }
  return d;
}

double tail_mae(std::span<const double> predictions, std::span<const double> labels, double fraction) {
  require(predictions.size() == labels.size(), "predictions and labels differ in length");
  require(fraction > 0.0 && fraction <= 0.5, "tail fraction must be in (0, 0.5]");
  const std::size_t n = labels.size();
  require(n >= 2, "tail MAE needs at least two rows");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });
  const auto k = std::min(n / 2, static_cast<std::size_t>(std::ceil(static_cast<double>(n) * fraction)));
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    s += std::abs(predictions[order[i]] - labels[order[i]]);
    s += std::abs(predictions[order[n - 1 - i]] - labels[order[n - 1 - i]]);
  }
  return s / static_cast<double>(2 * k);
}

SaliencyProbe saliency_probe(const nn::Net1D& net, const nn::ModelParams& params,
                             std::span<const PpgRecord> records, const MorphologyModel& morphology, double age,
                             double window, double sigma) {
  SaliencyProbe probe;
  probe.age = age;
  probe.systolic_index = morphology.systolic_index(age);
  probe.diastolic_index = morphology.diastolic_index(age);
  std::vector<const PpgRecord*> picked;
  for (const PpgRecord& r : records)
    if (std::abs(r.calendar_age - age) <= window) picked.push_back(&r);
  probe.n = picked.size();
  if (picked.empty()) return probe;

  const std::size_t L = net.config().input_length;
  nn::Tensor batch(picked.size(), 1, L);
  for (std::size_t i = 0; i < picked.size(); ++i) {
    require(picked[i]->waveform.size() == L, "waveform length does not match the network");
    std::copy(picked[i]->waveform.begin(), picked[i]->waveform.end(), batch.sample(i).begin());
  }
  probe.map = nn::mean_saliency(net, params, batch, sigma);
  probe.argmax = static_cast<std::size_t>(std::max_element(probe.map.begin(), probe.map.end()) - probe.map.begin());
  const double a = static_cast<double>(probe.argmax);
  probe.distance = std::min(std::abs(a - probe.systolic_index), std::abs(a - probe.diastolic_index));
  return probe;
}

namespace detail {

std::vector<PpgRecord> load_cohort(const ExperimentConfig& config) {
  return read_dataset(path_of(config, artifact::cohort));
}

std::vector<Role> load_roles(const ExperimentConfig& config, std::span<const PpgRecord> records) {
  const CsvTable t = read_csv(path_of(config, artifact::split));
  const std::size_t id_col = t.column("id"), role_col = t.column("role");
  std::unordered_map<std::uint64_t, Role> by_id;
  for (const auto& row : t.rows) by_id[std::stoull(row[id_col])] = parse_role(row[role_col]);
  std::vector<Role> roles;
  roles.reserve(records.size());
  for (const PpgRecord& r : records) {
    const auto it = by_id.find(r.subject_id);
    if (it == by_id.end())
      throw InvalidInput(fmt::format("subject {} has no role in {}", r.subject_id, artifact::split));
    roles.push_back(it->second);
  }
  return roles;
}

std::vector<PredictionRow> load_predictions(const ExperimentConfig& config) {
  const CsvTable t = read_csv(path_of(config, artifact::predictions));
  const std::size_t c_id = t.column("id"), c_visit = t.column("visit"), c_role = t.column("role"),
                    c_age = t.column("age"), c_pred = t.column("prediction"), c_gap = t.column("gap"),
                    c_time = t.column("event_time"), c_event = t.column("event");
  std::vector<PredictionRow> rows;
  for (const auto& r : t.rows) {
    PredictionRow p;
    p.id = std::stoull(r[c_id]);
    p.visit = std::stoi(r[c_visit]);
    p.role = parse_role(r[c_role]);
    p.age = std::stod(r[c_age]);
    p.prediction = std::stod(r[c_pred]);
    p.gap = std::stod(r[c_gap]);
    p.event_time = std::stod(r[c_time]);
    p.event = std::stoi(r[c_event]);
    rows.push_back(p);
  }
  return rows;
}

void record_stage(const ExperimentConfig& config, const std::string& stage, std::vector<std::string> files,
                  Clock::time_point started) {
  write_text(path_of(config, artifact::config), to_json(config).dump(2) + "\n");
  RunManifest m = RunManifest::load_or_empty(config.out_dir);
  m.tool_version = std::string(tool_version);
  m.config_hash = config_hash(config);
  files.insert(files.begin(), std::string(artifact::config));
  m.artifacts[stage] = std::move(files);
  m.wall_seconds[stage] = std::chrono::duration<double>(Clock::now() - started).count();
  m.save(config.out_dir);
}

}  // namespace detail

using detail::path_of;

void run_generate(const ExperimentConfig& config) {
  const auto started = Clock::now();
  config.validate();
  CohortSpec spec = config.cohort;
  spec.seed = stage_seed(config, "generate");
  const std::vector<PpgRecord> records = sample_cohort(spec);
  const std::vector<Role> roles = assign_roles(records, config.split_ratios, stage_seed(config, "split"));

  fs::create_directories(config.out_dir);
  write_dataset(path_of(config, artifact::cohort), records);
  CsvWriter split({"id", "role"});
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].visit_index == 0) split.row({std::to_string(records[i].subject_id), std::string(to_string(roles[i]))});
  write_text(path_of(config, artifact::split), split.str());
  log::info("generated {} records from {} subjects into {}", records.size(), split.rows(), config.out_dir.string());
  detail::record_stage(config, "generate", {std::string(artifact::cohort), std::string(artifact::split)}, started);
}

namespace {

std::vector<std::string> metrics_header() {
  return {"epoch", "train_loss", "train_sample_mae", "train_dist_mae", "selection_mae", "selection_pearson"};
}

std::string metrics_line(const nn::EpochLog& r) {
  return fmt::format("{},{},{},{},{},{}\n", r.epoch, num(r.train_loss), num(r.train_sample_mae),
                     num(r.train_dist_mae), num(r.selection_mae), num(r.selection_pearson));
}

bool same_architecture(const nn::NetConfig& a, const nn::NetConfig& b) {
  if (a.input_length != b.input_length || a.stem_channels != b.stem_channels || a.se_reduction != b.se_reduction ||
      a.kernel_size != b.kernel_size || a.head_hidden != b.head_hidden || a.stages.size() != b.stages.size())
    return false;
  for (std::size_t i = 0; i < a.stages.size(); ++i) {
    const auto &x = a.stages[i], &y = b.stages[i];
    if (x.blocks != y.blocks || x.channels != y.channels || x.stride != y.stride) return false;
  }
  return true;
}

void check_resumable(const nn::Checkpoint& cp, const ExperimentConfig& config, const nn::TrainConfig& tc) {
  const nn::TrainConfig& s = cp.train;
  auto mismatch = [](const char* what) {
    throw InvalidInput(fmt::format("cannot resume: checkpoint {} differs from the configuration", what));
  };
  if (s.loss != tc.loss) mismatch("loss");
  if (s.seed != tc.seed) mismatch("seed");
  if (s.batch_size != tc.batch_size) mismatch("batch size");
  if (s.lr != tc.lr || s.weight_decay != tc.weight_decay) mismatch("optimizer settings");
  if (s.kde_bandwidth != tc.kde_bandwidth || s.label_min != tc.label_min || s.label_max != tc.label_max ||
      s.sort_epsilon != tc.sort_epsilon || s.distribution_weight != tc.distribution_weight)
    mismatch("loss settings");
  if (!same_architecture(cp.net, config.net)) mismatch("architecture");
}

}  // namespace

void run_train(const ExperimentConfig& config, bool resume) {
  const auto started = Clock::now();
  config.validate();
  const auto records = detail::load_cohort(config);
  const auto roles = detail::load_roles(config, records);
  const nn::Dataset train_set = make_dataset(records, roles, Role::train);
  const nn::Dataset selection = make_dataset(records, roles, Role::selection);
  require(train_set.size() > 0, "no training records");
  require(selection.size() > 0, "no selection records");

  nn::TrainConfig tc = config.train;
  tc.seed = stage_seed(config, "train");
  const fs::path ckpt_path = path_of(config, artifact::checkpoint);
  const fs::path metrics_path = path_of(config, artifact::metrics);

  nn::Checkpoint cp;
  std::string metrics;
  if (resume) {
    cp = nn::load_checkpoint(ckpt_path);
    check_resumable(cp, config, tc);
    // Keep the rows up to the checkpointed epoch; later rows (if any) belong
    // to an interrupted save and are recomputed.
    const std::string old = read_text(metrics_path);
    std::size_t pos = 0;
    for (std::size_t line = 0; line <= cp.state.epochs_done; ++line) {
      const std::size_t nl = old.find('\n', pos);
      if (nl == std::string::npos)
        throw InvalidInput(fmt::format("cannot resume: {} has fewer rows than the {} checkpointed epochs",
                                       artifact::metrics, cp.state.epochs_done));
      pos = nl + 1;
    }
    metrics = old.substr(0, pos);
    log::info("resuming from epoch {} of {}", cp.state.epochs_done, tc.epochs);
  } else {
    cp.net = nn::with_label_scaling(config.net, train_set.labels);
    cp.state = nn::init_training(nn::Net1D(cp.net), tc);
    CsvWriter w(metrics_header());
    metrics = w.str();
  }
  cp.train = tc;

  const nn::Net1D net(cp.net);
  const LabelGrid grid = nn::training_label_grid(tc, train_set.labels);
  const auto on_epoch = [&](const nn::EpochLog& row, const nn::TrainingState& state) {
    metrics += metrics_line(row);
    cp.state = state;
    write_text(metrics_path, metrics);
    nn::save_checkpoint(ckpt_path, cp);
  };
  if (cp.state.epochs_done >= tc.epochs) {
    log::warn("checkpoint already at epoch {}; nothing to train", cp.state.epochs_done);
  }
  nn::train_epochs(net, tc, train_set, selection, grid, cp.state, tc.epochs, on_epoch);
  nn::save_checkpoint(ckpt_path, cp);
  write_text(metrics_path, metrics);
  detail::record_stage(config, "train", {std::string(artifact::checkpoint), std::string(artifact::metrics)},
                       started);
}

void run_evaluate(const ExperimentConfig& config) {
  const auto started = Clock::now();
  const auto records = detail::load_cohort(config);
  const auto roles = detail::load_roles(config, records);
  const nn::Checkpoint cp = nn::load_checkpoint(path_of(config, artifact::checkpoint));
  const nn::Net1D net(cp.net);
  const nn::ModelParams& params = cp.state.best_epoch > 0 ? cp.state.best : cp.state.params;

  nn::Tensor all(records.size(), 1, cp.net.input_length);
  for (std::size_t i = 0; i < records.size(); ++i) {
    require(records[i].waveform.size() == cp.net.input_length, "waveform length does not match the network");
    std::copy(records[i].waveform.begin(), records[i].waveform.end(), all.sample(i).begin());
  }
  const std::vector<double> pred = nn::predict(net, params, all);

  CsvWriter out({"id", "visit", "role", "age", "prediction", "gap", "event_time", "event"});
  for (std::size_t i = 0; i < records.size(); ++i) {
    const PpgRecord& r = records[i];
    out.row({std::to_string(r.subject_id), std::to_string(r.visit_index), std::string(to_string(roles[i])),
             num(r.calendar_age), num(pred[i]), num(pred[i] - r.calendar_age), num(r.event_time),
             std::to_string(r.event_flag)});
  }
  write_text(path_of(config, artifact::predictions), out.str());

  CsvWriter eval({"partition", "n", "mae", "pearson", "tail_mae"});
  for (Role role : {Role::train, Role::selection, Role::holdout, Role::serial}) {
    std::vector<double> p, y;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (roles[i] != role) continue;
      p.push_back(pred[i]);
      y.push_back(records[i].calendar_age);
    }
    if (p.empty()) {
      eval.row({std::string(to_string(role)), "0", "nan", "nan", "nan"});
      continue;
    }
    double mae = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) mae += std::abs(p[i] - y[i]);
    mae /= static_cast<double>(p.size());
    const double tail = p.size() >= 2 ? tail_mae(p, y) : mae;
    eval.row({std::string(to_string(role)), std::to_string(p.size()), num(mae), num(survival::pearson_or_nan(p, y)),
              num(tail)});
  }
  write_text(path_of(config, artifact::evaluation), eval.str());
  detail::record_stage(config, "evaluate",
                       {std::string(artifact::predictions), std::string(artifact::evaluation)}, started);
}

void run_saliency(const ExperimentConfig& config) {
  const auto started = Clock::now();
  const auto records = detail::load_cohort(config);
  const nn::Checkpoint cp = nn::load_checkpoint(path_of(config, artifact::checkpoint));
  const nn::Net1D net(cp.net);
  const nn::ModelParams& params = cp.state.best_epoch > 0 ? cp.state.best : cp.state.params;

  std::vector<SaliencyProbe> probes;
  for (double age : config.analysis.saliency_ages) {
    probes.push_back(saliency_probe(net, params, records, config.cohort.morphology, age,
                                    config.analysis.saliency_window, config.analysis.saliency_sigma));
    if (probes.back().n == 0) log::warn("no records within {} years of probe age {}", config.analysis.saliency_window, age);
  }

  std::vector<std::string> header{"index"};
  for (const auto& p : probes) header.push_back("age_" + num(p.age));
  CsvWriter maps(header);
  for (std::size_t t = 0; t < cp.net.input_length; ++t) {
    std::vector<std::string> row{std::to_string(t)};
    for (const auto& p : probes) row.push_back(p.map.empty() ? "" : num(p.map[t]));
    maps.row(std::move(row));
  }
  write_text(path_of(config, artifact::saliency), maps.str());

  CsvWriter peaks({"age", "n", "argmax", "systolic_index", "diastolic_index", "distance"});
  for (const auto& p : probes) {
    if (p.n == 0) {
      peaks.row({num(p.age), "0", "", num(p.systolic_index), num(p.diastolic_index), ""});
      continue;
    }
    peaks.row({num(p.age), std::to_string(p.n), std::to_string(p.argmax), num(p.systolic_index),
               num(p.diastolic_index), num(p.distance)});
  }
  write_text(path_of(config, artifact::peaks), peaks.str());
  detail::record_stage(config, "saliency", {std::string(artifact::saliency), std::string(artifact::peaks)}, started);
}

}  // namespace ppgage::pipeline
