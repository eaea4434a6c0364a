#include "ppgage/pipeline/config.hpp"

#include <fmt/format.h>

#include <fstream>
#include <set>

#include "ppgage/error.hpp"
#include "ppgage/rng.hpp"

namespace ppgage::pipeline {

using nlohmann::json;

ThresholdMode parse_threshold_mode(const std::string& text) {
  if (text == "9") return ThresholdMode::years9;
  if (text == "15") return ThresholdMode::years15;
  if (text == "sd") return ThresholdMode::sd;
  throw InvalidInput("unknown threshold '" + text + "' (expected 9, 15 or sd)");
}

std::string to_string(ThresholdMode mode) {
  switch (mode) {
    case ThresholdMode::years9: return "9";
    case ThresholdMode::years15: return "15";
    case ThresholdMode::sd: return "sd";
  }
  return "?";
}

namespace {

// Tracks which keys of one JSON object were consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw InvalidInput("config section '" + path_ + "' must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw InvalidInput(fmt::format("config key '{}.{}' has the wrong type: {}", path_, key, e.what()));
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string path(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, _] : j_.items())
      if (!seen_.count(key)) throw InvalidInput(fmt::format("unknown config key '{}'", path_.empty() ? key : path_ + "." + key));
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
};

void read_ages(Section& s, AgeSampler& a) {
  s.get("center_weight", a.center_weight);
  s.get("lower_weight", a.lower_weight);
  s.get("center_mean", a.center_mean);
  s.get("center_sd", a.center_sd);
  s.get("center_lo", a.center_lo);
  s.get("center_hi", a.center_hi);
  s.get("lower_lo", a.lower_lo);
  s.get("lower_scale", a.lower_scale);
  s.get("upper_hi", a.upper_hi);
  s.get("upper_scale", a.upper_scale);
}

void read_morphology(Section& s, MorphologyModel& m) {
  s.get("samples", m.samples);
  s.get("systolic_position", m.systolic_position);
  s.get("systolic_amplitude", m.systolic_amplitude);
  s.get("systolic_width", m.systolic_width);
  s.get("reference_age", m.reference_age);
  s.get("spacing_at_reference", m.spacing_at_reference);
  s.get("spacing_per_year", m.spacing_per_year);
  s.get("diastolic_amplitude_at_reference", m.diastolic_amplitude_at_reference);
  s.get("diastolic_amplitude_per_year", m.diastolic_amplitude_per_year);
  s.get("diastolic_width", m.diastolic_width);
  s.get("min_age", m.min_age);
  s.get("max_age", m.max_age);
  s.get("drift_amplitude", m.drift_amplitude);
  s.get("noise_sigma", m.noise_sigma);
}

void read_hazard(Section& s, HazardModel& h) {
  s.get("baseline_rate", h.baseline_rate);
  s.get("log_hr_per_offset_year", h.log_hr_per_offset_year);
  s.get("log_hr_per_age_year", h.log_hr_per_age_year);
  s.get("reference_age", h.reference_age);
}

void read_cohort(Section& s, CohortSpec& c) {
  s.get("n_subjects", c.n_subjects);
  s.get("offset_sigma", c.offset_sigma);
  s.get("censor_horizon", c.censor_horizon);
  s.get("serial_fraction", c.serial_fraction);
  s.get("visit_interval", c.visit_interval);
  s.get("offset_drift_sigma", c.offset_drift_sigma);
  if (const json* j = s.child("ages")) {
    Section sub(*j, s.path("ages"));
    read_ages(sub, c.ages);
    sub.finish();
  }
  if (const json* j = s.child("morphology")) {
    Section sub(*j, s.path("morphology"));
    read_morphology(sub, c.morphology);
    sub.finish();
  }
  if (const json* j = s.child("hazard")) {
    Section sub(*j, s.path("hazard"));
    read_hazard(sub, c.hazard);
    sub.finish();
  }
}

void read_net(Section& s, nn::NetConfig& n) {
  s.get("input_length", n.input_length);
  s.get("stem_channels", n.stem_channels);
  s.get("se_reduction", n.se_reduction);
  s.get("kernel_size", n.kernel_size);
  s.get("head_hidden", n.head_hidden);
  if (const json* j = s.child("stages")) {
    std::vector<std::array<std::size_t, 3>> stages;
    try {
      stages = j->get<std::vector<std::array<std::size_t, 3>>>();
    } catch (const json::exception&) {
      throw InvalidInput("config key 'net.stages' must be a list of [blocks, channels, stride]");
    }
    n.stages.clear();
    for (const auto& st : stages) n.stages.push_back({st[0], st[1], st[2]});
  }
}

void read_train(Section& s, nn::TrainConfig& t) {
  s.get("epochs", t.epochs);
  s.get("batch_size", t.batch_size);
  s.get("lr", t.lr);
  s.get("weight_decay", t.weight_decay);
  std::string loss = nn::to_string(t.loss);
  s.get("loss", loss);
  t.loss = nn::parse_loss_kind(loss);
}

void read_loss(Section& s, nn::TrainConfig& t) {
  s.get("kde_bandwidth", t.kde_bandwidth);
  s.get("label_min", t.label_min);
  s.get("label_max", t.label_max);
  s.get("sort_epsilon", t.sort_epsilon);
  s.get("distribution_weight", t.distribution_weight);
}

void read_analysis(Section& s, AnalysisConfig& a) {
  std::string threshold = to_string(a.threshold);
  s.get("threshold", threshold);
  a.threshold = parse_threshold_mode(threshold);
  s.get("spline_knots", a.spline_knots);
  s.get("curve_min", a.curve_min);
  s.get("curve_max", a.curve_max);
  s.get("curve_step", a.curve_step);
  s.get("logistic_horizon", a.logistic_horizon);
  s.get("logistic_threshold", a.logistic_threshold);
  s.get("saliency_sigma", a.saliency_sigma);
  s.get("saliency_ages", a.saliency_ages);
  s.get("saliency_window", a.saliency_window);
}

}  // namespace

void ExperimentConfig::validate() const {
  cohort.validate();
  require(split_ratios.size() == 3, "split needs three ratios");
  for (double r : split_ratios) require(r > 0.0, "split ratios must be positive");
  net.validate();
  require(net.input_length == cohort.morphology.samples, "network input length must equal the waveform length");
  require(train.epochs >= 1, "epochs must be >= 1");
  require(train.batch_size >= 1, "batch size must be >= 1");
  require(train.lr > 0.0 && train.weight_decay >= 0.0, "learning rate must be positive, weight decay non-negative");
  require(train.kde_bandwidth > 0.0, "KDE bandwidth must be positive");
  require(train.label_min < train.label_max, "label range is empty");
  require(train.sort_epsilon > 0.0, "sort epsilon must be positive");
  require(train.distribution_weight >= 0.0, "distribution weight must be non-negative");
  require(analysis.spline_knots >= 3 && analysis.spline_knots <= 7, "spline knots must be in [3, 7]");
  require(analysis.curve_step > 0.0 && analysis.curve_min < analysis.curve_max, "bad HR curve grid");
  require(analysis.logistic_horizon > 0.0 && analysis.logistic_threshold > 0.0, "bad logistic settings");
  require(analysis.saliency_sigma >= 0.0 && analysis.saliency_window >= 0.0, "bad saliency settings");
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  Section root(j, "");
  root.get("seed", c.seed);
  std::string out = c.out_dir.string();
  root.get("out", out);
  c.out_dir = out;
  root.get("split", c.split_ratios);
  if (const json* s = root.child("cohort")) {
    Section sec(*s, "cohort");
    read_cohort(sec, c.cohort);
    sec.finish();
  }
  if (const json* s = root.child("net")) {
    Section sec(*s, "net");
    read_net(sec, c.net);
    sec.finish();
  }
  if (const json* s = root.child("train")) {
    Section sec(*s, "train");
    read_train(sec, c.train);
    sec.finish();
  }
  if (const json* s = root.child("loss")) {
    Section sec(*s, "loss");
    read_loss(sec, c.train);
    sec.finish();
  }
  if (const json* s = root.child("analysis")) {
    Section sec(*s, "analysis");
    read_analysis(sec, c.analysis);
    sec.finish();
  }
  root.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidInput("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  const auto& a = c.cohort.ages;
  const auto& m = c.cohort.morphology;
  const auto& h = c.cohort.hazard;
  json stages = json::array();
  for (const auto& s : c.net.stages) stages.push_back({s.blocks, s.channels, s.stride});
  return json{
      {"seed", c.seed},
      {"out", c.out_dir.string()},
      {"split", c.split_ratios},
      {"cohort",
       {{"n_subjects", c.cohort.n_subjects},
        {"offset_sigma", c.cohort.offset_sigma},
        {"censor_horizon", c.cohort.censor_horizon},
        {"serial_fraction", c.cohort.serial_fraction},
        {"visit_interval", c.cohort.visit_interval},
        {"offset_drift_sigma", c.cohort.offset_drift_sigma},
        {"ages",
         {{"center_weight", a.center_weight},
          {"lower_weight", a.lower_weight},
          {"center_mean", a.center_mean},
          {"center_sd", a.center_sd},
          {"center_lo", a.center_lo},
          {"center_hi", a.center_hi},
          {"lower_lo", a.lower_lo},
          {"lower_scale", a.lower_scale},
          {"upper_hi", a.upper_hi},
          {"upper_scale", a.upper_scale}}},
        {"morphology",
         {{"samples", m.samples},
          {"systolic_position", m.systolic_position},
          {"systolic_amplitude", m.systolic_amplitude},
          {"systolic_width", m.systolic_width},
          {"reference_age", m.reference_age},
          {"spacing_at_reference", m.spacing_at_reference},
          {"spacing_per_year", m.spacing_per_year},
          {"diastolic_amplitude_at_reference", m.diastolic_amplitude_at_reference},
          {"diastolic_amplitude_per_year", m.diastolic_amplitude_per_year},
          {"diastolic_width", m.diastolic_width},
          {"min_age", m.min_age},
          {"max_age", m.max_age},
          {"drift_amplitude", m.drift_amplitude},
          {"noise_sigma", m.noise_sigma}}},
        {"hazard",
         {{"baseline_rate", h.baseline_rate},
          {"log_hr_per_offset_year", h.log_hr_per_offset_year},
          {"log_hr_per_age_year", h.log_hr_per_age_year},
          {"reference_age", h.reference_age}}}}},
      {"net",
       {{"input_length", c.net.input_length},
        {"stem_channels", c.net.stem_channels},
        {"stages", stages},
        {"se_reduction", c.net.se_reduction},
        {"kernel_size", c.net.kernel_size},
        {"head_hidden", c.net.head_hidden}}},
      {"train",
       {{"epochs", c.train.epochs},
        {"batch_size", c.train.batch_size},
        {"lr", c.train.lr},
        {"weight_decay", c.train.weight_decay},
        {"loss", nn::to_string(c.train.loss)}}},
      {"loss",
       {{"kde_bandwidth", c.train.kde_bandwidth},
        {"label_min", c.train.label_min},
        {"label_max", c.train.label_max},
        {"sort_epsilon", c.train.sort_epsilon},
        {"distribution_weight", c.train.distribution_weight}}},
      {"analysis",
       {{"threshold", to_string(c.analysis.threshold)},
        {"spline_knots", c.analysis.spline_knots},
        {"curve_min", c.analysis.curve_min},
        {"curve_max", c.analysis.curve_max},
        {"curve_step", c.analysis.curve_step},
        {"logistic_horizon", c.analysis.logistic_horizon},
        {"logistic_threshold", c.analysis.logistic_threshold},
        {"saliency_sigma", c.analysis.saliency_sigma},
        {"saliency_ages", c.analysis.saliency_ages},
        {"saliency_window", c.analysis.saliency_window}}},
  };
}

std::string config_hash(const ExperimentConfig& config) {
  json j = to_json(config);
  j.erase("out");  // where results go does not change them
  return fmt::format("{:016x}", fnv1a64(j.dump()));
}

std::uint64_t stage_seed(const ExperimentConfig& config, std::string_view stage) {
  return derive_seed(config.seed, stage);
}

}  // namespace ppgage::pipeline
