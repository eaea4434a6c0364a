#include "ppgage/synthetic_ppg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <unordered_map>

#include "ppgage/error.hpp"

namespace ppgage {

void MorphologyParams::validate() const {
  for (const PulseShape* p : {&systolic, &diastolic}) {
    require(p->width > 0.0 && std::isfinite(p->width), "pulse widths must be positive");
    require(p->position > 0.0 && p->position < 1.0, "pulse positions must lie inside the window");
    require(p->amplitude >= 0.0, "pulse amplitudes must be non-negative");
  }
  require(systolic.position < diastolic.position, "systolic peak must precede the diastolic peak");
  require(drift_amplitude >= 0.0 && noise_sigma >= 0.0, "drift and noise must be non-negative");
}

MorphologyParams MorphologyModel::at_age(double effective_age) const {
  require(std::isfinite(effective_age), "effective age must be finite");
  const double age = std::clamp(effective_age, min_age, max_age);
  const double dy = age - reference_age;
  MorphologyParams p;
  p.systolic = {systolic_position, systolic_amplitude, systolic_width};
  p.diastolic = {systolic_position + spacing_at_reference + spacing_per_year * dy,
                 std::max(0.0, diastolic_amplitude_at_reference + diastolic_amplitude_per_year * dy),
                 diastolic_width};
  p.drift_amplitude = drift_amplitude;
  p.noise_sigma = noise_sigma;
  return p;
}

double MorphologyModel::systolic_index(double effective_age) const {
  return at_age(effective_age).systolic.position * static_cast<double>(samples);
}

double MorphologyModel::diastolic_index(double effective_age) const {
  return at_age(effective_age).diastolic.position * static_cast<double>(samples);
}

void z_score(std::span<double> x) {
  require(x.size() >= 2, "z-score needs at least two samples");
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  for (double& v : x) v -= mean;
  double ss = 0.0;
  for (double v : x) ss += v * v;
  const double sd = std::sqrt(ss / n);
  require(sd > 0.0, "cannot z-score a constant signal");
  for (double& v : x) v /= sd;
  // second pass removes the rounding residue of the first
  const double mean2 = std::accumulate(x.begin(), x.end(), 0.0) / n;
  for (double& v : x) v -= mean2;
}

std::vector<double> synth_waveform(const MorphologyParams& params, std::size_t samples, Rng& rng) {
  params.validate();
  require(samples >= 2, "waveform needs at least two samples");
  const double phase = uniform01(rng);
  std::vector<double> x(samples);
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(samples);
    double v = 0.0;
    for (const PulseShape* p : {&params.systolic, &params.diastolic}) {
      const double d = (t - p->position) / p->width;
      v += p->amplitude * std::exp(-0.5 * d * d);
    }
    if (params.drift_amplitude > 0.0) v += params.drift_amplitude * std::sin(2.0 * std::numbers::pi * (t + phase));
    if (params.noise_sigma > 0.0) v += params.noise_sigma * standard_normal(rng);
    x[k] = v;
  }
  z_score(x);
  return x;
}

std::vector<double> synth_waveform(double effective_age, const MorphologyModel& model, Rng& rng) {
  return synth_waveform(model.at_age(effective_age), model.samples, rng);
}

double measure_peak_spacing(std::span<const double> w) {
  std::vector<std::size_t> peaks;
  for (std::size_t i = 1; i + 1 < w.size(); ++i)
    if (w[i] > w[i - 1] && w[i] >= w[i + 1]) peaks.push_back(i);
  if (peaks.size() < 2) return -1.0;
  std::partial_sort(peaks.begin(), peaks.begin() + 2, peaks.end(),
                    [&](std::size_t a, std::size_t b) { return w[a] > w[b]; });
  const auto a = static_cast<double>(std::min(peaks[0], peaks[1]));
  const auto b = static_cast<double>(std::max(peaks[0], peaks[1]));
  return b - a;
}

void AgeSampler::validate() const {
  require(center_weight >= 0.0 && lower_weight >= 0.0 && center_weight + lower_weight <= 1.0,
          "age sampler weights must be probabilities");
  require(center_lo < center_hi && lower_lo < center_lo && upper_hi > center_hi, "age sampler ranges are inconsistent");
  require(center_sd > 0.0 && lower_scale > 0.0 && upper_scale > 0.0, "age sampler scales must be positive");
}

double AgeSampler::sample(Rng& rng) const {
  const double u = uniform01(rng);
  if (u < center_weight) {
    for (;;) {
      const double a = std::round(normal(rng, center_mean, center_sd));
      if (a >= center_lo && a <= center_hi) return a;
    }
  }
  if (u < center_weight + lower_weight) {
    for (;;) {
      const double a = center_lo - 1.0 - std::floor(std::abs(normal(rng, 0.0, lower_scale)));
      if (a >= lower_lo) return a;
    }
  }
  for (;;) {
    const double a = center_hi + 1.0 + std::floor(std::abs(normal(rng, 0.0, upper_scale)));
    if (a <= upper_hi) return a;
  }
}

double HazardModel::rate(double offset, double age) const {
  return baseline_rate * std::exp(log_hr_per_offset_year * offset + log_hr_per_age_year * (age - reference_age));
}

void CohortSpec::validate() const {
  require(n_subjects >= 1, "cohort needs at least one subject");
  ages.validate();
  require(offset_sigma >= 0.0, "offset sigma must be non-negative");
  require(hazard.baseline_rate > 0.0, "baseline hazard must be positive");
  require(censor_horizon > 0.0, "censoring horizon must be positive");
  require(serial_fraction >= 0.0 && serial_fraction <= 1.0, "serial fraction must be in [0, 1]");
  require(offset_drift_sigma >= 0.0 && visit_interval >= 0.0, "serial visit settings must be non-negative");
  require(morphology.samples >= 2, "waveform length must be at least 2");
}

const std::vector<std::string>& covariate_names() {
  static const std::vector<std::string> names{"sex",          "ethnicity",  "bmi",          "smoking",
                                              "hypertension", "diabetes",   "dyslipidemia", "ckd",
                                              "sbp",          "antihypertensive", "total_cholesterol", "hdl"};
  return names;
}

namespace {

std::map<std::string, double> sample_covariates(Rng& rng) {
  std::map<std::string, double> c;
  c["sex"] = bernoulli(rng, 0.45) ? 1.0 : 0.0;
  c["ethnicity"] = bernoulli(rng, 0.9) ? 1.0 : 0.0;
  c["bmi"] = normal(rng, 27.4, 4.7);
  c["smoking"] = bernoulli(rng, 0.10) ? 1.0 : 0.0;
  c["hypertension"] = bernoulli(rng, 0.25) ? 1.0 : 0.0;
  c["diabetes"] = bernoulli(rng, 0.05) ? 1.0 : 0.0;
  c["dyslipidemia"] = bernoulli(rng, 0.15) ? 1.0 : 0.0;
  c["ckd"] = bernoulli(rng, 0.02) ? 1.0 : 0.0;
  c["sbp"] = normal(rng, 138.0, 18.0);
  c["antihypertensive"] = bernoulli(rng, 0.20) ? 1.0 : 0.0;
  c["total_cholesterol"] = normal(rng, 5.7, 1.1);
  c["hdl"] = normal(rng, 1.45, 0.38);
  return c;
}

}  // namespace

std::vector<PpgRecord> sample_cohort(const CohortSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n_subjects;

  std::vector<char> serial(n, 0);
  const auto n_serial = static_cast<std::size_t>(std::llround(spec.serial_fraction * static_cast<double>(n)));
  if (n_serial > 0) {
    std::vector<std::size_t> ids(n);
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    Rng pick(derive_seed(spec.seed, "serial"));
    shuffle(ids, pick);
    for (std::size_t i = 0; i < n_serial; ++i) serial[ids[i]] = 1;
  }

  std::vector<std::vector<PpgRecord>> per_subject(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t s = 0; s < count; ++s) {
    const auto idx = static_cast<std::size_t>(s);
    Rng rng(derive_seed(derive_seed(spec.seed, "subject"), idx));
    PpgRecord first;
    first.subject_id = idx + 1;
    first.visit_index = 0;
    first.calendar_age = spec.ages.sample(rng);
    first.latent_vascular_offset = spec.offset_sigma > 0.0 ? normal(rng, 0.0, spec.offset_sigma) : 0.0;
    first.covariates = sample_covariates(rng);
    first.waveform = synth_waveform(first.effective_age(), spec.morphology, rng);

    std::vector<PpgRecord> recs{first};
    double hazard_offset = first.latent_vascular_offset;
    if (serial[idx]) {
      PpgRecord second = first;
      second.visit_index = 1;
      second.calendar_age = first.calendar_age + spec.visit_interval;
      second.latent_vascular_offset =
          first.latent_vascular_offset + (spec.offset_drift_sigma > 0.0 ? normal(rng, 0.0, spec.offset_drift_sigma) : 0.0);
      second.waveform = synth_waveform(second.effective_age(), spec.morphology, rng);
      hazard_offset = 0.5 * (first.latent_vascular_offset + second.latent_vascular_offset);
      recs.push_back(std::move(second));
    }

    const double rate = spec.hazard.rate(hazard_offset, first.calendar_age);
    double u = uniform01(rng);
    while (u <= 0.0) u = uniform01(rng);
    const double t = -std::log(u) / rate;
    for (PpgRecord& r : recs) {
      r.event_flag = t <= spec.censor_horizon ? 1 : 0;
      r.event_time = std::min(t, spec.censor_horizon);
    }
    per_subject[idx] = std::move(recs);
  }

  std::vector<PpgRecord> out;
  out.reserve(n + n_serial);
  for (auto& recs : per_subject)
    for (auto& r : recs) out.push_back(std::move(r));
  return out;
}

SplitIndices split_dataset(std::span<const PpgRecord> records, std::span<const double> ratios, std::uint64_t seed) {
  require(ratios.size() == 3, "split needs three ratios (train, selection, holdout)");
  for (double r : ratios) require(r > 0.0 && std::isfinite(r), "split ratios must be positive");

  std::vector<std::uint64_t> subjects;
  std::unordered_map<std::uint64_t, std::size_t> slot;
  for (const PpgRecord& r : records) {
    if (slot.emplace(r.subject_id, subjects.size()).second) subjects.push_back(r.subject_id);
  }
  const std::size_t n = subjects.size();
  if (n < 3) throw InvalidInput("need at least 3 subjects to split into 3 partitions, got " + std::to_string(n));

  Rng rng(derive_seed(seed, "split"));
  shuffle(subjects, rng);
  const double total = ratios[0] + ratios[1] + ratios[2];
  const double nd = static_cast<double>(n);
  auto n_sel = static_cast<std::size_t>(std::max<long long>(1, std::llround(nd * ratios[1] / total)));
  auto n_hold = static_cast<std::size_t>(std::max<long long>(1, std::llround(nd * ratios[2] / total)));
  require(n_sel + n_hold < n, "split leaves no subjects for training");

  std::unordered_map<std::uint64_t, int> part;
  for (std::size_t i = 0; i < n; ++i) part[subjects[i]] = i < n_sel ? 1 : (i < n_sel + n_hold ? 2 : 0);

  SplitIndices s;
  for (std::size_t i = 0; i < records.size(); ++i) {
    switch (part[records[i].subject_id]) {
      case 0: s.train.push_back(i); break;
      case 1: s.selection.push_back(i); break;
      default: s.holdout.push_back(i); break;
    }
  }
  return s;
}

}  // namespace ppgage
