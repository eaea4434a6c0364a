#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ppgage/rng.hpp"

namespace ppgage {

struct PulseShape {
  double position = 0.2;  // fraction of the window
  double amplitude = 1.0;
  double width = 0.035;   // Gaussian sd, fraction of the window
};

struct MorphologyParams {
  PulseShape systolic;
  PulseShape diastolic;
  double drift_amplitude = 0.0;
  double noise_sigma = 0.0;

  void validate() const;
};

/// Age dependence of the two-pulse waveform. Peak spacing and diastolic
/// amplitude are affine in effective age (clamped to [min_age, max_age]).
struct MorphologyModel {
  std::size_t samples = 100;
  double systolic_position = 0.20;
  double systolic_amplitude = 1.0;
  double systolic_width = 0.035;
  double reference_age = 55.0;
  double spacing_at_reference = 0.25;
  double spacing_per_year = -0.0022;
  double diastolic_amplitude_at_reference = 0.5;
  double diastolic_amplitude_per_year = -0.006;
  double diastolic_width = 0.045;
  double min_age = 21.0;
  double max_age = 111.0;
  double drift_amplitude = 0.1;
  double noise_sigma = 0.05;

  MorphologyParams at_age(double effective_age) const;
  /// Sample index nearest to each peak centre at this age.
  double systolic_index(double effective_age) const;
  double diastolic_index(double effective_age) const;
};

/// Two Gaussian pulses + sinusoidal baseline drift (random phase) + white
/// noise, then z-scored. Noise and drift off => deterministic template.
std::vector<double> synth_waveform(const MorphologyParams& params, std::size_t samples, Rng& rng);

/// Convenience: morphology at effective_age from the model.
std::vector<double> synth_waveform(double effective_age, const MorphologyModel& model, Rng& rng);

/// In-place z-score (population sd). Throws on a constant signal.
void z_score(std::span<double> x);

/// Spacing in samples between the two largest local maxima (systolic first);
/// -1 when fewer than two local maxima exist.
double measure_peak_spacing(std::span<const double> waveform);

/// Integer ages: a central block on [center_lo, center_hi] with thin tails
/// down to lower_lo and up to upper_hi.
struct AgeSampler {
  double center_weight = 0.82;
  double lower_weight = 0.09;  // upper tail weight = 1 - center - lower
  double center_mean = 59.5;
  double center_sd = 6.0;
  double center_lo = 50.0;
  double center_hi = 69.0;
  double lower_lo = 37.0;
  double lower_scale = 4.0;
  double upper_hi = 87.0;
  double upper_scale = 5.0;

  double sample(Rng& rng) const;
  void validate() const;
};

struct HazardModel {
  double baseline_rate = 0.03;          // events per year at offset 0, reference age
  double log_hr_per_offset_year = 0.05;
  double log_hr_per_age_year = 0.0;
  double reference_age = 60.0;

  double rate(double offset, double age) const;
};

struct CohortSpec {
  std::size_t n_subjects = 5000;
  AgeSampler ages;
  double offset_sigma = 5.0;  // latent vascular offset sd, years
  MorphologyModel morphology;
  HazardModel hazard;
  double censor_horizon = 10.0;  // administrative censoring, years
  double serial_fraction = 0.0;  // share of subjects with a second visit
  double visit_interval = 5.0;   // years between visits
  double offset_drift_sigma = 2.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PpgRecord {
  std::uint64_t subject_id = 0;
  int visit_index = 0;
  std::vector<double> waveform;
  double calendar_age = 0.0;
  double latent_vascular_offset = 0.0;
  double event_time = 0.0;
  int event_flag = 0;
  std::map<std::string, double> covariates;

  double effective_age() const { return calendar_age + latent_vascular_offset; }
};

/// Names of the simulated baseline covariates, in file order.
const std::vector<std::string>& covariate_names();

/// One record per subject (two for serial subjects), ordered by subject id
/// then visit. Subject streams are derived from (seed, subject id).
std::vector<PpgRecord> sample_cohort(const CohortSpec& spec);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> selection;
  std::vector<std::size_t> holdout;
};

/// Subject-level split of record indices; every visit of a subject lands in
/// the same partition.
SplitIndices split_dataset(std::span<const PpgRecord> records, std::span<const double> ratios,
                           std::uint64_t seed);

}  // namespace ppgage
