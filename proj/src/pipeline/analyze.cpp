#include "ppgage/pipeline/analyze.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "internal.hpp"
#include "ppgage/error.hpp"
#include "ppgage/log.hpp"
#include "ppgage/pipeline/stages.hpp"
#include "ppgage/survival/km.hpp"
#include "ppgage/survival/logistic.hpp"
#include "ppgage/survival/logrank.hpp"
#include "ppgage/survival/rcs.hpp"
#include "ppgage/survival/strata.hpp"

namespace ppgage::pipeline {

using survival::WaldRow;

const std::vector<std::string>& cox_adjustment(int model) {
  static const std::vector<std::string> m1{"age", "sex", "ethnicity", "bmi"};
  static const std::vector<std::string> m2{"age",          "sex",      "ethnicity", "bmi", "smoking",
                                           "hypertension", "diabetes", "dyslipidemia", "ckd"};
  static const std::vector<std::string> m3{"age",     "sex",      "sbp",   "antihypertensive",
                                           "smoking", "diabetes", "total_cholesterol", "hdl"};
  switch (model) {
    case 1: return m1;
    case 2: return m2;
    case 3: return m3;
  }
  throw InvalidInput(fmt::format("no Cox adjustment model {}", model));
}

const std::vector<std::string>& logistic_adjustment(int model) {
  static const std::vector<std::string> m1{"age", "sex", "ethnicity"};
  static const std::vector<std::string> m2{"age",      "sex",          "ethnicity", "smoking", "hypertension",
                                           "diabetes", "dyslipidemia", "ckd"};
  switch (model) {
    case 1: return m1;
    case 2: return m2;
  }
  throw InvalidInput(fmt::format("no logistic adjustment model {}", model));
}

namespace {

WaldRow reference_row(const std::string& level) {
  WaldRow r;
  r.name = level;
  r.p = std::numeric_limits<double>::quiet_NaN();
  r.se = std::numeric_limits<double>::quiet_NaN();
  r.z = std::numeric_limits<double>::quiet_NaN();
  return r;
}

struct GroupLayout {
  std::vector<GroupEffect> effects;    // in level order
  std::vector<std::size_t> fitted;     // indices into effects with an indicator column
  std::vector<std::size_t> keep_rows;  // subjects entering the fit
  std::vector<int> level_of;           // per subject
  std::size_t ref = 0;
  bool usable = false;
};

// Counts subjects and events per level and decides which levels get a column.
// `events_all` marks levels whose outcome never varies (logistic separation).
GroupLayout layout_groups(std::span<const int> event, std::span<const std::string> group,
                          std::span<const std::string> levels, std::string_view reference, bool flag_all_events) {
  require(event.size() == group.size(), "one group label per subject required");
  GroupLayout g;
  const auto ref_it = std::find(levels.begin(), levels.end(), reference);
  require(ref_it != levels.end(), fmt::format("reference level '{}' is not among the levels", reference));
  g.ref = static_cast<std::size_t>(ref_it - levels.begin());
  for (const auto& level : levels) g.effects.push_back({level, 0, 0, "", {}});
  g.level_of.resize(group.size());
  for (std::size_t i = 0; i < group.size(); ++i) {
    const auto it = std::find(levels.begin(), levels.end(), group[i]);
    require(it != levels.end(), fmt::format("group label '{}' is not a declared level", group[i]));
    const auto k = static_cast<std::size_t>(it - levels.begin());
    g.level_of[i] = static_cast<int>(k);
    ++g.effects[k].n;
    g.effects[k].events += event[i] ? 1 : 0;
  }
  auto degenerate = [&](const GroupEffect& e) -> const char* {
    if (e.n == 0) return "empty";
    if (e.events == 0) return "no_events";
    if (flag_all_events && e.events == e.n) return "separation";
    return nullptr;
  };
  GroupEffect& ref = g.effects[g.ref];
  ref.row = reference_row(ref.level);
  ref.status = "reference";
  const bool ref_ok = degenerate(ref) == nullptr;
  for (std::size_t k = 0; k < g.effects.size(); ++k) {
    if (k == g.ref) continue;
    GroupEffect& e = g.effects[k];
    e.row.name = e.level;
    e.row.p = e.row.se = e.row.z = e.row.coef = e.row.ratio = e.row.ci_low = e.row.ci_high =
        std::numeric_limits<double>::quiet_NaN();
    if (const char* why = degenerate(e)) {
      e.status = why;
    } else if (!ref_ok) {
      e.status = "no_reference";
    } else {
      g.fitted.push_back(k);
    }
  }
  if (!ref_ok) ref.status = std::string("reference_") + degenerate(ref);
  g.usable = ref_ok && !g.fitted.empty();
  for (std::size_t i = 0; i < group.size(); ++i) {
    const auto k = static_cast<std::size_t>(g.level_of[i]);
    if (k == g.ref || std::find(g.fitted.begin(), g.fitted.end(), k) != g.fitted.end()) g.keep_rows.push_back(i);
  }
  return g;
}

Eigen::MatrixXd group_design(const GroupLayout& g, const Eigen::MatrixXd& adjust) {
  const auto m = static_cast<Eigen::Index>(g.fitted.size());
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.keep_rows.size()), m + adjust.cols());
  for (std::size_t r = 0; r < g.keep_rows.size(); ++r) {
    const std::size_t i = g.keep_rows[r];
    const auto row = static_cast<Eigen::Index>(r);
    for (Eigen::Index j = 0; j < m; ++j)
      if (static_cast<std::size_t>(g.level_of[i]) == g.fitted[static_cast<std::size_t>(j)]) x(row, j) = 1.0;
    if (adjust.cols() > 0) x.row(row).tail(adjust.cols()) = adjust.row(static_cast<Eigen::Index>(i));
  }
  return x;
}

std::vector<std::string> group_names(const GroupLayout& g, const std::vector<std::string>& adjust_names) {
  std::vector<std::string> names;
  for (std::size_t k : g.fitted) names.push_back("group:" + g.effects[k].level);
  names.insert(names.end(), adjust_names.begin(), adjust_names.end());
  return names;
}

void mark_fitted(GroupLayout& g, const std::string& status) {
  for (std::size_t k : g.fitted) g.effects[k].status = status;
}

}  // namespace

std::vector<GroupEffect> group_hazard_ratios(std::span<const double> time, std::span<const int> event,
                                             std::span<const std::string> group,
                                             std::span<const std::string> levels, std::string_view reference,
                                             const Eigen::MatrixXd& adjust,
                                             const std::vector<std::string>& adjust_names,
                                             const survival::CoxOptions& options) {
  require(time.size() == event.size(), "time and event differ in length");
  require(static_cast<std::size_t>(adjust.rows()) == time.size() || adjust.cols() == 0,
          "adjustment matrix has the wrong number of rows");
  GroupLayout g = layout_groups(event, group, levels, reference, false);
  if (!g.usable) return g.effects;

  survival::SurvivalData data;
  for (std::size_t i : g.keep_rows) {
    data.time.push_back(time[i]);
    data.event.push_back(event[i]);
  }
  data.covariates = group_design(g, adjust.cols() > 0 ? adjust : Eigen::MatrixXd(time.size(), 0));
  data.names = group_names(g, adjust_names);
  try {
    const survival::CoxFit fit = survival::cox_fit(data, options);
    for (std::size_t j = 0; j < g.fitted.size(); ++j) {
      GroupEffect& e = g.effects[g.fitted[j]];
      e.row = fit.rows[j];
      e.row.name = e.level;
      e.status = fit.converged ? "ok" : "not_converged";
    }
  } catch (const Error& err) {
    log::warn("group Cox fit failed: {}", err.what());
    mark_fitted(g, std::string(error_code_name(err.code())));
  }
  return g.effects;
}

std::vector<GroupEffect> group_odds_ratios(std::span<const int> outcome, std::span<const std::string> group,
                                           std::span<const std::string> levels, std::string_view reference,
                                           const Eigen::MatrixXd& adjust,
                                           const std::vector<std::string>& adjust_names) {
  require(static_cast<std::size_t>(adjust.rows()) == outcome.size() || adjust.cols() == 0,
          "adjustment matrix has the wrong number of rows");
  GroupLayout g = layout_groups(outcome, group, levels, reference, true);
  if (!g.usable) return g.effects;

  std::vector<int> y;
  for (std::size_t i : g.keep_rows) y.push_back(outcome[i]);
  const Eigen::MatrixXd x = group_design(g, adjust.cols() > 0 ? adjust : Eigen::MatrixXd(outcome.size(), 0));
  try {
    const survival::LogisticFit fit = survival::logistic_fit(y, x, group_names(g, adjust_names));
    for (std::size_t j = 0; j < g.fitted.size(); ++j) {
      GroupEffect& e = g.effects[g.fitted[j]];
      e.row = fit.rows[j + 1];  // row 0 is the intercept
      e.row.name = e.level;
      e.status = fit.separation ? "separation" : (fit.converged ? "ok" : "not_converged");
    }
  } catch (const Error& err) {
    log::warn("group logistic fit failed: {}", err.what());
    mark_fitted(g, std::string(error_code_name(err.code())));
  }
  return g.effects;
}

namespace {

using detail::path_of;

struct Subject {
  std::uint64_t id = 0;
  double age = 0.0;
  double gap = 0.0;
  double time = 0.0;
  int event = 0;
  const std::map<std::string, double>* covariates = nullptr;
};

Eigen::MatrixXd covariate_matrix(const std::vector<Subject>& subjects, const std::vector<std::string>& names) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(subjects.size()), static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    for (std::size_t j = 0; j < names.size(); ++j) {
      double v;
      if (names[j] == "age") {
        v = subjects[i].age;
      } else {
        const auto it = subjects[i].covariates->find(names[j]);
        require(it != subjects[i].covariates->end(), fmt::format("subject {} lacks covariate {}", subjects[i].id, names[j]));
        v = it->second;
      }
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  return x;
}

std::vector<std::string> wald_cells(const WaldRow& r) {
  return {num(r.coef), num(r.se), num(r.ratio), num(r.ci_low), num(r.ci_high), num(r.p)};
}

std::vector<std::string> reference_cells() { return {"0", "NA", "1", "1", "1", "NA"}; }

void effect_rows(CsvWriter& out, const std::string& analysis, int model, const std::vector<GroupEffect>& effects) {
  for (const GroupEffect& e : effects) {
    std::vector<std::string> row{analysis, std::to_string(model), e.level, std::to_string(e.n), std::to_string(e.events)};
    const auto cells = e.status == "reference" ? reference_cells() : wald_cells(e.row);
    row.insert(row.end(), cells.begin(), cells.end());
    row.push_back(e.status);
    out.row(std::move(row));
  }
}

std::vector<std::string> table_header(const char* ratio) {
  return {"analysis", "model", "term", "n", "events", "coef", "se", ratio, "ci_low", "ci_high", "p", "status"};
}

std::string km_text(std::span<const double> time, std::span<const int> event) {
  CsvWriter out({"time", "at_risk", "events", "survival", "ci_low", "ci_high"});
  if (!time.empty()) {
    const survival::KmCurve km = survival::km_estimate(time, event);
    for (std::size_t i = 0; i < km.time.size(); ++i)
      out.row({num(km.time[i]), std::to_string(km.at_risk[i]), std::to_string(km.events[i]), num(km.survival[i]),
               num(km.ci_low[i]), num(km.ci_high[i])});
  }
  return out.str();
}

struct Arm {
  std::vector<double> time;
  std::vector<int> event;
};

void logrank_row(CsvWriter& out, const std::string& name, const Arm& a, const Arm& b) {
  std::vector<std::string> row{name, std::to_string(a.time.size()), std::to_string(b.time.size())};
  if (a.time.empty() || b.time.empty()) {
    row.insert(row.end(), {"nan", "nan", "nan", "nan", "nan", "empty"});
  } else {
    try {
      const auto r = survival::log_rank(a.time, a.event, b.time, b.event);
      row.insert(row.end(), {num(r.statistic), num(r.p_value), num(r.observed_a), num(r.expected_a),
                             num(r.variance), "ok"});
    } catch (const Error& e) {
      row.insert(row.end(), {"nan", "nan", "nan", "nan", "nan", std::string(error_code_name(e.code()))});
    }
  }
  out.row(std::move(row));
}

double resolve_threshold(ThresholdMode mode, std::span<const double> gaps) {
  switch (mode) {
    case ThresholdMode::years9: return 9.0;
    case ThresholdMode::years15: return 15.0;
    case ThresholdMode::sd: return survival::gap_sd_threshold(gaps);
  }
  return 9.0;
}

}  // namespace

void run_analyze(const ExperimentConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  const auto records = detail::load_cohort(config);
  const auto predictions = detail::load_predictions(config);
  std::map<std::pair<std::uint64_t, int>, const PpgRecord*> by_key;
  for (const PpgRecord& r : records) by_key[{r.subject_id, r.visit_index}] = &r;

  // Single time point analysis: first visit of every holdout and serial subject.
  std::vector<Subject> subjects;
  std::map<std::uint64_t, std::pair<double, double>> serial_gaps;  // id -> (visit 0, visit 1)
  std::map<std::uint64_t, Subject> serial_first;
  for (const auto& p : predictions) {
    if (p.role != Role::holdout && p.role != Role::serial) continue;
    const auto it = by_key.find({p.id, p.visit});
    if (it == by_key.end()) throw InvalidInput(fmt::format("prediction for unknown record {}/{}", p.id, p.visit));
    const Subject s{p.id, p.age, p.gap, p.event_time, p.event, &it->second->covariates};
    if (p.visit == 0) subjects.push_back(s);
    if (p.role == Role::serial) {
      auto& g = serial_gaps.try_emplace(p.id, std::nan(""), std::nan("")).first->second;
      (p.visit == 0 ? g.first : g.second) = p.gap;
      if (p.visit == 0) serial_first[p.id] = s;
    }
  }
  require(subjects.size() >= 2, "analysis needs at least two holdout or serial subjects");

  std::vector<double> time, gap;
  std::vector<int> event;
  for (const Subject& s : subjects) {
    time.push_back(s.time);
    event.push_back(s.event);
    gap.push_back(s.gap);
  }
  const double threshold = resolve_threshold(config.analysis.threshold, gap);
  log::info("analysis set: {} subjects, {} events, stratum threshold {:.3f} years", subjects.size(),
            std::count(event.begin(), event.end(), 1), threshold);

  const std::vector<std::string> strata_levels{"underestimation", "correct", "overestimation"};
  std::vector<std::string> stratum;
  for (double g : gap) stratum.emplace_back(survival::to_string(survival::stratify_gap(g, threshold)));

  std::vector<std::string> files;
  auto emit = [&](std::string name, std::string_view text) {
    write_text(path_of(config, name), text);
    files.push_back(std::move(name));
  };

  // Cox: continuous gap and strata, three adjustment levels.
  CsvWriter cox(table_header("hr"));
  for (int model = 1; model <= 3; ++model) {
    const auto& names = cox_adjustment(model);
    const Eigen::MatrixXd adjust = covariate_matrix(subjects, names);
    survival::SurvivalData data;
    data.time = time;
    data.event = event;
    data.covariates.resize(adjust.rows(), adjust.cols() + 1);
    data.covariates.col(0) = Eigen::Map<const Eigen::VectorXd>(gap.data(), static_cast<Eigen::Index>(gap.size()));
    data.covariates.rightCols(adjust.cols()) = adjust;
    data.names = {"gap"};
    data.names.insert(data.names.end(), names.begin(), names.end());
    std::vector<std::string> row{"continuous", std::to_string(model), "gap", std::to_string(subjects.size()),
                                 std::to_string(std::count(event.begin(), event.end(), 1))};
    try {
      const survival::CoxFit fit = survival::cox_fit(data);
      const auto cells = wald_cells(fit.row("gap"));
      row.insert(row.end(), cells.begin(), cells.end());
      row.push_back(fit.converged ? "ok" : "not_converged");
    } catch (const Error& e) {
      row.insert(row.end(), {"nan", "nan", "nan", "nan", "nan", "nan", std::string(error_code_name(e.code()))});
    }
    cox.row(std::move(row));
    effect_rows(cox, "strata", model, group_hazard_ratios(time, event, stratum, strata_levels, "correct", adjust, names));
  }
  emit(std::string(artifact::cox_table), cox.str());

  // KM and log-rank per stratum.
  std::map<std::string, Arm> arms;
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    arms[stratum[i]].time.push_back(time[i]);
    arms[stratum[i]].event.push_back(event[i]);
  }
  for (const auto& level : strata_levels) emit("km_" + level + ".csv", km_text(arms[level].time, arms[level].event));
  CsvWriter logrank({"comparison", "n_a", "n_b", "statistic", "p", "observed_a", "expected_a", "variance", "status"});
  logrank_row(logrank, "overestimation_vs_correct", arms["overestimation"], arms["correct"]);
  logrank_row(logrank, "underestimation_vs_correct", arms["underestimation"], arms["correct"]);

  // Spline curve of the continuous gap, model 1 adjustment.
  CsvWriter curve({"gap", "hr", "ci_low", "ci_high"});
  {
    const auto& names = cox_adjustment(1);
    survival::SurvivalData data;
    data.time = time;
    data.event = event;
    data.covariates = covariate_matrix(subjects, names);
    data.names = names;
    std::vector<double> grid;
    const auto& a = config.analysis;
    for (std::size_t k = 0;; ++k) {
      const double x = a.curve_min + static_cast<double>(k) * a.curve_step;
      if (x > a.curve_max + 1e-9 * a.curve_step) break;
      grid.push_back(x);
    }
    try {
      const survival::HrCurve hc = survival::hr_curve(data, gap, a.spline_knots, grid, 0.0);
      for (const auto& p : hc.points) curve.row({num(p.x), num(p.hr), num(p.ci_low), num(p.ci_high)});
    } catch (const Error& e) {
      log::warn("spline HR curve skipped: {}", e.what());
    }
  }
  emit(std::string(artifact::hr_curve), curve.str());

  // Serial analysis: G1-G3 against G4.
  {
    std::vector<double> g1, g2;
    std::vector<Subject> ss;
    for (const auto& [id, g] : serial_gaps) {
      g1.push_back(g.first);
      g2.push_back(g.second);
      ss.push_back(serial_first.count(id) ? serial_first[id] : Subject{id, 0, 0, 0, 0, nullptr});
    }
    const survival::SerialGrouping grouping = survival::serial_groups(g1, g2, threshold);
    std::vector<Subject> kept;
    std::vector<std::string> label;
    std::vector<double> st;
    std::vector<int> se;
    for (std::size_t i = 0; i < ss.size(); ++i) {
      if (!grouping.groups[i] || !ss[i].covariates) continue;
      kept.push_back(ss[i]);
      label.emplace_back(survival::to_string(*grouping.groups[i]));
      st.push_back(ss[i].time);
      se.push_back(ss[i].event);
    }
    if (grouping.excluded > 0) log::warn("{} serial subjects lack a second visit and are excluded", grouping.excluded);
    const std::vector<std::string> levels{"G1", "G2", "G3", "G4"};
    const auto& names = cox_adjustment(1);
    const Eigen::MatrixXd adjust = kept.empty() ? Eigen::MatrixXd(0, 0) : covariate_matrix(kept, names);
    CsvWriter serial(table_header("hr"));
    effect_rows(serial, "serial", 1,
                group_hazard_ratios(st, se, label, levels, "G4", adjust, kept.empty() ? std::vector<std::string>{} : names));
    emit(std::string(artifact::serial_table), serial.str());

    std::map<std::string, Arm> sarms;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      sarms[label[i]].time.push_back(st[i]);
      sarms[label[i]].event.push_back(se[i]);
    }
    for (const auto& level : levels) emit("km_" + level + ".csv", km_text(sarms[level].time, sarms[level].event));
    for (const char* level : {"G1", "G2", "G3"})
      logrank_row(logrank, std::string(level) + "_vs_G4", sarms[level], sarms["G4"]);
  }
  emit(std::string(artifact::logrank), logrank.str());

  // Logistic: event within the horizon, wider stratum threshold.
  {
    const auto& a = config.analysis;
    std::vector<int> y;
    std::vector<std::string> wide;
    for (std::size_t i = 0; i < subjects.size(); ++i) {
      y.push_back(event[i] && time[i] <= a.logistic_horizon ? 1 : 0);
      wide.emplace_back(survival::to_string(survival::stratify_gap(gap[i], a.logistic_threshold)));
    }
    CsvWriter ors(table_header("or"));
    for (int model = 1; model <= 2; ++model) {
      const auto& names = logistic_adjustment(model);
      const Eigen::MatrixXd adjust = covariate_matrix(subjects, names);
      Eigen::MatrixXd x(adjust.rows(), adjust.cols() + 1);
      x.col(0) = Eigen::Map<const Eigen::VectorXd>(gap.data(), static_cast<Eigen::Index>(gap.size()));
      x.rightCols(adjust.cols()) = adjust;
      std::vector<std::string> xn{"gap"};
      xn.insert(xn.end(), names.begin(), names.end());
      std::vector<std::string> row{"continuous", std::to_string(model), "gap", std::to_string(y.size()),
                                   std::to_string(std::count(y.begin(), y.end(), 1))};
      try {
        const survival::LogisticFit fit = survival::logistic_fit(y, x, xn);
        const auto cells = wald_cells(fit.row("gap"));
        row.insert(row.end(), cells.begin(), cells.end());
        row.push_back(fit.separation ? "separation" : (fit.converged ? "ok" : "not_converged"));
      } catch (const Error& e) {
        row.insert(row.end(), {"nan", "nan", "nan", "nan", "nan", "nan", std::string(error_code_name(e.code()))});
      }
      ors.row(std::move(row));
      effect_rows(ors, "strata", model, group_odds_ratios(y, wide, strata_levels, "correct", adjust, names));
    }
    emit(std::string(artifact::or_table), ors.str());
  }

  detail::record_stage(config, "analyze", files, started);
}

}  // namespace ppgage::pipeline
