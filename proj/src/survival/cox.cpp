#include "ppgage/survival/cox.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ppgage/error.hpp"

namespace ppgage::survival {

const WaldRow& CoxFit::row(const std::string& name) const {
  for (const WaldRow& r : rows)
    if (r.name == name) return r;
  throw InvalidInput("no covariate named '" + name + "' in Cox fit");
}

CoxDerivatives cox_derivatives(const SurvivalData& data, const Eigen::VectorXd& beta, TieMethod ties) {
  const auto n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index p = data.covariates.cols();
  // Centering leaves beta unchanged and keeps exp(eta) in range.
  const Eigen::RowVectorXd mean = data.covariates.colwise().mean();
  const Eigen::MatrixXd X = data.covariates.rowwise() - mean;
  const Eigen::VectorXd eta = X * beta;
  const Eigen::VectorXd risk = eta.array().exp();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return data.time[static_cast<std::size_t>(a)] > data.time[static_cast<std::size_t>(b)];
  });

  CoxDerivatives d;
  d.score = Eigen::VectorXd::Zero(p);
  d.information = Eigen::MatrixXd::Zero(p, p);
  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);

  std::size_t i = 0;
  const auto N = static_cast<std::size_t>(n);
  while (i < N) {
    const double t = data.time[static_cast<std::size_t>(order[i])];
    std::size_t j = i;
    double d0 = 0.0;
    Eigen::VectorXd d1 = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(p, p);
    int deaths = 0;
    // everyone tied at t joins the risk set before the deaths are scored
    for (; j < N && data.time[static_cast<std::size_t>(order[j])] == t; ++j) {
      const Eigen::Index k = order[j];
      const double r = risk[k];
      const auto x = X.row(k).transpose();
      s0 += r;
      s1.noalias() += r * x;
      s2.noalias() += r * x * x.transpose();
      if (data.event[static_cast<std::size_t>(k)] == 1) {
        ++deaths;
        d0 += r;
        d1.noalias() += r * x;
        d2.noalias() += r * x * x.transpose();
        d.log_likelihood += eta[k];
        d.score.noalias() += x;
      }
    }
    for (int l = 0; l < deaths; ++l) {
      const double frac = ties == TieMethod::efron ? static_cast<double>(l) / deaths : 0.0;
      const double phi = s0 - frac * d0;
      const Eigen::VectorXd a = (s1 - frac * d1) / phi;
      d.log_likelihood -= std::log(phi);
      d.score -= a;
      d.information.noalias() += (s2 - frac * d2) / phi - a * a.transpose();
    }
    i = j;
  }
  return d;
}

namespace {

void check_rank(const Eigen::MatrixXd& info, const std::vector<std::string>& names) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(info, Eigen::EigenvaluesOnly);
  const double max_ev = es.eigenvalues().cwiseAbs().maxCoeff();
  const double min_ev = es.eigenvalues().minCoeff();
  if (!(max_ev > 0.0) || min_ev <= 1e-10 * max_ev) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw Error(ErrorCode::collinear, "singular information matrix: covariates [" + list +
                                          "] are collinear or constant among risk sets");
  }
}

}  // namespace

CoxFit cox_fit(const SurvivalData& data, const CoxOptions& options) {
  data.validate();
  const Eigen::Index p = data.covariates.cols();
  require(p >= 1, "Cox model needs at least one covariate");
  const std::size_t events = static_cast<std::size_t>(std::count(data.event.begin(), data.event.end(), 1));
  if (events == 0) throw Error(ErrorCode::no_events, "Cox model: no events in the data");

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  CoxDerivatives cur = cox_derivatives(data, beta, options.ties);
  check_rank(cur.information, data.names);

  CoxFit fit;
  fit.names = data.names;
  fit.n = data.size();
  fit.n_events = events;
  fit.log_likelihood_null = cur.log_likelihood;

  int it = 0;
  for (; it < options.max_iterations; ++it) {
    if (cur.score.cwiseAbs().maxCoeff() < options.score_tolerance) {
      fit.converged = true;
      break;
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(cur.information);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) check_rank(cur.information, data.names);
    Eigen::VectorXd step = ldlt.solve(cur.score);
    CoxDerivatives next = cox_derivatives(data, beta + step, options.ties);
    // Near the optimum the gain is below rounding noise; tolerate that much.
    const double slack = 1e-12 * (1.0 + std::abs(cur.log_likelihood));
    int halvings = 0;
    while (!(next.log_likelihood >= cur.log_likelihood - slack) && halvings < 30) {
      step *= 0.5;
      next = cox_derivatives(data, beta + step, options.ties);
      ++halvings;
    }
    if (!(next.log_likelihood >= cur.log_likelihood - slack)) break;  // no ascent direction left
    beta += step;
    cur = std::move(next);
  }
  if (!fit.converged && cur.score.cwiseAbs().maxCoeff() < options.score_tolerance) fit.converged = true;

  fit.iterations = it;
  fit.coefficients = beta;
  fit.log_likelihood = cur.log_likelihood;
  fit.score = cur.score;
  check_rank(cur.information, data.names);
  fit.covariance = cur.information.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  fit.covariance = 0.5 * (fit.covariance + fit.covariance.transpose());

  for (Eigen::Index k = 0; k < p; ++k) {
    WaldRow r;
    r.name = data.names[static_cast<std::size_t>(k)];
    r.coef = beta[k];
    r.se = std::sqrt(fit.covariance(k, k));
    r.z = r.coef / r.se;
    r.p = normal_two_sided_p(r.z);
    r.ratio = std::exp(r.coef);
    r.ci_low = std::exp(r.coef - z975 * r.se);
    r.ci_high = std::exp(r.coef + z975 * r.se);
    fit.rows.push_back(r);
  }
  return fit;
}

}  // namespace ppgage::survival
