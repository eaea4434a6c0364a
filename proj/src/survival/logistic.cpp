#include "ppgage/survival/logistic.hpp"

#include <algorithm>
#include <cmath>

#include "ppgage/error.hpp"

namespace ppgage::survival {

const WaldRow& LogisticFit::row(const std::string& name) const {
  for (const WaldRow& r : rows)
    if (r.name == name) return r;
  throw InvalidInput("no covariate named '" + name + "' in logistic fit");
}

double LogisticFit::predict(std::span<const double> x) const {
  require(static_cast<Eigen::Index>(x.size()) + 1 == coefficients.size(), "covariate row has the wrong length");
  double eta = coefficients[0];
  for (std::size_t j = 0; j < x.size(); ++j) eta += coefficients[static_cast<Eigen::Index>(j + 1)] * x[j];
  return 1.0 / (1.0 + std::exp(-eta));
}

LogisticFit logistic_fit(std::span<const int> outcome, const Eigen::MatrixXd& covariates,
                         const std::vector<std::string>& names, int max_iterations) {
  const auto n = static_cast<Eigen::Index>(outcome.size());
  require(n > 0, "logistic regression needs data");
  require(covariates.rows() == n, "covariate rows do not match outcomes");
  require(names.size() == static_cast<std::size_t>(covariates.cols()), "covariate names do not match columns");
  require(covariates.allFinite(), "covariates must be finite");
  std::size_t positives = 0;
  for (int y : outcome) {
    require(y == 0 || y == 1, "outcome must be 0 or 1");
    positives += static_cast<std::size_t>(y);
  }
  require(positives > 0 && positives < outcome.size(), "logistic regression needs both outcome classes");

  const Eigen::Index p = covariates.cols() + 1;
  Eigen::MatrixXd X(n, p);
  X.col(0).setOnes();
  X.rightCols(p - 1) = covariates;
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = outcome[static_cast<std::size_t>(i)];

  LogisticFit fit;
  fit.names.push_back("(intercept)");
  fit.names.insert(fit.names.end(), names.begin(), names.end());
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  // start the intercept at the logit of the event fraction
  const double frac = static_cast<double>(positives) / static_cast<double>(n);
  beta[0] = std::log(frac / (1.0 - frac));

  auto loglik = [&](const Eigen::VectorXd& b) {
    const Eigen::VectorXd eta = X * b;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      // log(1 + e^eta) without overflow
      const double softplus = eta[i] > 0 ? eta[i] + std::log1p(std::exp(-eta[i])) : std::log1p(std::exp(eta[i]));
      ll += y[i] * eta[i] - softplus;
    }
    return ll;
  };

  Eigen::MatrixXd info(p, p);
  double ll = loglik(beta);
  int it = 0;
  for (; it < max_iterations; ++it) {
    const Eigen::VectorXd prob = ((-(X * beta)).array().exp() + 1.0).inverse().matrix();
    const Eigen::VectorXd w = prob.array() * (1.0 - prob.array());
    const Eigen::VectorXd score = X.transpose() * (y - prob);
    info = X.transpose() * w.asDiagonal() * X;
    if (score.cwiseAbs().maxCoeff() < 1e-8) {
      fit.converged = true;
      break;
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success) throw Error(ErrorCode::collinear, "logistic information matrix is singular");
    Eigen::VectorXd step = ldlt.solve(score);
    double next_ll = loglik(beta + step);
    const double slack = 1e-12 * (1.0 + std::abs(ll));
    int halvings = 0;
    while (!(next_ll >= ll - slack) && halvings < 30) {
      step *= 0.5;
      next_ll = loglik(beta + step);
      ++halvings;
    }
    if (!(next_ll >= ll - slack)) break;
    beta += step;
    ll = next_ll;
  }

  const Eigen::VectorXd prob = ((-(X * beta)).array().exp() + 1.0).inverse().matrix();
  const Eigen::VectorXd w = prob.array() * (1.0 - prob.array());
  info = X.transpose() * w.asDiagonal() * X;
  const double p_min = prob.minCoeff(), p_max = prob.maxCoeff();
  fit.separation = !fit.converged || beta.cwiseAbs().maxCoeff() > 15.0 || p_min < 1e-10 || p_max > 1.0 - 1e-10;

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(info, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues().minCoeff() > 1e-12 * es.eigenvalues().cwiseAbs().maxCoeff())) {
    if (fit.separation) {
      fit.covariance = Eigen::MatrixXd::Constant(p, p, std::numeric_limits<double>::infinity());
    } else {
      throw Error(ErrorCode::collinear, "logistic covariates are collinear");
    }
  } else {
    fit.covariance = info.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  }
  fit.coefficients = beta;
  fit.log_likelihood = ll;
  fit.iterations = it;
  for (Eigen::Index k = 0; k < p; ++k) {
    WaldRow r;
    r.name = fit.names[static_cast<std::size_t>(k)];
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
