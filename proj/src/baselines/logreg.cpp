#include <algorithm>
#include <cmath>

#include "ecg/baselines.hpp"

namespace ecg::baselines {
namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void check_xy(const Matrix& X, std::span<const std::uint8_t> y) {
  if (X.size() != y.size() || X.empty()) {
    throw BaselineError(Errc::ShapeMismatch, "feature rows and labels must be non-empty and equal in count");
  }
  for (const auto& r : X) {
    if (r.size() != X.front().size()) throw BaselineError(Errc::ShapeMismatch, "ragged feature matrix");
  }
  const auto pos = std::count(y.begin(), y.end(), std::uint8_t{1});
  if (pos == 0 || pos == static_cast<std::ptrdiff_t>(y.size())) {
    throw BaselineError(Errc::SingleClassInput, "classifier needs both classes in the training set");
  }
}

}  // namespace

Standardizer Standardizer::fit(const Matrix& X) {
  Standardizer s;
  const std::size_t d = X.empty() ? 0 : X.front().size();
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 1.0);
  if (X.empty()) return s;
  const double n = static_cast<double>(X.size());
  for (const auto& r : X) {
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += r[j];
  }
  for (auto& m : s.mean) m /= n;
  std::vector<double> var(d, 0.0);
  for (const auto& r : X) {
    for (std::size_t j = 0; j < d; ++j) var[j] += (r[j] - s.mean[j]) * (r[j] - s.mean[j]);
  }
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(var[j] / n);
    s.scale[j] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

std::vector<double> Standardizer::apply(std::span<const double> row) const {
  if (row.size() != mean.size()) throw BaselineError(Errc::ShapeMismatch, "row width differs from the fitted scaler");
  std::vector<double> z(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) z[j] = (row[j] - mean[j]) / scale[j];
  return z;
}

double logreg_objective(std::span<const double> params, const Matrix& Z, std::span<const std::uint8_t> y, double l2,
                        std::vector<double>* grad) {
  const std::size_t d = params.size() - 1;
  const double n = static_cast<double>(Z.size());
  if (grad) grad->assign(params.size(), 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < Z.size(); ++i) {
    double z = params[d];
    for (std::size_t j = 0; j < d; ++j) z += params[j] * Z[i][j];
    loss += softplus(z) - (y[i] ? z : 0.0);
    if (grad) {
      const double r = sigmoid(z) - (y[i] ? 1.0 : 0.0);
      for (std::size_t j = 0; j < d; ++j) (*grad)[j] += r * Z[i][j];
      (*grad)[d] += r;
    }
  }
  loss /= n;
  double reg = 0.0;
  for (std::size_t j = 0; j < d; ++j) reg += params[j] * params[j];
  loss += 0.5 * l2 * reg;
  if (grad) {
    for (auto& g : *grad) g /= n;
    for (std::size_t j = 0; j < d; ++j) (*grad)[j] += l2 * params[j];
  }
  return loss;
}

LogRegModel fit_logreg(const Matrix& X, std::span<const std::uint8_t> y, const LogRegOptions& opts) {
  check_xy(X, y);
  if (!(opts.l2 >= 0.0) || !(opts.lr > 0.0)) throw BaselineError(Errc::InvalidOptions, "logreg: bad l2 or lr");
  LogRegModel m;
  m.scaler = Standardizer::fit(X);
  Matrix Z;
  Z.reserve(X.size());
  for (const auto& r : X) Z.push_back(m.scaler.apply(r));
  const std::size_t d = Z.front().size();

  // Gradient steps scaled by a diagonal curvature bound (0.25 E[z^2] + l2),
  // with Armijo backtracking so the loss never increases.
  std::vector<double> precond(d + 1);
  for (std::size_t j = 0; j < d; ++j) {
    double ez2 = 0.0;
    for (const auto& r : Z) ez2 += r[j] * r[j];
    precond[j] = 1.0 / (0.25 * ez2 / static_cast<double>(Z.size()) + opts.l2);
  }
  precond[d] = 4.0;

  std::vector<double> params(d + 1, 0.0), grad, trial(d + 1);
  double loss = logreg_objective(params, Z, y, opts.l2, &grad);
  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    double slope = 0.0;
    for (std::size_t j = 0; j <= d; ++j) slope -= precond[j] * grad[j] * grad[j];
    if (-slope < 1e-20) {
      m.loss_history.push_back(loss);
      continue;
    }
    double step = opts.lr;
    bool accepted = false;
    for (int halvings = 0; halvings < 60; ++halvings, step *= 0.5) {
      for (std::size_t j = 0; j <= d; ++j) trial[j] = params[j] - step * precond[j] * grad[j];
      const double f = logreg_objective(trial, Z, y, opts.l2, nullptr);
      if (f <= loss + 1e-4 * step * slope) {
        params = trial;
        loss = logreg_objective(params, Z, y, opts.l2, &grad);
        accepted = true;
        break;
      }
    }
    m.loss_history.push_back(loss);
    if (!accepted) {
      m.loss_history.resize(opts.epochs, loss);
      break;
    }
  }
  m.weights.assign(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(d));
  m.bias = params[d];
  return m;
}

double LogRegModel::predict_proba(std::span<const double> row) const {
  const auto z = scaler.apply(row);
  double s = bias;
  for (std::size_t j = 0; j < z.size(); ++j) s += weights[j] * z[j];
  return sigmoid(s);
}

std::vector<double> predict_logreg(const LogRegModel& m, const Matrix& X) { return predict_all(m, X); }

double log_loss(std::span<const double> probs, std::span<const std::uint8_t> y) {
  double l = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], 1e-15, 1.0 - 1e-15);
    l -= y[i] ? std::log(p) : std::log1p(-p);
  }
  return probs.empty() ? 0.0 : l / static_cast<double>(probs.size());
}

}  // namespace ecg::baselines
