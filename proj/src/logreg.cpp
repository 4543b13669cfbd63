#include <cmath>
#include <limits>

#include "nedp/error.hpp"
#include "nedp/eval.hpp"
#include "nedp/log.hpp"

namespace nedp {

namespace {

double log1p_exp(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

BinaryLogReg BinaryLogReg::fit(const Matrix& features, std::span<const int> targets, const LogRegConfig& cfg) {
  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  if (n == 0) throw ValidationError("logistic regression: no training rows");
  if (static_cast<std::size_t>(n) != targets.size()) {
    throw ValidationError("logistic regression: " + std::to_string(n) + " rows but " + std::to_string(targets.size()) +
                          " targets");
  }
  if (!(cfg.l2 >= 0.0)) throw ValidationError("logistic regression: l2 must be >= 0");
  if (!features.allFinite()) throw ValidationError("logistic regression: non-finite feature");

  BinaryLogReg model;
  model.mean_ = features.colwise().mean().transpose();
  model.inv_scale_ = Vector::Zero(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double var = (features.col(j).array() - model.mean_(j)).square().mean();
    const double sd = std::sqrt(var);
    if (sd > 1e-12 * std::max(1.0, std::abs(model.mean_(j)))) model.inv_scale_(j) = 1.0 / sd;
  }
  model.weights_ = Vector::Zero(d);

  Vector y(n);
  std::size_t positives = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int t = targets[static_cast<std::size_t>(i)];
    if (t != 0 && t != 1) throw ValidationError("logistic regression: targets must be 0 or 1");
    y(i) = t;
    positives += static_cast<std::size_t>(t);
  }
  if (positives == 0 || positives == static_cast<std::size_t>(n)) {
    warn("logistic regression: training targets contain a single class; using a constant classifier");
    model.constant_ = true;
    model.intercept_ = positives == 0 ? -std::numeric_limits<double>::infinity()
                                      : std::numeric_limits<double>::infinity();
    return model;
  }

  const Matrix z = (features.rowwise() - model.mean_.transpose()) * model.inv_scale_.asDiagonal();
  auto objective = [&](const Vector& w, double b) {
    const Vector margin = (z * w).array() + b;
    double f = 0.5 * cfg.l2 * w.squaredNorm();
    for (Eigen::Index i = 0; i < n; ++i) f += log1p_exp(margin(i)) - y(i) * margin(i);
    return f;
  };

  Vector w = Vector::Zero(d);
  const double prior = static_cast<double>(positives) / static_cast<double>(n);
  double b = std::log(prior / (1.0 - prior));
  double f = objective(w, b);
  int iter = 0;
  for (; iter < cfg.max_iterations; ++iter) {
    const Vector margin = (z * w).array() + b;
    Vector p(n), s(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      p(i) = logistic(margin(i));
      s(i) = p(i) * (1.0 - p(i));
    }
    const Vector r = p - y;
    Vector grad(d + 1);
    grad.head(d) = z.transpose() * r + cfg.l2 * w;
    grad(d) = r.sum();
    if (grad.norm() < cfg.tolerance) break;

    Matrix h(d + 1, d + 1);
    const Matrix zs = z.transpose() * s.asDiagonal();
    h.topLeftCorner(d, d) = zs * z;
    h.topLeftCorner(d, d).diagonal().array() += cfg.l2;
    h.topRightCorner(d, 1) = zs.rowwise().sum();
    h.bottomLeftCorner(1, d) = h.topRightCorner(d, 1).transpose();
    h(d, d) = s.sum();
    h.diagonal().array() += 1e-10;
    const Vector step = h.ldlt().solve(grad);

    double t = 1.0;
    bool improved = false;
    for (int k = 0; k < 40; ++k) {
      const Vector w_new = w - t * step.head(d);
      const double b_new = b - t * step(d);
      const double f_new = objective(w_new, b_new);
      if (f_new <= f - 1e-4 * t * grad.dot(step)) {
        w = w_new;
        b = b_new;
        improved = f_new < f;
        f = f_new;
        break;
      }
      t *= 0.5;
    }
    if (!improved) break;
  }
  model.weights_ = w;
  model.intercept_ = b;
  model.iterations_ = iter;
  return model;
}

double BinaryLogReg::decision(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (x.size() != mean_.size()) throw ValidationError("logistic regression: feature dimension mismatch");
  if (constant_) return intercept_;
  double z = intercept_;
  for (Eigen::Index j = 0; j < x.size(); ++j) z += weights_(j) * (x(j) - mean_(j)) * inv_scale_(j);
  return z;
}

Vector BinaryLogReg::predict_proba(const Matrix& features) const {
  Vector out(features.rows());
  for (Eigen::Index i = 0; i < features.rows(); ++i) out(i) = logistic(decision(features.row(i)));
  return out;
}

OneVsRest OneVsRest::fit(const Matrix& features, const std::vector<std::vector<int>>& labels, std::size_t class_count,
                         const LogRegConfig& cfg) {
  if (labels.size() != static_cast<std::size_t>(features.rows())) {
    throw ValidationError("one-vs-rest: label count does not match feature rows");
  }
  OneVsRest ovr;
  ovr.models_.resize(class_count);
  ovr.fitted_.assign(class_count, false);
  for (std::size_t c = 0; c < class_count; ++c) {
    std::vector<int> targets(labels.size(), 0);
    bool any = false;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      for (int l : labels[i]) {
        if (l == static_cast<int>(c)) {
          targets[i] = 1;
          any = true;
        }
      }
    }
    if (!any) continue;
    ovr.models_[c] = BinaryLogReg::fit(features, targets, cfg);
    ovr.fitted_[c] = true;
  }
  return ovr;
}

Matrix OneVsRest::predict_proba(const Matrix& features) const {
  Matrix out(features.rows(), static_cast<Eigen::Index>(models_.size()));
  for (std::size_t c = 0; c < models_.size(); ++c) {
    const auto col = static_cast<Eigen::Index>(c);
    if (fitted_[c]) {
      out.col(col) = models_[c].predict_proba(features);
    } else {
      out.col(col).setConstant(-std::numeric_limits<double>::infinity());
    }
  }
  return out;
}

}  // namespace nedp
