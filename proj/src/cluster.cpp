#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "nedp/error.hpp"
#include "nedp/eval.hpp"
#include "nedp/rng.hpp"

namespace nedp {

namespace {

struct LloydOutcome {
  std::vector<int> assignment;
  Matrix centers;
  double inertia;
};

Matrix plus_plus_seed(const Matrix& x, std::size_t k, Rng& rng) {
  const auto n = static_cast<std::size_t>(x.rows());
  Matrix centers(static_cast<Eigen::Index>(k), x.cols());
  std::vector<char> chosen(n, 0);
  std::size_t first = rng.index(n);
  centers.row(0) = x.row(static_cast<Eigen::Index>(first));
  chosen[first] = 1;
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = (x.row(static_cast<Eigen::Index>(i)) - centers.row(0)).squaredNorm();

  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = n;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        pick = i;
        target -= d2[i];
        if (target < 0.0) break;
      }
    } else {
      // Every point coincides with a center already; take any unused point.
      std::vector<std::size_t> unused;
      for (std::size_t i = 0; i < n; ++i)
        if (!chosen[i]) unused.push_back(i);
      pick = unused[rng.index(unused.size())];
    }
    chosen[pick] = 1;
    centers.row(static_cast<Eigen::Index>(c)) = x.row(static_cast<Eigen::Index>(pick));
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], (x.row(static_cast<Eigen::Index>(i)) - centers.row(static_cast<Eigen::Index>(c))).squaredNorm());
    }
  }
  return centers;
}

LloydOutcome lloyd(const Matrix& x, Matrix centers, int max_iterations) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = centers.rows();
  std::vector<int> assignment(static_cast<std::size_t>(n), -1);
  std::vector<double> dist(static_cast<std::size_t>(n), 0.0);

  auto assign = [&]() {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (Eigen::Index c = 0; c < k; ++c) {
        const double d = (x.row(i) - centers.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      changed |= assignment[static_cast<std::size_t>(i)] != best;
      assignment[static_cast<std::size_t>(i)] = best;
      dist[static_cast<std::size_t>(i)] = best_d;
    }
    return changed;
  };

  assign();
  for (int iter = 0; iter < max_iterations; ++iter) {
    Matrix sums = Matrix::Zero(k, x.cols());
    std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assignment[static_cast<std::size_t>(i)]) += x.row(i);
      ++counts[static_cast<std::size_t>(assignment[static_cast<std::size_t>(i)])];
    }
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
        continue;
      }
      // Empty cluster: restart it at the point farthest from its center.
      std::size_t far = 0;
      for (std::size_t i = 1; i < dist.size(); ++i)
        if (dist[i] > dist[far]) far = i;
      centers.row(c) = x.row(static_cast<Eigen::Index>(far));
      dist[far] = 0.0;
    }
    if (!assign()) break;
  }
  double inertia = 0.0;
  for (double d : dist) inertia += d;
  return {std::move(assignment), std::move(centers), inertia};
}

}  // namespace

KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, KMeansOptions options) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (k == 0) throw ValidationError("kmeans: k must be positive");
  if (k > n) throw ValidationError("kmeans: k = " + std::to_string(k) + " exceeds the " + std::to_string(n) + " points");
  if (!points.allFinite()) throw ValidationError("kmeans: non-finite coordinate");
  if (options.restarts < 1) throw ValidationError("kmeans: restarts must be positive");

  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < options.restarts; ++r) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
    auto outcome = lloyd(points, plus_plus_seed(points, k, rng), options.max_iterations);
    if (outcome.inertia < best.inertia) {
      best.assignment = std::move(outcome.assignment);
      best.centers = std::move(outcome.centers);
      best.inertia = outcome.inertia;
    }
  }
  return best;
}

double nmi(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw ValidationError("nmi: label sequences differ in length");
  if (a.empty()) throw ValidationError("nmi: empty label sequences");
  const double total = static_cast<double>(a.size());
  std::map<int, double> ca, cb;
  std::map<std::pair<int, int>, double> joint;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca[a[i]] += 1;
    cb[b[i]] += 1;
    joint[{a[i], b[i]}] += 1;
  }
  auto entropy = [&](const std::map<int, double>& counts) {
    double h = 0.0;
    for (const auto& [label, c] : counts) h -= c / total * std::log(c / total);
    return h;
  };
  const double ha = entropy(ca);
  const double hb = entropy(cb);
  double mi = 0.0;
  for (const auto& [key, c] : joint) mi += c / total * std::log(total * c / (ca[key.first] * cb[key.second]));
  const double denom = 0.5 * (ha + hb);
  if (denom <= 0.0) return 0.0;
  return std::clamp(mi / denom, 0.0, 1.0);
}

}  // namespace nedp
