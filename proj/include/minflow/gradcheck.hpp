#ifndef MINFLOW_GRADCHECK_HPP_
#define MINFLOW_GRADCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>

#include "minflow/autodiff.hpp"
#include "minflow/data.hpp"
#include "minflow/model.hpp"
#include "minflow/runtime.hpp"

namespace minflow {

inline constexpr double kGradcheckTolerance = 1e-5;

/// |analytic - numeric| scaled by the larger magnitude, with a floor of 1 so that
/// near-zero gradients are compared absolutely.
inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

struct CentralDifference {
  double derivative = 0.0;
  bool degenerate = false;  // x + h and x - h collapsed onto the same double
};

/// (f(x+h) - f(x-h)) divided by the step actually representable in floating point.
template <typename F>
CentralDifference central_difference(F&& f, double x, double h) {
  const double hi = x + h;
  const double lo = x - h;
  const double span = hi - lo;
  if (!(span > 0.0) || !std::isfinite(span)) return {0.0, true};
  return {(f(hi) - f(lo)) / span, false};
}

struct GradcheckReport {
  std::size_t trials = 0;
  std::size_t entries = 0;
  std::size_t degenerate = 0;
  double max_rel_error = 0.0;
  std::string worst;  // the instance that produced max_rel_error (or the first degenerate one)

  bool passed(double tolerance = kGradcheckTolerance) const {
    return degenerate == 0 && max_rel_error <= tolerance;
  }
};

/// Compares the autodiff adjoints of the classifier loss with respect to W, b and X against
/// central differences on `trials` random instances (params ~ N(0, 0.5^2), 1..8 rows of
/// N(0,1) features, fair-coin labels).
inline GradcheckReport gradcheck_classifier(std::uint64_t seed, double eps, std::size_t trials) {
  Graph g;
  const LinearModelGraph m = build_classifier_forward(g, {ZerosInit{}, ZerosInit{}});
  const std::vector<NodeId> grads = gradients(g, m.E, {m.W, m.b, m.X});
  Session session(g, seed);
  session.initialize_variables();
  NormalSampler rng(seed);

  GradcheckReport report;
  report.trials = trials;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto n = static_cast<std::size_t>(1 + std::min(7.0, std::floor(rng.uniform() * 8.0)));
    const ClassifierParams params =
        ClassifierParams::make(rng.normal(0, 0.5), rng.normal(0, 0.5), rng.normal(0, 0.5));
    std::vector<double> xs(2 * n), zs(n);
    for (double& x : xs) x = rng.standard();
    for (double& z : zs) z = rng.uniform() < 0.5 ? 1.0 : 0.0;
    const Tensor X = Tensor::matrix(n, 2, xs);
    const Tensor Z = Tensor::vector(zs);

    session.assign(m.W, params.W);
    session.assign(m.b, params.b);
    const FeedDict feeds = classifier_feeds(m, X, Z);
    const std::vector<Tensor> analytic = session.run(grads, feeds);

    auto describe = [&](const std::string& entry, double a, double num) {
      std::ostringstream os;
      os.precision(17);
      os << "trial " << t << " entry " << entry << ": analytic " << a << " numeric " << num << "\n  W = ["
         << params.W[0] << ", " << params.W[1] << "] b = [" << params.b[0] << "]\n";
      for (std::size_t i = 0; i < n; ++i) os << "  x = [" << X.at(i, 0) << ", " << X.at(i, 1) << "] z = " << Z[i] << "\n";
      return os.str();
    };
    auto record = [&](const std::string& entry, double a, const CentralDifference& cd) {
      ++report.entries;
      if (cd.degenerate) {
        if (report.degenerate++ == 0) report.worst = describe(entry + " (degenerate difference)", a, 0.0);
        return;
      }
      const double err = relative_error(a, cd.derivative);
      if (err > report.max_rel_error || std::isnan(err)) {
        report.max_rel_error = std::isnan(err) ? INFINITY : err;
        report.worst = describe(entry, a, cd.derivative);
      }
    };

    const NodeId vars[] = {m.W, m.b};
    for (std::size_t v = 0; v < 2; ++v) {
      const Tensor base = session.variable(vars[v]);
      for (std::size_t k = 0; k < base.size(); ++k) {
        auto loss_at = [&](double value) {
          session.assign(vars[v], base.with_value(k, value));
          return session.run(m.E, feeds).item();
        };
        const CentralDifference cd = central_difference(loss_at, base[k], eps);
        session.assign(vars[v], base);
        record(g.node(vars[v]).name + "[" + std::to_string(k) + "]", analytic[v][k], cd);
      }
    }
    for (std::size_t k = 0; k < X.size(); ++k) {
      auto loss_at = [&](double value) { return session.run(m.E, classifier_feeds(m, X.with_value(k, value), Z)).item(); };
      record("X[" + std::to_string(k) + "]", analytic[2][k], central_difference(loss_at, X[k], eps));
    }
  }
  return report;
}

}  // namespace minflow

#endif  // MINFLOW_GRADCHECK_HPP_
