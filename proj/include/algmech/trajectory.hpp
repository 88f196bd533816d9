#pragma once

#include <Eigen/Dense>
#include <vector>

#include "algmech/errors.hpp"

namespace algmech {

/// Instantaneous state: base point x, fiber velocity y, multipliers mu
/// (empty unless the mode carries them).
struct SystemState {
  double t = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd mu;
};

struct SampleDiagnostics {
  double constraint_residual = 0.0;
  double condition_estimate = 0.0;
  double delta_l_residual = 0.0;
};

/// Uniformly sampled curve in E (optionally with multipliers) plus
/// per-sample solver diagnostics.
struct Trajectory {
  double t0 = 0.0;
  double h = 0.0;
  std::vector<SystemState> states;
  std::vector<SampleDiagnostics> diagnostics;

  int size() const { return static_cast<int>(states.size()); }
  double time_at(int i) const { return t0 + i * h; }

  Eigen::MatrixXd xs() const {
    if (states.empty()) return {};
    Eigen::MatrixXd m(size(), states[0].x.size());
    for (int i = 0; i < size(); ++i) m.row(i) = states[i].x;
    return m;
  }
  Eigen::MatrixXd ys() const {
    if (states.empty()) return {};
    Eigen::MatrixXd m(size(), states[0].y.size());
    for (int i = 0; i < size(); ++i) m.row(i) = states[i].y;
    return m;
  }
  Eigen::MatrixXd mus() const {
    if (states.empty()) return {};
    Eigen::MatrixXd m(size(), states[0].mu.size());
    for (int i = 0; i < size(); ++i) m.row(i) = states[i].mu;
    return m;
  }
};

/// Row-wise d/dt of uniformly sampled data: central differences inside,
/// second-order one-sided at the ends. Needs >= 3 rows.
inline Eigen::MatrixXd time_derivative(const Eigen::MatrixXd& samples, double h) {
  const auto rows = samples.rows();
  if (rows < 3) throw TooFewSamples("time_derivative: need at least 3 samples");
  Eigen::MatrixXd d(rows, samples.cols());
  d.row(0) = (-3.0 * samples.row(0) + 4.0 * samples.row(1) - samples.row(2)) / (2.0 * h);
  for (Eigen::Index i = 1; i + 1 < rows; ++i)
    d.row(i) = (samples.row(i + 1) - samples.row(i - 1)) / (2.0 * h);
  d.row(rows - 1) = (3.0 * samples.row(rows - 1) - 4.0 * samples.row(rows - 2) +
                     samples.row(rows - 3)) /
                    (2.0 * h);
  return d;
}

/// Composite Simpson quadrature on a uniform grid; when the interval count is
/// odd the last interval falls back to the trapezoid rule.
inline double quadrature(const Eigen::VectorXd& values, double h) {
  const auto n = values.size();
  if (n < 2) throw TooFewSamples("quadrature: need at least 2 samples");
  if (n == 2) return 0.5 * h * (values(0) + values(1));
  Eigen::Index last = n - 1;
  double tail = 0.0;
  if ((n - 1) % 2 != 0) {  // odd interval count
    tail = 0.5 * h * (values(last - 1) + values(last));
    last -= 1;
  }
  double sum = values(0) + values(last);
  for (Eigen::Index i = 1; i < last; ++i) sum += (i % 2 == 1 ? 4.0 : 2.0) * values(i);
  return h / 3.0 * sum + tail;
}

}  // namespace algmech
