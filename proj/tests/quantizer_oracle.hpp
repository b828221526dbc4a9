#pragma once

// Test-side quantizer oracle, independent of the production path: per-bin
// composite Gauss-Legendre quadrature for the Bussgang moments and a
// two-stage grid search (refined to 1e-6) for the step size.

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "fdcf/fronthaul.hpp"

namespace fdcf_test {

struct GlQuantizerOracle {
  std::vector<double> nodes, weights;  // 20-point rule on [-1, 1]
  GlQuantizerOracle() {
    const double x[10] = {0.0765265211334973, 0.2277858511416451, 0.3737060887154195,
                          0.5108670019508271, 0.6360536807265150, 0.7463319064601508,
                          0.8391169718222188, 0.9122344282513259, 0.9639719272779138,
                          0.9931285991850949};
    const double w[10] = {0.1527533871307258, 0.1491729864726037, 0.1420961093183820,
                          0.1316886384491766, 0.1181945319615184, 0.1019301198172404,
                          0.0832767415767048, 0.0626720483341091, 0.0406014298003869,
                          0.0176140071391521};
    for (int i = 9; i >= 0; --i) {
      nodes.push_back(-x[i]);
      weights.push_back(w[i]);
    }
    for (int i = 0; i < 10; ++i) {
      nodes.push_back(x[i]);
      weights.push_back(w[i]);
    }
  }

  static double phi(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  }

  template <typename F>
  double integrate(F f, double a, double b, int panels) const {
    double total = 0;
    for (int p = 0; p < panels; ++p) {
      double lo = a + (b - a) * p / panels;
      double hi = a + (b - a) * (p + 1) / panels;
      double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
      for (size_t i = 0; i < nodes.size(); ++i) {
        double x = mid + half * nodes[i];
        total += weights[i] * half * f(x) * phi(x);
      }
    }
    return total;
  }

  std::pair<double, double> moments(int bits, double step) const {
    int half = 1 << (bits - 1);
    auto level = [&](double x) {
      double idx = std::floor(std::fabs(x) / step);
      if (idx > half - 1) idx = half - 1;
      return (x < 0 ? -1.0 : 1.0) * (idx + 0.5) * step;
    };
    double a = 0, b = 0;
    for (int i = 0; i < half; ++i) {
      double lo = i * step;
      double hi = (i == half - 1) ? std::max(12.0, lo + 4.0) : lo + step;
      a += 2.0 * integrate([&](double x) { return x * level(x); }, lo, hi, 4);
      b += 2.0 * integrate([&](double x) { return level(x) * level(x); }, lo, hi, 4);
    }
    return {a, b};
  }

  fdcf::QuantizerParams optimal(int bits) const {
    auto mse = [&](double step) {
      auto [a, b] = moments(bits, step);
      return 1.0 - 2.0 * a + b;
    };
    double best = 1e18, best_step = 0;
    for (int i = 1; i <= 2000; ++i) {
      double step = 4.0 * i / 2000.0;
      double v = mse(step);
      if (v < best) {
        best = v;
        best_step = step;
      }
    }
    double lo = best_step - 4.0 / 2000.0, hi = best_step + 4.0 / 2000.0;
    while (hi - lo > 1e-6) {
      double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
      if (mse(m1) < mse(m2))
        hi = m2;
      else
        lo = m1;
    }
    fdcf::QuantizerParams q;
    q.bits = bits;
    q.step = 0.5 * (lo + hi);
    auto [a, b] = moments(bits, q.step);
    q.gain = a;
    q.second_moment = b;
    return q;
  }
};

}  // namespace fdcf_test
