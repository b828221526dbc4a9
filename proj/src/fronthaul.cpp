#include "fdcf/fronthaul.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace fdcf {

namespace {

double norm_pdf(double x) { return std::exp(-0.5 * x * x) * 0.3989422804014326779399461; }
double norm_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244008444); }

}  // namespace

std::pair<double, double> quantizer_moments(int bits, double step) {
  // Mid-rise quantizer: bin i on the positive axis maps to (i + 1/2) * step,
  // the outermost bin is clamped. Unit-variance Gaussian input makes every
  // bin integral an exact pdf/cdf difference.
  int half = 1 << (bits - 1);
  double a = 0.0, b = 0.0;
  for (int i = 0; i < half; ++i) {
    double lo = i * step;
    double y = (i + 0.5) * step;
    double p, m1;
    if (i == half - 1) {
      p = 1.0 - norm_cdf(lo);
      m1 = norm_pdf(lo);
    } else {
      double hi = lo + step;
      p = norm_cdf(hi) - norm_cdf(lo);
      m1 = norm_pdf(lo) - norm_pdf(hi);
    }
    a += 2.0 * y * m1;
    b += 2.0 * y * y * p;
  }
  return {a, b};
}

QuantizerParams quantizer_params(int bits) {
  if (bits < 1 || bits > 8)
    throw std::invalid_argument("quantizer_params: bits must lie in [1,8]");
  auto mse = [bits](double step) {
    auto [a, b] = quantizer_moments(bits, step);
    return 1.0 - 2.0 * a + b;
  };
  // Golden-section on the unimodal MSE; bracket covers every supported nu.
  double lo = 1e-3, hi = 4.0;
  const double invphi = 0.6180339887498948482;
  double x1 = hi - invphi * (hi - lo);
  double x2 = lo + invphi * (hi - lo);
  double f1 = mse(x1), f2 = mse(x2);
  while (hi - lo > 1e-9) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - invphi * (hi - lo);
      f1 = mse(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + invphi * (hi - lo);
      f2 = mse(x2);
    }
  }
  QuantizerParams q;
  q.bits = bits;
  q.step = 0.5 * (lo + hi);
  auto [a, b] = quantizer_moments(bits, q.step);
  q.gain = a;
  q.second_moment = b;
  return q;
}

QuantizerParams perfect_quantizer() {
  QuantizerParams q;
  q.bits = 0;
  q.gain = 1.0;
  q.second_moment = 1.0;
  q.step = 0.0;
  return q;
}

bool ServiceMap::serves_dl(int m, int k) const {
  return std::binary_search(dl_by_ap[m].begin(), dl_by_ap[m].end(), k);
}

bool ServiceMap::serves_ul(int m, int l) const {
  return std::binary_search(ul_by_ap[m].begin(), ul_by_ap[m].end(), l);
}

std::pair<int, int> max_ues_per_ap(const SystemConfig& cfg) {
  double x = cfg.c_fronthaul_bps * cfg.t_coherence_s /
             (4.0 * (cfg.tau_c - cfg.tau_t()) * cfg.quant_bits);
  int k = static_cast<int>(std::floor(x * (1.0 + 1e-12) + 1e-12));
  return {k, k};
}

double fronthaul_rate(int dl_count, int ul_count, int bits, const SystemConfig& cfg) {
  return 2.0 * bits * (dl_count + ul_count) * (cfg.tau_c - cfg.tau_t()) / cfg.t_coherence_s;
}

namespace {

// Indices 0..n-1 sorted by descending gain; ties keep ascending index order.
std::vector<int> sort_desc(const Eigen::VectorXd& gains) {
  std::vector<int> idx(gains.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return gains(a) > gains(b); });
  return idx;
}

// One direction of the selection: greedy top-K per AP, then the rescue pass
// that re-homes disconnected UEs.
void select_side(const Eigen::MatrixXd& beta, int cap,
                 std::vector<std::vector<int>>& by_ap,
                 std::vector<std::vector<int>>& by_ue, const char* side) {
  int M = static_cast<int>(beta.rows());
  int K = static_cast<int>(beta.cols());
  by_ap.assign(M, {});
  by_ue.assign(K, {});
  int take = std::min(K, cap);
  for (int m = 0; m < M; ++m) {
    auto order = sort_desc(beta.row(m).transpose());
    std::vector<int> chosen(order.begin(), order.begin() + take);
    std::sort(chosen.begin(), chosen.end());
    by_ap[m] = std::move(chosen);
    for (int k : by_ap[m]) by_ue[k].push_back(m);
  }
  for (auto& v : by_ue) std::sort(v.begin(), v.end());

  for (int k = 0; k < K; ++k) {
    if (!by_ue[k].empty()) continue;
    auto ap_order = sort_desc(beta.col(k));
    bool placed = false;
    for (int n : ap_order) {
      // Lowest-gain served UE at AP n that keeps at least one other AP.
      int evict = -1;
      double evict_gain = 0.0;
      for (int q : by_ap[n]) {
        if (static_cast<int>(by_ue[q].size()) < 2) continue;
        if (evict < 0 || beta(n, q) < evict_gain ||
            (beta(n, q) == evict_gain && q > evict)) {
          evict = q;
          evict_gain = beta(n, q);
        }
      }
      if (evict < 0) continue;  // no evictable UE here; try the next-best AP
      auto& served = by_ap[n];
      served.erase(std::find(served.begin(), served.end(), evict));
      served.insert(std::lower_bound(served.begin(), served.end(), k), k);
      auto& eaps = by_ue[evict];
      eaps.erase(std::find(eaps.begin(), eaps.end(), n));
      by_ue[k].push_back(n);
      placed = true;
      break;
    }
    if (!placed)
      throw std::runtime_error(std::string("select_aps: cannot place ") + side +
                               " UE " + std::to_string(k) +
                               "; fronthaul configuration infeasible");
  }
}

}  // namespace

ServiceMap select_aps(const Scenario& scn, const SystemConfig& cfg) {
  auto [cap_ul, cap_dl] = max_ues_per_ap(cfg);
  if ((cfg.geometry.num_dl > 0 && cap_dl < 1) || (cfg.geometry.num_ul > 0 && cap_ul < 1))
    throw std::runtime_error("select_aps: fronthaul capacity admits zero UEs per AP");
  ServiceMap map;
  select_side(scn.beta_dl, cap_dl, map.dl_by_ap, map.aps_by_dl, "downlink");
  select_side(scn.beta_ul, cap_ul, map.ul_by_ap, map.aps_by_ul, "uplink");
  return map;
}

std::string dump(const ServiceMap& map) {
  std::ostringstream os;
  auto join = [](const std::vector<int>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
      if (i) s += ",";
      s += std::to_string(v[i]);
    }
    return s;
  };
  for (int m = 0; m < map.num_aps(); ++m)
    os << "ap " << m << " dl " << join(map.dl_by_ap[m]) << " ul " << join(map.ul_by_ap[m]) << "\n";
  return os.str();
}

}  // namespace fdcf
