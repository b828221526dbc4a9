#include "fdcf/solver_selftest.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "fdcf/rng.hpp"

namespace fdcf {

RandomProgram random_program(std::uint64_t seed) {
  Rng rng(seed);
  RandomProgram rp;
  int n = 2 + static_cast<int>(rng.uniform() * 4);  // 2..5 variables
  bool all_affine = rng.uniform() < 0.35;
  rp.all_affine = all_affine;

  int rows = 3 + static_cast<int>(rng.uniform() * 6);
  std::vector<int> kinds(rows);
  for (int i = 0; i < rows; ++i)
    kinds[i] = all_affine ? 0 : static_cast<int>(rng.uniform() * 4);

  // Anchor variables referenced by log/soc rows need a positive start value;
  // fix the start before calibrating the affine/quadratic slacks.
  Eigen::VectorXd x0(n);
  for (int j = 0; j < n; ++j) x0(j) = rng.uniform(-0.4, 0.4);
  struct Pick {
    int kind, sq, anchor;
    double scale;
  };
  std::vector<Pick> picks(rows);
  for (int i = 0; i < rows; ++i) {
    Pick pk{kinds[i], -1, -1, 0.0};
    if (kinds[i] == 2 || kinds[i] == 3) {
      pk.sq = static_cast<int>(rng.uniform() * n);
      pk.anchor = static_cast<int>(rng.uniform() * n);
      if (n > 1 && pk.anchor == pk.sq) pk.anchor = (pk.anchor + 1) % n;
      // Anchor band and scale floor keep the start strictly feasible even
      // when the squared variable of one log row anchors another:
      // 0.7^2 < 0.8 * log2(1.6).
      x0(pk.anchor) = rng.uniform(0.6, 0.7);
      pk.scale = rng.uniform(0.8, 1.5);
    }
    picks[i] = pk;
  }

  ConvexProgram& p = rp.program;
  for (int j = 0; j < n; ++j)
    p.add_var("x" + std::to_string(j), -2.0 - rng.uniform(), 2.0 + rng.uniform());
  for (int j = 0; j < n; ++j) p.objective[j] = rng.uniform(-1.0, 1.0);

  for (int i = 0; i < rows; ++i) {
    const Pick& pk = picks[i];
    std::string label = "r" + std::to_string(i);
    if (pk.kind == 0) {
      std::vector<LinearTerm> lin;
      for (int j = 0; j < n; ++j)
        if (rng.uniform() < 0.7) lin.push_back({j, rng.uniform(-1.0, 1.0)});
      if (lin.empty()) lin.push_back({0, rng.uniform(0.2, 1.0)});
      double at_x0 = 0;
      for (const auto& t : lin) at_x0 += t.coef * x0(t.var);
      p.add_affine(std::move(lin), at_x0 + rng.uniform(0.1, 1.0), label);
    } else if (pk.kind == 1) {
      std::vector<LinearTerm> quad, lin;
      double at_x0 = 0;
      for (int j = 0; j < n; ++j) {
        if (rng.uniform() < 0.5) {
          double qc = rng.uniform(0.0, 1.0);
          quad.push_back({j, qc});
          at_x0 += qc * x0(j) * x0(j);
        }
        if (rng.uniform() < 0.5) {
          double lc = rng.uniform(-1.0, 1.0);
          lin.push_back({j, lc});
          at_x0 += lc * x0(j);
        }
      }
      if (quad.empty()) {
        quad.push_back({0, 0.5});
        at_x0 += 0.5 * x0(0) * x0(0);
      }
      p.add_quad(std::move(quad), std::move(lin), at_x0 + rng.uniform(0.1, 1.0), label);
    } else if (pk.kind == 2) {
      p.add_sq_le_log(pk.sq, pk.anchor, pk.scale, label);
    } else {
      double need = x0(pk.sq) * x0(pk.sq) + rng.uniform(0.1, 0.6);
      p.add_soc_num(pk.sq, {{pk.anchor, need / x0(pk.anchor)}}, label);
    }
  }
  rp.start = x0;
  return rp;
}

double brute_force_affine_max(const ConvexProgram& p) {
  const int n = p.num_vars();
  std::vector<Eigen::VectorXd> a;
  std::vector<double> b;
  for (const auto& c : p.constraints) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
    for (const auto& t : c.lin) row(t.var) += t.coef;
    a.push_back(row);
    b.push_back(c.rhs);
  }
  for (int j = 0; j < n; ++j) {
    if (std::isfinite(p.vars[j].lower)) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
      row(j) = -1;
      a.push_back(row);
      b.push_back(-p.vars[j].lower);
    }
    if (std::isfinite(p.vars[j].upper)) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
      row(j) = 1;
      a.push_back(row);
      b.push_back(p.vars[j].upper);
    }
  }
  const int m = static_cast<int>(a.size());
  Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(p.objective.data(), n);
  double best = -std::numeric_limits<double>::infinity();

  std::vector<int> idx(n);
  // Enumerate all n-subsets of rows; a bounded LP attains its max at a vertex.
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == n) {
      Eigen::MatrixXd A(n, n);
      Eigen::VectorXd rhs(n);
      for (int r = 0; r < n; ++r) {
        A.row(r) = a[idx[r]].transpose();
        rhs(r) = b[idx[r]];
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
      if (!lu.isInvertible()) return;
      Eigen::VectorXd x = lu.solve(rhs);
      for (int r = 0; r < m; ++r)
        if (a[r].dot(x) > b[r] + 1e-9) return;
      best = std::max(best, c.dot(x));
      return;
    }
    for (int i = start; i <= m - (n - depth); ++i) {
      idx[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

SolverSelfTest run_solver_selftest(int count, std::uint64_t seed, double kkt_tol,
                                   double affine_tol) {
  SolverSelfTest st;
  st.count = count;
  Rng root(seed);
  for (int i = 0; i < count; ++i) {
    RandomProgram rp = random_program(root.fork(i).next_u64());
    Eigen::VectorXd c =
        Eigen::Map<const Eigen::VectorXd>(rp.program.objective.data(), rp.program.num_vars());
    SolveResult res = solve(rp.program, rp.start, kkt_tol);
    double recomputed = kkt_residual(rp.program, res.point, res.multipliers);
    st.max_kkt = std::max(st.max_kkt, std::max(res.kkt_residual, recomputed));
    bool ok = res.status == SolveStatus::Optimal && res.kkt_residual <= kkt_tol &&
              recomputed <= kkt_tol * 1.01 && res.objective >= c.dot(rp.start) - 1e-9;
    if (!ok) {
      ++st.kkt_failures;
      std::ostringstream os;
      os << "program " << i << ": status " << static_cast<int>(res.status) << " kkt "
         << res.kkt_residual;
      st.messages.push_back(os.str());
    }
    if (rp.all_affine && rp.program.num_vars() <= 5) {
      ++st.affine_checked;
      double brute = brute_force_affine_max(rp.program);
      double gap = std::fabs(brute - res.objective);
      st.max_affine_gap = std::max(st.max_affine_gap, gap);
      if (gap > affine_tol) {
        ++st.affine_failures;
        std::ostringstream os;
        os << "program " << i << ": affine gap " << gap << " (brute " << brute << ", ipm "
           << res.objective << ")";
        st.messages.push_back(os.str());
      }
    }
  }
  return st;
}

}  // namespace fdcf
