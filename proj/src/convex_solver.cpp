#include "fdcf/convex_solver.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fdcf {

namespace {

constexpr double kLn2 = 0.693147180559945309417232121458;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Internal row: g(x) = sum quad x^2 + lin.x - rhs - log_scale*log2(1+x_log).
struct Row {
  std::vector<LinearTerm> lin;
  std::vector<LinearTerm> quad;
  double rhs = 0;
  int log_var = -1;
  double log_scale = 0;
  std::vector<int> support;  // sorted unique referenced variables

  void build_support() {
    support.clear();
    for (const auto& t : quad) support.push_back(t.var);
    for (const auto& t : lin) support.push_back(t.var);
    if (log_var >= 0) support.push_back(log_var);
    std::sort(support.begin(), support.end());
    support.erase(std::unique(support.begin(), support.end()), support.end());
  }

  bool in_domain(const Eigen::VectorXd& x) const {
    return log_var < 0 || x(log_var) > -1.0 + 1e-300;
  }
  double value(const Eigen::VectorXd& x) const {
    double g = -rhs;
    for (const auto& t : quad) g += t.coef * x(t.var) * x(t.var);
    for (const auto& t : lin) g += t.coef * x(t.var);
    if (log_var >= 0) g -= log_scale * std::log1p(x(log_var)) / kLn2;
    return g;
  }
  void add_grad(const Eigen::VectorXd& x, double w, Eigen::VectorXd& grad) const {
    for (const auto& t : quad) grad(t.var) += w * 2.0 * t.coef * x(t.var);
    for (const auto& t : lin) grad(t.var) += w * t.coef;
    if (log_var >= 0) grad(log_var) -= w * log_scale / ((1.0 + x(log_var)) * kLn2);
  }
  Eigen::VectorXd grad(const Eigen::VectorXd& x) const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
    add_grad(x, 1.0, g);
    return g;
  }
  // Gradient restricted to the support, aligned with `support` order.
  void local_grad(const Eigen::VectorXd& x, std::vector<double>& out) const {
    out.assign(support.size(), 0.0);
    auto at = [&](int var) {
      return std::lower_bound(support.begin(), support.end(), var) - support.begin();
    };
    for (const auto& t : quad) out[at(t.var)] += 2.0 * t.coef * x(t.var);
    for (const auto& t : lin) out[at(t.var)] += t.coef;
    if (log_var >= 0) out[at(log_var)] -= log_scale / ((1.0 + x(log_var)) * kLn2);
  }
  void add_hess(const Eigen::VectorXd& x, double w, Eigen::MatrixXd& hess) const {
    for (const auto& t : quad) hess(t.var, t.var) += w * 2.0 * t.coef;
    if (log_var >= 0) {
      double d = 1.0 + x(log_var);
      hess(log_var, log_var) += w * log_scale / (d * d * kLn2);
    }
  }
};

std::vector<Row> expand_rows(const ConvexProgram& p) {
  std::vector<Row> rows;
  rows.reserve(p.constraints.size() + 2 * p.vars.size());
  for (const auto& c : p.constraints) {
    Row r;
    r.lin = c.lin;
    r.quad = c.quad;
    r.rhs = c.rhs;
    if (c.kind == ConstraintKind::SqLeLog) {
      r.quad.push_back({c.sq_var, 1.0});
      r.log_var = c.log_var;
      r.log_scale = c.log_scale;
    } else if (c.kind == ConstraintKind::SocNum) {
      r.quad.push_back({c.sq_var, 1.0});
      for (auto& t : r.lin) t.coef = -t.coef;  // x_sq^2 - a.x <= 0
    }
    rows.push_back(std::move(r));
  }
  for (int j = 0; j < p.num_vars(); ++j) {
    if (std::isfinite(p.vars[j].lower)) {
      Row r;
      r.lin = {{j, -1.0}};
      r.rhs = -p.vars[j].lower;
      rows.push_back(std::move(r));
    }
    if (std::isfinite(p.vars[j].upper)) {
      Row r;
      r.lin = {{j, 1.0}};
      r.rhs = p.vars[j].upper;
      rows.push_back(std::move(r));
    }
  }
  for (auto& r : rows) r.build_support();
  return rows;
}

struct BarrierOutcome {
  Eigen::VectorXd x;
  Eigen::VectorXd lambda;
  bool converged = false;
  int newton_steps = 0;
};

double residual_impl(const Eigen::VectorXd& c, const std::vector<Row>& rows,
                     const Eigen::VectorXd& x, const Eigen::VectorXd& lambda);

// Minimize -c.x subject to rows g <= 0 from a strictly feasible start.
BarrierOutcome barrier_solve(const Eigen::VectorXd& c, const std::vector<Row>& rows,
                             const Eigen::VectorXd& x0, double t_final) {
  const int n = static_cast<int>(x0.size());
  const int m = static_cast<int>(rows.size());
  BarrierOutcome out;
  out.x = x0;
  out.lambda = Eigen::VectorXd::Zero(m);

  Eigen::VectorXd g(m);
  auto eval_all = [&](const Eigen::VectorXd& x, Eigen::VectorXd& gv) {
    for (int i = 0; i < m; ++i) {
      if (!rows[i].in_domain(x)) return false;
      gv(i) = rows[i].value(x);
      if (gv(i) >= 0) return false;
    }
    return true;
  };
  if (!eval_all(out.x, g)) return out;  // caller guarantees strict feasibility

  double t = 1.0;
  Eigen::VectorXd grad(n), dx(n), xt(n), gt(m);
  Eigen::MatrixXd hess(n, n);
  std::vector<double> lg;
  while (true) {
    // Centering for the current t.
    for (int it = 0; it < 240; ++it) {
      grad = -t * c;
      hess.setZero();
      for (int i = 0; i < m; ++i) {
        double inv = 1.0 / (-g(i));
        rows[i].add_hess(out.x, inv, hess);
        // Rank-one barrier term assembled on the row support only.
        rows[i].local_grad(out.x, lg);
        const auto& sup = rows[i].support;
        double inv2 = inv * inv;
        for (size_t a = 0; a < sup.size(); ++a) {
          grad(sup[a]) += inv * lg[a];
          double wa = inv2 * lg[a];
          for (size_t b = 0; b <= a; ++b) {
            hess(sup[a], sup[b]) += wa * lg[b];
            if (b != a) hess(sup[b], sup[a]) += wa * lg[b];
          }
        }
      }
      // Jacobi equilibration: constraint scales in these programs span many
      // orders of magnitude, and the raw Hessian can be too ill-conditioned
      // for a plain factorization.
      Eigen::VectorXd d(n);
      for (int j = 0; j < n; ++j)
        d(j) = 1.0 / std::sqrt(std::max(hess(j, j), 1e-300));
      Eigen::MatrixXd hs = d.asDiagonal() * hess * d.asDiagonal();
      Eigen::VectorXd gs = d.asDiagonal() * grad;
      double ridge = 0;
      Eigen::LDLT<Eigen::MatrixXd> ldlt;
      for (int attempt = 0; attempt < 8; ++attempt) {
        Eigen::MatrixXd h = hs;
        if (ridge > 0) h.diagonal().array() += ridge;
        ldlt.compute(h);
        if (ldlt.info() == Eigen::Success) {
          dx = d.asDiagonal() * ldlt.solve(-gs);
          if (dx.allFinite() && grad.dot(dx) < 0) break;
        }
        ridge = (ridge == 0) ? 1e-8 : ridge * 100;
        dx.setZero();
      }
      if (dx.isZero(0.0)) break;
      double decrement = -grad.dot(dx);
      if (decrement * 0.5 < 1e-12) break;

      // Backtracking: stay in the domain, then Armijo on the barrier value.
      double phi0 = -t * c.dot(out.x);
      for (int i = 0; i < m; ++i) phi0 -= std::log(-g(i));
      double alpha = 1.0;
      bool stepped = false;
      for (int ls = 0; ls < 60; ++ls) {
        xt = out.x + alpha * dx;
        if (eval_all(xt, gt)) {
          double phi = -t * c.dot(xt);
          for (int i = 0; i < m; ++i) phi -= std::log(-gt(i));
          if (phi <= phi0 - 0.25 * alpha * decrement) {
            out.x = xt;
            g = gt;
            stepped = true;
            break;
          }
        }
        alpha *= 0.5;
      }
      ++out.newton_steps;
      if (!stepped) break;
    }
    if (t >= t_final) break;
    t = std::min(t * 10.0, t_final);
  }
  for (int i = 0; i < m; ++i) out.lambda(i) = 1.0 / (t * (-g(i)));
  out.converged = true;
  return out;
}

// Newton refinement on the KKT equations of the guessed active set; returns
// false when the guess is unusable.
bool polish_at(const Eigen::VectorXd& c, const std::vector<Row>& rows, double threshold,
               Eigen::VectorXd& x, Eigen::VectorXd& lambda) {
  const int n = static_cast<int>(x.size());
  const int m = static_cast<int>(rows.size());
  std::vector<int> active;
  double lmax = lambda.maxCoeff();
  for (int i = 0; i < m; ++i)
    if (lambda(i) > threshold * std::max(1.0, lmax)) active.push_back(i);
  int na = static_cast<int>(active.size());
  if (na == 0) return false;

  Eigen::VectorXd xa = x;
  Eigen::VectorXd la(na);
  for (int a = 0; a < na; ++a) la(a) = lambda(active[a]);

  for (int step = 0; step < 30; ++step) {
    // Residual: stationarity (n) + active primal feasibility (na).
    Eigen::VectorXd res(n + na);
    Eigen::VectorXd stat = -c;
    for (int a = 0; a < na; ++a) rows[active[a]].add_grad(xa, la(a), stat);
    res.head(n) = stat;
    for (int a = 0; a < na; ++a) res(n + a) = rows[active[a]].value(xa);
    if (res.lpNorm<Eigen::Infinity>() < 1e-12) break;

    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n + na, n + na);
    Eigen::MatrixXd hl = Eigen::MatrixXd::Zero(n, n);
    for (int a = 0; a < na; ++a) rows[active[a]].add_hess(xa, la(a), hl);
    J.topLeftCorner(n, n) = hl;
    for (int a = 0; a < na; ++a) {
      Eigen::VectorXd gi = rows[active[a]].grad(xa);
      J.block(0, n + a, n, 1) = gi;
      J.block(n + a, 0, 1, n) = gi.transpose();
    }
    // Column/row equilibration before the QR solve; the KKT blocks carry the
    // raw constraint scales.
    Eigen::VectorXd dc(n + na), dr(n + na);
    for (int j = 0; j < n + na; ++j)
      dc(j) = 1.0 / std::max(J.col(j).lpNorm<Eigen::Infinity>(), 1e-300);
    Eigen::MatrixXd Jc = J * dc.asDiagonal();
    for (int i = 0; i < n + na; ++i)
      dr(i) = 1.0 / std::max(Jc.row(i).lpNorm<Eigen::Infinity>(), 1e-300);
    Eigen::VectorXd d =
        dc.asDiagonal() *
        (dr.asDiagonal() * Jc).colPivHouseholderQr().solve(dr.asDiagonal() * (-res));
    if (!d.allFinite()) return false;
    xa += d.head(n);
    la += d.tail(na);
  }

  // Validate: multipliers nonnegative, inactive rows still satisfied.
  for (int a = 0; a < na; ++a)
    if (la(a) < -1e-9) return false;
  for (int i = 0; i < m; ++i) {
    if (!rows[i].in_domain(xa)) return false;
    if (rows[i].value(xa) > 1e-9) return false;
  }
  x = xa;
  lambda.setZero();
  for (int a = 0; a < na; ++a) lambda(active[a]) = std::max(0.0, la(a));
  return true;
}

// The multiplier gap between active and barely-inactive rows varies by
// instance; scan a threshold ladder and keep the best validated refinement.
bool polish(const Eigen::VectorXd& c, const std::vector<Row>& rows, Eigen::VectorXd& x,
            Eigen::VectorXd& lambda) {
  double best_res = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x, best_l;
  for (double threshold : {1e-6, 1e-4, 1e-2}) {
    Eigen::VectorXd xp = x, lp = lambda;
    if (!polish_at(c, rows, threshold, xp, lp)) continue;
    double res = residual_impl(c, rows, xp, lp);
    if (res < best_res) {
      best_res = res;
      best_x = xp;
      best_l = lp;
    }
  }
  if (!std::isfinite(best_res)) return false;
  x = best_x;
  lambda = best_l;
  return true;
}

double residual_impl(const Eigen::VectorXd& c, const std::vector<Row>& rows,
                     const Eigen::VectorXd& x, const Eigen::VectorXd& lambda) {
  const int n = static_cast<int>(x.size());
  const int m = static_cast<int>(rows.size());
  double scale = std::max(1.0, c.lpNorm<Eigen::Infinity>());
  Eigen::VectorXd stat = -c;
  double feas = 0, comp = 0, dual = 0;
  for (int i = 0; i < m; ++i) {
    if (!rows[i].in_domain(x)) return kInf;
    double g = rows[i].value(x);
    rows[i].add_grad(x, lambda(i), stat);
    feas = std::max(feas, g);
    comp = std::max(comp, std::fabs(lambda(i) * g));
    dual = std::max(dual, -lambda(i));
  }
  (void)n;
  double r = stat.lpNorm<Eigen::Infinity>() / scale;
  r = std::max(r, feas);
  r = std::max(r, comp);
  r = std::max(r, dual);
  return r;
}

bool strictly_feasible(const std::vector<Row>& rows, const Eigen::VectorXd& x) {
  for (const auto& r : rows) {
    if (!r.in_domain(x)) return false;
    if (r.value(x) >= -1e-300) return false;
  }
  return true;
}

}  // namespace

int ConvexProgram::add_var(const std::string& name, double lower, double upper) {
  vars.push_back({name, lower, upper});
  if (objective.size() < vars.size()) objective.resize(vars.size(), 0.0);
  return static_cast<int>(vars.size()) - 1;
}

Constraint& ConvexProgram::add_affine(std::vector<LinearTerm> lin, double rhs, std::string label) {
  Constraint c;
  c.kind = ConstraintKind::Affine;
  c.lin = std::move(lin);
  c.rhs = rhs;
  c.label = std::move(label);
  constraints.push_back(std::move(c));
  return constraints.back();
}

Constraint& ConvexProgram::add_quad(std::vector<LinearTerm> quad, std::vector<LinearTerm> lin,
                                    double rhs, std::string label) {
  Constraint c;
  c.kind = ConstraintKind::QuadLeAffine;
  c.quad = std::move(quad);
  c.lin = std::move(lin);
  c.rhs = rhs;
  c.label = std::move(label);
  constraints.push_back(std::move(c));
  return constraints.back();
}

Constraint& ConvexProgram::add_sq_le_log(int sq_var, int log_var, double log_scale,
                                         std::string label) {
  Constraint c;
  c.kind = ConstraintKind::SqLeLog;
  c.sq_var = sq_var;
  c.log_var = log_var;
  c.log_scale = log_scale;
  c.label = std::move(label);
  constraints.push_back(std::move(c));
  return constraints.back();
}

Constraint& ConvexProgram::add_soc_num(int sq_var, std::vector<LinearTerm> lin,
                                       std::string label) {
  Constraint c;
  c.kind = ConstraintKind::SocNum;
  c.sq_var = sq_var;
  c.lin = std::move(lin);
  c.label = std::move(label);
  constraints.push_back(std::move(c));
  return constraints.back();
}

int ConvexProgram::expanded_row_count() const {
  int m = static_cast<int>(constraints.size());
  for (const auto& v : vars) {
    if (std::isfinite(v.lower)) ++m;
    if (std::isfinite(v.upper)) ++m;
  }
  return m;
}

std::vector<std::string> ConvexProgram::check() const {
  std::vector<std::string> errs;
  int n = num_vars();
  auto idx_ok = [&](int v) { return v >= 0 && v < n; };
  if (static_cast<int>(objective.size()) != n) errs.push_back("objective size mismatch");
  for (size_t ci = 0; ci < constraints.size(); ++ci) {
    const auto& c = constraints[ci];
    std::string tag = "constraint " + std::to_string(ci) + " (" + c.label + "): ";
    for (const auto& t : c.lin)
      if (!idx_ok(t.var)) errs.push_back(tag + "linear term references unknown variable");
    for (const auto& t : c.quad) {
      if (!idx_ok(t.var)) errs.push_back(tag + "quadratic term references unknown variable");
      if (t.coef < 0) errs.push_back(tag + "negative quadratic coefficient breaks convexity");
    }
    if (c.kind == ConstraintKind::SqLeLog) {
      if (!idx_ok(c.sq_var) || !idx_ok(c.log_var)) errs.push_back(tag + "bad sq/log variable");
      if (c.log_scale <= 0) errs.push_back(tag + "log scale must be positive");
    }
    if (c.kind == ConstraintKind::SocNum) {
      if (!idx_ok(c.sq_var)) errs.push_back(tag + "bad sq variable");
      for (const auto& t : c.lin)
        if (t.coef < 0) errs.push_back(tag + "SocNum needs nonnegative linear coefficients");
    }
  }
  return errs;
}

SolveResult solve(const ConvexProgram& p, const Eigen::VectorXd& start, double tol) {
  auto errs = p.check();
  if (!errs.empty()) throw std::invalid_argument("solve: " + errs.front());
  if (start.size() != p.num_vars())
    throw std::invalid_argument("solve: start has wrong dimension");

  Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(p.objective.data(), p.num_vars());
  std::vector<Row> rows = expand_rows(p);
  const int m = static_cast<int>(rows.size());

  SolveResult res;
  res.point = start;
  res.multipliers = Eigen::VectorXd::Zero(m);

  Eigen::VectorXd x0 = start;
  if (!strictly_feasible(rows, x0)) {
    // Phase-I: relax every row by a shared slack and drive it negative.
    for (const auto& r : rows)
      if (!r.in_domain(x0)) {
        res.status = SolveStatus::Infeasible;
        return res;
      }
    const int n = p.num_vars();
    std::vector<Row> prows = rows;
    for (auto& r : prows) r.lin.push_back({n, -1.0});
    Row sbound;  // s >= -1 keeps the relaxed program bounded
    sbound.lin = {{n, -1.0}};
    sbound.rhs = 1.0;
    prows.push_back(sbound);
    for (auto& r : prows) r.build_support();
    double worst = -kInf;
    for (const auto& r : rows) worst = std::max(worst, r.value(x0));
    Eigen::VectorXd px0(n + 1);
    px0.head(n) = x0;
    px0(n) = std::fabs(worst) * 1.5 + 1.0;
    Eigen::VectorXd pc = Eigen::VectorXd::Zero(n + 1);
    pc(n) = -1.0;  // maximize -s
    BarrierOutcome ph = barrier_solve(pc, prows, px0, 1e9);
    if (!ph.converged || ph.x(n) >= -1e-9) {
      res.status = SolveStatus::Infeasible;
      return res;
    }
    x0 = ph.x.head(n);
    if (!strictly_feasible(rows, x0)) {
      res.status = SolveStatus::Infeasible;
      return res;
    }
  }

  // Final barrier parameter set so the centering complementarity m/t sits
  // well under tol before polish.
  double t_final = std::max(1e8, 10.0 * m / tol);
  BarrierOutcome b = barrier_solve(c, rows, x0, t_final);
  res.newton_steps = b.newton_steps;
  if (!b.converged) {
    res.status = SolveStatus::Infeasible;
    return res;
  }
  res.point = b.x;
  res.multipliers = b.lambda;

  Eigen::VectorXd xp = b.x, lp = b.lambda;
  if (polish(c, rows, xp, lp)) {
    double before = residual_impl(c, rows, b.x, b.lambda);
    double after = residual_impl(c, rows, xp, lp);
    if (after <= before && c.dot(xp) >= c.dot(b.x) - 1e-9) {
      res.point = xp;
      res.multipliers = lp;
    }
  }
  res.objective = c.dot(res.point);
  res.kkt_residual = residual_impl(c, rows, res.point, res.multipliers);
  res.status = (res.kkt_residual <= tol) ? SolveStatus::Optimal : SolveStatus::MaxIter;
  return res;
}

double kkt_residual(const ConvexProgram& p, const Eigen::VectorXd& point,
                    const Eigen::VectorXd& multipliers) {
  std::vector<Row> rows = expand_rows(p);
  if (multipliers.size() != static_cast<int>(rows.size()))
    throw std::invalid_argument("kkt_residual: multiplier vector has wrong length");
  if (point.size() != p.num_vars())
    throw std::invalid_argument("kkt_residual: point has wrong dimension");
  Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(p.objective.data(), p.num_vars());
  return residual_impl(c, rows, point, multipliers);
}

std::string dump(const ConvexProgram& p) {
  std::ostringstream os;
  auto var_name = [&](int v) {
    return p.vars[v].name.empty() ? "x" + std::to_string(v) : p.vars[v].name;
  };
  os << "maximize";
  for (int j = 0; j < p.num_vars(); ++j)
    if (p.objective[j] != 0) os << " + " << p.objective[j] << "*" << var_name(j);
  os << "\n";
  for (const auto& c : p.constraints) {
    os << "  [" << c.label << "] ";
    switch (c.kind) {
      case ConstraintKind::Affine:
      case ConstraintKind::QuadLeAffine:
        for (const auto& t : c.quad) os << " + " << t.coef << "*" << var_name(t.var) << "^2";
        for (const auto& t : c.lin) os << " + " << t.coef << "*" << var_name(t.var);
        os << " <= " << c.rhs;
        break;
      case ConstraintKind::SqLeLog:
        os << var_name(c.sq_var) << "^2 <= " << c.log_scale << "*log2(1 + "
           << var_name(c.log_var) << ")";
        break;
      case ConstraintKind::SocNum:
        os << var_name(c.sq_var) << "^2 <=";
        for (const auto& t : c.lin) os << " + " << t.coef << "*" << var_name(t.var);
        break;
    }
    os << "\n";
  }
  for (int j = 0; j < p.num_vars(); ++j) {
    if (std::isfinite(p.vars[j].lower) || std::isfinite(p.vars[j].upper))
      os << "  " << p.vars[j].lower << " <= " << var_name(j) << " <= " << p.vars[j].upper << "\n";
  }
  return os.str();
}

}  // namespace fdcf
