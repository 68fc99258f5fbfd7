#include "swcs/optimize.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace swcs {

Objective::Objective(Fn fn, Eigen::Index dim)
    : fn_(std::move(fn)), dim_(dim), free_(static_cast<std::size_t>(dim), 1), calls_(std::make_shared<long>(0)) {}

Objective Objective::with_free(std::vector<char> free) const {
  if (static_cast<Eigen::Index>(free.size()) != dim_) throw std::invalid_argument("mask length != dimension");
  Objective o = *this;
  o.free_ = std::move(free);
  return o;
}

Objective Objective::only_last_free() const {
  std::vector<char> f(static_cast<std::size_t>(dim_), 0);
  if (dim_ > 0) f.back() = 1;
  return with_free(std::move(f));
}

double Objective::evaluate(const Eigen::VectorXd& theta, Eigen::VectorXd* grad) const {
  if (theta.size() != dim_) throw std::invalid_argument("parameter vector length != objective dimension");
  ++*calls_;
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dim_);
  const double f = fn_(theta, &g, free_);
  if (grad) {
    if (g.size() != dim_) throw std::logic_error("objective returned a gradient of the wrong length");
    for (Eigen::Index k = 0; k < dim_; ++k)
      if (!free_[static_cast<std::size_t>(k)]) g[k] = 0.0;
    *grad = std::move(g);
  }
  return f;
}

namespace {

struct Point {
  double alpha = 0.0;
  double f = 0.0;
  double df = 0.0;
  Eigen::VectorXd g;  // reduced (free) gradient
};

class Reduced {
 public:
  Reduced(const Objective& obj, const Eigen::VectorXd& x0) : obj_(obj), x_(x0) {
    for (Eigen::Index k = 0; k < obj.dimension(); ++k)
      if (obj.free()[static_cast<std::size_t>(k)]) idx_.push_back(k);
  }
  Eigen::Index n() const { return static_cast<Eigen::Index>(idx_.size()); }
  Eigen::VectorXd full(const Eigen::VectorXd& z) const {
    Eigen::VectorXd x = x_;
    for (Eigen::Index k = 0; k < n(); ++k) x[idx_[k]] = z[k];
    return x;
  }
  Eigen::VectorXd reduce(const Eigen::VectorXd& x) const {
    Eigen::VectorXd z(n());
    for (Eigen::Index k = 0; k < n(); ++k) z[k] = x[idx_[k]];
    return z;
  }
  double eval(const Eigen::VectorXd& z, Eigen::VectorXd& gz) const {
    Eigen::VectorXd g;
    const double f = obj_.evaluate(full(z), &g);
    gz = reduce(g);
    return f;
  }

 private:
  const Objective& obj_;
  Eigen::VectorXd x_;
  std::vector<Eigen::Index> idx_;
};

bool finite(double f, const Eigen::VectorXd& g) { return std::isfinite(f) && g.allFinite(); }

double cubic_min(const Point& a, const Point& b) {
  const double d1 = a.df + b.df - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
  const double disc = d1 * d1 - a.df * b.df;
  if (disc < 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double d2 = (b.alpha > a.alpha ? 1.0 : -1.0) * std::sqrt(disc);
  return b.alpha - (b.alpha - a.alpha) * (b.df + d2 - d1) / (b.df - a.df + 2.0 * d2);
}

enum class LsStatus { ok, decrease_only, failed, non_finite };

// Strong Wolfe line search (bracketing + zoom with safeguarded cubic interpolation).
LsStatus line_search(const Reduced& r, const Eigen::VectorXd& z, const Eigen::VectorXd& p, const Point& p0,
                     double alpha1, const BfgsOptions& opt, Point& out) {
  int evals = 0;
  auto probe = [&](double alpha, Point& pt) {
    ++evals;
    pt.alpha = alpha;
    pt.f = r.eval(z + alpha * p, pt.g);
    pt.df = pt.g.dot(p);
    return finite(pt.f, pt.g);
  };
  const double armijo = opt.c1 * p0.df;
  const double curv = -opt.c2 * p0.df;
  Point best = p0;
  auto note = [&](const Point& pt) {
    if (pt.f < best.f) best = pt;
  };

  auto zoom = [&](Point lo, Point hi) -> LsStatus {
    while (evals < opt.max_line_search) {
      const double width = hi.alpha - lo.alpha;
      double a = cubic_min(lo, hi);
      const double lo_b = std::min(lo.alpha, hi.alpha) + 0.1 * std::abs(width);
      const double hi_b = std::max(lo.alpha, hi.alpha) - 0.1 * std::abs(width);
      if (!std::isfinite(a) || a < lo_b || a > hi_b) a = lo.alpha + 0.5 * width;
      if (std::abs(width) < 1e-16 * std::max(1.0, std::abs(lo.alpha))) break;
      Point pt;
      if (!probe(a, pt)) return LsStatus::non_finite;
      note(pt);
      if (pt.f > p0.f + a * armijo || pt.f >= lo.f) {
        hi = pt;
      } else {
        if (std::abs(pt.df) <= curv) {
          out = pt;
          return LsStatus::ok;
        }
        if (pt.df * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = pt;
      }
    }
    if (best.alpha > 0.0 && best.f < p0.f) {
      out = best;
      return LsStatus::decrease_only;
    }
    return LsStatus::failed;
  };

  Point prev = p0;
  double alpha = alpha1;
  for (int i = 1; evals < opt.max_line_search; ++i) {
    Point pt;
    if (!probe(alpha, pt)) return LsStatus::non_finite;
    note(pt);
    if (pt.f > p0.f + alpha * armijo || (i > 1 && pt.f >= prev.f)) return zoom(prev, pt);
    if (std::abs(pt.df) <= curv) {
      out = pt;
      return LsStatus::ok;
    }
    if (pt.df >= 0.0) return zoom(pt, prev);
    prev = pt;
    alpha *= 2.0;
  }
  if (best.alpha > 0.0 && best.f < p0.f) {
    out = best;
    return LsStatus::decrease_only;
  }
  return LsStatus::failed;
}

double conv_measure(const Eigen::VectorXd& g, ConvergenceTest t) {
  if (g.size() == 0) return 0.0;
  return t == ConvergenceTest::gradient_two_norm ? g.norm() : g.cwiseAbs().maxCoeff();
}

}  // namespace

OptimizerReport minimize_bfgs(const Objective& obj, const Eigen::VectorXd& theta0, const BfgsOptions& opt) {
  if (!theta0.allFinite()) throw std::invalid_argument("initial parameters are not finite");
  const long calls0 = obj.calls();
  Reduced r(obj, theta0);
  OptimizerReport rep;
  Eigen::VectorXd z = r.reduce(theta0);
  Point cur;
  cur.f = r.eval(z, cur.g);
  rep.theta = theta0;
  rep.energy = cur.f;
  auto finish = [&](bool converged, const char* why) {
    rep.theta = r.full(z);
    rep.energy = cur.f;
    rep.converged = converged;
    rep.stop_reason = why;
    rep.gradient_evaluations = obj.calls() - calls0;
    rep.stage1_iterations = rep.iterations;
    rep.stage1_evaluations = rep.gradient_evaluations;
    return rep;
  };
  if (!finite(cur.f, cur.g)) return finish(false, "non-finite");
  const Eigen::Index n = r.n();
  if (n == 0) return finish(true, "no-free-parameters");

  const bool grad_test =
      opt.test == ConvergenceTest::gradient_max_norm || opt.test == ConvergenceTest::gradient_two_norm;
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);
  double f_old_old = cur.f + cur.g.norm() / 2.0;
  while (true) {
    if (grad_test && conv_measure(cur.g, opt.test) < opt.tol) return finish(true, "converged");
    if (rep.iterations >= opt.max_iterations) return finish(false, "max-iterations");
    Eigen::VectorXd p = -H * cur.g;
    double slope = p.dot(cur.g);
    if (!(slope < 0.0)) {
      H.setIdentity();
      p = -cur.g;
      slope = p.dot(cur.g);
      if (!(slope < 0.0)) return finish(false, "zero-gradient");
    }
    cur.df = slope;
    cur.alpha = 0.0;
    double alpha1 = 1.0;
    if (std::isfinite(f_old_old) && f_old_old > cur.f) alpha1 = std::min(1.0, 1.01 * 2.0 * (cur.f - f_old_old) / slope);
    if (!(alpha1 > 0.0)) alpha1 = 1.0;
    Point next;
    const LsStatus st = line_search(r, z, p, cur, alpha1, opt, next);
    if (st == LsStatus::non_finite) return finish(false, "non-finite");
    if (st == LsStatus::failed) return finish(false, "line-search-failure");
    const Eigen::VectorXd s = next.alpha * p;
    const Eigen::VectorXd y = next.g - cur.g;
    const double f_prev = cur.f;
    f_old_old = cur.f;
    z += s;
    cur.f = next.f;
    cur.g = next.g;
    ++rep.iterations;
    rep.trace.push_back({rep.iterations, cur.f, conv_measure(cur.g, opt.test), next.alpha * p.norm()});
    const double ys = y.dot(s);
    if (ys > 1e-12 * s.norm() * y.norm() && ys > 0.0) {
      const double rho = 1.0 / ys;
      const Eigen::VectorXd Hy = H * y;
      const double yHy = y.dot(Hy);
      H += (rho * rho * yHy + rho) * (s * s.transpose()) - rho * (Hy * s.transpose() + s * Hy.transpose());
    }
    if (opt.test == ConvergenceTest::energy_change && std::abs(f_prev - cur.f) < opt.tol)
      return finish(true, "converged");
    if (opt.test == ConvergenceTest::step_size && s.cwiseAbs().maxCoeff() < opt.tol) return finish(true, "converged");
  }
}

OptimizerReport optimize_bfgs2f(const Objective& obj, const Eigen::VectorXd& theta0, const BfgsOptions& opt) {
  if (obj.dimension() == 0) throw std::invalid_argument("bfgs-2f needs at least one parameter");
  return minimize_bfgs(obj.only_last_free(), theta0, opt);
}

OptimizerReport optimize_bfgs2(const Objective& obj, const Eigen::VectorXd& theta0, const BfgsOptions& opt) {
  OptimizerReport s1 = optimize_bfgs2f(obj, theta0, opt);
  if (s1.stop_reason == "non-finite") return s1;
  OptimizerReport s2 = minimize_bfgs(obj, s1.theta, opt);
  OptimizerReport rep = s2;
  rep.iterations = s1.iterations + s2.iterations;
  rep.gradient_evaluations = s1.gradient_evaluations + s2.gradient_evaluations;
  rep.stage1_iterations = s1.iterations;
  rep.stage1_evaluations = s1.gradient_evaluations;
  rep.stage2_iterations = s2.iterations;
  rep.stage2_evaluations = s2.gradient_evaluations;
  rep.trace = s1.trace;
  for (auto st : s2.trace) {
    st.iteration += s1.iterations;
    rep.trace.push_back(st);
  }
  return rep;
}

}  // namespace swcs
