#include "mirror_bounds/lp.hpp"

#include <cmath>
#include <limits>

namespace mirror_bounds {

std::string to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration-limit";
  }
  return "?";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTol = 1e-9;

enum class VarState : unsigned char { Basic, Lower, Upper, Zero };

class Simplex {
 public:
  Simplex(const LpProblem& p, const LpOptions& o) : opt_(o) {
    n_ = p.c.size();
    m_in_ = p.A_ineq.rows();
    m_eq_ = p.A_eq.rows();
    m_ = m_in_ + m_eq_;
    if ((m_in_ > 0 && p.A_ineq.cols() != n_) || (m_eq_ > 0 && p.A_eq.cols() != n_) || p.b_ineq.size() != m_in_ ||
        p.b_eq.size() != m_eq_)
      throw ContractViolation("lp: inconsistent dimensions");
    n_struct_ = n_ + m_in_;
    total_ = n_struct_ + m_;
    A_ = Matrix::Zero(m_, n_struct_);
    if (m_in_ > 0) A_.topLeftCorner(m_in_, n_) = p.A_ineq;
    if (m_eq_ > 0) A_.bottomLeftCorner(m_eq_, n_) = p.A_eq;
    A_.block(0, n_, m_in_, m_in_).setIdentity();
    b_.resize(m_);
    b_.head(m_in_) = p.b_ineq;
    b_.tail(m_eq_) = p.b_eq;
    c_ = Vector::Zero(total_);
    c_.head(n_) = p.c;
    lo_ = Vector::Constant(total_, 0.0);
    hi_ = Vector::Constant(total_, kInf);
    if (p.lower.size() == n_) lo_.head(n_) = p.lower;
    else lo_.head(n_).setConstant(-kInf);
    if (p.upper.size() == n_) hi_.head(n_) = p.upper;
    else hi_.head(n_).setConstant(kInf);
    for (Index j = 0; j < n_; ++j)
      if (lo_(j) > hi_(j)) bound_conflict_ = true;
    start_at_upper_ = p.start_at_upper;
    sigma_ = Vector::Ones(m_);
  }

  LpSolution solve() {
    LpSolution sol;
    if (bound_conflict_) {
      sol.status = LpStatus::Infeasible;
      return sol;
    }
    x_ = Vector::Zero(total_);
    state_.assign(static_cast<std::size_t>(total_), VarState::Lower);
    for (Index j = 0; j < n_struct_; ++j) {
      const bool want_upper = j < n_ && static_cast<std::size_t>(j) < start_at_upper_.size() &&
                              start_at_upper_[static_cast<std::size_t>(j)] && std::isfinite(hi_(j));
      if (want_upper || (!std::isfinite(lo_(j)) && std::isfinite(hi_(j)))) {
        x_(j) = hi_(j);
        state_[static_cast<std::size_t>(j)] = VarState::Upper;
      } else if (std::isfinite(lo_(j))) {
        x_(j) = lo_(j);
      } else {
        x_(j) = 0;
        state_[static_cast<std::size_t>(j)] = VarState::Zero;
      }
    }
    const Vector r = b_ - A_ * x_.head(n_struct_);
    head_.assign(static_cast<std::size_t>(m_), 0);
    Vector phase1 = Vector::Zero(total_);
    bool need_phase1 = false;
    for (Index i = 0; i < m_; ++i) {
      const Index art = n_struct_ + i;
      if (i < m_in_ && r(i) >= 0 && state_[static_cast<std::size_t>(n_ + i)] != VarState::Basic) {
        head_[static_cast<std::size_t>(i)] = n_ + i;
        state_[static_cast<std::size_t>(n_ + i)] = VarState::Basic;
        x_(n_ + i) = r(i);
        hi_(art) = 0;
      } else {
        sigma_(i) = r(i) >= 0 ? 1.0 : -1.0;
        head_[static_cast<std::size_t>(i)] = art;
        state_[static_cast<std::size_t>(art)] = VarState::Basic;
        x_(art) = std::abs(r(i));
        phase1(art) = 1.0;
        need_phase1 = true;
      }
    }
    refactor();
    long iterations = 0;
    if (need_phase1) {
      const LpStatus s1 = run(phase1, iterations);
      if (s1 == LpStatus::IterationLimit) {
        sol.status = s1;
        sol.iterations = iterations;
        return sol;
      }
      double infeas = 0;
      for (Index i = 0; i < m_; ++i) infeas += x_(n_struct_ + i);
      const double scale = 1.0 + (m_ > 0 ? b_.lpNorm<Eigen::Infinity>() : 0.0);
      if (infeas > opt_.feasibility_tol * scale) {
        sol.status = LpStatus::Infeasible;
        sol.iterations = iterations;
        return sol;
      }
    }
    for (Index i = 0; i < m_; ++i) {
      hi_(n_struct_ + i) = 0;
      lo_(n_struct_ + i) = 0;
    }
    const LpStatus s2 = run(c_, iterations);
    sol.status = s2;
    sol.iterations = iterations;
    if (s2 != LpStatus::Optimal) return sol;
    finish(sol);
    return sol;
  }

 private:
  double column_dot(Index j, const Vector& v) const {
    if (j < n_struct_) return A_.col(j).dot(v);
    const Index i = j - n_struct_;
    return sigma_(i) * v(i);
  }

  Vector column(Index j) const {
    if (j < n_struct_) return A_.col(j);
    Vector e = Vector::Zero(m_);
    e(j - n_struct_) = sigma_(j - n_struct_);
    return e;
  }

  void refactor() {
    pivots_ = 0;
    if (m_ == 0) return;
    Matrix B(m_, m_);
    for (Index i = 0; i < m_; ++i) B.col(i) = column(head_[static_cast<std::size_t>(i)]);
    Eigen::FullPivLU<Matrix> lu(B);
    if (!lu.isInvertible()) throw NumericalError("lp: singular basis");
    Binv_ = lu.inverse();
    Vector rhs = b_;
    for (Index j = 0; j < total_; ++j) {
      if (state_[static_cast<std::size_t>(j)] == VarState::Basic || x_(j) == 0.0) continue;
      if (j < n_struct_) rhs -= A_.col(j) * x_(j);
      else rhs(j - n_struct_) -= sigma_(j - n_struct_) * x_(j);
    }
    const Vector xb = Binv_ * rhs;
    for (Index i = 0; i < m_; ++i) x_(head_[static_cast<std::size_t>(i)]) = xb(i);
  }

  Vector reduced_costs(const Vector& cost, const Vector& pi) const {
    Vector d(total_);
    if (m_ > 0) d.head(n_struct_) = cost.head(n_struct_) - A_.transpose() * pi;
    else d.head(n_struct_) = cost.head(n_struct_);
    for (Index i = 0; i < m_; ++i) d(n_struct_ + i) = cost(n_struct_ + i) - sigma_(i) * pi(i);
    return d;
  }

  Vector duals(const Vector& cost) const {
    if (m_ == 0) return Vector();
    Vector cb(m_);
    for (Index i = 0; i < m_; ++i) cb(i) = cost(head_[static_cast<std::size_t>(i)]);
    return Binv_.transpose() * cb;
  }

  LpStatus run(const Vector& cost, long& iterations) {
    const double tol = opt_.optimality_tol * std::max(1.0, cost.lpNorm<Eigen::Infinity>());
    int degenerate_run = 0;
    bool bland = false;
    while (true) {
      if (iterations >= opt_.max_iterations) return LpStatus::IterationLimit;
      if (pivots_ >= opt_.refactor_every) refactor();
      const Vector pi = m_ > 0 ? duals(cost) : Vector();
      const Vector d = reduced_costs(cost, pi);
      Index enter = -1;
      double enter_dir = 0;
      double best = 0;
      for (Index j = 0; j < total_; ++j) {
        const VarState s = state_[static_cast<std::size_t>(j)];
        if (s == VarState::Basic || lo_(j) == hi_(j)) continue;
        double dir = 0;
        if (s == VarState::Lower && d(j) < -tol) dir = 1;
        else if (s == VarState::Upper && d(j) > tol) dir = -1;
        else if (s == VarState::Zero && std::abs(d(j)) > tol) dir = d(j) < 0 ? 1 : -1;
        if (dir == 0) continue;
        if (bland) {
          enter = j;
          enter_dir = dir;
          break;
        }
        if (std::abs(d(j)) > best) {
          best = std::abs(d(j));
          enter = j;
          enter_dir = dir;
        }
      }
      if (enter < 0) {
        if (pivots_ > 0) {
          // Confirm on a fresh factorization before declaring optimality.
          refactor();
          const Vector pi2 = m_ > 0 ? duals(cost) : Vector();
          const Vector d2 = reduced_costs(cost, pi2);
          bool still = true;
          for (Index j = 0; j < total_ && still; ++j) {
            const VarState s = state_[static_cast<std::size_t>(j)];
            if (s == VarState::Basic || lo_(j) == hi_(j)) continue;
            if ((s == VarState::Lower && d2(j) < -tol) || (s == VarState::Upper && d2(j) > tol) ||
                (s == VarState::Zero && std::abs(d2(j)) > tol))
              still = false;
          }
          if (!still) continue;
        }
        return LpStatus::Optimal;
      }
      ++iterations;
      const Vector w = m_ > 0 ? Vector(Binv_ * column(enter)) : Vector();
      double theta = kInf;
      Index leave_row = -1;
      bool leave_to_upper = false;
      double leave_mag = 0;
      for (Index i = 0; i < m_; ++i) {
        const double rate = -enter_dir * w(i);
        if (std::abs(rate) <= kPivotTol) continue;
        const Index k = head_[static_cast<std::size_t>(i)];
        double limit;
        bool to_upper;
        if (rate < 0) {
          if (!std::isfinite(lo_(k))) continue;
          limit = std::max(0.0, (x_(k) - lo_(k)) / -rate);
          to_upper = false;
        } else {
          if (!std::isfinite(hi_(k))) continue;
          limit = std::max(0.0, (hi_(k) - x_(k)) / rate);
          to_upper = true;
        }
        bool take = false;
        if (limit < theta - 1e-12) {
          take = true;
        } else if (limit <= theta + 1e-12 && leave_row >= 0) {
          if (bland) take = k < head_[static_cast<std::size_t>(leave_row)];
          else take = std::abs(rate) > leave_mag;
        }
        if (take) {
          theta = std::min(limit, theta);
          leave_row = i;
          leave_to_upper = to_upper;
          leave_mag = std::abs(rate);
        }
      }
      const double flip = hi_(enter) - lo_(enter);
      if (std::isfinite(flip) && flip <= theta) {
        x_(enter) += enter_dir * flip;
        for (Index i = 0; i < m_; ++i) x_(head_[static_cast<std::size_t>(i)]) -= enter_dir * flip * w(i);
        state_[static_cast<std::size_t>(enter)] = enter_dir > 0 ? VarState::Upper : VarState::Lower;
        x_(enter) = enter_dir > 0 ? hi_(enter) : lo_(enter);
        degenerate_run = 0;
        bland = false;
        continue;
      }
      if (!std::isfinite(theta)) return LpStatus::Unbounded;
      x_(enter) += enter_dir * theta;
      for (Index i = 0; i < m_; ++i) x_(head_[static_cast<std::size_t>(i)]) -= enter_dir * theta * w(i);
      const Index leaving = head_[static_cast<std::size_t>(leave_row)];
      x_(leaving) = leave_to_upper ? hi_(leaving) : lo_(leaving);
      state_[static_cast<std::size_t>(leaving)] = leave_to_upper ? VarState::Upper : VarState::Lower;
      state_[static_cast<std::size_t>(enter)] = VarState::Basic;
      head_[static_cast<std::size_t>(leave_row)] = enter;
      const double pivot = w(leave_row);
      Binv_.row(leave_row) /= pivot;
      for (Index i = 0; i < m_; ++i) {
        if (i == leave_row || w(i) == 0.0) continue;
        Binv_.row(i) -= w(i) * Binv_.row(leave_row);
      }
      ++pivots_;
      if (theta <= 1e-12) {
        if (++degenerate_run > 50) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }
    }
  }

  void finish(LpSolution& sol) {
    refactor();
    const Vector pi = m_ > 0 ? duals(c_) : Vector();
    const Vector d = reduced_costs(c_, pi);
    sol.y = x_.head(n_);
    sol.dual_ineq = m_in_ > 0 ? Vector(pi.head(m_in_)) : Vector();
    sol.dual_eq = m_eq_ > 0 ? Vector(pi.tail(m_eq_)) : Vector();
    sol.reduced_costs = d.head(n_);
    sol.value = c_.head(n_).dot(sol.y);
    double dual_value = m_ > 0 ? b_.dot(pi) : 0.0;
    double dual_res = 0;
    for (Index j = 0; j < n_struct_; ++j) {
      const double dj = d(j);
      if (dj > 0) {
        if (std::isfinite(lo_(j))) dual_value += dj * lo_(j);
        else dual_res = std::max(dual_res, dj);
      } else if (dj < 0) {
        if (std::isfinite(hi_(j))) dual_value += dj * hi_(j);
        else dual_res = std::max(dual_res, -dj);
      }
    }
    sol.dual_value = dual_value;
    sol.dual_residual = dual_res;
    double primal_res = 0;
    const Vector Ay = A_.leftCols(n_) * sol.y;
    for (Index i = 0; i < m_in_; ++i) primal_res = std::max(primal_res, Ay(i) - b_(i));
    for (Index i = m_in_; i < m_; ++i) primal_res = std::max(primal_res, std::abs(Ay(i) - b_(i)));
    for (Index j = 0; j < n_; ++j) {
      primal_res = std::max(primal_res, lo_(j) - sol.y(j));
      primal_res = std::max(primal_res, sol.y(j) - hi_(j));
    }
    sol.primal_residual = primal_res;
    sol.gap = sol.value - sol.dual_value;
  }

  LpOptions opt_;
  Index n_ = 0, m_in_ = 0, m_eq_ = 0, m_ = 0, n_struct_ = 0, total_ = 0;
  Matrix A_;
  Vector b_, c_, lo_, hi_, x_, sigma_;
  Matrix Binv_;
  std::vector<VarState> state_;
  std::vector<Index> head_;
  std::vector<bool> start_at_upper_;
  int pivots_ = 0;
  bool bound_conflict_ = false;
};

}  // namespace

LpSolution lp_solve(const LpProblem& problem, const LpOptions& options) {
  Simplex s(problem, options);
  return s.solve();
}

LpSolution lp_solve_dense(const Vector& c, const Matrix& A_ineq, const Vector& b_ineq, const Matrix& A_eq,
                          const Vector& b_eq) {
  LpProblem p;
  p.c = c;
  p.A_ineq = A_ineq;
  p.b_ineq = b_ineq;
  p.A_eq = A_eq;
  p.b_eq = b_eq;
  return lp_solve(p);
}

}  // namespace mirror_bounds
