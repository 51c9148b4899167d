#include "hdfts/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hdfts/rng.hpp"

namespace hdfts {

const char* penalty_mode_name(PenaltyMode mode) {
  switch (mode) {
    case PenaltyMode::none: return "none";
    case PenaltyMode::global: return "global";
    case PenaltyMode::global_local: return "global_local";
  }
  return "unknown";
}

PenaltyMode penalty_mode_from_name(const std::string& name) {
  if (name == "none") return PenaltyMode::none;
  if (name == "global") return PenaltyMode::global;
  if (name == "global_local") return PenaltyMode::global_local;
  throw error(errc::invalid_config, "unknown penalty mode: " + name);
}

void PenaltyConfig::validate() const {
  if (lambda1 < 0.0 || lambda2 < 0.0) {
    throw error(errc::invalid_config, "penalty: lambda1 and lambda2 must be >= 0");
  }
  if (!(nu > 0.0 && nu < 1.0)) {
    throw error(errc::invalid_config, "penalty: nu must lie in (0, 1)");
  }
  if (local_weights.size() > 0 && local_weights.minCoeff() <= 0.0) {
    throw error(errc::invalid_config, "penalty: local weights must be positive");
  }
}

double tau(double lambda1, double nu) {
  if (!(nu > 0.0 && nu < 1.0)) throw error(errc::invalid_config, "tau: nu must lie in (0, 1)");
  if (lambda1 < 0.0) throw error(errc::invalid_config, "tau: lambda1 must be >= 0");
  if (lambda1 == 0.0) return 0.0;
  return std::pow(lambda1 * std::pow(nu, nu) * std::pow(1.0 - nu, 1.0 - nu), 1.0 / (1.0 - nu));
}

double theta_update(double gamma_l1norm, double c, double nu, double tau) {
  if (gamma_l1norm < 0.0 || c <= 0.0) {
    throw error(errc::invalid_config, "theta_update: invalid inputs");
  }
  if (!(nu > 0.0 && nu < 1.0)) {
    throw error(errc::invalid_config, "theta_update: nu must lie in (0, 1)");
  }
  if (gamma_l1norm == 0.0) return 0.0;
  if (tau <= 0.0) {
    throw error(errc::inconsistent_config, "theta_update: tau must be positive for nonzero groups");
  }
  return c * std::pow(gamma_l1norm, nu) * std::pow((1.0 - nu) / (tau * nu), nu);
}

LassoResult weighted_lasso_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& b,
                                const Eigen::VectorXd& weights, Eigen::VectorXd warm_start,
                                double tol, int max_iter, const std::vector<int>* active_set,
                                const Eigen::LLT<Eigen::MatrixXd>* full_llt) {
  const Eigen::Index p = gram.rows();
  LassoResult res;
  res.gamma = std::move(warm_start);
  if (res.gamma.size() != p) res.gamma = Eigen::VectorXd::Zero(p);

  std::vector<int> coords;
  if (active_set) {
    coords = *active_set;
  } else {
    coords.resize(static_cast<std::size_t>(p));
    std::iota(coords.begin(), coords.end(), 0);
  }

  // q = G * gamma, maintained incrementally across coordinate updates.
  Eigen::VectorXd q = gram * res.gamma;

  // Between coordinate passes, once the support and sign pattern have
  // stabilized, the restricted problem is quadratic with a constant linear
  // shift: solving it exactly on the current sign face never increases the
  // objective (the current point lies on that face) and cuts the pass count
  // on ill-conditioned blocks by orders of magnitude. The stopping rule is
  // still the plain coordinate-change criterion.
  std::vector<std::int8_t> prev_sign(static_cast<std::size_t>(p), 0);
  bool have_prev_sign = false;
  std::uint64_t last_attempt_hash = 0;
  const auto try_face_solve = [&]() {
    std::vector<int> support;
    for (int j : coords) {
      if (res.gamma[j] != 0.0) support.push_back(j);
    }
    if (support.empty()) return;
    Eigen::VectorXd sol;
    if (full_llt && support.size() == coords.size() &&
        static_cast<Eigen::Index>(support.size()) == p) {
      Eigen::VectorXd rhs = b;
      for (int j : support) rhs[j] -= 0.5 * weights[j] * (res.gamma[j] > 0 ? 1.0 : -1.0);
      sol = full_llt->solve(rhs);
    } else {
      const Eigen::Index k = static_cast<Eigen::Index>(support.size());
      Eigen::MatrixXd a(k, k);
      Eigen::VectorXd rhs(k);
      for (Eigen::Index i = 0; i < k; ++i) {
        const int ji = support[static_cast<std::size_t>(i)];
        rhs[i] = b[ji] - 0.5 * weights[ji] * (res.gamma[ji] > 0 ? 1.0 : -1.0);
        for (Eigen::Index jj = 0; jj < k; ++jj) {
          a(i, jj) = gram(ji, support[static_cast<std::size_t>(jj)]);
        }
      }
      Eigen::LLT<Eigen::MatrixXd> llt(a);
      if (llt.info() != Eigen::Success) return;
      Eigen::VectorXd small = llt.solve(rhs);
      if (!small.allFinite()) return;
      sol = Eigen::VectorXd::Zero(p);
      for (Eigen::Index i = 0; i < k; ++i) sol[support[static_cast<std::size_t>(i)]] =
          small[i];
      // Keep only the face coordinates in sol for the sign check below.
    }
    if (!sol.allFinite()) return;
    // Apply only when the solution stays on the assumed face.
    for (int j : support) {
      if (sol[j] == 0.0 || (sol[j] > 0) != (res.gamma[j] > 0)) return;
    }
    bool changed = false;
    for (int j : support) {
      if (sol[j] != res.gamma[j]) {
        res.gamma[j] = sol[j];
        changed = true;
      }
    }
    if (changed) q = gram * res.gamma;
  };

  for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
    double max_change = 0.0;
    for (int j : coords) {
      const double diag = gram(j, j);
      if (diag <= 0.0) continue;  // degenerate column: leave coefficient alone
      const double z = b[j] - q[j] + diag * res.gamma[j];
      const double thr = 0.5 * weights[j];
      double nj = 0.0;
      if (z > thr) nj = (z - thr) / diag;
      else if (z < -thr) nj = (z + thr) / diag;
      const double delta = nj - res.gamma[j];
      if (delta != 0.0) {
        res.gamma[j] = nj;
        q += gram.col(j) * delta;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    if (max_change < tol * (1.0 + res.gamma.cwiseAbs().maxCoeff())) {
      res.converged = true;
      ++res.iterations;
      break;
    }
    bool stable = have_prev_sign;
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (int j : coords) {
      const std::int8_t s = res.gamma[j] > 0 ? 1 : (res.gamma[j] < 0 ? -1 : 0);
      if (s != prev_sign[static_cast<std::size_t>(j)]) stable = false;
      prev_sign[static_cast<std::size_t>(j)] = s;
      hash = (hash ^ static_cast<std::uint64_t>(s + 2)) * 0x100000001b3ULL;
    }
    have_prev_sign = true;
    // One exact solve per sign pattern; alternating patterns fall back to
    // plain coordinate descent.
    if (stable && hash != last_attempt_hash) {
      last_attempt_hash = hash;
      try_face_solve();
    }
  }
  return res;
}

LassoResult weighted_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& weights, Eigen::VectorXd warm_start,
                           double tol, int max_iter) {
  if (!X.allFinite() || !y.allFinite() || !weights.allFinite()) {
    throw error(errc::numeric_error, "weighted_lasso: non-finite entries");
  }
  if (X.rows() != y.size() || X.cols() != weights.size()) {
    throw error(errc::invalid_config, "weighted_lasso: dimension mismatch");
  }
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(X.cols(), X.cols());
  gram.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose());
  gram.triangularView<Eigen::Upper>() = gram.transpose();
  return weighted_lasso_gram(gram, X.transpose() * y, weights, std::move(warm_start), tol,
                             max_iter, nullptr);
}

double weighted_lasso_kkt_residual(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                   const Eigen::VectorXd& weights, const Eigen::VectorXd& gamma) {
  const Eigen::VectorXd grad = 2.0 * (X.transpose() * (X * gamma - y));
  double worst = 0.0;
  for (Eigen::Index j = 0; j < gamma.size(); ++j) {
    if (gamma[j] != 0.0) {
      worst = std::max(worst, std::abs(grad[j] + weights[j] * (gamma[j] > 0 ? 1.0 : -1.0)));
    } else {
      worst = std::max(worst, std::abs(grad[j]) - weights[j]);
    }
  }
  return worst;
}

namespace {

constexpr double kThetaExponentGuard = 1e-300;

/// Mutable state of the backfitting algorithm for one target.
class Backfitter {
 public:
  Backfitter(const DesignContext& ctx, int target, const PenaltyConfig& cfg, const FitOptions& opt)
      : ctx_(ctx),
        cfg_(cfg),
        opt_(opt),
        S_(ctx.num_predictors),
        p_(ctx.block_dim),
        L_(ctx.spec.mesh().num_triangles()),
        Q_(ctx.spec.q_per_triangle()),
        b_(ctx.b.col(target)),
        y_norm2_(ctx.y_norm2[target]) {
    penalty_base_ = ctx_.h0_gram + cfg_.lambda2 * ctx_.r0;
    tau_ = tau(cfg_.lambda1, cfg_.nu);
    gamma_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(S_) * p_);
    u_ = Eigen::VectorXd::Zero(gamma_.size());
    theta_ = Eigen::MatrixXd::Zero(S_, L_ + 1);
    pred_frozen_.assign(static_cast<std::size_t>(S_), false);
    local_frozen_.assign(static_cast<std::size_t>(S_),
                         std::vector<bool>(static_cast<std::size_t>(L_), false));
    active_coords_.resize(static_cast<std::size_t>(S_));
    for (auto& v : active_coords_) {
      v.resize(static_cast<std::size_t>(p_));
      std::iota(v.begin(), v.end(), 0);
    }
    a_.reserve(static_cast<std::size_t>(S_));
    llt_.reserve(static_cast<std::size_t>(S_));
    for (int g = 0; g < S_; ++g) {
      a_.push_back(block(ctx_.gram, g, g) + penalty_base_);
      llt_.emplace_back(a_.back());
    }
    pen1_.assign(static_cast<std::size_t>(S_), 0.0);
    pen2_.assign(static_cast<std::size_t>(S_), 0.0);
  }

  FitResult run() {
    ridge_initialize();
    for (int g = 0; g < S_; ++g) update_theta(g);
    trace_.push_back(objective());

    std::vector<int> order(static_cast<std::size_t>(S_));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(opt_.seed);

    bool converged = false;
    int sweeps = 0;
    int bad_sweeps = 0;
    double sweep_obj = trace_.back();
    for (int sweep = 0; sweep < opt_.max_sweeps; ++sweep) {
      shuffle_in_place(order, rng);
      const Eigen::VectorXd prev = gamma_;
      for (int g : order) update_predictor(g);
      ++sweeps;

      const double obj = trace_.back();
      if (obj > sweep_obj + 1e-6) {
        if (++bad_sweeps >= 3) {
          throw error(errc::numeric_error,
                      "fit: objective increased for 3 consecutive sweeps (last " +
                          std::to_string(sweep_obj) + " -> " + std::to_string(obj) + ")");
        }
      } else {
        bad_sweeps = 0;
      }
      sweep_obj = obj;

      const double change = (gamma_ - prev).cwiseAbs().maxCoeff();
      if (change < opt_.outer_tol * (1.0 + gamma_.cwiseAbs().maxCoeff())) {
        converged = true;
        ++sweeps;
        break;
      }
    }
    // Final theta pass so the stored theta is the exact minimizer at the
    // final coefficients.
    for (int g = 0; g < S_; ++g) {
      if (!pred_frozen_[static_cast<std::size_t>(g)]) update_theta(g);
    }
    trace_.push_back(objective());

    FitResult res;
    res.gamma_selection = gamma_;
    res.theta = theta_;
    res.objective_trace = std::move(trace_);
    res.converged = converged;
    res.sweeps = sweeps;
    res.config = cfg_;
    res.seed = opt_.seed;

    collect_active(res);
    if (opt_.refit && !res.active_predictors.empty()) {
      refit(res);
      res.refit_done = true;
    } else {
      res.gamma = res.gamma_selection;
    }
    res.constraint_residual = constraint_residuals(res.gamma);
    return res;
  }

 private:
  Eigen::Block<const Eigen::MatrixXd> block(const Eigen::MatrixXd& m, int gr, int gc) const {
    return m.block(static_cast<Eigen::Index>(gr) * p_, static_cast<Eigen::Index>(gc) * p_, p_, p_);
  }
  Eigen::VectorBlock<Eigen::VectorXd> gamma_block(int g) {
    return gamma_.segment(static_cast<Eigen::Index>(g) * p_, p_);
  }

  double group_l1(int g, int l) const {
    return gamma_.segment(static_cast<Eigen::Index>(g) * p_ + static_cast<Eigen::Index>(l) * Q_, Q_)
        .cwiseAbs()
        .sum();
  }
  double predictor_l1(int g) const {
    return gamma_.segment(static_cast<Eigen::Index>(g) * p_, p_).cwiseAbs().sum();
  }

  void set_block_zero(int g) {
    const Eigen::VectorXd delta = -gamma_block(g);
    if (delta.cwiseAbs().maxCoeff() > 0.0) apply_update(g, gamma_block(g) + delta);
  }

  void apply_update(int g, const Eigen::VectorXd& new_block) {
    const Eigen::VectorXd delta = new_block - gamma_block(g);
    gamma_block(g) = new_block;
    u_ += ctx_.gram.middleCols(static_cast<Eigen::Index>(g) * p_, p_) * delta;
    pen2_[static_cast<std::size_t>(g)] =
        new_block.dot(penalty_base_.selfadjointView<Eigen::Lower>() * new_block);
  }

  void ridge_initialize() {
    for (int sweep = 0; sweep < 20; ++sweep) {
      double change = 0.0;
      for (int g = 0; g < S_; ++g) {
        const Eigen::VectorXd rhs = b_.segment(static_cast<Eigen::Index>(g) * p_, p_) -
                                    u_.segment(static_cast<Eigen::Index>(g) * p_, p_) +
                                    block(ctx_.gram, g, g) * gamma_block(g);
        const Eigen::VectorXd next = llt_[static_cast<std::size_t>(g)].solve(rhs);
        change = std::max(change, (next - gamma_block(g)).cwiseAbs().maxCoeff());
        apply_update(g, next);
      }
      if (change < 1e-3 * (1.0 + gamma_.cwiseAbs().maxCoeff())) break;
    }
  }

  /// Exact minimization over this predictor's theta parameters; groups whose
  /// L1 norm fell below zero_tol become exact zeros and leave the iteration.
  void update_theta(int g) {
    if (cfg_.lambda1 == 0.0 || cfg_.mode == PenaltyMode::none) return;
    const auto gs = static_cast<std::size_t>(g);
    if (cfg_.mode == PenaltyMode::global_local) {
      bool pruned = false;
      for (int l = 0; l < L_; ++l) {
        if (local_frozen_[gs][static_cast<std::size_t>(l)]) continue;
        double norm = group_l1(g, l);
        if (norm <= opt_.zero_tol) {
          freeze_local(g, l);
          pruned = true;
          norm = 0.0;
        }
        theta_(g, l) = theta_update(norm, cfg_.local_weight(l, Q_), cfg_.nu, tau_);
      }
      if (pruned) rebuild_active_coords(g);
    }
    double pnorm = predictor_l1(g);
    if (pnorm <= opt_.zero_tol) {
      freeze_predictor(g);
      pnorm = 0.0;
    }
    theta_(g, L_) = theta_update(pnorm, cfg_.resolved_global_weight(p_), cfg_.nu, tau_);
    update_pen1(g);
  }

  void freeze_local(int g, int l) {
    const auto gs = static_cast<std::size_t>(g);
    local_frozen_[gs][static_cast<std::size_t>(l)] = true;
    Eigen::VectorXd blockv = gamma_block(g);
    blockv.segment(static_cast<Eigen::Index>(l) * Q_, Q_).setZero();
    apply_update(g, blockv);
    theta_(g, l) = 0.0;
  }

  void freeze_predictor(int g) {
    const auto gs = static_cast<std::size_t>(g);
    pred_frozen_[gs] = true;
    set_block_zero(g);
    theta_.row(g).setZero();
    std::fill(local_frozen_[gs].begin(), local_frozen_[gs].end(), true);
    active_coords_[gs].clear();
    pen1_[gs] = 0.0;
    pen2_[gs] = 0.0;
  }

  void rebuild_active_coords(int g) {
    const auto gs = static_cast<std::size_t>(g);
    auto& coords = active_coords_[gs];
    coords.clear();
    for (int l = 0; l < L_; ++l) {
      if (local_frozen_[gs][static_cast<std::size_t>(l)]) continue;
      for (int q = 0; q < Q_; ++q) coords.push_back(l * Q_ + q);
    }
    if (coords.empty()) freeze_predictor(g);
  }

  double theta_weight(double theta, double c) const {
    if (theta <= 0.0) return opt_.weight_cap;
    const double w = std::pow(std::max(theta, kThetaExponentGuard), 1.0 - 1.0 / cfg_.nu) *
                     std::pow(c, 1.0 / cfg_.nu);
    return std::min(w, opt_.weight_cap);
  }

  /// Eq.-(6) penalty terms for predictor g at the current (gamma, theta).
  void update_pen1(int g) {
    const auto gs = static_cast<std::size_t>(g);
    double v = 0.0;
    if (cfg_.mode == PenaltyMode::global_local) {
      for (int l = 0; l < L_; ++l) {
        const double norm = group_l1(g, l);
        if (norm > 0.0 && theta_(g, l) > 0.0) {
          v += theta_weight(theta_(g, l), cfg_.local_weight(l, Q_)) * norm;
        }
        v += tau_ * theta_(g, l);
      }
    }
    const double pnorm = predictor_l1(g);
    if (pnorm > 0.0 && theta_(g, L_) > 0.0) {
      v += theta_weight(theta_(g, L_), cfg_.resolved_global_weight(p_)) * pnorm;
    }
    v += tau_ * theta_(g, L_);
    pen1_[gs] = v;
  }

  double objective() const {
    const double quad = y_norm2_ - 2.0 * b_.dot(gamma_) + gamma_.dot(u_);
    return quad + std::accumulate(pen2_.begin(), pen2_.end(), 0.0) +
           std::accumulate(pen1_.begin(), pen1_.end(), 0.0);
  }

  void update_predictor(int g) {
    const auto gs = static_cast<std::size_t>(g);
    if (pred_frozen_[gs]) return;
    if (cfg_.lambda1 > 0.0 && cfg_.mode != PenaltyMode::none) {
      update_theta(g);
      if (pred_frozen_[gs]) {
        trace_.push_back(objective());
        return;
      }
    }

    const Eigen::VectorXd rhs = b_.segment(static_cast<Eigen::Index>(g) * p_, p_) -
                                u_.segment(static_cast<Eigen::Index>(g) * p_, p_) +
                                block(ctx_.gram, g, g) * gamma_block(g);
    Eigen::VectorXd next;
    if (cfg_.lambda1 > 0.0 && cfg_.mode != PenaltyMode::none) {
      Eigen::VectorXd w(p_);
      const double wg = theta_weight(theta_(g, L_), cfg_.resolved_global_weight(p_));
      for (int l = 0; l < L_; ++l) {
        double wl = wg;
        if (cfg_.mode == PenaltyMode::global_local) {
          wl = std::min(wl + theta_weight(theta_(g, l), cfg_.local_weight(l, Q_)), opt_.weight_cap);
        }
        w.segment(static_cast<Eigen::Index>(l) * Q_, Q_).setConstant(wl);
      }
      const bool full_support = static_cast<int>(active_coords_[gs].size()) == p_;
      auto res = weighted_lasso_gram(a_[gs], rhs, w, gamma_block(g), opt_.inner_tol,
                                     opt_.inner_max_iter, &active_coords_[gs],
                                     full_support ? &llt_[gs] : nullptr);
      next = std::move(res.gamma);
      // Exact zeros for groups that the soft-threshold brought to zero.
      for (int l = 0; l < L_; ++l) {
        if (local_frozen_[gs][static_cast<std::size_t>(l)]) continue;
        if (next.segment(static_cast<Eigen::Index>(l) * Q_, Q_).cwiseAbs().sum() <= opt_.zero_tol) {
          next.segment(static_cast<Eigen::Index>(l) * Q_, Q_).setZero();
        }
      }
    } else {
      next = llt_[gs].solve(rhs);
    }
    apply_update(g, next);
    if (cfg_.lambda1 > 0.0 && cfg_.mode != PenaltyMode::none) {
      if (predictor_l1(g) <= opt_.zero_tol) {
        freeze_predictor(g);
      } else if (cfg_.mode == PenaltyMode::global_local) {
        bool pruned = false;
        for (int l = 0; l < L_; ++l) {
          if (!local_frozen_[gs][static_cast<std::size_t>(l)] && group_l1(g, l) == 0.0) {
            freeze_local(g, l);
            pruned = true;
          }
        }
        if (pruned && !pred_frozen_[gs]) rebuild_active_coords(g);
      }
      if (!pred_frozen_[gs]) update_pen1(g);
    }
    trace_.push_back(objective());
  }

  void collect_active(FitResult& res) const {
    res.active_triangles.assign(static_cast<std::size_t>(S_), {});
    for (int g = 0; g < S_; ++g) {
      bool any = false;
      for (int l = 0; l < L_; ++l) {
        if (group_l1(g, l) > 0.0) {
          res.active_triangles[static_cast<std::size_t>(g)].push_back(l);
          any = true;
        }
      }
      if (any) res.active_predictors.push_back(g);
    }
  }

  /// Step 4: ridge-only backfit restricted to the selected support, warm
  /// started at the selection solution.
  void refit(FitResult& res) {
    std::vector<std::vector<int>> coords(static_cast<std::size_t>(S_));
    std::vector<Eigen::LLT<Eigen::MatrixXd>> llts(static_cast<std::size_t>(S_));
    for (int g : res.active_predictors) {
      const auto gs = static_cast<std::size_t>(g);
      for (int l : res.active_triangles[gs]) {
        for (int q = 0; q < Q_; ++q) coords[gs].push_back(l * Q_ + q);
      }
      const auto& cs = coords[gs];
      if (static_cast<int>(cs.size()) == p_) {
        llts[gs] = llt_[gs];
      } else {
        Eigen::MatrixXd sub(cs.size(), cs.size());
        for (std::size_t i = 0; i < cs.size(); ++i) {
          for (std::size_t j = 0; j < cs.size(); ++j) {
            sub(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                a_[gs](cs[i], cs[j]);
          }
        }
        llts[gs] = Eigen::LLT<Eigen::MatrixXd>(sub);
      }
    }
    const double tol = std::min(opt_.outer_tol, 1e-6);
    for (int sweep = 0; sweep < 200; ++sweep) {
      double change = 0.0;
      for (int g : res.active_predictors) {
        const auto gs = static_cast<std::size_t>(g);
        const auto& cs = coords[gs];
        const Eigen::VectorXd rhs_full = b_.segment(static_cast<Eigen::Index>(g) * p_, p_) -
                                         u_.segment(static_cast<Eigen::Index>(g) * p_, p_) +
                                         block(ctx_.gram, g, g) * gamma_block(g);
        Eigen::VectorXd rhs(cs.size());
        for (std::size_t i = 0; i < cs.size(); ++i) rhs[static_cast<Eigen::Index>(i)] = rhs_full[cs[i]];
        const Eigen::VectorXd sol = llts[gs].solve(rhs);
        Eigen::VectorXd next = Eigen::VectorXd::Zero(p_);
        for (std::size_t i = 0; i < cs.size(); ++i) next[cs[i]] = sol[static_cast<Eigen::Index>(i)];
        change = std::max(change, (next - gamma_block(g)).cwiseAbs().maxCoeff());
        apply_update(g, next);
      }
      if (change < tol * (1.0 + gamma_.cwiseAbs().maxCoeff())) break;
    }
    res.gamma = gamma_;
  }

  Eigen::VectorXd constraint_residuals(const Eigen::VectorXd& gamma) const {
    Eigen::VectorXd out(S_);
    for (int g = 0; g < S_; ++g) {
      if (ctx_.h0.rows() == 0) {
        out[g] = 0.0;
      } else {
        out[g] =
            (ctx_.h0 * gamma.segment(static_cast<Eigen::Index>(g) * p_, p_)).cwiseAbs().maxCoeff();
      }
    }
    return out;
  }

  const DesignContext& ctx_;
  PenaltyConfig cfg_;
  FitOptions opt_;
  int S_, p_, L_, Q_;
  Eigen::VectorXd b_;
  double y_norm2_;
  double tau_ = 0.0;
  Eigen::MatrixXd penalty_base_;
  std::vector<Eigen::MatrixXd> a_;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> llt_;
  Eigen::VectorXd gamma_, u_;
  Eigen::MatrixXd theta_;
  std::vector<bool> pred_frozen_;
  std::vector<std::vector<bool>> local_frozen_;
  std::vector<std::vector<int>> active_coords_;
  std::vector<double> pen1_, pen2_;
  std::vector<double> trace_;
};

}  // namespace

Eigen::MatrixXd joint_ridge_all_targets(const DesignContext& ctx, double lambda2) {
  const int p = ctx.block_dim;
  Eigen::MatrixXd a = ctx.gram;
  const Eigen::MatrixXd base = ctx.h0_gram + lambda2 * ctx.r0;
  for (int g = 0; g < ctx.num_predictors; ++g) {
    a.block(static_cast<Eigen::Index>(g) * p, static_cast<Eigen::Index>(g) * p, p, p) += base;
  }
  return a.ldlt().solve(ctx.b);
}

FitResult make_ridge_result(const DesignContext& ctx, int target, const PenaltyConfig& cfg,
                            Eigen::VectorXd gamma) {
  const int S = ctx.num_predictors;
  const int p = ctx.block_dim;
  const int L = ctx.spec.mesh().num_triangles();
  FitResult res;
  res.gamma = std::move(gamma);
  res.gamma_selection = res.gamma;
  res.theta = Eigen::MatrixXd::Zero(S, L + 1);
  res.active_triangles.assign(static_cast<std::size_t>(S), {});
  for (int g = 0; g < S; ++g) {
    res.active_predictors.push_back(g);
    for (int l = 0; l < L; ++l) res.active_triangles[static_cast<std::size_t>(g)].push_back(l);
  }
  const double quad = ctx.y_norm2[target] - 2.0 * ctx.b.col(target).dot(res.gamma) +
                      res.gamma.dot(ctx.gram.selfadjointView<Eigen::Lower>() * res.gamma);
  double pen2 = 0.0;
  const Eigen::MatrixXd base = ctx.h0_gram + cfg.lambda2 * ctx.r0;
  res.constraint_residual.resize(S);
  for (int g = 0; g < S; ++g) {
    const Eigen::VectorXd blockv = res.gamma.segment(static_cast<Eigen::Index>(g) * p, p);
    pen2 += blockv.dot(base.selfadjointView<Eigen::Lower>() * blockv);
    res.constraint_residual[g] =
        ctx.h0.rows() == 0 ? 0.0 : (ctx.h0 * blockv).cwiseAbs().maxCoeff();
  }
  res.objective_trace = {quad + pen2};
  res.converged = true;
  res.sweeps = 0;
  res.config = cfg;
  return res;
}

FitResult fit(const DesignContext& ctx, int target, const PenaltyConfig& cfg,
              const FitOptions& opt) {
  cfg.validate();
  if (target < 0 || target >= ctx.num_predictors) {
    throw error(errc::invalid_config, "fit: bad target index");
  }
  PenaltyConfig effective = cfg;
  if (effective.mode == PenaltyMode::none) effective.lambda1 = 0.0;
  if (effective.lambda1 == 0.0) {
    Eigen::VectorXd gamma = joint_ridge_all_targets(ctx, effective.lambda2).col(target);
    FitResult res = make_ridge_result(ctx, target, effective, std::move(gamma));
    res.seed = opt.seed;
    return res;
  }
  Backfitter bf(ctx, target, effective, opt);
  return bf.run();
}

FitResult fit(const DesignSystem& sys, const PenaltyConfig& cfg, const FitOptions& opt) {
  if (!sys.psi.allFinite() || !sys.y.allFinite()) {
    throw error(errc::numeric_error, "fit: non-finite design system");
  }
  DesignContext ctx;
  ctx.spec = sys.spec;
  ctx.num_predictors = sys.num_predictors;
  ctx.block_dim = sys.spec.dimension();
  ctx.n_rows = static_cast<int>(sys.psi.rows());
  const Eigen::Index P = sys.psi.cols();
  ctx.gram = Eigen::MatrixXd::Zero(P, P);
  ctx.gram.selfadjointView<Eigen::Lower>().rankUpdate(sys.psi.transpose());
  ctx.gram.triangularView<Eigen::Upper>() = ctx.gram.transpose();
  ctx.b = sys.psi.transpose() * sys.y;
  ctx.y_norm2.resize(1);
  ctx.y_norm2[0] = sys.y.squaredNorm();
  ctx.h0 = sys.H.topLeftCorner(sys.H.rows() / std::max(1, sys.num_predictors), ctx.block_dim);
  ctx.h0_gram = ctx.h0.transpose() * ctx.h0;
  ctx.r0 = sys.R.topLeftCorner(ctx.block_dim, ctx.block_dim);

  PenaltyConfig effective = cfg;
  effective.lambda2 = sys.lambda2;
  return fit(ctx, 0, effective, opt);
}

double group_bridge_objective(const DesignSystem& sys, const PenaltyConfig& cfg,
                              const Eigen::VectorXd& gamma) {
  const int p = sys.spec.dimension();
  const int S = sys.num_predictors;
  const int Q = sys.spec.q_per_triangle();
  const int L = sys.spec.mesh().num_triangles();
  double obj = (sys.y - sys.psi * gamma).squaredNorm() + (sys.H * gamma).squaredNorm() +
               sys.lambda2 * gamma.dot(sys.R.selfadjointView<Eigen::Lower>() * gamma);
  if (cfg.lambda1 > 0.0 && cfg.mode != PenaltyMode::none) {
    for (int g = 0; g < S; ++g) {
      const auto blockv = gamma.segment(static_cast<Eigen::Index>(g) * p, p);
      if (cfg.mode == PenaltyMode::global_local) {
        for (int l = 0; l < L; ++l) {
          const double norm = blockv.segment(static_cast<Eigen::Index>(l) * Q, Q).cwiseAbs().sum();
          obj += cfg.lambda1 * cfg.local_weight(l, Q) * std::pow(norm, cfg.nu);
        }
      }
      obj += cfg.lambda1 * cfg.resolved_global_weight(p) * std::pow(blockv.cwiseAbs().sum(), cfg.nu);
    }
  }
  return obj;
}

}  // namespace hdfts
