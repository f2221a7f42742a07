#include "tvspec/rof.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace tvspec {

std::string to_string(SolverMethod m) {
  switch (m) {
    case SolverMethod::ChambolleProjection:
      return "chambolle-projection";
    case SolverMethod::PrimalDual:
      return "primal-dual";
  }
  return "unknown";
}

SolverMethod solver_method_from_string(const std::string& name) {
  if (name == "chambolle-projection" || name == "chambolle") return SolverMethod::ChambolleProjection;
  if (name == "primal-dual" || name == "pdhg") return SolverMethod::PrimalDual;
  throw std::invalid_argument("unknown solver method: " + name);
}

void SolverConfig::validate() const {
  if (max_iters < 1) throw std::invalid_argument("SolverConfig: max_iters must be >= 1");
  if (!(gap_tol > 0.0)) throw std::invalid_argument("SolverConfig: gap_tol must be > 0");
  if (check_every < 1) throw std::invalid_argument("SolverConfig: check_every must be >= 1");
  if (method == SolverMethod::PrimalDual) {
    if (!(pd_step_tau > 0.0) || !(pd_step_sigma > 0.0)) {
      throw std::invalid_argument("SolverConfig: primal-dual steps must be positive");
    }
    // small slack so that tau = sigma = 1/sqrt(8) passes despite rounding
    if (pd_step_tau * pd_step_sigma * kGradientNormSquared > 1.0 + 1e-12) {
      throw std::invalid_argument("SolverConfig: pd_step_tau*pd_step_sigma*8 must be <= 1");
    }
  } else {
    if (!(projection_step > 0.0) || projection_step > 0.125) {
      throw std::invalid_argument("SolverConfig: projection_step must lie in (0, 1/8]");
    }
  }
}

ImageGrid ProxResult::subgradient() const {
  ImageGrid d = divergence(dual_field);
  d *= -1.0;
  return d;
}

double rof_primal(const ImageGrid& u, const ImageGrid& v, double dt) {
  const ImageGrid diff = v - u;
  return 0.5 * dot(diff, diff) + dt * tv_value(v);
}

namespace {

// <u - mean(u), d>; d has zero sum, subtracting the mean only removes rounding.
double centered_dot(const ImageGrid& u, const ImageGrid& d) {
  const double m = mean(u);
  double s = 0.0;
  auto du = u.data();
  auto dd = d.data();
  for (std::size_t i = 0; i < du.size(); ++i) s += (du[i] - m) * dd[i];
  return s;
}

double dual_from_divergence(const ImageGrid& u, const ImageGrid& div_p, double dt) {
  return -dt * centered_dot(u, div_p) - 0.5 * dt * dt * dot(div_p, div_p);
}

constexpr double kFeasibilitySlack = 1e-12;
constexpr double kRestartDecay = 0.5;

}  // namespace

double rof_dual(const ImageGrid& u, const VectorField& p, double dt) {
  if (!p.matches(u)) throw std::invalid_argument("rof_dual: dimension mismatch");
  return dual_from_divergence(u, divergence(p), dt);
}

double duality_gap(const ImageGrid& u, const ImageGrid& v, const VectorField& p, double dt) {
  if (!u.same_shape(v) || !p.matches(u)) {
    throw std::invalid_argument("duality_gap: dimension mismatch");
  }
  if (!(dt > 0.0)) throw std::invalid_argument("duality_gap: dt must be positive");
  if (max_pointwise_norm(p) > 1.0 + kFeasibilitySlack) {
    throw std::invalid_argument("duality_gap: dual field is infeasible (|p| > 1)");
  }
  return rof_primal(u, v, dt) - rof_dual(u, p, dt);
}

double relative_gap(double gap, double primal) {
  if (gap <= 0.0) return 0.0;
  if (primal <= 0.0) return std::numeric_limits<double>::infinity();
  return gap / primal;
}

namespace {

enum class PrimalPick { Iterate, DualPoint, Constant };

struct GapCheck {
  double rel_gap;
  PrimalPick pick;  // which primal candidate the gap certifies
  double mean;      // of u, for PrimalPick::Constant
};

// Certificate for the current pair. The dual field p certifies the running
// primal iterate, the dual-induced point u + dt div p and the constant mean(u);
// the best one is reported. The constant is the exact answer once the flow has
// gone extinct, where the TV term of u + dt div p would dominate the gap.
GapCheck evaluate_gap(const ImageGrid& u, const ImageGrid* primal_iterate,
                      const VectorField& p, double dt, ImageGrid& div_buf,
                      ImageGrid& v_dual) {
  divergence_into(p, div_buf);
  const double dual = dual_from_divergence(u, div_buf, dt);
  auto du = u.data();
  auto dd = div_buf.data();
  auto dv = v_dual.data();
  for (std::size_t i = 0; i < du.size(); ++i) dv[i] = du[i] + dt * dd[i];
  const double primal_dual_point = 0.5 * dt * dt * dot(div_buf, div_buf) + dt * tv_value(v_dual);
  double best = primal_dual_point;
  PrimalPick pick = PrimalPick::DualPoint;
  if (primal_iterate) {
    const double p_iter = rof_primal(u, *primal_iterate, dt);
    if (p_iter < best) {
      best = p_iter;
      pick = PrimalPick::Iterate;
    }
  }
  const double m = mean(u);
  double p_const = 0.0;
  for (double x : du) p_const += (x - m) * (x - m);
  p_const *= 0.5;
  if (p_const < best) {
    best = p_const;
    pick = PrimalPick::Constant;
  }
  const double gap = best - dual;
  // Gaps below the rounding error of evaluating both objectives are noise.
  // TV sums differences of values of size |u|, so its error scales with ||u||_1.
  constexpr double eps = std::numeric_limits<double>::epsilon();
  const double noise = 8.0 * eps * (best + std::abs(dual) + dt * norm_l1(u)) +
                       std::numeric_limits<double>::min();
  const double rel = gap <= noise ? 0.0 : relative_gap(gap, best);
  return {rel, pick, m};
}

// Fast gradient projection on the dual (Chambolle's projection scheme with
// Nesterov momentum). Momentum restarts whenever the step stops pointing
// uphill.
ProxResult solve_chambolle(const ImageGrid& u, double dt, const SolverConfig& cfg,
                           const VectorField* warm) {
  const int w = u.width();
  const int h = u.height();
  const std::size_t n = u.size();
  VectorField p = warm ? *warm : VectorField(w, h);
  VectorField q = p;
  ImageGrid wbuf(w, h);
  ImageGrid div_buf(w, h);
  ImageGrid v_dual(w, h);
  const double tau = cfg.projection_step;
  const double inv_dt = 1.0 / dt;
  auto du = u.data();
  double t = 1.0;

  ProxResult res;
  res.converged = false;
  int it = 0;
  double rel = std::numeric_limits<double>::infinity();
  GapCheck g{rel, PrimalPick::DualPoint, 0.0};
  while (true) {
    if (it % cfg.check_every == 0 || it == cfg.max_iters) {
      g = evaluate_gap(u, nullptr, p, dt, div_buf, v_dual);
      rel = g.rel_gap;
      if (rel <= cfg.gap_tol) {
        res.converged = true;
        break;
      }
      if (it >= cfg.max_iters) break;
    }
    divergence_into(q, wbuf);
    auto dw = wbuf.data();
    for (std::size_t i = 0; i < n; ++i) dw[i] += du[i] * inv_dt;
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double beta = (t - 1.0) / t_next;
    double uphill = 0.0;
    for (int y = 0; y < h; ++y) {
      const std::size_t row = static_cast<std::size_t>(y) * w;
      for (int x = 0; x < w; ++x) {
        const std::size_t i = row + x;
        const double gx = x + 1 < w ? dw[i + 1] - dw[i] : 0.0;
        const double gy = y + 1 < h ? dw[i + w] - dw[i] : 0.0;
        double ax = q.x[i] + tau * gx;
        double ay = q.y[i] + tau * gy;
        const double nrm = std::sqrt(ax * ax + ay * ay);
        if (nrm > 1.0) {
          ax /= nrm;
          ay /= nrm;
        }
        const double sx = ax - p.x[i];
        const double sy = ay - p.y[i];
        uphill += (q.x[i] - ax) * sx + (q.y[i] - ay) * sy;
        p.x[i] = ax;
        p.y[i] = ay;
        q.x[i] = ax + beta * sx;
        q.y[i] = ay + beta * sy;
      }
    }
    t = t_next;
    if (cfg.adaptive_restart && uphill > 0.0) {
      q = p;
      t = 1.0;
    }
    ++it;
  }
  res.iterations = it;
  res.final_gap = rel;
  res.v = g.pick == PrimalPick::Constant ? ImageGrid(w, h, g.mean) : std::move(v_dual);
  res.dual_field = std::move(p);
  return res;
}

// Accelerated primal-dual hybrid gradient for the 1-strongly convex fidelity
// term. Dual variable y lives in the dt-ball; the reported field is y/dt.
ProxResult solve_primal_dual(const ImageGrid& u, double dt, const SolverConfig& cfg,
                             const VectorField* warm) {
  const int w = u.width();
  const int h = u.height();
  const std::size_t n = u.size();
  VectorField y(w, h);
  ImageGrid v = u;
  ImageGrid div_buf(w, h);
  if (warm) {
    for (std::size_t i = 0; i < n; ++i) {
      y.x[i] = dt * warm->x[i];
      y.y[i] = dt * warm->y[i];
    }
    divergence_into(y, div_buf);
    for (std::size_t i = 0; i < n; ++i) v.data()[i] += div_buf.data()[i];
  }
  ImageGrid v_bar = v;
  ImageGrid v_dual(w, h);
  VectorField p_scaled(w, h);
  double tau = cfg.pd_step_tau;
  double sigma = cfg.pd_step_sigma;
  const double gamma = 1.0;
  auto du = u.data();

  auto refresh_scaled = [&] {
    const double inv = 1.0 / dt;
    for (std::size_t i = 0; i < n; ++i) {
      double px = y.x[i] * inv;
      double py = y.y[i] * inv;
      const double nrm = std::sqrt(px * px + py * py);
      if (nrm > 1.0) {
        px /= nrm;
        py /= nrm;
      }
      p_scaled.x[i] = px;
      p_scaled.y[i] = py;
    }
  };

  ProxResult res;
  res.converged = false;
  int it = 0;
  double rel = std::numeric_limits<double>::infinity();
  GapCheck g{rel, PrimalPick::DualPoint, 0.0};
  double restart_gap = std::numeric_limits<double>::infinity();
  while (true) {
    if (it % cfg.check_every == 0 || it == cfg.max_iters) {
      refresh_scaled();
      g = evaluate_gap(u, &v, p_scaled, dt, div_buf, v_dual);
      rel = g.rel_gap;
      if (rel <= cfg.gap_tol) {
        res.converged = true;
        break;
      }
      if (it >= cfg.max_iters) break;
      // Restart the step schedule once the gap has dropped enough since the
      // last restart.
      if (cfg.adaptive_restart && rel <= kRestartDecay * restart_gap) {
        if (std::isfinite(restart_gap)) {
          tau = cfg.pd_step_tau;
          sigma = cfg.pd_step_sigma;
          v_bar = v;
        }
        restart_gap = rel;
      }
    }
    // dual ascent and projection onto |y| <= dt
    auto vb = v_bar.data();
    for (int yy = 0; yy < h; ++yy) {
      const std::size_t row = static_cast<std::size_t>(yy) * w;
      for (int x = 0; x < w; ++x) {
        const std::size_t i = row + x;
        const double gx = x + 1 < w ? vb[i + 1] - vb[i] : 0.0;
        const double gy = yy + 1 < h ? vb[i + w] - vb[i] : 0.0;
        double qx = y.x[i] + sigma * gx;
        double qy = y.y[i] + sigma * gy;
        const double nrm = std::sqrt(qx * qx + qy * qy);
        if (nrm > dt) {
          const double s = dt / nrm;
          qx *= s;
          qy *= s;
        }
        y.x[i] = qx;
        y.y[i] = qy;
      }
    }
    // primal proximal step of 0.5||v - u||^2
    divergence_into(y, div_buf);
    const double theta = 1.0 / std::sqrt(1.0 + 2.0 * gamma * tau);
    auto dv = v.data();
    auto dd = div_buf.data();
    const double inv = 1.0 / (1.0 + tau);
    for (std::size_t i = 0; i < n; ++i) {
      const double old = dv[i];
      const double nv = (old + tau * (dd[i] + du[i])) * inv;
      dv[i] = nv;
      vb[i] = nv + theta * (nv - old);
    }
    tau *= theta;
    sigma /= theta;
    ++it;
  }
  res.iterations = it;
  res.final_gap = rel;
  switch (g.pick) {
    case PrimalPick::Iterate:
      res.v = std::move(v);
      break;
    case PrimalPick::DualPoint:
      res.v = std::move(v_dual);
      break;
    case PrimalPick::Constant:
      res.v = ImageGrid(w, h, g.mean);
      break;
  }
  res.dual_field = std::move(p_scaled);
  return res;
}

}  // namespace

ProxResult rof_prox(const ImageGrid& u, double dt, const SolverConfig& cfg,
                    const VectorField* warm_dual) {
  cfg.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("rof_prox: dt must be positive");
  if (u.empty()) throw std::invalid_argument("rof_prox: empty image");
  if (warm_dual && !warm_dual->matches(u)) {
    throw std::invalid_argument("rof_prox: warm-start field dimension mismatch");
  }
  if (warm_dual) {
    // A stale field (e.g. from before an extinction) can be worse than
    // starting from zero, whose relative gap is exactly 1.
    ImageGrid div_buf(u.width(), u.height());
    ImageGrid v_dual(u.width(), u.height());
    if (!(evaluate_gap(u, nullptr, *warm_dual, dt, div_buf, v_dual).rel_gap < 1.0)) {
      warm_dual = nullptr;
    }
  }
  return cfg.method == SolverMethod::ChambolleProjection ? solve_chambolle(u, dt, cfg, warm_dual)
                                                          : solve_primal_dual(u, dt, cfg, warm_dual);
}

int FlowTrajectory::nonconverged_steps() const {
  return static_cast<int>(std::count_if(steps.begin(), steps.end(),
                                        [](const StepRecord& s) { return !s.converged; }));
}

double FlowTrajectory::max_gap() const {
  double m = 0.0;
  for (const auto& s : steps) m = std::max(m, s.gap);
  return m;
}

void flow_stream(const ImageGrid& f, double dt, int n_steps, const SolverConfig& cfg,
                 FlowObserver& observer) {
  if (n_steps < 2) throw std::invalid_argument("flow: n_steps must be >= 2");
  if (!(dt > 0.0)) throw std::invalid_argument("flow: dt must be positive");
  cfg.validate();
  observer.on_state(0, f, StepRecord{});
  ImageGrid current = f;
  VectorField dual;
  bool have_dual = false;
  for (int i = 0; i < n_steps; ++i) {
    ProxResult r = rof_prox(current, dt, cfg, have_dual ? &dual : nullptr);
    const StepRecord rec{r.iterations, r.final_gap, r.converged};
    current = std::move(r.v);
    dual = std::move(r.dual_field);
    have_dual = true;
    observer.on_state(i + 1, current, rec);
  }
}

FlowTrajectory flow_evolve(const ImageGrid& f, double dt, int n_steps, const SolverConfig& cfg) {
  struct Collector final : FlowObserver {
    FlowTrajectory traj;
    void on_state(int index, const ImageGrid& state, const StepRecord& record) override {
      traj.states.push_back(state);
      if (index > 0) traj.steps.push_back(record);
    }
  } collector;
  collector.traj.dt = dt;
  flow_stream(f, dt, n_steps, cfg, collector);
  return std::move(collector.traj);
}

}  // namespace tvspec
