#pragma once

#include <string>
#include <vector>

#include "tvspec/image.hpp"

namespace tvspec {

enum class SolverMethod { ChambolleProjection, PrimalDual };

std::string to_string(SolverMethod m);
SolverMethod solver_method_from_string(const std::string& name);

/// Operator-norm bound ||grad||^2 <= 8 of the forward-difference gradient.
inline constexpr double kGradientNormSquared = 8.0;

struct SolverConfig {
  SolverMethod method = SolverMethod::PrimalDual;
  int max_iters = 50000;
  double gap_tol = 1e-6;  // relative duality gap, see relative_gap()
  double pd_step_tau = 0.35355339059327373;    // 1/sqrt(8)
  double pd_step_sigma = 0.35355339059327373;  // 1/sqrt(8)
  double projection_step = 0.125;
  int check_every = 5;  // iterations between duality-gap evaluations
  bool adaptive_restart = true;

  /// Throws std::invalid_argument if any invariant is violated.
  void validate() const;
};

struct ProxResult {
  ImageGrid v;
  int iterations = 0;
  double final_gap = 0.0;  // relative
  VectorField dual_field;  // pointwise norm <= 1
  bool converged = true;   // false: max_iters hit before gap_tol

  /// Element of the TV subdifferential at v: (u - v)/dt = -div(dual_field).
  ImageGrid subgradient() const;
};

/// Primal value 0.5*||v - u||^2 + dt*TV(v) of the ROF problem.
double rof_primal(const ImageGrid& u, const ImageGrid& v, double dt);

/// Dual value -dt<u, div p> - 0.5*dt^2*||div p||^2 for feasible p.
double rof_dual(const ImageGrid& u, const VectorField& p, double dt);

/// Primal minus dual objective of the ROF problem. Throws std::invalid_argument
/// if p is infeasible (pointwise norm above 1).
double duality_gap(const ImageGrid& u, const ImageGrid& v, const VectorField& p, double dt);

/// Gap normalised by the primal objective (zero when both vanish).
double relative_gap(double gap, double primal);

/// One implicit Euler step of the TV flow: argmin_v 0.5||u - v||^2 + dt TV(v).
///
/// `warm_dual`, when given, seeds the dual variable (and, through it, the
/// primal iterate u + dt div p).
ProxResult rof_prox(const ImageGrid& u, double dt, const SolverConfig& cfg,
                    const VectorField* warm_dual = nullptr);

struct StepRecord {
  int iterations = 0;
  double gap = 0.0;
  bool converged = true;
};

struct FlowTrajectory {
  std::vector<ImageGrid> states;  // u_0 = f ... u_N
  double dt = 0.0;
  std::vector<StepRecord> steps;  // one per prox solve, N entries

  int n_steps() const { return static_cast<int>(states.size()) - 1; }
  int nonconverged_steps() const;
  double max_gap() const;
};

/// Observer invoked after every flow step with (index i+1, u_{i+1}).
class FlowObserver {
 public:
  virtual ~FlowObserver() = default;
  virtual void on_state(int index, const ImageGrid& state, const StepRecord& record) = 0;
};

/// Evolves the TV flow for n_steps implicit steps of size dt, warm-starting
/// each prox from the previous dual field. Does not store states; the
/// observer receives each one. Index 0 (f itself) is reported first.
void flow_stream(const ImageGrid& f, double dt, int n_steps, const SolverConfig& cfg,
                 FlowObserver& observer);

FlowTrajectory flow_evolve(const ImageGrid& f, double dt, int n_steps, const SolverConfig& cfg);

}  // namespace tvspec
