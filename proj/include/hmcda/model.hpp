/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include <string>
#include <vector>

#include "hmcda/state.hpp"

namespace hmcda {

/**
 * Autonomous ODE model dx/dt = f(x) integrated with classical fourth-order
 * Runge-Kutta at a fixed step.
 *
 * Derived classes supply the tendency f, its Jacobian-vector product and its
 * transposed Jacobian-vector product. The tangent-linear and adjoint
 * propagators are the exact linearization and transpose of the discrete RK4
 * map, so the adjoint-based gradient of any cost built on `propagate` is the
 * exact gradient of that discrete cost.
 *
 * Implementations must be immutable after construction; every method is
 * reentrant.
 */
class Model {
 public:
  virtual ~Model() = default;

  virtual Index nvar() const = 0;
  virtual double step_size() const = 0;
  virtual std::string name() const = 0;

  virtual void tendency(const Vector& x, Vector& out) const = 0;
  /// out = (∂f/∂x)(x) · dx
  virtual void tendency_tl(const Vector& x, const Vector& dx, Vector& out) const = 0;
  /// out = (∂f/∂x)(x)ᵀ · lambda
  virtual void tendency_ad(const Vector& x, const Vector& lambda, Vector& out) const = 0;

  /// Number of integrator steps between t0 and t1. Throws InvalidArgument if
  /// t1 < t0 or the interval is not a whole number of steps.
  Index steps_between(double t0, double t1) const;

  /// One RK4 step in place. Throws Diverged on a non-finite result.
  void step(Vector& x) const;
  /// Tangent-linear of one step started from basepoint `x`.
  void step_tl(const Vector& x, Vector& dx) const;
  /// Adjoint of one step started from basepoint `x`.
  void step_ad(const Vector& x, Vector& lambda) const;

  /// Advances `x` by `nsteps` steps in place. Overrides must match `step`
  /// bit for bit.
  virtual void advance(Vector& x, Index nsteps) const;

  StateVector propagate(const StateVector& x0, double t0, double t1) const;
  StateVector propagate_tlm(const StateVector& basepoint, const StateVector& dx0, double t0, double t1) const;
  StateVector propagate_adjoint(const StateVector& basepoint, const StateVector& lambda1, double t0,
                                double t1) const;

  /// States at each requested time (ascending, all >= t0).
  std::vector<StateVector> trajectory(const StateVector& x0, double t0, const std::vector<double>& times) const;
};

/// Particle in the potential V(x) = (x+1)²(x-1)², dx/dt = -V'(x), applied
/// component-wise.
class DoubleWellModel final : public Model {
 public:
  explicit DoubleWellModel(double step = 1e-3, Index nvar = 1);

  Index nvar() const override { return nvar_; }
  double step_size() const override { return step_; }
  std::string name() const override { return "double_well"; }

  void tendency(const Vector& x, Vector& out) const override;
  void tendency_tl(const Vector& x, const Vector& dx, Vector& out) const override;
  void tendency_ad(const Vector& x, const Vector& lambda, Vector& out) const override;

  void advance(Vector& x, Index nsteps) const override;

 private:
  double step_;
  Index nvar_;
};

/// Lorenz-96 on a cyclic grid: dx_i/dt = (x_{i+1} - x_{i-2}) x_{i-1} - x_i + F.
class Lorenz96Model final : public Model {
 public:
  explicit Lorenz96Model(Index n = 40, double forcing = 8.0, double step = 0.005);

  Index nvar() const override { return n_; }
  double step_size() const override { return step_; }
  std::string name() const override { return "lorenz96"; }
  double forcing() const { return forcing_; }

  void tendency(const Vector& x, Vector& out) const override;
  void tendency_tl(const Vector& x, const Vector& dx, Vector& out) const override;
  void tendency_ad(const Vector& x, const Vector& lambda, Vector& out) const override;

 private:
  Index n_;
  double forcing_;
  double step_;
};

/// dx/dt = 0; the propagator is the identity.
class IdentityModel final : public Model {
 public:
  explicit IdentityModel(Index nvar, double step = 1.0);

  Index nvar() const override { return nvar_; }
  double step_size() const override { return step_; }
  std::string name() const override { return "identity"; }

  void tendency(const Vector& x, Vector& out) const override;
  void tendency_tl(const Vector& x, const Vector& dx, Vector& out) const override;
  void tendency_ad(const Vector& x, const Vector& lambda, Vector& out) const override;

 private:
  Index nvar_;
  double step_;
};

}  // namespace hmcda
