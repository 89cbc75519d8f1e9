#pragma once

#include <memory>
#include <span>
#include <vector>

#include "rejoin/ad/jet.hpp"

namespace rejoin::collocation {

struct Bounds {
  double lower = 0.0;
  double upper = 0.0;

  bool fixed() const { return lower == upper; }
};

/// Continuous dynamics, path constraints, and running cost of one phase.
///
/// Both overloads must compute the same function; the Jet overload supplies
/// exact first and second derivatives.
class PhaseModel {
 public:
  virtual ~PhaseModel() = default;

  virtual int num_states() const = 0;
  virtual int num_controls() const = 0;
  virtual int num_path() const { return 0; }
  virtual bool has_running_cost() const { return false; }

  virtual void evaluate(double t, std::span<const double> x, std::span<const double> u,
                        std::span<double> rate, std::span<double> path, double& cost) const = 0;
  virtual void evaluate(const ad::Jet& t, std::span<const ad::Jet> x,
                        std::span<const ad::Jet> u, std::span<ad::Jet> rate,
                        std::span<ad::Jet> path, ad::Jet& cost) const = 0;
};

/// Implements both PhaseModel overloads with one member template
///
///   template <class T> void eval(const T& t, span<const T> x, span<const T> u,
///                                span<T> rate, span<T> path, T& cost) const;
template <class Derived>
class PhaseModelBase : public PhaseModel {
 public:
  void evaluate(double t, std::span<const double> x, std::span<const double> u,
                std::span<double> rate, std::span<double> path, double& cost) const override {
    static_cast<const Derived&>(*this).eval(t, x, u, rate, path, cost);
  }
  void evaluate(const ad::Jet& t, std::span<const ad::Jet> x, std::span<const ad::Jet> u,
                std::span<ad::Jet> rate, std::span<ad::Jet> path, ad::Jet& cost) const override {
    static_cast<const Derived&>(*this).eval(t, x, u, rate, path, cost);
  }
};

enum class EndpointKind { kInitialTime, kFinalTime, kInitialState, kFinalState };

/// One argument of an endpoint function: a phase boundary time or a
/// component of a phase boundary state.
struct EndpointRef {
  int phase = 0;
  EndpointKind kind = EndpointKind::kFinalTime;
  int index = 0;
};

/// Smooth function of phase boundary times and states, used for boundary,
/// linkage, and Mayer cost terms. At most 16 arguments.
class EndpointFunction {
 public:
  virtual ~EndpointFunction() = default;

  virtual std::vector<EndpointRef> arguments() const = 0;
  virtual int num_outputs() const = 0;
  virtual void evaluate(std::span<const double> args, std::span<double> out) const = 0;
  virtual void evaluate(std::span<const ad::Jet> args, std::span<ad::Jet> out) const = 0;
};

/// Implements both EndpointFunction overloads with one member template
///
///   template <class T> void eval(span<const T> args, span<T> out) const;
template <class Derived>
class EndpointFunctionBase : public EndpointFunction {
 public:
  void evaluate(std::span<const double> args, std::span<double> out) const override {
    static_cast<const Derived&>(*this).eval(args, out);
  }
  void evaluate(std::span<const ad::Jet> args, std::span<ad::Jet> out) const override {
    static_cast<const Derived&>(*this).eval(args, out);
  }
};

struct EndpointConstraint {
  std::shared_ptr<const EndpointFunction> function;
  std::vector<Bounds> bounds;
};

struct PhaseSpec {
  std::shared_ptr<const PhaseModel> model;
  /// The first phase's initial time must be fixed; it is the time origin.
  Bounds initial_time;
  Bounds final_time;
  std::vector<Bounds> state;
  /// Tighter bounds at the first and last support points (empty = none).
  std::vector<Bounds> initial_state;
  std::vector<Bounds> final_state;
  std::vector<Bounds> control;
  std::vector<Bounds> path;
};

struct OptimalControlProblem {
  std::vector<PhaseSpec> phases;
  std::vector<EndpointConstraint> endpoint_constraints;
  /// Optional single-output endpoint function added to the objective.
  std::shared_ptr<const EndpointFunction> mayer;

  /// Throws std::invalid_argument describing the first inconsistency.
  void validate() const;
};

}  // namespace rejoin::collocation
