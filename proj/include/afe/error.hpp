#pragma once

#include <stdexcept>
#include <string>

namespace afe {

/// Base of every failure raised by the toolkit. The CLI maps the concrete
/// subclass onto a stable exit code, so new error kinds should derive from
/// the category they belong to rather than from Error directly.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Numerical kernel
class SingularMatrix : public Error {
  public:
    using Error::Error;
};
class NoConvergence : public Error {
  public:
    using Error::Error;
};
class NotSymmetric : public Error {
  public:
    using Error::Error;
};
class DimensionMismatch : public Error {
  public:
    using Error::Error;
};
class NonFiniteValue : public Error {
  public:
    using Error::Error;
};

// Input / configuration problems (exit code 2)
class ConfigError : public Error {
  public:
    using Error::Error;
};
class InvalidSpecs : public ConfigError {
  public:
    using ConfigError::ConfigError;
};
class InvalidPoleSpec : public ConfigError {
  public:
    using ConfigError::ConfigError;
};

// Operating-point feasibility (exit code 3)
class Infeasible : public Error {
  public:
    using Error::Error;
};
class InfeasibleLoad : public Infeasible {
  public:
    using Infeasible::Infeasible;
};
class ModulationLimit : public Infeasible {
  public:
    using Infeasible::Infeasible;
};
class InvalidOperatingPoint : public Infeasible {
  public:
    using Infeasible::Infeasible;
};
class DegenerateOperatingPoint : public Infeasible {
  public:
    using Infeasible::Infeasible;
};

// Structural (exit code 4)
class StructuralError : public Error {
  public:
    using Error::Error;
};
class Uncontrollable : public StructuralError {
  public:
    using StructuralError::StructuralError;
};
class Unobservable : public StructuralError {
  public:
    using StructuralError::StructuralError;
};
class MultiplicityExceeded : public StructuralError {
  public:
    using StructuralError::StructuralError;
};

// Simulation (exit code 6)
class SimulationError : public Error {
  public:
    using Error::Error;
};
class StiffnessGuard : public SimulationError {
  public:
    using SimulationError::SimulationError;
};
class NonFinite : public SimulationError {
  public:
    using SimulationError::SimulationError;
};
class InsufficientDecay : public SimulationError {
  public:
    using SimulationError::SimulationError;
};

} // namespace afe
