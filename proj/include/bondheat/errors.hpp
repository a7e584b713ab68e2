#pragma once

#include <stdexcept>
#include <string>

// Error taxonomy shared by all bondheat modules. Every throw carries the
// originating function name in the message ("func: detail").

namespace bondheat {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Input or configuration rejected before any computation ran.
struct ValidationError : Error {
    using Error::Error;
};

// Malformed file content (events CSV, config JSON).
struct ParseError : ValidationError {
    using ValidationError::ValidationError;
};

// Unit string missing, unknown, or dimensionally wrong for its field.
struct UnitError : ValidationError {
    using ValidationError::ValidationError;
};

// A linear material law evaluated outside its validity range (kappa <= 0).
struct NonPhysicalResult : Error {
    using Error::Error;
};

// Kirchhoff inversion past the parabola vertex, or evaluation outside a
// solution's (y, t) domain.
struct OutOfRange : Error {
    using Error::Error;
};
struct OutOfDomain : Error {
    using Error::Error;
};

// Iterative machinery failures.
struct ConvergenceFailure : Error {
    using Error::Error;
};
struct NoRoot : ConvergenceFailure {
    using ConvergenceFailure::ConvergenceFailure;
};
struct NewtonDivergence : ConvergenceFailure {
    using ConvergenceFailure::ConvergenceFailure;
};

// Optimiser linear-algebra failures.
struct DegenerateHessian : Error {
    using Error::Error;
};
struct SingularReducedSystem : Error {
    using Error::Error;
};

// A model evaluation inside the optimiser failed for one event; callers mask
// the event and continue.
struct SolverFailure : Error {
    using Error::Error;
};

}  // namespace bondheat
