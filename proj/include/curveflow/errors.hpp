#pragma once

#include <stdexcept>
#include <string>

namespace curveflow {

// Base class for everything this library throws on purpose.
struct FlowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// -- curvature_core ---------------------------------------------------------

struct NonPositiveRadii : FlowError {
    using FlowError::FlowError;
};

struct InvalidSpec : FlowError {
    using FlowError::FlowError;
};

// -- sphere_field -----------------------------------------------------------

struct NotConvex : FlowError {
    using FlowError::FlowError;
};

// -- numerical aborts; `when` is the flow time at which the run died --------

struct NumericalAbort : FlowError {
    double when = 0.0;
    NumericalAbort(const std::string& msg, double t) : FlowError(msg), when(t) {}
};

struct ConvexityLost : NumericalAbort {
    using NumericalAbort::NumericalAbort;
};

struct NonPositiveSupport : NumericalAbort {
    using NumericalAbort::NumericalAbort;
};

struct NumericalBlowup : NumericalAbort {
    using NumericalAbort::NumericalAbort;
};

// -- flow_engine ------------------------------------------------------------

struct BarrierUndefined : FlowError {
    using FlowError::FlowError;
};

struct DomainError : FlowError {
    using FlowError::FlowError;
};

struct InsufficientData : FlowError {
    using FlowError::FlowError;
};

struct NonPositiveValues : FlowError {
    using FlowError::FlowError;
};

// -- cli_runner -------------------------------------------------------------

struct ParseError : FlowError {
    using FlowError::FlowError;
};

struct RangeError : FlowError {
    using FlowError::FlowError;
};

}  // namespace curveflow
