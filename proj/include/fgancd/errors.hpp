#pragma once

#include <stdexcept>
#include <string>

namespace fgancd {

// Root of the library's error hierarchy. The CLI maps ValidationError to
// exit code 2 and NumericError to exit code 3.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : Error {
    using Error::Error;
};

struct NumericError : Error {
    using Error::Error;
};

// --- numeric / engine errors ---

struct ShapeMismatch : NumericError {
    using NumericError::NumericError;
};

struct NotPositiveDefinite : NumericError {
    using NumericError::NumericError;
};

struct SingularMatrix : NumericError {
    using NumericError::NumericError;
};

struct NonFiniteValue : NumericError {
    using NumericError::NumericError;
};

struct LossNotScalar : NumericError {
    using NumericError::NumericError;
};

struct TapeEmpty : NumericError {
    using NumericError::NumericError;
};

struct NonPositiveTemperature : NumericError {
    using NumericError::NumericError;
};

struct PdRejectionLimit : NumericError {
    using NumericError::NumericError;
};

struct CholeskyFailureAfterJitter : NumericError {
    using NumericError::NumericError;
};

struct NonFiniteGradient : NumericError {
    using NumericError::NumericError;
};

// --- input / usage errors ---

struct SyntaxError : ValidationError {
    using ValidationError::ValidationError;
};

struct RaggedRow : ValidationError {
    using ValidationError::ValidationError;
};

struct SelfLoop : ValidationError {
    using ValidationError::ValidationError;
};

struct VertexOutOfRange : ValidationError {
    using ValidationError::ValidationError;
};

struct AsymmetricBidirected : ValidationError {
    using ValidationError::ValidationError;
};

struct InvalidVertex : ValidationError {
    using ValidationError::ValidationError;
};

struct CyclicDirectedPart : ValidationError {
    using ValidationError::ValidationError;
};

struct DimensionMismatch : ValidationError {
    using ValidationError::ValidationError;
};

struct ConfigError : ValidationError {
    using ValidationError::ValidationError;
};

}  // namespace fgancd
