#pragma once

#include <stdexcept>
#include <string>

namespace sap {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// linalg kernels
struct NotSymmetricError : Error { using Error::Error; };
struct NotPSDError : Error { using Error::Error; };
struct ZeroOperatorError : Error { using Error::Error; };

// sketching
struct NonpositiveDiagonalError : Error { using Error::Error; };
struct BadDistributionError : Error { using Error::Error; };

// spectral analysis
struct ExactUnavailableError : Error { using Error::Error; };
struct EnumerationTooLargeError : Error { using Error::Error; };
struct ParamOutOfRangeError : Error { using Error::Error; };
struct SpectralDiagnosticError : Error { using Error::Error; };

// solvers
struct InconsistentSystemError : Error { using Error::Error; };
struct ParamMismatchError : Error { using Error::Error; };
struct NotPDError : Error { using Error::Error; };

// harness
struct BadSpecError : Error { using Error::Error; };
struct DegenerateWindowError : Error { using Error::Error; };

// io
struct IoError : Error { using Error::Error; };

}  // namespace sap
