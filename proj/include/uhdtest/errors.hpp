#pragma once

#include <stdexcept>
#include <string>

namespace uhdtest {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : Error { using Error::Error; };
struct NumericalError : Error { using Error::Error; };
struct EmptySpectrumError : Error { using Error::Error; };
struct SizeError : Error { using Error::Error; };
struct InvalidBandwidthError : Error { using Error::Error; };
struct QuadratureError : Error { using Error::Error; };
struct ConvergenceError : Error { using Error::Error; };
struct GridTooSmallError : Error { using Error::Error; };
struct DegenerateSpectrumError : Error { using Error::Error; };
struct NoUsableSplitsError : Error { using Error::Error; };
struct PSDError : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

}  // namespace uhdtest
