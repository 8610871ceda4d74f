// Error taxonomy shared by the library and the command line tool.
//
// The three categories map onto distinct process exit codes so that callers
// can distinguish "you asked for something malformed" from "the numerics did
// not converge" from "this data set cannot support the requested estimator".
#pragma once

#include <stdexcept>
#include <string>

namespace robsur {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed configuration or arguments (unknown column, invalid restriction,
// inconsistent options).  CLI exit code 2.
struct ConfigError : Error {
  using Error::Error;
};

// An algorithm failed to converge or hit a numerical singularity that is not
// attributable to degenerate input.  CLI exit code 3.
struct NumericError : Error {
  using Error::Error;
};

// The data themselves cannot support the request: exact fit (more than the
// allowed fraction of zero residuals), singular covariance because m >= n,
// all elemental subsamples singular, and similar.  CLI exit code 4.
struct DegenerateDataError : Error {
  using Error::Error;
};

}  // namespace robsur
