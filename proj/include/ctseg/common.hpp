#pragma once

#include <stdexcept>
#include <string>

namespace ctseg {

// Error categories map 1:1 onto the CLI exit codes (see tools/ctseg.cpp).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad user-supplied value (out-of-range parameter, invalid geometry, ...).
struct ParamError : Error {
    using Error::Error;
};

// Malformed file contents (bad magic, unparsable CSV, ...).
struct FormatError : Error {
    using Error::Error;
};

// Payload shorter than the header promises.
struct LengthError : FormatError {
    using FormatError::FormatError;
};

// Filesystem-level failure (missing file, unwritable path).
struct IoError : Error {
    using Error::Error;
};

// Tensor/layer shape mismatch.
struct ShapeError : Error {
    using Error::Error;
};

// Bad run configuration (unknown key, unparsable value).
struct ConfigError : Error {
    using Error::Error;
};

} // namespace ctseg
