#pragma once

#include <stdexcept>
#include <string>

namespace sr::core {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// File cannot be read/written; message carries the path.
struct IoError : Error {
    using Error::Error;
};

// Keyframe without a source counterpart.
struct PairingError : Error {
    using Error::Error;
};

// Incompatible image dimensions.
struct DimensionError : Error {
    using Error::Error;
};

// Caller violated an operation precondition.
struct ContractError : Error {
    using Error::Error;
};

// Bad configuration value or unknown key/tag/kind.
struct ConfigError : Error {
    using Error::Error;
};

// Backend unavailable or misbehaving.
struct BackendError : Error {
    using Error::Error;
};

} // namespace sr::core
