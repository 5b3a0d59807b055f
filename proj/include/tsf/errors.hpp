#pragma once

#include <stdexcept>
#include <string>

namespace tsf {

// Error categories map to the CLI exit codes: config 2, data 3, numerical 4.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace tsf
