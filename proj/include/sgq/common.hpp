#pragma once

#include <stdexcept>
#include <string>

namespace sgq {

// Error categories surfaced by the CLI as distinct exit codes.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Split { train, val, test };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

}  // namespace sgq
