#pragma once

#include <stdexcept>
#include <string>

namespace hybgnn {

// Invalid configuration or violated precondition supplied by the caller.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Training produced a non-finite loss; the message carries diagnostics.
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace hybgnn
