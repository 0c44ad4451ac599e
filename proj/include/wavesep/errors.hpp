#ifndef WAVESEP_ERRORS_HPP
#define WAVESEP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace wavesep {

// Exit codes reported by the CLI. Library errors carry the code they map to.
enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitDataset = 3,
    kExitDiverged = 4,
    kExitIntegrity = 5,
};

class Error : public std::runtime_error {
public:
    Error(std::string message, int exit_code)
        : std::runtime_error(std::move(message)), exit_code_(exit_code) {}
    int exit_code() const { return exit_code_; }

private:
    int exit_code_;
};

// Invalid configuration, shape mismatches, precondition violations.
class ConfigError : public Error {
public:
    explicit ConfigError(std::string message)
        : Error(std::move(message), kExitConfig) {}
};

// Input shorter than the kernel span of a valid convolution.
class InsufficientContextError : public ConfigError {
public:
    explicit InsufficientContextError(std::string message)
        : ConfigError(std::move(message)) {}
};

// Missing stems, mismatched lengths or rates, degenerate references.
class DatasetError : public Error {
public:
    explicit DatasetError(std::string message)
        : Error(std::move(message), kExitDataset) {}
};

// Non-finite losses or gradients during optimization.
class DivergedError : public Error {
public:
    explicit DivergedError(std::string message)
        : Error(std::move(message), kExitDiverged) {}
};

// Corrupt or truncated files, unsupported codecs.
class IntegrityError : public Error {
public:
    explicit IntegrityError(std::string message)
        : Error(std::move(message), kExitIntegrity) {}
};

} // namespace wavesep

#endif
