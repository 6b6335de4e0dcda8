#pragma once

#include <stdexcept>
#include <string>

namespace cryptoscan {

// Process exit codes used by the CLI. Library errors carry the code they
// should map to so main() stays a thin translation layer.
enum class ExitCode : int {
    ok = 0,
    internal_error = 1,
    bad_input = 2,
    transport_failure = 3,
    stale_pipeline = 4,
};

class Error : public std::runtime_error {
  public:
    Error(ExitCode code, std::string message)
        : std::runtime_error(std::move(message)), code_(code) {}

    ExitCode code() const noexcept { return code_; }

  private:
    ExitCode code_;
};

// Malformed configuration: bad model entries, missing templates, weight
// sums, duplicate ids.
class ConfigError : public Error {
  public:
    explicit ConfigError(std::string message)
        : Error(ExitCode::bad_input, std::move(message)) {}
};

// Unusable input data: unreadable exports, empty corpora, degenerate
// histograms, labels for unknown packages.
class DataError : public Error {
  public:
    explicit DataError(std::string message)
        : Error(ExitCode::bad_input, std::move(message)) {}
};

// A caller violated an internal precondition (vote row length mismatch,
// missing predictions). Indicates a bug, not bad user input.
class ContractError : public Error {
  public:
    explicit ContractError(std::string message)
        : Error(ExitCode::internal_error, std::move(message)) {}
};

// Every configured endpoint was unreachable; nothing was collected.
class TransportError : public Error {
  public:
    explicit TransportError(std::string message)
        : Error(ExitCode::transport_failure, std::move(message)) {}
};

// A consumed artifact no longer matches the hash its producing stage
// recorded; the pipeline refuses to build on top of it.
class StalePipelineError : public Error {
  public:
    explicit StalePipelineError(std::string message)
        : Error(ExitCode::stale_pipeline, std::move(message)) {}
};

} // namespace cryptoscan
