#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sepm {

/// Every failure class the library can raise. The numeric value doubles as
/// the CLI exit code, so values must stay distinct and nonzero.
enum class ErrorCode : int {
    usage = 2,
    parse = 3,
    io = 4,
    invalid_argument = 5,
    check_failed = 6,
    no_convergence = 10,
    occlusion_failed = 11,
    not_occluded = 12,
    unstable_step = 13,
    never_settles = 14,
    address_out_of_range = 15,
    invalid_port = 16,
    dont_care_present = 17,
    intent_invalid = 18,
    corrupt_registry = 19,
    calibration_infeasible = 20,
    unknown_node = 21,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }
    [[nodiscard]] int exit_code() const noexcept { return static_cast<int>(code_); }

private:
    ErrorCode code_;
};

class NoConvergence : public Error {
public:
    NoConvergence(const std::string& message, double last_residual, int iterations)
        : Error(ErrorCode::no_convergence, message),
          last_residual_(last_residual),
          iterations_(iterations) {}

    [[nodiscard]] double last_residual() const noexcept { return last_residual_; }
    [[nodiscard]] int iterations() const noexcept { return iterations_; }

private:
    double last_residual_;
    int iterations_;
};

class ParseError : public Error {
public:
    ParseError(const std::string& file, int line, const std::string& message)
        : Error(ErrorCode::parse, file + ":" + std::to_string(line) + ": " + message),
          line_(line) {}

    [[nodiscard]] int line() const noexcept { return line_; }

private:
    int line_;
};

class CorruptRegistry : public Error {
public:
    CorruptRegistry(const std::string& file, int line, const std::string& message)
        : Error(ErrorCode::corrupt_registry,
                file + ":" + std::to_string(line) + ": " + message),
          line_(line) {}

    [[nodiscard]] int line() const noexcept { return line_; }

private:
    int line_;
};

}  // namespace sepm
