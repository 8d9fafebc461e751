#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace camsim {

/// Bad input: malformed configuration, out-of-range parameter, bad pattern.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical failure inside a solver or fitter.
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& what, double worst_residual = 0.0,
                         long step_index = -1)
        : std::runtime_error(what), worst_residual_(worst_residual), step_index_(step_index) {}

    [[nodiscard]] double worst_residual() const { return worst_residual_; }
    [[nodiscard]] long step_index() const { return step_index_; }

private:
    double worst_residual_;
    long step_index_;
};

/// The IV fitter could not produce a usable model.
class FitError : public std::runtime_error {
public:
    FitError(const std::string& what, std::vector<std::string> diagnostics)
        : std::runtime_error(what), diagnostics_(std::move(diagnostics)) {}

    [[nodiscard]] const std::vector<std::string>& diagnostics() const { return diagnostics_; }

private:
    std::vector<std::string> diagnostics_;
};

/// A file could not be read or written.
class IoError : public std::runtime_error {
public:
    IoError(const std::string& what, std::string path)
        : std::runtime_error(what + ": " + path), path_(std::move(path)) {}

    [[nodiscard]] const std::string& path() const { return path_; }

private:
    std::string path_;
};

}  // namespace camsim
