#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace optbench {

// A value violates a documented invariant. The message names the field.
class ValidationError : public std::invalid_argument {
public:
    ValidationError(const std::string& field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(field) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// sigma * sqrt(T) too small for d1/d2 to be meaningful.
class DegenerateVolatilityError : public DomainError {
public:
    using DomainError::DomainError;
};

// Implied volatility inversion has no root for the given price.
class NoSolutionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Data could not be read, parsed, or is inconsistent with what was expected.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SchemaError : public DataError {
public:
    using DataError::DataError;
};

class RowError : public DataError {
public:
    RowError(std::size_t line, const std::string& what)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class IoError : public DataError {
public:
    using DataError::DataError;
};

class IncompatibleModelError : public DataError {
public:
    using DataError::DataError;
};

class InconsistentEvaluationError : public DataError {
public:
    using DataError::DataError;
};

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DivergenceError : public TrainingError {
public:
    DivergenceError(std::size_t epoch, double metric)
        : TrainingError("training diverged at epoch " + std::to_string(epoch) +
                        " (validation MAE " + std::to_string(metric) + ")"),
          epoch_(epoch) {}

    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

}  // namespace optbench
