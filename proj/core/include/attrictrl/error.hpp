#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace attrictrl {

// Process exit codes used by the command-line tool.
enum class ExitCode : int {
  kSuccess = 0,
  kContract = 1,
  kIo = 2,
  kDivergence = 3,
};

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual ExitCode exit_code() const noexcept { return ExitCode::kContract; }
};

// Violated precondition: bad shapes, empty inputs, out-of-range arguments.
class ContractError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Mathematically undefined input (zero vector in a cosine, etc.).
class DomainError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::kIo; }
};

class DecodeError : public IoError {
 public:
  DecodeError(const std::string& what, std::size_t offset)
      : IoError(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class UnsupportedFormatError : public IoError {
 public:
  using IoError::IoError;
};

class DegenerateDistributionError : public ContractError {
 public:
  using ContractError::ContractError;
};

class UnbalanceableBinError : public ContractError {
 public:
  explicit UnbalanceableBinError(std::size_t bin)
      : ContractError("bin " + std::to_string(bin) +
                      " is empty and cannot be oversampled"),
        bin_(bin) {}
  std::size_t bin() const noexcept { return bin_; }

 private:
  std::size_t bin_;
};

class UndefinedRateError : public ContractError {
 public:
  using ContractError::ContractError;
};

class TrainingDivergenceError : public Error {
 public:
  TrainingDivergenceError(long step, double loss)
      : Error("training diverged at step " + std::to_string(step) +
              " (loss = " + std::to_string(loss) + ")"),
        step_(step) {}
  long step() const noexcept { return step_; }
  ExitCode exit_code() const noexcept override { return ExitCode::kDivergence; }

 private:
  long step_;
};

}  // namespace attrictrl
