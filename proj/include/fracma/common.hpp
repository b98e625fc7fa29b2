#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>

namespace fracma {

/// Point in R^n for n <= 2; the second coordinate is ignored when n == 1.
using Point = std::array<double, 2>;

/// Failure categories; the CLI maps each one to its own exit code.
enum class ErrorKind { Config, Validation, NonConvergence, Invariant, EmptyContact, Internal };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

/// Process-wide cap on worker threads (1 means run inline).
void set_worker_count(int workers);
int worker_count();

/// Runs body(i) for i in [0, count). Each index is handled by exactly one
/// worker, so results written per index do not depend on scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace fracma
