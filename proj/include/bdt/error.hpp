#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bdt {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A layer or model description violates its dimension invariants.
class InvalidSpecError : public Error {
 public:
  using Error::Error;
};

/// Index (layer, partition point, device, ...) outside its admissible range.
class OutOfRangeError : public Error {
 public:
  using Error::Error;
};

/// Decision violates a partition range or frequency cap or uses a zero
/// frequency/rate where work is pending.
class InfeasibleDecisionError : public Error {
 public:
  using Error::Error;
};

/// No decision satisfies the per-slot constraints.
class InfeasibleSlotError : public Error {
 public:
  explicit InfeasibleSlotError(const std::string& what, std::size_t slot = 0)
      : Error(what), slot_(slot) {}
  std::size_t slot() const { return slot_; }

 private:
  std::size_t slot_;
};

/// Total block-query rate is zero, so no block can ever be produced.
class NoMinerError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine failed to bracket or converge.
class SolverError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace bdt
