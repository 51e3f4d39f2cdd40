#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace vto {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configuration value violates its constraint. `field()` names it.
class InvalidConfig : public Error {
 public:
  InvalidConfig(std::string field, const std::string& constraint)
      : Error(field + ": " + constraint), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Offload requested over a link whose Shannon rate is zero.
class ZeroRate : public Error {
 public:
  ZeroRate() : Error("transmission rate is zero") {}
};

class NonFiniteFitness : public Error {
 public:
  explicit NonFiniteFitness(std::size_t particle)
      : Error("non-finite fitness at particle " + std::to_string(particle)), particle_(particle) {}
  std::size_t particle() const noexcept { return particle_; }

 private:
  std::size_t particle_;
};

class DegenerateDataset : public Error {
 public:
  using Error::Error;
};

class MissingModel : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace vto
