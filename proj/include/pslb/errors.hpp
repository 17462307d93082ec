#pragma once

#include <stdexcept>
#include <string>

namespace pslb {

struct RankDeficientError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConvergenceError : std::runtime_error {
  ConvergenceError(const std::string& what, double g) : std::runtime_error(what), final_g(g) {}
  double final_g;
};

// Argument outside the domain of a formula (e.g. a log of a nonpositive value).
struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Invalid instance, parameter set or experiment configuration.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Algorithm requires information the chosen dynamics does not reveal.
struct DynamicsMismatchError : std::logic_error {
  using std::logic_error::logic_error;
};

struct ReversionDepthError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pslb
