#pragma once

#include <stdexcept>
#include <string>

namespace saarb {

// Bad user-supplied parameters (distribution specs, config files, missing
// moments). The CLI maps this to exit code 2.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A numeric procedure failed to converge (quadrature on a non-integrable
// integrand, moment of an unbounded map).
class divergence_error : public std::runtime_error {
 public:
  explicit divergence_error(const std::string& msg) : std::runtime_error(msg) {}
};

// The requested operation needs data the problem does not provide
// (e.g. no true-optimum oracle).
class unsupported_error : public std::runtime_error {
 public:
  explicit unsupported_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace saarb
