#pragma once

#include <stdexcept>
#include <string>

namespace ksat {

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad arguments or malformed data (lengths, ranges, file contents).
struct invalid_input : error {
  using error::error;
};

// A configured cap (enumeration size, node budget) would be exceeded.
struct resource_limit : error {
  using error::error;
};

// An iterative solver failed to reach its residual target.
struct solver_failure : error {
  explicit solver_failure(const std::string& what, std::string trace = {})
      : error(what), trace(std::move(trace)) {}
  std::string trace;
};

}  // namespace ksat
