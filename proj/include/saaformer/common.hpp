#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace saaformer {

using Shape = std::vector<std::size_t>;

// Library error hierarchy. The CLI maps these onto process exit codes:
// FormatError -> 2 (data/format), ConstraintError -> 3 (constraint violation),
// ShapeError/ValueError -> 2.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeError : Error {
  using Error::Error;
};
struct ValueError : Error {
  using Error::Error;
};
struct FormatError : Error {
  using Error::Error;
};
struct ConstraintError : Error {
  using Error::Error;
};

inline std::size_t numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t e : s) n *= e;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << 'x';
    os << s[i];
  }
  os << ']';
  return os.str();
}

inline void require_shape(bool ok, const std::string& what, const Shape& a, const Shape& b) {
  if (!ok) throw ShapeError(what + ": " + shape_str(a) + " vs " + shape_str(b));
}

}  // namespace saaformer
