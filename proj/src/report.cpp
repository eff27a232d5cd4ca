#include "osl/report.hpp"

#include <algorithm>

namespace osl {

BoundReport BoundReport::make(std::string label, double bound_value, double measured) {
  BoundReport r;
  r.label = std::move(label);
  r.bound_value = bound_value;
  r.measured = measured;
  r.margin = bound_value - measured;
  r.passed = r.margin >= -1e-9 * std::max(1.0, bound_value);
  return r;
}

}  // namespace osl
