#ifndef OSL_REPORT_HPP
#define OSL_REPORT_HPP

#include <map>
#include <string>

namespace osl {

/// An evaluated bound next to the quantity it is supposed to dominate.
struct BoundReport {
  std::string label;
  double bound_value = 0.0;
  double measured = 0.0;
  double margin = 0.0;  ///< bound_value - measured
  bool passed = false;
  std::map<std::string, double> details;
  std::map<std::string, std::string> notes;

  /// passed <=> margin >= -1e-9 * max(1, bound_value)
  static BoundReport make(std::string label, double bound_value, double measured);
};

}  // namespace osl

#endif  // OSL_REPORT_HPP
