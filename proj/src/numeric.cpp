#include "lvm/types.hpp"

#include <cmath>
#include <iostream>
#include <limits>

#include "lvm/log.hpp"

namespace lvm {

double log_sum_exp(const Vec& a) {
  if (a.size() == 0) return -std::numeric_limits<double>::infinity();
  const double m = a.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((a.array() - m).exp().sum());
}

namespace {
WarningSink& sink() {
  static WarningSink s = [](const std::string& m) { std::cerr << "warning: " << m << '\n'; };
  return s;
}
}  // namespace

WarningSink set_warning_sink(WarningSink s) {
  WarningSink old = std::move(sink());
  sink() = std::move(s);
  return old;
}

void warn(const std::string& message) {
  if (sink()) sink()(message);
}

}  // namespace lvm
