#include "lastiter/envelope.hpp"

#include <cmath>
#include <memory>
#include <sstream>

#include "lastiter/error.hpp"

namespace lastiter {

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double log_of(std::size_t t) { return std::log(static_cast<double>(t)); }

}  // namespace

GuaranteeEnvelope example31_envelope(double D, double G) {
  if (!(D > 0.0) || !(G > 0.0)) {
    throw InvalidParameter("example31 envelope requires D > 0 and G > 0");
  }
  return GuaranteeEnvelope([D, G](std::size_t t) { return D * G * (4.0 + 2.0 * log_of(t)); },
                           "example31:D=" + num(D) + ",G=" + num(G));
}

GuaranteeEnvelope constant_envelope(double c) {
  if (!std::isfinite(c)) {
    throw InvalidParameter("constant envelope must be finite");
  }
  return GuaranteeEnvelope([c](std::size_t) { return c; }, "constant:c=" + num(c));
}

GuaranteeEnvelope log_power_envelope(double c1, double c2, double c3) {
  return GuaranteeEnvelope(
      [c1, c2, c3](std::size_t t) { return c1 * std::pow(log_of(t), c2) + c3; },
      "log_power:c1=" + num(c1) + ",c2=" + num(c2) + ",c3=" + num(c3));
}

GuaranteeEnvelope tabulated_envelope(std::vector<double> values, std::string label) {
  if (values.empty()) {
    throw InvalidParameter("tabulated envelope needs at least one value");
  }
  auto table = std::make_shared<const std::vector<double>>(std::move(values));
  return GuaranteeEnvelope(
      [table](std::size_t t) {
        const std::size_t i = t == 0 ? 0 : t - 1;
        return i < table->size() ? (*table)[i] : table->back();
      },
      std::move(label));
}

}  // namespace lastiter
