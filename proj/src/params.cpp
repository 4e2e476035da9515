#include "bioconv/params.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace bioconv {

double ViscosityLaw::value(double c) const {
  switch (kind) {
    case Kind::Constant:
      return a;
    case Kind::Affine:
      return a + b * c;
    case Kind::Exponential:
      return std::exp(c);
  }
  return a;
}

double ViscosityLaw::derivative(double c) const {
  switch (kind) {
    case Kind::Constant:
      return 0.0;
    case Kind::Affine:
      return b;
    case Kind::Exponential:
      return std::exp(c);
  }
  return 0.0;
}

namespace {

double parse_double(const std::string& text, const std::string& context) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("invalid number '" + text + "' in " + context);
  }
  if (used != text.size() || !std::isfinite(value)) {
    throw std::invalid_argument("invalid number '" + text + "' in " + context);
  }
  return value;
}

}  // namespace

ViscosityLaw ViscosityLaw::parse(const std::string& text) {
  if (text == "exp") return exponential();
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("invalid viscosity law '" + text + "'");
  const std::string head = text.substr(0, colon);
  const std::string args = text.substr(colon + 1);
  if (head == "const") return constant(parse_double(args, "viscosity law"));
  if (head == "affine") {
    const auto comma = args.find(',');
    if (comma == std::string::npos) throw std::invalid_argument("affine viscosity needs 'affine:a,b'");
    return affine(parse_double(args.substr(0, comma), "viscosity law"),
                  parse_double(args.substr(comma + 1), "viscosity law"));
  }
  throw std::invalid_argument("invalid viscosity law '" + text + "'");
}

std::string ViscosityLaw::to_string() const {
  std::ostringstream out;
  out.precision(17);
  switch (kind) {
    case Kind::Constant:
      out << "const:" << a;
      break;
    case Kind::Affine:
      out << "affine:" << a << "," << b;
      break;
    case Kind::Exponential:
      out << "exp";
      break;
  }
  return out.str();
}

void ModelParams::validate() const {
  for (double v : {theta, swim_speed, gamma, gravity, alpha, viscosity_bound, final_time, tau, viscosity.a, viscosity.b}) {
    if (!std::isfinite(v)) throw std::invalid_argument("model parameters must be finite");
  }
  if (theta <= 0.0) throw std::invalid_argument("theta must be positive");
  if (tau <= 0.0) throw std::invalid_argument("tau must be positive");
  if (final_time < tau) throw std::invalid_argument("final time must be >= tau");
  if (swim_speed < 0.0) throw std::invalid_argument("swimming speed U must be nonnegative");
  if (gamma < 0.0) throw std::invalid_argument("gamma must be nonnegative");
  if (gravity < 0.0) throw std::invalid_argument("gravity must be nonnegative");
  if (viscosity_bound < 1.0) throw std::invalid_argument("viscosity bound k must be >= 1");
}

int ModelParams::num_steps() const {
  const double ratio = final_time / tau;
  const double steps = std::round(ratio);
  if (std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio)) {
    std::ostringstream msg;
    msg << "T/tau = " << ratio << " is not an integer";
    throw std::invalid_argument(msg.str());
  }
  if (steps < 2) throw std::invalid_argument("need at least two time steps (T/tau >= 2)");
  return static_cast<int>(steps);
}

}  // namespace bioconv
