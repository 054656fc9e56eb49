#ifndef HVP_ERRORS_HPP
#define HVP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace hvp {

// Invalid parameters, grids or configuration values.
class config_error : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite coefficients or fields during time integration.
class instability_error : public std::runtime_error {
public:
  instability_error(const std::string& what, int stage = -1)
      : std::runtime_error(what), stage_(stage) {}
  int stage() const noexcept { return stage_; }

private:
  int stage_;
};

// RK4 step size of the rescaling ODE exceeds the stability bound.
class stability_error : public std::runtime_error {
public:
  stability_error(const std::string& what, int max_stable_order)
      : std::runtime_error(what), max_stable_order_(max_stable_order) {}
  int max_stable_order() const noexcept { return max_stable_order_; }

private:
  int max_stable_order_;
};

// Charge neutrality violated beyond tolerance.
class neutrality_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class io_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace hvp

#endif // HVP_ERRORS_HPP
