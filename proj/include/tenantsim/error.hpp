#pragma once

#include <stdexcept>
#include <string>

namespace tenantsim {

enum class Errc {
  invalid_rate,
  invalid_argument,
  unknown_model,
  invalid_allocation,
  capacity,
  empty_sample,
  undefined_emu,
  incomplete_profile,
  insufficient_profile,
  unschedulable_model,
  initialization,
  config,
  missing_profile,
};

const char* to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace tenantsim
