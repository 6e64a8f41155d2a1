#pragma once

#include <stdexcept>
#include <string>

namespace presem {

enum class Errc {
  usage,              // precondition violated by the caller
  duplicate_id,
  unknown_reference,
  range,
  empty_selection,    // a selector matched nothing
  no_view,            // observer has no edges into the target
  unvalidated,
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

}  // namespace presem
