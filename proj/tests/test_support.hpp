#pragma once

#include <doctest.h>

#include "rcov/error.hpp"

namespace testing {

// Runs fn and returns the kind of the rcov::Error it throws.
template <class Fn>
rcov::ErrorKind error_kind(Fn&& fn) {
  try {
    fn();
  } catch (const rcov::Error& e) {
    return e.kind();
  }
  FAIL("expected an rcov::Error");
  return rcov::ErrorKind::InvalidArgument;
}

}  // namespace testing
