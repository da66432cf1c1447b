#pragma once

#include <doctest.h>

#include <functional>

#include "motionsynth/errors.hpp"

namespace motionsynth::test {

// Runs fn and reports which error code it threw; doctest-friendly.
inline Err thrown_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a motionsynth::Error");
  return Err::parse;
}

}  // namespace motionsynth::test
