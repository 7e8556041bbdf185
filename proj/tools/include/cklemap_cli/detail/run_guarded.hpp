#pragma once

#include <exception>
#include <iostream>

#include "cklemap/error.hpp"

namespace cklemap::cli {

template <class Fn>
int run_guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const cklemap::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
}

}  // namespace cklemap::cli
