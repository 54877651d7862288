#pragma once

#include <mutex>

namespace klgauss::detail {

// FFTW's planner is not re-entrant; every plan creation and destruction in
// the library takes this lock. Executing an existing plan does not.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace klgauss::detail
