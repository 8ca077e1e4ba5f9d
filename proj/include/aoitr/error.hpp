#pragma once

#include <stdexcept>
#include <string>

namespace aoitr {

// Library-wide error type. Contract violations (bad shapes, degenerate
// geometry, invalid configs) throw this; callers that want a soft failure
// catch it at the boundary.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw Error(msg);
}

}  // namespace aoitr
