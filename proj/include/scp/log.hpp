#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>

namespace scp {

using WarningSink = std::function<void(std::string_view)>;

namespace detail {

struct WarningState {
  std::mutex mu;
  WarningSink sink = [](std::string_view msg) { std::clog << "warning: " << msg << '\n'; };
};

inline WarningState& warning_state() {
  static WarningState state;
  return state;
}

}  // namespace detail

/// Replaces the destination of library warnings. The default writes to std::clog.
inline void set_warning_sink(WarningSink sink) {
  auto& st = detail::warning_state();
  std::lock_guard lock(st.mu);
  st.sink = std::move(sink);
}

inline void warn(std::string_view msg) {
  auto& st = detail::warning_state();
  std::lock_guard lock(st.mu);
  if (st.sink) st.sink(msg);
}

}  // namespace scp
