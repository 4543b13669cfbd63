#include "nedp/log.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace nedp {
namespace {

std::mutex g_sink_mutex;
WarningSink g_sink;

}  // namespace

WarningSink set_warning_sink(WarningSink sink) {
  std::lock_guard lock(g_sink_mutex);
  return std::exchange(g_sink, std::move(sink));
}

void warn(const std::string& message) {
  std::lock_guard lock(g_sink_mutex);
  if (g_sink) {
    g_sink(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

}  // namespace nedp
