#include "lofree/logging.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace lofree {

namespace {

std::mutex g_mutex;
WarningHandler g_handler;

void default_handler(const std::string& message) {
  std::cerr << "warning: " << message << "\n";
}

}  // namespace

WarningHandler set_warning_handler(WarningHandler handler) {
  std::lock_guard<std::mutex> lock(g_mutex);
  WarningHandler previous = std::move(g_handler);
  g_handler = std::move(handler);
  return previous;
}

void warn(const std::string& message) {
  WarningHandler handler;
  {
    std::lock_guard<std::mutex> lock(g_mutex);
    handler = g_handler;
  }
  if (handler) {
    handler(message);
  } else {
    default_handler(message);
  }
}

}  // namespace lofree
