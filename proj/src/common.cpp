#include <atomic>
#include <iostream>

#include "kwave/common.hpp"

namespace kwave::log {

namespace {
std::atomic<bool> g_quiet{false};
}

void warn(const std::string& message) {
  if (!g_quiet.load()) std::cerr << "kwave: warning: " << message << '\n';
}

void set_quiet(bool quiet) { g_quiet.store(quiet); }

bool quiet() { return g_quiet.load(); }

}  // namespace kwave::log
