#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "kwave/common.hpp"

int main(int argc, char** argv) {
  kwave::log::set_quiet(true);
  doctest::Context context(argc, argv);
  return context.run();
}
