#include <csignal>
#include <iostream>

#include "plc_cli.hpp"

namespace {
extern "C" void on_signal(int) { plc::cli::g_interrupt.store(true); }
}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  return plc::cli::run(argc, argv, std::cout, std::cerr);
}
