#include <unistd.h>

#include <iostream>

#include "app/commands.hpp"

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  proselab::app::CliIo io{std::cin, std::cout, std::cerr, ::isatty(STDIN_FILENO) != 0};
  return proselab::app::run_cli(argc, argv, io);
}
