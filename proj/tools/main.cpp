#include <vector>

#include "ardt/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ardt::cli::run_command(args);
}
