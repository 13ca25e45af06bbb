#include <vector>
#include <string>

#include "mgcnet/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mgcnet::run_cli(args);
}
