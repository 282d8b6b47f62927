#include <string>
#include <vector>

#include "mvmi/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mvmi::dispatch(args);
}
