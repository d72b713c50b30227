#include "reds/cli.hpp"

#include <string>
#include <vector>

int main(int argc, char** argv) {
  return reds::cli::main(std::vector<std::string>(argv, argv + argc));
}
