#include "fkflow/cli.hpp"

int main(int argc, char** argv) {
  return fkflow::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
