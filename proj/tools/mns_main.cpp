#include <string>
#include <vector>

#include "mns/cli.hpp"

int main(int argc, char** argv) {
  return mns::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
