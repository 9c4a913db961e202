// Writes a synthetic P x T recording for the CLI scripts.
#include <cstdlib>
#include <iostream>

#include "cli_fixture.hpp"

int main(int argc, char** argv) {
  if (argc != 5) {
    std::cerr << "usage: make_recording out.csv P T seed\n";
    return 2;
  }
  vdp::testing::write_recording(argv[1], std::atoi(argv[2]), std::atoi(argv[3]),
                                std::strtoull(argv[4], nullptr, 10));
  return 0;
}
