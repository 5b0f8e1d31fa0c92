// Writes a synthetic background set (PNGs plus poses.csv) for CLI tests.
#include <cstdlib>
#include <iostream>

#include "support.hpp"

int main(int argc, char** argv) {
  if (argc != 6) {
    std::cerr << "usage: make_backgrounds DIR COUNT WIDTH HEIGHT SEED\n";
    return 1;
  }
  const std::filesystem::path dir(argv[1]);
  std::filesystem::create_directories(dir);
  testing::write_background_set(dir, std::atoi(argv[2]), std::atoi(argv[3]), std::atoi(argv[4]),
                                std::strtoull(argv[5], nullptr, 10));
  return 0;
}
