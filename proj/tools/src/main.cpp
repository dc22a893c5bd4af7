#include <iostream>

#include "deepkm/cli/app.hpp"

int main(int argc, char** argv) {
  return deepkm::cli::run_app(argc, argv, std::cout, std::cerr);
}
