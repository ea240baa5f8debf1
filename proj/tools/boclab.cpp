#include "boclab/cli/app.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return boclab::cli::run_app({argv + 1, argv + argc}, std::cout, std::cerr);
}
