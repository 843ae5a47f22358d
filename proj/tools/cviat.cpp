// Apache License, Version 2.0, refer to LICENSE

#include <iostream>

#include "cviat/cli.hpp"

int main(int argc, char** argv) {
  return cviat::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
