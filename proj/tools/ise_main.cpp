#include <iostream>

#include "ise/pipeline.hpp"

int main(int argc, char** argv) {
  return ise::pipeline::cli_main(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
