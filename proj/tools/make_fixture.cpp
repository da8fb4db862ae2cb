#include <iostream>
#include <string>

#include "fixture.hpp"

int main(int argc, char** argv) {
  if (argc != 3 || (std::string(argv[1]) != "planted" && std::string(argv[1]) != "full")) {
    std::cerr << "usage: ise-fixture planted|full DIR\n";
    return 2;
  }
  if (std::string(argv[1]) == "planted") {
    ise::fixture::write_planted(argv[2]);
  } else {
    ise::fixture::write_full(argv[2]);
  }
  return 0;
}
