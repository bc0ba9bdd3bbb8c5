#include <iostream>

#include "docintel/service/cli.hpp"

int main(int argc, char** argv) {
  return docintel::service::run_cli(argc, argv, std::cout, std::cerr);
}
