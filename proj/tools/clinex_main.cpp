#include <string>
#include <vector>

#include "clinex/cli.hpp"

int main(int argc, char** argv) { return clinex::run_cli(std::vector<std::string>(argv + 1, argv + argc)); }
