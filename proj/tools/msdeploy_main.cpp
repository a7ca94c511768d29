#include <string>
#include <vector>

#include "msdeploy/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return msdeploy::run_cli(args);
}
