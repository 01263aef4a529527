#include <string>
#include <vector>

#include "linedet/commands.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return linedet::cli::run(args);
}
