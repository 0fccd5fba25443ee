#include <string>
#include <vector>

#include "hetrolat/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return hetrolat::dispatch(args);
}
