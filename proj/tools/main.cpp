#include "dentkit/cli.hpp"

int main(int argc, char** argv) {
    return dentkit::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
