#include "gwm/cli.hpp"

int main(int argc, char** argv) { return gwm::cli::run(argc, argv); }
