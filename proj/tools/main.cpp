#include "survmi/commands.hpp"

int main(int argc, char** argv) { return survmi::cli::run(argc, argv); }
