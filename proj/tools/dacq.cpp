#include "dacq/cli.hpp"

int main(int argc, char** argv) { return dacq::cli::run(argc, argv); }
