#include "boxfuse/cli.hpp"

int main(int argc, char** argv) { return boxfuse::cli_main(argc, argv); }
