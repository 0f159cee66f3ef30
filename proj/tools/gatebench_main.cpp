#include "gatebench/cli.hpp"

int main(int argc, char** argv) { return gatebench::dispatch(argc, argv); }
