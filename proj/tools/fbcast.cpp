#include "fbcast/harness.hpp"

int main(int argc, char** argv) { return fbcast::run_cli(argc, argv); }
