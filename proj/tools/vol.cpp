#include "cli.hpp"

int main(int argc, char** argv) { return vol::run(argc, argv); }
