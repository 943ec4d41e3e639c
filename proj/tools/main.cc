#include "cli.h"

int main(int argc, char** argv) { return ctxrnnt::cli::run(argc, argv); }
