// SPDX-License-Identifier: Apache-2.0
#include "graphdf/cli.hpp"

int main(int argc, char** argv) { return graphdf::run_command(argc, argv); }
