// Copyright 2026 The buffersim Authors
// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "buffersim/cli.hpp"

int main(int argc, char** argv) { return buffersim::run_cli(argc, argv, std::cout, std::cerr); }
