// Copyright (c) 2026 penselect contributors
// SPDX-License-Identifier: Apache-2.0

#include "penselect/cli.hpp"

int main(int argc, char** argv) { return penselect::cli_main(argc, argv); }
