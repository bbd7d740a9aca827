// Copyright (c) The revledger authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include <benchmark/benchmark.h>

// The distro's benchmark_main archive carries LTO bytecode from another
// compiler release, so the entry point is built here.
BENCHMARK_MAIN();
