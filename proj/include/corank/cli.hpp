#pragma once

namespace corank::cli {

// Entry point shared by the corank binary and the tests.
// Returns 0 on success, 1 on usage errors, 2 on data or config errors.
int run(int argc, char** argv);

}  // namespace corank::cli
