#pragma once

// Entry point for the meshlab command-line tool. Kept as a library
// function so the thin main() stays testable.
//
// Exit codes: 0 success, 2 usage error, 3 infeasible or invalid input,
// 4 numeric failure.

namespace meshlab {

int run_cli(int argc, const char* const* argv);

}  // namespace meshlab
