#pragma once

namespace ldalink {

// Entry point of the command-line tool. Returns 0 on success, 1 on bad
// input or usage, 2 on internal failure.
int run_cli(int argc, char** argv);

}  // namespace ldalink
