#pragma once

namespace apo {

// Command-line entry point. Subcommands: run, compare, reproduce-lb,
// check-theory. Returns 0 on success, 1 when a run or check fails, and 2 for
// configuration or usage errors.
int cli_main(int argc, char** argv);

}  // namespace apo
