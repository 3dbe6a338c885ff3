#pragma once

namespace sentinel {

/// Entry point of the `sentinel` binary. Returns the process exit code:
/// 0 on success, 2 on validation/usage/config errors, 1 on runtime errors.
int run_cli(int argc, char** argv);

}  // namespace sentinel
