#pragma once

namespace gatebench {

/// Parses argv, runs one subcommand and returns the process exit code:
/// 0 ok, 1 runtime error (JSON error record on stderr), 2 usage error,
/// 3 validator rejection during a run.
int dispatch(int argc, char** argv);

}  // namespace gatebench
