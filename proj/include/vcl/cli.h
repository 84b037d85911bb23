#ifndef VCL_CLI_H_
#define VCL_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace vcl {

// Runs one subcommand. `args` excludes the program name. Returns the
// process exit code; failures print a single line to `err`.
int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err);

}  // namespace vcl

#endif  // VCL_CLI_H_
