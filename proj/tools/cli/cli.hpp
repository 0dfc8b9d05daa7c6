#ifndef MATHCUR_TOOLS_CLI_HPP_
#define MATHCUR_TOOLS_CLI_HPP_

#include <iostream>
#include <string>
#include <vector>

namespace mathcur::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 1;
inline constexpr int kExitInvariant = 2;

/// Runs one `mathcur` invocation. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace mathcur::cli

#endif  // MATHCUR_TOOLS_CLI_HPP_
