#ifndef ITRP_CLI_HPP
#define ITRP_CLI_HPP

#include <string>
#include <vector>

namespace itrp {

// Exit codes: 0 identifiable (or plain success), 10 non-identifiable,
// 20 suspect start, 1 usage or runtime error.
int run_cli(int argc, char** argv);
int run_cli(const std::vector<std::string>& args);  // without argv[0]

}  // namespace itrp

#endif
