#include <cstdio>
#include <string>
#include <vector>

#include <qstree/cli.hpp>

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  qstree::cli::CliResult r = qstree::cli::dispatch(args);
  std::fwrite(r.output.data(), 1, r.output.size(), stdout);
  return r.exit_code;
}
