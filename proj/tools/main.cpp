#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "heattrace/cli.hpp"
#include "heattrace/common.hpp"

// Exit codes: 0 success, 2 malformed config / usage, 3 domain violation,
// 4 cross-check failure (a requested oracle comparison beyond tolerance).
int main(int argc, char** argv) {
  CLI::App app{
      "Local heat-trace coefficients: closed forms, symbolic expansion and "
      "spectral cross-checks"};
  std::string config_path;
  heattrace::cli::Overrides overrides;
  app.add_option("-c,--config", config_path, "Path to the JSON config file")
      ->required();
  app.add_option("-m,--mode", overrides.mode,
                 "Override the mode (a0, a1, integrals, symbols, "
                 "validate-torus)");
  app.add_option("-t,--tolerance", overrides.tolerance,
                 "Override the pass/fail tolerance");
  app.add_option("-o,--out", overrides.out, "Override the report output path");
  app.add_option("-s,--seed", overrides.seed,
                 "Override the sampling seed (integrals mode)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& error) {
    const int code = app.exit(error);
    return code == 0 ? 0 : 2;
  }

  try {
    std::ifstream in(config_path);
    if (!in)
      throw heattrace::ConfigError("config error at /: cannot read \"" +
                                   config_path + "\"");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const heattrace::cli::Outcome outcome =
        heattrace::cli::run(buffer.str(), overrides);
    if (outcome.out_path.empty()) {
      std::cout << outcome.report_json;
    } else {
      std::ofstream out(outcome.out_path);
      if (!out)
        throw heattrace::ConfigError("config error at /output: cannot write \"" +
                                     outcome.out_path + "\"");
      out << outcome.report_json;
    }
    std::cout << outcome.summary;
    return outcome.passed ? 0 : 4;
  } catch (const heattrace::ConfigError& error) {
    std::cerr << error.what() << "\n";
    return 2;
  } catch (const heattrace::CrossCheckError& error) {
    std::cerr << error.what() << "\n";
    return 4;
  } catch (const heattrace::DomainError& error) {
    std::cerr << error.what() << "\n";
    return 3;
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 1;
  }
}
