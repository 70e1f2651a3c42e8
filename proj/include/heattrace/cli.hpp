#pragma once

// Command-line front end: configuration ingestion, dispatch and report
// emission.
//
// The configuration is a JSON document:
//
//   {
//     "version": 1,
//     "mode": "a0" | "a1" | "integrals" | "symbols" | "validate-torus",
//     "tolerance": <number, optional; mode-specific default>,
//     "seed": <integer, optional; randomized suites only>,
//     "output": <report path, optional>,
//     "payload": { ...mode-specific input... }
//   }
//
// Complex matrices are nested arrays of [re, im] pairs; real matrices are
// nested arrays of numbers. Mode payloads:
//
//   a0              {"jet": {...}, "u": cmatrix,
//                    "check_oracle": bool = false, "oracle_order": int = 32}
//   a1              {"jet": {...}, "operator": {"u", "du", "ddu", "v",
//                    "dv", "w"}}  (derivative blocks optional, default zero;
//                    in dimension four the closed form cross-checks the
//                    term pipeline)
//   integrals       {"d", "p", "k", "samples": int = 200,
//                    "r_min": 0.1, "r_max": 10}
//   symbols         {"order": 1, "specialize": bool = false}
//   validate-torus  {"model": {"d", "length", "cutoff",
//                    "constant": {"u","v","w"} | "varying": {"u","w"}},
//                    "order": 3, "points": 12, "factor": 8}
//
// The jet object {"d", "g_inv", "dg_inv", "ddg_inv"} defaults to the flat
// metric; derivative blocks default to zero.
//
// Reports are deterministic: identical configurations produce byte-identical
// JSON (fixed field order, shortest-round-trip number printing) and the
// parsed configuration is echoed verbatim under "config". Error contract:
// ConfigError names the first offending config path (binary exit 2),
// DomainError reports a computation precondition failure (exit 3),
// CrossCheckError a failed internal certificate (exit 4); a report whose
// tolerance checks fail is returned normally with passed = false (exit 4).

#include <string>

#include "heattrace/common.hpp"

namespace heattrace::cli {

// Command-line overrides; any unset member defers to the configuration.
struct Overrides {
  std::string mode;        // "" = use the config's mode
  double tolerance = -1.0; // < 0 = use the config's / the mode default
  long long seed = -1;     // < 0 = use the config's / the default seed
  std::string out;         // "" = use the config's output path, if any
};

struct Outcome {
  std::string report_json; // deterministic pretty-printed JSON report
  std::string summary;     // aligned text, one line per check
  std::string out_path;    // resolved report destination ("" = none)
  bool passed = false;     // every tolerance check passed
};

// Parses and validates the configuration text, executes the requested mode
// and assembles the report. See above for the error contract.
Outcome run(const std::string& config_text, const Overrides& overrides = {});

}  // namespace heattrace::cli
