#include "heattrace/cli.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "heattrace/coefficient_engine.hpp"
#include "heattrace/moment_tensors.hpp"
#include "heattrace/simplex_integrals.hpp"
#include "heattrace/spectral_validation.hpp"
#include "heattrace/symbol_engine.hpp"

namespace heattrace::cli {

namespace {

using Json = nlohmann::ordered_json;

struct Check {
  std::string name;
  double measured = 0.0;
  double bound = 0.0;
  bool pass = false;
};

[[noreturn]] void fail_at(const std::string& path, const std::string& what) {
  throw ConfigError("config error at " + path + ": " + what);
}

const Json& get(const Json& node, const std::string& path, const char* key) {
  if (!node.is_object()) fail_at(path, "expected an object");
  auto it = node.find(key);
  if (it == node.end()) fail_at(path + "/" + key, "missing required field");
  return *it;
}

const Json* find(const Json& node, const char* key) {
  if (!node.is_object()) return nullptr;
  auto it = node.find(key);
  return it == node.end() ? nullptr : &*it;
}

void check_keys(const Json& node, const std::string& path,
                std::initializer_list<const char*> allowed) {
  if (!node.is_object()) fail_at(path, "expected an object");
  for (const auto& item : node.items()) {
    bool known = false;
    for (const char* key : allowed) known = known || item.key() == key;
    if (!known) fail_at(path + "/" + item.key(), "unrecognized field");
  }
}

double as_number(const Json& node, const std::string& path) {
  if (!node.is_number()) fail_at(path, "expected a number");
  return node.get<double>();
}

long long as_integer(const Json& node, const std::string& path) {
  if (!node.is_number_integer()) fail_at(path, "expected an integer");
  return node.get<long long>();
}

bool as_bool(const Json& node, const std::string& path) {
  if (!node.is_boolean()) fail_at(path, "expected a boolean");
  return node.get<bool>();
}

std::string as_string(const Json& node, const std::string& path) {
  if (!node.is_string()) fail_at(path, "expected a string");
  return node.get<std::string>();
}

// Complex matrix encoded as rows of [re, im] pairs; square n x n when the
// expected size is nonnegative.
MatrixC complex_matrix(const Json& node, const std::string& path, int n = -1) {
  if (!node.is_array() || node.empty()) fail_at(path, "expected matrix rows");
  const int rows = static_cast<int>(node.size());
  if (n >= 0 && rows != n)
    fail_at(path, "expected " + std::to_string(n) + " rows");
  MatrixC m(rows, rows);
  for (int i = 0; i < rows; ++i) {
    const Json& row = node[i];
    const std::string row_path = path + "/" + std::to_string(i);
    if (!row.is_array() || static_cast<int>(row.size()) != rows)
      fail_at(row_path, "expected a square matrix row of width " +
                            std::to_string(rows));
    for (int j = 0; j < rows; ++j) {
      const Json& entry = row[j];
      const std::string entry_path = row_path + "/" + std::to_string(j);
      if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number() ||
          !entry[1].is_number())
        fail_at(entry_path, "expected a [re, im] pair");
      m(i, j) = Complex(entry[0].get<double>(), entry[1].get<double>());
    }
  }
  return m;
}

MatrixR real_matrix(const Json& node, const std::string& path, int n) {
  if (!node.is_array() || static_cast<int>(node.size()) != n)
    fail_at(path, "expected " + std::to_string(n) + " matrix rows");
  MatrixR m(n, n);
  for (int i = 0; i < n; ++i) {
    const Json& row = node[i];
    const std::string row_path = path + "/" + std::to_string(i);
    if (!row.is_array() || static_cast<int>(row.size()) != n)
      fail_at(row_path, "expected a row of width " + std::to_string(n));
    for (int j = 0; j < n; ++j) {
      if (!row[j].is_number())
        fail_at(row_path + "/" + std::to_string(j), "expected a number");
      m(i, j) = row[j].get<double>();
    }
  }
  return m;
}

void require_symmetric(const MatrixR& m, const std::string& path) {
  if ((m - m.transpose()).norm() > 1e-12 * (1.0 + m.norm()))
    fail_at(path, "metric block is not symmetric");
}

std::vector<MatrixC> cmatrix_list(const Json* node, const std::string& path,
                                  int count, int n) {
  std::vector<MatrixC> list(count, MatrixC::Zero(n, n));
  if (node == nullptr) return list;
  if (!node->is_array() || static_cast<int>(node->size()) != count)
    fail_at(path, "expected " + std::to_string(count) + " matrices");
  for (int i = 0; i < count; ++i)
    list[i] = complex_matrix((*node)[i], path + "/" + std::to_string(i), n);
  return list;
}

std::vector<std::vector<MatrixC>> cmatrix_grid(const Json* node,
                                               const std::string& path,
                                               int count, int n) {
  std::vector<std::vector<MatrixC>> grid(
      count, std::vector<MatrixC>(count, MatrixC::Zero(n, n)));
  if (node == nullptr) return grid;
  if (!node->is_array() || static_cast<int>(node->size()) != count)
    fail_at(path, "expected " + std::to_string(count) + " matrix rows");
  for (int r = 0; r < count; ++r) {
    const Json& row = (*node)[r];
    const std::string row_path = path + "/" + std::to_string(r);
    if (!row.is_array() || static_cast<int>(row.size()) != count)
      fail_at(row_path, "expected " + std::to_string(count) + " matrices");
    for (int s = 0; s < count; ++s)
      grid[r][s] =
          complex_matrix(row[s], row_path + "/" + std::to_string(s), n);
  }
  return grid;
}

PointJet parse_jet(const Json& node, const std::string& path) {
  check_keys(node, path, {"d", "g_inv", "dg_inv", "ddg_inv"});
  PointJet jet;
  jet.d = static_cast<int>(as_integer(get(node, path, "d"), path + "/d"));
  if (jet.d < 1) fail_at(path + "/d", "dimension must be positive");
  const int d = jet.d;
  if (const Json* g = find(node, "g_inv")) {
    jet.g_inv = real_matrix(*g, path + "/g_inv", d);
    require_symmetric(jet.g_inv, path + "/g_inv");
  } else {
    jet.g_inv = MatrixR::Identity(d, d);
  }
  jet.dg_inv.assign(d, MatrixR::Zero(d, d));
  if (const Json* dg = find(node, "dg_inv")) {
    if (!dg->is_array() || static_cast<int>(dg->size()) != d)
      fail_at(path + "/dg_inv", "expected " + std::to_string(d) + " blocks");
    for (int r = 0; r < d; ++r) {
      const std::string block = path + "/dg_inv/" + std::to_string(r);
      jet.dg_inv[r] = real_matrix((*dg)[r], block, d);
      require_symmetric(jet.dg_inv[r], block);
    }
  }
  jet.ddg_inv.assign(d, std::vector<MatrixR>(d, MatrixR::Zero(d, d)));
  if (const Json* ddg = find(node, "ddg_inv")) {
    if (!ddg->is_array() || static_cast<int>(ddg->size()) != d)
      fail_at(path + "/ddg_inv", "expected " + std::to_string(d) + " rows");
    for (int r = 0; r < d; ++r) {
      const Json& row = (*ddg)[r];
      const std::string row_path = path + "/ddg_inv/" + std::to_string(r);
      if (!row.is_array() || static_cast<int>(row.size()) != d)
        fail_at(row_path, "expected " + std::to_string(d) + " blocks");
      for (int s = 0; s < d; ++s) {
        const std::string block = row_path + "/" + std::to_string(s);
        jet.ddg_inv[r][s] = real_matrix(row[s], block, d);
        require_symmetric(jet.ddg_inv[r][s], block);
      }
    }
  }
  return jet;
}

OperatorCoefficients parse_operator(const Json& node, const std::string& path,
                                    int d) {
  check_keys(node, path, {"u", "du", "ddu", "v", "dv", "w"});
  OperatorCoefficients op;
  op.u = complex_matrix(get(node, path, "u"), path + "/u");
  const int n = static_cast<int>(op.u.rows());
  op.w = complex_matrix(get(node, path, "w"), path + "/w", n);
  op.du = cmatrix_list(find(node, "du"), path + "/du", d, n);
  op.ddu = cmatrix_grid(find(node, "ddu"), path + "/ddu", d, n);
  op.v = cmatrix_list(find(node, "v"), path + "/v", d, n);
  op.dv = cmatrix_grid(find(node, "dv"), path + "/dv", d, n);
  return op;
}

TrigMatrixField parse_field(const Json& node, const std::string& path,
                            int d) {
  check_keys(node, path, {"c0", "modes"});
  TrigMatrixField field;
  field.c0 = complex_matrix(get(node, path, "c0"), path + "/c0");
  const int n = static_cast<int>(field.c0.rows());
  if (const Json* modes = find(node, "modes")) {
    if (!modes->is_array()) fail_at(path + "/modes", "expected an array");
    for (std::size_t i = 0; i < modes->size(); ++i) {
      const Json& mode = (*modes)[i];
      const std::string mode_path = path + "/modes/" + std::to_string(i);
      check_keys(mode, mode_path, {"k", "c"});
      const Json& k = get(mode, mode_path, "k");
      if (!k.is_array() || static_cast<int>(k.size()) != d)
        fail_at(mode_path + "/k",
                "expected " + std::to_string(d) + " frequency components");
      TrigMatrixField::Mode parsed;
      for (int j = 0; j < d; ++j)
        parsed.k.push_back(static_cast<int>(
            as_integer(k[j], mode_path + "/k/" + std::to_string(j))));
      parsed.c = complex_matrix(get(mode, mode_path, "c"), mode_path + "/c", n);
      field.modes.push_back(std::move(parsed));
    }
  }
  return field;
}

TorusModel parse_model(const Json& node, const std::string& path) {
  check_keys(node, path, {"d", "length", "cutoff", "constant", "varying"});
  TorusModel model;
  model.d = static_cast<int>(as_integer(get(node, path, "d"), path + "/d"));
  model.length = as_number(get(node, path, "length"), path + "/length");
  model.cutoff =
      static_cast<int>(as_integer(get(node, path, "cutoff"), path + "/cutoff"));
  const Json* constant = find(node, "constant");
  const Json* varying = find(node, "varying");
  if ((constant != nullptr) == (varying != nullptr))
    fail_at(path, "expected exactly one of \"constant\" and \"varying\"");
  if (constant != nullptr) {
    const std::string cpath = path + "/constant";
    check_keys(*constant, cpath, {"u", "v", "w"});
    ConstantCoefficients cc;
    cc.u = complex_matrix(get(*constant, cpath, "u"), cpath + "/u");
    const int n = static_cast<int>(cc.u.rows());
    cc.v = cmatrix_list(find(*constant, "v"), cpath + "/v", model.d, n);
    cc.w = complex_matrix(get(*constant, cpath, "w"), cpath + "/w", n);
    model.coefficients = std::move(cc);
  } else {
    const std::string vpath = path + "/varying";
    check_keys(*varying, vpath, {"u", "w"});
    VaryingCoefficients vc;
    vc.u = parse_field(get(*varying, vpath, "u"), vpath + "/u", model.d);
    vc.w = parse_field(get(*varying, vpath, "w"), vpath + "/w", model.d);
    model.coefficients = std::move(vc);
  }
  return model;
}

std::string format_number(double x) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.6e", x);
  return buffer;
}

Json check_json(const Check& check) {
  Json j;
  j["name"] = check.name;
  j["measured"] = check.measured;
  j["bound"] = check.bound;
  j["pass"] = check.pass;
  return j;
}

Check make_check(std::string name, double measured, double bound) {
  return Check{std::move(name), measured, bound, measured <= bound};
}

// ---------------------------------------------------------------- modes ---

void run_a0(const Json& payload, double tolerance, Json& results,
            std::vector<Check>& checks) {
  check_keys(payload, "/payload", {"jet", "u", "check_oracle", "oracle_order"});
  const PointJet jet = parse_jet(get(payload, "/payload", "jet"),
                                 "/payload/jet");
  const MatrixC u = complex_matrix(get(payload, "/payload", "u"),
                                   "/payload/u");
  const double value = a0_local(jet, u);
  results["d"] = jet.d;
  results["a0"] = value;

  bool check_oracle = false;
  if (const Json* flag = find(payload, "check_oracle"))
    check_oracle = as_bool(*flag, "/payload/check_oracle");
  if (!check_oracle) return;
  int order = 32;
  if (const Json* node = find(payload, "oracle_order"))
    order = static_cast<int>(as_integer(*node, "/payload/oracle_order"));

  // Independent fibre quadrature: a0 = (2 pi)^{-d} int tr exp(-|xi|^2_g u).
  Eigen::SelfAdjointEigenSolver<MatrixC> es(u);
  if (es.info() != Eigen::Success)
    throw DomainError("a0 oracle: eigendecomposition of u failed");
  const auto& lambda = es.eigenvalues();
  auto integrand = [&](const VectorR& xi) {
    const double h = xi.dot(jet.g_inv * xi);
    Complex sum = 0.0;
    for (int i = 0; i < lambda.size(); ++i) sum += std::exp(-h * lambda(i));
    MatrixC out(1, 1);
    out(0, 0) = sum;
    return out;
  };
  const double oracle =
      xi_integral_oracle(integrand, jet.d, order)(0, 0).real();
  const double rel = std::abs(value - oracle) / std::abs(oracle);
  results["oracle"] = oracle;
  results["rel_error"] = rel;
  checks.push_back(make_check("a0 vs fibre quadrature", rel, tolerance));
}

void run_a1(const Json& payload, double tolerance, Json& results,
            std::vector<Check>& checks) {
  check_keys(payload, "/payload", {"jet", "operator"});
  const PointJet jet = parse_jet(get(payload, "/payload", "jet"),
                                 "/payload/jet");
  const OperatorCoefficients op = parse_operator(
      get(payload, "/payload", "operator"), "/payload/operator", jet.d);
  const Complex pipeline = a1_local_pipeline(jet, op);
  results["d"] = jet.d;
  results["a1"] = Json::array({pipeline.real(), pipeline.imag()});
  if (jet.d == 4) {
    const Complex raw = a1_local_raw(jet, op);
    results["closed_form"] = Json::array({raw.real(), raw.imag()});
    const double rel =
        std::abs(raw - pipeline) / std::max(1e-30, std::abs(raw));
    results["rel_error"] = rel;
    checks.push_back(
        make_check("closed form vs term pipeline", rel, tolerance));
  }
}

void run_integrals(const Json& payload, double tolerance, long long seed,
                   Json& results, std::vector<Check>& checks) {
  check_keys(payload, "/payload",
             {"d", "p", "k", "samples", "r_min", "r_max"});
  const int d =
      static_cast<int>(as_integer(get(payload, "/payload", "d"), "/payload/d"));
  const int p =
      static_cast<int>(as_integer(get(payload, "/payload", "p"), "/payload/p"));
  const int k =
      static_cast<int>(as_integer(get(payload, "/payload", "k"), "/payload/k"));
  if (d < 1) fail_at("/payload/d", "dimension must be positive");
  if (p < 0) fail_at("/payload/p", "insertion excess must be nonnegative");
  if (k < 0) fail_at("/payload/k", "arity excess must be nonnegative");
  int samples = 200;
  if (const Json* node = find(payload, "samples"))
    samples = static_cast<int>(as_integer(*node, "/payload/samples"));
  if (samples < 1) fail_at("/payload/samples", "need at least one sample");
  double r_min = 0.1, r_max = 10.0;
  if (const Json* node = find(payload, "r_min"))
    r_min = as_number(*node, "/payload/r_min");
  if (const Json* node = find(payload, "r_max"))
    r_max = as_number(*node, "/payload/r_max");
  if (!(r_min > 0.0) || !(r_max > r_min))
    fail_at("/payload/r_min", "need 0 < r_min < r_max");

  // Log-uniform weight tuples from the raw engine stream so that the draw
  // sequence is platform-independent.
  std::mt19937 rng(static_cast<std::uint32_t>(seed));
  auto draw = [&]() {
    const double unit = rng() * (1.0 / 4294967296.0);
    return r_min * std::exp(unit * std::log(r_max / r_min));
  };
  const double alpha = 0.5 * d + p;
  double worst = 0.0;
  std::vector<double> r(k + 1);
  for (int s = 0; s < samples; ++s) {
    for (double& value : r) value = draw();
    const double closed = integral(d, p, k, r);
    const double reference = k == 0 ? std::pow(r[0], -alpha)
                                    : integral_quadrature(alpha, k, r);
    worst = std::max(worst,
                     std::abs(closed - reference) / std::abs(reference));
  }
  results["alpha"] = alpha;
  results["d"] = d;
  results["p"] = p;
  results["k"] = k;
  results["samples"] = samples;
  results["r_min"] = r_min;
  results["r_max"] = r_max;
  results["max_rel_error"] = worst;
  checks.push_back(make_check("closed form vs quadrature", worst, tolerance));
}

void run_symbols(const Json& payload, Json& results,
                 std::vector<Check>& checks) {
  check_keys(payload, "/payload", {"order", "specialize"});
  const int order = static_cast<int>(
      as_integer(get(payload, "/payload", "order"), "/payload/order"));
  if (order < 0 || order > 1)
    fail_at("/payload/order", "only expansion orders 0 and 1 are implemented");
  bool specialize = false;
  if (const Json* node = find(payload, "specialize"))
    specialize = as_bool(*node, "/payload/specialize");

  results["order"] = order;
  Json insertions = Json::array();
  for (const auto& [kk, pp] : symbols::count_required_operators(order))
    insertions.push_back(Json::array({kk, pp}));
  results["required_insertions"] = insertions;

  if (order == 1) {
    auto terms = symbols::push_derivatives_all(
        symbols::expand_volterra_order1());
    if (specialize) terms = symbols::specialize_scalar_metric(terms);
    Json listing = Json::array();
    for (auto& term : terms) listing.push_back(symbols::to_string(term));
    results["term_count"] = static_cast<int>(terms.size());
    results["terms"] = listing;
    if (!specialize) {
      checks.push_back(make_check(
          "rewritten term count",
          std::abs(static_cast<double>(terms.size()) - 14.0), 0.0));
    }
  }
}

void run_validate_torus(const Json& payload, double tolerance, Json& results,
                        std::vector<Check>& checks) {
  check_keys(payload, "/payload",
             {"model", "order", "points", "factor", "grid"});
  const TorusModel model =
      parse_model(get(payload, "/payload", "model"), "/payload/model");
  int order = 3, points = 12, grid = 32;
  double factor = 8.0;
  if (const Json* node = find(payload, "order"))
    order = static_cast<int>(as_integer(*node, "/payload/order"));
  if (const Json* node = find(payload, "points"))
    points = static_cast<int>(as_integer(*node, "/payload/points"));
  if (const Json* node = find(payload, "factor"))
    factor = as_number(*node, "/payload/factor");
  if (const Json* node = find(payload, "grid"))
    grid = static_cast<int>(as_integer(*node, "/payload/grid"));
  if (order < 1) fail_at("/payload/order", "fit order must be positive");
  if (points < order + 2)
    fail_at("/payload/points", "need at least order + 2 sample points");

  const bool constant =
      std::holds_alternative<ConstantCoefficients>(model.coefficients);
  const double t0 = suggested_start_time(model);

  // The window must satisfy two computed conditions: the truncation tail is
  // already below 1e-8 of the trace at t0 (by construction of t0), and the
  // first neglected power of t must contribute less than 1% at the top of
  // the window. Shrink the span until the second holds.
  double span = factor;
  std::vector<HeatTraceSample> samples;
  AsymptoticFit fit;
  double contribution = 0.0;
  for (;;) {
    const std::vector<double> times = geometric_times(t0, span, points);
    samples = constant ? heat_trace_constant(model, times)
                       : heat_trace_varying(model, times);
    fit = fit_asymptotics(samples, model.d, order);
    contribution = 0.0;
    if (points >= order + 4) {
      const AsymptoticFit probe = fit_asymptotics(samples, model.d, order + 1);
      const double t_max = times.back();
      const double y_max =
          std::pow(t_max, 0.5 * model.d) * samples.back().trace;
      contribution = std::abs(probe.coefficients[order + 1]) *
                     std::pow(t_max, order + 1) / std::abs(y_max);
    }
    if (contribution < 0.01) break;
    span *= 0.5;
    if (span < 1.5)
      throw DomainError(
          "validate-torus: no window satisfies the order condition; raise "
          "the cutoff or lower the fit order");
  }

  const double a0_target = torus_a0_integral(model, grid);
  const Complex a1_target = torus_a1_integral(model, grid);
  const double rel0 =
      std::abs(fit.coefficients[0] - a0_target) / std::abs(a0_target);
  const double rel1 = std::abs(fit.coefficients[1] - a1_target.real()) /
                      std::abs(a1_target.real());

  results["t0"] = t0;
  results["span"] = span;
  Json sample_rows = Json::array();
  for (const auto& s : samples) {
    Json row;
    row["t"] = s.t;
    row["trace"] = s.trace;
    row["truncation_bound"] = s.truncation_bound;
    sample_rows.push_back(row);
  }
  results["samples"] = sample_rows;
  results["condition"] = fit.condition;
  results["residual"] = fit.residual;
  Json leading;
  leading["fitted"] = fit.coefficients[0];
  leading["uncertainty"] = fit.uncertainties[0];
  leading["target"] = a0_target;
  leading["rel_error"] = rel0;
  results["a0"] = leading;
  Json subleading;
  subleading["fitted"] = fit.coefficients[1];
  subleading["uncertainty"] = fit.uncertainties[1];
  subleading["target"] = a1_target.real();
  subleading["rel_error"] = rel1;
  results["a1"] = subleading;

  checks.push_back(
      make_check("leading fit vs density integral", rel0, tolerance));
  checks.push_back(
      make_check("subleading fit vs density integral", rel1, tolerance));
  if (points >= order + 4)
    checks.push_back(make_check("window order condition", contribution, 0.01));
}

double default_tolerance(const std::string& mode) {
  if (mode == "validate-torus") return 2e-2;
  return 1e-8;
}

}  // namespace

Outcome run(const std::string& config_text, const Overrides& overrides) {
  Json config;
  try {
    config = Json::parse(config_text);
  } catch (const nlohmann::json::parse_error& error) {
    throw ConfigError(std::string("config error at /: not valid JSON (") +
                      error.what() + ")");
  }
  check_keys(config, "",
             {"version", "mode", "tolerance", "seed", "output", "payload"});
  const long long version =
      as_integer(get(config, "", "version"), "/version");
  if (version != 1) fail_at("/version", "unrecognized version");

  std::string mode = overrides.mode;
  if (mode.empty()) {
    const Json* node = find(config, "mode");
    if (node == nullptr) fail_at("/mode", "missing required field");
    mode = as_string(*node, "/mode");
  }
  const bool known_mode = mode == "a0" || mode == "a1" || mode == "integrals" ||
                          mode == "symbols" || mode == "validate-torus";
  if (!known_mode) fail_at("/mode", "unrecognized mode \"" + mode + "\"");

  double tolerance = overrides.tolerance;
  if (tolerance < 0.0) {
    if (const Json* node = find(config, "tolerance"))
      tolerance = as_number(*node, "/tolerance");
  }
  if (tolerance < 0.0) tolerance = default_tolerance(mode);
  if (!(tolerance > 0.0)) fail_at("/tolerance", "tolerance must be positive");

  long long seed = overrides.seed;
  if (seed < 0) {
    if (const Json* node = find(config, "seed"))
      seed = as_integer(*node, "/seed");
  }
  if (seed < 0) seed = 2024;

  std::string out_path = overrides.out;
  if (out_path.empty()) {
    if (const Json* node = find(config, "output"))
      out_path = as_string(*node, "/output");
  }

  const Json& payload = get(config, "", "payload");
  Json results;
  std::vector<Check> checks;
  if (mode == "a0") {
    run_a0(payload, tolerance, results, checks);
  } else if (mode == "a1") {
    run_a1(payload, tolerance, results, checks);
  } else if (mode == "integrals") {
    run_integrals(payload, tolerance, seed, results, checks);
  } else if (mode == "symbols") {
    run_symbols(payload, results, checks);
  } else {
    run_validate_torus(payload, tolerance, results, checks);
  }

  bool passed = true;
  for (const Check& check : checks) passed = passed && check.pass;

  Json report;
  report["schema"] = "heattrace-report/1";
  report["mode"] = mode;
  report["tolerance"] = tolerance;
  if (mode == "integrals") report["seed"] = seed;
  report["config"] = config;
  report["results"] = results;
  Json check_rows = Json::array();
  for (const Check& check : checks) check_rows.push_back(check_json(check));
  report["checks"] = check_rows;
  report["passed"] = passed;

  std::string summary = "mode: " + mode + "\n";
  for (const Check& check : checks) {
    summary += std::string("  [") + (check.pass ? "PASS" : "FAIL") + "] " +
               check.name + ": measured " + format_number(check.measured) +
               " bound " + format_number(check.bound) + "\n";
  }
  summary += std::string("overall: ") + (passed ? "PASS" : "FAIL") + "\n";

  Outcome outcome;
  outcome.report_json = report.dump(2) + "\n";
  outcome.summary = std::move(summary);
  outcome.out_path = std::move(out_path);
  outcome.passed = passed;
  return outcome;
}

}  // namespace heattrace::cli
