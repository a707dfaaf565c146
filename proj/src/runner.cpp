#include "pspace/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "pspace/dsl.hpp"
#include "pspace/inequalities.hpp"
#include "pspace/mecke.hpp"
#include "pspace/semigroup.hpp"
#include "pspace/worked_examples.hpp"

namespace pspace {

namespace {

const std::string kMonotoneEither = "(DF >= 0 and D2F <= 0) or (DF <= 0 and D2F >= 0)";

std::vector<CatalogEntry> build_catalog() {
  return {
      {"poincare", "inequalities", "Var F <= sum_i w_i E[(D_i F)^2]", "none", {}, {}, 1},
      {"modified_lsi", "inequalities",
       "Ent F <= sum_i w_i E[Phi(F + D_i F) - Phi(F) - (log F + 1) D_i F]",
       "F >= floor; floor 0 only with 0 log 0 at flat states", {}, {"floor"}, 1},
      {"min_form_lsi", "inequalities", "Ent F <= sum_i w_i E[min(|D_i F|^2 / F, D_i F D_i log F)]",
       "F >= floor; floor 0 only with 0 log 0 at flat states", {}, {"floor"}, 1},
      {"pathwise_lemma", "inequalities",
       "(a^q - b^q)^2 / b^q <= q^2/(q-1) (a - b)(a^(q-1) - b^(q-1)) max((a/b)^q, 1)",
       "a, b >= 0, q > 1, 1/0 = inf", {"a", "b", "q"}, {}, 0},
      {"entropy_power", "inequalities", "Ent(G^q) <= q^2/(q-1) E Gamma(G^(q-1), G)", "G >= 0, DG <= 0",
       {"q"}, {}, 1},
      {"restricted_hypercontractivity", "inequalities", "||P_t F||_(1 + (p-1) e^t) <= ||F||_p",
       "F >= 0, DF <= 0", {"p", "t"}, {}, 1},
      {"weak_hypercontractivity", "inequalities", "||exp(P_t F)||_(e^t) <= ||exp F||_1", "F bounded",
       {"t"}, {}, 1},
      {"talagrand", "inequalities",
       "Var F <= c sum_i w_i ||D_i F||_2^2 / (1 + log(||D_i F||_2 / ||D_i F||_1))", kMonotoneEither, {},
       {"constant"}, 1},
      {"l1_variance", "inequalities",
       "Var F <= 11 (2 ||F||_inf)^alpha(F) sum_i w_i psi(E|D_i F|)", kMonotoneEither + ", F bounded", {},
       {}, 1},
      {"concentration", "inequalities", "P[F - E F > t] <= exp(-t^2 / (2 alpha^2))", "DF <= 0",
       {"threshold"}, {}, 1},
      {"lsi_failure", "inequalities",
       "-pi([k+1, inf)) log pi([k+1, inf)) <= C pi(k) fails for every C", "pi = Poisson(1)", {"k_max"},
       {"C"}, 0},
      {"mecke", "identities", "E sum_i c_i h(c, i) = E sum_i w_i h(c + e_i, i)", "h(c, i) = F(c)", {}, {},
       1},
      {"mean_preservation", "identities", "E P_t F = E F", "none", {"t"}, {}, 1},
      {"commutation", "identities", "D_i P_t F = e^-t P_t D_i F", "exact mode", {"t"}, {}, 1},
      {"semigroup_property", "identities", "P_s P_t F = P_(s+t) F", "exact mode", {"s", "t"}, {}, 1},
      {"generator", "identities", "(P_h F - F) / h -> L F", "exact mode", {"h"}, {}, 1},
      {"symmetry", "identities", "E[F L G] = E[G L F] = -E Gamma(F, G)", "exact mode", {}, {}, 2},
      {"pointwise_gradient", "identities", "|D_i P_t F| <= 2 e^-t", "|F| <= 1, exact mode", {"t"}, {}, 1},
      {"integrated_gradient", "identities",
       "||D P_t F||_(L^p(L^2(w))) <= e^-t / sqrt(1 - e^-t) ||F||_p", "p >= 2, t > 0", {"p", "t"}, {}, 1},
      {"maxima", "examples", "Var F <= 2 m e^-m / (1 + m/2)", "none", {"m"}, {}, 0},
      {"one_dim_comparison", "examples", "Var G <= 2 lambda E[g^2] / (1 + log(||g||_2 / ||g||_1))",
       "g = 1{j <= M}", {"M", "lambda"}, {}, 0},
      {"counterexample_fk", "examples", "Var F_k <= c pi(k-1) / (1 + log(1 / pi(k-1)) / 2)",
       "F_k = 1{c <= k-1}, hypotheses fail", {"k"}, {"constant", "lambda"}, 0},
      {"near_optimality", "examples",
       "1 - aq e^-aq - e^-aq <= q^2/(q-1) (1 - e^-a)(1 - e^-(q-1)a)", "a > 0, q > 1", {"a", "q"},
       {"gamma"}, 0},
  };
}

std::string fmt(double v) { return format_double(v); }

using Point = std::map<std::string, double>;

std::vector<Point> expand(const std::map<std::string, std::vector<double>>& grid) {
  std::vector<Point> points{{}};
  for (const auto& [key, values] : grid) {
    std::vector<Point> next;
    for (const auto& p : points) {
      for (double v : values) {
        Point q = p;
        q[key] = v;
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }
  return points;
}

double get(const Point& p, const std::string& key, double fallback) {
  const auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

int as_int(const Point& p, const std::string& key) {
  const double v = p.at(key);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError(key + " must be an integer");
  return static_cast<int>(v);
}

struct Task {
  std::size_t catalog_index = 0;
  std::size_t config_index = 0;
  std::size_t point_index = 0;
  const CheckSpec* spec = nullptr;
  Point point;
};

struct Prepared {
  const ExperimentConfig& cfg;
  std::map<std::string, ParsedFunctional> functionals;
  Engine base;
};

Engine make_engine(const ExperimentConfig& cfg, const std::vector<double>& weights) {
  const GroundSpace space(weights);
  if (cfg.mode == EngineMode::monte_carlo)
    return Engine::monte_carlo(space, cfg.replications, cfg.seed, cfg.tail_mass, cfg.inner_replications);
  if (!cfg.caps.empty()) return Engine::exact(TruncatedStateSpace::from_caps(space, cfg.caps, cfg.budget));
  return Engine::exact(space, cfg.tail_mass, cfg.budget);
}

InequalityReport example_record(std::string name, double lhs, double rhs, double scale) {
  InequalityReport r;
  r.name = std::move(name);
  r.lhs = lhs;
  r.rhs = rhs;
  r.tolerance = 1e-12 * std::abs(scale);
  decide(r);
  return r;
}

std::vector<InequalityReport> run_task(const Prepared& prep, const Task& task) {
  const CheckSpec& spec = *task.spec;
  const Point& p = task.point;
  const std::string& id = spec.check;

  // Examples carry their own lambda; elsewhere lambda re-weights a one-atom space.
  const bool example = find_check(id)->group == "examples";
  Engine engine = prep.base;
  if (!example && p.count("lambda")) {
    if (prep.cfg.weights.size() != 1) throw ConfigError("'lambda' needs a one-atom space");
    engine = make_engine(prep.cfg, {p.at("lambda")});
  }
  const Functional* f = spec.functional.empty() ? nullptr : &prep.functionals.at(spec.functional).functional;
  const Functional* g = spec.functional2.empty() ? nullptr : &prep.functionals.at(spec.functional2).functional;

  std::vector<InequalityReport> out;
  if (id == "poincare") out.push_back(check_poincare(engine, *f));
  else if (id == "modified_lsi") out.push_back(check_modified_lsi(engine, *f, get(p, "floor", 0.0)));
  else if (id == "min_form_lsi") out.push_back(check_min_form_lsi(engine, *f, get(p, "floor", 0.0)));
  else if (id == "pathwise_lemma") out.push_back(check_pathwise_lemma(p.at("a"), p.at("b"), p.at("q")));
  else if (id == "entropy_power") out.push_back(check_entropy_power(engine, *f, p.at("q")));
  else if (id == "restricted_hypercontractivity")
    out.push_back(check_restricted_hypercontractivity(engine, *f, p.at("t"), p.at("p")));
  else if (id == "weak_hypercontractivity") out.push_back(check_weak_hypercontractivity(engine, *f, p.at("t")));
  else if (id == "talagrand")
    out.push_back(check_talagrand(engine, *f, {get(p, "constant", kTalagrandConstant), spec.bypass_gate}));
  else if (id == "l1_variance") out.push_back(l1_variance_bound(engine, *f));
  else if (id == "concentration") {
    for (auto& r : check_concentration(engine, *f, {p.at("threshold")})) out.push_back(std::move(r));
  } else if (id == "lsi_failure") {
    const auto failure = check_lsi_failure(as_int(p, "k_max"));
    InequalityReport r = example_record("lsi_failure", failure.rows.back().ratio, get(p, "C", 10.0), 1.0);
    r.parameters["increasing_from"] = std::to_string(failure.increasing_from);
    r.intentional_violation_demo = true;
    out.push_back(std::move(r));
  } else if (id == "mecke") {
    out.push_back(check_mecke(engine, [f](const Configuration& c, std::size_t) { return (*f)(c); }));
  } else if (id == "mean_preservation") out.push_back(mean_preservation_check(engine, *f, p.at("t")));
  else if (id == "commutation") out.push_back(commutation_check(engine, *f, p.at("t")));
  else if (id == "semigroup_property") out.push_back(semigroup_property_check(engine, *f, p.at("s"), p.at("t")));
  else if (id == "generator") out.push_back(generator_check(engine, *f, p.at("h")));
  else if (id == "symmetry") out.push_back(symmetry_check(engine, *f, *g));
  else if (id == "pointwise_gradient") out.push_back(pointwise_gradient_check(engine, *f, p.at("t")));
  else if (id == "integrated_gradient") out.push_back(integrated_gradient_check(engine, *f, p.at("t"), p.at("p")));
  else if (id == "maxima") {
    examples::MaximaModel model;
    model.m = p.at("m");
    const auto cf = examples::maxima_closed_forms(model);
    InequalityReport r = example_record("maxima", cf.variance, cf.talagrand_rhs, cf.talagrand_rhs);
    r.parameters["poincare_rhs"] = fmt(cf.poincare_rhs);
    r.parameters["log_ratio"] = fmt(cf.log_ratio);
    out.push_back(std::move(r));
  } else if (id == "one_dim_comparison") {
    const int M = as_int(p, "M");
    const auto c = examples::one_dim_bound_comparison(examples::indicator_sequence(M), p.at("lambda"));
    InequalityReport r = example_record("one_dim_comparison", c.variance, c.talagrand_rhs, c.poincare_rhs);
    r.parameters["poincare_rhs"] = fmt(c.poincare_rhs);
    r.parameters["log_ratio"] = fmt(c.log_ratio);
    out.push_back(std::move(r));
  } else if (id == "counterexample_fk") {
    const double lambda = get(p, "lambda", 1.0);
    const double constant = get(p, "constant", kTalagrandDisplayedConstant);
    const auto rec = examples::counterexample_fk(as_int(p, "k"), lambda);
    const double rhs = constant * lambda * rec.e_df_sq / rec.denom;
    InequalityReport r = example_record("counterexample_fk", rec.variance, rhs, rec.variance);
    r.parameters["lhs_over_rhs"] = fmt(rec.variance / rhs);
    r.intentional_violation_demo = true;
    out.push_back(std::move(r));
  } else if (id == "near_optimality") {
    const auto t = examples::near_optimality_scan({p.at("a")}, {p.at("q")}, get(p, "gamma", 1.0));
    const auto& row = t.rows.front();
    InequalityReport r = example_record("near_optimality", row.lhs, row.rhs, row.rhs);
    r.parameters["ratio"] = fmt(row.ratio);
    out.push_back(std::move(r));
  } else {
    throw ConfigError("unknown check '" + id + "'");
  }

  for (auto& r : out) {
    for (const auto& [key, value] : p) r.parameters.emplace(key, fmt(value));
    if (f) r.parameters["functional"] = prep.functionals.at(spec.functional).canonical;
    if (g) r.parameters["functional2"] = prep.functionals.at(spec.functional2).canonical;
    if (spec.demo) r.intentional_violation_demo = true;
  }
  return out;
}

}  // namespace

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> entries = build_catalog();
  return entries;
}

const CatalogEntry* find_check(const std::string& id) {
  for (const auto& e : catalog())
    if (e.id == id) return &e;
  return nullptr;
}

std::string catalog_text() {
  auto join = [](const std::vector<std::string>& xs) {
    std::string s;
    for (const auto& x : xs) s += (s.empty() ? "" : ",") + x;
    return s.empty() ? std::string("-") : s;
  };
  std::string out = "# id\tgroup\tfunctionals\trequired\toptional\thypotheses\tanchor\n";
  for (const auto& e : catalog()) {
    out += e.id + '\t' + e.group + '\t' + std::to_string(e.functionals) + '\t' + join(e.required) + '\t' +
           join(e.optional) + '\t' + e.hypotheses + '\t' + e.anchor + '\n';
  }
  return out;
}

std::string report_header() { return "# name\tparams\tlhs\trhs\tslack\tstderr\tverdict\tcerts\n"; }

std::string format_record(const InequalityReport& r) {
  std::map<std::string, std::string> params = r.parameters;
  if (r.intentional_violation_demo) params["intentional_violation_demo"] = "1";
  std::string p;
  for (const auto& [key, value] : params) p += (p.empty() ? "" : ";") + key + "=" + value;
  std::string certs;
  for (const auto& c : r.hypothesis_certificates) certs += (certs.empty() ? "" : ";") + to_string(c);
  std::ostringstream os;
  os << r.name << '\t' << (p.empty() ? "-" : p) << '\t' << format_double(r.lhs) << '\t'
     << format_double(r.rhs) << '\t' << format_double(r.slack) << '\t'
     << (r.stderr ? format_double(*r.stderr) : "-") << '\t' << to_string(r.verdict) << '\t'
     << (certs.empty() ? "-" : certs) << '\n';
  return os.str();
}

ExperimentConfig apply_overrides(ExperimentConfig cfg, const RunOverrides& o) {
  if (o.seed) cfg.seed = *o.seed;
  if (o.tail_mass) {
    cfg.tail_mass = *o.tail_mass;
    cfg.caps.clear();
  }
  if (o.budget) cfg.budget = *o.budget;
  if (o.mode) cfg.mode = *o.mode;
  return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.weights.empty()) throw ConfigError("space.weights must not be empty");
  if (!cfg.caps.empty() && cfg.caps.size() != cfg.weights.size())
    throw ConfigError("truncation.caps must have one entry per atom");
  if (!(cfg.tail_mass > 0.0 && cfg.tail_mass < 1.0)) throw ConfigError("tail_mass must be in (0, 1)");
  if (cfg.threads == 0) throw ConfigError("threads must be positive");
  std::map<std::string, bool> names;
  for (const auto& [name, src] : cfg.functionals) {
    if (names.count(name)) throw ConfigError("functional '" + name + "' defined twice");
    names[name] = true;
    try {
      parse_functional(src, cfg.weights.size());
    } catch (const DslError& e) {
      throw DslError("functional '" + name + "': " + e.message(), e.line(), e.column());
    }
  }
  for (std::size_t k = 0; k < cfg.checks.size(); ++k) {
    const auto& c = cfg.checks[k];
    const std::string where = "checks[" + std::to_string(k) + "] (" + c.check + ")";
    const CatalogEntry* entry = find_check(c.check);
    if (!entry) throw ConfigError(where + ": unknown check");
    if (entry->functionals >= 1 && c.functional.empty()) throw ConfigError(where + ": needs 'functional'");
    if (entry->functionals >= 2 && c.functional2.empty()) throw ConfigError(where + ": needs 'functional2'");
    for (const auto* name : {&c.functional, &c.functional2}) {
      if (!name->empty() && !names.count(*name))
        throw ConfigError(where + ": unknown functional '" + *name + "'");
    }
    for (const auto& key : entry->required) {
      const auto it = c.grid.find(key);
      if (it == c.grid.end() || it->second.empty()) throw ConfigError(where + ": missing parameter '" + key + "'");
    }
    for (const auto& [key, values] : c.grid) {
      const bool known = std::count(entry->required.begin(), entry->required.end(), key) ||
                         std::count(entry->optional.begin(), entry->optional.end(), key) ||
                         (key == "lambda" && entry->group != "examples");
      if (!known) throw ConfigError(where + ": unexpected parameter '" + key + "'");
      if (values.empty()) throw ConfigError(where + ": parameter '" + key + "' has no values");
    }
  }
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  Prepared prep{cfg, {}, make_engine(cfg, cfg.weights)};
  for (const auto& [name, src] : cfg.functionals) prep.functionals.emplace(name, parse_functional(src, cfg.weights.size()));

  std::vector<Task> tasks;
  const auto& cat = catalog();
  for (std::size_t k = 0; k < cfg.checks.size(); ++k) {
    const auto& spec = cfg.checks[k];
    const auto idx = static_cast<std::size_t>(find_check(spec.check) - cat.data());
    const auto points = expand(spec.grid);
    for (std::size_t j = 0; j < points.size(); ++j) tasks.push_back({idx, k, j, &spec, points[j]});
  }
  std::stable_sort(tasks.begin(), tasks.end(),
                   [](const Task& a, const Task& b) { return a.catalog_index < b.catalog_index; });

  std::vector<std::vector<InequalityReport>> results(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        results[i] = run_task(prep, tasks[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n_threads = std::min<unsigned>(cfg.threads, static_cast<unsigned>(std::max<std::size_t>(1, tasks.size())));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  RunResult out;
  out.report_text = report_header();
  for (auto& batch : results) {
    for (auto& r : batch) {
      out.report_text += format_record(r);
      if (r.verdict == Verdict::violated && !r.intentional_violation_demo) out.exit_code = kExitViolation;
      out.records.push_back(std::move(r));
    }
  }
  return out;
}

int run_config_file(const std::string& path, const RunOverrides& overrides, std::ostream& diag) {
  try {
    const ExperimentConfig cfg = apply_overrides(load_config(path), overrides);
    RunResult result = run_experiment(cfg);
    std::filesystem::path report = cfg.report;
    if (overrides.out_dir) report = std::filesystem::path(*overrides.out_dir) / report.filename();
    if (report.has_parent_path()) std::filesystem::create_directories(report.parent_path());
    std::ofstream os(report, std::ios::binary);
    if (!os) throw ConfigError("cannot write report '" + report.string() + "'");
    os << result.report_text;
    std::size_t violated = 0, demos = 0, refused = 0;
    for (const auto& r : result.records) {
      if (r.intentional_violation_demo) ++demos;
      else if (r.verdict == Verdict::violated) ++violated;
      if (r.verdict == Verdict::hypothesis_not_met) ++refused;
    }
    diag << result.records.size() << " records, " << violated << " violated, " << refused
         << " hypothesis-not-met, " << demos << " demonstrations -> " << report.string() << '\n';
    return result.exit_code;
  } catch (const DslError& e) {
    diag << "functional error at line " << e.line() << ", column " << e.column() << ": " << e.message() << '\n';
    return kExitConfigError;
  } catch (const ConfigError& e) {
    diag << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const BudgetExceeded& e) {
    diag << "budget exceeded: " << e.what() << '\n';
    return kExitBudget;
  } catch (const PreconditionError& e) {
    diag << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }
}

std::vector<std::string> example_names() {
  return {"counterexample_fk", "lsi_failure", "maxima", "maxima_mc", "near_optimality", "one_dim"};
}

std::string run_example(const std::string& name, const std::map<std::string, double>& params) {
  auto allow = [&](std::initializer_list<const char*> keys) {
    for (const auto& [key, value] : params) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; }))
        throw ConfigError("example '" + name + "' does not take '" + key + "'");
    }
  };
  auto val = [&](const char* key, double fallback) {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  auto integer = [&](const char* key, double fallback) {
    const double v = val(key, fallback);
    if (v != std::floor(v) || v < 0 || v > 1e6) throw ConfigError(std::string(key) + " must be a non-negative integer");
    return static_cast<int>(v);
  };

  if (name == "maxima") {
    allow({"m"});
    std::vector<double> ms = params.count("m") ? std::vector<double>{params.at("m")}
                                               : std::vector<double>{0.5, 1, 5, 10, 20, 50};
    std::string csv;
    for (double m : ms) {
      examples::MaximaModel model;
      model.m = m;
      const std::string block = examples::to_csv(examples::maxima_closed_forms(model));
      csv += csv.empty() ? block : block.substr(block.find('\n') + 1);
    }
    return csv;
  }
  if (name == "maxima_mc") {
    allow({"n", "t", "replications", "seed"});
    examples::MaximaModel model;
    model.mode = examples::MaximaMode::monte_carlo;
    model.radial_tail = [](double r) { return std::exp(-r); };
    model.radial_quantile = [](double u) { return -std::log(u); };
    const auto sim = examples::maxima_monte_carlo(model, val("n", 100.0), val("t", std::log(20.0)),
                                                  static_cast<std::size_t>(integer("replications", 100000)),
                                                  static_cast<std::uint64_t>(integer("seed", 1)));
    std::ostringstream os;
    os << "m,replications,variance_closed,variance_radial,variance_radial_stderr,variance_full,"
          "variance_full_stderr,energy_closed,energy_radial,energy_radial_stderr,routes_agree\n";
    os << fmt(sim.m) << ',' << sim.replications << ',' << fmt(sim.closed.variance) << ','
       << fmt(sim.variance_radial) << ',' << fmt(sim.variance_radial_stderr) << ','
       << fmt(sim.variance_full) << ',' << fmt(sim.variance_full_stderr) << ','
       << fmt(sim.closed.poincare_rhs) << ',' << fmt(sim.energy_radial) << ','
       << fmt(sim.energy_radial_stderr) << ',' << (sim.routes_agree ? 1 : 0) << '\n';
    return os.str();
  }
  if (name == "one_dim") {
    allow({"M", "lambda"});
    const auto g = examples::indicator_sequence(integer("M", 1));
    std::vector<double> lambdas = params.count("lambda") ? std::vector<double>{params.at("lambda")}
                                                         : std::vector<double>{1, 5, 10, 20};
    return examples::to_csv(examples::one_dim_lambda_grid(g, lambdas));
  }
  if (name == "counterexample_fk") {
    allow({"k_max", "lambda"});
    return examples::to_csv(examples::scan_counterexample(integer("k_max", 50), val("lambda", 1.0)));
  }
  if (name == "near_optimality") {
    allow({"gamma"});
    return examples::to_csv(examples::near_optimality_scan({0.05, 0.1, 0.25, 0.5, 1, 2, 3},
                                                           {1.05, 1.25, 1.5, 2, 3, 4}, val("gamma", 1.0)));
  }
  if (name == "lsi_failure") {
    allow({"k_max"});
    const auto failure = check_lsi_failure(integer("k_max", 40));
    std::string csv = "k,tail,pmf,ratio\n";
    for (const auto& r : failure.rows)
      csv += std::to_string(r.k) + ',' + fmt(r.tail) + ',' + fmt(r.pmf) + ',' + fmt(r.ratio) + '\n';
    return csv;
  }
  throw ConfigError("unknown example '" + name + "'");
}

}  // namespace pspace
