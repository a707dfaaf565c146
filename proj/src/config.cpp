#include "pspace/config.hpp"

#include "pspace/report.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace pspace {

namespace {

std::string where(const YAML::Node& node) {
  const auto mark = node.Mark();
  if (mark.is_null()) return "";
  return " (line " + std::to_string(mark.line + 1) + ", column " + std::to_string(mark.column + 1) + ")";
}

void only_keys(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& section) {
  if (!map.IsMap()) throw ConfigError(section + " must be a mapping" + where(map));
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + section + where(kv.first));
  }
}

template <class T>
T scalar(const YAML::Node& node, const std::string& what) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("bad value for " + what + where(node));
  }
}

std::vector<double> doubles(const YAML::Node& node, const std::string& what) {
  if (node.IsScalar()) return {scalar<double>(node, what)};
  if (!node.IsSequence()) throw ConfigError(what + " must be a number or a list" + where(node));
  std::vector<double> out;
  for (const auto& v : node) out.push_back(scalar<double>(v, what));
  return out;
}

YAML::Node number_node(double v) {
  if (std::isinf(v)) return YAML::Node(v > 0 ? ".inf" : "-.inf");
  if (std::isnan(v)) return YAML::Node(".nan");
  return YAML::Node(format_double(v));
}

}  // namespace

EngineMode parse_mode(const std::string& mode) {
  if (mode == "exact") return EngineMode::exact;
  if (mode == "mc" || mode == "monte_carlo") return EngineMode::monte_carlo;
  throw ConfigError("mode must be 'exact' or 'mc', got '" + mode + "'");
}

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(std::string("YAML syntax error: ") + e.what());
  }
  ExperimentConfig cfg;
  if (root.IsNull()) throw ConfigError("empty config");
  only_keys(root, {"name", "seed", "mode", "replications", "inner_replications", "threads", "space",
                   "truncation", "functionals", "checks", "output"},
            "config");
  if (root["name"]) cfg.name = scalar<std::string>(root["name"], "name");
  if (root["seed"]) cfg.seed = scalar<std::uint64_t>(root["seed"], "seed");
  if (root["mode"]) cfg.mode = parse_mode(scalar<std::string>(root["mode"], "mode"));
  if (root["replications"]) cfg.replications = scalar<std::size_t>(root["replications"], "replications");
  if (root["inner_replications"])
    cfg.inner_replications = scalar<std::size_t>(root["inner_replications"], "inner_replications");
  if (root["threads"]) cfg.threads = scalar<unsigned>(root["threads"], "threads");

  const auto space = root["space"];
  if (!space) throw ConfigError("missing 'space' section");
  only_keys(space, {"weights"}, "space");
  if (!space["weights"]) throw ConfigError("space needs 'weights'" + where(space));
  cfg.weights = doubles(space["weights"], "space.weights");

  if (const auto trunc = root["truncation"]) {
    only_keys(trunc, {"tail_mass", "caps", "budget"}, "truncation");
    if (trunc["tail_mass"]) cfg.tail_mass = scalar<double>(trunc["tail_mass"], "truncation.tail_mass");
    if (trunc["budget"]) cfg.budget = scalar<std::size_t>(trunc["budget"], "truncation.budget");
    if (trunc["caps"]) {
      for (const auto& v : trunc["caps"]) cfg.caps.push_back(scalar<int>(v, "truncation.caps"));
    }
  }

  if (const auto fns = root["functionals"]) {
    if (!fns.IsMap()) throw ConfigError("functionals must be a mapping" + where(fns));
    for (const auto& kv : fns) {
      cfg.functionals.emplace_back(kv.first.as<std::string>(), scalar<std::string>(kv.second, "functional"));
    }
  }

  if (const auto checks = root["checks"]) {
    if (!checks.IsSequence() && !checks.IsNull()) throw ConfigError("checks must be a list" + where(checks));
    for (const auto& entry : checks) {
      only_keys(entry, {"check", "functional", "functional2", "params", "bypass_gate", "demo"}, "check entry");
      CheckSpec spec;
      if (!entry["check"]) throw ConfigError("check entry needs 'check'" + where(entry));
      spec.check = scalar<std::string>(entry["check"], "check");
      if (entry["functional"]) spec.functional = scalar<std::string>(entry["functional"], "functional");
      if (entry["functional2"]) spec.functional2 = scalar<std::string>(entry["functional2"], "functional2");
      if (entry["bypass_gate"]) spec.bypass_gate = scalar<bool>(entry["bypass_gate"], "bypass_gate");
      if (entry["demo"]) spec.demo = scalar<bool>(entry["demo"], "demo");
      if (const auto params = entry["params"]) {
        if (!params.IsMap()) throw ConfigError("params must be a mapping" + where(params));
        for (const auto& kv : params) {
          const auto key = kv.first.as<std::string>();
          spec.grid[key] = doubles(kv.second, "params." + key);
        }
      }
      cfg.checks.push_back(std::move(spec));
    }
  }

  if (const auto out = root["output"]) {
    only_keys(out, {"report"}, "output");
    if (out["report"]) cfg.report = scalar<std::string>(out["report"], "output.report");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << cfg.name;
  out << YAML::Key << "seed" << YAML::Value << cfg.seed;
  out << YAML::Key << "mode" << YAML::Value << to_string(cfg.mode);
  out << YAML::Key << "replications" << YAML::Value << cfg.replications;
  out << YAML::Key << "inner_replications" << YAML::Value << cfg.inner_replications;
  out << YAML::Key << "threads" << YAML::Value << cfg.threads;

  out << YAML::Key << "space" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "weights" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (double w : cfg.weights) out << number_node(w);
  out << YAML::EndSeq << YAML::EndMap;

  out << YAML::Key << "truncation" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "tail_mass" << YAML::Value << number_node(cfg.tail_mass);
  out << YAML::Key << "budget" << YAML::Value << cfg.budget;
  out << YAML::Key << "caps" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (int c : cfg.caps) out << c;
  out << YAML::EndSeq << YAML::EndMap;

  out << YAML::Key << "functionals" << YAML::Value << YAML::BeginMap;
  for (const auto& [name, src] : cfg.functionals)
    out << YAML::Key << name << YAML::Value << YAML::DoubleQuoted << src;
  out << YAML::EndMap;

  out << YAML::Key << "checks" << YAML::Value << YAML::BeginSeq;
  for (const auto& c : cfg.checks) {
    out << YAML::BeginMap;
    out << YAML::Key << "check" << YAML::Value << c.check;
    if (!c.functional.empty()) out << YAML::Key << "functional" << YAML::Value << c.functional;
    if (!c.functional2.empty()) out << YAML::Key << "functional2" << YAML::Value << c.functional2;
    if (c.bypass_gate) out << YAML::Key << "bypass_gate" << YAML::Value << true;
    if (c.demo) out << YAML::Key << "demo" << YAML::Value << true;
    out << YAML::Key << "params" << YAML::Value << YAML::BeginMap;
    for (const auto& [key, values] : c.grid) {
      out << YAML::Key << key << YAML::Value << YAML::Flow << YAML::BeginSeq;
      for (double v : values) out << number_node(v);
      out << YAML::EndSeq;
    }
    out << YAML::EndMap << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "report" << YAML::Value << cfg.report;
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace pspace
