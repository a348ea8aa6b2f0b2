#include "distsgd/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace distsgd::cli {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& value, const std::string& key, long line) {
  if (value == "inf") return std::numeric_limits<double>::infinity();
  const char* begin = value.data();
  const char* end = begin + value.size();
  if (begin != end && *begin == '+') ++begin;
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  if (begin == end || ec != std::errc() || ptr != end)
    throw ConfigError("value for '" + key + "' is not a number: '" + value + "'",
                      key, line);
  return out;
}

long parse_long(const std::string& value, const std::string& key, long line) {
  const char* begin = value.data();
  const char* end = begin + value.size();
  if (begin != end && *begin == '+') ++begin;
  long out = 0;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  if (begin == end || ec != std::errc() || ptr != end)
    throw ConfigError("value for '" + key + "' is not an integer: '" + value + "'",
                      key, line);
  return out;
}

bool parse_bool(const std::string& value, const std::string& key, long line) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("value for '" + key + "' is not a boolean: '" + value + "'",
                    key, line);
}

std::vector<int> parse_int_list(const std::string& value, const std::string& key,
                                long line) {
  std::vector<int> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(static_cast<int>(parse_long(item, key, line)));
  }
  return out;
}

struct AlgorithmDraft {
  std::string name;
  std::optional<std::string> kind;
  std::optional<std::string> strategy;
  std::optional<double> step_size;
  long line = 0;
};

}  // namespace

RunSetup parse_config_text(const std::string& text) {
  RunSetup setup;
  bool saw_experiment = false;
  bool explicit_optimum = false;
  std::vector<AlgorithmDraft> drafts;

  enum class Section { none, experiment, algorithm };
  Section section = Section::none;
  AlgorithmDraft* current_draft = nullptr;

  std::istringstream in(text);
  std::string raw;
  long line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("unterminated section header", line, line_no);
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (name == "experiment") {
        section = Section::experiment;
        saw_experiment = true;
      } else if (name == "algorithm" || name.rfind("algorithm.", 0) == 0) {
        section = Section::algorithm;
        AlgorithmDraft draft;
        draft.name = name == "algorithm" ? "algorithm" : name.substr(10);
        draft.line = line_no;
        if (draft.name.empty())
          throw ConfigError("empty algorithm name", name, line_no);
        for (const auto& d : drafts)
          if (d.name == draft.name)
            throw ConfigError("duplicate algorithm section '" + name + "'",
                              name, line_no);
        drafts.push_back(draft);
        current_draft = &drafts.back();
      } else {
        throw ConfigError("unknown section '[" + name + "]'", name, line_no);
      }
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected 'key = value'", line, line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("empty key", line, line_no);

    if (section == Section::experiment) {
      auto& cfg = setup.base;
      if (key == "n_nodes") cfg.n_nodes = static_cast<int>(parse_long(value, key, line_no));
      else if (key == "dim") cfg.dim = static_cast<int>(parse_long(value, key, line_no));
      else if (key == "rounds") cfg.rounds = parse_long(value, key, line_no);
      else if (key == "trials") cfg.trials = static_cast<int>(parse_long(value, key, line_no));
      else if (key == "seed") cfg.master_seed = static_cast<std::uint64_t>(parse_long(value, key, line_no));
      else if (key == "topology") cfg.topology = netgraph::topology_kind_from_name(value);
      else if (key == "edge_prob") cfg.edge_prob = parse_double(value, key, line_no);
      else if (key == "loss") cfg.loss.family = losses::family_from_name(value);
      else if (key == "lambda") cfg.loss.lambda = parse_double(value, key, line_no);
      else if (key == "radius") cfg.loss.radius = parse_double(value, key, line_no);
      else if (key == "noise_var") cfg.noise_var = parse_double(value, key, line_no);
      else if (key == "snr_db_min") cfg.snr_db_min = parse_double(value, key, line_no);
      else if (key == "snr_db_max") cfg.snr_db_max = parse_double(value, key, line_no);
      else if (key == "data") cfg.dataset_path = value == "synthetic" ? "" : value;
      else if (key == "normalize") cfg.normalize = dataio::normalize_from_name(value);
      else if (key == "partition") cfg.partition_rule = dataio::rule_from_name(value);
      else if (key == "positive_class") cfg.positive_class = parse_double(value, key, line_no);
      else if (key == "optimum") { cfg.optimum = sim::optimum_mode_from_name(value); explicit_optimum = true; }
      else if (key == "optimum_budget") cfg.optimum_budget = parse_long(value, key, line_no);
      else if (key == "probe_nodes") cfg.probe_nodes = parse_int_list(value, key, line_no);
      else if (key == "check_bounds") setup.check_bounds = parse_bool(value, key, line_no);
      else if (key == "g_override") setup.g_override = parse_double(value, key, line_no);
      else throw ConfigError("unknown key '" + key + "' in [experiment]", key, line_no);
    } else if (section == Section::algorithm) {
      auto& draft = *current_draft;
      if (key == "kind") draft.kind = value;
      else if (key == "strategy") draft.strategy = value;
      else if (key == "step_size") draft.step_size = parse_double(value, key, line_no);
      else throw ConfigError("unknown key '" + key + "' in algorithm section", key, line_no);
    } else {
      throw ConfigError("key '" + key + "' appears before any section", key, line_no);
    }
  }

  if (!saw_experiment)
    throw ConfigError("missing [experiment] section", "experiment", 0);
  if (drafts.empty())
    throw ConfigError("missing [algorithm] section", "algorithm", 0);

  for (const auto& draft : drafts) {
    strategies::AlgorithmSpec spec;
    if (!draft.kind)
      throw ConfigError("algorithm '" + draft.name + "' is missing 'kind'",
                        "kind", draft.line);
    try {
      spec.kind = strategies::kind_from_name(*draft.kind);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string(e.what()) + " (key 'kind')", "kind",
                        draft.line);
    }
    if (draft.strategy) {
      try {
        spec.strategy = strategies::strategy_from_name(*draft.strategy);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string(e.what()) + " (key 'strategy')",
                          "strategy", draft.line);
      }
    }
    if (spec.kind == strategies::Kind::css) {
      if (!draft.step_size)
        throw ConfigError("css algorithm '" + draft.name +
                              "' requires 'step_size'",
                          "step_size", draft.line);
      spec.css_step = *draft.step_size;
      if (!(spec.css_step > 0.0))
        throw ConfigError("step_size must be positive", "step_size", draft.line);
    } else if (draft.step_size) {
      throw ConfigError("'step_size' is only valid for css algorithms",
                        "step_size", draft.line);
    }
    setup.algorithms.emplace_back(draft.name, spec);
  }

  // Default optimum mode depends on the data source.
  if (!explicit_optimum) {
    setup.base.optimum = setup.base.synthetic() &&
                                 setup.base.loss.family == losses::Family::squared
                             ? sim::OptimumMode::analytic
                             : sim::OptimumMode::none;
  }
  setup.base.algorithm = setup.algorithms.front().second;
  return setup;
}

RunSetup load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path, path, 0);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

std::string canonical_config(const RunSetup& setup) {
  const auto& cfg = setup.base;
  std::string out = "[experiment]\n";
  char buf[256];
  auto emit = [&](const char* key, const std::string& value) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  };
  auto emit_d = [&](const char* key, double v) {
    if (std::isinf(v)) {
      emit(key, "inf");
    } else {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      emit(key, buf);
    }
  };
  auto emit_l = [&](const char* key, long long v) {
    std::snprintf(buf, sizeof(buf), "%lld", v);
    emit(key, buf);
  };

  emit_l("n_nodes", cfg.n_nodes);
  emit_l("dim", cfg.dim);
  emit_l("rounds", cfg.rounds);
  emit_l("trials", cfg.trials);
  emit_l("seed", static_cast<long long>(cfg.master_seed));
  emit("topology", netgraph::to_string(cfg.topology));
  emit_d("edge_prob", cfg.edge_prob);
  emit("loss", losses::to_string(cfg.loss.family));
  emit_d("lambda", cfg.loss.lambda);
  emit_d("radius", cfg.loss.radius);
  if (cfg.synthetic()) {
    emit("data", "synthetic");
    emit_d("noise_var", cfg.noise_var);
    emit_d("snr_db_min", cfg.snr_db_min);
    emit_d("snr_db_max", cfg.snr_db_max);
  } else {
    emit("data", cfg.dataset_path);
    emit("normalize", dataio::to_string(cfg.normalize));
    emit("partition", dataio::to_string(cfg.partition_rule));
    if (cfg.positive_class) emit_d("positive_class", *cfg.positive_class);
  }
  emit("optimum", sim::to_string(cfg.optimum));
  if (cfg.optimum == sim::OptimumMode::empirical)
    emit_l("optimum_budget", cfg.optimum_budget);
  {
    std::string probes;
    for (int p : cfg.resolved_probes()) {
      if (!probes.empty()) probes += ',';
      probes += std::to_string(p);
    }
    emit("probe_nodes", probes);
  }
  emit("check_bounds", setup.check_bounds ? "true" : "false");
  if (setup.g_override) emit_d("g_override", *setup.g_override);

  for (const auto& [name, spec] : setup.algorithms) {
    out += name == "algorithm" ? "\n[algorithm]\n" : "\n[algorithm." + name + "]\n";
    emit("kind", strategies::to_string(spec.kind));
    emit("strategy", strategies::to_string(spec.strategy));
    if (spec.kind == strategies::Kind::css) emit_d("step_size", spec.css_step);
  }
  return out;
}

}  // namespace distsgd::cli
