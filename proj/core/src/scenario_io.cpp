#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "json.hpp"

#include "coinfer/error.hpp"
#include "coinfer/harness.hpp"
#include "coinfer/weight_stats.hpp"

namespace coinfer {
namespace {

using nlohmann::json;

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

const json& require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  return j;
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!ok.count(key)) throw ConfigError(join(path, key), "unknown key");
  }
}

double number(const json& obj, const std::string& path, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(join(path, key), "missing required field");
  if (!it->is_number()) throw ConfigError(join(path, key), "expected a number");
  return it->get<double>();
}

std::optional<double> optional_number(const json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) return std::nullopt;
  return number(obj, path, key);
}

std::size_t index_value(const json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError(path, "expected a nonnegative integer");
  }
  return static_cast<std::size_t>(v.get<long long>());
}

ChannelParams parse_channel(const json& j) {
  const std::string p = "channel";
  require_object(j, p);
  check_keys(j, p, {"k0_ref_gain", "d0_ref", "pathloss_exp", "distance", "bandwidth", "noise_psd",
                    "p_max"});
  ChannelParams c;
  c.k0_ref_gain = number(j, p, "k0_ref_gain");
  c.d0_ref = number(j, p, "d0_ref");
  c.pathloss_exp = number(j, p, "pathloss_exp");
  c.distance = number(j, p, "distance");
  c.bandwidth = number(j, p, "bandwidth");
  c.noise_psd = number(j, p, "noise_psd");
  c.p_max = number(j, p, "p_max");
  return c;
}

ComputeParams parse_compute(const json& j, const std::string& p) {
  require_object(j, p);
  check_keys(j, p, {"f_max", "flops_per_cycle", "pue", "power_coeff"});
  ComputeParams c;
  c.f_max = number(j, p, "f_max");
  c.flops_per_cycle = number(j, p, "flops_per_cycle");
  c.pue = number(j, p, "pue");
  c.power_coeff = number(j, p, "power_coeff");
  return c;
}

ModelProfile parse_model(const json& j) {
  const std::string p = "model";
  require_object(j, p);
  check_keys(j, p, {"q_device_params", "s_server_params", "bits_per_param", "n_flop_device",
                    "n_flop_server", "theta_embedding_bits", "entropy_bits", "raw_input_bits"});
  ModelProfile m;
  m.q_device_params = number(j, p, "q_device_params");
  m.s_server_params = number(j, p, "s_server_params");
  m.bits_per_param = number(j, p, "bits_per_param");
  m.n_flop_device = number(j, p, "n_flop_device");
  m.n_flop_server = number(j, p, "n_flop_server");
  m.theta_embedding_bits = number(j, p, "theta_embedding_bits");
  m.entropy_bits = number(j, p, "entropy_bits");
  m.raw_input_bits = optional_number(j, p, "raw_input_bits");
  return m;
}

LayeredModelSpec parse_layered(const json& j, std::size_t& split) {
  const std::string p = "layered_model";
  require_object(j, p);
  check_keys(j, p, {"layers", "bits_per_param", "entropy_bits", "layer_scales", "raw_input_bits",
                    "split"});
  LayeredModelSpec spec;
  const auto layers = j.find("layers");
  if (layers == j.end() || !layers->is_array()) {
    throw ConfigError(join(p, "layers"), "expected an array of layer records");
  }
  for (std::size_t i = 0; i < layers->size(); ++i) {
    const std::string lp = join(p, "layers[" + std::to_string(i) + "]");
    const json& l = require_object((*layers)[i], lp);
    check_keys(l, lp, {"params_count", "flops", "embedding_bits_out"});
    spec.layers.push_back(
        {number(l, lp, "params_count"), number(l, lp, "flops"), number(l, lp, "embedding_bits_out")});
  }
  spec.bits_per_param = number(j, p, "bits_per_param");
  spec.entropy_bits = optional_number(j, p, "entropy_bits");
  if (const auto it = j.find("layer_scales"); it != j.end()) {
    if (!it->is_array()) throw ConfigError(join(p, "layer_scales"), "expected an array");
    for (const json& v : *it) {
      if (!v.is_number()) throw ConfigError(join(p, "layer_scales"), "expected numbers");
      spec.layer_scales.push_back(v.get<double>());
    }
  }
  if (spec.entropy_bits && !spec.layer_scales.empty()) {
    throw ConfigError(join(p, "layer_scales"), "give either entropy_bits or layer_scales, not both");
  }
  spec.raw_input_bits = number(j, p, "raw_input_bits");
  const auto sp = j.find("split");
  if (sp == j.end()) throw ConfigError(join(p, "split"), "missing required field");
  split = index_value(*sp, join(p, "split"));
  return spec;
}

QosBudget parse_qos(const json& j) {
  const std::string p = "qos";
  require_object(j, p);
  check_keys(j, p, {"t_max", "e_max"});
  return {number(j, p, "t_max"), number(j, p, "e_max")};
}

ScaOptions parse_solver(const json& j) {
  const std::string p = "solver";
  require_object(j, p);
  check_keys(j, p, {"epsilon", "max_iter", "consistency_tol", "feasibility_tol"});
  ScaOptions o;
  o.epsilon = optional_number(j, p, "epsilon").value_or(o.epsilon);
  if (j.contains("max_iter")) o.max_iter = static_cast<int>(index_value(j["max_iter"], join(p, "max_iter")));
  o.consistency_tol = optional_number(j, p, "consistency_tol").value_or(o.consistency_tol);
  o.feasibility_tol = optional_number(j, p, "feasibility_tol").value_or(o.feasibility_tol);
  if (!(o.epsilon > 0.0)) throw ConfigError(join(p, "epsilon"), "must be positive");
  if (o.max_iter < 1) throw ConfigError(join(p, "max_iter"), "must be at least 1");
  if (!(o.consistency_tol > 0.0)) throw ConfigError(join(p, "consistency_tol"), "must be positive");
  if (!(o.feasibility_tol >= 0.0)) throw ConfigError(join(p, "feasibility_tol"), "must be nonnegative");
  return o;
}

SweepAxis parse_axis(const std::string& name) {
  if (name == "t_max") return SweepAxis::kTMax;
  if (name == "e_max") return SweepAxis::kEMax;
  if (name == "split_point") return SweepAxis::kSplitPoint;
  throw ConfigError("sweep.axis", "unknown axis '" + name + "'");
}

SweepSpec parse_sweep(const json& j) {
  const std::string p = "sweep";
  require_object(j, p);
  check_keys(j, p, {"axis", "values", "schemes"});
  SweepSpec s;
  const auto axis = j.find("axis");
  if (axis == j.end() || !axis->is_string()) throw ConfigError("sweep.axis", "expected a string");
  s.axis = parse_axis(axis->get<std::string>());
  const auto values = j.find("values");
  if (values == j.end() || !values->is_array() || values->empty()) {
    throw ConfigError("sweep.values", "expected a non-empty array");
  }
  for (const json& v : *values) {
    if (s.axis == SweepAxis::kSplitPoint) {
      s.values.push_back(static_cast<double>(index_value(v, "sweep.values")));
    } else {
      if (!v.is_number()) throw ConfigError("sweep.values", "expected numbers");
      s.values.push_back(v.get<double>());
    }
  }
  const auto schemes = j.find("schemes");
  if (schemes == j.end()) {
    s.schemes = all_schemes();
  } else {
    if (!schemes->is_array() || schemes->empty()) {
      throw ConfigError("sweep.schemes", "expected a non-empty array");
    }
    for (const json& v : *schemes) {
      if (!v.is_string()) throw ConfigError("sweep.schemes", "expected scheme names");
      s.schemes.push_back(parse_scheme(v.get<std::string>()));
    }
  }
  return s;
}

void validate_sweep(const SweepSpec& s, const RunConfig& cfg) {
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    const double v = s.values[i];
    if (s.axis == SweepAxis::kSplitPoint) {
      if (!cfg.layered) throw ConfigError("sweep.axis", "split_point needs a layered_model");
      if (v > static_cast<double>(cfg.layered->layers.size())) {
        throw ConfigError("sweep.values", "split index beyond the layer count");
      }
    } else {
      if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("sweep.values", "budgets must be positive");
      if (i > 0 && !(v > s.values[i - 1])) {
        throw ConfigError("sweep.values", "budget values must be strictly increasing");
      }
    }
  }
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": " + e.what());
  }
  try {
    require_object(doc, "");
    check_keys(doc, "",
               {"channel", "device", "server", "model", "layered_model", "qos", "solver", "sweep",
                "rho_min"});
    auto section = [&](const char* key) -> const json& {
      const auto it = doc.find(key);
      if (it == doc.end()) throw ConfigError(key, "missing required section");
      return *it;
    };
    RunConfig cfg;
    Scenario& sc = cfg.scenario;
    sc.channel = parse_channel(section("channel"));
    sc.device = parse_compute(section("device"), "device");
    sc.server = parse_compute(section("server"), "server");
    sc.qos = parse_qos(section("qos"));
    sc.rho_min = optional_number(doc, "", "rho_min").value_or(kDefaultRhoMin);

    const bool flat = doc.contains("model");
    const bool layered = doc.contains("layered_model");
    if (flat == layered) throw ConfigError("model", "give exactly one of model or layered_model");
    if (flat) {
      sc.model = parse_model(doc["model"]);
    } else {
      std::size_t split = 0;
      cfg.layered = parse_layered(doc["layered_model"], split);
      validate(*cfg.layered);
      if (split > cfg.layered->layers.size()) {
        throw ConfigError("layered_model.split", "beyond the layer count");
      }
      cfg.split = split;
      sc = scenario_at_split(*cfg.layered, split, sc);
    }
    validate(sc);
    if (doc.contains("solver")) cfg.solver = parse_solver(doc["solver"]);
    if (doc.contains("sweep")) {
      cfg.sweep = parse_sweep(doc["sweep"]);
      validate_sweep(*cfg.sweep, cfg);
    }
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(source + ": " + e.what());
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

Scenario load_scenario(const std::filesystem::path& path) { return load_config(path).scenario; }

NetworkSpec parse_network_spec(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": " + e.what());
  }
  try {
    require_object(doc, "");
    check_keys(doc, "",
               {"layer_sizes", "activation", "leaky_slope", "split_index", "weight_seed",
                "init_scale", "weights_file", "rho_grid", "strategies", "inputs", "input_seed"});
    NetworkSpec spec;
    const auto sizes = doc.find("layer_sizes");
    if (sizes == doc.end() || !sizes->is_array() || sizes->size() < 2) {
      throw ConfigError("layer_sizes", "expected at least two widths");
    }
    for (const json& v : *sizes) {
      const std::size_t w = index_value(v, "layer_sizes");
      if (w == 0) throw ConfigError("layer_sizes", "widths must be positive");
      spec.layer_sizes.push_back(w);
    }
    const std::string act = doc.value("activation", std::string("relu"));
    const double slope = optional_number(doc, "", "leaky_slope").value_or(0.01);
    try {
      spec.activation = parse_activation(act, slope);
    } catch (const Error& e) {
      throw ConfigError("activation", e.what());
    }
    const auto split = doc.find("split_index");
    if (split == doc.end()) throw ConfigError("split_index", "missing required field");
    spec.split_index = index_value(*split, "split_index");
    if (spec.split_index > spec.layer_sizes.size() - 1) {
      throw ConfigError("split_index", "beyond the layer count");
    }
    if (doc.contains("weight_seed")) spec.weight_seed = index_value(doc["weight_seed"], "weight_seed");
    spec.init_scale = optional_number(doc, "", "init_scale").value_or(1.0);
    if (!(spec.init_scale > 0.0)) throw ConfigError("init_scale", "must be positive");
    if (doc.contains("weights_file")) {
      if (!doc["weights_file"].is_string()) throw ConfigError("weights_file", "expected a path");
      std::filesystem::path wf = doc["weights_file"].get<std::string>();
      if (wf.is_relative()) wf = std::filesystem::path(source).parent_path() / wf;
      spec.weights_file = wf;
    }
    if (const auto it = doc.find("rho_grid"); it != doc.end()) {
      if (!it->is_array() || it->empty()) throw ConfigError("rho_grid", "expected a non-empty array");
      spec.rho_grid.clear();
      for (const json& v : *it) {
        if (!v.is_number() || !(v.get<double>() >= 0.0 && v.get<double>() <= 1.0)) {
          throw ConfigError("rho_grid", "ratios must lie in [0, 1]");
        }
        spec.rho_grid.push_back(v.get<double>());
      }
    }
    if (const auto it = doc.find("strategies"); it != doc.end()) {
      if (!it->is_array() || it->empty()) throw ConfigError("strategies", "expected a non-empty array");
      spec.strategies.clear();
      for (const json& v : *it) {
        const std::string name = v.is_string() ? v.get<std::string>() : std::string();
        if (name == "magnitude") {
          spec.strategies.push_back(PruneKind::kMagnitude);
        } else if (name == "random") {
          spec.strategies.push_back(PruneKind::kRandom);
        } else {
          throw ConfigError("strategies", "expected magnitude or random");
        }
      }
    }
    if (doc.contains("inputs")) spec.inputs = index_value(doc["inputs"], "inputs");
    if (spec.inputs == 0) throw ConfigError("inputs", "must be positive");
    if (doc.contains("input_seed")) spec.input_seed = index_value(doc["input_seed"], "input_seed");
    return spec;
  } catch (const json::exception& e) {
    throw ConfigError(source + ": " + e.what());
  }
}

NetworkSpec load_network_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_network_spec(buf.str(), path.string());
}

DnnNetwork build_network(const NetworkSpec& spec) {
  if (!spec.weights_file) {
    return DnnNetwork::random(spec.layer_sizes, spec.activation, spec.split_index,
                              spec.weight_seed, spec.init_scale);
  }
  const WeightSample sample = load_weight_sample(*spec.weights_file);
  std::vector<Matrix> layers;
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    const auto rows = static_cast<Eigen::Index>(spec.layer_sizes[l + 1]);
    const auto cols = static_cast<Eigen::Index>(spec.layer_sizes[l]);
    const auto need = static_cast<std::size_t>(rows * cols);
    if (offset + need > sample.values.size()) {
      throw ConfigError("weights_file", "too few weights for the declared layer sizes");
    }
    layers.push_back(Eigen::Map<const Matrix>(sample.values.data() + offset, rows, cols));
    offset += need;
  }
  if (offset != sample.values.size()) {
    throw ConfigError("weights_file", "more weights than the declared layer sizes use");
  }
  return DnnNetwork(std::move(layers), spec.activation, spec.split_index);
}

}  // namespace coinfer
