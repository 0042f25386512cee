#include "bdt/config.hpp"

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bdt/error.hpp"

namespace bdt {
namespace {

using json = nlohmann::json;

constexpr std::uint64_t kStaticStream = 0x5C;

/// Walks one JSON object, remembering its path and rejecting unknown keys.
class Section {
 public:
  Section(const json& node, std::string path)
      : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_, "expected an object");
  }

  bool has(const std::string& key) const { return node_.contains(key); }
  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
  const json& at(const std::string& key) const {
    seen_.insert(key);
    return node_.at(key);
  }
  Section child(const std::string& key) const {
    seen_.insert(key);
    return Section(node_.at(key), field(key));
  }

  template <typename T>
  void read(const std::string& key, T& out) const {
    seen_.insert(key);
    if (!node_.contains(key)) return;
    try {
      out = node_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(field(key), std::string("wrong type (") + e.what() + ")");
    }
  }

  template <typename T>
  void read_optional(const std::string& key, std::optional<T>& out) const {
    seen_.insert(key);
    if (!node_.contains(key)) return;
    if (node_.at(key).is_null()) {
      out.reset();
      return;
    }
    T v{};
    read(key, v);
    out = v;
  }

  void finish() const {
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.count(key)) throw ConfigError(field(key), "unknown key");
    }
  }

 private:
  const json& node_;
  std::string path_;
  mutable std::set<std::string> seen_;
};

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}

LayerKind parse_kind(const std::string& s, const std::string& field) {
  if (s == "conv" || s == "convolution") return LayerKind::Convolution;
  if (s == "pool" || s == "pooling") return LayerKind::Pooling;
  if (s == "fc" || s == "fully_connected") return LayerKind::FullyConnected;
  throw ConfigError(field, "unknown layer kind '" + s + "'");
}

std::string kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Convolution:
      return "conv";
    case LayerKind::Pooling:
      return "pool";
    case LayerKind::FullyConnected:
      return "fc";
  }
  return "?";
}

ModelSpec parse_model(const Section& s, const std::string& path) {
  ModelSpec m;
  s.read("name", m.name);
  std::int64_t batch = 1;
  std::int64_t precision = 32;
  s.read("batch", batch);
  s.read("precision", precision);
  if (s.has("preset")) {
    std::string preset;
    s.read("preset", preset);
    try {
      m.preset = parse_model_preset(preset);
    } catch (const Error& e) {
      throw ConfigError(s.field("preset"), e.what());
    }
    if (m.name.empty()) m.name = std::string(to_string(*m.preset));
    try {
      m.layers = preset_layers(*m.preset, batch, precision);
    } catch (const Error& e) {
      throw ConfigError(path, e.what());
    }
  }
  if (s.has("layers")) {
    require(!m.preset, s.field("layers"), "give either preset or layers");
    const json& arr = s.at("layers");
    require(arr.is_array() && !arr.empty(), s.field("layers"),
            "expected a nonempty array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string lp = s.field("layers") + "[" + std::to_string(i) + "]";
      Section ls(arr[i], lp);
      std::string kind;
      ls.read("kind", kind);
      LayerSpec spec;
      spec.kind = parse_kind(kind, ls.field("kind"));
      spec.batch_size = batch;
      spec.precision_bits = precision;
      if (spec.kind == LayerKind::FullyConnected) {
        ls.read("in_size", spec.in_size);
        ls.read("out_size", spec.out_size);
      } else {
        std::array<std::int64_t, 3> in{}, out{};
        std::array<std::int64_t, 2> filter{};
        ls.read("in", in);
        ls.read("out", out);
        ls.read("filter", filter);
        spec.in_channels = in[0];
        spec.in_height = in[1];
        spec.in_width = in[2];
        spec.out_channels = out[0];
        spec.out_height = out[1];
        spec.out_width = out[2];
        spec.filter_height = filter[0];
        spec.filter_width = filter[1];
      }
      ls.finish();
      try {
        validate(spec);
      } catch (const Error& e) {
        throw ConfigError(lp, e.what());
      }
      m.layers.push_back(spec);
    }
  }
  require(!m.layers.empty(), path, "model needs a preset or layers");
  if (m.name.empty()) m.name = "model";
  s.finish();
  return m;
}

json model_to_json(const ModelSpec& m) {
  json j;
  j["name"] = m.name;
  const std::int64_t batch = m.layers.front().batch_size;
  const std::int64_t precision = m.layers.front().precision_bits;
  j["batch"] = batch;
  j["precision"] = precision;
  if (m.preset) {
    j["preset"] = std::string(to_string(*m.preset));
    return j;
  }
  json layers = json::array();
  for (const LayerSpec& s : m.layers) {
    json l;
    l["kind"] = kind_name(s.kind);
    if (s.kind == LayerKind::FullyConnected) {
      l["in_size"] = s.in_size;
      l["out_size"] = s.out_size;
    } else {
      l["in"] = {s.in_channels, s.in_height, s.in_width};
      l["out"] = {s.out_channels, s.out_height, s.out_width};
      l["filter"] = {s.filter_height, s.filter_width};
    }
    layers.push_back(l);
  }
  j["layers"] = layers;
  return j;
}

ModelSpec preset_spec(ModelPreset p) {
  ModelSpec m;
  m.name = std::string(to_string(p));
  m.preset = p;
  m.layers = preset_layers(p, 1, 32);
  return m;
}

}  // namespace

ExperimentConfig paper_default() {
  ExperimentConfig c;
  c.models = {preset_spec(ModelPreset::Vgg11Cifar10),
              preset_spec(ModelPreset::CnnFashionMnist)};
  c.gateway.flops_per_cycle = 8.0;
  c.gateway.switched_capacitance = 1e-24;
  c.gateway.transmit_power_w = 0.1;
  c.gateway.max_energy_j = 0.5;
  c.ap.flops_per_cycle = 32.0;
  c.ap.switched_capacitance = 1e-24;
  c.ap.max_frequency_hz = 1e8;
  c.ap.min_frequency_hz = 1e4;
  c.channel.path_loss_const = 1e-3;
  c.channel.reference_distance_m = 1.0;
  c.channel.path_loss_exponent = 3.0;
  c.channel.bandwidth_hz = 5e6;
  return c;
}

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  ExperimentConfig c = paper_default();
  const Section s(root, "");
  s.read("profile", c.profile);
  require(c.profile == "paper-default", "profile",
          "unknown profile '" + c.profile + "'");

  if (s.has("topology")) {
    const Section t = s.child("topology");
    t.read("num_aps", c.num_aps);
    t.read("gateways_per_ap", c.gateways_per_ap);
    t.read("devices_per_gateway", c.devices_per_gateway);
    t.read("a", c.a_matrix);
    t.read("b", c.b_matrix);
    t.finish();
  }
  if (s.has("ap_types")) {
    const json& arr = s.at("ap_types");
    require(arr.is_array(), "ap_types", "expected an array");
    c.ap_types.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const Section a(arr[i], "ap_types[" + std::to_string(i) + "]");
      ApTypeSpec spec;
      a.read("mean_arrivals", spec.mean_arrivals);
      a.read("max_energy_j", spec.max_energy_j);
      a.finish();
      c.ap_types.push_back(spec);
    }
  }
  s.read("ap_type_of_ap", c.ap_type_of_ap);
  if (s.has("models")) {
    const json& arr = s.at("models");
    require(arr.is_array(), "models", "expected an array");
    c.models.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = "models[" + std::to_string(i) + "]";
      c.models.push_back(parse_model(Section(arr[i], path), path));
    }
  }
  s.read("model_of_device", c.model_of_device);

  if (s.has("gateway")) {
    const Section g = s.child("gateway");
    g.read("flops_per_cycle", c.gateway.flops_per_cycle);
    g.read("switched_capacitance", c.gateway.switched_capacitance);
    g.read("transmit_power_w", c.gateway.transmit_power_w);
    g.read("max_energy_j", c.gateway.max_energy_j);
    g.read("frequency_range_hz", c.gateway_frequency_range_hz);
    g.read("distance_range_m", c.gateway_distance_range_m);
    g.finish();
  }
  if (s.has("ap")) {
    const Section a = s.child("ap");
    a.read("flops_per_cycle", c.ap.flops_per_cycle);
    a.read("switched_capacitance", c.ap.switched_capacitance);
    a.read("max_frequency_hz", c.ap.max_frequency_hz);
    a.read("min_frequency_hz", c.ap.min_frequency_hz);
    a.finish();
  }
  if (s.has("channel")) {
    const Section ch = s.child("channel");
    ch.read("path_loss_const", c.channel.path_loss_const);
    ch.read("reference_distance_m", c.channel.reference_distance_m);
    ch.read("path_loss_exponent", c.channel.path_loss_exponent);
    ch.read("bandwidth_hz", c.channel.bandwidth_hz);
    ch.read("noise_psd_dbm_per_hz", c.noise_psd_dbm_per_hz);
    ch.read_optional("interference_mean_w", c.interference_mean_w);
    ch.read_optional("interference_std_w", c.interference_std_w);
    ch.finish();
  }
  if (s.has("reputation")) {
    const Section r = s.child("reputation");
    r.read("alpha", c.reputation.alpha);
    r.read("beta", c.reputation.beta);
    r.read("p0", c.reputation.p0);
    r.read("u_min", c.reputation.u_min);
    r.read("u_max", c.reputation.u_max);
    if (r.has("g")) {
      const Section g = r.child("g");
      g.read("kind", c.reputation.kind);
      g.read_optional("kappa", c.reputation.kappa);
      g.read("c1", c.reputation.c1);
      g.read("c2", c.reputation.c2);
      g.read("points", c.reputation.table);
      g.finish();
    }
    r.finish();
  }
  if (s.has("solver")) {
    const Section v = s.child("solver");
    v.read("bcd_max_rounds", c.solver.bcd_max_rounds);
    v.read("bcd_tol", c.solver.bcd_tol);
    v.read("bisection_tol", c.solver.bisection_tol);
    v.read("bisection_max_iters", c.solver.bisection_max_iters);
    v.read("max_partition_nodes", c.max_partition_nodes);
    v.finish();
  }
  if (s.has("run")) {
    const Section r = s.child("run");
    r.read("V", c.V);
    r.read("T", c.T);
    r.read("seeds", c.seeds);
    if (r.has("policies")) {
      std::vector<std::string> names;
      r.read("policies", names);
      c.policies.clear();
      for (const auto& n : names) {
        try {
          c.policies.push_back(parse_policy(n));
        } catch (const Error& e) {
          throw ConfigError(r.field("policies"), e.what());
        }
      }
    }
    if (r.has("mode")) {
      std::string mode;
      r.read("mode", mode);
      require(mode == "strict" || mode == "lenient", r.field("mode"),
              "expected 'strict' or 'lenient'");
      c.strict = mode == "strict";
    }
    r.read("output_dir", c.output_dir);
    r.read("workers", c.workers);
    r.read("dump_realizations", c.dump_realizations);
    r.finish();
  }
  if (s.has("baselines")) {
    const Section b = s.child("baselines");
    b.read("wdpo_partition", c.baselines.wdpo_partition);
    b.read_optional("wtcm_difficulty", c.baselines.wtcm_difficulty);
    b.read("wtcm_queue_incentive", c.baselines.wtcm_queue_incentive);
    b.finish();
  }
  s.finish();
  validate_config(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string config_to_json(const ExperimentConfig& c, int indent) {
  json j;
  j["profile"] = c.profile;
  j["topology"] = {{"num_aps", c.num_aps},
                   {"gateways_per_ap", c.gateways_per_ap},
                   {"devices_per_gateway", c.devices_per_gateway}};
  if (!c.a_matrix.empty()) j["topology"]["a"] = c.a_matrix;
  if (!c.b_matrix.empty()) j["topology"]["b"] = c.b_matrix;
  j["ap_types"] = json::array();
  for (const auto& t : c.ap_types) {
    j["ap_types"].push_back(
        {{"mean_arrivals", t.mean_arrivals}, {"max_energy_j", t.max_energy_j}});
  }
  j["ap_type_of_ap"] = c.ap_type_of_ap;
  j["models"] = json::array();
  for (const auto& m : c.models) j["models"].push_back(model_to_json(m));
  if (!c.model_of_device.empty()) j["model_of_device"] = c.model_of_device;
  j["gateway"] = {{"flops_per_cycle", c.gateway.flops_per_cycle},
                  {"switched_capacitance", c.gateway.switched_capacitance},
                  {"transmit_power_w", c.gateway.transmit_power_w},
                  {"max_energy_j", c.gateway.max_energy_j},
                  {"frequency_range_hz", c.gateway_frequency_range_hz},
                  {"distance_range_m", c.gateway_distance_range_m}};
  j["ap"] = {{"flops_per_cycle", c.ap.flops_per_cycle},
             {"switched_capacitance", c.ap.switched_capacitance},
             {"max_frequency_hz", c.ap.max_frequency_hz},
             {"min_frequency_hz", c.ap.min_frequency_hz}};
  j["channel"] = {{"path_loss_const", c.channel.path_loss_const},
                  {"reference_distance_m", c.channel.reference_distance_m},
                  {"path_loss_exponent", c.channel.path_loss_exponent},
                  {"bandwidth_hz", c.channel.bandwidth_hz},
                  {"noise_psd_dbm_per_hz", c.noise_psd_dbm_per_hz}};
  j["channel"]["interference_mean_w"] =
      c.interference_mean_w ? json(*c.interference_mean_w) : json(nullptr);
  j["channel"]["interference_std_w"] =
      c.interference_std_w ? json(*c.interference_std_w) : json(nullptr);
  json g = {{"kind", c.reputation.kind}};
  g["kappa"] = c.reputation.kappa ? json(*c.reputation.kappa) : json(nullptr);
  if (c.reputation.kind == "log") {
    g["c1"] = c.reputation.c1;
    g["c2"] = c.reputation.c2;
  }
  if (c.reputation.kind == "table") g["points"] = c.reputation.table;
  j["reputation"] = {{"alpha", c.reputation.alpha},
                     {"beta", c.reputation.beta},
                     {"p0", c.reputation.p0},
                     {"u_min", c.reputation.u_min},
                     {"u_max", c.reputation.u_max},
                     {"g", g}};
  j["solver"] = {{"bcd_max_rounds", c.solver.bcd_max_rounds},
                 {"bcd_tol", c.solver.bcd_tol},
                 {"bisection_tol", c.solver.bisection_tol},
                 {"bisection_max_iters", c.solver.bisection_max_iters},
                 {"max_partition_nodes", c.max_partition_nodes}};
  std::vector<std::string> policies;
  for (Policy p : c.policies) policies.emplace_back(to_string(p));
  j["run"] = {{"V", c.V},
              {"T", c.T},
              {"seeds", c.seeds},
              {"policies", policies},
              {"mode", c.strict ? "strict" : "lenient"},
              {"output_dir", c.output_dir},
              {"workers", c.workers},
              {"dump_realizations", c.dump_realizations}};
  j["baselines"] = {{"wdpo_partition", c.baselines.wdpo_partition},
                    {"wtcm_queue_incentive", c.baselines.wtcm_queue_incentive}};
  j["baselines"]["wtcm_difficulty"] =
      c.baselines.wtcm_difficulty ? json(*c.baselines.wtcm_difficulty)
                                  : json(nullptr);
  return j.dump(indent);
}

void validate_config(const ExperimentConfig& c) {
  const bool explicit_topology = !c.a_matrix.empty() || !c.b_matrix.empty();
  if (explicit_topology) {
    require(!c.a_matrix.empty() && !c.b_matrix.empty(), "topology",
            "explicit topology needs both a and b");
    try {
      (void)Topology::from_matrices(c.a_matrix, c.b_matrix);
    } catch (const Error& e) {
      throw ConfigError("topology", e.what());
    }
  } else {
    require(c.num_aps >= 1, "topology.num_aps", "must be at least 1");
    require(c.gateways_per_ap >= 1, "topology.gateways_per_ap",
            "must be at least 1");
    require(c.devices_per_gateway >= 1, "topology.devices_per_gateway",
            "must be at least 1");
  }
  const std::size_t n_ap =
      explicit_topology ? c.b_matrix.front().size() : c.num_aps;
  const std::size_t n_dev = explicit_topology
                                ? c.a_matrix.size()
                                : c.num_aps * c.gateways_per_ap *
                                      c.devices_per_gateway;
  require(!c.ap_types.empty(), "ap_types", "need at least one AP type");
  for (std::size_t i = 0; i < c.ap_types.size(); ++i) {
    const std::string f = "ap_types[" + std::to_string(i) + "]";
    require(c.ap_types[i].mean_arrivals >= 0.0, f + ".mean_arrivals",
            "must be nonnegative");
    require(c.ap_types[i].max_energy_j >= 0.0, f + ".max_energy_j",
            "must be nonnegative");
  }
  require(c.ap_type_of_ap.size() == n_ap, "ap_type_of_ap",
          "needs one entry per AP (" + std::to_string(n_ap) + ")");
  for (int t : c.ap_type_of_ap) {
    require(t >= 1 && static_cast<std::size_t>(t) <= c.ap_types.size(),
            "ap_type_of_ap", "type index outside 1.." +
                                 std::to_string(c.ap_types.size()));
  }
  require(!c.models.empty(), "models", "need at least one model");
  if (!c.model_of_device.empty()) {
    require(c.model_of_device.size() == n_dev, "model_of_device",
            "needs one entry per device (" + std::to_string(n_dev) + ")");
    for (std::size_t k : c.model_of_device) {
      require(k < c.models.size(), "model_of_device",
              "model index out of range");
    }
  }
  const auto& fr = c.gateway_frequency_range_hz;
  require(fr[0] > 0.0 && fr[0] <= fr[1], "gateway.frequency_range_hz",
          "need 0 < low <= high");
  const auto& dr = c.gateway_distance_range_m;
  require(dr[0] > 0.0 && dr[0] <= dr[1], "gateway.distance_range_m",
          "need 0 < low <= high");
  require(c.gateway.flops_per_cycle > 0.0, "gateway.flops_per_cycle",
          "must be positive");
  require(c.gateway.switched_capacitance > 0.0,
          "gateway.switched_capacitance", "must be positive");
  require(c.gateway.transmit_power_w > 0.0, "gateway.transmit_power_w",
          "must be positive");
  require(c.gateway.max_energy_j >= 0.0, "gateway.max_energy_j",
          "must be nonnegative");
  require(c.ap.flops_per_cycle > 0.0, "ap.flops_per_cycle", "must be positive");
  require(c.ap.switched_capacitance > 0.0, "ap.switched_capacitance",
          "must be positive");
  require(c.ap.max_frequency_hz > 0.0, "ap.max_frequency_hz",
          "must be positive");
  require(c.ap.min_frequency_hz >= 0.0 &&
              c.ap.min_frequency_hz < c.ap.max_frequency_hz,
          "ap.min_frequency_hz", "need 0 <= f_min < f_max");
  require(c.channel.path_loss_const > 0.0, "channel.path_loss_const",
          "must be positive");
  require(c.channel.reference_distance_m > 0.0,
          "channel.reference_distance_m", "must be positive");
  require(c.channel.bandwidth_hz > 0.0, "channel.bandwidth_hz",
          "must be positive");
  if (c.interference_mean_w) {
    require(*c.interference_mean_w >= 0.0, "channel.interference_mean_w",
            "must be nonnegative");
  }
  if (c.interference_std_w) {
    require(*c.interference_std_w >= 0.0, "channel.interference_std_w",
            "must be nonnegative");
  }
  const ReputationSpec& r = c.reputation;
  require(r.p0 > 0.0 && r.p0 < 1.0, "reputation.p0", "must lie in (0, 1)");
  require(r.u_min < r.u_max, "reputation.u_min", "need u_min < u_max");
  require(r.kind == "affine" || r.kind == "log" || r.kind == "table",
          "reputation.g.kind", "expected 'affine', 'log' or 'table'");
  if (r.kappa) {
    require(*r.kappa > 0.0, "reputation.g.kappa", "must be positive");
  }
  if (r.kind == "log") {
    require(r.c1 > 0.0 && r.c2 > 0.0, "reputation.g", "c1, c2 must be positive");
  }
  if (r.kind == "table") {
    try {
      (void)ReputationFunction::table(r.table);
    } catch (const Error& e) {
      throw ConfigError("reputation.g.points", e.what());
    }
  }
  require(c.solver.bcd_max_rounds >= 1, "solver.bcd_max_rounds",
          "must be at least 1");
  require(c.solver.bcd_tol > 0.0, "solver.bcd_tol", "must be positive");
  require(c.solver.bisection_tol > 0.0, "solver.bisection_tol",
          "must be positive");
  require(c.solver.bisection_max_iters >= 1, "solver.bisection_max_iters",
          "must be at least 1");
  require(!c.V.empty(), "run.V", "need at least one V");
  for (double v : c.V) require(v > 0.0, "run.V", "every V must be positive");
  require(!c.seeds.empty(), "run.seeds", "need at least one seed");
  require(!c.policies.empty(), "run.policies", "need at least one policy");
  if (c.baselines.wtcm_difficulty) {
    require(*c.baselines.wtcm_difficulty > 0.0, "baselines.wtcm_difficulty",
            "must be positive");
  }
  if (!c.baselines.wdpo_partition.empty()) {
    require(c.baselines.wdpo_partition.size() == n_dev,
            "baselines.wdpo_partition", "needs one entry per device");
  }
}

Scenario build_scenario(const ExperimentConfig& c, std::uint64_t seed) {
  validate_config(c);
  Scenario sc;
  if (!c.a_matrix.empty()) {
    sc.topology = Topology::from_matrices(c.a_matrix, c.b_matrix);
  } else {
    sc.topology =
        Topology::regular(c.num_aps, c.gateways_per_ap, c.devices_per_gateway);
  }
  const Topology& topo = sc.topology;
  for (const ModelSpec& m : c.models) {
    sc.models.push_back(ModelProfile::from_specs(m.name, m.layers));
  }
  sc.model_of_device.resize(topo.num_devices());
  for (std::size_t n = 0; n < topo.num_devices(); ++n) {
    sc.model_of_device[n] = c.model_of_device.empty()
                                ? n % c.models.size()
                                : c.model_of_device[n];
  }
  sc.ap_type = c.ap_type_of_ap;
  sc.aps.resize(topo.num_aps(), c.ap);
  for (std::size_t j = 0; j < topo.num_aps(); ++j) {
    sc.aps[j].max_energy_j = c.ap_types[sc.ap_type[j] - 1].max_energy_j;
  }
  sc.mean_arrivals.resize(topo.num_devices());
  for (std::size_t n = 0; n < topo.num_devices(); ++n) {
    sc.mean_arrivals[n] =
        c.ap_types[sc.ap_type[topo.ap_of_device(n)] - 1].mean_arrivals;
  }

  auto rng = make_stream(seed, 0, kStaticStream);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  sc.gateways.resize(topo.num_gateways(), c.gateway);
  for (GatewayParams& g : sc.gateways) {
    const auto& fr = c.gateway_frequency_range_hz;
    const auto& dr = c.gateway_distance_range_m;
    g.frequency_hz = fr[0] + (fr[1] - fr[0]) * unit(rng);
    g.distance_m = dr[0] + (dr[1] - dr[0]) * unit(rng);
  }

  sc.channel = c.channel;
  sc.channel.noise_psd_w_per_hz =
      dbm_per_hz_to_w_per_hz(c.noise_psd_dbm_per_hz);
  const double floor = sc.channel.noise_power_w();
  sc.channel.interference_mean_w = c.interference_mean_w.value_or(floor);
  sc.channel.interference_std_w =
      c.interference_std_w.value_or(0.5 * sc.channel.interference_mean_w);
  sc.validate();
  return sc;
}

double calibrate_kappa(const Scenario& sc, double u_min, double u_max) {
  const Topology& topo = sc.topology;
  double total = 0.0;
  for (std::size_t n = 0; n < topo.num_devices(); ++n) {
    total += sc.mean_arrivals[n] * sc.model(n).suffix_flops(1);
  }
  const double per_ap = total / static_cast<double>(topo.num_aps());
  const double kappa = per_ap / (0.5 * (u_min + u_max));
  return kappa > 0.0 ? kappa : 1.0;
}

ReputationParams build_reputation(const ExperimentConfig& c,
                                  const Scenario& scenario) {
  const ReputationSpec& r = c.reputation;
  ReputationParams p;
  p.alpha = r.alpha;
  p.beta = r.beta;
  p.p0 = r.p0;
  p.u_min = r.u_min;
  p.u_max = r.u_max;
  if (r.kind == "affine") {
    p.g = ReputationFunction::affine(
        r.kappa.value_or(calibrate_kappa(scenario, r.u_min, r.u_max)));
  } else if (r.kind == "log") {
    p.g = ReputationFunction::logarithmic(r.c1, r.c2);
  } else {
    p.g = ReputationFunction::table(r.table);
  }
  p.validate();
  return p;
}

}  // namespace bdt
