#include "callout/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace callout {

using nlohmann::json;

std::string to_string(Objective objective) {
  switch (objective) {
    case Objective::kValue: return "value";
    case Objective::kGsp: return "gsp";
    case Objective::kPosted: return "posted";
    case Objective::kSales: return "sales";
  }
  return "unknown";
}

Objective objective_from_string(const std::string& s) {
  if (s == "value") return Objective::kValue;
  if (s == "gsp") return Objective::kGsp;
  if (s == "posted") return Objective::kPosted;
  if (s == "sales") return Objective::kSales;
  throw std::invalid_argument("unknown objective: " + s);
}

LpMode lp_mode_for(Objective objective) {
  return objective == Objective::kPosted ? LpMode::kPosted : LpMode::kValue;
}

std::vector<double> Scenario::rho() const {
  std::vector<double> out;
  for (const auto& n : networks) out.push_back(n.rho);
  return out;
}

std::vector<double> Scenario::bucket_sizes() const {
  std::vector<double> out;
  for (const auto& n : networks) out.push_back(n.bucket_size);
  return out;
}

std::vector<double> Scenario::token_rates() const {
  std::vector<double> out;
  for (const auto& n : networks) out.push_back(n.token_rate);
  return out;
}

std::vector<double> Scenario::arrival_probs() const {
  std::vector<double> out;
  for (const auto& t : type_specs) out.push_back(t.arrival_prob);
  return out;
}

std::vector<BidDistribution> effective_bids(const std::vector<BidDistribution>& raw, double min_price,
                                            Objective objective) {
  if (objective != Objective::kSales) return raw;
  std::vector<BidDistribution> out;
  for (const auto& d : raw) out.push_back(BidDistribution::binary(d.survival(min_price)));
  return out;
}

void Scenario::finalize() {
  const std::size_t n = networks.size();
  if (n == 0) throw ConfigError("networks", "at least one network is required");
  for (std::size_t i = 0; i < n; ++i) {
    const auto& net = networks[i];
    const std::string field = "networks[" + std::to_string(i) + "]";
    if (!(net.rho >= 0.0 && net.rho <= 1.0)) throw ConfigError(field + ".rho", "must lie in [0, 1]");
    if (!(net.bucket_size > 1.0)) throw ConfigError(field + ".bucket_size", "must exceed 1");
    if (!(net.token_rate >= 0.0)) throw ConfigError(field + ".token_rate", "must be non-negative");
  }
  if (!(constraints.arrival.mean_interarrival > 0.0)) {
    throw ConfigError("constraints.mean_interarrival", "must be positive");
  }
  if (bid_tables.empty()) throw ConfigError("bid_tables", "at least one table is required");
  for (std::size_t t = 0; t < bid_tables.size(); ++t) {
    const std::string field = "bid_tables[" + std::to_string(t) + "]";
    if (bid_tables[t].size() != n) throw ConfigError(field, "needs one distribution per network");
    for (std::size_t i = 0; i < n; ++i) {
      try {
        bid_tables[t][i].validate(scale);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(field + "[" + std::to_string(i) + "]", e.what());
      }
    }
  }
  if (type_specs.empty()) throw ConfigError("types", "at least one impression type is required");
  double total = 0.0;
  for (std::size_t j = 0; j < type_specs.size(); ++j) {
    const auto& t = type_specs[j];
    const std::string field = "types[" + std::to_string(j) + "]";
    if (!(t.arrival_prob >= 0.0)) throw ConfigError(field + ".arrival_prob", "must be non-negative");
    if (t.table < 0 || t.table >= static_cast<int>(bid_tables.size())) {
      throw ConfigError(field + ".table", "no such bid table");
    }
    if (!(t.min_price >= 0.0)) throw ConfigError(field + ".min_price", "must be non-negative");
    total += t.arrival_prob;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("types", "arrival probabilities must sum to 1");
  if (!(perturbation >= 0.0 && perturbation <= 1e-6)) throw ConfigError("perturbation.epsilon", "must lie in [0, 1e-6]");

  types.clear();
  for (std::size_t j = 0; j < type_specs.size(); ++j) {
    const auto& spec = type_specs[j];
    const auto& raw = bid_tables[spec.table];
    ImpressionType type;
    type.id = static_cast<int>(j);
    type.arrival_prob = spec.arrival_prob;
    type.vertical = spec.table;
    type.min_price = spec.min_price;
    type.bids = effective_bids(raw, spec.min_price, objective);
    for (std::size_t i = 0; i < n; ++i) {
      if (perturbation > 0.0) {
        std::seed_seq seq{perturbation_seed, static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(i)};
        Rng rng(seq);
        type.bids[i] = perturb_general_position(type.bids[i], perturbation, rng);
      }
      type.sale_prob.push_back(raw[i].survival(spec.min_price));
      type.expected_bid.push_back(raw[i].mean());
    }
    types.push_back(std::move(type));
  }
}

Scenario tiny_scenario(std::vector<std::vector<BidDistribution>> tables, std::vector<double> q,
                       std::vector<double> rho, std::vector<double> slots, Objective objective) {
  Scenario s;
  s.name = "tiny";
  s.objective = objective;
  s.scale = 1e9;
  s.slots = SlotProfile(std::move(slots));
  for (double r : rho) s.networks.push_back({r, kUnlimited, r});
  s.constraints.mode = ConstraintMode::kTimeAverage;
  s.constraints.arrival = {ArrivalKind::kUniform, 1.0};
  for (std::size_t j = 0; j < tables.size(); ++j) s.type_specs.push_back({q[j], static_cast<int>(j), 0.0});
  s.bid_tables = std::move(tables);
  s.finalize();
  return s;
}

Scenario random_tiny_scenario(Rng& rng, const TinyOptions& o) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto pick = [&](int hi) { return std::uniform_int_distribution<int>(1, std::max(1, hi))(rng); };
  const int n = pick(o.max_networks);
  const int types = pick(o.max_types);
  std::vector<std::vector<BidDistribution>> tables(types);
  for (auto& table : tables) {
    for (int i = 0; i < n; ++i) {
      // Some networks decline outright with positive probability.
      const bool declines = o.max_levels > 1 && unit(rng) < 0.5;
      const int levels = pick(o.max_levels - (declines ? 1 : 0));
      std::vector<double> values;
      while (static_cast<int>(values.size()) < levels) {
        const double v = std::round((0.05 + 0.95 * unit(rng)) * 100.0) / 100.0;
        if (std::find(values.begin(), values.end(), v) == values.end()) values.push_back(v);
      }
      std::sort(values.begin(), values.end());
      if (declines) values.insert(values.begin(), 0.0);
      std::vector<double> probs;
      double total = 0.0;
      for (std::size_t k = 0; k < values.size(); ++k) {
        probs.push_back(0.05 + unit(rng));
        total += probs.back();
      }
      for (double& p : probs) p /= total;
      table.emplace_back(std::move(values), std::move(probs));
    }
  }
  std::vector<double> q;
  double total = 0.0;
  for (int j = 0; j < types; ++j) {
    q.push_back(0.1 + unit(rng));
    total += q.back();
  }
  for (double& x : q) x /= total;
  std::vector<double> rho;
  for (int i = 0; i < n; ++i) rho.push_back(0.1 + 0.8 * unit(rng));
  std::vector<double> slots{1.0};
  for (int l = 1; l < pick(o.max_slots); ++l) slots.push_back(slots.back() * (0.3 + 0.6 * unit(rng)));
  return tiny_scenario(std::move(tables), std::move(q), std::move(rho), std::move(slots), o.objective);
}

Scenario generate_benchmark(const BenchmarkOptions& o) {
  if (o.networks < 1 || o.verticals < 1 || o.price_levels < 1) {
    throw std::invalid_argument("generate_benchmark: counts must be positive");
  }
  Scenario s;
  s.name = std::string("benchmark-") + std::string(to_string(o.kind));
  s.objective = o.objective;
  s.scale = o.scale;
  s.slots = SlotProfile(o.slots);
  s.constraints.mode = ConstraintMode::kTokenBucket;
  s.constraints.arrival = {ArrivalKind::kPoisson, o.mean_interarrival};
  s.perturbation = o.perturbation;
  s.perturbation_seed = o.seed;
  s.generator = o;

  Rng rng(o.seed);
  std::uniform_real_distribution<double> rate(o.token_rate_lo, o.token_rate_hi);
  for (int i = 0; i < o.networks; ++i) {
    NetworkSpec net;
    net.token_rate = rate(rng);
    net.bucket_size = o.bucket_size;
    net.rho = net.token_rate * o.mean_interarrival;
    s.networks.push_back(net);
  }
  for (int v = 0; v < o.verticals; ++v) {
    std::vector<BidDistribution> row;
    for (int i = 0; i < o.networks; ++i) {
      row.push_back(generate_benchmark_distribution(o.kind, o.scale, rng, {.bins = o.bins}));
    }
    s.bid_tables.push_back(std::move(row));
  }
  const double q = 1.0 / (o.verticals * o.price_levels);
  for (int v = 0; v < o.verticals; ++v) {
    for (int level = 0; level < o.price_levels; ++level) {
      const double frac = (level + 0.5) / o.price_levels;
      const double price = o.scale * (o.min_price_lo + (o.min_price_hi - o.min_price_lo) * frac);
      s.type_specs.push_back({q, v, price});
    }
  }
  s.finalize();
  return s;
}

namespace {

json dist_to_json(const BidDistribution& d) { return json{{"values", d.values()}, {"probs", d.probs()}}; }

const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(path + key, "missing");
  return j.at(key);
}

double get_number(const json& j, const std::string& key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_number()) throw ConfigError(path + key, "expected a number");
  return v.get<double>();
}

std::string get_string(const json& j, const std::string& key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_string()) throw ConfigError(path + key, "expected a string");
  return v.get<std::string>();
}

std::vector<double> get_numbers(const json& j, const std::string& key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_array()) throw ConfigError(path + key, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError(path + key, "expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

template <typename F>
auto parse_enum(const json& j, const std::string& key, const std::string& path, F&& from_string) {
  const std::string s = get_string(j, key, path);
  try {
    return from_string(s);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + key, e.what());
  }
}

BidDistribution dist_from_json(const json& j, const std::string& path) {
  try {
    return BidDistribution(get_numbers(j, "values", path), get_numbers(j, "probs", path));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

json generator_to_json(const BenchmarkOptions& o) {
  return json{{"seed", o.seed},
              {"kind", std::string(to_string(o.kind))},
              {"networks", o.networks},
              {"verticals", o.verticals},
              {"price_levels", o.price_levels},
              {"min_price_range", {o.min_price_lo, o.min_price_hi}},
              {"token_rate_range", {o.token_rate_lo, o.token_rate_hi}},
              {"bucket_size", o.bucket_size},
              {"mean_interarrival", o.mean_interarrival},
              {"bins", o.bins}};
}

}  // namespace

json scenario_to_json(const Scenario& s) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = s.name;
  j["objective"] = to_string(s.objective);
  j["scale"] = s.scale;
  j["slots"] = s.slots.discounts();
  json nets = json::array();
  for (const auto& n : s.networks) {
    json e{{"rho", n.rho}, {"token_rate", n.token_rate}};
    e["bucket_size"] = std::isinf(n.bucket_size) ? json(nullptr) : json(n.bucket_size);
    nets.push_back(e);
  }
  j["networks"] = nets;
  j["constraints"] = {{"mode", to_string(s.constraints.mode)},
                      {"arrival", to_string(s.constraints.arrival.kind)},
                      {"mean_interarrival", s.constraints.arrival.mean_interarrival}};
  json tables = json::array();
  for (const auto& row : s.bid_tables) {
    json r = json::array();
    for (const auto& d : row) r.push_back(dist_to_json(d));
    tables.push_back(r);
  }
  j["bid_tables"] = tables;
  json types = json::array();
  for (const auto& t : s.type_specs) {
    types.push_back({{"arrival_prob", t.arrival_prob}, {"table", t.table}, {"min_price", t.min_price}});
  }
  j["types"] = types;
  j["perturbation"] = {{"epsilon", s.perturbation}, {"seed", s.perturbation_seed}};
  if (s.generator) j["generator"] = generator_to_json(*s.generator);
  return j;
}

Scenario scenario_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("<root>", "expected an object");
  const double version = get_number(j, "schema_version", "");
  if (version != kSchemaVersion) throw ConfigError("schema_version", "unsupported version");
  Scenario s;
  if (j.contains("name")) s.name = get_string(j, "name", "");
  s.objective = parse_enum(j, "objective", "", objective_from_string);
  if (j.contains("scale")) s.scale = get_number(j, "scale", "");
  try {
    s.slots = SlotProfile(get_numbers(j, "slots", ""));
  } catch (const std::invalid_argument& e) {
    throw ConfigError("slots", e.what());
  }
  const json& nets = require(j, "networks", "");
  if (!nets.is_array()) throw ConfigError("networks", "expected an array");
  for (std::size_t i = 0; i < nets.size(); ++i) {
    const std::string path = "networks[" + std::to_string(i) + "].";
    NetworkSpec n;
    n.rho = get_number(nets[i], "rho", path);
    n.token_rate = nets[i].contains("token_rate") ? get_number(nets[i], "token_rate", path) : n.rho;
    if (nets[i].contains("bucket_size") && !nets[i]["bucket_size"].is_null()) {
      n.bucket_size = get_number(nets[i], "bucket_size", path);
    }
    s.networks.push_back(n);
  }
  const json& c = require(j, "constraints", "");
  s.constraints.mode = parse_enum(c, "mode", "constraints.", constraint_mode_from_string);
  s.constraints.arrival.kind = parse_enum(c, "arrival", "constraints.", arrival_kind_from_string);
  s.constraints.arrival.mean_interarrival = get_number(c, "mean_interarrival", "constraints.");
  const json& tables = require(j, "bid_tables", "");
  if (!tables.is_array()) throw ConfigError("bid_tables", "expected an array");
  for (std::size_t t = 0; t < tables.size(); ++t) {
    const std::string path = "bid_tables[" + std::to_string(t) + "]";
    if (!tables[t].is_array()) throw ConfigError(path, "expected an array");
    std::vector<BidDistribution> row;
    for (std::size_t i = 0; i < tables[t].size(); ++i) {
      row.push_back(dist_from_json(tables[t][i], path + "[" + std::to_string(i) + "]."));
    }
    s.bid_tables.push_back(std::move(row));
  }
  const json& types = require(j, "types", "");
  if (!types.is_array()) throw ConfigError("types", "expected an array");
  for (std::size_t k = 0; k < types.size(); ++k) {
    const std::string path = "types[" + std::to_string(k) + "].";
    TypeSpec t;
    t.arrival_prob = get_number(types[k], "arrival_prob", path);
    const double table = get_number(types[k], "table", path);
    if (table != std::floor(table)) throw ConfigError(path + "table", "expected an integer");
    t.table = static_cast<int>(table);
    t.min_price = types[k].contains("min_price") ? get_number(types[k], "min_price", path) : 0.0;
    s.type_specs.push_back(t);
  }
  if (j.contains("perturbation")) {
    const json& p = j["perturbation"];
    s.perturbation = get_number(p, "epsilon", "perturbation.");
    s.perturbation_seed = static_cast<std::uint64_t>(get_number(p, "seed", "perturbation."));
  }
  if (j.contains("generator")) {
    const json& g = j["generator"];
    BenchmarkOptions o;
    o.seed = static_cast<std::uint64_t>(get_number(g, "seed", "generator."));
    o.kind = parse_enum(g, "kind", "generator.", [](const std::string& k) { return distribution_kind_from_string(k); });
    o.objective = s.objective;
    o.slots = s.slots.discounts();
    o.networks = static_cast<int>(get_number(g, "networks", "generator."));
    o.verticals = static_cast<int>(get_number(g, "verticals", "generator."));
    o.price_levels = static_cast<int>(get_number(g, "price_levels", "generator."));
    const auto mp = get_numbers(g, "min_price_range", "generator.");
    const auto tr = get_numbers(g, "token_rate_range", "generator.");
    if (mp.size() != 2) throw ConfigError("generator.min_price_range", "expected two numbers");
    if (tr.size() != 2) throw ConfigError("generator.token_rate_range", "expected two numbers");
    o.min_price_lo = mp[0];
    o.min_price_hi = mp[1];
    o.token_rate_lo = tr[0];
    o.token_rate_hi = tr[1];
    o.bucket_size = get_number(g, "bucket_size", "generator.");
    o.mean_interarrival = get_number(g, "mean_interarrival", "generator.");
    o.bins = static_cast<int>(get_number(g, "bins", "generator."));
    o.scale = s.scale;
    o.perturbation = s.perturbation;
    s.generator = o;
  }
  s.finalize();
  return s;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path);
}

namespace {

json parse_file(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace

Scenario load_scenario(const std::string& path) { return scenario_from_json(parse_file(path)); }

void save_scenario(const Scenario& s, const std::string& path) { write_text_file(path, scenario_to_json(s).dump(1) + "\n"); }

json duals_to_json(const DualSolution& d) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["mode"] = std::string(to_string(d.mode));
  j["lambda"] = d.lambda;
  j["tau"] = d.tau;
  j["observed"] = d.observed;
  j["objective"] = d.objective;
  j["dual_objective"] = d.dual_objective;
  j["residual"] = d.residual;
  j["iterations"] = d.iterations;
  j["method"] = d.method;
  return j;
}

DualSolution duals_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("<root>", "expected an object");
  if (get_number(j, "schema_version", "") != kSchemaVersion) throw ConfigError("schema_version", "unsupported version");
  DualSolution d;
  d.mode = parse_enum(j, "mode", "", [](const std::string& m) { return lp_mode_from_string(m); });
  d.lambda = get_numbers(j, "lambda", "");
  const json& tau = require(j, "tau", "");
  if (!tau.is_array()) throw ConfigError("tau", "expected an array of arrays");
  for (std::size_t k = 0; k < tau.size(); ++k) {
    std::vector<double> row;
    if (!tau[k].is_array()) throw ConfigError("tau[" + std::to_string(k) + "]", "expected an array");
    for (const auto& x : tau[k]) {
      if (!x.is_number()) throw ConfigError("tau[" + std::to_string(k) + "]", "expected numbers");
      row.push_back(x.get<double>());
    }
    d.tau.push_back(std::move(row));
  }
  if (j.contains("observed")) d.observed = j["observed"].get<std::vector<bool>>();
  else d.observed.assign(d.tau.size(), true);
  if (j.contains("objective")) d.objective = get_number(j, "objective", "");
  if (j.contains("dual_objective")) d.dual_objective = get_number(j, "dual_objective", "");
  if (j.contains("residual")) d.residual = get_number(j, "residual", "");
  if (j.contains("iterations")) d.iterations = static_cast<int>(get_number(j, "iterations", ""));
  if (j.contains("method")) d.method = get_string(j, "method", "");
  return d;
}

DualSolution load_duals(const std::string& path) { return duals_from_json(parse_file(path)); }

void save_duals(const DualSolution& d, const std::string& path) { write_text_file(path, duals_to_json(d).dump(1) + "\n"); }

}  // namespace callout
