#include "bess/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "bess/errors.hpp"

namespace bess {
namespace {

const char* kDefaults = R"(data:
  dir: ""
  registry: ""
  lmp: []
  regulation_prices: ""
  signal: ""
  regulation_hourly: ""
  fill_single_gaps: false
  beta_source: published_mileage
output:
  dir: out
bess:
  p_max: 10.0
  e_max: 10.0
  eta_c: 0.95
  eta_d: 0.95
  deg_speed: 3.0e-5
  storage_cost: 100000.0
  soc_eol: 0.8
  s0: 0.5
  perf_score: 1.0
dispatch:
  mode: joint
  soc_step: 0.5
  power_step: 0.5
window:
  start: ""
  end: ""
placement:
  n_es: 5
  max_per_cluster: 1
  min_distance: 50.0
  road_factor: 1.0
  big_m: ""
relocation:
  carrier_cost: 66.65
  truck_count: 4
  avg_speed: 60.0
  max_distance: 900.0
  labor_cost: 3000.0
  interconnection_cost: 2200.0
forecast:
  orders: ""
  allow_partial: false
cluster:
  min_explained: 0.9
  k_min: 2
  k_max: 10
  restarts: 10
  max_iterations: 300
synth:
  nodes: 10
  days: 90
  start: "2018-01-01"
  drift_days: 0
seed: 1
workers: 0
)";

void merge(YAML::Node base, const YAML::Node& extra, const std::string& prefix) {
    if (!extra.IsMap()) throw ValidationError(fmt::format("config section '{}' must be a mapping", prefix));
    for (const auto& kv : extra) {
        const auto key = kv.first.as<std::string>();
        const auto path = prefix.empty() ? key : prefix + "." + key;
        if (!base[key]) throw ValidationError("unknown config key " + path);
        YAML::Node target = base[key];
        if (target.IsMap()) {
            merge(target, kv.second, path);
        } else {
            if (kv.second.IsMap()) throw ValidationError("config key " + path + " takes a value, not a section");
            base[key] = YAML::Clone(kv.second);
        }
    }
}

template <typename T>
T get(const YAML::Node& root, const std::string& path) {
    YAML::Node node = YAML::Clone(root);
    std::stringstream parts(path);
    std::string part;
    while (std::getline(parts, part, '.')) node = node[part];
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        throw ValidationError(fmt::format("config key {} has an invalid value '{}'", path,
                                          node.IsScalar() ? node.Scalar() : std::string("<non-scalar>")));
    }
}

std::optional<Date> optional_date(const YAML::Node& root, const std::string& path) {
    const auto text = get<std::string>(root, path);
    if (text.empty()) return std::nullopt;
    try {
        return parse_date(text);
    } catch (const Error& e) {
        throw ValidationError(fmt::format("config key {}: {}", path, e.what()));
    }
}

}  // namespace

unsigned RunConfig::effective_workers() const {
    if (workers > 0) return workers;
    return std::max(1u, std::thread::hardware_concurrency());
}

struct ConfigLoader::Impl {
    YAML::Node tree;
};

ConfigLoader::ConfigLoader() : impl_(std::make_shared<Impl>()) { impl_->tree = YAML::Load(kDefaults); }

void ConfigLoader::merge_text(const std::string& yaml) {
    YAML::Node extra;
    try {
        extra = YAML::Load(yaml);
    } catch (const YAML::Exception& e) {
        throw ValidationError(std::string("config is not valid YAML: ") + e.what());
    }
    if (extra.IsNull()) return;
    merge(impl_->tree, extra, "");
}

void ConfigLoader::merge_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    merge_text(ss.str());
}

void ConfigLoader::set(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ValidationError("override must look like key.path=value: " + assignment);
    }
    set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

void ConfigLoader::set(const std::string& key, const std::string& value) {
    YAML::Node parsed;
    try {
        parsed = YAML::Load(value);
    } catch (const YAML::Exception&) {
        parsed = YAML::Node(value);
    }
    if (parsed.IsNull()) parsed = YAML::Node(std::string());
    // Build {a: {b: value}} and merge so unknown keys are caught the same way.
    YAML::Node nested = parsed;
    std::vector<std::string> parts;
    std::stringstream ss(key);
    std::string part;
    while (std::getline(ss, part, '.')) parts.push_back(part);
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
        YAML::Node wrap(YAML::NodeType::Map);
        wrap[*it] = nested;
        nested = wrap;
    }
    merge(impl_->tree, nested, "");
}

std::string ConfigLoader::snapshot() const {
    YAML::Emitter out;
    out << impl_->tree;
    return std::string(out.c_str()) + "\n";
}

RunConfig ConfigLoader::resolve() const {
    const auto& t = impl_->tree;
    RunConfig c;
    c.data_dir = get<std::string>(t, "data.dir");
    if (c.data_dir.empty()) {
        const char* root = std::getenv("BESS_DATA_ROOT");
        c.data_dir = root && *root ? root : "data/synthetic";
    }
    c.raw.registry = get<std::string>(t, "data.registry");
    c.raw.lmp = get<std::vector<std::string>>(t, "data.lmp");
    c.raw.regulation_prices = get<std::string>(t, "data.regulation_prices");
    c.raw.signal = get<std::string>(t, "data.signal");
    c.raw.regulation_hourly = get<std::string>(t, "data.regulation_hourly");
    c.fill_single_gaps = get<bool>(t, "data.fill_single_gaps");
    const auto beta = get<std::string>(t, "data.beta_source");
    if (beta == "published_mileage") {
        c.beta_source = BetaSource::kPublishedMileage;
    } else if (beta == "signal_trace") {
        c.beta_source = BetaSource::kSignalTrace;
    } else {
        throw ValidationError("data.beta_source must be published_mileage or signal_trace");
    }
    c.out_dir = get<std::string>(t, "output.dir");

    c.bess.p_max = get<double>(t, "bess.p_max");
    c.bess.e_max = get<double>(t, "bess.e_max");
    c.bess.eta_c = get<double>(t, "bess.eta_c");
    c.bess.eta_d = get<double>(t, "bess.eta_d");
    c.bess.deg_speed = get<double>(t, "bess.deg_speed");
    c.bess.storage_cost = get<double>(t, "bess.storage_cost");
    c.bess.soc_eol = get<double>(t, "bess.soc_eol");
    c.bess.s0 = get<double>(t, "bess.s0");
    c.bess.perf_score = get<double>(t, "bess.perf_score");
    try {
        c.bess.validate();
    } catch (const InvalidInput& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }

    const auto mode = get<std::string>(t, "dispatch.mode");
    if (mode == "joint") {
        c.mode = DispatchMode::kJoint;
    } else if (mode == "energy_only") {
        c.mode = DispatchMode::kEnergyOnly;
    } else {
        throw ValidationError("dispatch.mode must be joint or energy_only");
    }
    c.grid.soc_step_mwh = get<double>(t, "dispatch.soc_step");
    c.grid.power_step_mw = get<double>(t, "dispatch.power_step");

    c.window_start = optional_date(t, "window.start");
    c.window_end = optional_date(t, "window.end");
    if (c.window_start && c.window_end && *c.window_end < *c.window_start) {
        throw ValidationError("window.end is before window.start");
    }

    c.n_es = get<int>(t, "placement.n_es");
    c.max_per_cluster = get<int>(t, "placement.max_per_cluster");
    c.min_distance = get<double>(t, "placement.min_distance");
    c.road_factor = get<double>(t, "placement.road_factor");
    if (!(c.road_factor > 0.0)) throw ValidationError("placement.road_factor must be positive");
    if (!get<std::string>(t, "placement.big_m").empty()) c.big_m = get<double>(t, "placement.big_m");

    c.relocation.carrier_cost = get<double>(t, "relocation.carrier_cost");
    c.relocation.truck_count = get<int>(t, "relocation.truck_count");
    c.relocation.avg_speed = get<double>(t, "relocation.avg_speed");
    c.relocation.max_distance = get<double>(t, "relocation.max_distance");
    c.relocation.labor_cost = get<double>(t, "relocation.labor_cost");
    c.relocation.interconnection_cost = get<double>(t, "relocation.interconnection_cost");
    try {
        c.relocation.validate();
    } catch (const InvalidInput& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }

    const auto orders = get<std::string>(t, "forecast.orders");
    if (!orders.empty()) {
        int p = -1, d = -1, q = -1;
        char tail = 0;
        if (std::sscanf(orders.c_str(), "%d,%d,%d%c", &p, &d, &q, &tail) != 3 || p < 0 || p > 2 || d < 0 ||
            d > 1 || q < 0 || q > 2) {
            throw ValidationError("forecast.orders must be \"p,d,q\" with p, q in 0..2 and d in 0..1");
        }
        c.arima_orders = ArimaOrders{p, d, q};
    }
    c.allow_partial_months = get<bool>(t, "forecast.allow_partial");

    c.cluster.min_explained = get<double>(t, "cluster.min_explained");
    c.cluster.k_min = get<int>(t, "cluster.k_min");
    c.cluster.k_max = get<int>(t, "cluster.k_max");
    c.cluster.kmeans.restarts = get<int>(t, "cluster.restarts");
    c.cluster.kmeans.max_iterations = get<int>(t, "cluster.max_iterations");
    if (c.cluster.k_min < 1 || c.cluster.k_max < c.cluster.k_min) {
        throw ValidationError("cluster.k_min/k_max must satisfy 1 <= k_min <= k_max");
    }

    const auto nodes = get<long long>(t, "synth.nodes");
    if (nodes < 1) throw ValidationError("synth.nodes must be positive");
    c.synth.nodes = static_cast<std::size_t>(nodes);
    c.synth.days = get<int>(t, "synth.days");
    const auto start = optional_date(t, "synth.start");
    if (start) c.synth.start = *start;
    c.synth.drift_days = get<int>(t, "synth.drift_days");
    if (c.synth.days < 1 || c.synth.drift_days < 0) throw ValidationError("synth.days must be positive and synth.drift_days non-negative");

    c.seed = get<std::uint64_t>(t, "seed");
    const auto workers = get<long long>(t, "workers");
    if (workers < 0) throw ValidationError("workers must be non-negative");
    c.workers = static_cast<unsigned>(workers);
    return c;
}

RunConfig default_config() { return ConfigLoader().resolve(); }

}  // namespace bess
