#include "kpzlab/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "kpzlab/initial_data.hpp"
#include "kpzlab/nonlinearity.hpp"

namespace kpz {

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"universality", "ergodicity",    "invariance", "beta",
                                                "fractional-sum", "she", "simulate", "sample-bridge"};
    return names;
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ConfigError("not a number: '" + std::string(s) + "'");
    return v;
}

namespace {

template <typename Int>
Int parse_int(std::string_view s) {
    Int v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ConfigError("not an integer: '" + std::string(s) + "'");
    return v;
}

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
    std::vector<std::string_view> out;
    while (true) {
        const auto comma = s.find(',');
        const auto item = trim(s.substr(0, comma));
        if (!item.empty()) out.push_back(item);
        if (comma == std::string_view::npos) break;
        s.remove_prefix(comma + 1);
    }
    return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F&& fmt) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        out += fmt(items[i]);
    }
    return out;
}

struct Field {
    std::function<std::string(const ExperimentConfig&)> print;
    std::function<void(ExperimentConfig&, std::string_view)> parse;
};

// Ordered table of every key; printing and parsing share it so they cannot drift.
const std::vector<std::pair<std::string, Field>>& fields() {
    using C = ExperimentConfig;
    auto str = [](auto member) {
        return Field{[member](const C& c) { return c.*member; },
                     [member](C& c, std::string_view v) { c.*member = std::string(v); }};
    };
    auto dbl = [](auto get) {
        return Field{[get](const C& c) { return format_double(get(const_cast<C&>(c))); },
                     [get](C& c, std::string_view v) { get(c) = parse_double(v); }};
    };
    auto integer = [](auto get) {
        return Field{[get](const C& c) { return std::to_string(get(const_cast<C&>(c))); },
                     [get](C& c, std::string_view v) {
                         using T = std::remove_reference_t<decltype(get(c))>;
                         get(c) = parse_int<T>(v);
                     }};
    };
    static const std::vector<std::pair<std::string, Field>> table{
        {"n", integer([](C& c) -> int& { return c.sim.n; })},
        {"dt", dbl([](C& c) -> double& { return c.sim.dt; })},
        {"horizon", dbl([](C& c) -> double& { return c.sim.horizon; })},
        {"alpha", dbl([](C& c) -> double& { return c.sim.alpha; })},
        {"seed", integer([](C& c) -> std::uint64_t& { return c.sim.seed; })},
        {"grid_oversample", integer([](C& c) -> int& { return c.sim.grid_oversample; })},
        {"residual_factor", integer([](C& c) -> int& { return c.sim.residual_factor; })},
        {"nonlinearity", str(&C::nonlinearity)},
        {"nonlinearities",
         Field{[](const C& c) { return join(c.nonlinearities, [](const std::string& s) { return s; }); },
               [](C& c, std::string_view v) {
                   c.nonlinearities.clear();
                   for (auto item : split_list(v)) c.nonlinearities.emplace_back(item);
               }}},
        {"targets", Field{[](const C& c) { return join(c.targets, [](const std::string& s) { return s; }); },
                          [](C& c, std::string_view v) {
                              c.targets.clear();
                              for (auto item : split_list(v)) c.targets.emplace_back(item);
                          }}},
        {"eps", Field{[](const C& c) { return join(c.eps, format_double); },
                      [](C& c, std::string_view v) {
                          c.eps.clear();
                          for (auto item : split_list(v)) c.eps.push_back(parse_double(item));
                      }}},
        {"n_list", Field{[](const C& c) { return join(c.n_list, [](int n) { return std::to_string(n); }); },
                         [](C& c, std::string_view v) {
                             c.n_list.clear();
                             for (auto item : split_list(v)) c.n_list.push_back(parse_int<int>(item));
                         }}},
        {"alphas", Field{[](const C& c) { return join(c.alphas, format_double); },
                         [](C& c, std::string_view v) {
                             c.alphas.clear();
                             for (auto item : split_list(v)) c.alphas.push_back(parse_double(item));
                         }}},
        {"ensemble", integer([](C& c) -> std::size_t& { return c.ensemble; })},
        {"output_dir", str(&C::output_dir)},
        {"probes_file", str(&C::probes_file)},
        {"record_every", integer([](C& c) -> long& { return c.record_every; })},
        {"workers", integer([](C& c) -> unsigned& { return c.workers; })},
        {"quad_order", integer([](C& c) -> int& { return c.quad_order; })},
        {"beta", dbl([](C& c) -> double& { return c.beta; })},
        {"bridge_cutoff", integer([](C& c) -> int& { return c.bridge_cutoff; })},
        {"max_attempts", integer([](C& c) -> long& { return c.max_attempts; })},
        {"bridge_normalization", str(&C::bridge_normalization)},
        {"ks_level", dbl([](C& c) -> double& { return c.ks_level; })},
    };
    return table;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (std::find(experiment_names().begin(), experiment_names().end(), experiment) == experiment_names().end())
        throw ConfigError("unknown experiment: " + experiment);
    try {
        sim.validate();
        nonlinearity_by_name(nonlinearity);
        for (const auto& f : nonlinearities) nonlinearity_by_name(f);
        for (const auto& t : targets) target_by_name(t);
        bridge_normalization_from_string(bridge_normalization);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    for (int n : n_list)
        if (n < 4) throw ConfigError("every listed N must be >= 4");
    for (double e : eps)
        if (!(e > 0.0)) throw ConfigError("every eps must be positive");
    for (double a : alphas)
        if (!(a > 0.5 && a <= 1.0)) throw ConfigError("every alpha must lie in (1/2, 1]");
    if (ensemble < 1) throw ConfigError("ensemble must be >= 1");
    if (record_every < 0) throw ConfigError("record_every must be >= 0");
    if (quad_order < 32) throw ConfigError("quad_order must be >= 32");
    if (bridge_cutoff < 0) throw ConfigError("bridge_cutoff must be >= 0");
    if (max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
    if (!(ks_level > 0.0 && ks_level < 1.0)) throw ConfigError("ks_level must lie in (0, 1)");
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

std::string print_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << '[' << cfg.experiment << "]\n";
    for (const auto& [key, field] : fields()) out << key << " = " << field.print(cfg) << '\n';
    return out.str();
}

ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig cfg;
    bool seen_header = false;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const auto raw = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        const auto line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": bad section header");
            if (seen_header) throw ConfigError("line " + std::to_string(line_no) + ": only one section allowed");
            cfg.experiment = std::string(trim(line.substr(1, line.size() - 2)));
            seen_header = true;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        const auto& table = fields();
        const auto it = std::find_if(table.begin(), table.end(), [&](const auto& f) { return f.first == key; });
        if (it == table.end()) throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
        it->second.parse(cfg, value);
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

}  // namespace kpz
