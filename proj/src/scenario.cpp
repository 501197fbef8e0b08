#include "cogmesh/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

namespace cogmesh {

ScenarioError::ScenarioError(std::string key, int line, const std::string& message)
    : std::runtime_error((line > 0 ? "line " + std::to_string(line) + ": " : std::string{}) +
                         (key.empty() ? message : "'" + key + "': " + message)),
      key_(std::move(key)),
      line_(line),
      detail_(message) {}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct Field {
    std::string key;
    std::function<void(ScenarioConfig&, const std::string&)> set;
    std::function<std::string(const ScenarioConfig&)> get;
};

double to_double(const std::string& v) {
    double out = 0.0;
    const auto* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || ptr != end) throw std::invalid_argument("expected a number, got '" + v + "'");
    return out;
}

std::int64_t to_int(const std::string& v) {
    std::int64_t out = 0;
    const auto* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || ptr != end) throw std::invalid_argument("expected an integer, got '" + v + "'");
    return out;
}

std::uint64_t to_uint(const std::string& v) {
    std::uint64_t out = 0;
    const auto* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || ptr != end) throw std::invalid_argument("expected a non-negative integer, got '" + v + "'");
    return out;
}

bool to_bool(std::string v) {
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "off" || v == "no" || v == "0") return false;
    throw std::invalid_argument("expected a boolean, got '" + v + "'");
}

std::string fmt_double(double d) {
    std::ostringstream os;
    os << std::setprecision(17) << d;
    return os.str();
}

template <typename T>
Field real(std::string key, T ScenarioConfig::*member) {
    return {std::move(key), [member](ScenarioConfig& c, const std::string& v) { c.*member = to_double(v); },
            [member](const ScenarioConfig& c) { return fmt_double(c.*member); }};
}

template <typename T>
Field integer(std::string key, T ScenarioConfig::*member) {
    return {std::move(key),
            [member](ScenarioConfig& c, const std::string& v) {
                const auto x = to_int(v);
                if (x < static_cast<std::int64_t>(std::numeric_limits<T>::min()) ||
                    x > static_cast<std::int64_t>(std::numeric_limits<T>::max())) {
                    throw std::invalid_argument("integer out of range");
                }
                c.*member = static_cast<T>(x);
            },
            [member](const ScenarioConfig& c) { return std::to_string(c.*member); }};
}

Field boolean(std::string key, bool ScenarioConfig::*member) {
    return {std::move(key), [member](ScenarioConfig& c, const std::string& v) { c.*member = to_bool(v); },
            [member](const ScenarioConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

template <typename T>
Field sf_integer(std::string key, T SuperframeParams::*member) {
    return {std::move(key),
            [member](ScenarioConfig& c, const std::string& v) {
                const auto x = to_int(v);
                if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
                    throw std::invalid_argument("integer out of range");
                }
                c.superframe.*member = static_cast<T>(x);
            },
            [member](const ScenarioConfig& c) { return std::to_string(c.superframe.*member); }};
}

Field reward_field(std::string key, double RewardParams::*member) {
    return {std::move(key), [member](ScenarioConfig& c, const std::string& v) { c.reward.*member = to_double(v); },
            [member](const ScenarioConfig& c) { return fmt_double(c.reward.*member); }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        f.push_back(real("area_width", &ScenarioConfig::area_width));
        f.push_back(real("area_height", &ScenarioConfig::area_height));
        f.push_back(integer("su_count", &ScenarioConfig::su_count));
        f.push_back(integer("pu_count", &ScenarioConfig::pu_count));
        f.push_back(integer("channel_count", &ScenarioConfig::channel_count));
        f.push_back(real("comm_range", &ScenarioConfig::comm_range));
        f.push_back({"seed", [](ScenarioConfig& c, const std::string& v) { c.seed = to_uint(v); },
                     [](const ScenarioConfig& c) { return std::to_string(c.seed); }});
        f.push_back(integer("duration_ticks", &ScenarioConfig::duration_ticks));
        f.push_back(boolean("swarm_enabled", &ScenarioConfig::swarm_enabled));
        f.push_back(reward_field("reward_a", &RewardParams::a));
        f.push_back(reward_field("reward_b", &RewardParams::b));
        f.push_back(reward_field("reward_c", &RewardParams::c));
        f.push_back(real("alpha", &ScenarioConfig::alpha));
        f.push_back(integer("quant_stages", &ScenarioConfig::quant_stages));
        f.push_back(real("q_max", &ScenarioConfig::q_max));
        f.push_back(real("pathloss_exponent", &ScenarioConfig::pathloss_exponent));
        f.push_back(integer("sense_window", &ScenarioConfig::sense_window));
        f.push_back(real("background_interference", &ScenarioConfig::background_interference));
        f.push_back({"pu_model",
                     [](ScenarioConfig& c, const std::string& v) {
                         if (v == "periodic") c.pu_model = PuModel::Periodic;
                         else if (v == "markov") c.pu_model = PuModel::Markov;
                         else throw std::invalid_argument("expected 'periodic' or 'markov', got '" + v + "'");
                     },
                     [](const ScenarioConfig& c) {
                         return std::string(c.pu_model == PuModel::Periodic ? "periodic" : "markov");
                     }});
        f.push_back(integer("pu_period", &ScenarioConfig::pu_period));
        f.push_back(real("pu_duty", &ScenarioConfig::pu_duty));
        f.push_back(boolean("pu_hop", &ScenarioConfig::pu_hop));
        f.push_back(real("pu_p_on", &ScenarioConfig::pu_p_on));
        f.push_back(real("pu_p_off", &ScenarioConfig::pu_p_off));
        f.push_back(real("pu_protection_radius", &ScenarioConfig::pu_protection_radius));
        f.push_back(real("pu_power", &ScenarioConfig::pu_power));
        f.push_back(sf_integer("beacon_ticks", &SuperframeParams::beacon));
        f.push_back(sf_integer("minislot_ticks", &SuperframeParams::minislot));
        f.push_back(sf_integer("max_slots", &SuperframeParams::max_slots));
        f.push_back(sf_integer("data_ticks", &SuperframeParams::data));
        f.push_back(sf_integer("intra_ra_ticks", &SuperframeParams::intra_ra));
        f.push_back(sf_integer("public_ra_min", &SuperframeParams::public_ra_min));
        f.push_back(sf_integer("public_ra_max", &SuperframeParams::public_ra_max));
        f.push_back(sf_integer("detect_ticks", &SuperframeParams::detect));
        f.push_back(sf_integer("detect_periods", &SuperframeParams::detect_periods));
        f.push_back(sf_integer("max_superframe", &SuperframeParams::max_superframe));
        f.push_back(integer("scan_interval", &ScenarioConfig::scan_interval));
        f.push_back(integer("neighbor_ttl", &ScenarioConfig::neighbor_ttl));
        f.push_back(real("offmaster_prob", &ScenarioConfig::offmaster_prob));
        f.push_back(integer("start_spread", &ScenarioConfig::start_spread));
        f.push_back(integer("join_attempts", &ScenarioConfig::join_attempts));
        f.push_back(integer("metrics_period", &ScenarioConfig::metrics_period));
        f.push_back(integer("reform_cadence", &ScenarioConfig::reform_cadence));
        f.push_back(integer("negotiation_timeout", &ScenarioConfig::negotiation_timeout));
        return f;
    }();
    return table;
}

}  // namespace

void validate(const ScenarioConfig& c) {
    auto require = [](bool ok, const char* key, const char* what) {
        if (!ok) throw ScenarioError(key, 0, what);
    };
    require(c.area_width > 0.0, "area_width", "must be > 0");
    require(c.area_height > 0.0, "area_height", "must be > 0");
    require(c.su_count >= 0, "su_count", "must be >= 0");
    require(c.pu_count >= 0, "pu_count", "must be >= 0");
    require(c.channel_count >= 1, "channel_count", "must be >= 1");
    require(c.comm_range > 0.0, "comm_range", "must be > 0");
    require(c.duration_ticks >= 1, "duration_ticks", "must be >= 1");
    require(c.reward.a > 0.0, "reward_a", "must be > 0");
    require(c.reward.c > 0.0, "reward_c", "must be > 0");
    try {
        validate(c.reward);
    } catch (const std::invalid_argument& e) {
        throw ScenarioError("reward_b", 0, e.what());
    }
    require(c.alpha >= 0.0 && c.alpha <= 1.0, "alpha", "must be in [0, 1]");
    require(c.quant_stages >= 2, "quant_stages", "must be >= 2");
    require(c.q_max > 0.0, "q_max", "must be > 0");
    require(c.pathloss_exponent > 0.0, "pathloss_exponent", "must be > 0");
    require(c.sense_window >= 1, "sense_window", "must be >= 1");
    require(c.background_interference >= 0.0, "background_interference", "must be >= 0");
    require(c.pu_period >= 1, "pu_period", "must be >= 1");
    require(c.pu_duty >= 0.0 && c.pu_duty <= 1.0, "pu_duty", "must be in [0, 1]");
    require(c.pu_p_on >= 0.0 && c.pu_p_on <= 1.0, "pu_p_on", "must be in [0, 1]");
    require(c.pu_p_off >= 0.0 && c.pu_p_off <= 1.0, "pu_p_off", "must be in [0, 1]");
    require(c.pu_protection_radius > 0.0, "pu_protection_radius", "must be > 0");
    require(c.pu_power >= 0.0, "pu_power", "must be >= 0");
    try {
        validate(c.superframe);
    } catch (const std::invalid_argument& e) {
        throw ScenarioError("superframe", 0, e.what());
    }
    require(c.scan_interval == 0 || c.scan_interval > c.superframe.max_superframe, "scan_interval",
            "must exceed max_superframe (or be 0 for automatic)");
    require(c.neighbor_ttl >= 1, "neighbor_ttl", "must be >= 1");
    require(c.offmaster_prob >= 0.0 && c.offmaster_prob <= 1.0, "offmaster_prob", "must be in [0, 1]");
    require(c.start_spread >= 0, "start_spread", "must be >= 0");
    require(c.join_attempts >= 1, "join_attempts", "must be >= 1");
    require(c.metrics_period >= 1, "metrics_period", "must be >= 1");
    require(c.reform_cadence >= 0, "reform_cadence", "must be >= 0");
    require(c.negotiation_timeout >= 1, "negotiation_timeout", "must be >= 1");
}

void apply_setting(ScenarioConfig& config, const std::string& key, const std::string& value, int line) {
    for (const auto& f : fields()) {
        if (f.key != key) continue;
        try {
            f.set(config, value);
        } catch (const std::invalid_argument& e) {
            throw ScenarioError(key, line, e.what());
        }
        return;
    }
    throw ScenarioError(key, line, "unknown key");
}

ScenarioConfig parse_scenario_text(const std::string& text) {
    ScenarioConfig config;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    std::map<std::string, int> seen_at;
    while (std::getline(in, raw)) {
        ++line_no;
        if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        const std::string line = trim(raw);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ScenarioError("", line_no, "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ScenarioError("", line_no, "missing key");
        if (value.empty()) throw ScenarioError(key, line_no, "missing value");
        apply_setting(config, key, value, line_no);
        seen_at[key] = line_no;
    }
    try {
        validate(config);
    } catch (const ScenarioError& e) {
        auto it = seen_at.find(e.key());
        const int where = it == seen_at.end() ? 0 : it->second;
        if (where > 0) throw ScenarioError(e.key(), where, e.detail());
        throw;
    }
    return config;
}

ScenarioConfig parse_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScenarioError("", 0, "cannot read scenario file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario_text(buf.str());
}

std::string to_text(const ScenarioConfig& config) {
    std::string out;
    for (const auto& f : fields()) out += f.key + " = " + f.get(config) + "\n";
    return out;
}

std::vector<std::string> scenario_keys() {
    std::vector<std::string> keys;
    for (const auto& f : fields()) keys.push_back(f.key);
    return keys;
}

}  // namespace cogmesh
