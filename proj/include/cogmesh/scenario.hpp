#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "cogmesh/superframe.hpp"
#include "cogmesh/swarm_select.hpp"

namespace cogmesh {

enum class PuModel { Periodic, Markov };

struct ScenarioConfig {
    double area_width = 400.0;
    double area_height = 400.0;
    int su_count = 50;
    int pu_count = 0;
    int channel_count = 8;
    double comm_range = 120.0;
    std::uint64_t seed = 1;
    Tick duration_ticks = 2000;
    bool swarm_enabled = true;

    RewardParams reward;
    double alpha = 0.1;

    int quant_stages = 4;
    double q_max = 1.0;
    double pathloss_exponent = 2.0;
    int sense_window = 1;
    double background_interference = 1.0;

    PuModel pu_model = PuModel::Periodic;
    Tick pu_period = 500;
    double pu_duty = 1.0;
    bool pu_hop = true;
    double pu_p_on = 0.1;
    double pu_p_off = 0.1;
    double pu_protection_radius = 100.0;
    double pu_power = 1.0;

    SuperframeParams superframe;
    Tick scan_interval = 0;  // 0: one tick longer than max_superframe
    int neighbor_ttl = 3;    // superframes
    double offmaster_prob = 0.5;
    Tick start_spread = 100;
    int join_attempts = 3;

    Tick metrics_period = 25;
    int reform_cadence = 5;  // superframes; 0 disables reformation
    int negotiation_timeout = 2;

    Tick effective_scan_interval() const {
        return scan_interval > 0 ? scan_interval : superframe.max_superframe + 1;
    }

    bool operator==(const ScenarioConfig&) const = default;
};

/// Parse or validation failure. `line` is 0 when not tied to a file line.
class ScenarioError : public std::runtime_error {
public:
    ScenarioError(std::string key, int line, const std::string& message);
    const std::string& key() const { return key_; }
    int line() const { return line_; }
    const std::string& detail() const { return detail_; }

private:
    std::string key_;
    int line_;
    std::string detail_;
};

/// Throws ScenarioError naming the first out-of-range key.
void validate(const ScenarioConfig& config);

/// Applies one `key = value` assignment. Unknown keys and bad values throw.
void apply_setting(ScenarioConfig& config, const std::string& key, const std::string& value, int line = 0);

/// Line-based `key = value` text; `#` starts a comment. Missing keys keep defaults.
ScenarioConfig parse_scenario_text(const std::string& text);
ScenarioConfig parse_scenario(const std::filesystem::path& path);

/// Every key with its value, one per line, in a stable order. Parses back to the same config.
std::string to_text(const ScenarioConfig& config);

std::vector<std::string> scenario_keys();

}  // namespace cogmesh
