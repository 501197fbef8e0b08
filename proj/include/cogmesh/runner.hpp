#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cogmesh/engine.hpp"

namespace cogmesh {

/// Means over the trailing fraction of the samples (at least one sample).
struct WindowStats {
    double stddev = 0.0;
    double largest_cloud = 0.0;
    double cluster_count = 0.0;
};

WindowStats final_window(const std::vector<MetricsSample>& samples, double fraction = 0.2);

std::string metrics_csv(const std::vector<MetricsSample>& samples, int channel_count);
std::string events_text(const std::vector<std::string>& events);
std::string summary_text(const ScenarioConfig& config, const std::vector<MetricsSample>& samples);

/// Runs one scenario and writes metrics.csv, events.log, summary.txt and scenario.txt into `out`.
void run_single(const ScenarioConfig& config, const std::filesystem::path& out);

/// Independent runs, one per config. The parallel version spreads them over
/// OpenMP threads; the serial one is the reference it must match exactly.
std::vector<RunResult> run_batch(const std::vector<ScenarioConfig>& configs);
std::vector<RunResult> run_batch_serial(const std::vector<ScenarioConfig>& configs);

std::vector<ScenarioConfig> with_seeds(const ScenarioConfig& base, const std::vector<std::uint64_t>& seeds);

/// One seed_<n> directory per seed plus sweep.csv with the final-window means.
void run_sweep(const ScenarioConfig& config, const std::vector<std::uint64_t>& seeds,
               const std::filesystem::path& out);

struct CompareRow {
    std::uint64_t seed = 0;
    WindowStats on;
    WindowStats off;
};

struct CompareTable {
    std::vector<CompareRow> rows;
    WindowStats mean_on;
    WindowStats mean_off;
};

/// Swarm on and off for every seed, everything else identical. Needs at least two seeds.
CompareTable compare(const ScenarioConfig& config, const std::vector<std::uint64_t>& seeds);
std::string compare_csv(const CompareTable& table);
/// Writes compare.csv and returns the table it was built from.
CompareTable run_compare(const ScenarioConfig& config, const std::vector<std::uint64_t>& seeds,
                         const std::filesystem::path& out);

}  // namespace cogmesh
