#include "cogmesh/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace cogmesh {

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

void prepare_dir(const std::filesystem::path& out) {
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec || !std::filesystem::is_directory(out)) {
        throw std::runtime_error("cannot create output directory " + out.string());
    }
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(6) << v;
    return os.str();
}

void write_run(const ScenarioConfig& config, const RunResult& r, const std::filesystem::path& out) {
    prepare_dir(out);
    write_file(out / "metrics.csv", metrics_csv(r.samples, config.channel_count));
    write_file(out / "events.log", events_text(r.events));
    write_file(out / "summary.txt", summary_text(config, r.samples));
    write_file(out / "scenario.txt", to_text(config));
}

}  // namespace

WindowStats final_window(const std::vector<MetricsSample>& samples, double fraction) {
    WindowStats w;
    if (samples.empty()) return w;
    const auto n = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(samples.size()))));
    const auto first = samples.size() - std::min(n, samples.size());
    for (std::size_t i = first; i < samples.size(); ++i) {
        w.stddev += samples[i].stddev;
        w.largest_cloud += samples[i].largest_cloud;
        w.cluster_count += samples[i].cluster_count;
    }
    const double k = static_cast<double>(samples.size() - first);
    w.stddev /= k;
    w.largest_cloud /= k;
    w.cluster_count /= k;
    return w;
}

std::string metrics_csv(const std::vector<MetricsSample>& samples, int channel_count) {
    std::ostringstream os;
    os << "tick,stddev,largest_cloud,cluster_count";
    for (int c = 0; c < channel_count; ++c) os << ",count_ch" << c;
    os << '\n';
    for (const auto& s : samples) {
        os << s.tick << ',' << fmt(s.stddev) << ',' << s.largest_cloud << ',' << s.cluster_count;
        for (int c = 0; c < channel_count; ++c) os << ',' << (c < static_cast<int>(s.counts.size()) ? s.counts[c] : 0);
        os << '\n';
    }
    return os.str();
}

std::string events_text(const std::vector<std::string>& events) {
    std::string out;
    for (const auto& e : events) {
        out += e;
        out += '\n';
    }
    return out;
}

std::string summary_text(const ScenarioConfig& config, const std::vector<MetricsSample>& samples) {
    const WindowStats w = final_window(samples);
    std::ostringstream os;
    os << "seed " << config.seed << '\n';
    os << "swarm " << (config.swarm_enabled ? "on" : "off") << '\n';
    os << "samples " << samples.size() << '\n';
    os << "window_samples " << (samples.empty() ? 0 : std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.2 * samples.size())))) << '\n';
    os << "mean_stddev " << fmt(w.stddev) << '\n';
    os << "mean_largest_cloud " << fmt(w.largest_cloud) << '\n';
    os << "mean_cluster_count " << fmt(w.cluster_count) << '\n';
    return os.str();
}

void run_single(const ScenarioConfig& config, const std::filesystem::path& out) {
    prepare_dir(out);
    write_run(config, run(config), out);
}

std::vector<RunResult> run_batch(const std::vector<ScenarioConfig>& configs) {
    std::vector<RunResult> results(configs.size());
    const auto n = static_cast<std::int64_t>(configs.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < n; ++i) results[i] = run(configs[i]);
    return results;
}

std::vector<RunResult> run_batch_serial(const std::vector<ScenarioConfig>& configs) {
    std::vector<RunResult> results;
    results.reserve(configs.size());
    for (const auto& c : configs) results.push_back(run(c));
    return results;
}

std::vector<ScenarioConfig> with_seeds(const ScenarioConfig& base, const std::vector<std::uint64_t>& seeds) {
    std::vector<ScenarioConfig> out;
    for (auto s : seeds) {
        ScenarioConfig c = base;
        c.seed = s;
        out.push_back(c);
    }
    return out;
}

void run_sweep(const ScenarioConfig& config, const std::vector<std::uint64_t>& seeds,
               const std::filesystem::path& out) {
    if (seeds.empty()) throw std::invalid_argument("sweep needs at least one seed");
    prepare_dir(out);
    const auto configs = with_seeds(config, seeds);
    const auto results = run_batch(configs);
    std::ostringstream os;
    os << "seed,mean_stddev,mean_largest_cloud,mean_cluster_count\n";
    for (std::size_t i = 0; i < configs.size(); ++i) {
        write_run(configs[i], results[i], out / ("seed_" + std::to_string(seeds[i])));
        const auto w = final_window(results[i].samples);
        os << seeds[i] << ',' << fmt(w.stddev) << ',' << fmt(w.largest_cloud) << ',' << fmt(w.cluster_count) << '\n';
    }
    write_file(out / "sweep.csv", os.str());
    write_file(out / "scenario.txt", to_text(config));
}

CompareTable compare(const ScenarioConfig& config, const std::vector<std::uint64_t>& seeds) {
    if (seeds.size() < 2) throw std::invalid_argument("compare needs at least two seeds");
    std::vector<ScenarioConfig> configs;
    for (auto s : seeds) {
        ScenarioConfig c = config;
        c.seed = s;
        c.swarm_enabled = true;
        configs.push_back(c);
        c.swarm_enabled = false;
        configs.push_back(c);
    }
    const auto results = run_batch(configs);
    CompareTable t;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        CompareRow row{seeds[i], final_window(results[2 * i].samples), final_window(results[2 * i + 1].samples)};
        t.mean_on.stddev += row.on.stddev;
        t.mean_on.largest_cloud += row.on.largest_cloud;
        t.mean_on.cluster_count += row.on.cluster_count;
        t.mean_off.stddev += row.off.stddev;
        t.mean_off.largest_cloud += row.off.largest_cloud;
        t.mean_off.cluster_count += row.off.cluster_count;
        t.rows.push_back(row);
    }
    const double k = static_cast<double>(seeds.size());
    for (WindowStats* w : {&t.mean_on, &t.mean_off}) {
        w->stddev /= k;
        w->largest_cloud /= k;
        w->cluster_count /= k;
    }
    return t;
}

std::string compare_csv(const CompareTable& t) {
    std::ostringstream os;
    os << "seed,stddev_on,stddev_off,largest_cloud_on,largest_cloud_off\n";
    for (const auto& r : t.rows) {
        os << r.seed << ',' << fmt(r.on.stddev) << ',' << fmt(r.off.stddev) << ',' << fmt(r.on.largest_cloud) << ','
           << fmt(r.off.largest_cloud) << '\n';
    }
    os << "mean," << fmt(t.mean_on.stddev) << ',' << fmt(t.mean_off.stddev) << ',' << fmt(t.mean_on.largest_cloud)
       << ',' << fmt(t.mean_off.largest_cloud) << '\n';
    return os.str();
}

CompareTable run_compare(const ScenarioConfig& config, const std::vector<std::uint64_t>& seeds,
                         const std::filesystem::path& out) {
    const CompareTable t = compare(config, seeds);
    prepare_dir(out);
    write_file(out / "compare.csv", compare_csv(t));
    write_file(out / "scenario.txt", to_text(config));
    return t;
}

}  // namespace cogmesh
