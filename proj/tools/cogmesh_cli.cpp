#include <charconv>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cogmesh/runner.hpp"
#include "cogmesh/scenario.hpp"

namespace {

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        std::uint64_t v = 0;
        const auto [end, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (item.empty() || ec != std::errc{} || end != item.data() + item.size()) {
            throw std::invalid_argument("bad seed '" + item + "' in --seeds");
        }
        seeds.push_back(v);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return seeds;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CogMesh secondary-user network simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    std::int64_t ticks = 0;
    std::string swarm;
    std::string seeds_text;

    auto* run = app.add_subcommand("run", "run one scenario");
    run->add_option("--config", config_path, "scenario file")->required();
    auto* seed_opt = run->add_option("--seed", seed, "override seed");
    auto* ticks_opt = run->add_option("--ticks", ticks, "override duration_ticks");
    run->add_option("--swarm", swarm, "override swarm selection")->check(CLI::IsMember({"on", "off"}));
    run->add_option("--out", out_dir, "output directory");

    auto* sweep = app.add_subcommand("sweep", "run one scenario over several seeds");
    sweep->add_option("--config", config_path, "scenario file")->required();
    sweep->add_option("--seeds", seeds_text, "comma separated seeds")->required();
    sweep->add_option("--out", out_dir, "output directory")->required();

    auto* cmp = app.add_subcommand("compare", "swarm on versus off over several seeds");
    cmp->add_option("--config", config_path, "scenario file")->required();
    cmp->add_option("--seeds", seeds_text, "comma separated seeds")->required();
    cmp->add_option("--out", out_dir, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        cogmesh::ScenarioConfig config = cogmesh::parse_scenario(config_path);
        if (run->parsed()) {
            if (*seed_opt) config.seed = seed;
            if (*ticks_opt) config.duration_ticks = ticks;
            if (!swarm.empty()) config.swarm_enabled = swarm == "on";
            cogmesh::validate(config);
            cogmesh::run_single(config, out_dir);
        } else if (sweep->parsed()) {
            cogmesh::run_sweep(config, parse_seeds(seeds_text), out_dir);
        } else {
            const auto table = cogmesh::run_compare(config, parse_seeds(seeds_text), out_dir);
            std::cout << cogmesh::compare_csv(table);
        }
    } catch (const cogmesh::ScenarioError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
