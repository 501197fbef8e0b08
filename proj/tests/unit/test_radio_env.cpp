#include <cmath>

#include "doctest.h"

#include "cogmesh/radio_env.hpp"

using namespace cogmesh;

namespace {

PrimaryUser pu_at(Position pos, int channel, double radius, double power) {
    PrimaryUser pu;
    pu.position = pos;
    pu.channel = ChannelId{channel};
    pu.model = PeriodicActivity{500, 1.0, false};
    pu.protection_radius = radius;
    pu.interference_power = power;
    return pu;
}

RadioEnvironment env_with(int channels, std::vector<PrimaryUser> pus) {
    RadioEnvironment env;
    env.channel_count = channels;
    env.pus = std::move(pus);
    return prime_environment(env);
}

}  // namespace

TEST_SUITE("radio_env") {

TEST_CASE("no PUs: every channel clean and at the top stage") {
    const auto env = env_with(4, {});
    const auto obs = sense(env, {10, 10}, 1);
    REQUIRE(obs.size() == 4);
    for (const auto& o : obs) {
        CHECK(o.available);
        CHECK(o.q_raw == doctest::Approx(1.0));
        CHECK(o.q_stage == 3);
    }
}

TEST_CASE("PU inside its protection radius blocks only its channel") {
    const auto env = env_with(4, {pu_at({0, 0}, 2, 50, 1)});
    const auto obs = sense(env, {30, 0}, 1);
    for (const auto& o : obs) CHECK(o.available == (o.channel != ChannelId{2}));
    CHECK(available_channels(obs) == std::vector<ChannelId>{ChannelId{0}, ChannelId{1}, ChannelId{3}});
}

TEST_CASE("far-field interference lowers quality") {
    const auto env = env_with(4, {pu_at({0, 0}, 1, 5, 100)});
    const auto obs = sense(env, {10, 0}, 1);
    // Oracle: I = P / (1 + d^2) with d = 10.
    const double i_acc = 100.0 / (1.0 + 10.0 * 10.0);
    CHECK(obs[1].available);
    CHECK(obs[1].q_raw == doctest::Approx(1.0 / (1.0 + i_acc)));
    CHECK(obs[1].q_raw == doctest::Approx(0.5025).epsilon(1e-3));
    CHECK(obs[0].q_raw == doctest::Approx(1.0));
}

TEST_CASE("window accumulates over recorded ticks") {
    auto env = env_with(2, {pu_at({0, 0}, 0, 5, 100)});
    env.history_limit = 3;
    Rng rng(1);
    env = step_environment(env, rng);
    env = step_environment(env, rng);
    const double one = 100.0 / 101.0;
    CHECK(sense(env, {10, 0}, 3)[0].q_raw == doctest::Approx(1.0 / (1.0 + 3 * one)));
    // A window longer than the history is clipped to it.
    CHECK(sense(env, {10, 0}, 10)[0].q_raw == doctest::Approx(1.0 / (1.0 + 3 * one)));
}

TEST_CASE("quantize bins") {
    CHECK(quantize(0.0, 1.0, 4) == 0);
    CHECK(quantize(1.0, 1.0, 4) == 3);
    CHECK(quantize(0.6, 1.0, 4) == 2);
    CHECK(quantize(1.2, 2.0, 4) == 2);
}

TEST_CASE("quantize is monotone and in range") {
    Rng rng(7);
    for (int k = 0; k < 10000; ++k) {
        const int stages = 2 + static_cast<int>(rng.below(8));
        const double a = rng.uniform(0.0, 1.5);
        const double b = rng.uniform(0.0, 1.5);
        const int sa = quantize(std::min(a, b), 1.0, stages);
        const int sb = quantize(std::max(a, b), 1.0, stages);
        CHECK(sa <= sb);
        CHECK(sa >= 0);
        CHECK(sb <= stages - 1);
    }
}

TEST_CASE("periodic PU hops to the next channel on the period boundary") {
    PrimaryUser pu = pu_at({0, 0}, 2, 10, 1);
    pu.model = PeriodicActivity{10, 1.0, true};
    auto env = env_with(4, {pu});
    Rng rng(1);
    for (int t = 0; t < 9; ++t) env = step_environment(env, rng);
    CHECK(env.tick == 9);
    CHECK(env.pus[0].channel == ChannelId{2});
    env = step_environment(env, rng);
    CHECK(env.pus[0].channel == ChannelId{3});
}

TEST_CASE("hopping PU visits every channel once per N periods") {
    PrimaryUser pu = pu_at({0, 0}, 0, 10, 1);
    pu.model = PeriodicActivity{5, 1.0, true};
    auto env = env_with(6, {pu});
    Rng rng(1);
    std::vector<int> visits(6, 0);
    for (int period = 0; period < 6; ++period) {
        ++visits[static_cast<std::size_t>(env.pus[0].channel.index)];
        for (int t = 0; t < 5; ++t) env = step_environment(env, rng);
    }
    CHECK(visits == std::vector<int>(6, 1));
    CHECK(env.pus[0].channel == ChannelId{0});
}

TEST_CASE("duty fraction") {
    PrimaryUser pu = pu_at({0, 0}, 0, 10, 1);
    pu.model = PeriodicActivity{10, 0.3, false};
    auto env = env_with(1, {pu});
    Rng rng(1);
    int on = env.pus[0].active ? 1 : 0;
    for (int t = 1; t < 100; ++t) {
        env = step_environment(env, rng);
        on += env.pus[0].active ? 1 : 0;
    }
    CHECK(on == 30);
}

TEST_CASE("Markov PU with p_on = 0 stays off") {
    PrimaryUser pu = pu_at({0, 0}, 0, 10, 1);
    pu.model = MarkovActivity{0.0, 1.0};
    auto env = env_with(1, {pu});
    Rng rng(3);
    for (int t = 0; t < 1000; ++t) {
        env = step_environment(env, rng);
        REQUIRE_FALSE(env.pus[0].active);
    }
}

TEST_CASE("Markov PU active fraction matches the stationary distribution") {
    PrimaryUser pu = pu_at({0, 0}, 0, 10, 1);
    pu.model = MarkovActivity{0.2, 0.1};
    auto env = env_with(1, {pu});
    Rng rng(11);
    long on = 0;
    constexpr long ticks = 100000;
    for (long t = 0; t < ticks; ++t) {
        env = step_environment(env, rng);
        on += env.pus[0].active ? 1 : 0;
    }
    const double stationary = 0.2 / (0.2 + 0.1);
    CHECK(std::abs(static_cast<double>(on) / ticks - stationary) <= 0.02);
}

TEST_CASE("removing a PU never hurts availability or quality") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<PrimaryUser> pus;
        const int n = 1 + static_cast<int>(rng.below(6));
        for (int i = 0; i < n; ++i) {
            pus.push_back(pu_at({rng.uniform(0, 200), rng.uniform(0, 200)}, static_cast<int>(rng.below(4)),
                                rng.uniform(5, 60), rng.uniform(0, 50)));
        }
        const Position at{rng.uniform(0, 200), rng.uniform(0, 200)};
        const auto full = sense(env_with(4, pus), at, 1);
        pus.erase(pus.begin() + static_cast<long>(rng.below(pus.size())));
        const auto fewer = sense(env_with(4, pus), at, 1);
        for (std::size_t c = 0; c < 4; ++c) {
            CHECK((fewer[c].available || !full[c].available));
            CHECK(fewer[c].q_raw >= full[c].q_raw);
        }
    }
}

TEST_CASE("same seed, same observation stream") {
    auto make = [] {
        std::vector<PrimaryUser> pus;
        for (int i = 0; i < 3; ++i) {
            auto pu = pu_at({50.0 * i, 20}, i, 30, 5);
            pu.model = MarkovActivity{0.3, 0.2};
            pus.push_back(pu);
        }
        return env_with(3, pus);
    };
    auto a = make();
    auto b = make();
    Rng ra(99);
    Rng rb(99);
    for (int t = 0; t < 200; ++t) {
        a = step_environment(a, ra);
        b = step_environment(b, rb);
        const auto oa = sense(a, {40, 40}, 1);
        const auto ob = sense(b, {40, 40}, 1);
        for (std::size_t c = 0; c < oa.size(); ++c) {
            REQUIRE(oa[c].available == ob[c].available);
            REQUIRE(oa[c].q_raw == ob[c].q_raw);
        }
    }
}

TEST_CASE("background field is deterministic and bounded") {
    const double v = background_field(42, ChannelId{3}, {12.5, 7.25});
    CHECK(v == background_field(42, ChannelId{3}, {12.5, 7.25}));
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
    CHECK(v != background_field(43, ChannelId{3}, {12.5, 7.25}));
}

TEST_CASE("validation names the field") {
    RadioEnvironment env;
    env.quant_stages = 1;
    CHECK_THROWS_WITH_AS(validate(env), doctest::Contains("quant_stages"), std::invalid_argument);
    env.quant_stages = 4;
    env.pus.push_back(pu_at({0, 0}, 5, 10, 1));
    CHECK_THROWS_WITH_AS(validate(env), doctest::Contains("channel"), std::invalid_argument);
}

}
