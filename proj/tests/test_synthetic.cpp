#include <algorithm>
#include <cmath>
#include <vector>

#include "catch_amalgamated.hpp"
#include "emos/synthetic.hpp"
#include "emos/verification.hpp"

using namespace emos;

namespace {

double raw_reliability(const std::vector<EnsembleForecast>& data, std::uint64_t seed) {
    Rng rng(seed);
    RankHistogram h(static_cast<int>(data.front().members.size()));
    for (const auto& f : data) h.add(rank_of_obs({f.members.data(), static_cast<std::size_t>(f.members.size())}, *f.obs, rng));
    return reliability_index(h);
}

ScenarioConfig big(std::uint64_t seed) {
    ScenarioConfig c;
    c.days = 500;
    c.stations = 20;
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("an undeflated, unbiased ensemble has a flat rank histogram") {
    const auto data = generate(big(1));
    REQUIRE(data.size() == 10000);
    CHECK(raw_reliability(data, 1) < 0.1);
}

TEST_CASE("deflation makes the rank histogram U-shaped") {
    ScenarioConfig c = big(2);
    c.deflation = 0.4;
    const auto data = generate(c);
    CHECK(raw_reliability(data, 2) > 0.4);

    Rng rng(2);
    RankHistogram h(10);
    for (const auto& f : data) h.add(rank_of_obs({f.members.data(), 10}, *f.obs, rng));
    const auto freq = h.frequencies();
    CHECK(freq.front() > 2.0 * freq[5]);
    CHECK(freq.back() > 2.0 * freq[5]);
}

TEST_CASE("generation is reproducible from the seed") {
    for (const auto& name : preset_names()) {
        INFO(name);
        const auto a = generate(preset(name, 5));
        const auto b = generate(preset(name, 5));
        REQUIRE(a.size() == b.size());
        bool same = true;
        for (std::size_t i = 0; i < a.size(); ++i)
            same = same && a[i].date == b[i].date && a[i].station == b[i].station && a[i].members == b[i].members &&
                   a[i].obs == b[i].obs;
        CHECK(same);
        const auto c = generate(preset(name, 6));
        CHECK(c.front().members != a.front().members);
    }
}

TEST_CASE("observations and members are never negative") {
    for (const auto& name : preset_names()) {
        INFO(name);
        const auto data = generate(preset(name, 11));
        bool ok = true;
        for (const auto& f : data) ok = ok && f.obs.has_value() && *f.obs >= 0.0 && f.members.minCoeff() >= 0.0;
        CHECK(ok);
    }
}

TEST_CASE("layout: days by stations, sorted by date then station") {
    ScenarioConfig c;
    c.days = 3;
    c.stations = 12;
    const auto data = generate(c);
    REQUIRE(data.size() == 36);
    CHECK(data[0].station == "ST01");
    CHECK(data[11].station == "ST12");
    CHECK(data[12].date == c.start + std::chrono::days(1));
    CHECK(std::is_sorted(data.begin(), data.end(), [](const auto& x, const auto& y) { return x.date < y.date; }));
}

TEST_CASE("members of one group are exchangeable") {
    ScenarioConfig c = big(13);
    c.groups = GroupSpec({1, 4});
    c.deflation = 0.6;
    c.group_bias = {1.0, 0.0};
    const auto data = generate(c);
    std::vector<double> mean(5, 0.0), sq(5, 0.0);
    for (const auto& f : data)
        for (int k = 0; k < 5; ++k) {
            mean[k] += f.members[k];
            sq[k] += f.members[k] * f.members[k];
        }
    const double n = static_cast<double>(data.size());
    for (int k = 0; k < 5; ++k) {
        mean[k] /= n;
        sq[k] = sq[k] / n - mean[k] * mean[k];
    }
    // Within the exchangeable group: equal moments up to sampling error.
    for (int k = 2; k < 5; ++k) {
        CHECK(std::abs(mean[k] - mean[1]) < 0.05);
        CHECK(std::abs(sq[k] / sq[1] - 1.0) < 0.05);
    }
    // The singleton group carries its own offset.
    CHECK(mean[0] - mean[1] > 0.8);
}

TEST_CASE("invalid scenarios are rejected") {
    ScenarioConfig c;
    c.days = 0;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = {};
    c.deflation = 0.0;
    CHECK_THROWS_AS(generate(c), ConfigError);
    c = {};
    c.deflation = 1.2;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = {};
    c.group_bias = {0.1, 0.2};
    CHECK_THROWS_AS(validate(c), ConfigError);
    c = {};
    c.truth = TnParams{0.0, Eigen::VectorXd::Constant(2, 0.1), 1.0, 1.0};
    CHECK_THROWS_AS(validate(c), ConfigError);
    CHECK_THROWS_AS(preset("stormy", 1), ConfigError);
}
