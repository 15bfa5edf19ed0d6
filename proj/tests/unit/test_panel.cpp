#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "paneldml/panel.hpp"
#include "paneldml/rng.hpp"

using namespace paneldml;

TEST_CASE("row layout is unit-major") {
    CHECK(panel_row(0, 0, 4) == 0);
    CHECK(panel_row(0, 3, 4) == 3);
    CHECK(panel_row(1, 0, 4) == 4);
    CHECK(panel_row(2, 1, 4) == 9);
}

namespace {
PanelDataset random_panel(int N, int T, int J, std::uint64_t seed) {
    PanelDataset d;
    d.n_units = N;
    d.n_periods = T;
    d.n_confounders = J;
    RandomStream rs(seed);
    const int NT = N * T;
    d.outcome.resize(NT);
    d.treatment.resize(NT);
    d.confounders.resize(static_cast<std::size_t>(NT) * J);
    for (auto& v : d.outcome) v = rs.next_gaussian() * 1e3;
    for (auto& v : d.treatment) v = rs.next_gaussian() * 1e-7;
    for (auto& v : d.confounders) v = rs.next_gaussian();
    return d;
}
} // namespace

TEST_CASE("CSV round trip is lossless") {
    const auto d = random_panel(7, 5, 3, 42);
    std::ostringstream os;
    write_panel_csv(d, os);
    std::istringstream is(os.str());
    const auto back = read_panel_csv(is);
    REQUIRE(back.n_units == d.n_units);
    REQUIRE(back.n_periods == d.n_periods);
    REQUIRE(back.n_confounders == d.n_confounders);
    CHECK(back.outcome == d.outcome);
    CHECK(back.treatment == d.treatment);
    CHECK(back.confounders == d.confounders);

    // and the re-serialization is byte-identical
    std::ostringstream os2;
    write_panel_csv(back, os2);
    CHECK(os2.str() == os.str());
}

TEST_CASE("CSV header carries x1..xJ") {
    const auto d = random_panel(2, 2, 2, 7);
    std::ostringstream os;
    write_panel_csv(d, os);
    CHECK(os.str().rfind("unit,period,y,w,x1,x2\n", 0) == 0);
}

TEST_CASE("unbalanced or duplicate rows are rejected") {
    std::istringstream missing("unit,period,y,w\n1,1,0,0\n2,1,0,0\n2,2,0,0\n");
    CHECK_THROWS_AS(read_panel_csv(missing), ConfigError);

    std::istringstream dup("unit,period,y,w\n1,1,0,0\n1,1,0,0\n");
    CHECK_THROWS_AS(read_panel_csv(dup), ConfigError);
}

TEST_CASE("validate rejects non-finite and wrong sizes") {
    auto d = random_panel(2, 2, 1, 3);
    CHECK_NOTHROW(d.validate());
    d.outcome[0] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(d.validate(), ConfigError);
    d = random_panel(2, 2, 1, 3);
    d.treatment.pop_back();
    CHECK_THROWS_AS(d.validate(), DimensionError);
}
