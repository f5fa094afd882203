// Copyright (c) 2026 The ppow-lab developers
// Distributed under the MIT software license, see the accompanying
// file COPYING or http://www.opensource.org/licenses/mit-license.php.

#include <ppow/experiment.hpp>

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

using namespace ppow;
using namespace ppow::experiment;

namespace {

std::string write_temp(const std::string& name, const std::string& text)
{
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream(path) << text;
    return path.string();
}

std::size_t column(const Table& t, const std::string& name)
{
    const auto it = std::find(t.header.begin(), t.header.end(), name);
    REQUIRE(it != t.header.end());
    return static_cast<std::size_t>(it - t.header.begin());
}

std::string error_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST_SUITE("experiment")
{
TEST_CASE("an empty config leaves the defaults")
{
    const auto path = write_temp("ppow_empty.cfg", "# nothing here\n\n");
    const auto spec = parse_config(path, {});
    const ExperimentSpec def;
    CHECK(spec.grid.n == def.grid.n);
    CHECK(spec.grid.alpha == def.grid.alpha);
    CHECK(spec.grid.delta_b == def.grid.delta_b);
    CHECK(spec.grid.T == def.grid.T);
    CHECK(spec.kind == def.kind);
}

TEST_CASE("a config overrides only the keys it names")
{
    const auto path = write_temp("ppow_deltas.cfg", "delta_b=20 delta_p=20\n");
    const auto spec = parse_config(path, {});
    CHECK(spec.grid.delta_b == std::vector<double>{20});
    CHECK(spec.grid.delta_p == std::vector<double>{20});
    CHECK(spec.grid.T == std::vector<double>{600});
    CHECK(spec.grid.n == std::vector<double>{50});
}

TEST_CASE("flags win over the config file")
{
    const auto path = write_temp("ppow_t.cfg", "T=600 alpha=0.3\n");
    const auto spec = parse_config(path, {{"T", "150"}});
    CHECK(spec.grid.T == std::vector<double>{150});
    CHECK(spec.grid.alpha == std::vector<double>{0.3});
}

TEST_CASE("lists and ranges")
{
    ExperimentSpec spec;
    apply_setting(spec, "n", "2:5");
    CHECK(spec.grid.n == std::vector<double>{2, 3, 4, 5});
    apply_setting(spec, "alpha", "0:0.5:0.25");
    REQUIRE(spec.grid.alpha.size() == 3);
    CHECK(spec.grid.alpha[2] == doctest::Approx(0.5));
    apply_setting(spec, "delta", "10,20");
    CHECK(spec.grid.delta_b == std::vector<double>{10, 20});
    CHECK(spec.grid.delta_p == std::vector<double>{10, 20});
    apply_setting(spec, "seeds", "3:5");
    CHECK(spec.seeds == std::vector<std::uint64_t>{3, 4, 5});
}

TEST_CASE("config errors carry the line number")
{
    ExperimentSpec spec;
    const auto msg = error_of([&] { apply_config_text(spec, "n=5\n\nbogus=1\n", "x.cfg"); });
    CHECK(msg.find("x.cfg:3:") == 0);
    CHECK(!error_of([&] { apply_setting(spec, "alpha", "abc"); }).empty());
}

TEST_CASE("an empty grid is rejected")
{
    ExperimentSpec spec;
    apply_setting(spec, "n", "");
    CHECK(error_of([&] { validate(spec); }).find("empty grid") != std::string::npos);

    ExperimentSpec sim;
    apply_setting(sim, "kind", "sim-gamma");
    CHECK(!error_of([&] { validate(sim); }).empty());
}

TEST_CASE("product and zip expansion")
{
    ExperimentSpec spec;
    spec.kind = Kind::Threshold;
    apply_setting(spec, "delta", "10,20");
    apply_setting(spec, "s", "0,20");
    CHECK(expand(spec).size() == 4);
    apply_setting(spec, "combine", "zip");
    const auto pts = expand(spec);
    REQUIRE(pts.size() == 2);
    CHECK(pts[1].delta_b == 20);
    CHECK(pts[1].s == 20);
    apply_setting(spec, "s", "0,20,40");
    CHECK(!error_of([&] { validate(spec); }).empty());
}

TEST_CASE("presets are valid")
{
    for (const auto& name : preset_names()) {
        CAPTURE(name);
        const auto spec = preset(name);
        CHECK_NOTHROW(validate(spec));
        CHECK(spec.out == name + ".csv");
    }
    CHECK(expand(preset("fig4")).size() == 99);
    CHECK_THROWS(preset("fig99"));
}

TEST_CASE("gamma-vs-n decreases with n")
{
    ExperimentSpec spec;
    apply_setting(spec, "n", "2:100");
    const auto t = evaluate(spec);
    const auto g = column(t, "gamma_bound");
    REQUIRE(t.rows.size() == 99);
    for (std::size_t i = 1; i < t.rows.size(); ++i)
        CHECK(std::stod(t.rows[i][g]) <= std::stod(t.rows[i - 1][g]));
}

TEST_CASE("threshold rows")
{
    auto spec = preset("thresholds");
    const auto t = evaluate(spec);
    const auto c = column(t, "threshold");
    REQUIRE(t.rows.size() == 5);
    CHECK(std::stod(t.rows[0][c]) == doctest::Approx(0.322462).epsilon(1e-5));
    CHECK(std::stod(t.rows[1][c]) == doctest::Approx(0.314796).epsilon(1e-5));
}

TEST_CASE("output is byte identical across runs and worker counts")
{
    auto spec = preset("fig7");
    spec.jobs = 1;
    const auto a = to_csv(evaluate(spec));
    spec.jobs = 4;
    const auto b = to_csv(evaluate(spec));
    CHECK(a == b);

    ExperimentSpec sim;
    apply_setting(sim, "kind", "sim-gamma");
    apply_setting(sim, "seeds", "1:3");
    apply_setting(sim, "post_ties", "30");
    apply_setting(sim, "honest_miners", "10");
    sim.jobs = 1;
    const auto s1 = to_csv(evaluate(sim));
    sim.jobs = 3;
    CHECK(to_csv(evaluate(sim)) == s1);
}

TEST_CASE("run_experiment writes the table and its sidecar")
{
    ExperimentSpec spec;
    apply_setting(spec, "n", "2:4");
    spec.out = (std::filesystem::temp_directory_path() / "ppow_run.csv").string();
    const auto t = run_experiment(spec);
    std::ifstream in(spec.out);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == to_csv(t));
    CHECK(std::filesystem::exists(spec.out + ".meta.json"));
}

TEST_CASE("number formatting")
{
    CHECK(format_number(0.0) == "0");
    CHECK(format_number(-0.0) == "0");
    CHECK(format_number(0.25) == "0.25");
    CHECK(format_number(std::nan("")) == "nan");
}
}
