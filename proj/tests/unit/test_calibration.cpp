// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ristwin/calibration.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <random>

using namespace ristwin;
using nlohmann::json;

namespace
{
    const SystemPreset &preset4g() { return preset_by_name("4G"); }

    TraceConfig trace_config(std::int64_t rays = 1000000)
    {
        TraceConfig t;
        t.ray_count = rays;
        return t;
    }

    Scene canyon() { return load_scene(RISTWIN_DATA_DIR "/canyon.json", preset4g().frequency_hz()); }

    // Canyon without the south slab: one reflecting building.
    Scene single_building()
    {
        Scene s = canyon();
        s.buildings.erase(s.buildings.begin() + 1);
        return s;
    }

    // Two buildings 300 m apart, each with its own base station, so region
    // sets do not overlap and each sector dominates one end.
    Scene two_sites()
    {
        return parse_scene(json::parse(R"({
          "buildings": [
            {"id": "a", "footprint": [[0, 10], [40, 10], [40, 20], [0, 20]], "height": 20},
            {"id": "b", "footprint": [[300, 10], [340, 10], [340, 20], [300, 20]], "height": 20}
          ],
          "bs_sites": [
            {"id": "s0", "position": [20, -100, 30], "sectors": [{"bearing_deg": 0, "tilt_deg": 4, "tx_power_dbm": -5}]},
            {"id": "s1", "position": [320, -100, 30], "sectors": [{"bearing_deg": 0, "tilt_deg": 4, "tx_power_dbm": -5}]}
          ],
          "area": {"min": [-20, -40], "max": [360, 10]}
        })"),
                           preset4g().frequency_hz());
    }

    MeasurementSet uniform_cell(int n, double rsrp, Vec2 lo)
    {
        MeasurementSet set;
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(0.0, 10.0);
        for (int i = 0; i < n; ++i)
            set.samples.push_back({{lo.x + u(rng), lo.y + u(rng)}, rsrp, 0});
        return set;
    }

    void set_all(Scene &s, double eps, double scattering)
    {
        for (auto &b : s.buildings)
        {
            b.material.relative_permittivity = eps;
            b.material.scattering_coefficient = scattering;
        }
    }
}

TEST_CASE("25 equal samples in one cell form one region")
{
    const Scene s = canyon();
    const auto regions = aggregate_regions(uniform_cell(25, -80.0, {20, -10}), s);
    REQUIRE(regions.size() == 1);
    CHECK(regions[0].count() == 25);
    CHECK(regions[0].mean_rsrp_dbm == doctest::Approx(-80.0));
    CHECK(regions[0].ix == 2);
    CHECK(regions[0].iy == -1);
}

TEST_CASE("19 samples are not enough for a region")
{
    CHECK(aggregate_regions(uniform_cell(19, -80.0, {20, -10}), canyon()).empty());
}

TEST_CASE("regions along a drive route match a direct re-binning")
{
    const Scene s = canyon();
    MeasurementSet set;
    std::mt19937_64 rng(11);
    std::normal_distribution<double> noise(0.0, 3.0);
    // diagonal route through 12+ cells with uneven dwell
    for (int i = 0; i < 3000; ++i)
    {
        const double t = i / 3000.0;
        const Vec2 p{-15.0 + 90.0 * t + 2.0 * std::sin(40.0 * t), -35.0 + 30.0 * t * t};
        set.samples.push_back({p, -90.0 + 10.0 * std::cos(7.0 * t) + noise(rng), 0});
    }
    const auto regions = aggregate_regions(set, s);

    std::map<std::pair<long, long>, std::vector<double>> bins;
    for (const auto &m : set.samples)
        bins[{static_cast<long>(std::floor(m.position.y / 10.0)), static_cast<long>(std::floor(m.position.x / 10.0))}]
            .push_back(m.rsrp_dbm);
    std::vector<std::pair<std::pair<long, long>, double>> oracle;
    int cells = 0;
    for (const auto &[k, v] : bins)
    {
        ++cells;
        if (v.size() < 20)
            continue;
        double sum = 0.0;
        for (double r : v)
            sum += r;
        oracle.push_back({k, sum / v.size()});
    }
    REQUIRE(cells >= 12);
    REQUIRE(regions.size() == oracle.size());
    for (std::size_t i = 0; i < regions.size(); ++i)
    {
        CHECK(regions[i].iy == oracle[i].first.first);
        CHECK(regions[i].ix == oracle[i].first.second);
        CHECK(regions[i].mean_rsrp_dbm == doctest::Approx(oracle[i].second).epsilon(1e-12));
        for (int b : regions[i].linked_buildings)
            CHECK(footprint_box_distance(s.buildings[b].footprint, regions[i].min, regions[i].max) <= 100.0);
    }
}

TEST_CASE("footprint to box distance")
{
    const std::vector<Vec2> sq{{0, 0}, {10, 0}, {10, 10}, {0, 10}};
    CHECK(footprint_box_distance(sq, {20, 0}, {30, 10}) == doctest::Approx(10.0));
    CHECK(footprint_box_distance(sq, {13, 14}, {20, 20}) == doctest::Approx(5.0));
    CHECK(footprint_box_distance(sq, {5, 5}, {6, 6}) == 0.0);
    CHECK(footprint_box_distance(sq, {-5, -5}, {15, 15}) == 0.0);
}

TEST_CASE("no qualifying regions is a no-op")
{
    Scene s = canyon();
    const Scene before = s;
    CalibrationConfig cc;
    const auto report = calibrate(s, preset4g(), uniform_cell(5, -80.0, {20, -5}), cc, trace_config(100000));
    CHECK(report.no_op);
    CHECK(!report.warnings.empty());
    CHECK(calibration_report_to_json(report)["status"] == "no-op");
    for (std::size_t b = 0; b < s.buildings.size(); ++b)
        CHECK(to_vector(s.buildings[b].material) == to_vector(before.buildings[b].material));
}

TEST_CASE("overshooting simulation lowers the permittivity")
{
    Scene s = single_building();
    MeasurementSet meas = synthesize_measurements(s, preset4g(), trace_config(), 30, 0.0, 5);
    for (auto &m : meas.samples)
        m.rsrp_dbm -= 3.0;
    CalibrationConfig cc;
    cc.steps = 1;
    const double eps0 = s.buildings[0].material.relative_permittivity;
    const auto report = calibrate(s, preset4g(), meas, cc, trace_config());
    REQUIRE(report.groups.size() == 1);
    REQUIRE(report.groups[0].trajectory.size() >= 2);
    CHECK(report.groups[0].trajectory[1][0] < eps0);
}

TEST_CASE("synthetic ground truth is recovered")
{
    Scene truth = canyon();
    set_all(truth, 7.0, 0.5);
    const auto meas = synthesize_measurements(truth, preset4g(), trace_config(), 30, 1.0, 7);
    Scene s = canyon();
    const auto report = calibrate(s, preset4g(), meas, CalibrationConfig{}, trace_config());
    REQUIRE(!report.no_op);
    CHECK(std::abs(report.post.mean) <= 1.0);
    CHECK(report.post.std <= 0.5 * report.pre.std);
    for (const auto &p : report.passes)
        for (std::size_t i = 1; i < p.best_loss_history.size(); ++i)
            CHECK(p.best_loss_history[i] <= p.best_loss_history[i - 1]);
}

TEST_CASE("calibrating against the current state keeps it")
{
    Scene s = canyon();
    const Scene before = s;
    const auto meas = synthesize_measurements(s, preset4g(), trace_config(), 30, 0.0, 9);
    CalibrationConfig cc;
    const auto report = calibrate(s, preset4g(), meas, cc, trace_config());
    REQUIRE(!report.groups.empty());
    for (std::size_t b = 0; b < s.buildings.size(); ++b)
    {
        const auto a = to_vector(before.buildings[b].material);
        const auto z = to_vector(s.buildings[b].material);
        CHECK(std::abs(z[0] - a[0]) <= cc.fd_step_permittivity);
        CHECK(std::abs(z[1] - a[1]) <= std::max(cc.fd_step_conductivity_rel * a[1], cc.fd_step_conductivity_floor));
        CHECK(std::abs(z[2] - a[2]) <= cc.fd_step_scattering);
    }
}

TEST_CASE("bounds hold and earlier passes stay frozen")
{
    Scene truth = two_sites();
    set_all(truth, 15.0, 1.0);
    const auto meas = synthesize_measurements(truth, preset4g(), trace_config(), 30, 0.0, 2);
    Scene s = two_sites();
    CalibrationConfig cc;
    cc.steps = 40;
    cc.lr = 0.3;
    const auto report = calibrate(s, preset4g(), meas, cc, trace_config());
    REQUIRE(report.passes.size() == 2);
    REQUIRE(report.groups.size() == 2);

    std::set<int> seen;
    for (const auto &p : report.passes)
        for (int g : p.groups)
            CHECK(seen.insert(g).second);

    for (const auto &g : report.groups)
    {
        REQUIRE(g.pass >= 0);
        for (const auto &v : g.trajectory)
            for (int k = 0; k < 3; ++k)
            {
                CHECK(v[k] >= cc.bounds[k].lo);
                CHECK(v[k] <= cc.bounds[k].hi);
            }
        CHECK(g.trajectory.size() <= static_cast<std::size_t>(report.passes[g.pass].steps) + 1);
        // the final scene carries exactly the group's pass result
        for (int b : g.buildings)
            CHECK(to_vector(s.buildings[b].material) == g.value);
    }
}

TEST_CASE("error statistics and fixed histogram")
{
    const auto z = error_stats(std::vector<double>(7, 0.0));
    CHECK(z.count == 7);
    CHECK(z.mean == 0.0);
    CHECK(z.median == 0.0);
    CHECK(z.std == 0.0);
    REQUIRE(z.histogram.size() == 40);
    CHECK(z.histogram[20] == 7);

    const auto st = error_stats({-25.0, -20.0, -0.5, 0.0, 19.99, 20.0, 30.0});
    CHECK(st.below == 1);
    CHECK(st.above == 2);
    CHECK(st.histogram[0] == 1);
    CHECK(st.histogram[19] == 1);
    CHECK(st.histogram[20] == 1);
    CHECK(st.histogram[39] == 1);
    int total = st.below + st.above;
    for (int h : st.histogram)
        total += h;
    CHECK(total == 7);
    CHECK(st.median == doctest::Approx(0.0));

    const auto e = error_stats_to_json(st);
    CHECK(e["histogram"]["counts"].size() == 40);
}

TEST_CASE("measurement CSV counts malformed rows")
{
    const std::string path = "test_calibration_measurements.csv";
    {
        std::ofstream out(path);
        out << "x,y,rsrp_dbm,cell_id\n"
            << "1.0,2.0,-80.5,0\n"
            << "abc,2.0,-80,0\n"
            << "1.0,2.0,-80\n"
            << "\n"
            << "3.0,4.0,-90.25,0\n"
            << "3.0,4.0,-90.25,0,9\n";
    }
    const auto set = read_measurements_csv(path);
    CHECK(set.samples.size() == 2);
    CHECK(set.malformed_rows == 3);
    CHECK(set.samples[1].rsrp_dbm == doctest::Approx(-90.25));

    write_measurements_csv(set, path);
    const auto back = read_measurements_csv(path);
    CHECK(back.samples.size() == 2);
    CHECK(back.malformed_rows == 0);

    {
        std::ofstream out(path);
        out << "a,b,c,d\n1,2,3,0\n";
    }
    CHECK_THROWS_AS(read_measurements_csv(path), ParseError);
    {
        std::ofstream out(path);
    }
    CHECK(read_measurements_csv(path).samples.empty());
    std::remove(path.c_str());

    MeasurementSet bad;
    bad.samples = {{{10, 0}, -80, 0}, {{10, 15}, -80, 0}, {{500, 0}, -80, 0}, {{10, 0}, -80, 3}, {{10, 0}, NAN, 0}};
    sanitize_measurements(bad, canyon());
    CHECK(bad.samples.size() == 1);
    CHECK(bad.dropped == 4);
}

TEST_CASE("calibration config validation")
{
    CalibrationConfig cc;
    cc.holdout_frac = 1.0;
    CHECK_THROWS_AS(cc.validate(), ValidationError);
    cc = {};
    cc.bounds[0] = {0.5, 10.0};
    CHECK_THROWS_AS(cc.validate(), ValidationError);
    cc = {};
    cc.lr = 0.0;
    CHECK_THROWS_AS(cc.validate(), ValidationError);
}
