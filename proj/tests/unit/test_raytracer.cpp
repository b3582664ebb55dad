// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ristwin/raytracer.hpp"

#include <random>

using namespace ristwin;
using nlohmann::json;

namespace
{
    Scene wall_scene(bool ground = false)
    {
        // thick slab whose x = 0 face acts as an infinite wall for nearby points
        auto doc = json::parse(R"({
          "buildings": [{"id": "w", "footprint": [[-1,-500],[0,-500],[0,500],[-1,500]], "height": 500}],
          "bs_sites": []
        })");
        if (!ground)
            doc["ground"] = nullptr;
        return parse_scene(doc, 2e9);
    }

    Scene empty_scene()
    {
        Scene s;
        s.ground_enabled = false;
        s.rebuild_surfaces();
        return s;
    }

    // Textbook Fresnel at normal incidence, both polarizations coincide up to sign.
    double normal_incidence_magnitude(double eps_r, double sigma, double f)
    {
        std::complex<double> eps(eps_r, -sigma / (2.0 * kPi * f * 8.8541878128e-12));
        auto n = std::sqrt(eps);
        return std::abs((1.0 - n) / (1.0 + n));
    }
}

TEST_CASE("fibonacci lattice")
{
    auto one = fibonacci_directions(1);
    REQUIRE(one.size() == 1);
    CHECK(norm(one[0]) == doctest::Approx(1.0));
    CHECK_THROWS_AS(fibonacci_directions(0), ValidationError);

    auto dirs = fibonacci_directions(1000);
    Vec3 mean;
    for (const auto &d : dirs)
    {
        CHECK(std::abs(norm(d) - 1.0) <= 1e-12);
        mean = mean + d;
    }
    CHECK(norm(mean / 1000.0) < 0.05);

    // minimum separation within 20 % of sqrt(4 pi / n)
    double min_angle = 10.0;
    for (std::size_t i = 0; i < dirs.size(); ++i)
        for (std::size_t j = i + 1; j < dirs.size(); ++j)
            min_angle = std::min(min_angle, std::acos(std::clamp(dot(dirs[i], dirs[j]), -1.0, 1.0)));
    const double ideal = std::sqrt(4.0 * kPi / 1000.0);
    CHECK(min_angle >= 0.8 * ideal);
    CHECK(min_angle <= 1.2 * ideal);
}

TEST_CASE("fresnel coefficients")
{
    ElectromagneticMaterial vacuum{1.0, 0.0, 0.0};
    CHECK(std::abs(fresnel_reflection(vacuum, 0.3, 2e9, Polarization::TE)) < 1e-12);
    CHECK(std::abs(fresnel_reflection(vacuum, 0.3, 2e9, Polarization::TM)) < 1e-12);

    ElectromagneticMaterial pec{1.0, 1e12, 0.0};
    CHECK(std::abs(fresnel_reflection(pec, 0.4, 2e9, Polarization::TE)) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(std::abs(fresnel_reflection(pec, 0.4, 2e9, Polarization::TM)) == doctest::Approx(1.0).epsilon(1e-4));

    auto concrete = concrete_material(2e9);
    const double oracle = normal_incidence_magnitude(concrete.relative_permittivity, concrete.conductivity, 2e9);
    CHECK(std::abs(std::abs(fresnel_reflection(concrete, 0.0, 2e9, Polarization::TE)) - oracle) <= 1e-9);
    CHECK(std::abs(std::abs(fresnel_reflection(concrete, 0.0, 2e9, Polarization::TM)) - oracle) <= 1e-9);

    // grazing incidence
    const double grazing = kPi / 2 - 1e-6;
    CHECK(std::abs(fresnel_reflection(concrete, grazing, 2e9, Polarization::TE)) > 0.999);
    CHECK(std::abs(fresnel_reflection(concrete, grazing, 2e9, Polarization::TM)) > 0.999);

    for (double a = 0.0; a < kPi / 2; a += 0.05)
    {
        CHECK(std::abs(fresnel_reflection(concrete, a, 2e9, Polarization::TE)) <= 1.0);
        CHECK(std::abs(fresnel_reflection(concrete, a, 2e9, Polarization::TM)) <= 1.0);
    }
}

TEST_CASE("single wall specular path")
{
    Scene s = wall_scene();
    SpatialIndex idx(s);
    TraceConfig cfg;
    cfg.ray_count = 200000;
    cfg.enable_scatter = false;
    std::vector<Vec3> rx{{3, 4, 1}};
    auto ps = trace(idx, {3, 0, 1}, rx, 2e9, cfg);
    REQUIRE(ps.per_receiver[0].size() == 2);
    const auto &los = ps.per_receiver[0][0];
    const auto &spec = ps.per_receiver[0][1];
    CHECK(los.kind == PathKind::LoS);
    CHECK(los.interactions.empty());
    CHECK(los.total_length == doctest::Approx(4.0));
    REQUIRE(spec.kind == PathKind::Specular);
    REQUIRE(spec.interactions.size() == 1);
    CHECK(spec.total_length == doctest::Approx(std::sqrt(52.0)).epsilon(1e-12));
    CHECK(spec.interactions[0].point.x == doctest::Approx(0.0));
    CHECK(spec.interactions[0].point.y == doctest::Approx(2.0));
    CHECK(spec.interactions[0].point.z == doctest::Approx(1.0));
    CHECK(std::abs(spec.delay - spec.total_length / kSpeedOfLight) < 1e-12);
}

TEST_CASE("friis line of sight")
{
    Scene s = empty_scene();
    SpatialIndex idx(s);
    TraceConfig cfg;
    cfg.ray_count = 1000;
    std::vector<Vec3> rx{{100, 0, 0}};
    auto ps = trace(idx, {0, 0, 0}, rx, 2e9, cfg);
    REQUIRE(ps.per_receiver[0].size() == 1);
    const double lambda = wavelength(2e9);
    const double expected = lambda / (4 * kPi * 100);
    CHECK(std::abs(ps.per_receiver[0][0].amplitude) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(-20 * std::log10(expected) == doctest::Approx(78.47).epsilon(1e-3));
}

TEST_CASE("slab blocks everything without bounces")
{
    auto doc = json::parse(R"({
      "buildings": [{"id": "slab", "footprint": [[-5,-100],[5,-100],[5,100],[-5,100]], "height": 100}],
      "bs_sites": [], "ground": null
    })");
    Scene s = parse_scene(doc, 2e9);
    SpatialIndex idx(s);
    TraceConfig cfg;
    cfg.ray_count = 10000;
    cfg.max_bounces = 0;
    cfg.enable_scatter = false;
    std::vector<Vec3> rx{{20, 0, 2}};
    auto ps = trace(idx, {-20, 0, 2}, rx, 2e9, cfg);
    CHECK(ps.per_receiver[0].empty());
}

TEST_CASE("channel contribution phase")
{
    PropagationPath p;
    p.amplitude = 0.5;
    p.delay = 0.0;
    CHECK(std::arg(path_to_channel_contribution(p, 2e9).gain) == doctest::Approx(0.0));
    p.delay = 1.0 / (2.0 * 2e9);
    auto g = path_to_channel_contribution(p, 2e9).gain;
    CHECK(g.real() == doctest::Approx(-0.5));
    CHECK(std::abs(g.imag()) < 1e-12);
}

TEST_CASE("canyon paths: energy bound, determinism, reciprocity")
{
    Scene s = load_scene(RISTWIN_DATA_DIR "/canyon.json", 2e9);
    SpatialIndex idx(s);
    TraceConfig cfg;
    cfg.ray_count = 100000;
    std::vector<Vec3> rx;
    for (double x = -10; x <= 70; x += 8)
        for (double y = -30; y <= 30; y += 6)
            if (s.building_at({x, y}) < 0)
                rx.push_back({x, y, 1.5});
    const Vec3 tx{30, -60, 25};
    auto a = trace(idx, tx, rx, 2e9, cfg);
    auto b = trace_serial(idx, tx, rx, 2e9, cfg);
    REQUIRE(a.per_receiver.size() == b.per_receiver.size());
    const double lambda = wavelength(2e9);
    std::size_t specular = 0, scatter = 0;
    for (std::size_t r = 0; r < rx.size(); ++r)
    {
        REQUIRE(a.per_receiver[r].size() == b.per_receiver[r].size());
        for (std::size_t k = 0; k < a.per_receiver[r].size(); ++k)
        {
            const auto &p = a.per_receiver[r][k];
            const auto &q = b.per_receiver[r][k];
            CHECK(p.amplitude == q.amplitude);
            CHECK(p.total_length == q.total_length);
            CHECK(std::abs(p.amplitude) <= lambda / (4 * kPi * p.total_length) * (1 + 1e-12));
            if (p.kind == PathKind::Specular)
                ++specular;
            if (p.kind == PathKind::Scatter)
            {
                ++scatter;
                CHECK(p.interactions.size() == 1);
            }
        }
    }
    CHECK(specular > 0);
    CHECK(scatter > 0);

    // reciprocity of the specular part
    TraceConfig spec_only = cfg;
    spec_only.enable_scatter = false;
    const Vec3 u{20, 0, 1.5}, v{45, 5, 3.0};
    std::vector<Vec3> ru{u}, rv{v};
    auto fw = trace(idx, v, ru, 2e9, spec_only).per_receiver[0];
    auto bw = trace(idx, u, rv, 2e9, spec_only).per_receiver[0];
    REQUIRE(fw.size() == bw.size());
    REQUIRE(fw.size() >= 2);
    auto by_length = [](const PropagationPath &x, const PropagationPath &y) { return x.total_length < y.total_length; };
    std::sort(fw.begin(), fw.end(), by_length);
    std::sort(bw.begin(), bw.end(), by_length);
    for (std::size_t k = 0; k < fw.size(); ++k)
    {
        CHECK(fw[k].total_length == doctest::Approx(bw[k].total_length).epsilon(1e-12));
        CHECK(std::abs(fw[k].amplitude) == doctest::Approx(std::abs(bw[k].amplitude)).epsilon(1e-9));
    }
}

TEST_CASE("path amplitude tracks material edits")
{
    Scene s = wall_scene();
    SpatialIndex idx(s);
    TraceConfig cfg;
    cfg.ray_count = 100000;
    std::vector<Vec3> rx{{3, 4, 1}};
    auto ps = trace(idx, {3, 0, 1}, rx, 2e9, cfg);
    Scene edited = s;
    edited.buildings[0].material.relative_permittivity = 9.0;
    edited.buildings[0].material.scattering_coefficient = 0.5;
    SpatialIndex idx2(edited);
    auto ps2 = trace(idx2, {3, 0, 1}, rx, 2e9, cfg);
    REQUIRE(ps.per_receiver[0].size() == ps2.per_receiver[0].size());
    for (std::size_t k = 0; k < ps.per_receiver[0].size(); ++k)
    {
        cplx re = path_amplitude(ps.per_receiver[0][k], edited, 2e9);
        CHECK(std::abs(re - ps2.per_receiver[0][k].amplitude) < 1e-15);
    }
}

TEST_CASE("directive lobe normalisation at normal incidence")
{
    // closed form: 2 pi * int_0^1 ((1+c)/2)^4 dc = 2 pi * 0.4 * (1 - 1/32)
    CHECK(directive_lobe_norm(1.0, 4.0) == doctest::Approx(2 * kPi * 0.4 * 0.96875).epsilon(1e-4));
}

TEST_CASE("invalid trace config")
{
    TraceConfig cfg;
    cfg.ray_count = 0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg.ray_count = 10;
    cfg.max_bounces = -1;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
}
