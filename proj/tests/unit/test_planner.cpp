// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ristwin/planner.hpp"

#include <algorithm>
#include <set>

using namespace ristwin;
using nlohmann::json;

namespace
{
    const SystemPreset &preset4g() { return preset_by_name("4G"); }

    struct CanyonRun
    {
        Scene scene;
        CoverageRun coverage;
        PlannerConfig config;
    };

    // Shared across test cases: tracing the canyon dominates the runtime.
    const CanyonRun &canyon()
    {
        static const CanyonRun run = []
        {
            CanyonRun r;
            r.scene = load_scene(RISTWIN_DATA_DIR "/canyon.json", preset4g().frequency_hz());
            TraceConfig cfg;
            cfg.ray_count = 1000000;
            r.coverage = build_coverage(r.scene, preset4g(), cfg);
            r.config.candidate_trace.ray_count = scaled_candidate_rays(r.scene, 1000000, false);
            return r;
        }();
        return run;
    }

    const DeploymentPlan &canyon_plan()
    {
        static const DeploymentPlan p = plan(canyon().scene, preset4g(), canyon().coverage, canyon().config);
        return p;
    }

    // The largest outage cluster sits in the canyon between the slabs.
    std::vector<int> canyon_cluster()
    {
        const auto &p = canyon_plan();
        REQUIRE(!p.clusters.empty());
        return p.clusters.front().members;
    }

    int count_outage(const CoverageMap &m)
    {
        int n = 0;
        for (const auto &t : m.tiles)
            if (t.outage)
                ++n;
        return n;
    }
}

TEST_CASE("canyon cluster gets a candidate on the illuminated wall with clear segments")
{
    const auto &c = canyon();
    PlannerContext ctx(c.scene, preset4g(), c.coverage, c.config);
    const auto target = ctx.target_of(canyon_cluster());
    const int sector = ctx.serving_sector(target);
    REQUIRE(sector >= 0);
    const auto cands = find_candidates(ctx, target, sector);
    REQUIRE(!cands.empty());

    const Vec3 bs = c.coverage.field.sectors[sector].frame.position;
    int verified = 0;
    for (const auto &k : cands)
    {
        CHECK(k.distance_to_centroid == doctest::Approx(distance(k.point, target.point)));
        if (!k.los_bs_ok)
            continue;
        // the south face of the north slab faces the base station
        if (std::abs(k.point.y - 10.0) > 1e-6)
            continue;
        if (!ctx.index().occluded(bs, k.point) && !ctx.index().occluded(k.point, target.point))
            ++verified;
    }
    CHECK(verified >= 1);

    for (std::size_t i = 1; i < cands.size(); ++i)
        CHECK(cands[i - 1].distance_to_centroid <= cands[i].distance_to_centroid);
}

TEST_CASE("open field offers no wall candidates")
{
    Scene s = load_scene(RISTWIN_DATA_DIR "/open_field.json", preset4g().frequency_hz());
    REQUIRE(s.buildings.empty());
    TraceConfig cfg;
    cfg.ray_count = 200000;
    const auto run = build_coverage(s, preset4g(), cfg);
    PlannerConfig pc;
    pc.candidate_trace.ray_count = 200000;
    PlannerContext ctx(s, preset4g(), run, pc);
    std::vector<int> tiles;
    for (int t = 0; t < run.field.grid.tile_count(); ++t)
        if (run.field.grid.is_outdoor(t))
            tiles.push_back(t);
    REQUIRE(!tiles.empty());
    const auto target = ctx.target_of({tiles.back()});
    CHECK(find_candidates(ctx, target, ctx.serving_sector(target)).empty());
    const auto p = plan(s, preset4g(), run, pc);
    CHECK(p.deployments.empty());
}

TEST_CASE("top_N = 0 deploys nothing and leaves the map unchanged")
{
    const auto &c = canyon();
    PlannerConfig pc = c.config;
    pc.top_n = 0;
    const auto p = plan(c.scene, preset4g(), c.coverage, pc);
    CHECK(p.deployments.empty());
    CHECK(p.stats.total_recovered() == 0);
    CHECK(count_outage(p.post_map) == count_outage(c.coverage.map));
    for (const auto &cl : p.clusters)
        CHECK(cl.status == ClusterStatus::Unrecovered);
}

TEST_CASE("every deployed unit passes an independent improvement audit")
{
    const auto &c = canyon();
    const auto &p = canyon_plan();
    REQUIRE(!p.deployments.empty());
    PlannerContext ctx(c.scene, preset4g(), c.coverage, c.config);
    for (const auto &d : p.deployments)
    {
        int improved = 0;
        for (int t : d.members)
            if (ctx.ris_served_rsrp(d.ris, d.ris.sector, d.ris.beam, t) > c.coverage.map.tiles[t].rsrp_dbm)
                ++improved;
        const double frac = static_cast<double>(improved) / d.members.size();
        CHECK(frac >= 0.6);
        CHECK(frac == doctest::Approx(d.improved_fraction));
        // the centroid gate
        const auto target = ctx.target_of(d.members);
        CHECK(ctx.ris_served_rsrp(d.ris, d.ris.sector, d.ris.beam, target.tile) > ctx.pre_rsrp(target.tile));
    }
}

TEST_CASE("stage counts add up without double counting")
{
    const auto &c = canyon();
    const auto &p = canyon_plan();
    const int pre = count_outage(c.coverage.map);
    const int post = count_outage(p.post_map);
    CHECK(p.stats.outage_ues == pre);
    CHECK(post < pre);

    std::set<int> seen;
    int staged = 0;
    std::array<int, 3> per{};
    for (const auto &u : p.ues)
    {
        CHECK(seen.insert(u.tile).second);
        if (u.stage > 0)
        {
            ++staged;
            ++per[u.stage - 1];
            CHECK(!is_outage(u.post_rsrp));
        }
        else
            CHECK(is_outage(u.post_rsrp));
    }
    CHECK(per == p.stats.recovered);
    CHECK(staged == p.stats.total_recovered());
    CHECK(pre - post == staged);
    CHECK(p.stats.total_fraction() == doctest::Approx(static_cast<double>(staged) / pre));
}

TEST_CASE("the plan never degrades a tile")
{
    const auto &c = canyon();
    const auto &p = canyon_plan();
    REQUIRE(p.post_map.tiles.size() == c.coverage.map.tiles.size());
    for (std::size_t t = 0; t < p.post_map.tiles.size(); ++t)
        CHECK(p.post_map.tiles[t].rsrp_dbm >= c.coverage.map.tiles[t].rsrp_dbm);
    for (const auto &u : p.ues)
        CHECK(u.post_rsrp >= u.pre_rsrp);
}

TEST_CASE("deployed unit sits at the nearest viable candidate")
{
    const auto &c = canyon();
    const auto &p = canyon_plan();
    PlannerContext ctx(c.scene, preset4g(), c.coverage, c.config);
    int checked = 0;
    for (const auto &d : p.deployments)
    {
        const auto target = ctx.target_of(d.members);
        const int sector = ctx.serving_sector(target);
        REQUIRE(sector == d.ris.sector);
        const Vec3 bs = c.coverage.field.sectors[sector].frame.position;
        // independent viability: LoS from the BS, placeable, both legs clear after placement
        double nearest = -1.0;
        Vec3 nearest_point;
        for (const auto &k : find_candidates(ctx, target, sector))
        {
            if (ctx.index().occluded(bs, k.point))
                continue;
            try
            {
                const RisUnit r = place_on_wall(c.scene, k.wall, k.point, ctx.frequency_hz(), c.config.ris);
                if (!cascade_visible(r, ctx.index(), bs, target.point))
                    continue;
                if (nearest < 0.0 || k.distance_to_centroid < nearest)
                {
                    nearest = k.distance_to_centroid;
                    nearest_point = r.center;
                }
            }
            catch (const ValidationError &)
            {
            }
        }
        REQUIRE(nearest >= 0.0);
        CHECK(distance(nearest_point, d.ris.center) < 1e-9);
        ++checked;
    }
    CHECK(checked == static_cast<int>(p.deployments.size()));
}

TEST_CASE("a residual pair 12 m apart under both threshold criteria")
{
    const auto &c = canyon();
    const auto &grid = c.coverage.field.grid;
    // two outdoor tiles on one row, six tiles (12 m) apart
    int a = -1;
    int b = -1;
    for (int t = 0; t < grid.tile_count() && a < 0; ++t)
    {
        const Vec2 p = grid.center(t);
        const int u = grid.tile_at({p.x + 12.0, p.y});
        if (grid.is_outdoor(t) && u >= 0 && grid.is_outdoor(u))
        {
            a = t;
            b = u;
        }
    }
    REQUIRE(a >= 0);
    REQUIRE(norm(grid.center(b) - grid.center(a)) == doctest::Approx(12.0));

    PlannerConfig radius = c.config;
    radius.birch.criterion = ThresholdCriterion::Radius;
    PlannerContext rctx(c.scene, preset4g(), c.coverage, radius);
    // RMS radius of the pair is 6 m <= 10 m
    CHECK(recluster_residual(rctx, {a, b}, 10.0).groups.size() == 1);

    PlannerConfig diameter = c.config;
    diameter.birch.criterion = ThresholdCriterion::Diameter;
    PlannerContext dctx(c.scene, preset4g(), c.coverage, diameter);
    const auto split = recluster_residual(dctx, {a, b}, 10.0);
    REQUIRE(split.groups.size() == 2);
    CHECK(split.groups[0].size() == 1);
    CHECK(split.groups[1].size() == 1);
}

TEST_CASE("no outage means nothing to do")
{
    Scene s = parse_scene(json::parse(R"({"buildings": [], "bs_sites": [{"id": "b", "position": [0,0,20],
        "sectors": [{"bearing_deg": 0, "tilt_deg": 10, "tx_power_dbm": 40}]}],
        "area": {"min": [-10, 10], "max": [10, 30]}})"),
                          preset4g().frequency_hz());
    TraceConfig cfg;
    cfg.ray_count = 100000;
    const auto run = build_coverage(s, preset4g(), cfg);
    REQUIRE(count_outage(run.map) == 0);
    const auto p = plan(s, preset4g(), run, {});
    CHECK(p.nothing_to_do);
    CHECK(p.deployments.empty());
    CHECK(p.stats.total_fraction() == 1.0);
    CHECK(recovery_to_json(p)["nothing_to_do"] == true);
}

TEST_CASE("recovery does not decrease with the number of targeted clusters")
{
    const auto &c = canyon();
    int previous = -1;
    for (int n : {0, 1, 2, 4})
    {
        PlannerConfig pc = c.config;
        pc.top_n = n;
        const auto p = plan(c.scene, preset4g(), c.coverage, pc);
        CHECK(p.stats.total_recovered() >= previous);
        previous = p.stats.total_recovered();
    }
    CHECK(previous > 0);
}

TEST_CASE("planner config validation")
{
    PlannerConfig pc;
    pc.min_improve_frac = 1.5;
    CHECK_THROWS_AS(pc.validate(), ValidationError);
    pc = {};
    pc.birch.threshold = 0.0;
    CHECK_THROWS_AS(pc.validate(), ValidationError);
    pc = {};
    CHECK(pc.effective_recluster_threshold() == doctest::Approx(10.0));
}
