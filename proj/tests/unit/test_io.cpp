// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ristwin/io.hpp"
#include "ristwin/path_cache.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ristwin;
using nlohmann::json;
namespace fs = std::filesystem;

namespace
{
    const SystemPreset &preset4g() { return preset_by_name("4G"); }

    Scene canyon() { return load_scene(RISTWIN_DATA_DIR "/canyon.json", preset4g().frequency_hz()); }

    CoverageRun small_run(const Scene &s, const std::string &cache = {})
    {
        TraceConfig cfg;
        cfg.ray_count = 100000;
        CoverageOptions opt;
        opt.cache_dir = cache;
        return build_coverage(s, preset4g(), cfg, opt);
    }

    std::vector<std::string> lines_of(const std::string &path)
    {
        std::ifstream in(path);
        std::vector<std::string> out;
        std::string l;
        while (std::getline(in, l))
            out.push_back(l);
        return out;
    }

    fs::path scratch(const std::string &name)
    {
        const fs::path p = fs::temp_directory_path() / ("ristwin_test_io_" + name);
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }
}

TEST_CASE("heatmap colour stops and clamping")
{
    using C = std::array<std::uint8_t, 3>;
    CHECK(heatmap_color(-60.0) == C{215, 25, 28});
    CHECK(heatmap_color(-80.0) == C{253, 174, 97});
    CHECK(heatmap_color(-100.0) == C{171, 217, 233});
    CHECK(heatmap_color(-120.0) == C{44, 123, 182});
    CHECK(heatmap_color(-20.0) == heatmap_color(-60.0));
    CHECK(heatmap_color(-150.0) == heatmap_color(-120.0));
    // halfway between two stops
    const auto mid = heatmap_color(-70.0);
    CHECK(std::abs(int(mid[0]) - 234) <= 1);
    CHECK(std::abs(int(mid[1]) - 100) <= 1);
    CHECK(std::abs(int(mid[2]) - 62) <= 1);
}

TEST_CASE("coverage CSV, PPM and summary agree with the map")
{
    const Scene s = canyon();
    const auto run = small_run(s);
    const auto dir = scratch("outputs");
    const std::string csv = (dir / "coverage.csv").string();
    write_coverage_csv(run.map, csv);
    const auto lines = lines_of(csv);
    REQUIRE(!lines.empty());
    CHECK(lines[0] == "x,y,rsrp_dbm,sector_id,beam_index,outage");
    CHECK(static_cast<int>(lines.size()) - 1 == run.map.outdoor_count());
    int outage = 0;
    for (std::size_t i = 1; i < lines.size(); ++i)
    {
        std::stringstream ss(lines[i]);
        std::string f;
        std::vector<std::string> fields;
        while (std::getline(ss, f, ','))
            fields.push_back(f);
        REQUIRE(fields.size() == 6);
        outage += fields[5] == "1";
        if (fields[2] == "-inf")
            CHECK(fields[3] == "-1");
    }
    CHECK(outage == run.map.outage_count());

    const std::string ppm = (dir / "coverage.ppm").string();
    write_heatmap_ppm(run.map, ppm, 4);
    std::ifstream in(ppm, std::ios::binary);
    std::string magic;
    int w = 0;
    int h = 0;
    int maxv = 0;
    in >> magic >> w >> h >> maxv;
    in.get();
    CHECK(magic == "P6");
    CHECK(w == run.map.grid.nx * 4);
    CHECK(h == run.map.grid.ny * 4);
    CHECK(maxv == 255);
    const auto pos = in.tellg();
    in.seekg(0, std::ios::end);
    CHECK(static_cast<long>(in.tellg() - pos) == 3L * w * h);

    const auto sum = coverage_summary_json(run.map);
    CHECK(sum["outdoor_tiles"] == run.map.outdoor_count());
    CHECK(sum["outage_tiles"] == run.map.outage_count());
    CHECK(sum["outage_fraction"].get<double>() == doctest::Approx(run.map.outage_fraction()));
    const auto &pct = sum["rsrp_percentiles_dbm"];
    CHECK(pct["p5"].get<double>() <= pct["p50"].get<double>());
    CHECK(pct["p50"].get<double>() <= pct["p95"].get<double>());
    fs::remove_all(dir);
}

TEST_CASE("path cache round trip and cached coverage equals uncached")
{
    const Scene s = canyon();
    const auto dir = scratch("cache");
    const auto plain = small_run(s);
    const auto first = small_run(s, dir.string());
    int files = 0;
    for (const auto &e : fs::directory_iterator(dir))
        files += e.path().extension() == ".paths";
    CHECK(files == static_cast<int>(s.bs_sites.size()));
    const auto second = small_run(s, dir.string());

    REQUIRE(plain.map.tiles.size() == second.map.tiles.size());
    for (std::size_t t = 0; t < plain.map.tiles.size(); ++t)
    {
        CHECK(first.map.tiles[t].rsrp_dbm == plain.map.tiles[t].rsrp_dbm);
        CHECK(second.map.tiles[t].rsrp_dbm == plain.map.tiles[t].rsrp_dbm);
        CHECK(second.map.tiles[t].beam == plain.map.tiles[t].beam);
    }

    // explicit key round trip
    const Vec3 tx = s.bs_sites[0].position;
    TraceConfig cfg;
    cfg.ray_count = 100000;
    const auto key = path_cache_key(s, tx, preset4g().frequency_hz(), cfg, plain.receivers);
    const std::string file = path_cache_file(dir.string(), key);
    const auto loaded = load_path_cache(file, key);
    REQUIRE(loaded.has_value());
    CHECK(loaded->path_count() == plain.site_paths[0].path_count());
    CHECK(!load_path_cache(file, key + 1).has_value());

    // the key follows anything that changes results, but not the thread count
    TraceConfig other = cfg;
    other.ray_count = 100001;
    CHECK(path_cache_key(s, tx, preset4g().frequency_hz(), other, plain.receivers) != key);
    Scene moved = s;
    moved.buildings[0].height += 1.0;
    CHECK(path_cache_key(moved, tx, preset4g().frequency_hz(), cfg, plain.receivers) != key);
    TraceConfig threads = cfg;
    threads.threads = 3;
    CHECK(path_cache_key(s, tx, preset4g().frequency_hz(), threads, plain.receivers) == key);

    // a truncated file is ignored
    {
        std::ofstream out(file, std::ios::binary | std::ios::trunc);
        out << "junk";
    }
    CHECK(!load_path_cache(file, key).has_value());
    fs::remove_all(dir);
}

TEST_CASE("aperture sweep CSV and JSON helpers")
{
    const auto dir = scratch("misc");
    ApertureSweepRow r;
    r.aperture_m = 1.5;
    r.elements = 400;
    r.ris_count = 3;
    r.outage_ues = 100;
    r.recovered = {10, 5, 2};
    r.total_fraction = 0.17;
    const std::string csv = (dir / "sweep.csv").string();
    write_aperture_sweep_csv({r}, csv);
    const auto lines = lines_of(csv);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] ==
          "aperture_m,elements,ris_count,outage_ues,recovered_initial,recovered_reclustering,"
          "recovered_reassociation,total_fraction");

    const json doc = {{"a", 1}, {"b", {1.5, 2.5}}};
    const std::string jp = (dir / "doc.json").string();
    write_json(doc, jp);
    CHECK(read_json(jp) == doc);
    fs::remove_all(dir);
}
