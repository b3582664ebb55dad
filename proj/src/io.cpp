// SPDX-License-Identifier: Apache-2.0
//
// ristwin - ray-traced radio coverage and RIS deployment planning
// Copyright (C) 2026 The ristwin Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "ristwin/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace ristwin
{
    namespace
    {
        std::ofstream open_out(const std::string &path, bool binary = false)
        {
            std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
            if (!out)
                throw Error("cannot write '" + path + "'");
            return out;
        }

        struct Stop
        {
            double dbm;
            std::array<double, 3> rgb;
        };

        constexpr std::array<Stop, 4> kStops{{{-60.0, {215, 25, 28}},
                                              {-80.0, {253, 174, 97}},
                                              {-100.0, {171, 217, 233}},
                                              {-120.0, {44, 123, 182}}}};
    }

    void write_coverage_csv(const CoverageMap &map, const std::string &path)
    {
        auto out = open_out(path);
        out << "x,y,rsrp_dbm,sector_id,beam_index,outage\n";
        char buf[160];
        for (int t = 0; t < map.grid.tile_count(); ++t)
        {
            const auto &r = map.tiles[t];
            if (r.indoor)
                continue;
            const Vec2 c = map.grid.center(t);
            if (std::isfinite(r.rsrp_dbm))
                std::snprintf(buf, sizeof buf, "%.2f,%.2f,%.4f,%d,%d,%d\n", c.x, c.y, r.rsrp_dbm, r.sector, r.beam,
                              r.outage ? 1 : 0);
            else
                std::snprintf(buf, sizeof buf, "%.2f,%.2f,-inf,%d,%d,%d\n", c.x, c.y, r.sector, r.beam, r.outage ? 1 : 0);
            out << buf;
        }
    }

    std::array<std::uint8_t, 3> heatmap_color(double rsrp_dbm)
    {
        std::array<double, 3> rgb;
        if (!(rsrp_dbm < kStops.front().dbm))
            rgb = kStops.front().rgb;
        else if (!(rsrp_dbm > kStops.back().dbm))
            rgb = kStops.back().rgb;
        else
        {
            std::size_t i = 0;
            while (rsrp_dbm < kStops[i + 1].dbm)
                ++i;
            const double t = (kStops[i].dbm - rsrp_dbm) / (kStops[i].dbm - kStops[i + 1].dbm);
            for (int c = 0; c < 3; ++c)
                rgb[c] = kStops[i].rgb[c] + t * (kStops[i + 1].rgb[c] - kStops[i].rgb[c]);
        }
        return {static_cast<std::uint8_t>(std::lround(rgb[0])), static_cast<std::uint8_t>(std::lround(rgb[1])),
                static_cast<std::uint8_t>(std::lround(rgb[2]))};
    }

    void write_heatmap_ppm(const CoverageMap &map, const std::string &path, int pixels_per_tile)
    {
        if (pixels_per_tile < 1)
            throw ValidationError("heatmap: pixels per tile must be >= 1");
        const int w = map.grid.nx * pixels_per_tile, h = map.grid.ny * pixels_per_tile;
        std::vector<std::uint8_t> img(static_cast<std::size_t>(w) * h * 3);
        for (int py = 0; py < h; ++py)
            for (int px = 0; px < w; ++px)
            {
                const int iy = map.grid.ny - 1 - py / pixels_per_tile, ix = px / pixels_per_tile;
                const auto &r = map.tiles[map.grid.tile_index(ix, iy)];
                std::array<std::uint8_t, 3> c;
                if (r.indoor)
                    c = {128, 128, 128};
                else if (!std::isfinite(r.rsrp_dbm))
                    c = {0, 0, 0};
                else
                    c = heatmap_color(r.rsrp_dbm);
                std::copy(c.begin(), c.end(), img.begin() + (static_cast<std::size_t>(py) * w + px) * 3);
            }
        auto out = open_out(path, true);
        out << "P6\n"
            << w << ' ' << h << "\n255\n";
        out.write(reinterpret_cast<const char *>(img.data()), static_cast<std::streamsize>(img.size()));
    }

    nlohmann::json coverage_summary_json(const CoverageMap &map)
    {
        std::vector<double> values;
        int uncovered = 0;
        for (const auto &t : map.tiles)
            if (!t.indoor)
            {
                if (std::isfinite(t.rsrp_dbm))
                    values.push_back(t.rsrp_dbm);
                else
                    ++uncovered;
            }
        std::sort(values.begin(), values.end());
        nlohmann::json pct = nlohmann::json::object();
        for (int p : {5, 10, 50, 90, 95})
        {
            if (values.empty())
            {
                pct["p" + std::to_string(p)] = nullptr;
                continue;
            }
            const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
            pct["p" + std::to_string(p)] = values[std::max<std::size_t>(rank, 1) - 1];
        }
        return {{"outage_threshold_dbm", kOutageThresholdDbm},
                {"tile_size_m", map.grid.tile_size},
                {"tiles", map.grid.tile_count()},
                {"outdoor_tiles", map.outdoor_count()},
                {"outage_tiles", map.outage_count()},
                {"uncovered_tiles", uncovered},
                {"outage_fraction", map.outage_fraction()},
                {"rsrp_percentiles_dbm", pct}};
    }

    nlohmann::json clusters_to_json(const std::vector<Cluster> &clusters, const std::vector<int> &tiles)
    {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto &c : clusters)
        {
            std::vector<int> members;
            for (int i : c.members)
                members.push_back(tiles[i]);
            std::sort(members.begin(), members.end());
            const Vec2 ctr = c.centroid();
            arr.push_back({{"id", c.id}, {"U", c.size()}, {"centroid", {ctr.x, ctr.y}}, {"radius", c.radius()}, {"members", members}});
        }
        return arr;
    }

    void write_aperture_sweep_csv(const std::vector<ApertureSweepRow> &rows, const std::string &path)
    {
        auto out = open_out(path);
        out << "aperture_m,elements,ris_count,outage_ues,recovered_initial,recovered_reclustering,recovered_reassociation,total_fraction\n";
        char buf[200];
        for (const auto &r : rows)
        {
            std::snprintf(buf, sizeof buf, "%.3f,%d,%d,%d,%d,%d,%d,%.6f\n", r.aperture_m, r.elements, r.ris_count,
                          r.outage_ues, r.recovered[0], r.recovered[1], r.recovered[2], r.total_fraction);
            out << buf;
        }
    }

    void write_recluster_sweep_csv(const std::vector<ReclusterSweepRow> &rows, const std::string &path)
    {
        auto out = open_out(path);
        out << "recluster_T_m,ris_count,outage_ues,recovered_initial,recovered_reclustering,recovered_reassociation,total_fraction\n";
        char buf[200];
        for (const auto &r : rows)
        {
            std::snprintf(buf, sizeof buf, "%.3f,%d,%d,%d,%d,%d,%.6f\n", r.threshold_m, r.ris_count, r.outage_ues,
                          r.recovered[0], r.recovered[1], r.recovered[2], r.total_fraction);
            out << buf;
        }
    }

    void write_json(const nlohmann::json &doc, const std::string &path)
    {
        auto out = open_out(path);
        out << doc.dump(2) << '\n';
    }

    nlohmann::json read_json(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw ParseError("cannot open '" + path + "'");
        try
        {
            return nlohmann::json::parse(in);
        }
        catch (const nlohmann::json::exception &e)
        {
            throw ParseError(path + ": " + e.what());
        }
    }
}
