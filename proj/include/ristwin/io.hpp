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

#ifndef RISTWIN_IO_HPP
#define RISTWIN_IO_HPP

#include "ristwin/clustering.hpp"
#include "ristwin/radio.hpp"

#include <array>
#include <string>

namespace ristwin
{
    // One row per outdoor tile: x,y,rsrp_dbm,sector_id,beam_index,outage.
    // Tiles without coverage carry rsrp_dbm = -inf and sector/beam -1.
    void write_coverage_csv(const CoverageMap &map, const std::string &path);

    // Fixed colour ramp with stops at -60/-80/-100/-120 dBm; indoor tiles grey,
    // tiles without coverage black.
    std::array<std::uint8_t, 3> heatmap_color(double rsrp_dbm);
    // Binary PPM (P6), north up, `pixels_per_tile` square pixels per tile.
    void write_heatmap_ppm(const CoverageMap &map, const std::string &path, int pixels_per_tile = 4);

    // Outage fraction and RSRP percentiles (nearest rank over covered outdoor tiles).
    nlohmann::json coverage_summary_json(const CoverageMap &map);

    // `points` are the clustered tiles' indices, in the order given to birch_cluster.
    nlohmann::json clusters_to_json(const std::vector<Cluster> &clusters, const std::vector<int> &tiles);

    struct ApertureSweepRow
    {
        double aperture_m = 0.0;
        int elements = 0; // per unit at the nominal size
        int ris_count = 0;
        int outage_ues = 0;
        std::array<int, 3> recovered{};
        double total_fraction = 0.0;
    };

    void write_aperture_sweep_csv(const std::vector<ApertureSweepRow> &rows, const std::string &path);

    struct ReclusterSweepRow
    {
        double threshold_m = 0.0; // T_new
        int ris_count = 0;
        int outage_ues = 0;
        std::array<int, 3> recovered{};
        double total_fraction = 0.0;
    };

    void write_recluster_sweep_csv(const std::vector<ReclusterSweepRow> &rows, const std::string &path);

    // Pretty-printed with a trailing newline.
    void write_json(const nlohmann::json &doc, const std::string &path);
    nlohmann::json read_json(const std::string &path);
}

#endif
