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

#ifndef RISTWIN_RADIO_HPP
#define RISTWIN_RADIO_HPP

#include "ristwin/raytracer.hpp"

#include <limits>
#include <string>

namespace ristwin
{
    constexpr double kOutageThresholdDbm = -100.0;
    constexpr double kNoCoverage = -std::numeric_limits<double>::infinity();

    // 3GPP-style sector element. Attenuations in dB, angles in degrees.
    struct ElementPattern
    {
        double hpbw_azimuth = 65.0;
        double hpbw_elevation = 10.0;
        double max_attenuation = 30.0; // A_max
        double sidelobe_limit = 30.0;  // SLA_v
        double peak_gain_dbi = 8.0;
    };

    // Gain in dBi at the given offsets from boresight.
    double element_gain_db(const ElementPattern &pattern, double azimuth_off_deg, double elevation_off_deg);

    // Beams of the Kronecker DFT codebook; beam index m = m_h * M_v + m_v and
    // element index k = k_h * M_v + k_v.
    struct BeamCodebook
    {
        int M_h = 1;
        int M_v = 1;
        std::vector<std::vector<cplx>> beams;

        int size() const { return static_cast<int>(beams.size()); }
        int elements() const { return M_h * M_v; }
    };

    BeamCodebook dft_codebook(int M_h, int M_v);

    // Array coordinate frame of a sector. `horizontal` runs along the M_h axis,
    // `up` along the M_v axis; azimuth offsets grow towards `horizontal`.
    struct SectorFrame
    {
        Vec3 position;
        Vec3 boresight;
        Vec3 horizontal;
        Vec3 up;

        // Azimuth/elevation offsets [deg] of a direction relative to boresight.
        std::pair<double, double> local_angles(const Vec3 &dir) const;
    };

    SectorFrame sector_frame(const Vec3 &position, const SectorConfig &config);

    struct SectorSetup
    {
        SectorRef ref;
        SectorFrame frame;
        int M_h = 1;
        int M_v = 1;
        double tx_power_dbm = 0.0; // per subcarrier
        BeamCodebook codebook;
        ElementPattern pattern;

        int elements() const { return M_h * M_v; }
        double element_gain_linear(const Vec3 &dir) const;
        // Array response e^{-j k p_e . dir}, element positions relative to the array centre.
        void array_response(const Vec3 &dir, double frequency_hz, cplx *out) const;
        // h += gain * sqrt(element gain) * a(dir)
        void accumulate(cplx gain, const Vec3 &dir, double frequency_hz, cplx *h) const;
    };

    // One setup per sector in scene order; array size and power fall back to the preset.
    std::vector<SectorSetup> sector_setups(const Scene &scene, const SystemPreset &preset);

    // |h^H w|^2
    double beam_gain(const cplx *h, const std::vector<cplx> &w);

    // 10 log10(G) + P_t, or kNoCoverage when G = 0.
    double rsrp_dbm(double gain_linear, double tx_power_dbm);
    double rsrp_dbm(double gain_linear, const SystemPreset &preset);

    inline bool is_outage(double rsrp) { return rsrp < kOutageThresholdDbm; }

    // Regular grid of square tiles, each averaged over 2x2 quarter-centre samples.
    struct TileGrid
    {
        Vec2 origin;
        double tile_size = 2.0;
        int nx = 0;
        int ny = 0;
        double ue_height = 1.5;
        std::vector<std::uint8_t> indoor;        // per tile, by its centre
        std::vector<std::uint8_t> sample_indoor; // per sample

        static constexpr int kSamplesPerTile = 4;

        int tile_count() const { return nx * ny; }
        int tile_index(int ix, int iy) const { return iy * nx + ix; }
        Vec2 center(int tile) const;
        Vec3 sample(int tile, int q) const;
        // Tile containing p, or -1 outside the grid.
        int tile_at(const Vec2 &p) const;
        bool is_outdoor(int tile) const { return !indoor[tile]; }
    };

    TileGrid make_tile_grid(const Scene &scene, double tile_size = 2.0, double ue_height = 1.5);

    struct TileResult
    {
        double rsrp_dbm = kNoCoverage;
        int sector = -1; // global sector id
        int beam = -1;
        bool outage = false;
        bool indoor = false;
    };

    struct CoverageMap
    {
        TileGrid grid;
        std::vector<TileResult> tiles;

        int outdoor_count() const;
        int outage_count() const;
        double outage_fraction() const;
        std::vector<int> outage_tiles() const;
    };

    // Per-sector channel vectors h (length M) at every sample of every tile.
    struct ChannelField
    {
        TileGrid grid;
        std::vector<SectorSetup> sectors;
        std::vector<std::vector<cplx>> h; // [sector][sample * M + element]

        const cplx *channel(int sector, int sample) const
        {
            return h[sector].data() + static_cast<std::size_t>(sample) * sectors[sector].elements();
        }
        cplx *channel(int sector, int sample)
        {
            return h[sector].data() + static_cast<std::size_t>(sample) * sectors[sector].elements();
        }
    };

    // Mean over the tile's outdoor samples of |h^H w|^2.
    double tile_gain(const ChannelField &field, int sector, int beam, int tile);

    // Argmax over (sector, beam) with ties to the lowest sector, then beam.
    TileResult best_server(const ChannelField &field, int tile);

    CoverageMap evaluate_coverage(const ChannelField &field, bool parallel = true);

    struct CoverageOptions
    {
        double tile_size = 2.0;
        double ue_height = 1.5;
        bool parallel = true;
        std::string cache_dir; // empty disables the path cache
    };

    // Traces, receivers and synthesized channels retained for re-evaluation.
    struct CoverageRun
    {
        std::vector<Vec3> receivers;       // outdoor samples, in sample order
        std::vector<int> receiver_sample;  // receivers[i] sits at sample receiver_sample[i]
        std::vector<PathSet> site_paths;   // per BS site
        ChannelField field;
        CoverageMap map;
    };

    // Adds the paths of every site to the field (amplitudes re-evaluated from
    // `scene` when `reevaluate` is set). `receivers` restricts synthesis to a
    // subset of receiver indices; empty means all.
    void synthesize_field(const Scene &scene, double frequency_hz, const std::vector<PathSet> &site_paths,
                          const std::vector<int> &receiver_sample, ChannelField &field, bool reevaluate,
                          const std::vector<int> &receivers = {}, bool parallel = true);

    CoverageRun build_coverage(const Scene &scene, const SystemPreset &preset, const TraceConfig &config,
                               const CoverageOptions &options = {});
}

#endif
