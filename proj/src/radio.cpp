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

#include "ristwin/radio.hpp"
#include "ristwin/path_cache.hpp"

#include <algorithm>

namespace ristwin
{
    double element_gain_db(const ElementPattern &p, double azimuth_off_deg, double elevation_off_deg)
    {
        // wrap azimuth into (-180, 180]
        double az = std::remainder(azimuth_off_deg, 360.0);
        const double a_h = -std::min(12.0 * (az / p.hpbw_azimuth) * (az / p.hpbw_azimuth), p.max_attenuation);
        const double a_v = -std::min(12.0 * (elevation_off_deg / p.hpbw_elevation) * (elevation_off_deg / p.hpbw_elevation),
                                     p.sidelobe_limit);
        return p.peak_gain_dbi - std::min(-(a_h + a_v), p.max_attenuation);
    }

    BeamCodebook dft_codebook(int M_h, int M_v)
    {
        if (M_h < 1 || M_v < 1)
            throw ValidationError("codebook: array dimensions must be >= 1");
        auto dft = [](int M, int m)
        {
            std::vector<cplx> v(M);
            const double s = 1.0 / std::sqrt(static_cast<double>(M));
            for (int k = 0; k < M; ++k)
                v[k] = std::polar(s, -2.0 * kPi * static_cast<double>((static_cast<long>(m) * k) % M) / M);
            return v;
        };
        BeamCodebook cb;
        cb.M_h = M_h;
        cb.M_v = M_v;
        for (int mh = 0; mh < M_h; ++mh)
        {
            const auto wh = dft(M_h, mh);
            for (int mv = 0; mv < M_v; ++mv)
            {
                const auto wv = dft(M_v, mv);
                std::vector<cplx> w(static_cast<std::size_t>(M_h) * M_v);
                for (int kh = 0; kh < M_h; ++kh)
                    for (int kv = 0; kv < M_v; ++kv)
                        w[kh * M_v + kv] = wh[kh] * wv[kv];
                cb.beams.push_back(std::move(w));
            }
        }
        return cb;
    }

    std::pair<double, double> SectorFrame::local_angles(const Vec3 &dir) const
    {
        const double az = rad2deg(std::atan2(dot(dir, horizontal), dot(dir, boresight)));
        const double el = rad2deg(std::asin(std::clamp(dot(dir, up), -1.0, 1.0)));
        return {az, el};
    }

    SectorFrame sector_frame(const Vec3 &position, const SectorConfig &config)
    {
        const double b = deg2rad(config.bearing_deg), t = deg2rad(config.tilt_deg);
        SectorFrame f;
        f.position = position;
        f.boresight = {std::sin(b) * std::cos(t), std::cos(b) * std::cos(t), -std::sin(t)};
        f.horizontal = {std::cos(b), -std::sin(b), 0.0};
        f.up = normalized(cross(f.horizontal, f.boresight));
        return f;
    }

    double SectorSetup::element_gain_linear(const Vec3 &dir) const
    {
        auto [az, el] = frame.local_angles(dir);
        return std::pow(10.0, element_gain_db(pattern, az, el) / 10.0);
    }

    void SectorSetup::array_response(const Vec3 &dir, double frequency_hz, cplx *out) const
    {
        // half-wavelength spacing: k * lambda/2 = pi
        const double sh = kPi * dot(dir, frame.horizontal);
        const double sv = kPi * dot(dir, frame.up);
        const double ch = 0.5 * (M_h - 1), cv = 0.5 * (M_v - 1);
        (void)frequency_hz;
        for (int kh = 0; kh < M_h; ++kh)
            for (int kv = 0; kv < M_v; ++kv)
                out[kh * M_v + kv] = std::polar(1.0, -((kh - ch) * sh + (kv - cv) * sv));
    }

    void SectorSetup::accumulate(cplx gain, const Vec3 &dir, double frequency_hz, cplx *h) const
    {
        const cplx g = gain * std::sqrt(element_gain_linear(dir));
        const double sh = kPi * dot(dir, frame.horizontal);
        const double sv = kPi * dot(dir, frame.up);
        const double ch = 0.5 * (M_h - 1), cv = 0.5 * (M_v - 1);
        (void)frequency_hz;
        // separable phase: e^{-j(a_h + a_v)}
        cplx row[64];
        cplx *ph = M_v <= 64 ? row : nullptr;
        std::vector<cplx> heap;
        if (!ph)
        {
            heap.resize(M_v);
            ph = heap.data();
        }
        for (int kv = 0; kv < M_v; ++kv)
            ph[kv] = std::polar(1.0, -(kv - cv) * sv);
        for (int kh = 0; kh < M_h; ++kh)
        {
            const cplx gh = g * std::polar(1.0, -(kh - ch) * sh);
            for (int kv = 0; kv < M_v; ++kv)
                h[kh * M_v + kv] += gh * ph[kv];
        }
    }

    std::vector<SectorSetup> sector_setups(const Scene &scene, const SystemPreset &preset)
    {
        std::vector<SectorSetup> out;
        for (const auto &ref : scene.sectors())
        {
            const auto &cfg = scene.sector(ref);
            SectorSetup s;
            s.ref = ref;
            s.frame = sector_frame(scene.bs_sites[ref.site].position, cfg);
            s.M_h = cfg.cols > 0 ? cfg.cols : preset.array_h;
            s.M_v = cfg.rows > 0 ? cfg.rows : preset.array_v;
            s.tx_power_dbm = cfg.tx_power_dbm.value_or(preset.tx_power_subcarrier_dbm);
            s.codebook = dft_codebook(s.M_h, s.M_v);
            out.push_back(std::move(s));
        }
        return out;
    }

    double beam_gain(const cplx *h, const std::vector<cplx> &w)
    {
        cplx acc = 0.0;
        for (std::size_t k = 0; k < w.size(); ++k)
            acc += std::conj(h[k]) * w[k];
        return std::norm(acc);
    }

    double rsrp_dbm(double gain_linear, double tx_power_dbm)
    {
        if (!(gain_linear > 0.0))
            return kNoCoverage;
        return 10.0 * std::log10(gain_linear) + tx_power_dbm;
    }

    double rsrp_dbm(double gain_linear, const SystemPreset &preset)
    {
        return rsrp_dbm(gain_linear, preset.tx_power_subcarrier_dbm);
    }

    Vec2 TileGrid::center(int tile) const
    {
        const int ix = tile % nx, iy = tile / nx;
        return {origin.x + (ix + 0.5) * tile_size, origin.y + (iy + 0.5) * tile_size};
    }

    Vec3 TileGrid::sample(int tile, int q) const
    {
        const Vec2 c = center(tile);
        const double o = 0.25 * tile_size;
        return {c.x + ((q & 1) ? o : -o), c.y + ((q & 2) ? o : -o), ue_height};
    }

    int TileGrid::tile_at(const Vec2 &p) const
    {
        const double fx = (p.x - origin.x) / tile_size, fy = (p.y - origin.y) / tile_size;
        if (!(fx >= 0.0 && fy >= 0.0))
            return -1;
        const int ix = static_cast<int>(fx), iy = static_cast<int>(fy);
        if (ix >= nx || iy >= ny)
            return -1;
        return tile_index(ix, iy);
    }

    TileGrid make_tile_grid(const Scene &scene, double tile_size, double ue_height)
    {
        if (!(tile_size > 0.0))
            throw ValidationError("tile size must be > 0");
        const Area a = scene.coverage_area();
        TileGrid g;
        g.origin = a.min;
        g.tile_size = tile_size;
        g.ue_height = ue_height;
        g.nx = std::max(1, static_cast<int>(std::ceil((a.max.x - a.min.x) / tile_size - 1e-9)));
        g.ny = std::max(1, static_cast<int>(std::ceil((a.max.y - a.min.y) / tile_size - 1e-9)));
        g.indoor.resize(g.tile_count());
        g.sample_indoor.resize(static_cast<std::size_t>(g.tile_count()) * TileGrid::kSamplesPerTile);
        for (int t = 0; t < g.tile_count(); ++t)
        {
            g.indoor[t] = scene.building_at(g.center(t)) >= 0;
            for (int q = 0; q < TileGrid::kSamplesPerTile; ++q)
                g.sample_indoor[t * TileGrid::kSamplesPerTile + q] = g.indoor[t] || scene.building_at(xy(g.sample(t, q))) >= 0;
        }
        return g;
    }

    int CoverageMap::outdoor_count() const
    {
        return static_cast<int>(std::count_if(tiles.begin(), tiles.end(), [](const TileResult &t) { return !t.indoor; }));
    }

    int CoverageMap::outage_count() const
    {
        return static_cast<int>(std::count_if(tiles.begin(), tiles.end(), [](const TileResult &t) { return t.outage; }));
    }

    double CoverageMap::outage_fraction() const
    {
        const int n = outdoor_count();
        return n > 0 ? static_cast<double>(outage_count()) / n : 0.0;
    }

    std::vector<int> CoverageMap::outage_tiles() const
    {
        std::vector<int> out;
        for (int t = 0; t < static_cast<int>(tiles.size()); ++t)
            if (tiles[t].outage)
                out.push_back(t);
        return out;
    }

    double tile_gain(const ChannelField &field, int sector, int beam, int tile)
    {
        const auto &w = field.sectors[sector].codebook.beams[beam];
        double sum = 0.0;
        int n = 0;
        for (int q = 0; q < TileGrid::kSamplesPerTile; ++q)
        {
            const int s = tile * TileGrid::kSamplesPerTile + q;
            if (field.grid.sample_indoor[s])
                continue;
            sum += beam_gain(field.channel(sector, s), w);
            ++n;
        }
        return n > 0 ? sum / n : 0.0;
    }

    TileResult best_server(const ChannelField &field, int tile)
    {
        TileResult r;
        r.indoor = field.grid.indoor[tile] != 0;
        if (r.indoor)
            return r;
        for (int s = 0; s < static_cast<int>(field.sectors.size()); ++s)
        {
            const auto &sec = field.sectors[s];
            for (int m = 0; m < sec.codebook.size(); ++m)
            {
                const double p = rsrp_dbm(tile_gain(field, s, m, tile), sec.tx_power_dbm);
                if (p > r.rsrp_dbm)
                {
                    r.rsrp_dbm = p;
                    r.sector = sec.ref.global_id;
                    r.beam = m;
                }
            }
        }
        r.outage = is_outage(r.rsrp_dbm);
        return r;
    }

    CoverageMap evaluate_coverage(const ChannelField &field, bool parallel)
    {
        CoverageMap map;
        map.grid = field.grid;
        map.tiles.resize(field.grid.tile_count());
        const int n = field.grid.tile_count();
#pragma omp parallel for schedule(dynamic, 64) if (parallel)
        for (int t = 0; t < n; ++t)
            map.tiles[t] = best_server(field, t);
        return map;
    }

    void synthesize_field(const Scene &scene, double frequency_hz, const std::vector<PathSet> &site_paths,
                          const std::vector<int> &receiver_sample, ChannelField &field, bool reevaluate,
                          const std::vector<int> &receivers, bool parallel)
    {
        const auto count = static_cast<std::int64_t>(receivers.empty() ? receiver_sample.size() : receivers.size());
#pragma omp parallel for schedule(dynamic, 32) if (parallel)
        for (std::int64_t i = 0; i < count; ++i)
        {
            const int r = receivers.empty() ? static_cast<int>(i) : receivers[i];
            const int sample = receiver_sample[r];
            for (int s = 0; s < static_cast<int>(field.sectors.size()); ++s)
            {
                const auto &sec = field.sectors[s];
                cplx *h = field.channel(s, sample);
                std::fill(h, h + sec.elements(), cplx{});
                for (const auto &path : site_paths[sec.ref.site].per_receiver[r])
                {
                    PropagationPath p = path;
                    if (reevaluate)
                        p.amplitude = path_amplitude(path, scene, frequency_hz);
                    const auto c = path_to_channel_contribution(p, frequency_hz);
                    sec.accumulate(c.gain, c.departure, frequency_hz, h);
                }
            }
        }
    }

    CoverageRun build_coverage(const Scene &scene, const SystemPreset &preset, const TraceConfig &config,
                               const CoverageOptions &options)
    {
        const double f = preset.frequency_hz();
        CoverageRun run;
        run.field.grid = make_tile_grid(scene, options.tile_size, options.ue_height);
        run.field.sectors = sector_setups(scene, preset);
        const auto &grid = run.field.grid;
        const int samples = grid.tile_count() * TileGrid::kSamplesPerTile;
        for (int s = 0; s < samples; ++s)
            if (!grid.sample_indoor[s])
            {
                run.receivers.push_back(grid.sample(s / TileGrid::kSamplesPerTile, s % TileGrid::kSamplesPerTile));
                run.receiver_sample.push_back(s);
            }
        run.field.h.resize(run.field.sectors.size());
        for (std::size_t s = 0; s < run.field.sectors.size(); ++s)
            run.field.h[s].assign(static_cast<std::size_t>(samples) * run.field.sectors[s].elements(), cplx{});

        SpatialIndex index(scene);
        for (const auto &site : scene.bs_sites)
        {
            std::uint64_t key = 0;
            std::string file;
            if (!options.cache_dir.empty())
            {
                key = path_cache_key(scene, site.position, f, config, run.receivers);
                file = path_cache_file(options.cache_dir, key);
                if (auto cached = load_path_cache(file, key))
                {
                    run.site_paths.push_back(std::move(*cached));
                    continue;
                }
            }
            run.site_paths.push_back(options.parallel ? trace(index, site.position, run.receivers, f, config)
                                                      : trace_serial(index, site.position, run.receivers, f, config));
            if (!file.empty())
                save_path_cache(file, key, run.site_paths.back());
        }
        synthesize_field(scene, f, run.site_paths, run.receiver_sample, run.field, false, {}, options.parallel);
        run.map = evaluate_coverage(run.field, options.parallel);
        return run;
    }
}
