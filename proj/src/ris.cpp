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

#include "ristwin/ris.hpp"

#include <algorithm>

namespace ristwin
{
    namespace
    {
        // keeps LoS probes off the wall plane itself
        constexpr double kStandoff = 1e-3;
    }

    Vec3 RisUnit::element_position(int e) const
    {
        const int i = e / ny, j = e % ny;
        return center + u_axis * ((i - 0.5 * (nx - 1)) * spacing) + v_axis * ((j - 0.5 * (ny - 1)) * spacing);
    }

    cplx RisUnit::reflection(int e) const
    {
        return std::polar(roughness * std::sqrt(efficiency) * amplitude[e], phase[e]);
    }

    RisUnit place_on_wall(const Scene &scene, const SurfaceId &wall, const Vec3 &anchor, double frequency_hz,
                          const RisParams &params)
    {
        const Surface &s = scene.surface(wall);
        if (s.kind != SurfaceKind::Wall)
            throw ValidationError("ris: surface is not a building wall");
        if (!(params.aperture_width > 0.0 && params.aperture_height > 0.0))
            throw ValidationError("ris: aperture must be positive");
        if (!(params.roughness > 0.0 && params.roughness <= 1.0) || !(params.efficiency > 0.0 && params.efficiency <= 1.0))
            throw ValidationError("ris: R and eta must lie in (0, 1]");

        RisUnit r;
        r.wall = wall;
        r.frequency_hz = frequency_hz;
        r.spacing = 0.5 * wavelength(frequency_hz);
        r.normal = s.normal;
        r.u_axis = s.u_axis;
        r.v_axis = {0, 0, 1};
        r.roughness = params.roughness;
        r.efficiency = params.efficiency;
        if (s.u_length < r.spacing || s.v_length < r.spacing)
            throw ValidationError("ris: wall smaller than a single element");

        r.width = std::min(params.aperture_width, s.u_length);
        r.height = std::min(params.aperture_height, s.v_length);
        r.nx = static_cast<int>(std::floor(r.width / r.spacing + 1e-9));
        r.ny = static_cast<int>(std::floor(r.height / r.spacing + 1e-9));
        if (r.nx < 1 || r.ny < 1)
            throw ValidationError("ris: aperture smaller than a single element");

        const double u0 = dot(anchor - s.origin, s.u_axis);
        const double v0 = anchor.z - s.origin.z;
        const double u = std::clamp(u0, 0.5 * r.width, s.u_length - 0.5 * r.width);
        const double v = std::clamp(v0, 0.5 * r.height, s.v_length - 0.5 * r.height);
        r.shifted = r.width < params.aperture_width || r.height < params.aperture_height ||
                    std::abs(u - u0) > 1e-9 || std::abs(v - v0) > 1e-9;
        r.center = s.origin + s.u_axis * u + Vec3{0, 0, v};
        r.amplitude.assign(r.element_count(), 1.0);
        r.phase.assign(r.element_count(), 0.0);
        return r;
    }

    void configure_phases(RisUnit &ris, const Vec3 &bs, const Vec3 &target, int phase_bits)
    {
        if (dot(bs - ris.center, ris.normal) <= 0.0 || dot(target - ris.center, ris.normal) <= 0.0)
            throw ValidationError("ris: base station or target behind the wall");
        const double k = 2.0 * kPi / wavelength(ris.frequency_hz);
        const double step = phase_bits > 0 ? 2.0 * kPi / static_cast<double>(1 << phase_bits) : 0.0;
        for (int e = 0; e < ris.element_count(); ++e)
        {
            const Vec3 p = ris.element_position(e);
            double phi = std::fmod(k * (distance(bs, p) + distance(p, target)), 2.0 * kPi);
            if (step > 0.0)
                phi = std::fmod(std::round(phi / step) * step, 2.0 * kPi);
            ris.phase[e] = phi;
            ris.amplitude[e] = 1.0;
        }
        ris.target = target;
    }

    cplx cascade_coefficient(const RisUnit &ris, const Vec3 &source, const Vec3 &point)
    {
        const double k = 2.0 * kPi / wavelength(ris.frequency_hz);
        const double scale = ris.element_area() / (4.0 * kPi);
        cplx sum = 0.0;
        for (int e = 0; e < ris.element_count(); ++e)
        {
            const Vec3 p = ris.element_position(e);
            const Vec3 a = source - p, b = point - p;
            const double d1 = norm(a), d2 = norm(b);
            const double ci = dot(a, ris.normal) / d1, cr = dot(b, ris.normal) / d2;
            if (ci <= 0.0 || cr <= 0.0)
                continue;
            sum += ris.reflection(e) * (scale * std::sqrt(ci * cr) / (d1 * d2)) * std::polar(1.0, -k * (d1 + d2));
        }
        return sum;
    }

    bool cascade_visible(const RisUnit &ris, const SpatialIndex &index, const Vec3 &source, const Vec3 &point)
    {
        if (dot(source - ris.center, ris.normal) <= 0.0 || dot(point - ris.center, ris.normal) <= 0.0)
            return false;
        const Vec3 c = ris.center + ris.normal * kStandoff;
        return !index.occluded(source, c) && !index.occluded(c, point);
    }

    bool add_cascade(const RisUnit &ris, const SpatialIndex &index, const SectorSetup &sector, const Vec3 &point, cplx *h)
    {
        const Vec3 &bs = sector.frame.position;
        if (!cascade_visible(ris, index, bs, point))
            return false;
        const cplx c = cascade_coefficient(ris, bs, point);
        sector.accumulate(c, normalized(ris.center - bs), ris.frequency_hz, h);
        return true;
    }

    nlohmann::json ris_to_json(const RisUnit &ris)
    {
        return {
            {"wall", {{"building", ris.wall.building}, {"face", ris.wall.face}}},
            {"center", {ris.center.x, ris.center.y, ris.center.z}},
            {"normal", {ris.normal.x, ris.normal.y, ris.normal.z}},
            {"aperture", {{"width", ris.width}, {"height", ris.height}}},
            {"elements", {{"nx", ris.nx}, {"ny", ris.ny}}},
            {"shifted", ris.shifted},
            {"sector", ris.sector},
            {"beam", ris.beam},
            {"cluster", ris.cluster},
            {"target", {ris.target.x, ris.target.y, ris.target.z}},
            {"R", ris.roughness},
            {"eta", ris.efficiency},
        };
    }
}
