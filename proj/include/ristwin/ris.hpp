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

#ifndef RISTWIN_RIS_HPP
#define RISTWIN_RIS_HPP

#include "ristwin/radio.hpp"

namespace ristwin
{
    struct RisParams
    {
        double aperture_width = 2.0;  // m
        double aperture_height = 2.0; // m
        double roughness = 1.0;       // R
        double efficiency = 0.8;      // eta
        int phase_bits = 0;           // 0 = continuous phases
    };

    // Wall-mounted reflecting surface with an element grid at half-wavelength pitch.
    struct RisUnit
    {
        SurfaceId wall;
        Vec3 center;
        Vec3 normal; // wall outward normal
        Vec3 u_axis; // along the wall
        Vec3 v_axis; // vertical
        double width = 0.0;
        double height = 0.0;
        double spacing = 0.0;
        double frequency_hz = 0.0;
        int nx = 0;
        int ny = 0;
        double roughness = 1.0;
        double efficiency = 0.8;
        bool shifted = false;
        std::vector<double> amplitude; // A per element
        std::vector<double> phase;     // phi per element [rad]

        int sector = -1; // global sector id of the serving sector
        int beam = -1;
        int cluster = -1;
        Vec3 target;

        int element_count() const { return nx * ny; }
        Vec3 element_position(int e) const;
        double element_area() const { return spacing * spacing; }
        // Gamma_e = R sqrt(eta) A_e e^{j phi_e}
        cplx reflection(int e) const;
    };

    // Throws ValidationError when the wall cannot hold a single element or the
    // surface is not a wall.
    RisUnit place_on_wall(const Scene &scene, const SurfaceId &wall, const Vec3 &anchor, double frequency_hz,
                          const RisParams &params = {});

    // Co-phases every element for the bs -> element -> target path. Throws
    // ValidationError when either point is behind the wall.
    void configure_phases(RisUnit &ris, const Vec3 &bs, const Vec3 &target, int phase_bits = 0);

    // Scalar BS -> RIS -> point field coefficient (no antenna gains), summed over
    // elements: Gamma_e * (A_e / 4 pi) * sqrt(cos_i cos_r) * e^{-jk(d1+d2)} / (d1 d2).
    cplx cascade_coefficient(const RisUnit &ris, const Vec3 &source, const Vec3 &point);

    // True when source -> centre and centre -> point are unobstructed and both
    // points lie in front of the wall.
    bool cascade_visible(const RisUnit &ris, const SpatialIndex &index, const Vec3 &source, const Vec3 &point);

    // Adds the cascade of `ris` to the channel vector h of `sector` at `point`;
    // the sector array sees the RIS centre direction. Returns false when gated off.
    bool add_cascade(const RisUnit &ris, const SpatialIndex &index, const SectorSetup &sector, const Vec3 &point,
                     cplx *h);

    nlohmann::json ris_to_json(const RisUnit &ris);
}

#endif
