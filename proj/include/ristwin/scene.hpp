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

#ifndef RISTWIN_SCENE_HPP
#define RISTWIN_SCENE_HPP

#include "ristwin/geometry.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace ristwin
{
    class Error : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // Malformed input (bad JSON, missing keys, wrong types)
    class ParseError : public Error
    {
    public:
        using Error::Error;
    };

    // Well-formed input that violates a domain invariant
    class ValidationError : public Error
    {
    public:
        using Error::Error;
    };

    struct ElectromagneticMaterial
    {
        double relative_permittivity = 5.24;
        double conductivity = 0.0;     // S/m
        double scattering_coefficient = 0.3;

        bool operator==(const ElectromagneticMaterial &) const = default;

        // Throws ValidationError when a field leaves its physical range.
        void validate() const;
    };

    // Concrete parameters used when a building carries no material annotation.
    ElectromagneticMaterial concrete_material(double frequency_hz);

    // Medium dry ground; not subject to calibration.
    ElectromagneticMaterial ground_material();

    struct Building
    {
        std::string id;
        std::vector<Vec2> footprint; // counter-clockwise after loading
        double height = 0.0;
        ElectromagneticMaterial material;
    };

    struct SectorConfig
    {
        double bearing_deg = 0.0; // clockwise from +y (north)
        double tilt_deg = 0.0;    // positive = downtilt
        int rows = 0;             // M_v, 0 = take from preset
        int cols = 0;             // M_h, 0 = take from preset
        std::optional<double> tx_power_dbm; // per subcarrier; preset value when unset
    };

    struct BsSite
    {
        std::string id;
        Vec3 position;
        std::vector<SectorConfig> sectors;
    };

    struct SystemPreset
    {
        std::string name;
        double carrier_ghz;
        double bandwidth_mhz;
        int sectors_per_site;
        std::string polarization;
        int array_h; // M_h
        int array_v; // M_v
        int codebook_size;
        double tx_power_cell_dbm;
        double tx_power_subcarrier_dbm;
        int subcarriers;
        double noise_subcarrier_dbm;

        double frequency_hz() const { return carrier_ghz * 1e9; }
    };

    const std::vector<SystemPreset> &builtin_presets();
    // Throws ValidationError for names other than 4G, 5G, 6G.
    const SystemPreset &preset_by_name(std::string_view name);

    enum class SurfaceKind : std::uint8_t
    {
        Wall,
        Roof,
        Ground
    };

    // (building index, face index). Walls use the footprint edge index, the
    // roof uses the edge count, ground is (-1, 0).
    struct SurfaceId
    {
        std::int32_t building = -1;
        std::int32_t face = 0;

        auto operator<=>(const SurfaceId &) const = default;
        bool is_ground() const { return building < 0; }
    };

    struct Surface
    {
        SurfaceId id;
        SurfaceKind kind = SurfaceKind::Wall;
        Vec3 normal;      // outward
        // Walls: origin is the lower edge start, u_axis runs along the edge.
        Vec3 origin;
        Vec3 u_axis;
        double u_length = 0.0;
        double v_length = 0.0; // wall height
        std::vector<Vec2> polygon; // roof footprint
        double height = 0.0;
    };

    struct SectorRef
    {
        int site = 0;
        int sector = 0;
        int global_id = 0;
    };

    struct Area
    {
        Vec2 min;
        Vec2 max;
    };

    class Scene
    {
    public:
        std::vector<Building> buildings;
        std::vector<BsSite> bs_sites;
        bool ground_enabled = true;
        ElectromagneticMaterial ground = ground_material();
        std::optional<Area> area;

        // Derives wall/roof/ground surfaces; call after mutating buildings.
        void rebuild_surfaces();
        const std::vector<Surface> &surfaces() const { return surfaces_; }
        const Surface &surface(const SurfaceId &id) const;

        std::vector<SectorRef> sectors() const;
        const SectorConfig &sector(const SectorRef &ref) const
        {
            return bs_sites[ref.site].sectors[ref.sector];
        }

        const ElectromagneticMaterial &material(const SurfaceId &id) const
        {
            return id.is_ground() ? ground : buildings[id.building].material;
        }

        // Index of the building whose footprint contains p, or -1.
        int building_at(const Vec2 &p) const;

        // Coverage area: explicit, else the footprint/site bounds plus margin.
        Area coverage_area(double margin = 20.0) const;

        void validate() const;

    private:
        std::vector<Surface> surfaces_;
        std::vector<std::size_t> building_offsets_;
    };

    bool point_in_polygon(const Vec2 &p, const std::vector<Vec2> &poly);
    double polygon_signed_area(const std::vector<Vec2> &poly);
    bool polygon_is_simple(const std::vector<Vec2> &poly);
    // Distance from p to the polygon (0 inside).
    double distance_to_polygon(const Vec2 &p, const std::vector<Vec2> &poly);

    // Buildings without a material annotation receive concrete_material(frequency_hz).
    Scene parse_scene(const nlohmann::json &doc, double frequency_hz);
    Scene load_scene(const std::string &path, double frequency_hz);
    nlohmann::json scene_to_json(const Scene &scene);
    void save_scene(const Scene &scene, const std::string &path);
}

#endif
