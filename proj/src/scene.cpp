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

#include "ristwin/scene.hpp"

#include <fstream>
#include <map>
#include <sstream>

using nlohmann::json;

namespace ristwin
{
    void ElectromagneticMaterial::validate() const
    {
        if (!(relative_permittivity >= 1.0) || !std::isfinite(relative_permittivity))
            throw ValidationError("relative permittivity must be >= 1");
        if (!(conductivity >= 0.0) || !std::isfinite(conductivity))
            throw ValidationError("conductivity must be >= 0");
        if (!(scattering_coefficient >= 0.0 && scattering_coefficient <= 1.0))
            throw ValidationError("scattering coefficient must lie in [0, 1]");
    }

    ElectromagneticMaterial concrete_material(double frequency_hz)
    {
        // ITU-R P.2040 concrete: sigma = c * f_GHz^d
        const double f_ghz = frequency_hz / 1e9;
        return {5.24, 0.0462 * std::pow(f_ghz, 0.7976), 0.3};
    }

    ElectromagneticMaterial ground_material() { return {15.0, 0.035, 0.0}; }

    const std::vector<SystemPreset> &builtin_presets()
    {
        static const std::vector<SystemPreset> presets = {
            {"4G", 2.0, 20.0, 3, "Vertical", 2, 2, 4, 43.0, 12.2, 1200, -132.0},
            {"5G", 3.5, 100.0, 3, "Vertical", 4, 8, 32, 49.0, 13.85, 3276, -129.0},
            {"6G", 10.0, 200.0, 3, "Vertical", 4, 16, 64, 44.0, 8.85, 3276, -126.0},
        };
        return presets;
    }

    const SystemPreset &preset_by_name(std::string_view name)
    {
        for (const auto &p : builtin_presets())
            if (p.name == name)
                return p;
        throw ValidationError("unknown preset '" + std::string(name) + "' (expected 4G, 5G or 6G)");
    }

    // ---------------------------------------------------------------- polygons

    double polygon_signed_area(const std::vector<Vec2> &poly)
    {
        double a = 0.0;
        for (std::size_t i = 0, n = poly.size(); i < n; ++i)
            a += cross(poly[i], poly[(i + 1) % n]);
        return 0.5 * a;
    }

    bool point_in_polygon(const Vec2 &p, const std::vector<Vec2> &poly)
    {
        bool inside = false;
        for (std::size_t i = 0, n = poly.size(), j = n - 1; i < n; j = i++)
        {
            const Vec2 &a = poly[i], &b = poly[j];
            if ((a.y > p.y) != (b.y > p.y))
            {
                double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if (p.x < x)
                    inside = !inside;
            }
        }
        return inside;
    }

    static bool segments_intersect(const Vec2 &p1, const Vec2 &p2, const Vec2 &q1, const Vec2 &q2)
    {
        auto orient = [](const Vec2 &a, const Vec2 &b, const Vec2 &c)
        {
            double v = cross(b - a, c - a);
            return (v > 1e-12) - (v < -1e-12);
        };
        auto on_segment = [](const Vec2 &a, const Vec2 &b, const Vec2 &c)
        {
            return std::min(a.x, b.x) - 1e-12 <= c.x && c.x <= std::max(a.x, b.x) + 1e-12 &&
                   std::min(a.y, b.y) - 1e-12 <= c.y && c.y <= std::max(a.y, b.y) + 1e-12;
        };
        int o1 = orient(p1, p2, q1), o2 = orient(p1, p2, q2);
        int o3 = orient(q1, q2, p1), o4 = orient(q1, q2, p2);
        if (o1 != o2 && o3 != o4)
            return true;
        return (o1 == 0 && on_segment(p1, p2, q1)) || (o2 == 0 && on_segment(p1, p2, q2)) ||
               (o3 == 0 && on_segment(q1, q2, p1)) || (o4 == 0 && on_segment(q1, q2, p2));
    }

    bool polygon_is_simple(const std::vector<Vec2> &poly)
    {
        const std::size_t n = poly.size();
        if (n < 3)
            return false;
        for (std::size_t i = 0; i < n; ++i)
        {
            if (poly[i] == poly[(i + 1) % n])
                return false;
            for (std::size_t j = i + 1; j < n; ++j)
            {
                bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
                if (adjacent)
                    continue;
                if (segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]))
                    return false;
            }
        }
        return std::abs(polygon_signed_area(poly)) > 1e-12;
    }

    double distance_to_polygon(const Vec2 &p, const std::vector<Vec2> &poly)
    {
        if (point_in_polygon(p, poly))
            return 0.0;
        double best = 1e300;
        for (std::size_t i = 0, n = poly.size(); i < n; ++i)
        {
            Vec2 a = poly[i], b = poly[(i + 1) % n];
            Vec2 ab = b - a;
            double t = std::clamp(dot(p - a, ab) / dot(ab, ab), 0.0, 1.0);
            best = std::min(best, norm(p - (a + ab * t)));
        }
        return best;
    }

    // ------------------------------------------------------------------- scene

    void Scene::rebuild_surfaces()
    {
        surfaces_.clear();
        building_offsets_.clear();
        for (std::size_t b = 0; b < buildings.size(); ++b)
        {
            building_offsets_.push_back(surfaces_.size());
            const auto &fp = buildings[b].footprint;
            const int n = static_cast<int>(fp.size());
            for (int e = 0; e < n; ++e)
            {
                Vec2 a = fp[e], c = fp[(e + 1) % n];
                Vec2 edge = c - a;
                double len = norm(edge);
                Surface s;
                s.id = {static_cast<std::int32_t>(b), e};
                s.kind = SurfaceKind::Wall;
                s.origin = {a.x, a.y, 0.0};
                s.u_axis = {edge.x / len, edge.y / len, 0.0};
                s.normal = {edge.y / len, -edge.x / len, 0.0}; // right of a CCW edge
                s.u_length = len;
                s.v_length = buildings[b].height;
                s.height = buildings[b].height;
                surfaces_.push_back(std::move(s));
            }
            Surface roof;
            roof.id = {static_cast<std::int32_t>(b), n};
            roof.kind = SurfaceKind::Roof;
            roof.normal = {0, 0, 1};
            roof.origin = {fp[0].x, fp[0].y, buildings[b].height};
            roof.polygon = fp;
            roof.height = buildings[b].height;
            surfaces_.push_back(std::move(roof));
        }
        if (ground_enabled)
        {
            Surface g;
            g.id = {-1, 0};
            g.kind = SurfaceKind::Ground;
            g.normal = {0, 0, 1};
            surfaces_.push_back(std::move(g));
        }
    }

    const Surface &Scene::surface(const SurfaceId &id) const
    {
        if (id.is_ground())
        {
            if (!ground_enabled)
                throw Error("ground surface requested but ground is disabled");
            return surfaces_.back();
        }
        return surfaces_.at(building_offsets_.at(id.building) + static_cast<std::size_t>(id.face));
    }

    std::vector<SectorRef> Scene::sectors() const
    {
        std::vector<SectorRef> out;
        int g = 0;
        for (int s = 0; s < static_cast<int>(bs_sites.size()); ++s)
            for (int k = 0; k < static_cast<int>(bs_sites[s].sectors.size()); ++k)
                out.push_back({s, k, g++});
        return out;
    }

    int Scene::building_at(const Vec2 &p) const
    {
        for (std::size_t b = 0; b < buildings.size(); ++b)
            if (point_in_polygon(p, buildings[b].footprint))
                return static_cast<int>(b);
        return -1;
    }

    Area Scene::coverage_area(double margin) const
    {
        if (area)
            return *area;
        Vec2 lo{1e300, 1e300}, hi{-1e300, -1e300};
        auto grow = [&](const Vec2 &p)
        {
            lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
            hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
        };
        for (const auto &b : buildings)
            for (const auto &v : b.footprint)
                grow(v);
        for (const auto &s : bs_sites)
            grow(xy(s.position));
        if (lo.x > hi.x)
            return {{-margin, -margin}, {margin, margin}};
        return {{lo.x - margin, lo.y - margin}, {hi.x + margin, hi.y + margin}};
    }

    void Scene::validate() const
    {
        for (const auto &b : buildings)
        {
            if (!(b.height > 0.0))
                throw ValidationError("building '" + b.id + "': height must be > 0");
            if (b.footprint.size() < 3)
                throw ValidationError("building '" + b.id + "': footprint needs at least 3 vertices");
            if (!polygon_is_simple(b.footprint))
                throw ValidationError("building '" + b.id + "': footprint is not a simple polygon");
            b.material.validate();
        }
        for (const auto &s : bs_sites)
        {
            if (s.sectors.empty() || s.sectors.size() > 3)
                throw ValidationError("site '" + s.id + "': expected 1 to 3 sectors");
            for (const auto &sec : s.sectors)
            {
                if (sec.rows < 0 || sec.cols < 0 || (sec.rows == 0) != (sec.cols == 0))
                    throw ValidationError("site '" + s.id + "': array rows/cols must both be positive or both omitted");
            }
        }
        ground.validate();
        if (area && !(area->max.x > area->min.x && area->max.y > area->min.y))
            throw ValidationError("area: max must exceed min");
    }

    // -------------------------------------------------------------------- JSON

    static ElectromagneticMaterial parse_material(const json &j)
    {
        ElectromagneticMaterial m;
        m.relative_permittivity = j.at("eps_r").get<double>();
        m.conductivity = j.at("sigma").get<double>();
        m.scattering_coefficient = j.value("scattering", 0.0);
        return m;
    }

    static json material_to_json(const ElectromagneticMaterial &m)
    {
        return {{"eps_r", m.relative_permittivity}, {"sigma", m.conductivity}, {"scattering", m.scattering_coefficient}};
    }

    static Vec2 parse_vec2(const json &j)
    {
        if (!j.is_array() || j.size() != 2)
            throw ParseError("expected [x, y]");
        return {j[0].get<double>(), j[1].get<double>()};
    }

    Scene parse_scene(const json &doc, double frequency_hz)
    {
        Scene scene;
        try
        {
            std::map<std::string, ElectromagneticMaterial> named;
            if (doc.contains("materials"))
                for (const auto &[name, m] : doc.at("materials").items())
                    named[name] = parse_material(m);

            for (const auto &jb : doc.at("buildings"))
            {
                Building b;
                b.id = jb.at("id").is_string() ? jb.at("id").get<std::string>() : jb.at("id").dump();
                for (const auto &v : jb.at("footprint"))
                    b.footprint.push_back(parse_vec2(v));
                // an explicitly closed ring repeats its first vertex
                if (b.footprint.size() > 3 && b.footprint.front() == b.footprint.back())
                    b.footprint.pop_back();
                b.height = jb.at("height").get<double>();
                if (!jb.contains("material") || jb.at("material").is_null())
                    b.material = concrete_material(frequency_hz);
                else if (jb.at("material").is_string())
                {
                    auto it = named.find(jb.at("material").get<std::string>());
                    if (it == named.end())
                        throw ValidationError("building '" + b.id + "': unknown material '" +
                                              jb.at("material").get<std::string>() + "'");
                    b.material = it->second;
                }
                else
                    b.material = parse_material(jb.at("material"));
                if (polygon_signed_area(b.footprint) < 0.0)
                    std::reverse(b.footprint.begin(), b.footprint.end());
                scene.buildings.push_back(std::move(b));
            }

            for (const auto &js : doc.at("bs_sites"))
            {
                BsSite s;
                s.id = js.at("id").is_string() ? js.at("id").get<std::string>() : js.at("id").dump();
                const auto &p = js.at("position");
                if (!p.is_array() || p.size() != 3)
                    throw ParseError("site '" + s.id + "': position must be [x, y, z]");
                s.position = {p[0].get<double>(), p[1].get<double>(), p[2].get<double>()};
                for (const auto &jk : js.at("sectors"))
                {
                    SectorConfig c;
                    c.bearing_deg = jk.at("bearing_deg").get<double>();
                    c.tilt_deg = jk.value("tilt_deg", 0.0);
                    c.rows = jk.value("rows", 0);
                    c.cols = jk.value("cols", 0);
                    if (jk.contains("tx_power_dbm"))
                        c.tx_power_dbm = jk.at("tx_power_dbm").get<double>();
                    s.sectors.push_back(c);
                }
                scene.bs_sites.push_back(std::move(s));
            }

            if (doc.contains("ground"))
            {
                const auto &g = doc.at("ground");
                if (g.is_null())
                    scene.ground_enabled = false;
                else
                {
                    scene.ground_enabled = g.value("enabled", true);
                    if (g.contains("eps_r"))
                        scene.ground.relative_permittivity = g.at("eps_r").get<double>();
                    if (g.contains("sigma"))
                        scene.ground.conductivity = g.at("sigma").get<double>();
                }
            }

            if (doc.contains("area"))
                scene.area = Area{parse_vec2(doc.at("area").at("min")), parse_vec2(doc.at("area").at("max"))};
        }
        catch (const json::exception &e)
        {
            throw ParseError(std::string("scene: ") + e.what());
        }

        scene.validate();
        scene.rebuild_surfaces();
        return scene;
    }

    Scene load_scene(const std::string &path, double frequency_hz)
    {
        std::ifstream in(path);
        if (!in)
            throw ParseError("cannot open scene file '" + path + "'");
        json doc;
        try
        {
            in >> doc;
        }
        catch (const json::exception &e)
        {
            throw ParseError("scene '" + path + "': " + e.what());
        }
        return parse_scene(doc, frequency_hz);
    }

    json scene_to_json(const Scene &scene)
    {
        json doc;
        doc["buildings"] = json::array();
        for (const auto &b : scene.buildings)
        {
            json fp = json::array();
            for (const auto &v : b.footprint)
                fp.push_back({v.x, v.y});
            doc["buildings"].push_back({{"id", b.id}, {"footprint", fp}, {"height", b.height}, {"material", material_to_json(b.material)}});
        }
        doc["bs_sites"] = json::array();
        for (const auto &s : scene.bs_sites)
        {
            json sectors = json::array();
            for (const auto &c : s.sectors)
            {
                json jc = {{"bearing_deg", c.bearing_deg}, {"tilt_deg", c.tilt_deg}};
                if (c.rows > 0)
                {
                    jc["rows"] = c.rows;
                    jc["cols"] = c.cols;
                }
                if (c.tx_power_dbm)
                    jc["tx_power_dbm"] = *c.tx_power_dbm;
                sectors.push_back(jc);
            }
            doc["bs_sites"].push_back({{"id", s.id}, {"position", {s.position.x, s.position.y, s.position.z}}, {"sectors", sectors}});
        }
        if (scene.ground_enabled)
            doc["ground"] = {{"enabled", true}, {"eps_r", scene.ground.relative_permittivity}, {"sigma", scene.ground.conductivity}};
        else
            doc["ground"] = {{"enabled", false}};
        if (scene.area)
            doc["area"] = {{"min", {scene.area->min.x, scene.area->min.y}}, {"max", {scene.area->max.x, scene.area->max.y}}};
        return doc;
    }

    void save_scene(const Scene &scene, const std::string &path)
    {
        std::ofstream out(path);
        if (!out)
            throw Error("cannot write scene file '" + path + "'");
        out << scene_to_json(scene).dump(2) << "\n";
    }
}
