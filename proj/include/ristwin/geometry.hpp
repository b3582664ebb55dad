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

#ifndef RISTWIN_GEOMETRY_HPP
#define RISTWIN_GEOMETRY_HPP

#include <algorithm>
#include <utility>
#include <cmath>
#include <numbers>

namespace ristwin
{
    constexpr double kPi = std::numbers::pi;
    constexpr double kSpeedOfLight = 299792458.0;  // m/s
    constexpr double kVacuumPermittivity = 8.8541878128e-12; // F/m

    struct Vec2
    {
        double x = 0.0;
        double y = 0.0;

        constexpr Vec2 operator+(const Vec2 &o) const { return {x + o.x, y + o.y}; }
        constexpr Vec2 operator-(const Vec2 &o) const { return {x - o.x, y - o.y}; }
        constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
        constexpr bool operator==(const Vec2 &) const = default;
    };

    inline double dot(const Vec2 &a, const Vec2 &b) { return a.x * b.x + a.y * b.y; }
    inline double cross(const Vec2 &a, const Vec2 &b) { return a.x * b.y - a.y * b.x; }
    inline double norm(const Vec2 &a) { return std::hypot(a.x, a.y); }

    struct Vec3
    {
        double x = 0.0;
        double y = 0.0;
        double z = 0.0;

        constexpr Vec3 operator+(const Vec3 &o) const { return {x + o.x, y + o.y, z + o.z}; }
        constexpr Vec3 operator-(const Vec3 &o) const { return {x - o.x, y - o.y, z - o.z}; }
        constexpr Vec3 operator-() const { return {-x, -y, -z}; }
        constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
        constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
        Vec3 &operator+=(const Vec3 &o)
        {
            x += o.x, y += o.y, z += o.z;
            return *this;
        }
        constexpr bool operator==(const Vec3 &) const = default;

        double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
    };

    inline constexpr Vec3 operator*(double s, const Vec3 &v) { return v * s; }
    inline double dot(const Vec3 &a, const Vec3 &b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
    inline Vec3 cross(const Vec3 &a, const Vec3 &b)
    {
        return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
    }
    inline double norm(const Vec3 &a) { return std::sqrt(dot(a, a)); }
    inline double distance(const Vec3 &a, const Vec3 &b) { return norm(a - b); }
    inline Vec3 normalized(const Vec3 &a) { return a / norm(a); }
    inline Vec2 xy(const Vec3 &a) { return {a.x, a.y}; }

    // Mirror direction d about a plane with unit normal n.
    inline Vec3 reflect(const Vec3 &d, const Vec3 &n) { return d - n * (2.0 * dot(d, n)); }

    // Mirror point p about the plane through q with unit normal n.
    inline Vec3 mirror_point(const Vec3 &p, const Vec3 &q, const Vec3 &n)
    {
        return p - n * (2.0 * dot(p - q, n));
    }

    // Unit vector perpendicular to d; the component of `hint` orthogonal to d
    // when it is well defined, otherwise an arbitrary perpendicular.
    inline Vec3 orthogonal_unit(const Vec3 &d, const Vec3 &hint)
    {
        Vec3 v = hint - d * dot(hint, d);
        double len = norm(v);
        if (len > 1e-9)
            return v / len;
        Vec3 alt = std::abs(d.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
        v = alt - d * dot(alt, d);
        return v / norm(v);
    }

    struct Aabb
    {
        Vec3 lo{1e300, 1e300, 1e300};
        Vec3 hi{-1e300, -1e300, -1e300};

        void expand(const Vec3 &p)
        {
            lo = {std::fmin(lo.x, p.x), std::fmin(lo.y, p.y), std::fmin(lo.z, p.z)};
            hi = {std::fmax(hi.x, p.x), std::fmax(hi.y, p.y), std::fmax(hi.z, p.z)};
        }
        void expand(const Aabb &b)
        {
            expand(b.lo);
            expand(b.hi);
        }
        Vec3 center() const { return (lo + hi) * 0.5; }
        bool empty() const { return lo.x > hi.x; }

        // Slab test against [0, t_max]; conservative when the origin lies on a face.
        bool hit(const Vec3 &origin, const Vec3 &inv_dir, double t_max, double &t_enter) const
        {
            double t0 = 0.0, t1 = t_max;
            for (int a = 0; a < 3; ++a)
            {
                double ta = (lo[a] - origin[a]) * inv_dir[a];
                double tb = (hi[a] - origin[a]) * inv_dir[a];
                if (ta > tb)
                    std::swap(ta, tb);
                // NaN from 0 * inf when the origin sits on a slab face
                if (!(ta <= t1) || !(tb >= t0))
                {
                    if (std::isnan(ta) || std::isnan(tb))
                        continue;
                    return false;
                }
                t0 = std::fmax(t0, ta);
                t1 = std::fmin(t1, tb);
            }
            t_enter = t0;
            return t0 <= t1;
        }
    };

    inline double deg2rad(double d) { return d * kPi / 180.0; }
    inline double rad2deg(double r) { return r * 180.0 / kPi; }
    inline double wavelength(double frequency_hz) { return kSpeedOfLight / frequency_hz; }
}

#endif
