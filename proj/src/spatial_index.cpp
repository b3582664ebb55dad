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

#include "ristwin/spatial_index.hpp"

#include <algorithm>
#include <array>

namespace ristwin
{
    bool surface_contains(const Surface &s, const Vec3 &p, double tol)
    {
        switch (s.kind)
        {
        case SurfaceKind::Ground:
            return true;
        case SurfaceKind::Roof:
            return point_in_polygon(xy(p), s.polygon) || distance_to_polygon(xy(p), s.polygon) <= tol;
        case SurfaceKind::Wall:
        default:
        {
            double u = dot(p - s.origin, s.u_axis);
            return u >= -tol && u <= s.u_length + tol && p.z >= -tol && p.z <= s.v_length + tol;
        }
        }
    }

    bool intersect_surface(const Surface &s, const Vec3 &o, const Vec3 &d, double t_min, double t_max, double &t)
    {
        double denom = dot(d, s.normal);
        if (std::abs(denom) < 1e-15)
            return false;
        Vec3 anchor = s.kind == SurfaceKind::Ground ? Vec3{0, 0, 0} : s.origin;
        t = dot(anchor - o, s.normal) / denom;
        if (!(t > t_min && t < t_max))
            return false;
        Vec3 p = o + d * t;
        // snap to the plane before the bounds test
        if (s.kind != SurfaceKind::Wall)
            p.z = s.kind == SurfaceKind::Ground ? 0.0 : s.height;
        return surface_contains(s, p, 0.0);
    }

    SpatialIndex::SpatialIndex(const Scene &scene) : scene_(&scene)
    {
        const auto &surfaces = scene.surfaces();
        for (int i = 0; i < static_cast<int>(surfaces.size()); ++i)
        {
            const Surface &s = surfaces[i];
            if (s.kind == SurfaceKind::Ground)
            {
                ground_prim_ = i;
                continue;
            }
            Aabb box;
            if (s.kind == SurfaceKind::Wall)
            {
                box.expand(s.origin);
                box.expand(s.origin + s.u_axis * s.u_length + Vec3{0, 0, s.v_length});
            }
            else
            {
                for (const auto &v : s.polygon)
                    box.expand(Vec3{v.x, v.y, s.height});
            }
            prims_.push_back(i);
            prim_boxes_.push_back(box);
        }
        if (!prims_.empty())
        {
            nodes_.reserve(2 * prims_.size());
            build(0, static_cast<int>(prims_.size()));
        }
    }

    int SpatialIndex::build(int begin, int end)
    {
        int index = static_cast<int>(nodes_.size());
        nodes_.push_back({});
        Aabb box, centroids;
        for (int i = begin; i < end; ++i)
        {
            box.expand(prim_boxes_[i]);
            centroids.expand(prim_boxes_[i].center());
        }
        nodes_[index].box = box;
        if (end - begin <= 4)
        {
            nodes_[index].first = begin;
            nodes_[index].count = end - begin;
            return index;
        }
        Vec3 extent = centroids.hi - centroids.lo;
        int axis = extent.x > extent.y ? (extent.x > extent.z ? 0 : 2) : (extent.y > extent.z ? 1 : 2);
        int mid = (begin + end) / 2;
        // sort primitives and their boxes together by centroid along the axis
        std::vector<int> order(end - begin);
        for (int i = 0; i < end - begin; ++i)
            order[i] = begin + i;
        std::nth_element(order.begin(), order.begin() + (mid - begin), order.end(), [&](int a, int b)
                         {
                             double ca = prim_boxes_[a].center()[axis], cb = prim_boxes_[b].center()[axis];
                             return ca < cb || (ca == cb && prims_[a] < prims_[b]); });
        std::vector<int> prims(end - begin);
        std::vector<Aabb> boxes(end - begin);
        for (int i = 0; i < end - begin; ++i)
        {
            prims[i] = prims_[order[i]];
            boxes[i] = prim_boxes_[order[i]];
        }
        std::copy(prims.begin(), prims.end(), prims_.begin() + begin);
        std::copy(boxes.begin(), boxes.end(), prim_boxes_.begin() + begin);

        int left = build(begin, mid);
        int right = build(mid, end);
        nodes_[index].first = left;
        nodes_[index].right = right;
        nodes_[index].count = 0;
        return index;
    }

    bool SpatialIndex::hit_primitive(int prim, const Vec3 &o, const Vec3 &d, double t_min, double t_max, double &t) const
    {
        return intersect_surface(scene_->surfaces()[prim], o, d, t_min, t_max, t);
    }

    std::optional<Hit> SpatialIndex::intersect(const Vec3 &origin, const Vec3 &direction, double t_max, double t_min) const
    {
        const double len = norm(direction);
        if (!(len > 0.0))
            return std::nullopt;
        const Vec3 d = direction / len;
        const Vec3 inv{1.0 / d.x, 1.0 / d.y, 1.0 / d.z};

        double best_t = t_max;
        int best_prim = -1;

        if (!nodes_.empty())
        {
            std::array<int, 64> stack;
            int top = 0;
            stack[top++] = 0;
            while (top > 0)
            {
                const Node &node = nodes_[stack[--top]];
                double t_enter;
                if (!node.box.hit(origin, inv, best_t, t_enter))
                    continue;
                if (node.count > 0)
                {
                    for (int i = node.first; i < node.first + node.count; ++i)
                    {
                        double t;
                        if (hit_primitive(prims_[i], origin, d, t_min, best_t, t))
                        {
                            best_t = t;
                            best_prim = prims_[i];
                        }
                    }
                }
                else
                {
                    stack[top++] = node.right;
                    stack[top++] = node.first;
                }
            }
        }

        if (ground_prim_ >= 0)
        {
            double t;
            if (hit_primitive(ground_prim_, origin, d, t_min, best_t, t))
            {
                best_t = t;
                best_prim = ground_prim_;
            }
        }

        if (best_prim < 0)
            return std::nullopt;

        const Surface &s = scene_->surfaces()[best_prim];
        Hit h;
        h.point = origin + d * best_t;
        h.surface = s.id;
        h.kind = s.kind;
        h.surface_index = best_prim;
        h.normal = dot(s.normal, d) > 0.0 ? -s.normal : s.normal;
        h.distance = best_t;
        return h;
    }

    bool SpatialIndex::occluded(const Vec3 &a, const Vec3 &b, double slack) const
    {
        Vec3 d = b - a;
        double len = norm(d);
        if (len <= 2.0 * slack)
            return false;
        return intersect(a, d, len - slack, slack).has_value();
    }
}
