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

#ifndef RISTWIN_SPATIAL_INDEX_HPP
#define RISTWIN_SPATIAL_INDEX_HPP

#include "ristwin/scene.hpp"

#include <optional>
#include <vector>

namespace ristwin
{
    struct Hit
    {
        Vec3 point;
        SurfaceId surface;
        Vec3 normal; // unit, facing the incoming ray
        double distance = 0.0;
        SurfaceKind kind = SurfaceKind::Wall;
        int surface_index = -1; // position in Scene::surfaces()
    };

    // Bounding volume hierarchy over the wall and roof surfaces of a scene.
    // The ground plane (when enabled) is tested analytically. Immutable after
    // construction; concurrent queries are safe.
    class SpatialIndex
    {
    public:
        explicit SpatialIndex(const Scene &scene);

        // Nearest hit with distance > t_min along a non-zero direction.
        std::optional<Hit> intersect(const Vec3 &origin, const Vec3 &direction,
                                     double t_max = 1e300, double t_min = 1e-7) const;

        // True when something blocks the open segment (a, b), ignoring `slack`
        // metres at either end so that endpoints resting on a surface count as clear.
        bool occluded(const Vec3 &a, const Vec3 &b, double slack = 1e-5) const;

        const Scene &scene() const { return *scene_; }
        std::size_t node_count() const { return nodes_.size(); }

    private:
        struct Node
        {
            Aabb box;
            int first = 0; // leaf: first primitive; inner: left child index
            int count = 0; // 0 for inner nodes
            int right = 0;
        };

        int build(int begin, int end);
        bool hit_primitive(int prim, const Vec3 &o, const Vec3 &d, double t_min, double t_max, double &t) const;

        const Scene *scene_;
        std::vector<int> prims_; // indices into scene.surfaces()
        std::vector<Aabb> prim_boxes_;
        std::vector<Node> nodes_;
        int ground_prim_ = -1;
    };

    // Plane/footprint tests shared by the index and the path refinement code.
    // `t` receives the ray parameter of the plane crossing.
    bool intersect_surface(const Surface &s, const Vec3 &o, const Vec3 &d, double t_min, double t_max, double &t);
    // Point-in-bounds test for a point already on the surface plane.
    bool surface_contains(const Surface &s, const Vec3 &p, double tol = 1e-9);
}

#endif
