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

#ifndef RISTWIN_CLUSTERING_HPP
#define RISTWIN_CLUSTERING_HPP

#include "ristwin/geometry.hpp"

#include <cstdint>
#include <vector>

namespace ristwin
{
    // BIRCH clustering feature [U, sum s_i, sum |s_i|^2].
    struct ClusterFeature
    {
        std::int64_t count = 0;
        Vec2 linear_sum;
        double square_sum = 0.0;

        static ClusterFeature of(const Vec2 &p) { return {1, p, dot(p, p)}; }

        ClusterFeature &operator+=(const ClusterFeature &o)
        {
            count += o.count;
            linear_sum = linear_sum + o.linear_sum;
            square_sum += o.square_sum;
            return *this;
        }
        friend ClusterFeature operator+(ClusterFeature a, const ClusterFeature &b) { return a += b; }

        Vec2 centroid() const { return linear_sum * (1.0 / static_cast<double>(count)); }
        // RMS distance of the members to the centroid.
        double radius() const;
        // RMS pairwise distance between members (0 for a single member).
        double diameter() const;
    };

    enum class ThresholdCriterion
    {
        Radius,
        Diameter
    };

    struct BirchConfig
    {
        double threshold = 15.0; // T [m]
        int branching = 50;      // B
        ThresholdCriterion criterion = ThresholdCriterion::Radius;
    };

    struct Cluster
    {
        int id = 0;
        ClusterFeature cf;
        std::vector<int> members; // indices into the input, ascending

        Vec2 centroid() const { return cf.centroid(); }
        double radius() const { return cf.radius(); }
        int size() const { return static_cast<int>(cf.count); }
    };

    // Single-pass CF-tree clustering. Points are inserted in (x, y) order, so
    // the result does not depend on the input permutation. Cluster ids follow
    // the leaf order of the tree.
    std::vector<Cluster> birch_cluster(const std::vector<Vec2> &points, const BirchConfig &config);

    // Descending size, ties by centroid (x, y).
    std::vector<Cluster> rank_clusters(std::vector<Cluster> clusters);
}

#endif
