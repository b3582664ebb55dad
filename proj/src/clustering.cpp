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

#include "ristwin/clustering.hpp"
#include "ristwin/scene.hpp"

#include <algorithm>
#include <numeric>
#include <optional>

namespace ristwin
{
    double ClusterFeature::radius() const
    {
        if (count <= 0)
            return 0.0;
        const Vec2 c = centroid();
        return std::sqrt(std::max(0.0, square_sum / static_cast<double>(count) - dot(c, c)));
    }

    double ClusterFeature::diameter() const
    {
        if (count <= 1)
            return 0.0;
        const double n = static_cast<double>(count);
        return std::sqrt(std::max(0.0, 2.0 * (n * square_sum - dot(linear_sum, linear_sum)) / (n * (n - 1.0))));
    }

    namespace
    {
        struct Entry
        {
            ClusterFeature cf;
            int child = -1;           // inner entries
            std::vector<int> members; // leaf entries
        };

        struct Node
        {
            bool leaf = true;
            std::vector<Entry> entries;
        };

        double centroid_distance2(const ClusterFeature &a, const ClusterFeature &b)
        {
            const Vec2 d = a.centroid() - b.centroid();
            return dot(d, d);
        }

        class CfTree
        {
        public:
            explicit CfTree(const BirchConfig &c) : config_(c) { nodes_.push_back({}); }

            void insert(const Vec2 &p, int index)
            {
                Entry e{ClusterFeature::of(p), -1, {index}};
                auto split = insert_into(root_, e);
                if (split)
                {
                    // grow a new root above the two halves
                    Node root;
                    root.leaf = false;
                    root.entries.push_back({summary(root_), root_, {}});
                    root.entries.push_back({summary(*split), *split, {}});
                    nodes_.push_back(std::move(root));
                    root_ = static_cast<int>(nodes_.size()) - 1;
                }
            }

            void collect(std::vector<Cluster> &out) const { collect(root_, out); }

        private:
            ClusterFeature summary(int node) const
            {
                ClusterFeature cf;
                for (const auto &e : nodes_[node].entries)
                    cf += e.cf;
                return cf;
            }

            bool absorbs(const ClusterFeature &merged) const
            {
                const double v = config_.criterion == ThresholdCriterion::Radius ? merged.radius() : merged.diameter();
                return v <= config_.threshold;
            }

            static int closest(const std::vector<Entry> &entries, const ClusterFeature &cf)
            {
                int best = -1;
                double best_d = 0.0;
                for (int i = 0; i < static_cast<int>(entries.size()); ++i)
                {
                    const double d = centroid_distance2(entries[i].cf, cf);
                    if (best < 0 || d < best_d)
                    {
                        best = i;
                        best_d = d;
                    }
                }
                return best;
            }

            // Returns the index of a new sibling node when `node` had to split.
            std::optional<int> insert_into(int node, Entry &e)
            {
                if (nodes_[node].leaf)
                {
                    auto &entries = nodes_[node].entries;
                    const int c = closest(entries, e.cf);
                    if (c >= 0 && absorbs(entries[c].cf + e.cf))
                    {
                        entries[c].cf += e.cf;
                        entries[c].members.insert(entries[c].members.end(), e.members.begin(), e.members.end());
                        return std::nullopt;
                    }
                    entries.push_back(std::move(e));
                }
                else
                {
                    const int c = closest(nodes_[node].entries, e.cf);
                    const ClusterFeature added = e.cf;
                    auto split = insert_into(nodes_[node].entries[c].child, e);
                    auto &entries = nodes_[node].entries;
                    if (split)
                    {
                        entries[c].cf = summary(entries[c].child);
                        entries.push_back({summary(*split), *split, {}});
                    }
                    else
                        entries[c].cf += added;
                }
                if (static_cast<int>(nodes_[node].entries.size()) <= config_.branching)
                    return std::nullopt;
                return split_node(node);
            }

            int split_node(int node)
            {
                std::vector<Entry> entries = std::move(nodes_[node].entries);
                // farthest pair of entries seeds the two halves
                int sa = 0, sb = 1;
                double far = -1.0;
                for (int i = 0; i < static_cast<int>(entries.size()); ++i)
                    for (int j = i + 1; j < static_cast<int>(entries.size()); ++j)
                    {
                        const double d = centroid_distance2(entries[i].cf, entries[j].cf);
                        if (d > far)
                        {
                            far = d;
                            sa = i;
                            sb = j;
                        }
                    }
                Node other;
                other.leaf = nodes_[node].leaf;
                nodes_[node].entries.clear();
                const ClusterFeature ca = entries[sa].cf, cb = entries[sb].cf;
                for (int i = 0; i < static_cast<int>(entries.size()); ++i)
                {
                    bool to_a = i == sa || (i != sb && centroid_distance2(entries[i].cf, ca) <= centroid_distance2(entries[i].cf, cb));
                    (to_a ? nodes_[node].entries : other.entries).push_back(std::move(entries[i]));
                }
                nodes_.push_back(std::move(other));
                return static_cast<int>(nodes_.size()) - 1;
            }

            void collect(int node, std::vector<Cluster> &out) const
            {
                for (const auto &e : nodes_[node].entries)
                {
                    if (nodes_[node].leaf)
                    {
                        Cluster c;
                        c.id = static_cast<int>(out.size());
                        c.cf = e.cf;
                        c.members = e.members;
                        std::sort(c.members.begin(), c.members.end());
                        out.push_back(std::move(c));
                    }
                    else
                        collect(e.child, out);
                }
            }

            BirchConfig config_;
            std::vector<Node> nodes_;
            int root_ = 0;
        };
    }

    std::vector<Cluster> birch_cluster(const std::vector<Vec2> &points, const BirchConfig &config)
    {
        if (!(config.threshold > 0.0))
            throw ValidationError("birch: threshold must be > 0");
        if (config.branching < 2)
            throw ValidationError("birch: branching factor must be >= 2");
        for (const auto &p : points)
            if (!std::isfinite(p.x) || !std::isfinite(p.y))
                throw ValidationError("birch: non-finite point");

        std::vector<int> order(points.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b)
                         { return points[a].x < points[b].x || (points[a].x == points[b].x && points[a].y < points[b].y); });
        CfTree tree(config);
        for (int i : order)
            tree.insert(points[i], i);
        std::vector<Cluster> out;
        if (!points.empty())
            tree.collect(out);
        return out;
    }

    std::vector<Cluster> rank_clusters(std::vector<Cluster> clusters)
    {
        std::stable_sort(clusters.begin(), clusters.end(), [](const Cluster &a, const Cluster &b)
                         {
                             if (a.cf.count != b.cf.count)
                                 return a.cf.count > b.cf.count;
                             const Vec2 ca = a.centroid(), cb = b.centroid();
                             return ca.x < cb.x || (ca.x == cb.x && ca.y < cb.y); });
        return clusters;
    }
}
