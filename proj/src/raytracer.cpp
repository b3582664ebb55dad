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

#include "ristwin/raytracer.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <unordered_set>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ristwin
{
    namespace
    {
        constexpr int kMaxDepth = 8;
        constexpr double kFrontEps = 1e-9;
        constexpr double kFar = 1e7;

        struct CVec3
        {
            cplx x, y, z;
        };

        cplx dot(const CVec3 &a, const Vec3 &b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
        CVec3 scale(const Vec3 &v, cplx s) { return {v.x * s, v.y * s, v.z * s}; }
        CVec3 add(const CVec3 &a, const CVec3 &b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }

        Vec3 vertical_polarization(const Vec3 &d) { return orthogonal_unit(d, {0, 0, 1}); }

        Vec3 plane_anchor(const Surface &s)
        {
            switch (s.kind)
            {
            case SurfaceKind::Ground:
                return {0, 0, 0};
            case SurfaceKind::Roof:
                return {0, 0, s.height};
            default:
                return s.origin;
            }
        }

        double front_distance(const Surface &s, const Vec3 &p) { return dot(p - plane_anchor(s), s.normal); }

        // ------------------------------------------------------------ receivers

        // Uniform grid over the receiver points for capture-sphere queries.
        class ReceiverGrid
        {
        public:
            explicit ReceiverGrid(std::span<const Vec3> pts) : pts_(pts)
            {
                for (const auto &p : pts)
                    bounds_.expand(p);
                if (pts.empty())
                    return;
                Vec3 ext = bounds_.hi - bounds_.lo;
                cell_ = 2.0;
                for (;;)
                {
                    n_[0] = static_cast<int>(ext.x / cell_) + 1;
                    n_[1] = static_cast<int>(ext.y / cell_) + 1;
                    n_[2] = static_cast<int>(ext.z / cell_) + 1;
                    if (static_cast<double>(n_[0]) * n_[1] * n_[2] <= 4e6)
                        break;
                    cell_ *= 1.5;
                }
                const std::size_t cells = static_cast<std::size_t>(n_[0]) * n_[1] * n_[2];
                start_.assign(cells + 1, 0);
                std::vector<std::size_t> cell_of(pts.size());
                for (std::size_t i = 0; i < pts.size(); ++i)
                {
                    cell_of[i] = flat(coord(pts[i].x, 0), coord(pts[i].y, 1), coord(pts[i].z, 2));
                    ++start_[cell_of[i] + 1];
                }
                for (std::size_t c = 0; c < cells; ++c)
                    start_[c + 1] += start_[c];
                items_.resize(pts.size());
                std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
                for (std::size_t i = 0; i < pts.size(); ++i)
                    items_[fill[cell_of[i]]++] = static_cast<std::uint32_t>(i);
            }

            bool empty() const { return pts_.empty(); }
            const Aabb &bounds() const { return bounds_; }
            double cell() const { return cell_; }

            template <typename F>
            void for_each_in_box(const Vec3 &lo, const Vec3 &hi, F &&f) const
            {
                int a0 = coord(lo.x, 0), a1 = coord(hi.x, 0);
                int b0 = coord(lo.y, 1), b1 = coord(hi.y, 1);
                int c0 = coord(lo.z, 2), c1 = coord(hi.z, 2);
                for (int a = a0; a <= a1; ++a)
                    for (int b = b0; b <= b1; ++b)
                        for (int c = c0; c <= c1; ++c)
                        {
                            std::size_t cell = flat(a, b, c);
                            for (std::size_t k = start_[cell]; k < start_[cell + 1]; ++k)
                                f(items_[k]);
                        }
            }

        private:
            int coord(double v, int axis) const
            {
                int c = static_cast<int>(std::floor((v - bounds_.lo[axis]) / cell_));
                return std::clamp(c, 0, n_[axis] - 1);
            }
            std::size_t flat(int a, int b, int c) const
            {
                return (static_cast<std::size_t>(a) * n_[1] + b) * n_[2] + c;
            }

            std::span<const Vec3> pts_;
            Aabb bounds_;
            double cell_ = 1.0;
            std::array<int, 3> n_{1, 1, 1};
            std::vector<std::size_t> start_;
            std::vector<std::uint32_t> items_;
        };

        // Clip the parameter range [t0, t1] of a ray to a box; false when empty.
        bool clip_to_box(const Vec3 &o, const Vec3 &d, const Vec3 &lo, const Vec3 &hi, double &t0, double &t1)
        {
            for (int a = 0; a < 3; ++a)
            {
                if (std::abs(d[a]) < 1e-300)
                {
                    if (o[a] < lo[a] || o[a] > hi[a])
                        return false;
                    continue;
                }
                double ta = (lo[a] - o[a]) / d[a], tb = (hi[a] - o[a]) / d[a];
                if (ta > tb)
                    std::swap(ta, tb);
                t0 = std::max(t0, ta);
                t1 = std::min(t1, tb);
                if (t0 > t1)
                    return false;
            }
            return true;
        }

        // --------------------------------------------------------- candidates

        struct ChainKey
        {
            std::uint32_t receiver = 0;
            std::uint32_t depth = 0;
            std::array<std::int32_t, kMaxDepth> chain{};

            bool operator==(const ChainKey &o) const
            {
                return receiver == o.receiver && depth == o.depth && chain == o.chain;
            }
            bool operator<(const ChainKey &o) const
            {
                if (receiver != o.receiver)
                    return receiver < o.receiver;
                if (depth != o.depth)
                    return depth < o.depth;
                return chain < o.chain;
            }
        };

        struct ChainKeyHash
        {
            std::size_t operator()(const ChainKey &k) const
            {
                std::uint64_t h = 1469598103934665603ull ^ k.receiver;
                h = (h ^ k.depth) * 1099511628211ull;
                for (std::uint32_t i = 0; i < k.depth; ++i)
                    h = (h ^ static_cast<std::uint32_t>(k.chain[i])) * 1099511628211ull;
                return static_cast<std::size_t>(h);
            }
        };

        struct PatchAccum
        {
            std::int64_t rays = 0;
            std::int64_t first_ray = 0;
            Vec3 point;
        };

        using Patch = IlluminatedPatch;

        struct Worker
        {
            std::unordered_set<ChainKey, ChainKeyHash> chains;
            std::unordered_map<std::int64_t, PatchAccum> patches;
            std::vector<std::uint32_t> stamp;
            std::uint32_t stamp_id = 0;
        };

        std::int64_t patch_key(int surface_index, int patch) { return (static_cast<std::int64_t>(surface_index) << 32) | patch; }

        int patch_of(const Surface &s, const Vec3 &p, double size)
        {
            const int nu = std::max(1, static_cast<int>(std::ceil(s.u_length / size)));
            const int nv = std::max(1, static_cast<int>(std::ceil(s.v_length / size)));
            int iu = std::clamp(static_cast<int>(std::floor(dot(p - s.origin, s.u_axis) / size)), 0, nu - 1);
            int iv = std::clamp(static_cast<int>(std::floor(p.z / size)), 0, nv - 1);
            return iu * nv + iv;
        }

        // ------------------------------------------------------------ shooting

        struct Shooter
        {
            const SpatialIndex &index;
            const Vec3 tx;
            const ReceiverGrid &grid;
            std::span<const Vec3> receivers;
            const TraceConfig &config;
            double capture_slope; // capture radius per metre of unfolded length

            void capture(const Vec3 &o, const Vec3 &d, double seg_len, double unfolded, const ChainKey &key, Worker &w) const
            {
                // a receiver p is only captured at t <= |p - o|, so nothing beyond
                // the farthest corner of the receiver box matters
                const Aabb &b = grid.bounds();
                const Vec3 far{std::max(std::abs(b.lo.x - o.x), std::abs(b.hi.x - o.x)),
                               std::max(std::abs(b.lo.y - o.y), std::abs(b.hi.y - o.y)),
                               std::max(std::abs(b.lo.z - o.z), std::abs(b.hi.z - o.z))};
                const double reach = std::min(seg_len, norm(far));
                const double r_max = capture_slope * (unfolded + reach);
                Vec3 pad{r_max, r_max, r_max};
                double t0 = 0.0, t1 = reach;
                if (!clip_to_box(o, d, grid.bounds().lo - pad, grid.bounds().hi + pad, t0, t1))
                    return;
                if (++w.stamp_id == 0)
                {
                    std::fill(w.stamp.begin(), w.stamp.end(), 0u);
                    w.stamp_id = 1;
                }
                const double step = grid.cell();
                for (double t = t0; t <= t1; t += step)
                {
                    const double te = std::min(t + step, t1);
                    const Vec3 mid = o + d * (0.5 * (t + te));
                    const double ext = capture_slope * (unfolded + te) + 0.5 * (te - t);
                    const Vec3 e{ext, ext, ext};
                    grid.for_each_in_box(mid - e, mid + e, [&](std::uint32_t r)
                                         {
                                             if (w.stamp[r] == w.stamp_id)
                                                 return;
                                             w.stamp[r] = w.stamp_id;
                                             const Vec3 &p = receivers[r];
                                             double tq = std::clamp(dot(p - o, d), 0.0, seg_len);
                                             double dist = norm(p - (o + d * tq));
                                             if (dist <= capture_slope * (unfolded + tq))
                                             {
                                                 ChainKey k = key;
                                                 k.receiver = r;
                                                 w.chains.insert(k);
                                             } });
                    if (te >= t1)
                        break;
                }
            }

            void shoot(std::int64_t ray, Worker &w) const
            {
                Vec3 o = tx;
                Vec3 d = fibonacci_direction(ray, config.ray_count);
                double unfolded = 0.0;
                ChainKey key;
                const auto &surfaces = index.scene().surfaces();
                for (int bounce = 0;; ++bounce)
                {
                    auto hit = index.intersect(o, d);
                    const double seg_len = hit ? hit->distance : kFar;
                    if (bounce > 0 && !grid.empty())
                        capture(o, d, seg_len, unfolded, key, w);
                    if (!hit)
                        break;
                    if (bounce == 0 && config.enable_scatter && hit->kind == SurfaceKind::Wall)
                    {
                        const Surface &s = surfaces[hit->surface_index];
                        auto &acc = w.patches[patch_key(hit->surface_index, patch_of(s, hit->point, config.scatter_patch_size))];
                        if (acc.rays == 0 || ray < acc.first_ray)
                        {
                            acc.first_ray = ray;
                            acc.point = hit->point;
                        }
                        ++acc.rays;
                    }
                    if (!config.enable_specular || bounce >= config.max_bounces)
                        break;
                    key.chain[key.depth++] = hit->surface_index;
                    unfolded += hit->distance;
                    o = hit->point;
                    d = reflect(d, hit->normal);
                }
            }
        };

        int worker_count(const TraceConfig &config, bool parallel)
        {
#ifdef _OPENMP
            if (parallel)
                return config.threads > 0 ? config.threads : omp_get_max_threads();
#endif
            (void)config;
            (void)parallel;
            return 1;
        }

        int worker_id()
        {
#ifdef _OPENMP
            return omp_get_thread_num();
#else
            return 0;
#endif
        }

        struct ShootResult
        {
            std::vector<ChainKey> chains; // sorted, unique
            std::vector<Patch> patches;   // sorted by (surface, patch)
        };

        ShootResult shoot_all(const SpatialIndex &index, const Vec3 &tx, std::span<const Vec3> receivers,
                              const TraceConfig &config, bool parallel)
        {
            ReceiverGrid grid(receivers);
            Shooter shooter{index, tx, grid, receivers, config,
                            config.capture_factor * std::sqrt(4.0 * kPi / static_cast<double>(config.ray_count))};
            const int nw = worker_count(config, parallel);
            std::vector<Worker> workers(nw);
            for (auto &w : workers)
                w.stamp.assign(receivers.size(), 0u);

            const std::int64_t n = config.ray_count;
            const bool needs_rays = config.max_bounces >= 1 && (config.enable_specular || config.enable_scatter);
            if (needs_rays)
            {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 4096) num_threads(nw) if (parallel)
#endif
                for (std::int64_t i = 0; i < n; ++i)
                    shooter.shoot(i, workers[worker_id()]);
            }

            ShootResult out;
            std::unordered_set<ChainKey, ChainKeyHash> merged;
            std::map<std::int64_t, PatchAccum> patches;
            for (auto &w : workers)
            {
                merged.insert(w.chains.begin(), w.chains.end());
                for (const auto &[k, acc] : w.patches)
                {
                    auto [it, fresh] = patches.try_emplace(k, acc);
                    if (!fresh)
                    {
                        it->second.rays += acc.rays;
                        if (acc.first_ray < it->second.first_ray)
                        {
                            it->second.first_ray = acc.first_ray;
                            it->second.point = acc.point;
                        }
                    }
                }
            }
            out.chains.assign(merged.begin(), merged.end());
            std::sort(out.chains.begin(), out.chains.end());
            for (const auto &[k, acc] : patches)
                out.patches.push_back({static_cast<int>(k >> 32), static_cast<int>(k & 0xffffffff), acc.rays, acc.point});
            return out;
        }

        // ------------------------------------------------------- refinement

        std::optional<PropagationPath> refine_specular(const SpatialIndex &index, const Vec3 &tx, const Vec3 &rx,
                                                       const ChainKey &key, double frequency_hz)
        {
            const auto &surfaces = index.scene().surfaces();
            const int k = static_cast<int>(key.depth);
            std::array<Vec3, kMaxDepth + 1> images;
            images[0] = tx;
            for (int j = 1; j <= k; ++j)
            {
                const Surface &s = surfaces[key.chain[j - 1]];
                images[j] = mirror_point(images[j - 1], plane_anchor(s), s.normal);
            }
            std::array<Vec3, kMaxDepth + 2> pts;
            pts[0] = tx;
            pts[k + 1] = rx;
            Vec3 target = rx;
            for (int j = k; j >= 1; --j)
            {
                const Surface &s = surfaces[key.chain[j - 1]];
                const Vec3 v = images[j] - target;
                const double denom = dot(v, s.normal);
                if (std::abs(denom) < 1e-15)
                    return std::nullopt;
                const double t = dot(plane_anchor(s) - target, s.normal) / denom;
                if (!(t > 0.0 && t < 1.0))
                    return std::nullopt;
                Vec3 p = target + v * t;
                if (s.kind == SurfaceKind::Ground)
                    p.z = 0.0;
                else if (s.kind == SurfaceKind::Roof)
                    p.z = s.height;
                if (!surface_contains(s, p, 1e-7))
                    return std::nullopt;
                pts[j] = p;
                target = p;
            }
            for (int j = 1; j <= k; ++j)
            {
                const Surface &s = surfaces[key.chain[j - 1]];
                if (front_distance(s, pts[j - 1]) <= kFrontEps || front_distance(s, pts[j + 1]) <= kFrontEps)
                    return std::nullopt;
            }
            for (int j = 0; j <= k; ++j)
                if (index.occluded(pts[j], pts[j + 1]))
                    return std::nullopt;

            PropagationPath path;
            path.kind = k == 0 ? PathKind::LoS : PathKind::Specular;
            double length = 0.0;
            for (int j = 0; j <= k; ++j)
                length += distance(pts[j], pts[j + 1]);
            path.total_length = length;
            path.delay = length / kSpeedOfLight;
            path.departure = normalized(pts[1] - pts[0]);
            path.arrival = normalized(pts[k + 1] - pts[k]);
            path.tx_polarization = vertical_polarization(path.departure);
            path.rx_polarization = vertical_polarization(path.arrival);
            for (int j = 1; j <= k; ++j)
            {
                const Surface &s = surfaces[key.chain[j - 1]];
                const Vec3 d_in = normalized(pts[j] - pts[j - 1]);
                const Vec3 d_out = normalized(pts[j + 1] - pts[j]);
                Interaction it;
                it.kind = InteractionKind::Specular;
                it.point = pts[j];
                it.surface = s.id;
                it.cos_incidence = std::min(1.0, std::abs(dot(d_in, s.normal)));
                Vec3 te = cross(d_in, s.normal);
                it.te = norm(te) > 1e-12 ? normalized(te) : orthogonal_unit(d_in, {0, 0, 1});
                it.tm_in = cross(it.te, d_in);
                it.tm_out = cross(it.te, d_out);
                path.interactions.push_back(it);
            }
            path.amplitude = path_amplitude(path, index.scene(), frequency_hz);
            return path;
        }

        std::mutex lobe_mutex;

        double scatter_pattern(const TraceConfig &config, const Vec3 &d_in, const Vec3 &normal, const Vec3 &d_out)
        {
            const double cos_i = std::min(1.0, std::abs(dot(d_in, normal)));
            if (config.scatter_model == ScatterModel::Lambertian)
                return std::max(0.0, dot(d_out, normal)) / kPi;
            const Vec3 spec = reflect(d_in, normal);
            const double base = 0.5 * (1.0 + dot(spec, d_out));
            return std::pow(std::max(0.0, base), config.lobe_exponent) / directive_lobe_norm(cos_i, config.lobe_exponent);
        }

        // Scatter path through the single patch `pt` to `rx`, or nullopt when
        // blocked or behind the wall. scatter_weight holds this patch alone.
        std::optional<PropagationPath> patch_path(const SpatialIndex &index, const Vec3 &tx, const Vec3 &rx,
                                                  const Patch &pt, const TraceConfig &config, double ray_solid_angle)
        {
            const Surface &s = index.scene().surfaces()[pt.surface_index];
            if (front_distance(s, rx) <= kFrontEps || front_distance(s, tx) <= kFrontEps)
                return std::nullopt;
            if (index.occluded(pt.point, rx))
                return std::nullopt;
            const double d1 = distance(tx, pt.point), d2 = distance(pt.point, rx);
            if (d1 <= 0.0 || d2 <= 0.0)
                return std::nullopt;
            const Vec3 d_in = (pt.point - tx) / d1;
            const Vec3 d_out = (rx - pt.point) / d2;

            PropagationPath path;
            path.kind = PathKind::Scatter;
            path.total_length = d1 + d2;
            path.delay = path.total_length / kSpeedOfLight;
            path.departure = d_in;
            path.arrival = d_out;
            path.tx_polarization = vertical_polarization(d_in);
            path.rx_polarization = vertical_polarization(d_out);
            Interaction it;
            it.kind = InteractionKind::Scatter;
            it.point = pt.point;
            it.surface = s.id;
            it.patch = pt.patch;
            it.cos_incidence = std::min(1.0, std::abs(dot(d_in, s.normal)));
            const Vec3 te = cross(d_in, s.normal);
            const double e_te = norm(te) > 1e-12 ? dot(path.tx_polarization, normalized(te)) : 1.0;
            it.te_fraction = e_te * e_te;
            it.scatter_weight = static_cast<double>(pt.rays) * ray_solid_angle *
                                scatter_pattern(config, d_in, s.normal, d_out) / (d2 * d2);
            path.interactions.push_back(it);
            return path;
        }

        bool path_less(const PropagationPath &a, const PropagationPath &b)
        {
            if (a.kind != b.kind)
                return a.kind < b.kind;
            if (a.interactions.size() != b.interactions.size())
                return a.interactions.size() < b.interactions.size();
            for (std::size_t i = 0; i < a.interactions.size(); ++i)
            {
                if (a.interactions[i].surface != b.interactions[i].surface)
                    return a.interactions[i].surface < b.interactions[i].surface;
                if (a.interactions[i].patch != b.interactions[i].patch)
                    return a.interactions[i].patch < b.interactions[i].patch;
            }
            return false;
        }

        PathSet trace_impl(const SpatialIndex &index, const Vec3 &tx, std::span<const Vec3> receivers,
                           double frequency_hz, const TraceConfig &config, bool parallel)
        {
            config.validate();
            const ShootResult shot = shoot_all(index, tx, receivers, config, parallel);
            const double ray_solid_angle = 4.0 * kPi / static_cast<double>(config.ray_count);
            const int nw = worker_count(config, parallel);
            const auto nrx = static_cast<std::int64_t>(receivers.size());

            PathSet out;
            out.per_receiver.resize(receivers.size());

            // refine specular candidates
            std::vector<std::optional<PropagationPath>> refined(shot.chains.size());
            const auto nchains = static_cast<std::int64_t>(shot.chains.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 64) num_threads(nw) if (parallel)
#endif
            for (std::int64_t c = 0; c < nchains; ++c)
                refined[c] = refine_specular(index, tx, receivers[shot.chains[c].receiver], shot.chains[c], frequency_hz);

            // patches grouped per wall
            std::vector<std::size_t> wall_start;
            for (std::size_t p = 0; p < shot.patches.size(); ++p)
                if (p == 0 || shot.patches[p].surface_index != shot.patches[p - 1].surface_index)
                    wall_start.push_back(p);
            wall_start.push_back(shot.patches.size());

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16) num_threads(nw) if (parallel)
#endif
            for (std::int64_t r = 0; r < nrx; ++r)
            {
                auto &list = out.per_receiver[r];
                const Vec3 &rx = receivers[r];
                if (config.enable_los && distance(tx, rx) > 0.0 && !index.occluded(tx, rx))
                {
                    ChainKey los;
                    if (auto p = refine_specular(index, tx, rx, los, frequency_hz))
                        list.push_back(std::move(*p));
                }
                // scatter: one aggregated path per wall
                for (std::size_t w = 0; w + 1 < wall_start.size(); ++w)
                {
                    std::optional<PropagationPath> best;
                    double total = 0.0, cos_acc = 0.0, te_acc = 0.0, best_w = -1.0;
                    for (std::size_t p = wall_start[w]; p < wall_start[w + 1]; ++p)
                    {
                        auto path = patch_path(index, tx, rx, shot.patches[p], config, ray_solid_angle);
                        if (!path)
                            continue;
                        const Interaction &it = path->interactions.front();
                        total += it.scatter_weight;
                        cos_acc += it.scatter_weight * it.cos_incidence;
                        te_acc += it.scatter_weight * it.te_fraction;
                        if (it.scatter_weight > best_w)
                        {
                            best_w = it.scatter_weight;
                            best = std::move(path);
                        }
                    }
                    if (!best || !(total > 0.0))
                        continue;
                    Interaction &it = best->interactions.front();
                    it.scatter_weight = total;
                    it.cos_incidence = cos_acc / total;
                    it.te_fraction = te_acc / total;
                    best->amplitude = path_amplitude(*best, index.scene(), frequency_hz);
                    list.push_back(std::move(*best));
                }
            }

            for (std::size_t c = 0; c < shot.chains.size(); ++c)
                if (refined[c])
                    out.per_receiver[shot.chains[c].receiver].push_back(std::move(*refined[c]));

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 64) num_threads(nw) if (parallel)
#endif
            for (std::int64_t r = 0; r < nrx; ++r)
                std::stable_sort(out.per_receiver[r].begin(), out.per_receiver[r].end(), path_less);
            return out;
        }
    }

    void TraceConfig::validate() const
    {
        if (ray_count < 1)
            throw ValidationError("trace: ray_count must be >= 1");
        if (max_bounces < 0 || max_bounces > kMaxDepth)
            throw ValidationError("trace: max_bounces must lie in [0, 8]");
        if (!(capture_factor > 0.0))
            throw ValidationError("trace: capture_factor must be > 0");
        if (!(scatter_patch_size > 0.0))
            throw ValidationError("trace: scatter_patch_size must be > 0");
    }

    std::size_t PathSet::path_count() const
    {
        std::size_t n = 0;
        for (const auto &l : per_receiver)
            n += l.size();
        return n;
    }

    double directive_lobe_norm(double cos_incidence, double alpha)
    {
        // tabulated per exponent on a 0.5 degree incidence grid
        static std::map<double, std::vector<double>> tables;
        const std::vector<double> *table = nullptr;
        {
            std::lock_guard<std::mutex> lock(lobe_mutex);
            auto it = tables.find(alpha);
            if (it == tables.end())
            {
                std::vector<double> t(181);
                constexpr int nt = 256, np = 512;
                for (int k = 0; k <= 180; ++k)
                {
                    const double ti = deg2rad(0.5 * k);
                    const double si = std::sin(ti), ci = std::cos(ti);
                    double sum = 0.0;
                    for (int a = 0; a < nt; ++a)
                    {
                        const double th = (a + 0.5) * (0.5 * kPi / nt);
                        const double st = std::sin(th), ct = std::cos(th);
                        for (int b = 0; b < np; ++b)
                        {
                            const double ph = (b + 0.5) * (2.0 * kPi / np);
                            const double c = si * st * std::cos(ph) + ci * ct;
                            sum += std::pow(0.5 * (1.0 + c), alpha) * st;
                        }
                    }
                    t[k] = sum * (0.5 * kPi / nt) * (2.0 * kPi / np);
                }
                it = tables.emplace(alpha, std::move(t)).first;
            }
            table = &it->second;
        }
        const double deg = rad2deg(std::acos(std::clamp(cos_incidence, 0.0, 1.0)));
        const double x = std::clamp(deg / 0.5, 0.0, 180.0);
        const int k = std::min(179, static_cast<int>(x));
        const double f = x - k;
        return (*table)[k] * (1.0 - f) + (*table)[k + 1] * f;
    }

    cplx path_amplitude(const PropagationPath &path, const Scene &scene, double frequency_hz)
    {
        const double lambda = wavelength(frequency_hz);
        const double free_space = lambda / (4.0 * kPi * path.total_length);
        switch (path.kind)
        {
        case PathKind::LoS:
            return free_space * dot(path.rx_polarization, path.tx_polarization);
        case PathKind::Specular:
        {
            CVec3 e = scale(path.tx_polarization, 1.0);
            for (const auto &it : path.interactions)
            {
                const auto &mat = scene.material(it.surface);
                const double theta = std::acos(it.cos_incidence);
                const cplx g_te = fresnel_reflection(mat, theta, frequency_hz, Polarization::TE);
                const cplx g_tm = fresnel_reflection(mat, theta, frequency_hz, Polarization::TM);
                const double keep = std::sqrt(std::max(0.0, 1.0 - mat.scattering_coefficient * mat.scattering_coefficient));
                e = add(scale(it.te, keep * g_te * dot(e, it.te)), scale(it.tm_out, keep * g_tm * dot(e, it.tm_in)));
            }
            return free_space * dot(e, path.rx_polarization);
        }
        case PathKind::Scatter:
        default:
        {
            const auto &it = path.interactions.front();
            const auto &mat = scene.material(it.surface);
            const double theta = std::acos(it.cos_incidence);
            const double g_te = std::norm(fresnel_reflection(mat, theta, frequency_hz, Polarization::TE));
            const double g_tm = std::norm(fresnel_reflection(mat, theta, frequency_hz, Polarization::TM));
            const double g2 = it.te_fraction * g_te + (1.0 - it.te_fraction) * g_tm;
            const double amp = lambda / (4.0 * kPi) * mat.scattering_coefficient * std::sqrt(g2 * it.scatter_weight);
            // a patch cannot out-shine free space at the same unfolded length
            return std::min(amp, free_space);
        }
        }
    }

    ChannelContribution path_to_channel_contribution(const PropagationPath &path, double frequency_hz)
    {
        const double phase = -2.0 * kPi * frequency_hz * path.delay;
        return {path.amplitude * std::polar(1.0, phase), path.departure, path.arrival};
    }

    PathSet trace(const SpatialIndex &index, const Vec3 &tx, std::span<const Vec3> receivers,
                  double frequency_hz, const TraceConfig &config)
    {
        return trace_impl(index, tx, receivers, frequency_hz, config, true);
    }

    PathSet trace_serial(const SpatialIndex &index, const Vec3 &tx, std::span<const Vec3> receivers,
                         double frequency_hz, const TraceConfig &config)
    {
        return trace_impl(index, tx, receivers, frequency_hz, config, false);
    }

    std::vector<IlluminatedPatch> illuminate_walls(const SpatialIndex &index, const Vec3 &tx, const TraceConfig &config)
    {
        TraceConfig cfg = config;
        cfg.enable_specular = false;
        cfg.enable_scatter = true;
        cfg.max_bounces = std::max(1, cfg.max_bounces);
        cfg.validate();
        return shoot_all(index, tx, {}, cfg, true).patches;
    }

    std::vector<PropagationPath> scatter_paths_via(const SpatialIndex &index, const Vec3 &tx, const Vec3 &receiver,
                                                   const std::vector<IlluminatedPatch> &patches, double frequency_hz,
                                                   const TraceConfig &config)
    {
        const double ray_solid_angle = 4.0 * kPi / static_cast<double>(config.ray_count);
        std::vector<PropagationPath> out;
        for (const auto &pt : patches)
        {
            auto path = patch_path(index, tx, receiver, pt, config, ray_solid_angle);
            if (!path || index.occluded(tx, pt.point))
                continue;
            path->amplitude = path_amplitude(*path, index.scene(), frequency_hz);
            out.push_back(std::move(*path));
        }
        return out;
    }

    std::vector<PropagationPath> trace_scatter_points(const SpatialIndex &index, const Vec3 &tx, const Vec3 &receiver,
                                                      double frequency_hz, const TraceConfig &config)
    {
        return scatter_paths_via(index, tx, receiver, illuminate_walls(index, tx, config), frequency_hz, config);
    }
}
