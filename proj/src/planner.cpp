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

#include "ristwin/planner.hpp"

#include <algorithm>
#include <mutex>
#include <set>

namespace ristwin
{
    namespace
    {
        constexpr double kStandoff = 1e-3;
        // area of the reference city the 3e7 budget was sized for
        constexpr double kReferenceArea = 1340.0 * 1390.0;

        std::mutex illumination_mutex;

        bool sees(const SpatialIndex &index, const RisUnit &ris, const Vec3 &p)
        {
            if (dot(p - ris.center, ris.normal) <= 0.0)
                return false;
            return !index.occluded(ris.center + ris.normal * kStandoff, p);
        }

        // Sector of `site` pointing most directly at p (ties to the lowest id).
        int best_sector_of_site(const ChannelField &field, int site, const Vec3 &p)
        {
            int best = -1;
            double best_g = -1.0;
            for (int s = 0; s < static_cast<int>(field.sectors.size()); ++s)
            {
                const auto &sec = field.sectors[s];
                if (sec.ref.site != site)
                    continue;
                const Vec3 d = p - sec.frame.position;
                const double g = norm(d) > 0.0 ? sec.element_gain_linear(normalized(d)) : 0.0;
                if (g > best_g)
                {
                    best_g = g;
                    best = s;
                }
            }
            return best;
        }
    }

    void PlannerConfig::validate() const
    {
        if (!(birch.threshold > 0.0))
            throw ValidationError("planner: threshold T must be > 0");
        if (recluster && !(effective_recluster_threshold() < birch.threshold))
            throw ValidationError("planner: re-clustering threshold must be below T");
        if (!(min_improve_frac > 0.0 && min_improve_frac <= 1.0))
            throw ValidationError("planner: min-improve fraction must lie in (0, 1]");
        if (ris.phase_bits < 0 || ris.phase_bits > 8)
            throw ValidationError("planner: phase bits must lie in [0, 8]");
        candidate_trace.validate();
    }

    std::int64_t scaled_candidate_rays(const Scene &scene, std::int64_t floor_rays, bool full_budget)
    {
        constexpr double kFullBudgetRays = 3e7;
        if (full_budget)
            return static_cast<std::int64_t>(kFullBudgetRays);
        const Area a = scene.coverage_area();
        const double area = (a.max.x - a.min.x) * (a.max.y - a.min.y);
        const double scaled = kFullBudgetRays * std::min(1.0, area / kReferenceArea);
        return std::max<std::int64_t>(floor_rays, static_cast<std::int64_t>(std::llround(scaled)));
    }

    std::string to_string(ClusterStatus s)
    {
        switch (s)
        {
        case ClusterStatus::Effective:
            return "effective";
        case ClusterStatus::Ineffective:
            return "ineffective";
        case ClusterStatus::Reclustered:
            return "re-clustered";
        case ClusterStatus::Reassociated:
            return "re-associated";
        case ClusterStatus::Unrecovered:
        default:
            return "unrecovered";
        }
    }

    double RecoveryStats::fraction(int stage) const
    {
        return outage_ues > 0 ? static_cast<double>(recovered[stage]) / outage_ues : 0.0;
    }

    double RecoveryStats::total_fraction() const
    {
        return outage_ues > 0 ? static_cast<double>(total_recovered()) / outage_ues : 1.0;
    }

    // ------------------------------------------------------------ context

    PlannerContext::PlannerContext(const Scene &scene, const SystemPreset &preset, const CoverageRun &coverage,
                                   const PlannerConfig &config)
        : scene_(scene), index_(scene), coverage_(coverage), config_(config), frequency_(preset.frequency_hz())
    {
        config_.validate();
    }

    Vec3 PlannerContext::tile_point(int tile) const
    {
        const Vec2 c = coverage_.field.grid.center(tile);
        return {c.x, c.y, coverage_.field.grid.ue_height};
    }

    ClusterTarget PlannerContext::target_of(const std::vector<int> &member_tiles) const
    {
        const auto &grid = coverage_.field.grid;
        ClusterTarget t;
        if (member_tiles.empty())
            return t;
        Vec2 sum;
        for (int m : member_tiles)
            sum = sum + grid.center(m);
        t.centroid = sum * (1.0 / static_cast<double>(member_tiles.size()));
        t.tile = grid.tile_at(t.centroid);
        if (t.tile >= 0 && grid.is_outdoor(t.tile) && scene_.building_at(t.centroid) < 0)
        {
            t.point = {t.centroid.x, t.centroid.y, grid.ue_height};
            return t;
        }
        // centroid indoor or off-grid: snap to the nearest member
        int best = member_tiles.front();
        double best_d = 1e300;
        for (int m : member_tiles)
        {
            const double d = norm(grid.center(m) - t.centroid);
            if (d < best_d)
            {
                best_d = d;
                best = m;
            }
        }
        t.tile = best;
        t.point = tile_point(best);
        return t;
    }

    int PlannerContext::serving_sector(const ClusterTarget &target) const
    {
        if (target.tile < 0)
            return -1;
        const int s = coverage_.map.tiles[target.tile].sector;
        if (s >= 0)
            return s;
        int site = -1;
        double best = 1e300;
        for (int i = 0; i < static_cast<int>(scene_.bs_sites.size()); ++i)
        {
            const double d = distance(scene_.bs_sites[i].position, target.point);
            if (d < best)
            {
                best = d;
                site = i;
            }
        }
        return site < 0 ? -1 : best_sector_of_site(coverage_.field, site, target.point);
    }

    const std::vector<IlluminatedPatch> &PlannerContext::illumination(int site) const
    {
        std::lock_guard<std::mutex> lock(illumination_mutex);
        auto it = illumination_.find(site);
        if (it == illumination_.end())
            it = illumination_.emplace(site, illuminate_walls(index_, scene_.bs_sites[site].position, config_.candidate_trace)).first;
        return it->second;
    }

    void PlannerContext::prefetch_illumination(const std::vector<int> &sites) const
    {
        for (int s : sites)
            illumination(s);
    }

    int PlannerContext::best_beam_towards(int sector, const Vec3 &point) const
    {
        const auto &sec = coverage_.field.sectors[sector];
        const Vec3 d = point - sec.frame.position;
        const double dist = norm(d);
        const double lambda = wavelength(frequency_);
        std::vector<cplx> h(sec.elements());
        sec.accumulate(std::polar(lambda / (4.0 * kPi * dist), -2.0 * kPi * dist / lambda), d / dist, frequency_, h.data());
        int best = 0;
        double best_g = -1.0;
        for (int m = 0; m < sec.codebook.size(); ++m)
        {
            const double g = beam_gain(h.data(), sec.codebook.beams[m]);
            if (g > best_g)
            {
                best_g = g;
                best = m;
            }
        }
        return best;
    }

    double PlannerContext::ris_served_rsrp(const RisUnit &ris, int sector, int beam, int tile) const
    {
        const auto &field = coverage_.field;
        const auto &sec = field.sectors[sector];
        const auto &w = sec.codebook.beams[beam];
        std::vector<cplx> h(sec.elements());
        double sum = 0.0;
        int n = 0;
        for (int q = 0; q < TileGrid::kSamplesPerTile; ++q)
        {
            const int s = tile * TileGrid::kSamplesPerTile + q;
            if (field.grid.sample_indoor[s])
                continue;
            const cplx *h0 = field.channel(sector, s);
            std::copy(h0, h0 + sec.elements(), h.begin());
            add_cascade(ris, index_, sec, field.grid.sample(tile, q), h.data());
            sum += beam_gain(h.data(), w);
            ++n;
        }
        return n > 0 ? rsrp_dbm(sum / n, sec.tx_power_dbm) : kNoCoverage;
    }

    // --------------------------------------------------------- operations

    std::vector<CandidateSite> find_candidates(const PlannerContext &ctx, const ClusterTarget &target, int sector)
    {
        std::vector<CandidateSite> out;
        if (target.tile < 0 || sector < 0)
            return out;
        const auto &sec = ctx.coverage().field.sectors[sector];
        const Vec3 bs = sec.frame.position;
        const auto paths = scatter_paths_via(ctx.index(), bs, target.point, ctx.illumination(sec.ref.site),
                                             ctx.frequency_hz(), ctx.config().candidate_trace);
        for (const auto &p : paths)
        {
            const auto &it = p.interactions.front();
            CandidateSite c;
            c.point = it.point;
            c.wall = it.surface;
            c.patch = it.patch;
            c.sector = sector;
            c.distance_to_centroid = distance(it.point, target.point);
            c.los_bs_ok = !ctx.index().occluded(bs, it.point);
            out.push_back(c);
        }
        std::sort(out.begin(), out.end(), [](const CandidateSite &a, const CandidateSite &b)
                  {
                      if (a.distance_to_centroid != b.distance_to_centroid)
                          return a.distance_to_centroid < b.distance_to_centroid;
                      if (a.wall != b.wall)
                          return a.wall < b.wall;
                      return a.patch < b.patch; });
        return out;
    }

    DeployOutcome deploy_for_cluster(const PlannerContext &ctx, const std::vector<int> &member_tiles)
    {
        DeployOutcome out;
        const ClusterTarget target = ctx.target_of(member_tiles);
        const int sector = ctx.serving_sector(target);
        if (sector < 0)
        {
            out.reason = "no serving sector";
            return out;
        }
        const auto candidates = find_candidates(ctx, target, sector);
        out.candidates = static_cast<int>(candidates.size());
        const Vec3 bs = ctx.coverage().field.sectors[sector].frame.position;

        std::optional<RisUnit> chosen;
        for (const auto &c : candidates)
        {
            ++out.candidates_tried;
            if (!c.los_bs_ok)
                continue;
            try
            {
                RisUnit ris = place_on_wall(ctx.scene(), c.wall, c.point, ctx.frequency_hz(), ctx.config().ris);
                // the re-centred unit must still see both ends
                if (!cascade_visible(ris, ctx.index(), bs, target.point))
                    continue;
                configure_phases(ris, bs, target.point, ctx.config().ris.phase_bits);
                chosen = std::move(ris);
                break;
            }
            catch (const ValidationError &)
            {
                continue; // wall too small: next-nearest candidate
            }
        }
        if (!chosen)
        {
            out.reason = candidates.empty() ? "no candidate" : "no viable candidate";
            return out;
        }

        RisUnit &ris = *chosen;
        ris.sector = sector;
        ris.beam = ctx.best_beam_towards(sector, ris.center);

        const double pre_c = ctx.pre_rsrp(target.tile);
        const double post_c = ctx.ris_served_rsrp(ris, sector, ris.beam, target.tile);
        out.centroid_improved = post_c > pre_c;
        if (!out.centroid_improved)
        {
            out.reason = "centroid not improved";
            return out;
        }
        int improved = 0;
        out.member_rsrp.resize(member_tiles.size());
        for (std::size_t i = 0; i < member_tiles.size(); ++i)
        {
            out.member_rsrp[i] = ctx.ris_served_rsrp(ris, sector, ris.beam, member_tiles[i]);
            if (out.member_rsrp[i] > ctx.pre_rsrp(member_tiles[i]))
                ++improved;
        }
        out.improved_fraction = member_tiles.empty() ? 0.0 : static_cast<double>(improved) / member_tiles.size();
        out.effective = out.improved_fraction >= ctx.config().min_improve_frac - 1e-12;
        if (out.effective)
            out.ris = std::move(ris);
        else
            out.reason = "below improvement fraction";
        return out;
    }

    ReclusterResult recluster_residual(const PlannerContext &ctx, const std::vector<int> &residual_tiles, double threshold)
    {
        ReclusterResult r;
        if (residual_tiles.empty())
            return r;
        const auto &grid = ctx.coverage().field.grid;
        std::vector<Vec2> pts;
        for (int t : residual_tiles)
            pts.push_back(grid.center(t));
        BirchConfig bc = ctx.config().birch;
        bc.threshold = threshold;
        for (const auto &c : rank_clusters(birch_cluster(pts, bc)))
        {
            std::vector<int> tiles;
            for (int m : c.members)
                tiles.push_back(residual_tiles[m]);
            std::sort(tiles.begin(), tiles.end());
            r.groups.push_back(std::move(tiles));
        }
        r.outcomes.resize(r.groups.size());
        const int n = static_cast<int>(r.groups.size());
#pragma omp parallel for schedule(dynamic, 1) if (ctx.config().parallel)
        for (int i = 0; i < n; ++i)
            r.outcomes[i] = deploy_for_cluster(ctx, r.groups[i]);
        return r;
    }

    std::vector<Reassociation> reassociate(const PlannerContext &ctx, const std::vector<int> &residual_tiles,
                                           const std::vector<RisDeployment> &deployed)
    {
        const auto &scene = ctx.scene();
        const auto &field = ctx.coverage().field;
        std::vector<Reassociation> out(residual_tiles.size());
        // step 2 depends only on the unit: sites with LoS to each RIS centre
        std::vector<std::vector<int>> sites_seeing(deployed.size());
        for (std::size_t r = 0; r < deployed.size(); ++r)
            for (int s = 0; s < static_cast<int>(scene.bs_sites.size()); ++s)
                if (sees(ctx.index(), deployed[r].ris, scene.bs_sites[s].position))
                    sites_seeing[r].push_back(s);

        const int n = static_cast<int>(residual_tiles.size());
#pragma omp parallel for schedule(dynamic, 8) if (ctx.config().parallel)
        for (int i = 0; i < n; ++i)
        {
            Reassociation &a = out[i];
            a.tile = residual_tiles[i];
            const Vec3 ue = ctx.tile_point(a.tile);
            // steps 1-3: closest unit that sees the UE and is seen by some site
            double best = 1e300;
            for (std::size_t r = 0; r < deployed.size(); ++r)
            {
                if (sites_seeing[r].empty() || !sees(ctx.index(), deployed[r].ris, ue))
                    continue;
                const double d = distance(deployed[r].ris.center, ue);
                if (d < best)
                {
                    best = d;
                    a.deployment = static_cast<int>(r);
                }
            }
            if (a.deployment < 0)
                continue;
            const RisUnit &ris = deployed[a.deployment].ris;
            // step 4: nearest site to the chosen unit
            int site = -1;
            double site_d = 1e300;
            for (int s : sites_seeing[a.deployment])
            {
                const double d = distance(scene.bs_sites[s].position, ris.center);
                if (d < site_d)
                {
                    site_d = d;
                    site = s;
                }
            }
            if (field.sectors[ris.sector].ref.site == site)
            {
                a.sector = ris.sector;
                a.beam = ris.beam;
            }
            else
            {
                a.sector = best_sector_of_site(field, site, ris.center);
                a.beam = ctx.best_beam_towards(a.sector, ris.center);
            }
            a.rsrp = ctx.ris_served_rsrp(ris, a.sector, a.beam, a.tile);
        }
        return out;
    }

    // --------------------------------------------------------------- plan

    DeploymentPlan plan(const Scene &scene, const SystemPreset &preset, const CoverageRun &coverage,
                        const PlannerConfig &config)
    {
        PlannerContext ctx(scene, preset, coverage, config);
        const auto &grid = coverage.field.grid;
        DeploymentPlan result;
        result.post_map = coverage.map;

        const std::vector<int> outage = coverage.map.outage_tiles();
        result.stats.outage_ues = static_cast<int>(outage.size());
        if (outage.empty())
        {
            result.nothing_to_do = true;
            return result;
        }

        std::map<int, int> ue_of_tile;
        for (int t : outage)
        {
            ue_of_tile[t] = static_cast<int>(result.ues.size());
            UeOutcome u;
            u.tile = t;
            u.pre_rsrp = u.post_rsrp = coverage.map.tiles[t].rsrp_dbm;
            result.ues.push_back(u);
        }

        // cluster the outage UEs
        std::vector<Vec2> pts;
        for (int t : outage)
            pts.push_back(grid.center(t));
        const auto ranked = rank_clusters(birch_cluster(pts, config.birch));
        for (std::size_t i = 0; i < ranked.size(); ++i)
        {
            ClusterReport c;
            c.id = ranked[i].id;
            c.rank = static_cast<int>(i);
            c.centroid = ranked[i].centroid();
            c.radius = ranked[i].radius();
            for (int m : ranked[i].members)
                c.members.push_back(outage[m]);
            std::sort(c.members.begin(), c.members.end());
            c.targeted = config.top_n < 0 || static_cast<int>(i) < config.top_n;
            result.clusters.push_back(std::move(c));
        }
        std::vector<int> targets;
        for (int i = 0; i < static_cast<int>(result.clusters.size()); ++i)
            if (result.clusters[i].targeted)
                targets.push_back(i);

        {
            std::set<int> sites;
            for (int i : targets)
            {
                const int s = ctx.serving_sector(ctx.target_of(result.clusters[i].members));
                if (s >= 0)
                    sites.insert(coverage.field.sectors[s].ref.site);
            }
            ctx.prefetch_illumination({sites.begin(), sites.end()});
        }

        auto is_recovered = [&](int tile) { return !is_outage(result.ues[ue_of_tile.at(tile)].post_rsrp); };
        auto credit = [&](int stage)
        {
            for (auto &u : result.ues)
                if (u.stage == 0 && !is_outage(u.post_rsrp))
                {
                    u.stage = stage;
                    ++result.stats.recovered[stage - 1];
                }
        };
        auto adopt = [&](const std::vector<int> &members, const DeployOutcome &o, int stage, int cluster)
        {
            RisDeployment d;
            d.ris = *o.ris;
            d.ris.cluster = cluster;
            d.stage = stage;
            d.cluster = cluster;
            d.members = members;
            d.improved_fraction = o.improved_fraction;
            const int k = static_cast<int>(result.deployments.size());
            for (std::size_t i = 0; i < members.size(); ++i)
            {
                auto &u = result.ues[ue_of_tile.at(members[i])];
                if (o.member_rsrp[i] > u.post_rsrp)
                {
                    u.post_rsrp = o.member_rsrp[i];
                    u.ris = k;
                    u.sector = d.ris.sector;
                    u.beam = d.ris.beam;
                }
            }
            result.deployments.push_back(std::move(d));
            return k;
        };

        // stage 1: one attempt per targeted cluster, independent of the others
        std::vector<DeployOutcome> first(targets.size());
        const int nt = static_cast<int>(targets.size());
#pragma omp parallel for schedule(dynamic, 1) if (config.parallel)
        for (int i = 0; i < nt; ++i)
            first[i] = deploy_for_cluster(ctx, result.clusters[targets[i]].members);
        for (int i = 0; i < nt; ++i)
        {
            auto &c = result.clusters[targets[i]];
            c.candidates = first[i].candidates;
            c.improved_fraction = first[i].improved_fraction;
            if (first[i].effective)
            {
                c.ris = adopt(c.members, first[i], 1, targets[i]);
                c.status = ClusterStatus::Effective;
            }
            else
                c.status = ClusterStatus::Ineffective;
        }
        credit(1);

        // stage 2: regroup what is left of each targeted cluster
        if (config.recluster)
        {
            const double t_new = config.effective_recluster_threshold();
            for (int i : targets)
            {
                auto &c = result.clusters[i];
                std::vector<int> residual;
                for (int m : c.members)
                    if (!is_recovered(m))
                        residual.push_back(m);
                auto rc = recluster_residual(ctx, residual, t_new);
                bool any = false;
                for (std::size_t g = 0; g < rc.groups.size(); ++g)
                    if (rc.outcomes[g].effective)
                    {
                        adopt(rc.groups[g], rc.outcomes[g], 2, i);
                        any = true;
                    }
                if (any && c.status != ClusterStatus::Effective)
                    c.status = ClusterStatus::Reclustered;
            }
            credit(2);
        }

        // stage 3: re-associate every remaining outage UE with a deployed unit
        if (config.reassociate && !result.deployments.empty())
        {
            std::vector<int> residual;
            for (const auto &u : result.ues)
                if (u.stage == 0)
                    residual.push_back(u.tile);
            const auto assoc = reassociate(ctx, residual, result.deployments);
            for (const auto &a : assoc)
            {
                auto &u = result.ues[ue_of_tile.at(a.tile)];
                if (a.deployment >= 0 && a.rsrp > u.post_rsrp)
                {
                    u.post_rsrp = a.rsrp;
                    u.ris = a.deployment;
                    u.sector = a.sector;
                    u.beam = a.beam;
                }
            }
            credit(3);
        }

        for (auto &c : result.clusters)
        {
            if (c.status == ClusterStatus::Effective || c.status == ClusterStatus::Reclustered)
                continue;
            const bool any3 = std::any_of(c.members.begin(), c.members.end(),
                                          [&](int t) { return result.ues[ue_of_tile.at(t)].stage == 3; });
            if (any3)
                c.status = ClusterStatus::Reassociated;
            else if (!c.targeted)
                c.status = ClusterStatus::Unrecovered;
        }

        for (const auto &u : result.ues)
            if (u.ris >= 0)
            {
                auto &t = result.post_map.tiles[u.tile];
                t.rsrp_dbm = u.post_rsrp;
                t.sector = u.sector;
                t.beam = u.beam;
                t.outage = is_outage(u.post_rsrp);
            }
        return result;
    }

    // --------------------------------------------------------------- json

    nlohmann::json plan_to_json(const DeploymentPlan &plan, const CoverageMap &pre)
    {
        using nlohmann::json;
        json doc;
        doc["ris"] = json::array();
        for (std::size_t i = 0; i < plan.deployments.size(); ++i)
        {
            const auto &d = plan.deployments[i];
            json r = ris_to_json(d.ris);
            r["id"] = i;
            r["stage"] = d.stage;
            r["improved_fraction"] = d.improved_fraction;
            r["member_count"] = d.members.size();
            doc["ris"].push_back(r);
        }
        doc["clusters"] = json::array();
        for (const auto &c : plan.clusters)
            doc["clusters"].push_back({{"id", c.id},
                                       {"rank", c.rank},
                                       {"U", c.members.size()},
                                       {"centroid", {c.centroid.x, c.centroid.y}},
                                       {"radius", c.radius},
                                       {"targeted", c.targeted},
                                       {"status", to_string(c.status)},
                                       {"ris", c.ris},
                                       {"improved_fraction", c.improved_fraction},
                                       {"candidates", c.candidates},
                                       {"members", c.members}});
        doc["pre_outage_fraction"] = pre.outage_fraction();
        doc["post_outage_fraction"] = plan.post_map.outage_fraction();
        return doc;
    }

    nlohmann::json recovery_to_json(const DeploymentPlan &plan)
    {
        using nlohmann::json;
        const auto &s = plan.stats;
        static const char *names[3] = {"initial", "re-clustering", "re-association"};
        json stages = json::array();
        for (int i = 0; i < 3; ++i)
            stages.push_back({{"stage", names[i]}, {"recovered", s.recovered[i]}, {"fraction", s.fraction(i)}});
        return {{"outage_ues", s.outage_ues},
                {"stages", stages},
                {"total_recovered", s.total_recovered()},
                {"total_fraction", s.total_fraction()},
                {"nothing_to_do", plan.nothing_to_do},
                {"ris_count", plan.deployments.size()}};
    }
}
