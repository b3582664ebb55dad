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

#ifndef RISTWIN_PLANNER_HPP
#define RISTWIN_PLANNER_HPP

#include "ristwin/clustering.hpp"
#include "ristwin/ris.hpp"

#include <array>
#include <map>
#include <optional>
#include <memory>
#include <string>

namespace ristwin
{
    struct PlannerConfig
    {
        BirchConfig birch;                // threshold T = 15 m by default
        double recluster_threshold = 0.0; // T_new; 0 means 2/3 of T
        int top_n = -1;                   // clusters receiving a RIS attempt; < 0 = all
        RisParams ris;
        double min_improve_frac = 0.6;
        TraceConfig candidate_trace;      // scatter-only launch budget
        bool recluster = true;
        bool reassociate = true;
        bool parallel = true;

        double effective_recluster_threshold() const
        {
            return recluster_threshold > 0.0 ? recluster_threshold : birch.threshold * 2.0 / 3.0;
        }
        void validate() const;
    };

    // Candidate-search launch budget: 3e7 rays for a city-sized area, scaled by
    // the scene area and never below `floor_rays`.
    std::int64_t scaled_candidate_rays(const Scene &scene, std::int64_t floor_rays, bool full_budget);

    struct CandidateSite
    {
        Vec3 point;
        SurfaceId wall;
        int sector = -1;
        double distance_to_centroid = 0.0; // 3-D
        bool los_bs_ok = false;
        std::int32_t patch = -1;
    };

    // Cluster target on the tile grid: the tile containing the centroid, or
    // the nearest member tile when that one is indoor or outside the grid.
    struct ClusterTarget
    {
        Vec2 centroid;
        int tile = -1;
        Vec3 point; // UE-height point the RIS is configured towards
    };

    enum class ClusterStatus
    {
        Effective,
        Ineffective,
        Reclustered,
        Reassociated,
        Unrecovered
    };

    std::string to_string(ClusterStatus s);

    struct DeployOutcome
    {
        std::optional<RisUnit> ris;
        bool effective = false;
        double improved_fraction = 0.0;
        bool centroid_improved = false;
        int candidates = 0;
        int candidates_tried = 0;
        std::vector<double> member_rsrp; // RIS-served RSRP per member tile (only when evaluated)
        std::string reason;
    };

    struct RisDeployment
    {
        RisUnit ris;
        int stage = 1;              // 1 initial, 2 re-clustering
        int cluster = -1;           // index into DeploymentPlan::clusters
        std::vector<int> members;   // tiles of the (sub-)cluster it was configured for
        double improved_fraction = 0.0;
    };

    struct ClusterReport
    {
        int id = 0;
        int rank = 0;
        Vec2 centroid;
        double radius = 0.0;
        std::vector<int> members; // tile indices
        bool targeted = false;
        ClusterStatus status = ClusterStatus::Unrecovered;
        int ris = -1; // deployment index of the stage-1 unit
        double improved_fraction = 0.0;
        int candidates = 0;
    };

    struct UeOutcome
    {
        int tile = -1;
        double pre_rsrp = kNoCoverage;
        double post_rsrp = kNoCoverage;
        int stage = 0;   // 0 unrecovered, 1 initial, 2 re-clustering, 3 re-association
        int ris = -1;    // deployment providing post_rsrp
        int sector = -1; // global sector serving via the RIS
        int beam = -1;
    };

    struct RecoveryStats
    {
        int outage_ues = 0;
        std::array<int, 3> recovered{}; // per stage
        int total_recovered() const { return recovered[0] + recovered[1] + recovered[2]; }
        double fraction(int stage) const;
        double total_fraction() const;
    };

    struct DeploymentPlan
    {
        std::vector<RisDeployment> deployments;
        std::vector<ClusterReport> clusters;
        std::vector<UeOutcome> ues;
        RecoveryStats stats;
        CoverageMap post_map;
        bool nothing_to_do = false;
    };

    // Shared read-only state of a planning run. Wall illumination is traced
    // lazily per site and cached.
    class PlannerContext
    {
    public:
        PlannerContext(const Scene &scene, const SystemPreset &preset, const CoverageRun &coverage,
                       const PlannerConfig &config);

        const Scene &scene() const { return scene_; }
        const SpatialIndex &index() const { return index_; }
        const CoverageRun &coverage() const { return coverage_; }
        const PlannerConfig &config() const { return config_; }
        double frequency_hz() const { return frequency_; }

        ClusterTarget target_of(const std::vector<int> &member_tiles) const;
        // Pre-plan server of the target tile, else the best sector of the nearest site.
        int serving_sector(const ClusterTarget &target) const;
        const std::vector<IlluminatedPatch> &illumination(int site) const;
        void prefetch_illumination(const std::vector<int> &sites) const;

        // Best beam of `sector` toward a point over a free-space LoS channel.
        int best_beam_towards(int sector, const Vec3 &point) const;
        // RSRP of a tile when `sector` serves it with `beam` and the RIS cascade
        // (from that sector's site) is added to the pre-plan channel.
        double ris_served_rsrp(const RisUnit &ris, int sector, int beam, int tile) const;

        double pre_rsrp(int tile) const { return coverage_.map.tiles[tile].rsrp_dbm; }
        Vec3 tile_point(int tile) const;

    private:
        const Scene &scene_;
        SpatialIndex index_;
        const CoverageRun &coverage_;
        PlannerConfig config_;
        double frequency_;
        mutable std::map<int, std::vector<IlluminatedPatch>> illumination_;
    };

    std::vector<CandidateSite> find_candidates(const PlannerContext &ctx, const ClusterTarget &target, int sector);

    // Places, configures and evaluates a RIS for one cluster against the
    // pre-plan map; the unit is dropped unless it passes the centroid gate and
    // the improvement-fraction rule.
    DeployOutcome deploy_for_cluster(const PlannerContext &ctx, const std::vector<int> &member_tiles);

    // Clusters the residual tiles with the smaller threshold and runs
    // deploy_for_cluster on each resulting group (ranked order).
    struct ReclusterResult
    {
        std::vector<std::vector<int>> groups; // tile lists
        std::vector<DeployOutcome> outcomes;
    };
    ReclusterResult recluster_residual(const PlannerContext &ctx, const std::vector<int> &residual_tiles,
                                       double threshold);

    struct Reassociation
    {
        int tile = -1;
        int deployment = -1; // -1 when no RIS has LoS
        int sector = -1;
        int beam = -1;
        double rsrp = kNoCoverage;
    };

    // The four-step LoS rule: RIS units seeing the UE, sites seeing each unit,
    // the unit closest to the UE, then the site closest to that unit. Existing
    // phase configurations are kept.
    std::vector<Reassociation> reassociate(const PlannerContext &ctx, const std::vector<int> &residual_tiles,
                                           const std::vector<RisDeployment> &deployed);

    DeploymentPlan plan(const Scene &scene, const SystemPreset &preset, const CoverageRun &coverage,
                        const PlannerConfig &config);

    nlohmann::json plan_to_json(const DeploymentPlan &plan, const CoverageMap &pre);
    nlohmann::json recovery_to_json(const DeploymentPlan &plan);
}

#endif
