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

#ifndef RISTWIN_CALIBRATION_HPP
#define RISTWIN_CALIBRATION_HPP

#include "ristwin/radio.hpp"

#include <array>
#include <cstdint>
#include <string>

namespace ristwin
{
    struct Measurement
    {
        Vec2 position;
        double rsrp_dbm = 0.0;
        int cell_id = 0; // global sector id
    };

    struct MeasurementSet
    {
        std::vector<Measurement> samples;
        std::string provenance;
        int malformed_rows = 0; // unparsable CSV rows
        int dropped = 0;        // non-finite, unknown cell, outside the area or indoor
    };

    // `x,y,rsrp_dbm,cell_id` with a mandatory header; malformed rows are
    // skipped and counted. Throws ParseError on a missing or wrong header.
    MeasurementSet read_measurements_csv(const std::string &path);
    void write_measurements_csv(const MeasurementSet &set, const std::string &path);

    // Removes samples violating the scene (outside the area, indoor, unknown cell).
    void sanitize_measurements(MeasurementSet &set, const Scene &scene);

    struct CalibrationRegion
    {
        int ix = 0; // cell index on the fixed grid, floor(x / size)
        int iy = 0;
        Vec2 min;
        Vec2 max;
        std::vector<int> samples; // indices into the measurement set
        double mean_rsrp_dbm = 0.0; // dB-domain mean
        std::vector<int> linked_buildings; // ascending
        int sector = -1; // dominant sector

        int count() const { return static_cast<int>(samples.size()); }
        Vec2 center() const { return (min + max) * 0.5; }
    };

    struct RegionRules
    {
        double cell_size = 10.0;
        int min_samples = 20;
        double link_radius = 100.0;
    };

    // Regions ordered by (iy, ix).
    std::vector<CalibrationRegion> aggregate_regions(const MeasurementSet &set, const Scene &scene,
                                                     const RegionRules &rules = {});

    // Distance between a footprint and an axis-aligned box (0 when they overlap).
    double footprint_box_distance(const std::vector<Vec2> &footprint, const Vec2 &lo, const Vec2 &hi);

    enum class GradientMode
    {
        FiniteDifference,
        Spsa
    };

    struct ParameterBounds
    {
        double lo = 0.0;
        double hi = 1.0;
    };

    struct CalibrationConfig
    {
        int steps = 600; // per pass
        double lr = 0.05;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double adam_epsilon = 1e-8;
        // central-difference steps: eps_r absolute, sigma relative (with an
        // absolute floor so sigma = 0 still moves), S absolute
        double fd_step_permittivity = 0.1;
        double fd_step_conductivity_rel = 0.1;
        double fd_step_conductivity_floor = 1e-3;
        double fd_step_scattering = 0.02;
        std::array<ParameterBounds, 3> bounds{{{1.0, 15.0}, {0.0, 5.0}, {0.0, 1.0}}};
        double exclude_db = 15.0;
        double dense_extra_db = 5.0;
        int dense_buildings = 10; // threshold grows when more buildings link
        int patience = 50;
        double loss_tolerance = 1e-4; // dB^2; a pass stops once below
        GradientMode mode = GradientMode::FiniteDifference;
        double spsa_step = 0.01; // normalized
        std::uint64_t seed = 1;
        double holdout_frac = 0.0;
        RegionRules regions;
        double ue_height = 1.5;
        bool parallel = true;

        void validate() const;
    };

    // Parameter order within a group: eps_r, sigma, S.
    using MaterialVector = std::array<double, 3>;
    MaterialVector to_vector(const ElectromagneticMaterial &m);
    ElectromagneticMaterial from_vector(const MaterialVector &v);

    struct ParameterGroup
    {
        int id = 0;
        std::vector<int> buildings;
        std::vector<int> regions; // shared linked-region set
        int pass = -1;            // sector pass that calibrated it
        MaterialVector initial{};
        MaterialVector value{};
        std::vector<MaterialVector> trajectory; // accepted iterates, step 0 first
    };

    struct Exclusion
    {
        int region = -1;
        int pass = -1;
        int step = 0;
        double threshold_db = 0.0;
        double last_error_db = 0.0;
    };

    struct PassSummary
    {
        int sector = -1;
        std::vector<int> regions;
        std::vector<int> groups;
        int steps = 0;
        double initial_loss = 0.0;
        double best_loss = 0.0;
        std::vector<double> best_loss_history;
    };

    struct ErrorStats
    {
        int count = 0;
        double mean = 0.0;
        double median = 0.0;
        double std = 0.0; // population
        std::vector<int> histogram; // 1 dB bins over [-20, 20]
        int below = 0;              // errors < -20 dB
        int above = 0;              // errors >= 20 dB

        static constexpr double kHistogramMin = -20.0;
        static constexpr double kHistogramMax = 20.0;
        static constexpr double kBinWidth = 1.0;
    };

    ErrorStats error_stats(const std::vector<double> &errors);

    struct ValidationReport
    {
        std::vector<int> regions;
        std::vector<double> pre_errors;  // simulated - measured, dB
        std::vector<double> post_errors;
        ErrorStats pre;
        ErrorStats post;
    };

    struct CalibrationReport
    {
        bool no_op = false;
        std::vector<std::string> warnings;
        std::vector<CalibrationRegion> regions;
        std::vector<int> training_regions;
        std::vector<int> holdout_regions;
        std::vector<ParameterGroup> groups;
        std::vector<PassSummary> passes;
        std::vector<Exclusion> exclusions;
        std::vector<double> pre_errors;  // per region
        std::vector<double> post_errors; // per region
        ErrorStats pre;                  // all regions
        ErrorStats post;
        ValidationReport holdout;
        int malformed_rows = 0;
        int dropped_samples = 0;
    };

    // Pre-traced channels at the measurement positions. Geometry is fixed
    // during calibration, so paths are traced once and only their amplitudes
    // are re-evaluated per material state.
    class MeasurementModel
    {
    public:
        // `probes` are extra points (e.g. region centres) traced alongside the samples.
        MeasurementModel(const Scene &scene, const SystemPreset &preset, const MeasurementSet &set,
                         const TraceConfig &trace, const std::vector<Vec2> &probes = {}, double ue_height = 1.5,
                         bool parallel = true);

        // Simulated RSRP of each sample for its own cell (best beam).
        std::vector<double> sample_rsrp(const Scene &scene, const std::vector<int> &samples) const;
        // dB-domain regional means.
        std::vector<double> region_means(const Scene &scene, const std::vector<CalibrationRegion> &regions,
                                         const std::vector<int> &which) const;
        // Best (RSRP, global sector) of every sample over all sectors and beams.
        std::vector<std::pair<double, int>> sample_best_server(const Scene &scene) const;
        // Best sector at probe `i` under `scene`, or -1 when it has no coverage.
        int probe_serving_sector(const Scene &scene, int i) const;

        int sample_count() const { return static_cast<int>(cells_.size()); }

    private:
        double frequency_;
        std::vector<SectorSetup> sectors_;
        std::vector<int> cells_;
        std::vector<PathSet> paths_; // per site; samples first, then probes
        int probe_count_ = 0;
        bool parallel_;

        void channels(const Scene &scene, const std::vector<int> &receivers, ChannelField &field) const;
    };

    std::vector<double> region_errors(const MeasurementModel &model, const Scene &scene,
                                      const std::vector<CalibrationRegion> &regions, const std::vector<int> &which);

    // Calibrates building materials in place. Each sector pass optimizes the
    // groups linked to the regions that sector dominates; groups calibrated
    // by an earlier pass stay frozen.
    CalibrationReport calibrate(Scene &scene, const SystemPreset &preset, const MeasurementSet &measurements,
                                const CalibrationConfig &config, const TraceConfig &trace);

    ValidationReport validation_report(const MeasurementModel &model, const Scene &before, const Scene &after,
                                       const std::vector<CalibrationRegion> &regions, const std::vector<int> &which);

    // Synthetic drive test: `per_cell` samples per outdoor 10 m cell, RSRP of
    // the serving cell under `truth` plus Gaussian noise of `noise_db`.
    MeasurementSet synthesize_measurements(const Scene &truth, const SystemPreset &preset, const TraceConfig &trace,
                                           int per_cell, double noise_db, std::uint64_t seed,
                                           double cell_size = 10.0, double ue_height = 1.5);

    nlohmann::json calibration_report_to_json(const CalibrationReport &report);
    nlohmann::json error_stats_to_json(const ErrorStats &stats);
}

#endif
