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

#include "ristwin/calibration.hpp"
#include "ristwin/io.hpp"
#include "ristwin/path_cache.hpp"
#include "ristwin/planner.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace ristwin;

namespace
{
    enum ExitCode
    {
        kOk = 0,
        kConfigError = 2,
        kSceneError = 3,
        kRuntimeError = 4
    };

    struct ConfigError : Error
    {
        using Error::Error;
    };
    struct SceneError : Error
    {
        using Error::Error;
    };

    struct CommonOptions
    {
        std::string scene;
        std::string preset = "4G";
        std::string out = ".";
        std::int64_t rays = 1'000'000;
        bool full_budget = false;
        int max_bounces = 4;
        bool no_scatter = false;
        double tile_size = 2.0;
        int threads = 0;
        std::string cache_dir;
        bool quiet = false;
    };

    struct PlanOptions
    {
        double threshold = 15.0;
        double recluster = 0.0;
        int top_n = -1;
        double aperture = 2.0;
        double min_improve = 0.6;
        int phase_bits = 0;
        std::vector<double> sweep;
        std::vector<double> recluster_sweep;
        bool no_recluster = false;
        bool no_reassociate = false;
    };

    struct CalibrateOptions
    {
        std::string measurements;
        int steps = 600;
        double lr = 0.05;
        double exclude_db = 15.0;
        double holdout = 0.0;
        bool spsa = false;
    };

    struct SynthOptions
    {
        std::string csv;
        int per_cell = 30;
        double noise_db = 1.0;
        std::uint64_t seed = 7;
        std::vector<double> material;
    };

    void add_common(CLI::App *cmd, CommonOptions &o, bool needs_out = true)
    {
        cmd->add_option("--scene", o.scene, "Scene JSON")->required();
        cmd->add_option("--preset", o.preset, "System preset: 4G, 5G or 6G");
        if (needs_out)
            cmd->add_option("--out", o.out, "Output directory");
        cmd->add_option("--rays", o.rays, "Launch rays per site (coverage)");
        cmd->add_flag("--full-budget", o.full_budget, "Use 1e7 coverage rays and 3e7 candidate-search rays");
        cmd->add_option("--max-bounces", o.max_bounces, "Maximum specular bounces");
        cmd->add_flag("--no-scatter", o.no_scatter, "Disable diffuse scattering");
        cmd->add_option("--tile-size", o.tile_size, "Tile edge length [m]");
        cmd->add_option("--threads", o.threads, "OpenMP threads (0 = default)");
        cmd->add_option("--cache-dir", o.cache_dir, "Path cache directory (default $RISTWIN_CACHE_DIR)");
        cmd->add_flag("--quiet", o.quiet, "Suppress progress output");
    }

    void log(const CommonOptions &o, const std::string &msg)
    {
        if (!o.quiet)
            std::cerr << msg << '\n';
    }

    const SystemPreset &resolve_preset(const CommonOptions &o)
    {
        try
        {
            return preset_by_name(o.preset);
        }
        catch (const ValidationError &e)
        {
            throw ConfigError(e.what());
        }
    }

    TraceConfig trace_config(const CommonOptions &o)
    {
        TraceConfig t;
        t.ray_count = o.full_budget ? 10'000'000 : o.rays;
        t.max_bounces = o.max_bounces;
        t.enable_scatter = !o.no_scatter;
        t.threads = o.threads;
        try
        {
            t.validate();
        }
        catch (const ValidationError &e)
        {
            throw ConfigError(e.what());
        }
        return t;
    }

    Scene load(const CommonOptions &o, const SystemPreset &preset)
    {
        try
        {
            return load_scene(o.scene, preset.frequency_hz());
        }
        catch (const Error &e)
        {
            throw SceneError(e.what());
        }
    }

    fs::path prepare_out(const std::string &dir)
    {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec || !fs::is_directory(dir))
            throw ConfigError("output directory '" + dir + "' is not writable");
        return fs::path(dir);
    }

    CoverageRun coverage_run(const CommonOptions &o, const Scene &scene, const SystemPreset &preset)
    {
        if (!(o.tile_size > 0.0))
            throw ConfigError("tile size must be > 0");
        CoverageOptions co;
        co.tile_size = o.tile_size;
        co.cache_dir = resolve_cache_dir(o.cache_dir);
        return build_coverage(scene, preset, trace_config(o), co);
    }

    void emit_coverage(const CoverageMap &map, const fs::path &out, const std::string &stem)
    {
        write_coverage_csv(map, (out / (stem + ".csv")).string());
        write_heatmap_ppm(map, (out / (stem + ".ppm")).string());
    }

    nlohmann::json run_info(const CommonOptions &o, const SystemPreset &preset, const TraceConfig &t)
    {
        return {{"scene", fs::path(o.scene).filename().string()},
                {"preset", preset.name},
                {"carrier_ghz", preset.carrier_ghz},
                {"rays", t.ray_count},
                {"max_bounces", t.max_bounces},
                {"scatter", t.enable_scatter},
                {"tile_size_m", o.tile_size}};
    }

    int cmd_coverage(const CommonOptions &o)
    {
        const auto &preset = resolve_preset(o);
        const auto out = prepare_out(o.out);
        const Scene scene = load(o, preset);
        log(o, "tracing coverage");
        const auto run = coverage_run(o, scene, preset);
        emit_coverage(run.map, out, "coverage");
        auto summary = coverage_summary_json(run.map);
        summary["run"] = run_info(o, preset, trace_config(o));
        write_json(summary, (out / "summary.json").string());
        log(o, "outage fraction " + std::to_string(run.map.outage_fraction()));
        return kOk;
    }

    PlannerConfig planner_config(const CommonOptions &o, const PlanOptions &p, const Scene &scene)
    {
        PlannerConfig pc;
        pc.birch.threshold = p.threshold;
        pc.recluster_threshold = p.recluster;
        pc.top_n = p.top_n;
        pc.ris.aperture_width = pc.ris.aperture_height = p.aperture;
        pc.ris.phase_bits = p.phase_bits;
        pc.min_improve_frac = p.min_improve;
        pc.recluster = !p.no_recluster;
        pc.reassociate = !p.no_reassociate;
        pc.candidate_trace.ray_count = scaled_candidate_rays(scene, o.rays, o.full_budget);
        pc.candidate_trace.threads = o.threads;
        if (!(p.aperture > 0.0))
            throw ConfigError("aperture must be > 0");
        try
        {
            pc.validate();
        }
        catch (const ValidationError &e)
        {
            throw ConfigError(e.what());
        }
        return pc;
    }

    int cmd_plan(const CommonOptions &o, const PlanOptions &p)
    {
        const auto &preset = resolve_preset(o);
        const auto out = prepare_out(o.out);
        const Scene scene = load(o, preset);
        const auto pc = planner_config(o, p, scene);
        for (double a : p.sweep)
            if (!(a > 0.0))
                throw ConfigError("aperture sweep values must be > 0");
        for (double t : p.recluster_sweep)
            if (!(t > 0.0 && t < pc.birch.threshold))
                throw ConfigError("re-clustering sweep values must lie in (0, T)");
        log(o, "tracing coverage");
        const auto run = coverage_run(o, scene, preset);
        emit_coverage(run.map, out, "coverage_pre");
        log(o, "planning");
        const auto result = plan(scene, preset, run, pc);
        emit_coverage(result.post_map, out, "coverage_post");
        auto doc = plan_to_json(result, run.map);
        doc["run"] = run_info(o, preset, trace_config(o));
        doc["planner"] = {{"threshold_T", pc.birch.threshold},
                          {"recluster_T", pc.effective_recluster_threshold()},
                          {"top_n", pc.top_n},
                          {"aperture_m", p.aperture},
                          {"min_improve_frac", pc.min_improve_frac},
                          {"phase_bits", pc.ris.phase_bits},
                          {"candidate_rays", pc.candidate_trace.ray_count}};
        write_json(doc, (out / "plan.json").string());
        write_json(recovery_to_json(result), (out / "recovery.json").string());
        write_json({{"pre", coverage_summary_json(run.map)}, {"post", coverage_summary_json(result.post_map)}},
                   (out / "summary.json").string());
        log(o, "recovered " + std::to_string(result.stats.total_recovered()) + " of " +
                   std::to_string(result.stats.outage_ues) + " outage UEs with " +
                   std::to_string(result.deployments.size()) + " RIS");

        if (!p.sweep.empty())
        {
            std::vector<ApertureSweepRow> rows;
            for (double a : p.sweep)
            {
                PlannerConfig sc = pc;
                sc.ris.aperture_width = sc.ris.aperture_height = a;
                log(o, "aperture sweep: " + std::to_string(a) + " m");
                const auto r = plan(scene, preset, run, sc);
                const double spacing = 0.5 * wavelength(preset.frequency_hz());
                const int per_side = static_cast<int>(std::floor(a / spacing + 1e-9));
                rows.push_back({a, per_side * per_side, static_cast<int>(r.deployments.size()), r.stats.outage_ues,
                                r.stats.recovered, r.stats.total_fraction()});
            }
            write_aperture_sweep_csv(rows, (out / "aperture_sweep.csv").string());
        }

        if (!p.recluster_sweep.empty())
        {
            std::vector<ReclusterSweepRow> rows;
            for (double t : p.recluster_sweep)
            {
                PlannerConfig sc = pc;
                sc.recluster = true;
                sc.recluster_threshold = t;
                log(o, "re-clustering sweep: T_new = " + std::to_string(t) + " m");
                const auto r = plan(scene, preset, run, sc);
                rows.push_back({t, static_cast<int>(r.deployments.size()), r.stats.outage_ues, r.stats.recovered,
                                r.stats.total_fraction()});
            }
            write_recluster_sweep_csv(rows, (out / "recluster_sweep.csv").string());
        }
        return kOk;
    }

    int cmd_cluster(const CommonOptions &o, const PlanOptions &p)
    {
        const auto &preset = resolve_preset(o);
        const auto out = prepare_out(o.out);
        const Scene scene = load(o, preset);
        if (!(p.threshold > 0.0))
            throw ConfigError("threshold T must be > 0");
        const auto run = coverage_run(o, scene, preset);
        const auto tiles = run.map.outage_tiles();
        std::vector<Vec2> points;
        for (int t : tiles)
            points.push_back(run.map.grid.center(t));
        BirchConfig bc;
        bc.threshold = p.threshold;
        const auto clusters = rank_clusters(birch_cluster(points, bc));
        write_json({{"threshold_T", p.threshold},
                    {"outage_tiles", tiles.size()},
                    {"tile_size_m", run.map.grid.tile_size},
                    {"clusters", clusters_to_json(clusters, tiles)}},
                   (out / "clusters.json").string());
        log(o, std::to_string(clusters.size()) + " clusters");
        return kOk;
    }

    int cmd_calibrate(const CommonOptions &o, const CalibrateOptions &c)
    {
        const auto &preset = resolve_preset(o);
        const auto out = prepare_out(o.out);
        Scene scene = load(o, preset);
        CalibrationConfig cc;
        cc.steps = c.steps;
        cc.lr = c.lr;
        cc.exclude_db = c.exclude_db;
        cc.holdout_frac = c.holdout;
        cc.mode = c.spsa ? GradientMode::Spsa : GradientMode::FiniteDifference;
        try
        {
            cc.validate();
        }
        catch (const ValidationError &e)
        {
            throw ConfigError(e.what());
        }
        MeasurementSet set;
        try
        {
            set = read_measurements_csv(c.measurements);
        }
        catch (const ParseError &e)
        {
            throw ConfigError(e.what());
        }
        if (set.samples.empty())
            std::cerr << "warning: measurement file has no usable rows\n";
        const auto report = calibrate(scene, preset, set, cc, trace_config(o));
        for (const auto &w : report.warnings)
            std::cerr << "warning: " << w << '\n';
        save_scene(scene, (out / "calibrated_scene.json").string());
        write_json(calibration_report_to_json(report), (out / "calibration_report.json").string());
        if (!report.no_op)
        {
            char buf[160];
            std::snprintf(buf, sizeof buf, "regional error mean %.2f -> %.2f dB, std %.2f -> %.2f dB", report.pre.mean,
                          report.post.mean, report.pre.std, report.post.std);
            log(o, buf);
        }
        return kOk;
    }

    int cmd_synth(const CommonOptions &o, const SynthOptions &s)
    {
        const auto &preset = resolve_preset(o);
        Scene scene = load(o, preset);
        if (!s.material.empty())
        {
            if (s.material.size() != 3)
                throw ConfigError("--material expects eps_r,sigma,S");
            const auto m = from_vector({s.material[0], s.material[1], s.material[2]});
            try
            {
                m.validate();
            }
            catch (const ValidationError &e)
            {
                throw ConfigError(e.what());
            }
            for (auto &b : scene.buildings)
                b.material = m;
        }
        const auto set = synthesize_measurements(scene, preset, trace_config(o), s.per_cell, s.noise_db, s.seed);
        const fs::path target(s.csv);
        if (target.has_parent_path())
            prepare_out(target.parent_path().string());
        write_measurements_csv(set, s.csv);
        log(o, std::to_string(set.samples.size()) + " samples");
        return kOk;
    }

    int cmd_report(const std::string &dir)
    {
        const fs::path in(dir);
        if (!fs::is_directory(in))
            throw ConfigError("'" + dir + "' is not a directory");
        nlohmann::json report = nlohmann::json::object();
        for (const char *name : {"summary.json", "recovery.json", "clusters.json", "calibration_report.json"})
        {
            const auto f = in / name;
            if (!fs::exists(f))
                continue;
            const auto doc = read_json(f.string());
            const std::string key = fs::path(name).stem().string();
            if (key == "summary")
                report[key] = doc;
            else if (key == "recovery")
                report[key] = doc;
            else if (key == "clusters")
                report[key] = {{"threshold_T", doc.at("threshold_T")}, {"count", doc.at("clusters").size()}};
            else
                report[key] = {{"status", doc.at("status")}, {"pre", doc.at("pre")}, {"post", doc.at("post")}};
        }
        if (report.empty())
            throw ConfigError("no ristwin artifacts found in '" + dir + "'");
        std::cout << report.dump(2) << '\n';
        return kOk;
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"ristwin: ray-traced coverage, material calibration and RIS deployment planning"};
    app.require_subcommand(1);

    CommonOptions common;
    PlanOptions planopts;
    CalibrateOptions calopts;
    SynthOptions synth;
    std::string report_dir;

    auto *coverage = app.add_subcommand("coverage", "Coverage CSV, heatmap and summary");
    add_common(coverage, common);

    auto *plan_cmd = app.add_subcommand("plan", "Plan RIS deployments for outage clusters");
    add_common(plan_cmd, common);
    plan_cmd->add_option("--threshold-T", planopts.threshold, "BIRCH threshold T [m]");
    plan_cmd->add_option("--recluster-T", planopts.recluster, "Re-clustering threshold [m] (default 2T/3)");
    plan_cmd->add_option("--top-n", planopts.top_n, "Clusters receiving a RIS attempt (-1 = all)");
    plan_cmd->add_option("--aperture", planopts.aperture, "RIS aperture edge [m]");
    plan_cmd->add_option("--min-improve-frac", planopts.min_improve, "Required fraction of improved members");
    plan_cmd->add_option("--phase-bits", planopts.phase_bits, "Phase quantization bits (0 = continuous)");
    plan_cmd->add_option("--aperture-sweep", planopts.sweep, "Aperture sizes [m] for a recovery sweep")->delimiter(',');
    plan_cmd->add_option("--recluster-sweep", planopts.recluster_sweep, "Re-clustering thresholds [m] for a trade-off sweep")
        ->delimiter(',');
    plan_cmd->add_flag("--no-recluster", planopts.no_recluster, "Skip the re-clustering stage");
    plan_cmd->add_flag("--no-reassociate", planopts.no_reassociate, "Skip the re-association stage");

    auto *cluster = app.add_subcommand("cluster", "Cluster outage tiles");
    add_common(cluster, common);
    cluster->add_option("--threshold-T", planopts.threshold, "BIRCH threshold T [m]");

    auto *cal = app.add_subcommand("calibrate", "Calibrate building materials against measurements");
    add_common(cal, common);
    cal->add_option("--measurements", calopts.measurements, "Measurement CSV (x,y,rsrp_dbm,cell_id)")->required();
    cal->add_option("--steps", calopts.steps, "Adam steps per pass");
    cal->add_option("--lr", calopts.lr, "Adam learning rate (normalized parameters)");
    cal->add_option("--exclude-db", calopts.exclude_db, "Region exclusion threshold [dB]");
    cal->add_option("--holdout-frac", calopts.holdout, "Fraction of regions held out for validation");
    cal->add_flag("--spsa", calopts.spsa, "Use SPSA gradients instead of finite differences");

    auto *synth_cmd = app.add_subcommand("synth-measurements", "Generate synthetic drive-test measurements");
    add_common(synth_cmd, common, false);
    synth_cmd->add_option("--csv", synth.csv, "Output CSV")->required();
    synth_cmd->add_option("--per-cell", synth.per_cell, "Samples per 10 m cell");
    synth_cmd->add_option("--noise-db", synth.noise_db, "Gaussian noise std [dB]");
    synth_cmd->add_option("--seed", synth.seed, "Random seed");
    synth_cmd->add_option("--material", synth.material, "Override every building: eps_r,sigma,S")->delimiter(',');

    auto *report = app.add_subcommand("report", "Summarize the artifacts of an output directory");
    report->add_option("--in", report_dir, "Directory with ristwin outputs")->required();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    try
    {
        if (common.threads > 0)
            omp_set_num_threads(common.threads);
        else if (common.threads < 0)
            throw ConfigError("threads must be >= 0");
        if (*coverage)
            return cmd_coverage(common);
        if (*plan_cmd)
            return cmd_plan(common, planopts);
        if (*cluster)
            return cmd_cluster(common, planopts);
        if (*cal)
            return cmd_calibrate(common, calopts);
        if (*synth_cmd)
            return cmd_synth(common, synth);
        if (*report)
            return cmd_report(report_dir);
    }
    catch (const ConfigError &e)
    {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }
    catch (const SceneError &e)
    {
        std::cerr << "scene error: " << e.what() << '\n';
        return kSceneError;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kRuntimeError;
}
