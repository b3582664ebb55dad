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
#include "ristwin/spatial_index.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace ristwin
{
    namespace
    {
        // simulated RSRP floor for receivers without any path
        constexpr double kRsrpFloorDbm = -250.0;

        std::string trim(const std::string &s)
        {
            const auto b = s.find_first_not_of(" \t\r\n");
            if (b == std::string::npos)
                return {};
            const auto e = s.find_last_not_of(" \t\r\n");
            return s.substr(b, e - b + 1);
        }

        bool parse_double(const std::string &s, double &out)
        {
            const std::string t = trim(s);
            if (t.empty())
                return false;
            char *end = nullptr;
            out = std::strtod(t.c_str(), &end);
            return end == t.c_str() + t.size();
        }

        bool parse_int(const std::string &s, int &out)
        {
            const std::string t = trim(s);
            if (t.empty())
                return false;
            char *end = nullptr;
            const long v = std::strtol(t.c_str(), &end, 10);
            if (end != t.c_str() + t.size() || v < INT32_MIN || v > INT32_MAX)
                return false;
            out = static_cast<int>(v);
            return true;
        }

        double segment_point_distance(const Vec2 &a, const Vec2 &b, const Vec2 &p)
        {
            const Vec2 ab = b - a;
            const double l2 = dot(ab, ab);
            const double t = l2 > 0.0 ? std::clamp(dot(p - a, ab) / l2, 0.0, 1.0) : 0.0;
            return norm(p - (a + ab * t));
        }

        bool segments_intersect(const Vec2 &a, const Vec2 &b, const Vec2 &c, const Vec2 &d)
        {
            const double d1 = cross(b - a, c - a), d2 = cross(b - a, d - a);
            const double d3 = cross(d - c, a - c), d4 = cross(d - c, b - c);
            return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
        }

        double clamp_param(double v, const ParameterBounds &b) { return std::clamp(v, b.lo, b.hi); }

        double mean_of(const std::vector<double> &v)
        {
            return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        }
    }

    MeasurementSet read_measurements_csv(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw ParseError("cannot open measurement file '" + path + "'");
        MeasurementSet set;
        set.provenance = path;
        std::string line;
        bool header = false;
        while (std::getline(in, line))
        {
            if (trim(line).empty())
                continue;
            if (!header)
            {
                std::string h;
                for (char c : line)
                    if (!std::isspace(static_cast<unsigned char>(c)))
                        h += c;
                if (h != "x,y,rsrp_dbm,cell_id")
                    throw ParseError("measurement CSV must start with the header x,y,rsrp_dbm,cell_id");
                header = true;
                continue;
            }
            std::vector<std::string> fields;
            std::stringstream ss(line);
            std::string f;
            while (std::getline(ss, f, ','))
                fields.push_back(f);
            Measurement m;
            if (fields.size() != 4 || !parse_double(fields[0], m.position.x) || !parse_double(fields[1], m.position.y) ||
                !parse_double(fields[2], m.rsrp_dbm) || !parse_int(fields[3], m.cell_id))
            {
                ++set.malformed_rows;
                continue;
            }
            set.samples.push_back(m);
        }
        return set;
    }

    void write_measurements_csv(const MeasurementSet &set, const std::string &path)
    {
        std::ofstream out(path);
        if (!out)
            throw Error("cannot write '" + path + "'");
        out << "x,y,rsrp_dbm,cell_id\n";
        char buf[128];
        for (const auto &m : set.samples)
        {
            std::snprintf(buf, sizeof buf, "%.3f,%.3f,%.4f,%d\n", m.position.x, m.position.y, m.rsrp_dbm, m.cell_id);
            out << buf;
        }
    }

    void sanitize_measurements(MeasurementSet &set, const Scene &scene)
    {
        const Area area = scene.coverage_area();
        const int sectors = static_cast<int>(scene.sectors().size());
        std::vector<Measurement> kept;
        for (const auto &m : set.samples)
        {
            const bool ok = std::isfinite(m.position.x) && std::isfinite(m.position.y) && std::isfinite(m.rsrp_dbm) &&
                            m.cell_id >= 0 && m.cell_id < sectors && m.position.x >= area.min.x &&
                            m.position.x <= area.max.x && m.position.y >= area.min.y && m.position.y <= area.max.y &&
                            scene.building_at(m.position) < 0;
            if (ok)
                kept.push_back(m);
            else
                ++set.dropped;
        }
        set.samples = std::move(kept);
    }

    double footprint_box_distance(const std::vector<Vec2> &footprint, const Vec2 &lo, const Vec2 &hi)
    {
        const std::array<Vec2, 4> box{{{lo.x, lo.y}, {hi.x, lo.y}, {hi.x, hi.y}, {lo.x, hi.y}}};
        for (const auto &v : footprint)
            if (v.x >= lo.x && v.x <= hi.x && v.y >= lo.y && v.y <= hi.y)
                return 0.0;
        for (const auto &c : box)
            if (point_in_polygon(c, footprint))
                return 0.0;
        double best = 1e300;
        const std::size_t n = footprint.size();
        for (std::size_t i = 0; i < n; ++i)
        {
            const Vec2 &a = footprint[i], &b = footprint[(i + 1) % n];
            for (int k = 0; k < 4; ++k)
            {
                const Vec2 &c = box[k], &d = box[(k + 1) % 4];
                if (segments_intersect(a, b, c, d))
                    return 0.0;
                best = std::min({best, segment_point_distance(a, b, c), segment_point_distance(a, b, d),
                                 segment_point_distance(c, d, a), segment_point_distance(c, d, b)});
            }
        }
        return best;
    }

    std::vector<CalibrationRegion> aggregate_regions(const MeasurementSet &set, const Scene &scene,
                                                     const RegionRules &rules)
    {
        if (!(rules.cell_size > 0.0) || rules.min_samples < 1)
            throw ValidationError("calibration: region size and minimum sample count must be positive");
        std::map<std::pair<int, int>, std::vector<int>> cells; // keyed (iy, ix)
        for (int i = 0; i < static_cast<int>(set.samples.size()); ++i)
        {
            const Vec2 &p = set.samples[i].position;
            const int ix = static_cast<int>(std::floor(p.x / rules.cell_size));
            const int iy = static_cast<int>(std::floor(p.y / rules.cell_size));
            cells[{iy, ix}].push_back(i);
        }
        std::vector<CalibrationRegion> out;
        for (auto &[key, samples] : cells)
        {
            if (static_cast<int>(samples.size()) < rules.min_samples)
                continue;
            CalibrationRegion r;
            r.iy = key.first;
            r.ix = key.second;
            r.min = {r.ix * rules.cell_size, r.iy * rules.cell_size};
            r.max = {(r.ix + 1) * rules.cell_size, (r.iy + 1) * rules.cell_size};
            r.samples = samples;
            double sum = 0.0;
            for (int i : samples)
                sum += set.samples[i].rsrp_dbm;
            r.mean_rsrp_dbm = sum / static_cast<double>(samples.size());
            for (int b = 0; b < static_cast<int>(scene.buildings.size()); ++b)
                if (footprint_box_distance(scene.buildings[b].footprint, r.min, r.max) <= rules.link_radius)
                    r.linked_buildings.push_back(b);
            out.push_back(std::move(r));
        }
        return out;
    }

    void CalibrationConfig::validate() const
    {
        if (steps < 0)
            throw ValidationError("calibration: steps must be >= 0");
        if (!(lr > 0.0) || !(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
            throw ValidationError("calibration: invalid Adam hyper-parameters");
        if (!(exclude_db > 0.0) || patience < 1)
            throw ValidationError("calibration: exclusion threshold and patience must be positive");
        if (!(holdout_frac >= 0.0 && holdout_frac < 1.0))
            throw ValidationError("calibration: holdout fraction must lie in [0, 1)");
        for (const auto &b : bounds)
            if (!(b.lo < b.hi))
                throw ValidationError("calibration: empty parameter bounds");
        if (bounds[0].lo < 1.0 || bounds[1].lo < 0.0 || bounds[2].lo < 0.0 || bounds[2].hi > 1.0)
            throw ValidationError("calibration: bounds exceed the physical parameter range");
    }

    MaterialVector to_vector(const ElectromagneticMaterial &m)
    {
        return {m.relative_permittivity, m.conductivity, m.scattering_coefficient};
    }

    ElectromagneticMaterial from_vector(const MaterialVector &v) { return {v[0], v[1], v[2]}; }

    ErrorStats error_stats(const std::vector<double> &errors)
    {
        ErrorStats s;
        const int bins = static_cast<int>((ErrorStats::kHistogramMax - ErrorStats::kHistogramMin) / ErrorStats::kBinWidth);
        s.histogram.assign(bins, 0);
        s.count = static_cast<int>(errors.size());
        if (errors.empty())
            return s;
        s.mean = mean_of(errors);
        double var = 0.0;
        for (double e : errors)
            var += (e - s.mean) * (e - s.mean);
        s.std = std::sqrt(var / static_cast<double>(errors.size()));
        std::vector<double> sorted = errors;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t n = sorted.size();
        s.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
        for (double e : errors)
        {
            if (e < ErrorStats::kHistogramMin)
                ++s.below;
            else if (e >= ErrorStats::kHistogramMax)
                ++s.above;
            else
                ++s.histogram[std::min(bins - 1, static_cast<int>(std::floor((e - ErrorStats::kHistogramMin) / ErrorStats::kBinWidth)))];
        }
        return s;
    }

    MeasurementModel::MeasurementModel(const Scene &scene, const SystemPreset &preset, const MeasurementSet &set,
                                       const TraceConfig &trace, const std::vector<Vec2> &probes, double ue_height,
                                       bool parallel)
        : frequency_(preset.frequency_hz()), sectors_(sector_setups(scene, preset)),
          probe_count_(static_cast<int>(probes.size())), parallel_(parallel)
    {
        std::vector<Vec3> points;
        for (const auto &m : set.samples)
        {
            cells_.push_back(m.cell_id);
            points.push_back({m.position.x, m.position.y, ue_height});
        }
        for (const auto &p : probes)
            points.push_back({p.x, p.y, ue_height});
        SpatialIndex index(scene);
        for (const auto &site : scene.bs_sites)
            paths_.push_back(parallel ? ristwin::trace(index, site.position, points, frequency_, trace)
                                      : ristwin::trace_serial(index, site.position, points, frequency_, trace));
    }

    void MeasurementModel::channels(const Scene &scene, const std::vector<int> &receivers, ChannelField &field) const
    {
        const int total = sample_count() + probe_count_;
        field.sectors = sectors_;
        field.h.resize(sectors_.size());
        for (std::size_t s = 0; s < sectors_.size(); ++s)
            field.h[s].assign(static_cast<std::size_t>(total) * sectors_[s].elements(), cplx{});
        std::vector<int> identity(total);
        std::iota(identity.begin(), identity.end(), 0);
        synthesize_field(scene, frequency_, paths_, identity, field, true, receivers, parallel_);
    }

    std::vector<double> MeasurementModel::sample_rsrp(const Scene &scene, const std::vector<int> &samples) const
    {
        ChannelField field;
        channels(scene, samples, field);
        std::vector<double> out(samples.size(), kRsrpFloorDbm);
        for (std::size_t i = 0; i < samples.size(); ++i)
        {
            const int r = samples[i];
            for (std::size_t s = 0; s < sectors_.size(); ++s)
            {
                const auto &sec = sectors_[s];
                if (sec.ref.global_id != cells_[r])
                    continue;
                double best = 0.0;
                for (const auto &w : sec.codebook.beams)
                    best = std::max(best, beam_gain(field.channel(static_cast<int>(s), r), w));
                out[i] = std::max(kRsrpFloorDbm, rsrp_dbm(best, sec.tx_power_dbm));
            }
        }
        return out;
    }

    std::vector<std::pair<double, int>> MeasurementModel::sample_best_server(const Scene &scene) const
    {
        std::vector<int> all(sample_count());
        std::iota(all.begin(), all.end(), 0);
        ChannelField field;
        channels(scene, all, field);
        std::vector<std::pair<double, int>> out(all.size(), {kNoCoverage, -1});
        for (int r : all)
            for (std::size_t s = 0; s < sectors_.size(); ++s)
            {
                const auto &sec = sectors_[s];
                for (const auto &w : sec.codebook.beams)
                {
                    const double p = rsrp_dbm(beam_gain(field.channel(static_cast<int>(s), r), w), sec.tx_power_dbm);
                    if (p > out[r].first)
                        out[r] = {p, sec.ref.global_id};
                }
            }
        return out;
    }

    int MeasurementModel::probe_serving_sector(const Scene &scene, int i) const
    {
        const int r = sample_count() + i;
        ChannelField field;
        channels(scene, {r}, field);
        double best = kNoCoverage;
        int sector = -1;
        for (std::size_t s = 0; s < sectors_.size(); ++s)
            for (const auto &w : sectors_[s].codebook.beams)
            {
                const double p = rsrp_dbm(beam_gain(field.channel(static_cast<int>(s), r), w), sectors_[s].tx_power_dbm);
                if (p > best)
                {
                    best = p;
                    sector = sectors_[s].ref.global_id;
                }
            }
        return sector;
    }

    std::vector<double> MeasurementModel::region_means(const Scene &scene, const std::vector<CalibrationRegion> &regions,
                                                       const std::vector<int> &which) const
    {
        std::vector<int> samples;
        for (int k : which)
            samples.insert(samples.end(), regions[k].samples.begin(), regions[k].samples.end());
        const auto rsrp = sample_rsrp(scene, samples);
        std::vector<double> out;
        std::size_t at = 0;
        for (int k : which)
        {
            double sum = 0.0;
            for (std::size_t j = 0; j < regions[k].samples.size(); ++j)
                sum += rsrp[at++];
            out.push_back(sum / static_cast<double>(regions[k].samples.size()));
        }
        return out;
    }

    std::vector<double> region_errors(const MeasurementModel &model, const Scene &scene,
                                      const std::vector<CalibrationRegion> &regions, const std::vector<int> &which)
    {
        auto sim = model.region_means(scene, regions, which);
        for (std::size_t i = 0; i < which.size(); ++i)
            sim[i] -= regions[which[i]].mean_rsrp_dbm;
        return sim;
    }

    ValidationReport validation_report(const MeasurementModel &model, const Scene &before, const Scene &after,
                                       const std::vector<CalibrationRegion> &regions, const std::vector<int> &which)
    {
        ValidationReport v;
        v.regions = which;
        v.pre_errors = region_errors(model, before, regions, which);
        v.post_errors = region_errors(model, after, regions, which);
        v.pre = error_stats(v.pre_errors);
        v.post = error_stats(v.post_errors);
        return v;
    }

    namespace
    {
        // Adam over the normalized parameters of the free groups of one pass.
        class PassOptimizer
        {
        public:
            PassOptimizer(Scene &scene, const MeasurementModel &model, const std::vector<CalibrationRegion> &regions,
                          std::vector<ParameterGroup> &groups, const CalibrationConfig &config, CalibrationReport &report,
                          int pass)
                : scene_(scene), model_(model), regions_(regions), groups_(groups), config_(config), report_(report),
                  pass_(pass), rng_(config.seed + static_cast<std::uint64_t>(pass))
            {
            }

            void run(PassSummary &summary)
            {
                active_ = summary.regions;
                free_ = summary.groups;
                const int dims = 3 * static_cast<int>(free_.size());
                std::vector<double> x(dims), m(dims, 0.0), v(dims, 0.0);
                for (int g = 0; g < static_cast<int>(free_.size()); ++g)
                    for (int j = 0; j < 3; ++j)
                        x[3 * g + j] = normalize(groups_[free_[g]].value[j], j);
                std::map<int, int> streak;

                auto errors = evaluate(x);
                double loss = loss_of(errors);
                summary.initial_loss = loss;
                double best = loss;
                std::vector<double> best_x = x;
                int step = 0;
                for (; step < config_.steps && !active_.empty(); ++step)
                {
                    if (exclude(errors, streak, step))
                    {
                        errors = evaluate(x);
                        loss = loss_of(errors);
                        best = loss;
                        best_x = x;
                        if (active_.empty())
                            break;
                    }
                    if (loss < best)
                    {
                        best = loss;
                        best_x = x;
                    }
                    summary.best_loss_history.push_back(best);
                    if (loss < config_.loss_tolerance)
                        break;

                    const auto grad = gradient(x);
                    const int t = step + 1;
                    for (int d = 0; d < dims; ++d)
                    {
                        m[d] = config_.beta1 * m[d] + (1.0 - config_.beta1) * grad[d];
                        v[d] = config_.beta2 * v[d] + (1.0 - config_.beta2) * grad[d] * grad[d];
                        const double mh = m[d] / (1.0 - std::pow(config_.beta1, t));
                        const double vh = v[d] / (1.0 - std::pow(config_.beta2, t));
                        x[d] = std::clamp(x[d] - config_.lr * mh / (std::sqrt(vh) + config_.adam_epsilon), 0.0, 1.0);
                    }
                    for (int g = 0; g < static_cast<int>(free_.size()); ++g)
                        groups_[free_[g]].trajectory.push_back(physical(x, g));
                    errors = evaluate(x);
                    loss = loss_of(errors);
                }
                if (!active_.empty() && loss < best)
                {
                    best = loss;
                    best_x = x;
                }
                summary.steps = step;
                summary.best_loss = best;
                summary.best_loss_history.push_back(best);
                apply(scene_, best_x);
                for (int g = 0; g < static_cast<int>(free_.size()); ++g)
                {
                    groups_[free_[g]].value = physical(best_x, g);
                    groups_[free_[g]].pass = pass_;
                }
            }

        private:
            double normalize(double p, int j) const
            {
                const auto &b = config_.bounds[j];
                return (clamp_param(p, b) - b.lo) / (b.hi - b.lo);
            }

            MaterialVector physical(const std::vector<double> &x, int g) const
            {
                MaterialVector out;
                for (int j = 0; j < 3; ++j)
                {
                    const auto &b = config_.bounds[j];
                    out[j] = clamp_param(b.lo + x[3 * g + j] * (b.hi - b.lo), b);
                }
                return out;
            }

            void apply_physical(Scene &scene, int g, const MaterialVector &p) const
            {
                const auto mat = from_vector(p);
                for (int b : groups_[free_[g]].buildings)
                    scene.buildings[b].material = mat;
            }

            void apply(Scene &scene, const std::vector<double> &x) const
            {
                for (int g = 0; g < static_cast<int>(free_.size()); ++g)
                    apply_physical(scene, g, physical(x, g));
            }

            std::vector<double> evaluate(const std::vector<double> &x)
            {
                apply(scene_, x);
                return region_errors(model_, scene_, regions_, active_);
            }

            double loss_of(const std::vector<double> &errors) const
            {
                if (errors.empty())
                    return 0.0;
                double sum = 0.0;
                for (double e : errors)
                    sum += e * e;
                const double loss = sum / static_cast<double>(errors.size());
                if (!std::isfinite(loss))
                {
                    nlohmann::json dump;
                    for (int g : free_)
                        dump["groups"].push_back({{"buildings", groups_[g].buildings},
                                                  {"material", to_vector(scene_.buildings[groups_[g].buildings.front()].material)}});
                    dump["regions"] = active_;
                    dump["errors"] = errors;
                    throw Error("calibration: non-finite loss; state: " + dump.dump());
                }
                return loss;
            }

            double loss_at(const std::vector<int> &which, int g, const MaterialVector &p)
            {
                apply_physical(scene_, g, p);
                return loss_of(region_errors(model_, scene_, regions_, which));
            }

            std::vector<double> gradient(const std::vector<double> &x)
            {
                const int dims = static_cast<int>(x.size());
                std::vector<double> grad(dims, 0.0);
                apply(scene_, x);
                if (config_.mode == GradientMode::Spsa)
                {
                    std::bernoulli_distribution coin(0.5);
                    std::vector<double> delta(dims), xp(x), xm(x);
                    for (int d = 0; d < dims; ++d)
                    {
                        delta[d] = coin(rng_) ? 1.0 : -1.0;
                        xp[d] = std::clamp(x[d] + config_.spsa_step * delta[d], 0.0, 1.0);
                        xm[d] = std::clamp(x[d] - config_.spsa_step * delta[d], 0.0, 1.0);
                    }
                    const double lp = loss_of(evaluate(xp)), lm = loss_of(evaluate(xm));
                    for (int d = 0; d < dims; ++d)
                    {
                        const double span = xp[d] - xm[d];
                        grad[d] = span != 0.0 ? (lp - lm) / span : 0.0;
                    }
                    apply(scene_, x);
                    return grad;
                }
                for (int g = 0; g < static_cast<int>(free_.size()); ++g)
                {
                    const MaterialVector p0 = physical(x, g);
                    for (int j = 0; j < 3; ++j)
                    {
                        double h = j == 0 ? config_.fd_step_permittivity
                                          : (j == 1 ? std::max(config_.fd_step_conductivity_rel * p0[1], config_.fd_step_conductivity_floor)
                                                    : config_.fd_step_scattering);
                        MaterialVector pp = p0, pm = p0;
                        pp[j] = clamp_param(p0[j] + h, config_.bounds[j]);
                        pm[j] = clamp_param(p0[j] - h, config_.bounds[j]);
                        if (pp[j] == pm[j])
                            continue;
                        const double lp = loss_at(active_, g, pp), lm = loss_at(active_, g, pm);
                        apply_physical(scene_, g, p0);
                        const double span = config_.bounds[j].hi - config_.bounds[j].lo;
                        grad[3 * g + j] = (lp - lm) / (pp[j] - pm[j]) * span;
                    }
                }
                return grad;
            }

            bool exclude(const std::vector<double> &errors, std::map<int, int> &streak, int step)
            {
                std::vector<int> keep;
                bool changed = false;
                for (std::size_t i = 0; i < active_.size(); ++i)
                {
                    const int k = active_[i];
                    const double threshold =
                        config_.exclude_db +
                        (static_cast<int>(regions_[k].linked_buildings.size()) > config_.dense_buildings ? config_.dense_extra_db : 0.0);
                    int &s = streak[k];
                    s = std::abs(errors[i]) > threshold ? s + 1 : 0;
                    if (s >= config_.patience)
                    {
                        report_.exclusions.push_back({k, pass_, step, threshold, errors[i]});
                        changed = true;
                    }
                    else
                        keep.push_back(k);
                }
                active_ = std::move(keep);
                return changed;
            }

            Scene &scene_;
            const MeasurementModel &model_;
            const std::vector<CalibrationRegion> &regions_;
            std::vector<ParameterGroup> &groups_;
            const CalibrationConfig &config_;
            CalibrationReport &report_;
            int pass_;
            std::mt19937_64 rng_;
            std::vector<int> active_;
            std::vector<int> free_;
        };
    }

    CalibrationReport calibrate(Scene &scene, const SystemPreset &preset, const MeasurementSet &measurements,
                                const CalibrationConfig &config, const TraceConfig &trace)
    {
        config.validate();
        CalibrationReport report;
        MeasurementSet set = measurements;
        sanitize_measurements(set, scene);
        report.malformed_rows = set.malformed_rows;
        report.dropped_samples = set.dropped;
        if (set.dropped > 0)
            report.warnings.push_back(std::to_string(set.dropped) + " measurement samples dropped");
        report.regions = aggregate_regions(set, scene, config.regions);
        if (report.regions.empty())
        {
            report.no_op = true;
            report.warnings.push_back("no region reaches the minimum sample count; scene unchanged");
            return report;
        }

        const int n = static_cast<int>(report.regions.size());
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        int holdout = static_cast<int>(std::floor(config.holdout_frac * n + 0.5));
        holdout = std::min(holdout, n - 1);
        if (holdout > 0)
        {
            std::mt19937_64 rng(config.seed);
            for (int i = n - 1; i > 0; --i)
                std::swap(order[i], order[std::uniform_int_distribution<int>(0, i)(rng)]);
        }
        report.holdout_regions.assign(order.begin(), order.begin() + holdout);
        report.training_regions.assign(order.begin() + holdout, order.end());
        std::sort(report.holdout_regions.begin(), report.holdout_regions.end());
        std::sort(report.training_regions.begin(), report.training_regions.end());

        std::vector<Vec2> centers;
        for (const auto &r : report.regions)
            centers.push_back(r.center());
        const MeasurementModel model(scene, preset, set, trace, centers, config.ue_height, config.parallel);
        for (int k = 0; k < n; ++k)
        {
            auto &r = report.regions[k];
            r.sector = model.probe_serving_sector(scene, k);
            if (r.sector < 0)
            {
                std::map<int, int> votes;
                for (int i : r.samples)
                    ++votes[set.samples[i].cell_id];
                r.sector = std::max_element(votes.begin(), votes.end(), [](auto &a, auto &b)
                                            { return a.second < b.second; })->first;
            }
        }

        const Scene initial = scene;
        std::vector<int> all(n);
        std::iota(all.begin(), all.end(), 0);
        report.pre_errors = region_errors(model, scene, report.regions, all);

        // buildings sharing the same set of linked training regions form one group
        std::map<int, std::vector<int>> links;
        for (int k : report.training_regions)
            for (int b : report.regions[k].linked_buildings)
                links[b].push_back(k);
        std::map<std::vector<int>, std::vector<int>> by_key;
        for (auto &[b, key] : links)
            by_key[key].push_back(b);
        for (auto &[key, buildings] : by_key)
        {
            ParameterGroup g;
            g.buildings = buildings;
            g.regions = key;
            g.initial = g.value = to_vector(scene.buildings[buildings.front()].material);
            g.trajectory.push_back(g.initial);
            report.groups.push_back(std::move(g));
        }
        std::sort(report.groups.begin(), report.groups.end(), [](const ParameterGroup &a, const ParameterGroup &b)
                  { return a.buildings.front() < b.buildings.front(); });
        for (int g = 0; g < static_cast<int>(report.groups.size()); ++g)
        {
            report.groups[g].id = g;
            for (int b : report.groups[g].buildings)
                scene.buildings[b].material = from_vector(report.groups[g].value);
        }

        std::set<int> sectors;
        for (int k : report.training_regions)
            sectors.insert(report.regions[k].sector);
        for (int sector : sectors)
        {
            PassSummary summary;
            summary.sector = sector;
            for (int k : report.training_regions)
                if (report.regions[k].sector == sector)
                    summary.regions.push_back(k);
            for (int g = 0; g < static_cast<int>(report.groups.size()); ++g)
            {
                if (report.groups[g].pass >= 0)
                    continue;
                const auto &key = report.groups[g].regions;
                if (std::any_of(summary.regions.begin(), summary.regions.end(), [&](int k)
                                { return std::binary_search(key.begin(), key.end(), k); }))
                    summary.groups.push_back(g);
            }
            const int pass = static_cast<int>(report.passes.size());
            if (!summary.groups.empty())
            {
                PassOptimizer opt(scene, model, report.regions, report.groups, config, report, pass);
                opt.run(summary);
            }
            report.passes.push_back(std::move(summary));
        }

        report.post_errors = region_errors(model, scene, report.regions, all);
        report.pre = error_stats(report.pre_errors);
        report.post = error_stats(report.post_errors);
        if (!report.holdout_regions.empty())
            report.holdout = validation_report(model, initial, scene, report.regions, report.holdout_regions);
        return report;
    }

    MeasurementSet synthesize_measurements(const Scene &truth, const SystemPreset &preset, const TraceConfig &trace,
                                           int per_cell, double noise_db, std::uint64_t seed, double cell_size,
                                           double ue_height)
    {
        if (per_cell < 1 || !(cell_size > 0.0) || !(noise_db >= 0.0))
            throw ValidationError("synthetic measurements: invalid parameters");
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const Area area = truth.coverage_area();
        MeasurementSet set;
        set.provenance = "synthetic";
        const int x0 = static_cast<int>(std::floor(area.min.x / cell_size)), x1 = static_cast<int>(std::ceil(area.max.x / cell_size));
        const int y0 = static_cast<int>(std::floor(area.min.y / cell_size)), y1 = static_cast<int>(std::ceil(area.max.y / cell_size));
        for (int iy = y0; iy < y1; ++iy)
            for (int ix = x0; ix < x1; ++ix)
            {
                const double lx = std::max(area.min.x, ix * cell_size), hx = std::min(area.max.x, (ix + 1) * cell_size);
                const double ly = std::max(area.min.y, iy * cell_size), hy = std::min(area.max.y, (iy + 1) * cell_size);
                if (hx - lx < 0.5 * cell_size || hy - ly < 0.5 * cell_size)
                    continue;
                int placed = 0;
                for (int tries = 0; placed < per_cell && tries < 20 * per_cell; ++tries)
                {
                    const Vec2 p{lx + unit(rng) * (hx - lx), ly + unit(rng) * (hy - ly)};
                    if (truth.building_at(p) >= 0)
                        continue;
                    set.samples.push_back({p, 0.0, 0});
                    ++placed;
                }
            }
        const MeasurementModel model(truth, preset, set, trace, {}, ue_height);
        const auto best = model.sample_best_server(truth);
        std::normal_distribution<double> noise(0.0, noise_db);
        MeasurementSet out;
        out.provenance = set.provenance;
        for (std::size_t i = 0; i < set.samples.size(); ++i)
        {
            const double e = noise_db > 0.0 ? noise(rng) : 0.0;
            if (best[i].second < 0)
                continue;
            out.samples.push_back({set.samples[i].position, best[i].first + e, best[i].second});
        }
        return out;
    }

    nlohmann::json error_stats_to_json(const ErrorStats &s)
    {
        return {{"count", s.count},
                {"mean_db", s.mean},
                {"median_db", s.median},
                {"std_db", s.std},
                {"histogram", {{"min_db", ErrorStats::kHistogramMin}, {"max_db", ErrorStats::kHistogramMax}, {"bin_db", ErrorStats::kBinWidth}, {"counts", s.histogram}, {"below", s.below}, {"above", s.above}}}};
    }

    nlohmann::json calibration_report_to_json(const CalibrationReport &r)
    {
        nlohmann::json j;
        j["status"] = r.no_op ? "no-op" : "calibrated";
        j["warnings"] = r.warnings;
        j["malformed_rows"] = r.malformed_rows;
        j["dropped_samples"] = r.dropped_samples;
        std::set<int> excluded;
        for (const auto &e : r.exclusions)
            excluded.insert(e.region);
        std::set<int> held(r.holdout_regions.begin(), r.holdout_regions.end());
        j["regions"] = nlohmann::json::array();
        for (int k = 0; k < static_cast<int>(r.regions.size()); ++k)
        {
            const auto &g = r.regions[k];
            nlohmann::json e{{"index", k},
                             {"cell", {g.ix, g.iy}},
                             {"min", {g.min.x, g.min.y}},
                             {"max", {g.max.x, g.max.y}},
                             {"samples", g.count()},
                             {"measured_mean_dbm", g.mean_rsrp_dbm},
                             {"linked_buildings", g.linked_buildings},
                             {"sector", g.sector},
                             {"holdout", held.count(k) > 0},
                             {"excluded", excluded.count(k) > 0}};
            if (k < static_cast<int>(r.pre_errors.size()))
                e["pre_error_db"] = r.pre_errors[k];
            if (k < static_cast<int>(r.post_errors.size()))
                e["post_error_db"] = r.post_errors[k];
            j["regions"].push_back(e);
        }
        j["groups"] = nlohmann::json::array();
        for (const auto &g : r.groups)
        {
            nlohmann::json traj = nlohmann::json::array();
            for (const auto &t : g.trajectory)
                traj.push_back({t[0], t[1], t[2]});
            j["groups"].push_back({{"id", g.id},
                                   {"buildings", g.buildings},
                                   {"regions", g.regions},
                                   {"pass", g.pass},
                                   {"initial", {{"eps_r", g.initial[0]}, {"sigma", g.initial[1]}, {"scattering", g.initial[2]}}},
                                   {"final", {{"eps_r", g.value[0]}, {"sigma", g.value[1]}, {"scattering", g.value[2]}}},
                                   {"trajectory", traj}});
        }
        j["passes"] = nlohmann::json::array();
        for (const auto &p : r.passes)
            j["passes"].push_back({{"sector", p.sector},
                                   {"regions", p.regions},
                                   {"groups", p.groups},
                                   {"steps", p.steps},
                                   {"initial_loss", p.initial_loss},
                                   {"best_loss", p.best_loss},
                                   {"best_loss_history", p.best_loss_history}});
        j["exclusions"] = nlohmann::json::array();
        for (const auto &e : r.exclusions)
            j["exclusions"].push_back({{"region", e.region},
                                       {"pass", e.pass},
                                       {"step", e.step},
                                       {"threshold_db", e.threshold_db},
                                       {"last_error_db", e.last_error_db}});
        j["exclusion_rule"] = "fixed threshold plus a density increment when many buildings link to a region (heuristic)";
        j["pre"] = error_stats_to_json(r.pre);
        j["post"] = error_stats_to_json(r.post);
        if (!r.holdout_regions.empty())
            j["holdout"] = {{"regions", r.holdout.regions},
                            {"pre", error_stats_to_json(r.holdout.pre)},
                            {"post", error_stats_to_json(r.holdout.post)}};
        return j;
    }
}
