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

#ifndef RISTWIN_RAYTRACER_HPP
#define RISTWIN_RAYTRACER_HPP

#include "ristwin/spatial_index.hpp"

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace ristwin
{
    using cplx = std::complex<double>;

    // i-th of n points of the spherical Fibonacci lattice (unit vector).
    Vec3 fibonacci_direction(std::int64_t i, std::int64_t n);

    // All n lattice directions. Throws ValidationError for n < 1.
    std::vector<Vec3> fibonacci_directions(std::int64_t n);

    enum class Polarization
    {
        TE,
        TM
    };

    // Fresnel reflection coefficient of a half-space with complex permittivity
    // eps_r - j*sigma/(2*pi*f*eps0). Angle measured from the surface normal.
    cplx fresnel_reflection(const ElectromagneticMaterial &material, double incidence_angle,
                            double frequency_hz, Polarization pol);

    enum class PathKind : std::uint8_t
    {
        LoS,
        Specular,
        Scatter
    };

    enum class InteractionKind : std::uint8_t
    {
        Specular,
        Scatter
    };

    struct Interaction
    {
        InteractionKind kind = InteractionKind::Specular;
        Vec3 point;
        SurfaceId surface;
        std::int32_t patch = -1;     // scatter: representative wall patch
        double cos_incidence = 1.0;  // scatter: power-weighted over patches
        // Specular: TE unit vector and the TM unit vectors before/after the bounce.
        Vec3 te;
        Vec3 tm_in;
        Vec3 tm_out;
        // Scatter: sum over visible patches of n*dOmega*f/d2^2 [1/m^2].
        double scatter_weight = 0.0;
        double te_fraction = 1.0; // share of incident power in the TE component
    };

    struct PropagationPath
    {
        PathKind kind = PathKind::LoS;
        std::vector<Interaction> interactions;
        Vec3 departure; // unit, leaving the transmitter
        Vec3 arrival;   // unit, propagation direction at the receiver
        double total_length = 0.0;
        cplx amplitude; // no antenna gains, no propagation phase
        double delay = 0.0;
        Vec3 tx_polarization;
        Vec3 rx_polarization;
    };

    enum class ScatterModel
    {
        Directive,
        Lambertian
    };

    struct TraceConfig
    {
        std::int64_t ray_count = 10'000'000;
        int max_bounces = 4;
        bool enable_los = true;
        bool enable_specular = true;
        bool enable_scatter = true;
        ScatterModel scatter_model = ScatterModel::Directive;
        double lobe_exponent = 4.0;
        // capture radius = capture_factor * L * sqrt(4*pi/ray_count)
        double capture_factor = 1.0;
        double scatter_patch_size = 2.0; // m
        int threads = 0;                 // 0 = OpenMP default

        void validate() const;
    };

    // Paths per receiver, each list sorted canonically.
    struct PathSet
    {
        std::vector<std::vector<PropagationPath>> per_receiver;

        std::size_t path_count() const;
    };

    // Shoot-and-bounce from `tx` toward a set of receiver points. Parallel
    // over launch directions; the result does not depend on the thread count.
    PathSet trace(const SpatialIndex &index, const Vec3 &tx, std::span<const Vec3> receivers,
                  double frequency_hz, const TraceConfig &config);

    // Single-threaded reference kept for equivalence testing.
    PathSet trace_serial(const SpatialIndex &index, const Vec3 &tx, std::span<const Vec3> receivers,
                         double frequency_hz, const TraceConfig &config);

    // Wall patch lit by first-hit launch rays; `point` is the hit of the
    // lowest-index ray that reached the patch.
    struct IlluminatedPatch
    {
        int surface_index = -1;
        std::int32_t patch = -1;
        std::int64_t rays = 0;
        Vec3 point;
    };

    // All wall patches lit directly from `tx`, sorted by (surface, patch).
    std::vector<IlluminatedPatch> illuminate_walls(const SpatialIndex &index, const Vec3 &tx, const TraceConfig &config);

    // Single-bounce scatter paths via the given patches, keeping those with an
    // unobstructed tx -> patch -> receiver route.
    std::vector<PropagationPath> scatter_paths_via(const SpatialIndex &index, const Vec3 &tx, const Vec3 &receiver,
                                                   const std::vector<IlluminatedPatch> &patches, double frequency_hz,
                                                   const TraceConfig &config);

    // Patch-level single-bounce scatter paths from `tx` to one receiver point,
    // one per illuminated wall patch with LoS on both segments, sorted by
    // (surface, patch).
    std::vector<PropagationPath> trace_scatter_points(const SpatialIndex &index, const Vec3 &tx, const Vec3 &receiver,
                                                      double frequency_hz, const TraceConfig &config);

    // Recomputes the path amplitude from its stored geometry with the
    // materials currently held by `scene`.
    cplx path_amplitude(const PropagationPath &path, const Scene &scene, double frequency_hz);

    struct ChannelContribution
    {
        cplx gain;
        Vec3 departure;
        Vec3 arrival;
    };

    ChannelContribution path_to_channel_contribution(const PropagationPath &path, double frequency_hz);

    // Directive lobe normalisation: integral over the outward hemisphere of
    // ((1 + cos psi)/2)^alpha, psi measured from the specular direction.
    double directive_lobe_norm(double cos_incidence, double alpha);
}

#endif
