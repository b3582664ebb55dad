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

namespace ristwin
{
    Vec3 fibonacci_direction(std::int64_t i, std::int64_t n)
    {
        // golden angle pi*(3 - sqrt 5); z sampled at cell centres
        static const double golden_angle = kPi * (3.0 - std::sqrt(5.0));
        const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        // reduce the angle before the trig calls; i * golden_angle loses
        // precision for i ~ 1e7
        const double turns = static_cast<double>(i) * (golden_angle / (2.0 * kPi));
        const double phi = 2.0 * kPi * (turns - std::floor(turns));
        return {r * std::cos(phi), r * std::sin(phi), z};
    }

    std::vector<Vec3> fibonacci_directions(std::int64_t n)
    {
        if (n < 1)
            throw ValidationError("fibonacci_directions: n must be >= 1");
        std::vector<Vec3> out;
        out.reserve(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i)
            out.push_back(fibonacci_direction(i, n));
        return out;
    }
}
