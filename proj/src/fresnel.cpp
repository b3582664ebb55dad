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
    cplx fresnel_reflection(const ElectromagneticMaterial &material, double incidence_angle,
                            double frequency_hz, Polarization pol)
    {
        const cplx eps(material.relative_permittivity,
                       -material.conductivity / (2.0 * kPi * frequency_hz * kVacuumPermittivity));
        const double c = std::cos(incidence_angle);
        const double s2 = std::sin(incidence_angle) * std::sin(incidence_angle);
        const cplx root = std::sqrt(eps - s2);
        if (pol == Polarization::TE)
            return (c - root) / (c + root);
        return (eps * c - root) / (eps * c + root);
    }
}
