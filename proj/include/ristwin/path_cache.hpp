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

#ifndef RISTWIN_PATH_CACHE_HPP
#define RISTWIN_PATH_CACHE_HPP

#include "ristwin/raytracer.hpp"

#include <optional>
#include <string>

namespace ristwin
{
    // FNV-1a over the scene, transmitter, frequency, trace settings that
    // affect results (not the thread count) and the receiver positions.
    std::uint64_t path_cache_key(const Scene &scene, const Vec3 &tx, double frequency_hz, const TraceConfig &config,
                                 std::span<const Vec3> receivers);

    std::string path_cache_file(const std::string &dir, std::uint64_t key);

    // Returns nothing when the file is missing, truncated or keyed differently.
    std::optional<PathSet> load_path_cache(const std::string &file, std::uint64_t key);
    // Written to a temporary name first, then renamed into place.
    void save_path_cache(const std::string &file, std::uint64_t key, const PathSet &paths);

    // Cache directory: explicit value, else $RISTWIN_CACHE_DIR, else empty (disabled).
    std::string resolve_cache_dir(const std::string &explicit_dir);
}

#endif
