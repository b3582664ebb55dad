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

#include "ristwin/path_cache.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <type_traits>

namespace ristwin
{
    namespace
    {
        constexpr char kMagic[8] = {'R', 'T', 'P', 'A', 'T', 'H', 'S', '1'};
        constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
        constexpr std::uint64_t kFnvPrime = 1099511628211ull;

        struct Hasher
        {
            std::uint64_t h = kFnvOffset;

            void bytes(const void *p, std::size_t n)
            {
                const auto *c = static_cast<const unsigned char *>(p);
                for (std::size_t i = 0; i < n; ++i)
                {
                    h ^= c[i];
                    h *= kFnvPrime;
                }
            }
            template <class T>
            void value(const T &v)
            {
                static_assert(std::is_trivially_copyable_v<T>);
                bytes(&v, sizeof v);
            }
        };

        class Writer
        {
        public:
            explicit Writer(std::ostream &out) : out_(out) {}
            template <class T>
            void put(const T &v)
            {
                static_assert(std::is_trivially_copyable_v<T>);
                out_.write(reinterpret_cast<const char *>(&v), sizeof v);
            }
            void vec(const Vec3 &v) { put(v.x), put(v.y), put(v.z); }

        private:
            std::ostream &out_;
        };

        class Reader
        {
        public:
            explicit Reader(std::istream &in) : in_(in) {}
            template <class T>
            T get()
            {
                T v{};
                in_.read(reinterpret_cast<char *>(&v), sizeof v);
                if (!in_)
                    throw Error("truncated path cache");
                return v;
            }
            Vec3 vec()
            {
                Vec3 v;
                v.x = get<double>(), v.y = get<double>(), v.z = get<double>();
                return v;
            }

        private:
            std::istream &in_;
        };
    }

    std::uint64_t path_cache_key(const Scene &scene, const Vec3 &tx, double frequency_hz, const TraceConfig &config,
                                 std::span<const Vec3> receivers)
    {
        Hasher h;
        h.bytes(kMagic, sizeof kMagic);
        const std::string doc = scene_to_json(scene).dump();
        h.bytes(doc.data(), doc.size());
        h.value(tx.x), h.value(tx.y), h.value(tx.z);
        h.value(frequency_hz);
        h.value(config.ray_count);
        h.value(config.max_bounces);
        h.value(config.enable_los), h.value(config.enable_specular), h.value(config.enable_scatter);
        h.value(static_cast<int>(config.scatter_model));
        h.value(config.lobe_exponent);
        h.value(config.capture_factor);
        h.value(config.scatter_patch_size);
        const std::uint64_t n = receivers.size();
        h.value(n);
        for (const auto &r : receivers)
            h.value(r.x), h.value(r.y), h.value(r.z);
        return h.h;
    }

    std::string path_cache_file(const std::string &dir, std::uint64_t key)
    {
        char name[40];
        std::snprintf(name, sizeof name, "%016llx.paths", static_cast<unsigned long long>(key));
        return (std::filesystem::path(dir) / name).string();
    }

    std::optional<PathSet> load_path_cache(const std::string &file, std::uint64_t key)
    {
        std::ifstream in(file, std::ios::binary);
        if (!in)
            return std::nullopt;
        try
        {
            Reader r(in);
            char magic[8];
            in.read(magic, sizeof magic);
            if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0 || r.get<std::uint64_t>() != key)
                return std::nullopt;
            PathSet set;
            set.per_receiver.resize(r.get<std::uint64_t>());
            for (auto &list : set.per_receiver)
            {
                list.resize(r.get<std::uint32_t>());
                for (auto &p : list)
                {
                    p.kind = static_cast<PathKind>(r.get<std::uint8_t>());
                    p.departure = r.vec();
                    p.arrival = r.vec();
                    p.total_length = r.get<double>();
                    const double re = r.get<double>(), im = r.get<double>();
                    p.amplitude = {re, im};
                    p.delay = r.get<double>();
                    p.tx_polarization = r.vec();
                    p.rx_polarization = r.vec();
                    p.interactions.resize(r.get<std::uint32_t>());
                    for (auto &it : p.interactions)
                    {
                        it.kind = static_cast<InteractionKind>(r.get<std::uint8_t>());
                        it.point = r.vec();
                        it.surface.building = r.get<std::int32_t>();
                        it.surface.face = r.get<std::int32_t>();
                        it.patch = r.get<std::int32_t>();
                        it.cos_incidence = r.get<double>();
                        it.te = r.vec();
                        it.tm_in = r.vec();
                        it.tm_out = r.vec();
                        it.scatter_weight = r.get<double>();
                        it.te_fraction = r.get<double>();
                    }
                }
            }
            return set;
        }
        catch (const Error &)
        {
            return std::nullopt;
        }
    }

    void save_path_cache(const std::string &file, std::uint64_t key, const PathSet &paths)
    {
        const std::filesystem::path target(file);
        if (target.has_parent_path())
            std::filesystem::create_directories(target.parent_path());
        const std::string tmp = file + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out)
                throw Error("cannot write path cache '" + tmp + "'");
            Writer w(out);
            out.write(kMagic, sizeof kMagic);
            w.put(key);
            w.put(static_cast<std::uint64_t>(paths.per_receiver.size()));
            for (const auto &list : paths.per_receiver)
            {
                w.put(static_cast<std::uint32_t>(list.size()));
                for (const auto &p : list)
                {
                    w.put(static_cast<std::uint8_t>(p.kind));
                    w.vec(p.departure);
                    w.vec(p.arrival);
                    w.put(p.total_length);
                    w.put(p.amplitude.real());
                    w.put(p.amplitude.imag());
                    w.put(p.delay);
                    w.vec(p.tx_polarization);
                    w.vec(p.rx_polarization);
                    w.put(static_cast<std::uint32_t>(p.interactions.size()));
                    for (const auto &it : p.interactions)
                    {
                        w.put(static_cast<std::uint8_t>(it.kind));
                        w.vec(it.point);
                        w.put(it.surface.building);
                        w.put(it.surface.face);
                        w.put(it.patch);
                        w.put(it.cos_incidence);
                        w.vec(it.te);
                        w.vec(it.tm_in);
                        w.vec(it.tm_out);
                        w.put(it.scatter_weight);
                        w.put(it.te_fraction);
                    }
                }
            }
            if (!out)
                throw Error("cannot write path cache '" + tmp + "'");
        }
        std::filesystem::rename(tmp, file);
    }

    std::string resolve_cache_dir(const std::string &explicit_dir)
    {
        if (!explicit_dir.empty())
            return explicit_dir;
        if (const char *env = std::getenv("RISTWIN_CACHE_DIR"))
            return env;
        return {};
    }
}
