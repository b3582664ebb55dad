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

#include "ristwin/radio.hpp"

#include <benchmark/benchmark.h>

using namespace ristwin;

namespace
{
    const SystemPreset &preset() { return preset_by_name("4G"); }

    const Scene &canyon()
    {
        static const Scene s = load_scene(RISTWIN_DATA_DIR "/canyon.json", preset().frequency_hz());
        return s;
    }

    std::vector<Vec3> receivers()
    {
        std::vector<Vec3> rx;
        for (double x = -15.0; x < 80.0; x += 5.0)
            for (double y = -35.0; y < 30.0; y += 5.0)
                rx.push_back({x, y, 1.5});
        return rx;
    }

    template <bool Parallel>
    void trace_kernel(benchmark::State &state)
    {
        const SpatialIndex index(canyon());
        const auto rx = receivers();
        TraceConfig cfg;
        cfg.ray_count = state.range(0);
        const Vec3 tx = canyon().bs_sites[0].position;
        benchmark::DoNotOptimize(trace_serial(index, tx, rx, preset().frequency_hz(), cfg)); // warm-up
        for (auto _ : state)
        {
            auto ps = Parallel ? trace(index, tx, rx, preset().frequency_hz(), cfg)
                               : trace_serial(index, tx, rx, preset().frequency_hz(), cfg);
            benchmark::DoNotOptimize(ps);
        }
        state.SetItemsProcessed(state.iterations() * state.range(0));
    }

    template <bool Parallel>
    void coverage_kernel(benchmark::State &state)
    {
        TraceConfig cfg;
        cfg.ray_count = state.range(0);
        CoverageOptions opt;
        opt.parallel = Parallel;
        if (!Parallel)
            cfg.threads = 1;
        for (auto _ : state)
        {
            auto run = build_coverage(canyon(), preset(), cfg, opt);
            benchmark::DoNotOptimize(run);
        }
    }
}

BENCHMARK(trace_kernel<false>)->Name("trace/serial")->Arg(100000)->Arg(1000000)->Unit(benchmark::kMillisecond);
BENCHMARK(trace_kernel<true>)->Name("trace/openmp")->Arg(100000)->Arg(1000000)->Unit(benchmark::kMillisecond);
BENCHMARK(coverage_kernel<false>)->Name("coverage/serial")->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(coverage_kernel<true>)->Name("coverage/openmp")->Arg(100000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
