#pragma once

#include <aipid/config.hpp>
#include <aipid/metrics.hpp>
#include <aipid/simloop.hpp>

#include <cstdlib>
#include <future>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace aipid {

struct SweepRow {
    double value = 0.0;
    Metrics metrics;
};

/// Worker cap for sweeps: AIPID_SWEEP_THREADS if set, else hardware concurrency.
inline std::size_t sweep_parallelism() {
    if (const char *env = std::getenv("AIPID_SWEEP_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n >= 1) {
            return static_cast<std::size_t>(n);
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// One run per value with everything else (seeds included) held fixed.
/// Rows come back in input order regardless of completion order.
inline std::vector<SweepRow> sweep(const ScenarioConfig &base, std::string_view param_path,
                                   const std::vector<double> &values, std::size_t max_workers = sweep_parallelism()) {
    // Resolve the path once up front so a bad path fails even for an empty sweep.
    {
        Json probe = config_to_json(base);
        Json *leaf = detail::resolve_path(probe, param_path);
        if (leaf == nullptr || !(leaf->is_number() || leaf->is_null())) {
            throw UnknownParamPath(std::string(param_path));
        }
    }
    std::vector<ScenarioConfig> configs;
    configs.reserve(values.size());
    for (double v : values) {
        configs.push_back(with_param(base, param_path, Json(v)));
    }

    std::vector<SweepRow> rows(values.size());
    auto run_one = [&](std::size_t i) {
        const Trajectory traj = run_closed_loop(configs[i]);
        rows[i] = SweepRow{values[i], scenario_metrics(configs[i], traj)};
    };

    const std::size_t workers = std::max<std::size_t>(1, std::min(max_workers, values.size()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            run_one(i);
        }
        return rows;
    }
    for (std::size_t begin = 0; begin < values.size(); begin += workers) {
        std::vector<std::future<void>> batch;
        for (std::size_t i = begin; i < std::min(values.size(), begin + workers); ++i) {
            batch.push_back(std::async(std::launch::async, run_one, i));
        }
        for (auto &f : batch) {
            f.get();
        }
    }
    return rows;
}

} // namespace aipid
