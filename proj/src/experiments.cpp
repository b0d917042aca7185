// SPDX-License-Identifier: Apache-2.0
#include "modalsr/experiments.hpp"

#include "modalsr/error.hpp"
#include "modalsr/random.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

namespace modalsr {

std::string Method::name() const {
    switch (kind) {
    case MethodKind::SmaOnly: return "sma";
    case MethodKind::Joint: return "joint";
    case MethodKind::Modal: return "modal-" + std::to_string(modes);
    }
    return "unknown";
}

Method Method::parse(const std::string& text) {
    if (text == "sma" || text == "sma-only" || text == "sma_only")
        return {MethodKind::SmaOnly, 0};
    if (text == "joint")
        return {MethodKind::Joint, 0};
    for (std::string_view prefix : {"modal-", "modal_", "modal"}) {
        if (!text.starts_with(prefix) || text.size() == prefix.size())
            continue;
        const std::string digits = text.substr(prefix.size());
        Eigen::Index K = 0;
        const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), K);
        if (ec == std::errc() && ptr == digits.data() + digits.size() && K > 0)
            return {MethodKind::Modal, K};
    }
    fail(ErrorKind::InvalidConfig, "unknown method '" + text + "' (expected sma, joint or modal-<K>)");
}

ExperimentConfig default_experiment() {
    ExperimentConfig config;
    config.methods = {Method::parse("sma"), Method::parse("joint"), Method::parse("modal-9"),
                      Method::parse("modal-16"), Method::parse("modal-25")};
    config.source_counts = {2, 10};
    config.distances_m = {1.5, 2.5, 3.5};
    config.frequencies_hz = frequency_band(200.0, 4000.0, 200.0);
    return config;
}

void validate(const ExperimentConfig& config) {
    if (config.methods.empty())
        fail(ErrorKind::InvalidConfig, "experiment needs at least one method");
    if (config.source_counts.empty() || config.distances_m.empty() || config.frequencies_hz.empty())
        fail(ErrorKind::InvalidConfig, "experiment needs source counts, distances and frequencies");
    if (config.trials < 1)
        fail(ErrorKind::InvalidConfig, "experiment needs at least one trial");
    if (config.frames < 1)
        fail(ErrorKind::InvalidConfig, "experiment needs at least one frame");
    for (auto n : config.source_counts)
        if (n < 1)
            fail(ErrorKind::InvalidConfig, "source counts must be positive");
    for (double d : config.distances_m)
        if (!(d > 0.0))
            fail(ErrorKind::InvalidConfig, "distances must be positive");
    for (double f : config.frequencies_hz)
        if (!(f > 0.0))
            fail(ErrorKind::InvalidConfig, "frequencies must be positive");
    if (config.room)
        validate(*config.room);
    validate(config.irls);
}

unsigned resolve_threads(unsigned requested) {
    if (requested > 0)
        return requested;
    if (const char* env = std::getenv("MODAL_SR_THREADS")) {
        unsigned n = 0;
        const std::string_view s(env);
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
        if (ec == std::errc() && ptr == s.data() + s.size() && n > 0)
            return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

// Runs fn(i) for i in [0, count) on up to `threads` workers. The first
// exception is rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error)
                        error = std::current_exception();
                    next = count;
                }
            }
        });
    pool.clear();
    if (error)
        std::rethrow_exception(error);
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v)
        s += x;
    return v.empty() ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(v.size());
}

double standard_error(const std::vector<double>& v) {
    if (v.size() < 2)
        return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v)
        ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

double metric_of(const ResultRow& row, Metric metric) {
    switch (metric) {
    case Metric::Mismatch: return row.mismatch;
    case Metric::AngularError: return row.angular_error_deg;
    case Metric::MissRate: return row.miss_rate;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

bool same_distance(double a, double b) {
    return std::abs(a - b) < 1e-9;
}

} // namespace

ExperimentContext::ExperimentContext(ExperimentConfig config) : config_(std::move(config)) {
    validate(config_);
    array_ = build_hybrid(config_.array);
    sma_indices_ = array_.indices_with_label(kSmaLabel);
    grid_ = std::make_shared<const DirectionGrid>(build_direction_grid(config_.grid_level));
    kernel_ = std::make_unique<MismatchKernel>(*grid_);

    for (const auto& m : config_.methods)
        if (m.kind == MethodKind::Modal && (m.modes < 1 || m.modes > static_cast<Eigen::Index>(array_.size())))
            fail(ErrorKind::InvalidConfig, "method " + m.name() + " asks for more modes than microphones");

    operators_.resize(config_.frequencies_hz.size());
    parallel_for(operators_.size(), resolve_threads(config_.threads), [&](std::size_t i) {
        auto& ops = operators_[i];
        ops.hybrid = plane_wave_matrix(array_, *grid_, config_.frequencies_hz[i]);
        ops.sma = select_mics(ops.hybrid, sma_indices_);
        ops.basis = svd_decompose(ops.hybrid);
    });
}

std::uint64_t cell_seed(std::uint64_t master_seed, const Condition& condition, std::size_t trial) {
    return derive_seed(master_seed, {static_cast<std::uint64_t>(condition.source_count),
                                     static_cast<std::uint64_t>(std::llround(condition.distance_m * 1000.0)),
                                     static_cast<std::uint64_t>(trial)});
}

std::vector<ResultRow> run_trial(const ExperimentContext& context, const Condition& condition, std::size_t trial) {
    const auto& config = context.config();
    const std::uint64_t seed = cell_seed(config.master_seed, condition, trial);

    SceneSpec scene;
    scene.source_count = condition.source_count;
    scene.distance_m = condition.distance_m;
    scene.room = config.room;
    scene.frames = config.frames;
    scene.snr_db = config.snr_db;
    scene.seed = seed;
    scene.min_separation_deg = config.min_separation_deg;
    scene.wall_margin_m = config.wall_margin_m;
    if (config.on_grid_sources) {
        const auto& grid = *context.grid();
        for (const auto& d : draw_source_directions(scene, derive_seed(seed, {0xd1ULL})))
            scene.directions.push_back(grid.directions[grid.nearest(d)]);
    }

    const auto blocks = synthesize_scene(scene, context.array(), config.frequencies_hz, seed);
    std::vector<Vec3> truth;
    for (const auto& t : blocks.front().truth)
        truth.push_back(t.direction);

    std::vector<ResultRow> rows;
    rows.reserve(blocks.size() * config.methods.size());
    for (std::size_t fi = 0; fi < blocks.size(); ++fi) {
        const auto& ops = context.at(fi);
        const auto& block = blocks[fi];
        for (const auto& method : config.methods) {
            ResultRow row;
            row.method = method.name();
            row.frequency_hz = block.frequency_hz;
            row.distance_m = condition.distance_m;
            row.source_count = condition.source_count;
            row.trial = trial;
            try {
                SparseSolution solution;
                switch (method.kind) {
                case MethodKind::SmaOnly:
                    solution = recover_joint(select_mics(block, context.sma_indices()), ops.sma, config.irls);
                    break;
                case MethodKind::Joint:
                    solution = recover_joint(block, ops.hybrid, config.irls);
                    break;
                case MethodKind::Modal:
                    solution = recover(block, truncate(ops.basis, method.modes), *context.grid(), config.irls);
                    break;
                }
                EnergyMap map{context.grid(), solution.energy, row.method};
                const MapScore score = score_map(context.kernel(), map, truth);
                row.mismatch = score.mismatch;
                row.angular_error_deg = score.mean_angular_error_deg;
                row.miss_rate = score.miss_rate;
            } catch (const Error& e) {
                row.failed = true;
                row.error = std::string(to_string(e.kind())) + ": " + e.what();
                row.mismatch = row.angular_error_deg = row.miss_rate = std::numeric_limits<double>::quiet_NaN();
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

ResultTable run_monte_carlo(const ExperimentConfig& config) {
    const ExperimentContext context(config);

    struct Cell {
        Condition condition;
        std::size_t trial;
    };
    std::vector<Cell> cells;
    for (auto count : config.source_counts)
        for (double distance : config.distances_m)
            for (std::size_t t = 0; t < config.trials; ++t)
                cells.push_back({{count, distance}, t});

    std::vector<std::vector<ResultRow>> per_cell(cells.size());
    parallel_for(cells.size(), resolve_threads(config.threads), [&](std::size_t i) {
        per_cell[i] = run_trial(context, cells[i].condition, cells[i].trial);
    });

    ResultTable table;
    for (auto& rows : per_cell)
        std::move(rows.begin(), rows.end(), std::back_inserter(table.rows));
    table.aggregates = aggregate(table.rows);
    return table;
}

std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows) {
    struct Key {
        std::string method;
        long long distance_mm;
        std::size_t count;
        long long frequency_mhz;
        auto operator<=>(const Key&) const = default;
    };
    struct Acc {
        double frequency = 0.0;
        double distance = 0.0;
        std::vector<double> e, ae, miss;
    };
    std::map<Key, Acc> groups;
    for (const auto& r : rows) {
        Key key{r.method, std::llround(r.distance_m * 1000.0), r.source_count, std::llround(r.frequency_hz * 1000.0)};
        auto& acc = groups[key];
        acc.frequency = r.frequency_hz;
        acc.distance = r.distance_m;
        if (r.failed)
            continue;
        acc.e.push_back(r.mismatch);
        acc.ae.push_back(r.angular_error_deg);
        acc.miss.push_back(r.miss_rate);
    }

    std::vector<AggregateRow> out;
    out.reserve(groups.size());
    for (const auto& [key, acc] : groups) {
        AggregateRow a;
        a.method = key.method;
        a.frequency_hz = acc.frequency;
        a.distance_m = acc.distance;
        a.source_count = key.count;
        a.samples = acc.e.size();
        a.mean_mismatch = mean_of(acc.e);
        a.se_mismatch = standard_error(acc.e);
        a.mean_angular_error_deg = mean_of(acc.ae);
        a.se_angular_error_deg = standard_error(acc.ae);
        a.mean_miss_rate = mean_of(acc.miss);
        a.se_miss_rate = standard_error(acc.miss);
        out.push_back(std::move(a));
    }
    return out;
}

Series moving_average(const Series& series, double width_hz) {
    if (!(width_hz > 0.0))
        fail(ErrorKind::InvalidArgument, "moving-average width must be positive");
    const double half = 0.5 * width_hz;
    const double slack = 1e-9 * std::max(1.0, width_hz);
    Series out;
    out.reserve(series.size());
    for (const auto& [f, _] : series) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& [g, v] : series)
            if (std::abs(g - f) <= half + slack) {
                sum += v;
                ++n;
            }
        out.emplace_back(f, sum / static_cast<double>(n));
    }
    return out;
}

Series frequency_curve(const std::vector<ResultRow>& rows, const std::string& method, double distance_m,
                       Metric metric) {
    std::map<long long, std::pair<double, std::vector<double>>> by_freq;
    for (const auto& r : rows) {
        if (r.failed || r.method != method || !same_distance(r.distance_m, distance_m))
            continue;
        auto& slot = by_freq[std::llround(r.frequency_hz * 1000.0)];
        slot.first = r.frequency_hz;
        slot.second.push_back(metric_of(r, metric));
    }
    Series out;
    for (const auto& [_, slot] : by_freq)
        out.emplace_back(slot.first, mean_of(slot.second));
    return out;
}

std::map<std::pair<std::size_t, std::size_t>, double>
cell_band_means(const std::vector<ResultRow>& rows, const std::string& method, double distance_m, Metric metric) {
    std::map<std::pair<std::size_t, std::size_t>, std::vector<double>> cells;
    for (const auto& r : rows)
        if (!r.failed && r.method == method && same_distance(r.distance_m, distance_m))
            cells[{r.source_count, r.trial}].push_back(metric_of(r, metric));
    std::map<std::pair<std::size_t, std::size_t>, double> out;
    for (const auto& [key, values] : cells)
        out[key] = mean_of(values);
    return out;
}

std::string format_number(double value) {
    if (std::isnan(value))
        return "nan";
    if (std::isinf(value))
        return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
    os << "method,frequency_hz,distance_m,source_count,trial,mismatch,angular_error_deg,miss_rate,status\n";
    for (const auto& r : rows) {
        os << r.method << ',' << format_number(r.frequency_hz) << ',' << format_number(r.distance_m) << ','
           << r.source_count << ',' << r.trial << ',' << format_number(r.mismatch) << ','
           << format_number(r.angular_error_deg) << ',' << format_number(r.miss_rate) << ','
           << (r.failed ? "failed" : "ok") << '\n';
    }
}

void write_aggregates_csv(std::ostream& os, const std::vector<AggregateRow>& rows) {
    os << "method,frequency_hz,distance_m,source_count,samples,mean_mismatch,se_mismatch,"
          "mean_angular_error_deg,se_angular_error_deg,mean_miss_rate,se_miss_rate\n";
    for (const auto& a : rows) {
        os << a.method << ',' << format_number(a.frequency_hz) << ',' << format_number(a.distance_m) << ','
           << a.source_count << ',' << a.samples << ',' << format_number(a.mean_mismatch) << ','
           << format_number(a.se_mismatch) << ',' << format_number(a.mean_angular_error_deg) << ','
           << format_number(a.se_angular_error_deg) << ',' << format_number(a.mean_miss_rate) << ','
           << format_number(a.se_miss_rate) << '\n';
    }
}

void write_figure_csv(std::ostream& os, const ExperimentConfig& config, const std::vector<ResultRow>& rows,
                      double distance_m, Metric metric, double smoothing_hz) {
    std::vector<Series> curves;
    os << "frequency_hz";
    for (const auto& m : config.methods) {
        os << ',' << m.name();
        curves.push_back(moving_average(frequency_curve(rows, m.name(), distance_m, metric), smoothing_hz));
    }
    os << '\n';
    for (double f : config.frequencies_hz) {
        os << format_number(f);
        for (const auto& c : curves) {
            const auto it = std::find_if(c.begin(), c.end(), [&](const auto& p) { return std::abs(p.first - f) < 1e-9; });
            os << ',' << (it == c.end() ? std::string("nan") : format_number(it->second));
        }
        os << '\n';
    }
}

} // namespace modalsr
