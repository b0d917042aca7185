// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "modalsr/geometry.hpp"
#include "modalsr/metrics.hpp"
#include "modalsr/modal.hpp"
#include "modalsr/propagation.hpp"
#include "modalsr/solver.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace modalsr {

enum class MethodKind {
    SmaOnly, ///< raw IRLS on the SMA rows of the plane-wave dictionary
    Joint,   ///< raw IRLS on the concatenated SMA+LMA dictionary
    Modal,   ///< IRLS in the whitened K-mode SVD basis of the hybrid operator
};

struct Method {
    MethodKind kind = MethodKind::Modal;
    Eigen::Index modes = 16; ///< only for Modal

    /// "sma", "joint" or "modal-<K>"
    std::string name() const;
    static Method parse(const std::string& text);

    friend bool operator==(const Method&, const Method&) = default;
};

struct ExperimentConfig {
    std::vector<Method> methods;
    std::vector<std::size_t> source_counts;
    std::vector<double> distances_m;
    std::size_t trials = 10;
    std::vector<double> frequencies_hz;
    std::optional<RoomSpec> room = RoomSpec{}; ///< nullopt: free field
    double snr_db = 30.0;
    std::uint64_t master_seed = 1;
    std::size_t frames = 32;
    int grid_level = 3;
    HybridConfig array;
    IrlsParams irls;
    double min_separation_deg = 15.0;
    double wall_margin_m = 0.25;
    bool on_grid_sources = false; ///< snap drawn directions to the nearest grid vertex
    unsigned threads = 0; ///< 0: MODAL_SR_THREADS, else hardware concurrency
};

/// Desk-scale defaults: 10 trials, 200 Hz - 4 kHz in 200 Hz steps, the
/// reference room, 30 dB SNR, methods sma / joint / modal-9 / modal-16 / modal-25.
ExperimentConfig default_experiment();

void validate(const ExperimentConfig& config);

struct Condition {
    std::size_t source_count = 0;
    double distance_m = 0.0;
};

struct ResultRow {
    std::string method;
    double frequency_hz = 0.0;
    double distance_m = 0.0;
    std::size_t source_count = 0;
    std::size_t trial = 0;
    double mismatch = 0.0;
    double angular_error_deg = 0.0;
    double miss_rate = 0.0;
    bool failed = false;
    std::string error;
};

struct AggregateRow {
    std::string method;
    double frequency_hz = 0.0;
    double distance_m = 0.0;
    std::size_t source_count = 0;
    std::size_t samples = 0;
    double mean_mismatch = 0.0;
    double se_mismatch = 0.0;
    double mean_angular_error_deg = 0.0;
    double se_angular_error_deg = 0.0;
    double mean_miss_rate = 0.0;
    double se_miss_rate = 0.0;
};

struct ResultTable {
    std::vector<ResultRow> rows;
    std::vector<AggregateRow> aggregates;
};

/// Operators shared by every trial of one configuration: per-frequency
/// plane-wave matrices, their SMA rows, and the hybrid SVD.
class ExperimentContext {
public:
    explicit ExperimentContext(ExperimentConfig config);

    const ExperimentConfig& config() const noexcept { return config_; }
    const MicArray& array() const noexcept { return array_; }
    const std::shared_ptr<const DirectionGrid>& grid() const noexcept { return grid_; }
    const MismatchKernel& kernel() const noexcept { return *kernel_; }

    struct FrequencyOperators {
        TransferMatrix hybrid;
        TransferMatrix sma;
        ModalBasis basis;
    };
    const FrequencyOperators& at(std::size_t frequency_index) const { return operators_.at(frequency_index); }

    std::vector<std::size_t> sma_indices() const { return sma_indices_; }

private:
    ExperimentConfig config_;
    MicArray array_;
    std::vector<std::size_t> sma_indices_;
    std::shared_ptr<const DirectionGrid> grid_;
    std::unique_ptr<MismatchKernel> kernel_;
    std::vector<FrequencyOperators> operators_;
};

/// Seed of one (condition, trial) cell.
std::uint64_t cell_seed(std::uint64_t master_seed, const Condition& condition, std::size_t trial);

/// One trial: draw directions, synthesize every frequency, run every method,
/// score. Rows are ordered by frequency, then method. A method that throws
/// produces a flagged row instead of aborting the trial.
std::vector<ResultRow> run_trial(const ExperimentContext& context, const Condition& condition, std::size_t trial);

/// Every (condition x trial) cell, in parallel; rows are merged in cell order
/// (source count, distance, trial) regardless of completion order.
ResultTable run_monte_carlo(const ExperimentConfig& config);

/// Mean and standard error per (method, distance, source count, frequency).
std::vector<AggregateRow> aggregate(const std::vector<ResultRow>& rows);

using Series = std::vector<std::pair<double, double>>;

/// Centered boxcar over all points within +/- width/2 (truncated at the ends).
Series moving_average(const Series& series, double width_hz);

enum class Metric { Mismatch, AngularError, MissRate };

/// Per-frequency mean of `metric` for one method and distance, pooled over
/// source counts and trials.
Series frequency_curve(const std::vector<ResultRow>& rows, const std::string& method, double distance_m,
                       Metric metric);

/// Band average of `metric` per (source count, trial) cell, keyed in that order.
std::map<std::pair<std::size_t, std::size_t>, double>
cell_band_means(const std::vector<ResultRow>& rows, const std::string& method, double distance_m, Metric metric);

void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows);
void write_aggregates_csv(std::ostream& os, const std::vector<AggregateRow>& rows);

/// frequency_hz plus one smoothed column per method.
void write_figure_csv(std::ostream& os, const ExperimentConfig& config, const std::vector<ResultRow>& rows,
                      double distance_m, Metric metric, double smoothing_hz = 200.0);

/// Thread count from the config, MODAL_SR_THREADS, or the hardware.
unsigned resolve_threads(unsigned requested);

/// Shortest round-trip text for a double ("2.5", "0.1").
std::string format_number(double value);

} // namespace modalsr
