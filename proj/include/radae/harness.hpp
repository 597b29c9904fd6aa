#pragma once

// Experiment driver: one sequential pass over a batch stream with a chosen
// structure-adaptation policy, per-batch trace records and a tail summary.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "radae/adapt.hpp"
#include "radae/midae.hpp"
#include "radae/nn.hpp"
#include "radae/pools.hpp"
#include "radae/rl.hpp"
#include "radae/stream.hpp"

namespace radae {

enum class Policy { Sdae, Midae, Radae };
std::string_view to_string(Policy policy) noexcept;
std::optional<Policy> parse_policy(std::string_view name) noexcept;

enum class DataSource { Synthetic, Idx, Cache };
std::string_view to_string(DataSource source) noexcept;
std::optional<DataSource> parse_source(std::string_view name) noexcept;

struct ExperimentConfig {
    // data
    stream::StreamSpec stream;
    DataSource source = DataSource::Synthetic;
    std::size_t per_class = 2000;  // synthetic examples per class before the test split
    double blob_sigma = 0.1;
    std::string idx_images;
    std::string idx_labels;
    std::string cache_path;  // stream cache; the test set lives at cache_path + ".test"
    double test_fraction = 0.2;

    // network
    std::vector<std::size_t> widths{32, 32, 32};
    double learning_rate = 0.2;
    double corruption = 0.2;
    std::size_t minibatch = 10;
    double lambda_hybrid = 0.2;
    GreedyOptions greedy;

    rl::ControllerConfig rl;

    std::size_t tau = 10000;
    double diverse_threshold = 0.7;

    MiDaeState midae;  // pool_threshold == 0 selects tau

    Policy policy = Policy::Radae;
    std::uint64_t seed = 1;
    std::string out;
    std::size_t last = 250;
    std::size_t pretrain_examples = 0;  // leading stream examples used for greedy pre-training

    /// Throws std::invalid_argument naming the offending key.
    void validate() const;
};

/// Independent generators derived from one seed. Every policy sees the same
/// stream, test set and initial parameters for the same seed.
struct SeedStreams {
    Rng data;
    Rng stream;
    Rng init;
    Rng train;
    Rng control;
    static SeedStreams from(std::uint64_t seed);
};

struct PreparedData {
    std::vector<BatchPtr> batches;
    DataBatch test_set;
};

/// Builds (or loads) the batch stream and the held-out test set.
PreparedData prepare_data(const ExperimentConfig& cfg, SeedStreams& seeds);
/// Writes the stream cache at `path` and the test set at `path` + ".test".
void save_prepared_data(const std::filesystem::path& path, const PreparedData& data);

struct TraceRecord {
    std::size_t batch = 0;
    // pool, increment, merge (controller), merge_increment (hard-pool event) or none
    std::string action = "none";
    long long delta = 0;            // signed change in layer-1 width made this batch
    std::vector<std::size_t> widths;
    double lg = 0.0;  // pre-training errors on this batch
    double lc = 0.0;
    std::optional<double> e_lcl;  // error on the next batch, before training on it
    double e_glb = 0.0;
    std::optional<double> reward;
    std::optional<std::array<double, kNumActions>> q;
    std::optional<double> kl;
    double wall_ms = 0.0;
};

inline constexpr const char* kTraceHeader =
    "batch,action,delta,widths,Lg,Lc,E_lcl,E_glb,reward,q_pool,q_increment,q_merge,kl,wall_ms";

void write_trace_header(std::ostream& out);
void write_trace_record(std::ostream& out, const TraceRecord& rec);
/// Parses a trace written by write_trace_*. Throws std::runtime_error with the
/// line number on malformed input.
std::vector<TraceRecord> read_trace(std::istream& in);

struct MeanStd {
    std::size_t count = 0;
    double mean = 0.0;
    double std = 0.0;  // population
};

struct Summary {
    MeanStd e_lcl;
    MeanStd e_glb;
};

/// Mean and standard deviation of both errors over the last `last` records
/// (missing E_lcl values are skipped).
Summary summarize(std::span<const TraceRecord> records, std::size_t last);
std::string format_summary(const Summary& s);

class OrderingViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Tracks which batches have been used for training so evaluation on an
/// already-seen batch can be detected.
class OrderingMonitor {
public:
    void mark_trained(std::size_t seq_id) { trained_.insert(seq_id); }
    bool trained(std::size_t seq_id) const { return trained_.contains(seq_id); }
    /// Throws OrderingViolation when `seq_id` was trained on.
    void require_unseen(std::size_t seq_id) const;

private:
    std::set<std::size_t> trained_;
};

/// Classification error on the next batch; it must not have been trained on.
double eval_local(const Network& net, const DataBatch& next, const OrderingMonitor& monitor);
/// Classification error over the held-out test set.
double eval_global(const Network& net, const DataBatch& test_set);

struct RunResult {
    std::vector<TraceRecord> records;
    Summary summary;
    Network final_net;
};

/// Runs one experiment on prepared data. Records are also streamed to `trace`
/// when given (header included).
RunResult run_experiment(const ExperimentConfig& cfg, const PreparedData& data, SeedStreams& seeds,
                         std::ostream* trace = nullptr);
/// Derives the seeds, prepares the data and runs.
RunResult run_experiment(const ExperimentConfig& cfg, std::ostream* trace = nullptr);

Network initial_network(const ExperimentConfig& cfg, std::size_t input_dim, std::size_t classes, Rng& rng);

}  // namespace radae
