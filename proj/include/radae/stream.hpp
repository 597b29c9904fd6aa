#pragma once

// Labelled batch streams with time-varying class ratios.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "radae/nn.hpp"

namespace radae::stream {

class StreamError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class StreamMode { Stationary, Nonstationary, Abrupt };

std::string_view to_string(StreamMode mode) noexcept;
std::optional<StreamMode> parse_mode(std::string_view name) noexcept;

struct StreamSpec {
    std::size_t num_classes = 3;
    std::size_t dims = 16;
    std::size_t batch_size = 1000;
    std::size_t num_batches = 100;
    StreamMode mode = StreamMode::Nonstationary;
    double gp_length_scale = 0.0;  // <= 0 selects num_batches / 10
    double mask_noise_p = 0.1;
    // Abrupt mode: the first half of the classes dominates before batch
    // `switch_at` (1-based), the second half afterwards.
    std::size_t switch_at = 0;     // 0 selects num_batches / 2 + 1
    double abrupt_contrast = 4.0;  // logit gap between favoured and suppressed classes

    void validate() const;
    double length_scale() const noexcept;
    std::size_t switch_batch() const noexcept;
};

/// Examples grouped by class; every vector lies in [0,1]^D.
struct LabeledSource {
    std::size_t dims = 0;
    std::vector<Matrix> by_class;

    std::size_t num_classes() const noexcept { return by_class.size(); }
    std::size_t total() const noexcept;
    /// Throws StreamError when a class is empty or a row is mis-sized or out of range.
    void validate() const;
};

/// K curves of length T drawn from a zero-mean GP (unit signal variance, SE
/// kernel over t = 1..T). Row k of the result is curve k.
Matrix gp_sample_curves(std::size_t num_classes, std::size_t num_batches, double length_scale, Rng& rng);

/// Softmax over the classes of column t (0-based) of `curves`.
Vector class_ratios(const Matrix& curves, std::size_t t);

/// Integer counts summing to `total`: floors of total * ratio, with the leftover
/// units going to the largest fractional parts (ties to the lower class).
std::vector<std::size_t> largest_remainder_counts(std::span<const double> ratios, std::size_t total);

/// Per-batch class ratios of the stream described by `spec`, one row per batch.
/// Consumes random numbers only in non-stationary mode.
Matrix stream_ratios(const StreamSpec& spec, Rng& rng);

/// Resamples each coordinate from uniform[0,1] with probability p.
void mask_noise(std::span<double> x, double p, Rng& rng);

/// Builds the batch sequence: class counts from the ratios, examples drawn with
/// replacement from the source, noise-masked, and shuffled within the batch.
std::vector<BatchPtr> build_stream(const LabeledSource& source, const StreamSpec& spec, Rng& rng);

/// Clamped Gaussian blobs of width `sigma` around a uniform random prototype per class.
LabeledSource synth_dataset(std::size_t num_classes, std::size_t dims, std::size_t per_class,
                            double sigma, Rng& rng);

/// Reads an IDX image file (magic 0x00000803) and label file (0x00000801).
/// Pixels are scaled by 1/255; the class count is the largest label plus one.
LabeledSource load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Moves floor(fraction * smallest class size) examples of every class into a
/// shuffled, class-balanced test batch. Throws when that number is zero.
DataBatch split_test_set(LabeledSource& source, double fraction, Rng& rng);

/// Binary cache: uint32 K, D, p, T, then every row as D doubles and a uint32
/// label, batch after batch. Native byte order.
void save_stream(const std::filesystem::path& path, std::span<const BatchPtr> batches);
std::vector<BatchPtr> load_stream(const std::filesystem::path& path);

}  // namespace radae::stream
