#pragma once

// Tied-weight denoising autoencoder layers stacked under a softmax output.

#include <cstddef>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "radae/kernels.hpp"
#include "radae/matrix.hpp"

namespace radae {

using Rng = std::mt19937_64;

/// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] inside log terms.
inline constexpr double kProbClamp = 1e-7;

struct LayerParams {
    Matrix W;      // hidden x input
    Vector b;      // hidden
    Vector b_rec;  // input (reconstruction bias)

    std::size_t hidden() const noexcept { return W.rows(); }
    std::size_t input_dim() const noexcept { return W.cols(); }
    bool consistent() const noexcept { return W.rows() == b.size() && W.cols() == b_rec.size(); }

    friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

/// A labelled batch: `inputs` is p x D in [0,1], `labels` is p x K one-hot.
struct DataBatch {
    std::size_t seq_id = 0;
    Matrix inputs;
    Matrix labels;

    std::size_t size() const noexcept { return inputs.rows(); }
    std::size_t dims() const noexcept { return inputs.cols(); }
    std::size_t classes() const noexcept { return labels.cols(); }
    std::size_t label_of(std::size_t i) const;
    /// Class frequencies (sums to 1).
    Vector class_histogram() const;
    /// Throws std::invalid_argument when a label row is not one-hot or an input
    /// leaves [0,1].
    void validate() const;

    /// Builds a batch from inputs and integer labels.
    static DataBatch from_labels(std::size_t seq_id, Matrix inputs,
                                 std::span<const std::size_t> labels, std::size_t classes);
};

using BatchPtr = std::shared_ptr<const DataBatch>;

struct Network {
    std::vector<LayerParams> layers;
    Matrix out_W;  // classes x top hidden
    Vector out_b;
    double learning_rate = 0.2;
    double corruption_p = 0.2;
    std::size_t minibatch_size = 10;

    /// Hidden layers use uniform(+-4 sqrt(6 / (fan_in + fan_out))) weights; the
    /// softmax layer and all biases start at zero.
    static Network create(std::size_t input_dim, std::span<const std::size_t> widths,
                          std::size_t classes, Rng& rng);

    std::size_t input_dim() const noexcept { return layers.empty() ? 0 : layers.front().input_dim(); }
    std::size_t num_classes() const noexcept { return out_W.rows(); }
    std::vector<std::size_t> widths() const;
    /// Dimension chaining holds through every layer and into the output layer.
    bool well_formed() const noexcept;
    bool all_finite() const noexcept;

    friend bool operator==(const Network&, const Network&) = default;
};

/// Uniform initialisation bound for a sigmoid layer.
double sigmoid_init_bound(std::size_t fan_in, std::size_t fan_out);

Vector sigmoid(std::span<const double> v);
Vector softmax(std::span<const double> logits);
std::size_t argmax(std::span<const double> v);

/// Zeroes each coordinate independently with probability p. One uniform draw is
/// consumed per coordinate regardless of p.
Vector corrupt(std::span<const double> x, double p, Rng& rng);
void corrupt_in_place(Matrix& m, double p, Rng& rng);

Vector encode(const LayerParams& layer, std::span<const double> x);
Vector decode(const LayerParams& layer, std::span<const double> h);

/// Binary cross-entropy of a reconstruction, summed over coordinates.
double generative_loss(std::span<const double> x, std::span<const double> x_hat);
/// Binary cross-entropy of a softmax output against a one-hot label.
double discriminative_loss(std::span<const double> y, std::span<const double> y_hat);

Vector predict(const Network& net, std::span<const double> x);
Matrix predict_batch(const Network& net, const Matrix& inputs);

/// Clean full-stack reconstruction (encode through every layer, decode back down).
Matrix reconstruct_batch(const Network& net, const Matrix& inputs);
/// Per-example generative loss of the full-stack reconstruction.
Vector per_example_generative(const Network& net, const Matrix& inputs);

struct BatchErrors {
    double generative = 0.0;      // mean per-example L_gen
    double classification = 0.0;  // misclassification fraction
};
BatchErrors batch_errors(const Network& net, const DataBatch& batch);

// --- gradients -------------------------------------------------------------

struct LayerGrad {
    Matrix W;
    Vector b;
    Vector b_rec;
    static LayerGrad zeros_like(const LayerParams& layer);
};

struct NetworkGrad {
    std::vector<LayerGrad> layers;
    Matrix out_W;
    Vector out_b;
    static NetworkGrad zeros_like(const Network& net);
};

/// Mean denoising loss of one layer over the rows of `clean`, reconstructing
/// from `corrupted`. Accumulates the gradient into `grad` when non-null.
double dae_loss_grad(const LayerParams& layer, const Matrix& clean, const Matrix& corrupted,
                     LayerGrad* grad);

/// mean(L_disc) + lambda * mean(L_gen) over the rows of `inputs`, with L_gen taken
/// on the clean full-stack reconstruction. Accumulates into `grad` when non-null.
double hybrid_loss_grad(const Network& net, const Matrix& inputs, const Matrix& labels,
                        double lambda, NetworkGrad* grad);

/// params -= step * grad
void sgd_step(LayerParams& layer, const LayerGrad& grad, double step);
void sgd_step(Network& net, const NetworkGrad& grad, double step);

/// Rows [begin, end) of `m`.
Matrix row_slice(const Matrix& m, std::size_t begin, std::size_t end);

/// Clean inputs to hidden layer `layer_index` (layer 0 receives the raw inputs).
Matrix layer_inputs(const Network& net, std::size_t layer_index, const Matrix& inputs);

// --- training --------------------------------------------------------------

/// Greedy denoising pre-training of one layer over `batches`. Returns the mean
/// per-example loss observed during each epoch.
std::vector<double> pretrain_layer(Network& net, std::size_t layer_index,
                                   std::span<const BatchPtr> batches, int epochs, Rng& rng);

/// One minibatch pass over `batch` on the hybrid objective.
void finetune(Network& net, const DataBatch& batch, double lambda_hybrid);

}  // namespace radae
