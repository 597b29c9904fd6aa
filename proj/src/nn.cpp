#include "radae/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace radae {

namespace {

double clamp_prob(double v) { return std::clamp(v, kProbClamp, 1.0 - kProbClamp); }

double bce_row(std::span<const double> target, std::span<const double> pred) {
    double sum = 0.0;
    for (std::size_t j = 0; j < target.size(); ++j) {
        const double q = clamp_prob(pred[j]);
        sum -= target[j] * std::log(q) + (1.0 - target[j]) * std::log(1.0 - q);
    }
    return sum;
}

void require_same(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw DimensionError(std::string(what) + ": expected " + std::to_string(a) +
                                     ", got " + std::to_string(b));
}

void fill_uniform(Matrix& m, double bound, Rng& rng) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : m.flat()) v = dist(rng);
}

// Forward activations for every hidden layer; acts[0] is the input.
std::vector<Matrix> forward_hidden(const Network& net, const Matrix& inputs) {
    std::vector<Matrix> acts;
    acts.reserve(net.layers.size() + 1);
    acts.push_back(inputs);
    for (const auto& layer : net.layers) {
        Matrix h(inputs.rows(), layer.hidden());
        kernels::gemm_nt(acts.back(), layer.W, h);
        kernels::bias_sigmoid(h, layer.b);
        acts.push_back(std::move(h));
    }
    return acts;
}

Matrix softmax_rows(const Matrix& top, const Network& net) {
    Matrix out(top.rows(), net.num_classes());
    kernels::gemm_nt(top, net.out_W, out);
    for (std::size_t i = 0; i < out.rows(); ++i) {
        auto r = out.row(i);
        for (std::size_t k = 0; k < r.size(); ++k) r[k] += net.out_b[k];
        const Vector p = softmax(r);
        std::copy(p.begin(), p.end(), r.begin());
    }
    return out;
}

// Decoder activations: recon[l] reconstructs the input of layer l; recon[L] is the top code.
std::vector<Matrix> decode_stack(const Network& net, const Matrix& top) {
    const std::size_t depth = net.layers.size();
    std::vector<Matrix> recon(depth + 1);
    recon[depth] = top;
    for (std::size_t l = depth; l-- > 0;) {
        const auto& layer = net.layers[l];
        Matrix r(top.rows(), layer.input_dim());
        kernels::gemm_nn(recon[l + 1], layer.W, r);
        kernels::bias_sigmoid(r, layer.b_rec);
        recon[l] = std::move(r);
    }
    return recon;
}

}  // namespace

// --- DataBatch -------------------------------------------------------------

std::size_t DataBatch::label_of(std::size_t i) const { return argmax(labels.row(i)); }

Vector DataBatch::class_histogram() const {
    if (size() == 0) throw std::invalid_argument("class_histogram: empty batch");
    Vector hist(classes(), 0.0);
    for (std::size_t i = 0; i < size(); ++i) hist[label_of(i)] += 1.0;
    for (double& h : hist) h /= static_cast<double>(size());
    return hist;
}

void DataBatch::validate() const {
    require_same(inputs.rows(), labels.rows(), "DataBatch rows");
    for (std::size_t i = 0; i < size(); ++i) {
        double sum = 0.0;
        for (double y : labels.row(i)) {
            if (y != 0.0 && y != 1.0) throw std::invalid_argument("DataBatch: label not binary");
            sum += y;
        }
        if (sum != 1.0) throw std::invalid_argument("DataBatch: label row not one-hot");
        for (double x : inputs.row(i))
            if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("DataBatch: input outside [0,1]");
    }
}

DataBatch DataBatch::from_labels(std::size_t seq_id, Matrix inputs,
                                 std::span<const std::size_t> labels, std::size_t classes) {
    require_same(inputs.rows(), labels.size(), "DataBatch::from_labels");
    DataBatch batch;
    batch.seq_id = seq_id;
    batch.labels = Matrix(labels.size(), classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= classes) throw std::invalid_argument("DataBatch::from_labels: label out of range");
        batch.labels(i, labels[i]) = 1.0;
    }
    batch.inputs = std::move(inputs);
    return batch;
}

// --- Network ---------------------------------------------------------------

double sigmoid_init_bound(std::size_t fan_in, std::size_t fan_out) {
    return 4.0 * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

Network Network::create(std::size_t input_dim, std::span<const std::size_t> widths,
                        std::size_t classes, Rng& rng) {
    if (input_dim == 0 || widths.empty() || classes < 2)
        throw std::invalid_argument("Network::create: need input_dim > 0, >= 1 layer, >= 2 classes");
    Network net;
    std::size_t in = input_dim;
    for (std::size_t h : widths) {
        if (h == 0) throw std::invalid_argument("Network::create: zero-width layer");
        LayerParams layer{Matrix(h, in), Vector(h, 0.0), Vector(in, 0.0)};
        fill_uniform(layer.W, sigmoid_init_bound(in, h), rng);
        net.layers.push_back(std::move(layer));
        in = h;
    }
    net.out_W = Matrix(classes, in);
    net.out_b = Vector(classes, 0.0);
    return net;
}

std::vector<std::size_t> Network::widths() const {
    std::vector<std::size_t> w;
    for (const auto& l : layers) w.push_back(l.hidden());
    return w;
}

bool Network::well_formed() const noexcept {
    if (layers.empty()) return false;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (!layers[l].consistent()) return false;
        if (l > 0 && layers[l].input_dim() != layers[l - 1].hidden()) return false;
    }
    return out_W.cols() == layers.back().hidden() && out_W.rows() == out_b.size();
}

bool Network::all_finite() const noexcept {
    auto finite = [](std::span<const double> v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    for (const auto& l : layers)
        if (!finite(l.W.flat()) || !finite(l.b) || !finite(l.b_rec)) return false;
    return finite(out_W.flat()) && finite(out_b);
}

// --- elementwise -----------------------------------------------------------

Vector sigmoid(std::span<const double> v) {
    Vector out(v.size());
    std::transform(v.begin(), v.end(), out.begin(), [](double s) { return radae::sigmoid(s); });
    return out;
}

Vector softmax(std::span<const double> logits) {
    Vector out(logits.size());
    if (logits.empty()) return out;
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        out[k] = std::exp(logits[k] - mx);
        sum += out[k];
    }
    for (double& v : out) v /= sum;
    return out;
}

std::size_t argmax(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < v.size(); ++k)
        if (v[k] > v[best]) best = k;
    return best;
}

Vector corrupt(std::span<const double> x, double p, Rng& rng) {
    Vector out(x.begin(), x.end());
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& v : out)
        if (u(rng) < p) v = 0.0;
    return out;
}

void corrupt_in_place(Matrix& m, double p, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& v : m.flat())
        if (u(rng) < p) v = 0.0;
}

Vector encode(const LayerParams& layer, std::span<const double> x) {
    require_same(layer.input_dim(), x.size(), "encode");
    Vector h(layer.hidden());
    for (std::size_t i = 0; i < h.size(); ++i) {
        auto w = layer.W.row(i);
        h[i] = radae::sigmoid(std::inner_product(w.begin(), w.end(), x.begin(), 0.0) + layer.b[i]);
    }
    return h;
}

Vector decode(const LayerParams& layer, std::span<const double> h) {
    require_same(layer.hidden(), h.size(), "decode");
    Vector z(layer.b_rec.begin(), layer.b_rec.end());
    for (std::size_t i = 0; i < h.size(); ++i) {
        auto w = layer.W.row(i);
        for (std::size_t j = 0; j < z.size(); ++j) z[j] += w[j] * h[i];
    }
    return sigmoid(z);
}

double generative_loss(std::span<const double> x, std::span<const double> x_hat) {
    require_same(x.size(), x_hat.size(), "generative_loss");
    return bce_row(x, x_hat);
}

double discriminative_loss(std::span<const double> y, std::span<const double> y_hat) {
    require_same(y.size(), y_hat.size(), "discriminative_loss");
    return bce_row(y, y_hat);
}

// --- inference -------------------------------------------------------------

Vector predict(const Network& net, std::span<const double> x) {
    require_same(net.input_dim(), x.size(), "predict");
    Vector h(x.begin(), x.end());
    for (const auto& layer : net.layers) h = encode(layer, h);
    Vector logits(net.out_b);
    for (std::size_t k = 0; k < logits.size(); ++k) {
        auto w = net.out_W.row(k);
        logits[k] += std::inner_product(w.begin(), w.end(), h.begin(), 0.0);
    }
    return softmax(logits);
}

Matrix predict_batch(const Network& net, const Matrix& inputs) {
    require_same(net.input_dim(), inputs.cols(), "predict_batch");
    auto acts = forward_hidden(net, inputs);
    return softmax_rows(acts.back(), net);
}

Matrix reconstruct_batch(const Network& net, const Matrix& inputs) {
    require_same(net.input_dim(), inputs.cols(), "reconstruct_batch");
    auto acts = forward_hidden(net, inputs);
    return decode_stack(net, acts.back()).front();
}

Vector per_example_generative(const Network& net, const Matrix& inputs) {
    const Matrix recon = reconstruct_batch(net, inputs);
    Vector losses(inputs.rows());
    for (std::size_t i = 0; i < inputs.rows(); ++i) losses[i] = bce_row(inputs.row(i), recon.row(i));
    return losses;
}

BatchErrors batch_errors(const Network& net, const DataBatch& batch) {
    if (batch.size() == 0) throw std::invalid_argument("batch_errors: empty batch");
    require_same(net.num_classes(), batch.classes(), "batch_errors classes");
    auto acts = forward_hidden(net, batch.inputs);
    const Matrix probs = softmax_rows(acts.back(), net);
    const Matrix recon = decode_stack(net, acts.back()).front();
    double gen = 0.0;
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        gen += bce_row(batch.inputs.row(i), recon.row(i));
        if (argmax(probs.row(i)) != batch.label_of(i)) ++wrong;
    }
    const double p = static_cast<double>(batch.size());
    return {gen / p, static_cast<double>(wrong) / p};
}

// --- gradients -------------------------------------------------------------

LayerGrad LayerGrad::zeros_like(const LayerParams& layer) {
    return {Matrix(layer.W.rows(), layer.W.cols()), Vector(layer.b.size(), 0.0),
            Vector(layer.b_rec.size(), 0.0)};
}

NetworkGrad NetworkGrad::zeros_like(const Network& net) {
    NetworkGrad g;
    for (const auto& l : net.layers) g.layers.push_back(LayerGrad::zeros_like(l));
    g.out_W = Matrix(net.out_W.rows(), net.out_W.cols());
    g.out_b = Vector(net.out_b.size(), 0.0);
    return g;
}

double dae_loss_grad(const LayerParams& layer, const Matrix& clean, const Matrix& corrupted,
                     LayerGrad* grad) {
    require_same(layer.input_dim(), clean.cols(), "dae_loss_grad");
    require_same(clean.rows(), corrupted.rows(), "dae_loss_grad rows");
    const std::size_t m = clean.rows();
    if (m == 0) return 0.0;

    Matrix h(m, layer.hidden());
    kernels::gemm_nt(corrupted, layer.W, h);
    kernels::bias_sigmoid(h, layer.b);
    Matrix recon(m, layer.input_dim());
    kernels::gemm_nn(h, layer.W, recon);
    kernels::bias_sigmoid(recon, layer.b_rec);

    double loss = 0.0;
    for (std::size_t i = 0; i < m; ++i) loss += bce_row(clean.row(i), recon.row(i));
    const double inv_m = 1.0 / static_cast<double>(m);
    if (grad == nullptr) return loss * inv_m;

    Matrix d_out(m, layer.input_dim());
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < d_out.cols(); ++j) d_out(i, j) = (recon(i, j) - clean(i, j)) * inv_m;
    kernels::column_sums_acc(d_out, grad->b_rec);
    kernels::gemm_tn_acc(h, d_out, grad->W);

    Matrix d_h(m, layer.hidden());
    kernels::gemm_nt(d_out, layer.W, d_h);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < d_h.cols(); ++j) d_h(i, j) *= h(i, j) * (1.0 - h(i, j));
    kernels::gemm_tn_acc(d_h, corrupted, grad->W);
    kernels::column_sums_acc(d_h, grad->b);
    return loss * inv_m;
}

double hybrid_loss_grad(const Network& net, const Matrix& inputs, const Matrix& labels,
                        double lambda, NetworkGrad* grad) {
    require_same(net.input_dim(), inputs.cols(), "hybrid_loss_grad inputs");
    require_same(net.num_classes(), labels.cols(), "hybrid_loss_grad labels");
    require_same(inputs.rows(), labels.rows(), "hybrid_loss_grad rows");
    const std::size_t m = inputs.rows();
    if (m == 0) return 0.0;
    const std::size_t depth = net.layers.size();
    const double inv_m = 1.0 / static_cast<double>(m);

    auto acts = forward_hidden(net, inputs);
    const Matrix probs = softmax_rows(acts.back(), net);
    const bool generative = lambda != 0.0;
    std::vector<Matrix> recon;
    if (generative) recon = decode_stack(net, acts.back());

    double disc = 0.0;
    double gen = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        disc += bce_row(labels.row(i), probs.row(i));
        if (generative) gen += bce_row(inputs.row(i), recon.front().row(i));
    }
    const double objective = disc * inv_m + lambda * gen * inv_m;
    if (grad == nullptr) return objective;

    // Softmax layer: dL/dlogit_j = p_j (g_j - sum_k p_k g_k), g = dL/dp.
    const std::size_t classes = net.num_classes();
    Matrix d_logits(m, classes);
    for (std::size_t i = 0; i < m; ++i) {
        auto p = probs.row(i);
        auto y = labels.row(i);
        Vector g(classes);
        double dot = 0.0;
        for (std::size_t k = 0; k < classes; ++k) {
            const double q = clamp_prob(p[k]);
            g[k] = -y[k] / q + (1.0 - y[k]) / (1.0 - q);
            dot += p[k] * g[k];
        }
        for (std::size_t k = 0; k < classes; ++k) d_logits(i, k) = p[k] * (g[k] - dot) * inv_m;
    }
    kernels::gemm_tn_acc(d_logits, acts.back(), grad->out_W);
    kernels::column_sums_acc(d_logits, grad->out_b);
    Matrix d_top(m, acts.back().cols());
    kernels::gemm_nn(d_logits, net.out_W, d_top);

    if (generative) {
        // Decoder chain, bottom (reconstructed input) to top code.
        Matrix delta(m, net.input_dim());
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < delta.cols(); ++j)
                delta(i, j) = lambda * (recon[0](i, j) - inputs(i, j)) * inv_m;
        for (std::size_t l = 0; l < depth; ++l) {
            const auto& layer = net.layers[l];
            auto& g = grad->layers[l];
            kernels::column_sums_acc(delta, g.b_rec);
            kernels::gemm_tn_acc(recon[l + 1], delta, g.W);
            Matrix d_code(m, layer.hidden());
            kernels::gemm_nt(delta, layer.W, d_code);
            if (l + 1 == depth) {
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < d_code.cols(); ++j) d_top(i, j) += d_code(i, j);
            } else {
                const Matrix& r = recon[l + 1];
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < d_code.cols(); ++j)
                        d_code(i, j) *= r(i, j) * (1.0 - r(i, j));
                delta = std::move(d_code);
            }
        }
    }

    // Encoder chain, top to bottom.
    Matrix d_h = std::move(d_top);
    for (std::size_t l = depth; l-- > 0;) {
        const Matrix& h = acts[l + 1];
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < d_h.cols(); ++j) d_h(i, j) *= h(i, j) * (1.0 - h(i, j));
        auto& g = grad->layers[l];
        kernels::gemm_tn_acc(d_h, acts[l], g.W);
        kernels::column_sums_acc(d_h, g.b);
        if (l > 0) {
            Matrix below(m, net.layers[l].input_dim());
            kernels::gemm_nn(d_h, net.layers[l].W, below);
            d_h = std::move(below);
        }
    }
    return objective;
}

void sgd_step(LayerParams& layer, const LayerGrad& grad, double step) {
    auto w = layer.W.flat();
    auto gw = grad.W.flat();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= step * gw[i];
    for (std::size_t i = 0; i < layer.b.size(); ++i) layer.b[i] -= step * grad.b[i];
    for (std::size_t i = 0; i < layer.b_rec.size(); ++i) layer.b_rec[i] -= step * grad.b_rec[i];
}

void sgd_step(Network& net, const NetworkGrad& grad, double step) {
    for (std::size_t l = 0; l < net.layers.size(); ++l) sgd_step(net.layers[l], grad.layers[l], step);
    auto w = net.out_W.flat();
    auto gw = grad.out_W.flat();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= step * gw[i];
    for (std::size_t i = 0; i < net.out_b.size(); ++i) net.out_b[i] -= step * grad.out_b[i];
}

Matrix row_slice(const Matrix& m, std::size_t begin, std::size_t end) {
    Matrix out(end - begin, m.cols());
    std::copy(m.data() + begin * m.cols(), m.data() + end * m.cols(), out.data());
    return out;
}

Matrix layer_inputs(const Network& net, std::size_t layer_index, const Matrix& inputs) {
    if (layer_index >= net.layers.size()) throw std::out_of_range("layer_inputs: layer index");
    require_same(net.input_dim(), inputs.cols(), "layer_inputs");
    Matrix x = inputs;
    for (std::size_t l = 0; l < layer_index; ++l) {
        Matrix h(x.rows(), net.layers[l].hidden());
        kernels::gemm_nt(x, net.layers[l].W, h);
        kernels::bias_sigmoid(h, net.layers[l].b);
        x = std::move(h);
    }
    return x;
}

// --- training --------------------------------------------------------------

std::vector<double> pretrain_layer(Network& net, std::size_t layer_index,
                                   std::span<const BatchPtr> batches, int epochs, Rng& rng) {
    if (batches.empty()) throw std::invalid_argument("pretrain_layer: no batches");
    if (layer_index >= net.layers.size()) throw std::out_of_range("pretrain_layer: layer index");
    std::vector<Matrix> inputs;
    for (const auto& b : batches) inputs.push_back(layer_inputs(net, layer_index, b->inputs));

    auto& layer = net.layers[layer_index];
    const std::size_t mb = std::max<std::size_t>(1, net.minibatch_size);
    std::vector<double> epoch_loss;
    for (int e = 0; e < epochs; ++e) {
        double total = 0.0;
        std::size_t count = 0;
        for (const Matrix& x : inputs) {
            for (std::size_t begin = 0; begin < x.rows(); begin += mb) {
                const std::size_t end = std::min(x.rows(), begin + mb);
                Matrix clean = row_slice(x, begin, end);
                Matrix noisy = clean;
                corrupt_in_place(noisy, net.corruption_p, rng);
                LayerGrad g = LayerGrad::zeros_like(layer);
                total += dae_loss_grad(layer, clean, noisy, &g) * static_cast<double>(end - begin);
                count += end - begin;
                if (net.learning_rate != 0.0) sgd_step(layer, g, net.learning_rate);
            }
        }
        epoch_loss.push_back(count ? total / static_cast<double>(count) : 0.0);
    }
    return epoch_loss;
}

void finetune(Network& net, const DataBatch& batch, double lambda_hybrid) {
    require_same(net.input_dim(), batch.dims(), "finetune inputs");
    require_same(net.num_classes(), batch.classes(), "finetune classes");
    if (net.learning_rate == 0.0) return;
    const std::size_t mb = std::max<std::size_t>(1, net.minibatch_size);
    for (std::size_t begin = 0; begin < batch.size(); begin += mb) {
        const std::size_t end = std::min(batch.size(), begin + mb);
        NetworkGrad g = NetworkGrad::zeros_like(net);
        hybrid_loss_grad(net, row_slice(batch.inputs, begin, end), row_slice(batch.labels, begin, end),
                         lambda_hybrid, &g);
        sgd_step(net, g, net.learning_rate);
    }
}

}  // namespace radae
