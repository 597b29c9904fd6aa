#include "radae/stream.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "radae/gpr.hpp"
#include "radae/linalg.hpp"

namespace radae::stream {

std::string_view to_string(StreamMode mode) noexcept {
    switch (mode) {
        case StreamMode::Stationary: return "stationary";
        case StreamMode::Nonstationary: return "nonstationary";
        case StreamMode::Abrupt: return "abrupt";
    }
    return "?";
}

std::optional<StreamMode> parse_mode(std::string_view name) noexcept {
    if (name == "stationary") return StreamMode::Stationary;
    if (name == "nonstationary") return StreamMode::Nonstationary;
    if (name == "abrupt") return StreamMode::Abrupt;
    return std::nullopt;
}

void StreamSpec::validate() const {
    if (num_classes < 2) throw std::invalid_argument("stream: need at least 2 classes");
    if (dims < 1) throw std::invalid_argument("stream: dims must be positive");
    if (batch_size < 1) throw std::invalid_argument("stream: batch size must be positive");
    if (num_batches < 1) throw std::invalid_argument("stream: need at least one batch");
    if (!(mask_noise_p >= 0.0 && mask_noise_p <= 1.0))
        throw std::invalid_argument("stream: mask noise probability outside [0,1]");
    if (!(abrupt_contrast >= 0.0)) throw std::invalid_argument("stream: abrupt contrast must be >= 0");
}

double StreamSpec::length_scale() const noexcept {
    return gp_length_scale > 0.0 ? gp_length_scale : static_cast<double>(num_batches) / 10.0;
}

std::size_t StreamSpec::switch_batch() const noexcept {
    return switch_at > 0 ? switch_at : num_batches / 2 + 1;
}

std::size_t LabeledSource::total() const noexcept {
    std::size_t n = 0;
    for (const auto& m : by_class) n += m.rows();
    return n;
}

void LabeledSource::validate() const {
    if (by_class.size() < 2) throw StreamError("source: need at least 2 classes");
    for (std::size_t k = 0; k < by_class.size(); ++k) {
        const Matrix& m = by_class[k];
        if (m.rows() == 0) throw StreamError("source: class " + std::to_string(k) + " has no examples");
        if (m.cols() != dims) throw StreamError("source: class " + std::to_string(k) + " has wrong dimension");
        for (double v : m.flat())
            if (!(v >= 0.0 && v <= 1.0)) throw StreamError("source: value outside [0,1]");
    }
}

Matrix gp_sample_curves(std::size_t num_classes, std::size_t num_batches, double length_scale, Rng& rng) {
    if (num_batches < 1) throw std::invalid_argument("gp_sample_curves: need T >= 1");
    std::vector<Vector> times(num_batches);
    for (std::size_t t = 0; t < num_batches; ++t) times[t] = {static_cast<double>(t + 1)};
    const Matrix k = gpr::gram_matrix(times, 1.0, length_scale);
    // Long length scales make the Gram matrix numerically rank deficient, so the
    // jitter ceiling is looser than for regression.
    auto factor = linalg::cholesky_with_jitter(k, gpr::kFirstJitter, 1e-3);
    if (!factor) throw StreamError("gp_sample_curves: covariance not factorisable");

    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix curves(num_classes, num_batches);
    Vector z(num_batches);
    for (std::size_t c = 0; c < num_classes; ++c) {
        for (double& v : z) v = normal(rng);
        for (std::size_t i = 0; i < num_batches; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j <= i; ++j) s += factor->lower(i, j) * z[j];
            curves(c, i) = s;
        }
    }
    return curves;
}

Vector class_ratios(const Matrix& curves, std::size_t t) {
    if (t >= curves.cols()) throw std::out_of_range("class_ratios: batch index out of range");
    Vector logits(curves.rows());
    for (std::size_t k = 0; k < curves.rows(); ++k) logits[k] = curves(k, t);
    return softmax(logits);
}

std::vector<std::size_t> largest_remainder_counts(std::span<const double> ratios, std::size_t total) {
    std::vector<std::size_t> counts(ratios.size());
    std::vector<double> frac(ratios.size());
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < ratios.size(); ++k) {
        if (!(ratios[k] >= 0.0)) throw std::invalid_argument("largest_remainder_counts: negative ratio");
        const double exact = ratios[k] * static_cast<double>(total);
        counts[k] = static_cast<std::size_t>(std::floor(exact));
        frac[k] = exact - std::floor(exact);
        assigned += counts[k];
    }
    if (assigned > total) throw std::invalid_argument("largest_remainder_counts: ratios sum above 1");
    std::vector<std::size_t> order(ratios.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    for (std::size_t i = 0; assigned < total; i = (i + 1) % order.size()) {
        ++counts[order[i]];
        ++assigned;
    }
    return counts;
}

Matrix stream_ratios(const StreamSpec& spec, Rng& rng) {
    spec.validate();
    const std::size_t k_count = spec.num_classes;
    const std::size_t t_count = spec.num_batches;
    Matrix ratios(t_count, k_count);
    switch (spec.mode) {
        case StreamMode::Stationary:
            ratios.fill(1.0 / static_cast<double>(k_count));
            break;
        case StreamMode::Nonstationary: {
            const Matrix curves = gp_sample_curves(k_count, t_count, spec.length_scale(), rng);
            for (std::size_t t = 0; t < t_count; ++t) {
                const Vector r = class_ratios(curves, t);
                std::copy(r.begin(), r.end(), ratios.row(t).begin());
            }
            break;
        }
        case StreamMode::Abrupt: {
            const std::size_t half = (k_count + 1) / 2;
            for (std::size_t t = 0; t < t_count; ++t) {
                const bool after = t + 1 >= spec.switch_batch();
                Vector logits(k_count);
                for (std::size_t k = 0; k < k_count; ++k) {
                    const bool favoured = (k < half) != after;
                    logits[k] = favoured ? 0.0 : -spec.abrupt_contrast;
                }
                const Vector r = softmax(logits);
                std::copy(r.begin(), r.end(), ratios.row(t).begin());
            }
            break;
        }
    }
    return ratios;
}

void mask_noise(std::span<double> x, double p, Rng& rng) {
    if (p <= 0.0) return;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (double& v : x) {
        if (unit(rng) < p) v = unit(rng);
    }
}

std::vector<BatchPtr> build_stream(const LabeledSource& source, const StreamSpec& spec, Rng& rng) {
    spec.validate();
    source.validate();
    if (source.num_classes() != spec.num_classes)
        throw StreamError("build_stream: source has " + std::to_string(source.num_classes()) +
                          " classes, spec expects " + std::to_string(spec.num_classes));
    if (source.dims != spec.dims) throw StreamError("build_stream: source dimension differs from spec");

    const Matrix ratios = stream_ratios(spec, rng);
    std::vector<BatchPtr> batches;
    batches.reserve(spec.num_batches);
    for (std::size_t t = 0; t < spec.num_batches; ++t) {
        const auto counts = largest_remainder_counts(ratios.row(t), spec.batch_size);
        std::vector<std::size_t> labels;
        labels.reserve(spec.batch_size);
        for (std::size_t k = 0; k < counts.size(); ++k) labels.insert(labels.end(), counts[k], k);
        std::shuffle(labels.begin(), labels.end(), rng);

        Matrix inputs(spec.batch_size, spec.dims);
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const Matrix& store = source.by_class[labels[i]];
            std::uniform_int_distribution<std::size_t> pick(0, store.rows() - 1);
            const auto src = store.row(pick(rng));
            auto dst = inputs.row(i);
            std::copy(src.begin(), src.end(), dst.begin());
            mask_noise(dst, spec.mask_noise_p, rng);
        }
        batches.push_back(std::make_shared<const DataBatch>(
            DataBatch::from_labels(t + 1, std::move(inputs), labels, spec.num_classes)));
    }
    return batches;
}

LabeledSource synth_dataset(std::size_t num_classes, std::size_t dims, std::size_t per_class,
                            double sigma, Rng& rng) {
    if (num_classes * per_class < 1) throw std::invalid_argument("synth_dataset: empty dataset");
    if (!(sigma >= 0.0)) throw std::invalid_argument("synth_dataset: negative sigma");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    Matrix prototypes(num_classes, dims);
    for (double& v : prototypes.flat()) v = unit(rng);

    LabeledSource source;
    source.dims = dims;
    source.by_class.reserve(num_classes);
    for (std::size_t k = 0; k < num_classes; ++k) {
        Matrix m(per_class, dims);
        for (std::size_t i = 0; i < per_class; ++i)
            for (std::size_t d = 0; d < dims; ++d)
                m(i, d) = std::clamp(prototypes(k, d) + sigma * normal(rng), 0.0, 1.0);
        source.by_class.push_back(std::move(m));
    }
    return source;
}

namespace {

std::uint32_t read_be32(std::istream& in, const char* what) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw StreamError(std::string("idx: truncated ") + what);
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

std::ifstream open_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StreamError("cannot open " + path.string());
    return in;
}

}  // namespace

LabeledSource load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
    auto img = open_binary(images);
    auto lab = open_binary(labels);

    if (read_be32(img, "image header") != 0x00000803) throw StreamError("idx: bad image magic in " + images.string());
    const std::uint32_t n_img = read_be32(img, "image header");
    const std::uint32_t rows = read_be32(img, "image header");
    const std::uint32_t cols = read_be32(img, "image header");
    if (read_be32(lab, "label header") != 0x00000801) throw StreamError("idx: bad label magic in " + labels.string());
    const std::uint32_t n_lab = read_be32(lab, "label header");
    if (n_img != n_lab)
        throw StreamError("idx: " + std::to_string(n_img) + " images but " + std::to_string(n_lab) + " labels");

    const std::size_t dims = std::size_t{rows} * cols;
    std::vector<unsigned char> pixels(std::size_t{n_img} * dims);
    std::vector<unsigned char> ids(n_lab);
    if (!img.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(pixels.size())))
        throw StreamError("idx: truncated image data");
    if (!lab.read(reinterpret_cast<char*>(ids.data()), static_cast<std::streamsize>(ids.size())))
        throw StreamError("idx: truncated label data");

    std::size_t classes = 0;
    for (unsigned char id : ids) classes = std::max<std::size_t>(classes, id + 1u);
    std::vector<std::size_t> per_class(classes, 0);
    for (unsigned char id : ids) ++per_class[id];

    LabeledSource source;
    source.dims = dims;
    for (std::size_t k = 0; k < classes; ++k) source.by_class.emplace_back(per_class[k], dims);
    std::vector<std::size_t> fill(classes, 0);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        auto dst = source.by_class[ids[i]].row(fill[ids[i]]++);
        for (std::size_t d = 0; d < dims; ++d) dst[d] = pixels[i * dims + d] / 255.0;
    }
    return source;
}

DataBatch split_test_set(LabeledSource& source, double fraction, Rng& rng) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("split_test_set: fraction outside (0,1)");
    source.validate();
    std::size_t smallest = source.by_class.front().rows();
    for (const auto& m : source.by_class) smallest = std::min(smallest, m.rows());
    const auto take = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(smallest)));
    if (take == 0) throw StreamError("split_test_set: classes too small for a test set");

    const std::size_t k_count = source.num_classes();
    Matrix inputs(take * k_count, source.dims);
    std::vector<std::size_t> labels;
    labels.reserve(take * k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
        Matrix& store = source.by_class[k];
        std::vector<std::size_t> perm(store.rows());
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        for (std::size_t i = 0; i < take; ++i) {
            const auto src = store.row(perm[i]);
            std::copy(src.begin(), src.end(), inputs.row(labels.size()).begin());
            labels.push_back(k);
        }
        std::vector<std::size_t> keep(perm.begin() + static_cast<std::ptrdiff_t>(take), perm.end());
        std::sort(keep.begin(), keep.end());
        store = store.select_rows(keep);
    }
    return DataBatch::from_labels(0, std::move(inputs), labels, k_count);
}

namespace {

template <typename T>
void write_raw(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw StreamError("stream cache: truncated file");
    return v;
}

}  // namespace

void save_stream(const std::filesystem::path& path, std::span<const BatchPtr> batches) {
    if (batches.empty()) throw StreamError("save_stream: no batches");
    const DataBatch& first = *batches.front();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw StreamError("cannot write " + path.string());
    write_raw(out, static_cast<std::uint32_t>(first.classes()));
    write_raw(out, static_cast<std::uint32_t>(first.dims()));
    write_raw(out, static_cast<std::uint32_t>(first.size()));
    write_raw(out, static_cast<std::uint32_t>(batches.size()));
    for (const auto& b : batches) {
        if (b->classes() != first.classes() || b->dims() != first.dims() || b->size() != first.size())
            throw StreamError("save_stream: batches differ in shape");
        for (std::size_t i = 0; i < b->size(); ++i) {
            out.write(reinterpret_cast<const char*>(b->inputs.row(i).data()),
                      static_cast<std::streamsize>(b->dims() * sizeof(double)));
            write_raw(out, static_cast<std::uint32_t>(b->label_of(i)));
        }
    }
    if (!out) throw StreamError("write failed for " + path.string());
}

std::vector<BatchPtr> load_stream(const std::filesystem::path& path) {
    auto in = open_binary(path);
    const auto k = read_raw<std::uint32_t>(in);
    const auto d = read_raw<std::uint32_t>(in);
    const auto p = read_raw<std::uint32_t>(in);
    const auto t = read_raw<std::uint32_t>(in);
    if (k < 2 || d == 0 || p == 0) throw StreamError("stream cache: bad header");
    std::vector<BatchPtr> batches;
    batches.reserve(t);
    for (std::uint32_t n = 0; n < t; ++n) {
        Matrix inputs(p, d);
        std::vector<std::size_t> labels(p);
        for (std::uint32_t i = 0; i < p; ++i) {
            if (!in.read(reinterpret_cast<char*>(inputs.row(i).data()),
                         static_cast<std::streamsize>(std::size_t{d} * sizeof(double))))
                throw StreamError("stream cache: truncated file");
            labels[i] = read_raw<std::uint32_t>(in);
            if (labels[i] >= k) throw StreamError("stream cache: label out of range");
        }
        batches.push_back(std::make_shared<const DataBatch>(DataBatch::from_labels(n + 1, std::move(inputs), labels, k)));
    }
    return batches;
}

}  // namespace radae::stream
