#include "radae/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace radae {

std::string_view to_string(Policy policy) noexcept {
    switch (policy) {
        case Policy::Sdae: return "sdae";
        case Policy::Midae: return "midae";
        case Policy::Radae: return "radae";
    }
    return "?";
}

std::optional<Policy> parse_policy(std::string_view name) noexcept {
    if (name == "sdae") return Policy::Sdae;
    if (name == "midae") return Policy::Midae;
    if (name == "radae") return Policy::Radae;
    return std::nullopt;
}

std::string_view to_string(DataSource source) noexcept {
    switch (source) {
        case DataSource::Synthetic: return "synthetic";
        case DataSource::Idx: return "idx";
        case DataSource::Cache: return "cache";
    }
    return "?";
}

std::optional<DataSource> parse_source(std::string_view name) noexcept {
    if (name == "synthetic") return DataSource::Synthetic;
    if (name == "idx") return DataSource::Idx;
    if (name == "cache") return DataSource::Cache;
    return std::nullopt;
}

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
    stream.validate();
    if (widths.empty()) fail("nn.widths must list at least one layer");
    for (auto w : widths)
        if (w == 0) fail("nn.widths entries must be positive");
    if (!(learning_rate >= 0.0)) fail("nn.learning_rate must be non-negative");
    if (!(corruption >= 0.0 && corruption < 1.0)) fail("nn.corruption must lie in [0,1)");
    if (minibatch == 0) fail("nn.minibatch must be positive");
    if (!(lambda_hybrid >= 0.0)) fail("nn.lambda must be non-negative");
    if (greedy.generative_epochs < 0 || greedy.discriminative_epochs < 0)
        fail("nn.inc_generative_epochs must be non-negative");
    rl.validate();
    midae.validate();
    if (tau < stream.batch_size) fail("pool.tau must be at least stream.batch_size");
    if (!(diverse_threshold >= 0.0 && diverse_threshold <= 1.0)) fail("pool.diverse_threshold must lie in [0,1]");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) fail("stream.test_fraction must lie in (0,1)");
    if (source == DataSource::Synthetic && per_class == 0) fail("stream.per_class must be positive");
    if (!(blob_sigma >= 0.0)) fail("stream.blob_sigma must be non-negative");
    if (source == DataSource::Idx && (idx_images.empty() || idx_labels.empty()))
        fail("stream.idx_images and stream.idx_labels are required for the idx source");
    if (source == DataSource::Cache && cache_path.empty()) fail("stream.cache is required for the cache source");
    if (last == 0) fail("run.last must be positive");
}

SeedStreams SeedStreams::from(std::uint64_t seed) {
    auto derive = [seed](std::uint32_t lane) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), lane};
        return Rng(seq);
    };
    return {derive(1), derive(2), derive(3), derive(4), derive(5)};
}

PreparedData prepare_data(const ExperimentConfig& cfg, SeedStreams& seeds) {
    PreparedData data;
    if (cfg.source == DataSource::Cache) {
        data.batches = stream::load_stream(cfg.cache_path);
        auto test = stream::load_stream(cfg.cache_path + ".test");
        if (test.empty()) throw stream::StreamError("empty test cache");
        data.test_set = *test.front();
        return data;
    }

    stream::StreamSpec spec = cfg.stream;
    stream::LabeledSource source;
    if (cfg.source == DataSource::Idx) {
        source = stream::load_idx(cfg.idx_images, cfg.idx_labels);
        spec.num_classes = source.num_classes();
        spec.dims = source.dims;
    } else {
        source = stream::synth_dataset(spec.num_classes, spec.dims, cfg.per_class, cfg.blob_sigma, seeds.data);
    }
    data.test_set = stream::split_test_set(source, cfg.test_fraction, seeds.data);
    for (std::size_t i = 0; i < data.test_set.size(); ++i)
        stream::mask_noise(data.test_set.inputs.row(i), spec.mask_noise_p, seeds.data);
    data.batches = stream::build_stream(source, spec, seeds.stream);
    return data;
}

void save_prepared_data(const std::filesystem::path& path, const PreparedData& data) {
    stream::save_stream(path, data.batches);
    const BatchPtr test[] = {std::make_shared<const DataBatch>(data.test_set)};
    stream::save_stream(path.string() + ".test", test);
}

// --- trace -----------------------------------------------------------------

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(std::move(cur));
    return out;
}

double parse_double(const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters in '" + s + "'");
    return v;
}

std::optional<double> parse_optional(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return parse_double(s);
}

}  // namespace

void write_trace_header(std::ostream& out) { out << kTraceHeader << '\n'; }

void write_trace_record(std::ostream& out, const TraceRecord& rec) {
    out << rec.batch << ',' << rec.action << ',' << rec.delta << ',';
    for (std::size_t i = 0; i < rec.widths.size(); ++i) out << (i ? ";" : "") << rec.widths[i];
    out << ',' << fmt(rec.lg) << ',' << fmt(rec.lc) << ',' << fmt(rec.e_lcl) << ',' << fmt(rec.e_glb) << ','
        << fmt(rec.reward);
    for (std::size_t a = 0; a < kNumActions; ++a) out << ',' << (rec.q ? fmt((*rec.q)[a]) : std::string());
    out << ',' << fmt(rec.kl) << ',' << fmt(rec.wall_ms) << '\n';
}

std::vector<TraceRecord> read_trace(std::istream& in) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line) || line != kTraceHeader)
        throw std::runtime_error("trace:1: missing or unexpected header");
    std::vector<TraceRecord> records;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto f = split(line, ',');
            if (f.size() != 14) throw std::invalid_argument("expected 14 fields, got " + std::to_string(f.size()));
            TraceRecord r;
            r.batch = std::stoull(f[0]);
            r.action = f[1];
            r.delta = std::stoll(f[2]);
            if (!f[3].empty())
                for (const auto& w : split(f[3], ';')) r.widths.push_back(std::stoull(w));
            r.lg = parse_double(f[4]);
            r.lc = parse_double(f[5]);
            r.e_lcl = parse_optional(f[6]);
            r.e_glb = parse_double(f[7]);
            r.reward = parse_optional(f[8]);
            if (!f[9].empty() || !f[10].empty() || !f[11].empty())
                r.q = std::array<double, kNumActions>{parse_double(f[9]), parse_double(f[10]), parse_double(f[11])};
            r.kl = parse_optional(f[12]);
            r.wall_ms = parse_double(f[13]);
            records.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw std::runtime_error("trace:" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

namespace {

MeanStd mean_std(const std::vector<double>& v) {
    MeanStd out;
    out.count = v.size();
    if (v.empty()) return out;
    double sum = 0.0;
    for (double x : v) sum += x;
    out.mean = sum / static_cast<double>(v.size());
    double sq = 0.0;
    for (double x : v) sq += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(sq / static_cast<double>(v.size()));
    return out;
}

}  // namespace

Summary summarize(std::span<const TraceRecord> records, std::size_t last) {
    const std::size_t start = records.size() > last ? records.size() - last : 0;
    std::vector<double> lcl, glb;
    for (std::size_t i = start; i < records.size(); ++i) {
        if (records[i].e_lcl) lcl.push_back(*records[i].e_lcl);
        glb.push_back(records[i].e_glb);
    }
    return {mean_std(lcl), mean_std(glb)};
}

std::string format_summary(const Summary& s) {
    std::ostringstream out;
    out << "E_lcl " << fmt(s.e_lcl.mean) << " +/- " << fmt(s.e_lcl.std) << " (n=" << s.e_lcl.count << ")\n"
        << "E_glb " << fmt(s.e_glb.mean) << " +/- " << fmt(s.e_glb.std) << " (n=" << s.e_glb.count << ")\n";
    return out.str();
}

// --- evaluation --------------------------------------------------------------

void OrderingMonitor::require_unseen(std::size_t seq_id) const {
    if (trained(seq_id))
        throw OrderingViolation("batch " + std::to_string(seq_id) + " evaluated after being trained on");
}

double eval_local(const Network& net, const DataBatch& next, const OrderingMonitor& monitor) {
    monitor.require_unseen(next.seq_id);
    return batch_errors(net, next).classification;
}

double eval_global(const Network& net, const DataBatch& test_set) {
    if (test_set.size() == 0) throw std::invalid_argument("eval_global: empty test set");
    return batch_errors(net, test_set).classification;
}

// --- driver ------------------------------------------------------------------

Network initial_network(const ExperimentConfig& cfg, std::size_t input_dim, std::size_t classes, Rng& rng) {
    Network net = Network::create(input_dim, cfg.widths, classes, rng);
    net.learning_rate = cfg.learning_rate;
    net.corruption_p = cfg.corruption;
    net.minibatch_size = cfg.minibatch;
    return net;
}

RunResult run_experiment(const ExperimentConfig& cfg, const PreparedData& data, SeedStreams& seeds,
                         std::ostream* trace) {
    cfg.validate();
    if (data.batches.empty()) throw std::invalid_argument("run_experiment: empty stream");
    const DataBatch& first = *data.batches.front();

    RunResult result;
    Network net = initial_network(cfg, first.dims(), first.classes(), seeds.init);
    OrderingMonitor monitor;

    PoolSet pools;
    pools.tau = cfg.tau;
    pools.lambda_threshold = cfg.diverse_threshold;
    MiDaeState midae = cfg.midae;
    if (midae.pool_threshold == 0) midae.pool_threshold = cfg.tau;
    std::optional<rl::RlController> controller;
    if (cfg.policy == Policy::Radae) controller.emplace(cfg.rl, net.layers.front().hidden());

    std::size_t begin = 0;
    if (cfg.pretrain_examples > 0) {
        const std::size_t p = first.size();
        begin = std::min((cfg.pretrain_examples + p - 1) / p, data.batches.size() - 1);
        const std::span<const BatchPtr> warm(data.batches.data(), begin);
        for (std::size_t l = 0; l < net.layers.size(); ++l) pretrain_layer(net, l, warm, 1, seeds.train);
        for (const auto& b : warm) monitor.mark_trained(b->seq_id);
    }

    if (trace) write_trace_header(*trace);
    auto& records = result.records;
    for (std::size_t i = begin; i < data.batches.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        const BatchPtr& batch = data.batches[i];
        monitor.require_unseen(batch->seq_id);
        const BatchErrors errs = batch_errors(net, *batch);
        if (!records.empty()) {
            records.back().e_lcl = errs.classification;
            if (trace) write_trace_record(*trace, records.back());
        }

        TraceRecord rec;
        rec.batch = batch->seq_id;
        rec.lg = errs.generative;
        rec.lc = errs.classification;
        const auto width_before = static_cast<long long>(net.layers.front().hidden());

        update_recent(pools, batch);
        update_diverse(pools, batch);

        switch (cfg.policy) {
            case Policy::Sdae:
                finetune(net, *batch, cfg.lambda_hybrid);
                break;
            case Policy::Midae: {
                const MiDaeEvent ev = merge_inc_step(net, batch, pools, midae, cfg.lambda_hybrid, seeds.train, cfg.greedy);
                rec.action = ev.fired ? "merge_increment" : "none";
                break;
            }
            case Policy::Radae: {
                const rl::Observation obs{errs.generative, errs.classification, net.layers.front().hidden(),
                                          batch->class_histogram()};
                const rl::Decision d = controller->step(records.size(), obs, seeds.control);
                rec.action = std::string(to_string(d.action));
                rec.reward = d.reward;
                rec.kl = d.kl;
                if (d.state) rec.q = d.predicted_q;
                switch (d.action) {
                    case ActionKind::Pool:
                        // An empty diverse pool leaves the network as it is.
                        (void)pool_finetune(net, pools.diverse, cfg.lambda_hybrid);
                        break;
                    case ActionKind::Increment:
                        if (d.delta_inc > 0) increment(net, d.delta_inc, pools.recent, seeds.train, cfg.greedy);
                        break;
                    case ActionKind::Merge:
                        if (d.delta_mrg > 0) merge(net, d.delta_mrg);
                        break;
                }
                finetune(net, *batch, cfg.lambda_hybrid);
                break;
            }
        }
        monitor.mark_trained(batch->seq_id);

        rec.delta = static_cast<long long>(net.layers.front().hidden()) - width_before;
        rec.widths = net.widths();
        rec.e_glb = eval_global(net, data.test_set);
        rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        records.push_back(std::move(rec));
    }
    if (trace && !records.empty()) write_trace_record(*trace, records.back());

    result.summary = summarize(records, cfg.last);
    result.final_net = std::move(net);
    return result;
}

RunResult run_experiment(const ExperimentConfig& cfg, std::ostream* trace) {
    cfg.validate();
    SeedStreams seeds = SeedStreams::from(cfg.seed);
    const PreparedData data = prepare_data(cfg, seeds);
    return run_experiment(cfg, data, seeds, trace);
}

}  // namespace radae
