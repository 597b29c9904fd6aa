#include "radae/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace radae {

ConfigError::ConfigError(std::string source, std::size_t line, const std::string& message)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + message), line_(line) {}

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
    throw std::invalid_argument("bad value '" + std::string(value) + "' for " + std::string(key) + " (expected " +
                                std::string(expected) + ")");
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) bad_value(key, v, "a non-negative integer");
    return out;
}

double to_double(std::string_view key, std::string_view v) {
    const std::string s(v);
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(s, &used);
    } catch (const std::exception&) {
        bad_value(key, v, "a number");
    }
    if (used != s.size()) bad_value(key, v, "a number");
    return out;
}

std::vector<std::size_t> to_list(std::string_view key, std::string_view v) {
    std::vector<std::size_t> out;
    while (!v.empty()) {
        const auto comma = v.find(',');
        out.push_back(to_u64(key, trim(v.substr(0, comma))));
        if (comma == std::string_view::npos) break;
        v.remove_prefix(comma + 1);
    }
    if (out.empty()) bad_value(key, v, "a comma-separated list of integers");
    return out;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

bool to_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    bad_value(key, v, "true or false");
}

std::string fmt(std::size_t v) { return std::to_string(v); }

struct Entry {
    std::string_view name;
    std::string_view description;
    std::function<void(ExperimentConfig&, std::string_view)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

#define SIZE_KEY(key, field, desc)                                                                    \
    Entry {                                                                                           \
        key, desc, [](ExperimentConfig& c, std::string_view v) { c.field = to_u64(key, v); },        \
            [](const ExperimentConfig& c) { return fmt(static_cast<std::size_t>(c.field)); }          \
    }
#define REAL_KEY(key, field, desc)                                                                   \
    Entry {                                                                                          \
        key, desc, [](ExperimentConfig& c, std::string_view v) { c.field = to_double(key, v); },    \
            [](const ExperimentConfig& c) { return fmt(static_cast<double>(c.field)); }              \
    }
#define TEXT_KEY(key, field, desc)                                                                      \
    Entry {                                                                                             \
        key, desc, [](ExperimentConfig& c, std::string_view v) { c.field = std::string(v); },          \
            [](const ExperimentConfig& c) { return c.field; }                                           \
    }

const std::vector<Entry>& entries() {
    static const std::vector<Entry> table = {
        Entry{"stream.source", "synthetic | idx | cache",
              [](ExperimentConfig& c, std::string_view v) {
                  auto s = parse_source(v);
                  if (!s) bad_value("stream.source", v, "synthetic, idx or cache");
                  c.source = *s;
              },
              [](const ExperimentConfig& c) { return std::string(to_string(c.source)); }},
        Entry{"stream.mode", "stationary | nonstationary | abrupt",
              [](ExperimentConfig& c, std::string_view v) {
                  auto m = stream::parse_mode(v);
                  if (!m) bad_value("stream.mode", v, "stationary, nonstationary or abrupt");
                  c.stream.mode = *m;
              },
              [](const ExperimentConfig& c) { return std::string(stream::to_string(c.stream.mode)); }},
        SIZE_KEY("stream.classes", stream.num_classes, "number of classes (synthetic source)"),
        SIZE_KEY("stream.dims", stream.dims, "input dimension (synthetic source)"),
        SIZE_KEY("stream.batch_size", stream.batch_size, "examples per batch"),
        SIZE_KEY("stream.batches", stream.num_batches, "number of batches"),
        REAL_KEY("stream.gp_length_scale", stream.gp_length_scale, "ratio-curve length scale; 0 = batches/10"),
        REAL_KEY("stream.mask_noise", stream.mask_noise_p, "per-coordinate uniform resampling probability"),
        SIZE_KEY("stream.switch_at", stream.switch_at, "first batch after the abrupt switch; 0 = middle"),
        REAL_KEY("stream.abrupt_contrast", stream.abrupt_contrast, "logit gap of the abrupt mode"),
        SIZE_KEY("stream.per_class", per_class, "synthetic examples per class"),
        REAL_KEY("stream.blob_sigma", blob_sigma, "synthetic blob standard deviation"),
        TEXT_KEY("stream.idx_images", idx_images, "IDX image file"),
        TEXT_KEY("stream.idx_labels", idx_labels, "IDX label file"),
        TEXT_KEY("stream.cache", cache_path, "binary stream cache (test set at <path>.test)"),
        REAL_KEY("stream.test_fraction", test_fraction, "fraction of each class held out for testing"),
        Entry{"nn.widths", "hidden layer widths, comma separated",
              [](ExperimentConfig& c, std::string_view v) { c.widths = to_list("nn.widths", v); },
              [](const ExperimentConfig& c) {
                  std::string s;
                  for (std::size_t i = 0; i < c.widths.size(); ++i) s += (i ? "," : "") + std::to_string(c.widths[i]);
                  return s;
              }},
        REAL_KEY("nn.learning_rate", learning_rate, "SGD step size"),
        REAL_KEY("nn.corruption", corruption, "denoising corruption probability"),
        SIZE_KEY("nn.minibatch", minibatch, "SGD minibatch size"),
        REAL_KEY("nn.lambda", lambda_hybrid, "weight of the reconstruction term when fine-tuning"),
        SIZE_KEY("nn.inc_generative_epochs", greedy.generative_epochs, "denoising epochs for new nodes"),
        SIZE_KEY("nn.inc_discriminative_epochs", greedy.discriminative_epochs, "supervised epochs for new nodes"),
        SIZE_KEY("rl.m", rl.m, "EMA window of the state errors"),
        SIZE_KEY("rl.m1", rl.m1, "short EMA window (S1/S2)"),
        SIZE_KEY("rl.m2", rl.m2, "medium EMA window (S1/S2)"),
        SIZE_KEY("rl.m3", rl.m3, "long EMA window (S2)"),
        SIZE_KEY("rl.eta1", rl.eta1, "first batch of the round-robin phase"),
        SIZE_KEY("rl.eta2", rl.eta2, "first batch of the greedy phase"),
        REAL_KEY("rl.gamma", rl.gamma, "discount factor"),
        REAL_KEY("rl.alpha_q", rl.alpha_q, "Q-learning rate"),
        REAL_KEY("rl.alpha_ema", rl.alpha_ema, "EMA coefficient; 0 = 2/(m+1)"),
        REAL_KEY("rl.epsilon", rl.epsilon, "exploration probability"),
        REAL_KEY("rl.lambda_delta", rl.lambda_delta, "node-change scale; 0 = half the initial width"),
        REAL_KEY("rl.mu_hat", rl.mu_hat, "preferred width ratio"),
        REAL_KEY("rl.sigma_delta", rl.sigma_delta, "width of the node-change envelope"),
        REAL_KEY("rl.v1", rl.v1, "lower width-ratio bound of the reward"),
        REAL_KEY("rl.v2", rl.v2, "upper width-ratio bound of the reward"),
        Entry{"rl.state_space", "S1 | S2 | S3 | S4",
              [](ExperimentConfig& c, std::string_view v) {
                  static const std::map<std::string_view, rl::StateSpace> names = {
                      {"S1", rl::StateSpace::S1}, {"S2", rl::StateSpace::S2},
                      {"S3", rl::StateSpace::S3}, {"S4", rl::StateSpace::S4}};
                  auto it = names.find(v);
                  if (it == names.end()) bad_value("rl.state_space", v, "S1, S2, S3 or S4");
                  c.rl.state_space = it->second;
              },
              [](const ExperimentConfig& c) { return "S" + std::to_string(static_cast<int>(c.rl.state_space)); }},
        SIZE_KEY("rl.refit_every", rl.refit_every, "curve refit period after the round-robin phase"),
        SIZE_KEY("rl.max_observations", rl.max_observations, "utility samples kept per action"),
        REAL_KEY("rl.gp_noise", rl.gp_noise, "observation noise of the utility curves"),
        Entry{"rl.center_utilities", "fit utility curves around their sample mean instead of zero",
              [](ExperimentConfig& c, std::string_view v) { c.rl.center_utilities = to_bool("rl.center_utilities", v); },
              [](const ExperimentConfig& c) { return std::string(c.rl.center_utilities ? "true" : "false"); }},
        SIZE_KEY("pool.tau", tau, "pool capacity in examples"),
        REAL_KEY("pool.diverse_threshold", diverse_threshold, "minimum distance for the diverse pool"),
        SIZE_KEY("midae.delta_n", midae.delta_n, "initial node change"),
        REAL_KEY("midae.merge_ratio", midae.merge_ratio, "merged pairs per added node"),
        REAL_KEY("midae.eps1", midae.eps1, "growth threshold"),
        REAL_KEY("midae.eps2", midae.eps2, "shrink threshold"),
        SIZE_KEY("midae.mu_window", midae.mu_window, "examples in the reconstruction average"),
        SIZE_KEY("midae.pool_threshold", midae.pool_threshold, "hard-pool trigger size; 0 = pool.tau"),
        Entry{"run.policy", "sdae | midae | radae",
              [](ExperimentConfig& c, std::string_view v) {
                  auto p = parse_policy(v);
                  if (!p) bad_value("run.policy", v, "sdae, midae or radae");
                  c.policy = *p;
              },
              [](const ExperimentConfig& c) { return std::string(to_string(c.policy)); }},
        Entry{"run.seed", "master seed",
              [](ExperimentConfig& c, std::string_view v) { c.seed = to_u64("run.seed", v); },
              [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
        TEXT_KEY("run.out", out, "trace CSV path"),
        SIZE_KEY("run.last", last, "records in the tail summary"),
        SIZE_KEY("run.pretrain_examples", pretrain_examples, "leading examples used for greedy pre-training"),
    };
    return table;
}

#undef SIZE_KEY
#undef REAL_KEY
#undef TEXT_KEY

}  // namespace

std::vector<ConfigKey> config_keys() {
    std::vector<ConfigKey> out;
    for (const auto& e : entries()) out.push_back({e.name, e.description});
    return out;
}

void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
    for (const auto& e : entries()) {
        if (e.name == key) {
            e.set(cfg, value);
            return;
        }
    }
    throw std::invalid_argument("unknown key '" + std::string(key) + "'");
}

ExperimentConfig parse_config(std::istream& in, const std::string& source_name) {
    ExperimentConfig cfg;
    std::map<std::string, std::size_t, std::less<>> seen;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(source_name, line_no, "expected key = value");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(source_name, line_no, "missing key");
        if (!seen.emplace(std::string(key), line_no).second)
            throw ConfigError(source_name, line_no, "duplicate key '" + std::string(key) + "'");
        try {
            apply_setting(cfg, key, value);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(source_name, line_no, e.what());
        }
    }
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        // Point at the line that set the offending key when there is one.
        const std::string_view msg = e.what();
        std::size_t where = 0;
        for (const auto& [key, line] : seen)
            if (msg.starts_with(key) && (msg.size() == key.size() || msg[key.size()] == ' ')) where = line;
        throw ConfigError(source_name, where, e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string(), 0, "cannot open file");
    return parse_config(in, path.string());
}

std::string render_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    for (const auto& e : entries()) {
        const std::string v = e.get(cfg);
        if (v.empty()) continue;
        out << e.name << " = " << v << '\n';
    }
    return out.str();
}

}  // namespace radae
