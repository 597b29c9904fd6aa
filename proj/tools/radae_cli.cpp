// radae: run experiments, check configs, recompute summaries from traces.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "radae/config.hpp"
#include "radae/harness.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kRuntimeError = 1;
constexpr int kUsageError = 2;

struct RunPlan {
    radae::ExperimentConfig cfg;
    std::string out;
};

std::string run_path(const std::string& out, const radae::ExperimentConfig& cfg, bool many) {
    if (out.empty() || !many) return out;
    const std::filesystem::path p(out);
    std::string name = p.stem().string() + "_" + std::string(radae::to_string(cfg.policy)) + "_s" +
                       std::to_string(cfg.seed) + p.extension().string();
    return (p.parent_path() / name).string();
}

int cmd_run(const std::string& config_path, const std::vector<std::uint64_t>& seeds,
            const std::vector<std::string>& policies, const std::string& out, std::size_t last,
            const std::vector<std::string>& overrides, const std::string& save_stream) {
    radae::ExperimentConfig base;
    try {
        if (!config_path.empty()) base = radae::load_config(config_path);
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
            radae::apply_setting(base, kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (last > 0) base.last = last;
        if (!out.empty()) base.out = out;
        base.validate();
    } catch (const std::exception& e) {
        std::cerr << "radae: " << e.what() << '\n';
        return kUsageError;
    }

    std::vector<RunPlan> plans;
    const std::vector<std::uint64_t> seed_list = seeds.empty() ? std::vector<std::uint64_t>{base.seed} : seeds;
    std::vector<radae::Policy> policy_list;
    if (policies.empty()) policy_list.push_back(base.policy);
    for (const auto& name : policies) {
        auto p = radae::parse_policy(name);
        if (!p) {
            std::cerr << "radae: unknown policy '" << name << "'\n";
            return kUsageError;
        }
        policy_list.push_back(*p);
    }
    const bool many = seed_list.size() * policy_list.size() > 1;
    for (auto seed : seed_list)
        for (auto policy : policy_list) {
            RunPlan plan{base, {}};
            plan.cfg.seed = seed;
            plan.cfg.policy = policy;
            plan.out = run_path(base.out, plan.cfg, many);
            plans.push_back(std::move(plan));
        }

    if (!save_stream.empty()) {
        try {
            radae::SeedStreams s = radae::SeedStreams::from(seed_list.front());
            radae::save_prepared_data(save_stream, radae::prepare_data(base, s));
        } catch (const std::exception& e) {
            std::cerr << "radae: " << e.what() << '\n';
            return kRuntimeError;
        }
    }

    std::vector<std::string> reports(plans.size());
    std::vector<std::string> errors(plans.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < plans.size(); ++i) {
        try {
            std::ofstream file;
            if (!plans[i].out.empty()) {
                file.open(plans[i].out);
                if (!file) throw std::runtime_error("cannot write " + plans[i].out);
            }
            const auto result = radae::run_experiment(plans[i].cfg, file.is_open() ? &file : nullptr);
            if (file.is_open() && !file) throw std::runtime_error("write failed for " + plans[i].out);
            reports[i] = "policy=" + std::string(radae::to_string(plans[i].cfg.policy)) +
                         " seed=" + std::to_string(plans[i].cfg.seed) + " last=" + std::to_string(plans[i].cfg.last) +
                         " width=" + std::to_string(result.final_net.layers.front().hidden()) + "\n" +
                         radae::format_summary(result.summary);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }

    int status = kOk;
    for (std::size_t i = 0; i < plans.size(); ++i) {
        if (!errors[i].empty()) {
            std::cerr << "radae: " << errors[i] << '\n';
            status = kRuntimeError;
        } else {
            std::cout << reports[i];
        }
    }
    return status;
}

int cmd_validate(const std::string& config_path, bool print) {
    try {
        const auto cfg = radae::load_config(config_path);
        if (print) std::cout << radae::render_config(cfg);
        else std::cout << config_path << ": ok\n";
        return kOk;
    } catch (const std::exception& e) {
        std::cerr << "radae: " << e.what() << '\n';
        return kUsageError;
    }
}

int cmd_replay(const std::string& trace_path, std::size_t last) {
    std::ifstream in(trace_path);
    if (!in) {
        std::cerr << "radae: cannot open " << trace_path << '\n';
        return kRuntimeError;
    }
    try {
        const auto records = radae::read_trace(in);
        std::cout << radae::format_summary(radae::summarize(records, last));
        return kOk;
    } catch (const std::exception& e) {
        std::cerr << "radae: " << trace_path << ": " << e.what() << '\n';
        return kRuntimeError;
    }
}

void list_keys() {
    const radae::ExperimentConfig defaults;
    const std::string rendered = radae::render_config(defaults);
    for (const auto& key : radae::config_keys()) std::printf("%-30s %s\n", std::string(key.name).c_str(),
                                                             std::string(key.description).c_str());
    std::printf("\n# defaults\n%s", rendered.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online stacked denoising autoencoders with adaptive structure"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> policies;
    std::string out;
    std::size_t last = 0;
    std::vector<std::string> overrides;
    std::string save_stream;
    auto* run = app.add_subcommand("run", "Run one or more experiments");
    run->add_option("--config", config_path, "Configuration file")->check(CLI::ExistingFile);
    run->add_option("--seed", seeds, "Seed(s); repeat or comma-separate for several runs")->delimiter(',');
    run->add_option("--policy", policies, "sdae, midae or radae; several allowed")->delimiter(',');
    run->add_option("--out", out, "Trace CSV (suffixed with policy and seed when several runs)");
    run->add_option("--last", last, "Records in the tail summary")->check(CLI::PositiveNumber);
    run->add_option("--set", overrides, "Override a config key (key=value)");
    run->add_option("--save-stream", save_stream, "Write the first seed's stream and test set cache");

    std::string validate_path;
    bool print = false;
    bool keys = false;
    auto* validate = app.add_subcommand("validate", "Check a configuration file");
    validate->add_option("--config,config", validate_path, "Configuration file");
    validate->add_flag("--print", print, "Print the effective configuration");
    validate->add_flag("--keys", keys, "List every key with its default");

    std::string trace_path;
    std::size_t replay_last = 250;
    auto* replay = app.add_subcommand("replay", "Recompute the tail summary of a trace");
    replay->add_option("trace", trace_path, "Trace CSV")->required();
    replay->add_option("--last", replay_last, "Records in the tail summary")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsageError;
    }

    if (*run) return cmd_run(config_path, seeds, policies, out, last, overrides, save_stream);
    if (*validate) {
        if (keys) {
            list_keys();
            return kOk;
        }
        if (validate_path.empty()) {
            std::cerr << "radae: validate needs --config\n";
            return kUsageError;
        }
        return cmd_validate(validate_path, print);
    }
    return cmd_replay(trace_path, replay_last);
}
