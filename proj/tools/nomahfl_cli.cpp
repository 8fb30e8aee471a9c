#include <nomahfl/config.hpp>
#include <nomahfl/ddpg.hpp>
#include <nomahfl/pdd.hpp>
#include <nomahfl/sim.hpp>
#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace nomahfl;

namespace {

int cmd_run(const std::string& config_path, const std::string& seeds, const std::string& out,
            const std::string& schemes, int threads)
{
    auto cfg = config::load_file(config_path);
    config::apply_environment(cfg);
    if (!seeds.empty()) cfg.seeds = config::parse_seeds(seeds);
    if (!out.empty()) cfg.out_dir = out;
    if (!schemes.empty()) cfg.schemes = config::split_list(schemes);
    if (threads > 0) cfg.threads = threads;
    cfg.validate();

    auto result = sim::run_experiment(cfg, &std::cerr);
    fs::create_directories(cfg.out_dir);
    const auto csv_path = fs::path(cfg.out_dir) / "metrics.csv";
    {
        std::ofstream csv(csv_path);
        if (!csv) throw config_error("cannot write " + csv_path.string());
        sim::write_csv(csv, result.rows);
    }
    std::ofstream summary(fs::path(cfg.out_dir) / "summary.txt");
    sim::write_summary(summary, cfg, result);
    sim::write_summary(std::cout, cfg, result);
    std::cout << "wrote " << result.rows.size() << " rows to " << csv_path.string() << '\n';
    return result.failures.empty() ? 0 : 3;
}

int cmd_trace(const std::string& instance_path, const std::string& out)
{
    const auto inst = pdd::load_instance(instance_path);
    const auto sol = pdd::solve(inst);
    if (out.empty()) {
        pdd::write_trace_csv(std::cout, sol);
    } else {
        std::ofstream os(out);
        if (!os) throw config_error("cannot write " + out);
        pdd::write_trace_csv(os, sol);
    }
    std::cerr << "schedule:";
    for (int b : sol.binary) std::cerr << ' ' << b;
    std::cerr << "\nobjective: " << sol.binary_objective << "\nouter iterations: " << sol.outer_iterations
              << (sol.converged ? " (converged)" : " (not converged)") << (sol.repaired ? ", repaired" : "")
              << "\nresidual: " << sol.residual() << '\n';
    const auto best = pdd::enumerate_best(inst);
    std::cerr << "enumeration optimum: " << inst.objective(std::span<const int>(best)) << '\n';
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& out, std::uint64_t seed, const std::string& rewards,
              const std::string& access)
{
    auto cfg = config::load_file(config_path);
    config::apply_environment(cfg);
    if (seed == 0) seed = cfg.seeds.front();
    const auto scenario = sim::make_scenario(cfg, seed);
    const auto mode = access == "oma" || access == "OMA" ? config::AccessMode::oma : config::AccessMode::noma;
    const auto tr = sim::train_policy(cfg, scenario, mode);
    ddpg::save_policy_file(out, tr.policy);
    if (!rewards.empty()) {
        std::ofstream os(rewards);
        if (!os) throw config_error("cannot write " + rewards);
        ddpg::write_reward_csv(os, tr.episode_reward);
    }
    std::cout << "episodes " << tr.episode_reward.size() << ", updates " << tr.updates << ", final mean reward "
              << (tr.episode_reward.empty() ? 0.0 : tr.episode_reward.back()) << "\npolicy written to " << out
              << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"NOMA hierarchical federated learning simulator"};
    app.require_subcommand(1);

    std::string config_path, seeds, out, schemes;
    int threads = 0;
    auto* run = app.add_subcommand("run", "run the configured scheme x seed grid");
    run->add_option("--config", config_path, "INI config")->required()->check(CLI::ExistingFile);
    run->add_option("--seeds", seeds, "comma-separated seeds");
    run->add_option("--out", out, "output directory");
    run->add_option("--schemes", schemes, "comma-separated schemes, e.g. FCEA,RCEA,GCEA+RRA");
    run->add_option("--threads", threads, "worker threads (0: all cores)");

    std::string instance, trace_out;
    auto* trace = app.add_subcommand("trace-pdd", "solve one scheduling instance and print the PDD trace");
    trace->add_option("--instance", instance, "instance INI")->required()->check(CLI::ExistingFile);
    trace->add_option("--out", trace_out, "write the trace CSV here instead of stdout");

    std::string train_config, params, rewards, access = "noma";
    std::uint64_t train_seed = 0;
    auto* train = app.add_subcommand("train-ddpg", "train the allocation policy and save it");
    train->add_option("--config", train_config, "INI config")->required()->check(CLI::ExistingFile);
    train->add_option("--out", params, "policy file (JSON)")->required();
    train->add_option("--seed", train_seed, "scenario seed (default: first configured seed)");
    train->add_option("--rewards", rewards, "per-episode reward CSV");
    train->add_option("--access", access, "noma or oma")->check(CLI::IsMember({"noma", "oma", "NOMA", "OMA"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(config_path, seeds, out, schemes, threads);
        if (*trace) return cmd_trace(instance, trace_out);
        if (*train) return cmd_train(train_config, params, train_seed, rewards, access);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
