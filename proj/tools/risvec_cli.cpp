// SPDX-License-Identifier: Apache-2.0
//
// risvec: RIS-assisted vehicular edge computing simulator and trainer
// Copyright (C) 2026 The risvec authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "risvec/diagnostics.hpp"
#include "risvec/harness.hpp"

namespace {

int cmd_run(const std::string& config, const std::string& method, const std::optional<std::uint64_t>& seed,
            const std::optional<int>& episodes, const std::string& output, unsigned jobs, bool quiet) {
    risvec::ExperimentSpec spec = risvec::load_config(config);
    if (!method.empty()) spec.method = risvec::parse_method(method);
    if (seed) spec.base_seed = *seed;
    if (episodes) spec.train.episodes = *episodes;
    if (!output.empty()) spec.output_dir = output;
    spec.validate();

    risvec::RunOptions opts;
    opts.jobs = jobs;
    if (!quiet)
        opts.on_episode = [](const std::string& run_id, const risvec::EpisodeMetrics& m) {
            if ((m.episode + 1) % 10 == 0)
                std::fprintf(stderr, "%s ep %d reward %.4f power %.4f buffer %.0f\n", run_id.c_str(), m.episode + 1,
                             m.global_reward, m.mean_total_power, m.mean_buffer);
        };
    const auto res = risvec::run_experiment(spec, opts);
    std::cout << "metrics: " << res.metrics_file.string() << "\n";
    std::cout << "manifests: " << res.manifests.size() << " in " << (res.output_dir / "manifests").string() << "\n";
    std::cout << risvec::format_summary(risvec::summarize(res.records));
    return 0;
}

int cmd_replay(const std::string& manifest, const std::string& output) {
    const auto records = risvec::replay_manifest(manifest);
    if (records.empty()) return 0;
    std::ofstream file;
    if (!output.empty()) file.open(output, std::ios::binary);
    std::ostream& os = output.empty() ? std::cout : file;
    os << "# " << risvec::kMetricsSchema << '\n'
       << risvec::metrics_header(static_cast<int>(records.front().m.agent_rewards.size())) << '\n';
    for (const auto& r : records) os << risvec::format_record(r) << '\n';
    return os ? 0 : 1;
}

int cmd_summarize(const std::vector<std::string>& inputs, int window, const std::string& output) {
    std::vector<std::filesystem::path> files(inputs.begin(), inputs.end());
    const std::string table = risvec::format_summary(risvec::summarize_files(files, window));
    if (output.empty()) {
        std::cout << table;
    } else {
        std::ofstream os(output, std::ios::binary);
        os << table;
        if (!os) throw std::runtime_error("cannot write '" + output + "'");
    }
    return 0;
}

int cmd_oracle(int instances, int n, int bits, int k, int draws, std::uint64_t seed, int sweeps) {
    const auto r = risvec::run_bcd_oracle(instances, n, bits, k, draws, seed, sweeps);
    std::printf("instances %d  N=%d b=%d K=%d sweeps=%d\n", r.instances, n, bits, k, sweeps);
    std::printf("bcd above brute force: %d\n", r.above_oracle);
    std::printf("bcd below initial:     %d\n", r.below_init);
    std::printf("monotonicity breaks:   %d\n", r.monotone_breaks);
    std::printf("bcd >= best of %d random draws: %d/%d\n", draws, r.beats_random, r.instances);
    std::printf("bcd/optimum ratio: mean %.6f min %.6f\n", r.mean_ratio, r.min_ratio);
    const bool ok = r.above_oracle == 0 && r.below_init == 0 && r.monotone_breaks == 0;
    return ok ? 0 : 1;
}

int cmd_gradcheck(int nets, double h, std::uint64_t seed, double tol) {
    const auto r = risvec::run_gradcheck(nets, h, seed);
    std::printf("nets %d  entries %zu  max relative error %.3e (net %d)\n", r.nets, r.values, r.max_rel_error, r.worst_net);
    return r.max_rel_error < tol ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"risvec: RIS-assisted vehicular edge computing simulator and trainer"};
    app.set_version_flag("--version", std::string(risvec::kCodeVersion));
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run an experiment from a config file, or replay a manifest");
    std::string config, method, output, manifest;
    std::optional<std::uint64_t> seed;
    std::optional<int> episodes;
    unsigned jobs = 1;
    bool quiet = false;
    run->add_option("--config", config, "experiment config file")->check(CLI::ExistingFile);
    run->add_option("--method", method, "maddpg-bcd | maddpg-random-phase | ddpg | random-power");
    run->add_option("--seed", seed, "base seed override");
    run->add_option("--episodes", episodes, "episode count override")->check(CLI::NonNegativeNumber);
    run->add_option("--output", output, "output directory (or metrics file with --manifest)");
    run->add_option("--manifest", manifest, "replay one run manifest instead of a config")->check(CLI::ExistingFile);
    run->add_option("--jobs", jobs, "parallel runs")->check(CLI::PositiveNumber);
    run->add_flag("--quiet", quiet, "no per-episode progress");

    auto* sum = app.add_subcommand("summarize", "final-window statistics per method and sweep value");
    std::vector<std::string> inputs;
    int window = risvec::kDefaultSummaryWindow;
    std::string sum_out;
    sum->add_option("--input", inputs, "metrics files")->required()->check(CLI::ExistingFile);
    sum->add_option("--window", window, "final episodes per run")->check(CLI::PositiveNumber);
    sum->add_option("--output", sum_out, "write the table here instead of stdout");

    auto* oracle = app.add_subcommand("oracle", "BCD against exhaustive search on random instances");
    int instances = 100, n = 3, bits = 2, k = 2, draws = 100, sweeps = 1;
    std::uint64_t oracle_seed = 7;
    oracle->add_option("--instances", instances)->check(CLI::PositiveNumber);
    oracle->add_option("--N", n)->check(CLI::Range(1, 20));
    oracle->add_option("--b", bits)->check(CLI::Range(0, 10));
    oracle->add_option("--K", k)->check(CLI::PositiveNumber);
    oracle->add_option("--draws", draws, "random phase draws per instance")->check(CLI::NonNegativeNumber);
    oracle->add_option("--seed", oracle_seed);
    oracle->add_option("--sweeps", sweeps, "BCD sweeps over all elements")->check(CLI::PositiveNumber);

    auto* grad = app.add_subcommand("gradcheck", "backprop against central finite differences");
    int nets = 20;
    double h = 1e-5, tol = 1e-4;
    std::uint64_t grad_seed = 3;
    grad->add_option("--nets", nets)->check(CLI::PositiveNumber);
    grad->add_option("--step", h, "finite-difference step")->check(CLI::PositiveNumber);
    grad->add_option("--tol", tol, "maximum relative error")->check(CLI::PositiveNumber);
    grad->add_option("--seed", grad_seed);

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) {
            if (!manifest.empty()) return cmd_replay(manifest, output);
            if (config.empty()) throw CLI::RequiredError("--config or --manifest");
            return cmd_run(config, method, seed, episodes, output, jobs, quiet);
        }
        if (*sum) return cmd_summarize(inputs, window, sum_out);
        if (*oracle) return cmd_oracle(instances, n, bits, k, draws, oracle_seed, sweeps);
        if (*grad) return cmd_gradcheck(nets, h, grad_seed, tol);
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "risvec: %s\n", e.what());
        return 2;
    }
    return 0;
}
