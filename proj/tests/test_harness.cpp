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
#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "risvec/harness.hpp"

using namespace risvec;
namespace fs = std::filesystem;

namespace {

const char* kDefaultsFile = R"(# defaults from the parameter table
K = 8
N = 40
b = 3
eta = 3e6
W = 1e6
L = 500
c = 1e-28
F_max = 2.15e9
P_max_o = 1
P_max_l = 1
w1 = 1
w2 = 0.6
pen1 = 2
pen2 = 2
alpha_C = 0.001
alpha_A = 0.0001
gamma = 0.99
tau = 0.005
I = 64
D = 1000000
d = 2
sigma2_dbm = -110
)";

ExperimentSpec parse(const std::string& text) {
    std::istringstream is(text);
    return parse_config(is);
}

std::string tiny_config(const std::string& method, const std::string& extra = "") {
    return "name = tiny\nmethod = " + method +
           "\nK = 2\nN = 4\nb = 2\neta = 2e6\nT = 10\nepisodes = 3\nI = 8\n"
           "actor_hidden = 6,5\nlocal_critic_hidden = 6,5,4\nglobal_critic_hidden = 8,7,6\n" + extra;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("risvec-test-" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

template <typename F>
std::string config_error_key(F&& f) {
    try {
        f();
    } catch (const ConfigError& e) {
        return e.key();
    }
    return "<none>";
}

}  // namespace

TEST(Config, DefaultsFileRoundTrips) {
    const ExperimentSpec a = parse(kDefaultsFile);
    EXPECT_EQ(a.env, EnvConfig{});
    EXPECT_EQ(a.train, TrainConfig{});
    const std::string text = serialize_config(a);
    const ExperimentSpec b = parse(text);
    EXPECT_EQ(a, b);
    EXPECT_EQ(serialize_config(b), text);
}

TEST(Config, NonDefaultValuesRoundTrip) {
    ExperimentSpec s = parse(tiny_config("ddpg", "sweep_axis = c\nsweep_values = 1e-28, 2.5e-28\nrepetitions = 3\n"
                                                 "buffer_threshold = 4.5e5\nspeed_min = 2.1\nspeed_max = 4.3\n"
                                                 "bs = 1.5, -2, 30\nbcd_warm_start = true\nsigma2_dbm = -97.3\n"));
    s.env.channel.noise_power_w = 3.3e-13;
    EXPECT_EQ(parse(serialize_config(s)), s);
}

TEST(Config, EtaOverrideParses) {
    const ExperimentSpec s = parse(tiny_config("ddpg", "").replace(tiny_config("ddpg").find("eta = 2e6"), 9, "eta = 3e6"));
    EXPECT_EQ(s.env.arrival_rate, 3e6);
}

TEST(Config, MissingRequiredKeyIsNamed) {
    EXPECT_EQ(config_error_key([] { parse("N = 8\nb = 3\neta = 3e6\n"); }), "K");
    EXPECT_EQ(config_error_key([] { parse("K = 2\nb = 3\neta = 3e6\n"); }), "N");
}

TEST(Config, UnknownKeyCarriesLine) {
    try {
        parse("K = 2\nN = 8\n\nfrobnicate = 1\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.key(), "frobnicate");
        EXPECT_EQ(e.line(), 4);
        EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos);
    }
}

TEST(Config, SyntaxAndValueErrors) {
    EXPECT_EQ(config_error_key([] { parse("K = 2\nK = 3\n"); }), "K");
    EXPECT_EQ(config_error_key([] { parse("K = two\n"); }), "K");
    EXPECT_EQ(config_error_key([] { parse("K = 2.5\n"); }), "K");
    EXPECT_EQ(config_error_key([] { parse("just words\n"); }), "");
    EXPECT_EQ(config_error_key([] { parse("method = sarsa\n"); }), "method");
    EXPECT_EQ(config_error_key([] { parse("bs = 1, 2\n"); }), "bs");
    EXPECT_EQ(config_error_key([] { parse("sigma2_w = 1e-14\nsigma2_dbm = -110\n"); }), "sigma2_dbm");
}

TEST(Config, RangeViolationsAreNamed) {
    EXPECT_EQ(config_error_key([] { parse("K = 0\nN = 8\nb = 3\neta = 3e6\n"); }), "K");
    EXPECT_EQ(config_error_key([] { parse("K = 2\nN = 8\nb = 3\neta = -1\n"); }), "eta");
    EXPECT_EQ(config_error_key([] { parse("K = 2\nN = 8\nb = 3\neta = 1\ngamma = 1.5\n"); }), "gamma");
    EXPECT_EQ(config_error_key([] { parse("K = 2\nN = 8\nb = 3\neta = 1\nrepetitions = 0\n"); }), "repetitions");
    EXPECT_EQ(config_error_key([] { parse("K = 2\nN = 8\nb = 3\neta = 1\nsweep_axis = eta\nsweep_values = 1, -2\n"); }), "sweep_values");
    EXPECT_EQ(config_error_key([] { parse("K = 2\nN = 8\nb = 3\neta = 1\nsweep_axis = K\nsweep_values = 1\n"); }), "sweep_axis");
}

TEST(Config, CommentsAndBlankLines) {
    const auto s = parse("# header\n\n  K = 3   # trailing\nN=5\nb = 1\neta = 1e6\n");
    EXPECT_EQ(s.env.vehicles, 3);
    EXPECT_EQ(s.env.geometry.n_elements, 5);
}

TEST(Plan, SeedsAndCounts) {
    auto s = parse(tiny_config("random-power", "sweep_axis = eta\nsweep_values = 1e6, 2e6, 3e6\nrepetitions = 2\n"));
    const auto plans = plan_runs(s);
    ASSERT_EQ(plans.size(), 6u);
    EXPECT_EQ(plans[0].seed, plans[2].seed);  // same repetition, different sweep value
    EXPECT_NE(plans[0].seed, plans[1].seed);
    EXPECT_EQ(plans[5].resolved.env.arrival_rate, 3e6);
    EXPECT_EQ(plans[0].seed, run_seed(s.base_seed, "eta", 0));
    EXPECT_EQ(plans[0].resolved.train.seed, plans[0].seed);
}

TEST(Run, ManifestsMetricsAndDeterminism) {
    const fs::path out = scratch("run");
    auto s = parse(tiny_config("random-power", "sweep_axis = eta\nsweep_values = 1e6, 2e6, 3e6\nrepetitions = 2\n"));
    s.output_dir = out.string();
    const auto res = run_experiment(s);
    EXPECT_EQ(res.manifests.size(), 6u);
    EXPECT_EQ(res.records.size(), 18u);
    const std::string first = slurp(res.metrics_file);
    EXPECT_EQ(first.rfind("# risvec-metrics v1\nmethod,phase_mode,sweep_axis,sweep_value,repetition,seed,episode,", 0), 0u);
    EXPECT_EQ(first.find('\r'), std::string::npos);

    const auto manifest = nlohmann::json::parse(slurp(res.manifests[0]));
    EXPECT_EQ(manifest["schema"], kManifestSchema);
    EXPECT_EQ(manifest["status"], "complete");
    EXPECT_EQ(manifest["episodes_completed"], 3);
    EXPECT_EQ(manifest["code_version"], kCodeVersion);
    EXPECT_EQ(manifest["seed"].get<std::uint64_t>(), plan_runs(s)[0].seed);

    const auto again = run_experiment(s);
    EXPECT_EQ(slurp(again.metrics_file), first);
    for (const auto& m : res.manifests) EXPECT_EQ(slurp(m), slurp(m));

    RunOptions two;
    two.jobs = 2;
    EXPECT_EQ(slurp(run_experiment(s, two).metrics_file), first);
    fs::remove_all(out);
}

TEST(Run, ManifestReplayRegeneratesMetrics) {
    const fs::path out = scratch("replay");
    auto s = parse(tiny_config("maddpg-bcd", "sweep_axis = N\nsweep_values = 4, 6\n"));
    s.output_dir = out.string();
    const auto res = run_experiment(s);
    const auto replay = replay_manifest(res.manifests[1]);
    ASSERT_EQ(replay.size(), 3u);
    for (std::size_t i = 0; i < replay.size(); ++i) {
        EXPECT_EQ(format_record(replay[i]), format_record(res.records[3 + i]));
    }
    fs::remove_all(out);
}

TEST(Run, RandomPhaseModeRecorded) {
    const fs::path out = scratch("phase");
    auto s = parse(tiny_config("maddpg-random-phase"));
    s.output_dir = out.string();
    const auto res = run_experiment(s);
    for (const auto& r : res.records) EXPECT_EQ(r.phase_mode, "random");
    fs::remove_all(out);
}

TEST(Run, OutputRootFromEnvironment) {
    const fs::path root = scratch("root");
    ::setenv(kOutputRootEnv, root.c_str(), 1);
    auto s = parse(tiny_config("random-power"));
    EXPECT_EQ(resolve_output_dir(s), root / "tiny");
    const auto res = run_experiment(s);
    EXPECT_TRUE(fs::exists(root / "tiny" / "metrics.csv"));
    ::unsetenv(kOutputRootEnv);
    EXPECT_EQ(resolve_output_dir(s), fs::path("risvec-runs") / "tiny");
    fs::remove_all(root);
}

TEST(Metrics, ReadBackMatchesWrittenRecords) {
    const fs::path out = scratch("read");
    auto s = parse(tiny_config("ddpg"));
    s.output_dir = out.string();
    const auto res = run_experiment(s);
    const auto back = read_metrics(res.metrics_file);
    ASSERT_EQ(back.size(), res.records.size());
    for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(format_record(back[i]), format_record(res.records[i]));
    fs::remove_all(out);
}

TEST(Metrics, UnknownSchemaRejected) {
    const fs::path p = scratch("schema.csv");
    std::ofstream(p) << "# risvec-metrics v2\nmethod\n";
    EXPECT_THROW(read_metrics(p), std::runtime_error);
    std::ofstream(p) << "method,episode\n";
    EXPECT_THROW(read_metrics(p), std::runtime_error);
    fs::remove(p);
}

TEST(Summary, SingleRunHasZeroSpreadAndDefaultWindow) {
    std::vector<MetricRecord> rec;
    for (int ep = 0; ep < 120; ++ep) {
        MetricRecord r;
        r.method = "random-power";
        r.sweep_axis = "none";
        r.m.episode = ep;
        r.m.global_reward = ep < 70 ? -100.0 : -1.0;
        r.m.mean_total_power = 0.5;
        r.m.mean_buffer = 2e5;
        rec.push_back(r);
    }
    EXPECT_EQ(kDefaultSummaryWindow, 50);
    const auto rows = summarize(rec);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].runs, 1);
    EXPECT_EQ(rows[0].reward_mean, -1.0);
    EXPECT_EQ(rows[0].reward_sd, 0.0);
    EXPECT_EQ(rows[0].power_sd, 0.0);
    EXPECT_NEAR(summarize(rec, 100)[0].reward_mean, -50.5, 1e-12);
    EXPECT_THROW(summarize({}), DomainError);
    EXPECT_THROW(summarize_files({}), DomainError);
}

TEST(Summary, GroupsBySweepValueAcrossRepetitions) {
    std::vector<MetricRecord> rec;
    for (double n : {8.0, 16.0, 24.0})
        for (int rep = 0; rep < 3; ++rep)
            for (int ep = 0; ep < 10; ++ep) {
                MetricRecord r;
                r.method = "maddpg-bcd";
                r.sweep_axis = "N";
                r.sweep_value = n;
                r.repetition = rep;
                r.m.episode = ep;
                r.m.global_reward = -n - rep;
                rec.push_back(r);
            }
    const auto rows = summarize(rec);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0].sweep_value, 8.0);
    EXPECT_EQ(rows[2].sweep_value, 24.0);
    EXPECT_EQ(rows[1].runs, 3);
    EXPECT_DOUBLE_EQ(rows[1].reward_mean, -17.0);
    EXPECT_DOUBLE_EQ(rows[1].reward_sd, 1.0);
    const std::string table = format_summary(rows);
    EXPECT_EQ(table.rfind("method,sweep_axis,sweep_value,runs,reward_mean,reward_sd,", 0), 0u);
}
