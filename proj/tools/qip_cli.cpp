// Copyright 2026 The qipkit Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file qip_cli.cpp
 * Experiment driver. Subcommands:
 *   prop1            measurement-gap demonstration over random encoded pairs
 *   train            per-seed training runs (lambda 0 baseline + configured)
 *   cluster          clustering evaluation of a saved checkpoint
 *   sweep-lambda     full train+cluster grid over the configured lambdas
 *   export-features  raw or learned features of the held-out split as CSV
 * Exit codes: 0 success, 2 configuration/parse error, 3 runtime fault.
 * All outputs are written atomically and contain no timestamps, so repeated
 * runs with the same config and seeds produce identical files.
 */

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "qip/experiments.hpp"
#include "qip/gap.hpp"

namespace {

using nlohmann::ordered_json;

void write_json(const std::filesystem::path& path, const ordered_json& j) {
    qip::atomic_write_file(path.string(), j.dump(2) + "\n");
}

ordered_json pair_json(const qip::pair_metrics& p) {
    return {{"precision", p.precision},
            {"recall", p.recall},
            {"f_p", p.f_p},
            {"fowlkes_mallows", p.fowlkes_mallows},
            {"degenerate", p.degenerate}};
}

ordered_json bcubed_json(const qip::bcubed_metrics& b) {
    return {{"precision", b.precision}, {"recall", b.recall}, {"f_b", b.f_b}};
}

ordered_json space_json(const qip::space_eval& s) {
    return {{"pairwise", pair_json(s.pair)}, {"bcubed", bcubed_json(s.bcubed)}};
}

/// Random encoded pairs per seed and per observable pass; reports the
/// fraction whose overlap/measurement dot products disagree and the worst
/// witness-identity residual, plus an identical-pair sanity entry.
void cmd_prop1(const qip::run_config& cfg, const std::filesystem::path& out_dir) {
    const qip::encoding_spec enc = cfg.make_encoding();
    const qip::observable_spec obs = qip::observable_spec::parse(cfg.observable_passes);
    constexpr std::size_t pairs_per_seed = 1000;
    ordered_json axes = ordered_json::array();
    for (qip::pauli_axis axis : obs.passes) {
        qip::observable_spec single;
        single.passes = {axis};
        std::size_t total = 0;
        std::size_t gapped = 0;
        double max_residual = 0.0;
        for (std::uint64_t seed : cfg.run_seeds) {
            std::mt19937_64 rng(seed);
            std::normal_distribution<double> g(0.0, 1.0);
            std::vector<double> f1(enc.feature_dim);
            std::vector<double> f2(enc.feature_dim);
            for (std::size_t p = 0; p < pairs_per_seed; ++p) {
                for (double& x : f1) {
                    x = g(rng);
                }
                for (double& x : f2) {
                    x = g(rng);
                }
                const qip::gap_report rep =
                    qip::gap_pair(qip::encode(f1, enc), qip::encode(f2, enc), single);
                ++total;
                if (rep.abs_gap > 1e-3) {
                    ++gapped;
                }
                max_residual =
                    std::max(max_residual, std::abs(rep.witness_trace - rep.predicted_trace));
            }
        }
        std::mt19937_64 rng(cfg.run_seeds.front());
        std::normal_distribution<double> g(0.0, 1.0);
        std::vector<double> f(enc.feature_dim);
        for (double& x : f) {
            x = g(rng);
        }
        const qip::state_vector psi = qip::encode(f, enc);
        const qip::gap_report same = qip::gap_pair(psi, psi, single);
        axes.push_back({{"axis", std::string(1, qip::axis_to_char(axis))},
                        {"pairs", total},
                        {"gap_fraction", static_cast<double>(gapped) / static_cast<double>(total)},
                        {"max_witness_residual", max_residual},
                        {"identical_pair",
                         {{"overlap", std::abs(same.state_overlap)}, {"q_dot", same.q_dot}}}});
    }
    write_json(out_dir / "metrics.json", ordered_json{{"command", "prop1"},
                                                      {"encoder", cfg.encoder_kind},
                                                      {"n_qubits", enc.n_qubits},
                                                      {"feature_dim", enc.feature_dim},
                                                      {"pairs_per_seed", pairs_per_seed},
                                                      {"seeds", cfg.run_seeds},
                                                      {"axes", axes}});
}

/// Two runs per seed: a lambda=0 baseline and the configured lambda. Each
/// run writes its checkpoint and history; the summary records final losses.
void cmd_train(const qip::run_config& cfg, const std::filesystem::path& out_dir) {
    ordered_json runs = ordered_json::array();
    for (std::uint64_t seed : cfg.run_seeds) {
        const qip::experiment_dataset data = qip::build_dataset(cfg, seed);
        const std::pair<const char*, double> modes[] = {{"base", 0.0}, {"qip", cfg.train_lambda}};
        for (const auto& [mode, lambda] : modes) {
            const qip::trained_run run = qip::train_run(cfg, data, seed, lambda);
            char stem[64];
            std::snprintf(stem, sizeof stem, "seed%" PRIu64 "_%s", seed, mode);
            const std::string ckpt = std::string("checkpoint_") + stem + ".bin";
            const std::string hist = std::string("history_") + stem + ".csv";
            qip::save_checkpoint(run.state, (out_dir / ckpt).string());
            qip::atomic_write_file((out_dir / hist).string(), qip::history_to_csv(run.history));
            const qip::step_record& last = run.history.back();
            runs.push_back(
                {{"seed", seed},
                 {"mode", mode},
                 {"lambda", lambda},
                 {"final", {{"l", last.l}, {"k", last.k}, {"l_qip", last.l_qip}}},
                 {"checkpoint", ckpt},
                 {"history", hist}});
        }
    }
    write_json(out_dir / "metrics.json", ordered_json{{"command", "train"},
                                                      {"lambda", cfg.train_lambda},
                                                      {"epochs", cfg.train_epochs},
                                                      {"batch", cfg.train_batch},
                                                      {"seeds", cfg.run_seeds},
                                                      {"runs", runs}});
}

/// Rebuilds the dataset from the seed stored in the checkpoint (so the
/// evaluation sees the split that matches training) and scores clustering
/// in the classical and quantum feature spaces.
void cmd_cluster(const qip::run_config& cfg, const qip::train_state& st,
                 const std::string& checkpoint_path, const std::filesystem::path& out_dir) {
    const qip::experiment_dataset data = qip::build_dataset(cfg, st.seed);
    const qip::cluster_report rep = qip::evaluate_clustering(st, data, cfg);
    write_json(out_dir / "metrics.json",
               ordered_json{{"command", "cluster"},
                            {"checkpoint", checkpoint_path},
                            {"seed", st.seed},
                            {"lambda", st.opt.lambda},
                            {"observable", st.obs.str()},
                            {"test_samples", data.test.size()},
                            {"refiner", cfg.cluster_use_refiner},
                            {"classical", space_json(rep.classical)},
                            {"quantum", space_json(rep.quantum)}});
}

/// One full train+cluster per (lambda, seed); rows sorted by lambda then
/// seed, with a mean row closing each lambda group.
void cmd_sweep_lambda(const qip::run_config& cfg, const std::filesystem::path& out_dir) {
    std::vector<double> lambdas = cfg.sweep_lambdas;
    std::sort(lambdas.begin(), lambdas.end());
    std::vector<std::uint64_t> seeds = cfg.run_seeds;
    std::sort(seeds.begin(), seeds.end());
    std::string csv = "lambda, seed, quantum_f_p, quantum_f_b, classical_f_p, classical_f_b\n";
    char row[256];
    for (double lam : lambdas) {
        double mq_p = 0.0;
        double mq_b = 0.0;
        double mc_p = 0.0;
        double mc_b = 0.0;
        for (std::uint64_t seed : seeds) {
            const qip::experiment_dataset data = qip::build_dataset(cfg, seed);
            const qip::trained_run run = qip::train_run(cfg, data, seed, lam);
            const qip::cluster_report rep = qip::evaluate_clustering(run.state, data, cfg);
            std::snprintf(row, sizeof row, "%.17g, %" PRIu64 ", %.17g, %.17g, %.17g, %.17g\n",
                          lam, seed, rep.quantum.pair.f_p, rep.quantum.bcubed.f_b,
                          rep.classical.pair.f_p, rep.classical.bcubed.f_b);
            csv += row;
            mq_p += rep.quantum.pair.f_p;
            mq_b += rep.quantum.bcubed.f_b;
            mc_p += rep.classical.pair.f_p;
            mc_b += rep.classical.bcubed.f_b;
        }
        const double n = static_cast<double>(seeds.size());
        std::snprintf(row, sizeof row, "%.17g, mean, %.17g, %.17g, %.17g, %.17g\n", lam,
                      mq_p / n, mq_b / n, mc_p / n, mc_b / n);
        csv += row;
    }
    qip::atomic_write_file((out_dir / "sweep.csv").string(), csv);
}

/// Held-out-split features as CSV: the raw inputs, the learned classical
/// features v, or their quantum measurements q.
void cmd_export_features(const qip::run_config& cfg, const qip::train_state* st,
                         const std::string& space, std::optional<std::uint64_t> seed_override,
                         const std::filesystem::path& out_dir) {
    const std::uint64_t seed =
        seed_override ? *seed_override : (st != nullptr ? st->seed : cfg.run_seeds.front());
    const qip::experiment_dataset data = qip::build_dataset(cfg, seed);
    qip::matrix feats;
    if (space == "input") {
        feats = data.test.x;
    } else {
        const qip::matrix v = qip::forward_features(st->net, data.test.x);
        feats = (space == "classical") ? v : qip::quantum_features(*st, v);
    }
    qip::atomic_write_file((out_dir / "features.csv").string(),
                           qip::features_to_csv(feats, data.test.y));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum feature encoding and clustering experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    std::string checkpoint_path;
    std::string space = "input";
    std::uint64_t seed_value = 0;
    bool seed_given = false;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "configuration file (section.key = value lines)");
        sub->add_option("--out", out_override, "output directory (overrides run.out_dir)");
        sub->add_option("--seed", seed_value, "single seed overriding the configured list")
            ->each([&](const std::string&) { seed_given = true; });
    };

    CLI::App* prop1 = app.add_subcommand("prop1", "measurement-gap demonstration");
    CLI::App* train = app.add_subcommand("train", "baseline + configured-lambda training runs");
    CLI::App* cluster = app.add_subcommand("cluster", "clustering evaluation of a checkpoint");
    CLI::App* sweep = app.add_subcommand("sweep-lambda", "train+cluster grid over lambdas");
    CLI::App* exportf = app.add_subcommand("export-features", "held-out features as CSV");
    for (CLI::App* sub : {prop1, train, cluster, sweep, exportf}) {
        add_common(sub);
    }
    cluster->add_option("--checkpoint", checkpoint_path, "trained checkpoint to evaluate")
        ->required();
    exportf->add_option("--checkpoint", checkpoint_path,
                        "trained checkpoint (required for learned spaces)");
    exportf->add_option("--space", space, "feature space: input, classical, or quantum");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    qip::run_config cfg;
    std::optional<qip::train_state> st;
    std::filesystem::path out_dir;
    try {
        if (!config_path.empty()) {
            cfg = qip::load_config(config_path);
        }
        if (seed_given) {
            cfg.run_seeds = {seed_value};
        }
        if (!out_override.empty()) {
            cfg.run_out_dir = out_override;
        }
        cfg.validate();
        if (space != "input" && space != "classical" && space != "quantum") {
            throw qip::config_error("export-features: unknown space '" + space + "'");
        }
        if (exportf->parsed() && space != "input" && checkpoint_path.empty()) {
            throw qip::config_error("export-features: learned spaces need --checkpoint");
        }
        if (!checkpoint_path.empty()) {
            st = qip::load_checkpoint(checkpoint_path);
            if (!cfg.uses_idx() && st->net.dims.front() != cfg.data_input_dim) {
                throw qip::config_error("checkpoint/config mismatch: network expects input dim " +
                                        std::to_string(st->net.dims.front()) + ", config has " +
                                        std::to_string(cfg.data_input_dim));
            }
        }
        out_dir = cfg.run_out_dir;
        std::filesystem::create_directories(out_dir);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "qip: %s\n", e.what());
        return 2;
    }

    try {
        if (prop1->parsed()) {
            cmd_prop1(cfg, out_dir);
        } else if (train->parsed()) {
            cmd_train(cfg, out_dir);
        } else if (cluster->parsed()) {
            cmd_cluster(cfg, *st, checkpoint_path, out_dir);
        } else if (sweep->parsed()) {
            cmd_sweep_lambda(cfg, out_dir);
        } else {
            cmd_export_features(cfg, st ? &*st : nullptr, space,
                                seed_given ? std::optional<std::uint64_t>(seed_value)
                                           : std::nullopt,
                                out_dir);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "qip: %s\n", e.what());
        return 3;
    }
    return 0;
}
