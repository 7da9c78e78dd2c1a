#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "kathleen/bench.hpp"
#include "kathleen/config.hpp"
#include "kathleen/gradcheck.hpp"
#include "kathleen/model_io.hpp"
#include "kathleen/training.hpp"

namespace fs = std::filesystem;
using namespace kathleen;

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;

TextDataset load_split(const DatasetSpec& spec, int64_t limit) {
    TextDataset ds = load_dataset(spec);
    if (limit > 0 && static_cast<int64_t>(ds.texts.size()) > limit) {
        ds.texts.resize(static_cast<size_t>(limit));
        ds.labels.resize(static_cast<size_t>(limit));
    }
    return ds;
}

int cmd_train(const std::string& config_path, std::vector<uint64_t> seeds, const std::string& out_dir) {
    RunConfig cfg = RunConfig::parse_file(config_path);
    cfg.model.validate();
    cfg.train.validate();
    if (cfg.data.path.empty() || cfg.test_path.empty()) {
        throw ConfigError("config needs data.train_path and data.test_path");
    }
    TextDataset train_ds = load_split(cfg.train_spec(), cfg.limit_train);
    TextDataset test_ds = load_split(cfg.test_spec(), cfg.limit_test);
    fs::create_directories(out_dir);

    if (seeds.empty()) seeds.push_back(cfg.train.seed);
    std::vector<double> finals, bests;
    for (uint64_t seed : seeds) {
        TrainConfig tc = cfg.train;
        tc.seed = seed;
        Model32 model(cfg.model, seed);
        const std::string report_path = out_dir + "/report_seed" + std::to_string(seed) + ".jsonl";
        const std::string ckpt_path = out_dir + "/best_seed" + std::to_string(seed) + ".kath";
        std::ofstream report(report_path, std::ios::trunc);
        if (!report) throw IoError("cannot write " + report_path);

        std::printf("seed %llu: %zu train / %zu test, %lld params\n",
                    static_cast<unsigned long long>(seed), train_ds.texts.size(), test_ds.texts.size(),
                    static_cast<long long>(model.param_count()));
        TrainHooks hooks;
        hooks.on_epoch = [&](const EpochStats& e) {
            const std::string line = epoch_json_line(seed, e);
            report << line << "\n";
            report.flush();
            std::printf("  epoch %2lld  loss %.4f  train %.4f  test %.4f  (%.1fs)\n",
                        static_cast<long long>(e.epoch), e.train_loss, e.train_acc, e.test_acc, e.wall_s);
        };
        RunReport rr = train_model(model, tc, train_ds, test_ds, ckpt_path, hooks);
        nlohmann::json summary{{"seed", seed},
                               {"best_epoch", rr.best_epoch},
                               {"best_test_acc", rr.best_test_acc},
                               {"final_test_acc", rr.final_test_acc},
                               {"params_total", rr.params_total},
                               {"skipped_steps", rr.skipped_steps},
                               {"wall_total_s", rr.wall_total_s}};
        report << summary.dump() << "\n";
        std::printf("seed %llu: best test %.4f (epoch %lld), checkpoint %s\n",
                    static_cast<unsigned long long>(seed), rr.best_test_acc,
                    static_cast<long long>(rr.best_epoch), ckpt_path.c_str());
        finals.push_back(rr.final_test_acc);
        bests.push_back(rr.best_test_acc);
    }
    if (seeds.size() > 1) {
        auto mean_std = [](const std::vector<double>& v) {
            double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
            double s = 0;
            for (double x : v) s += (x - m) * (x - m);
            return std::make_pair(m, std::sqrt(s / static_cast<double>(v.size())));
        };
        auto [bm, bs] = mean_std(bests);
        auto [fm, fsd] = mean_std(finals);
        std::printf("summary over %zu seeds: best %.2f%% +/- %.2f%%, final %.2f%% +/- %.2f%%\n",
                    seeds.size(), 100 * bm, 100 * bs, 100 * fm, 100 * fsd);
    }
    return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& config_path, const std::string& split) {
    RunConfig cfg = RunConfig::parse_file(config_path);
    Model32 model = load_model(ckpt_path);
    DatasetSpec spec = (split == "train") ? cfg.train_spec() : cfg.test_spec();
    int64_t limit = (split == "train") ? cfg.limit_train : cfg.limit_test;
    TextDataset ds = load_split(spec, limit);
    auto r = evaluate_model(model, ds, cfg.train.max_bytes, cfg.train.batch_size);
    nlohmann::json conf = nlohmann::json::array();
    for (int t = 0; t < r.num_classes; ++t) {
        nlohmann::json row = nlohmann::json::array();
        for (int p = 0; p < r.num_classes; ++p) row.push_back(r.confusion[static_cast<size_t>(t * r.num_classes + p)]);
        conf.push_back(row);
    }
    nlohmann::json j{{"accuracy", r.accuracy}, {"count", r.count}, {"confusion", conf}};
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_gradcheck(bool fresh_init, double h, double tol, bool as_json) {
    GradCheckOptions opt;
    opt.h = h;
    opt.tol = tol;
    opt.randomize = !fresh_init;
    auto report = gradcheck_model(ModelConfig::tiny(), opt);
    if (as_json) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& r : report.rows) {
            rows.push_back({{"tensor", r.name}, {"max_rel_err", r.max_rel}, {"status", r.status}});
        }
        std::cout << nlohmann::json{{"ok", report.ok}, {"rows", rows}}.dump(2) << "\n";
    } else {
        std::printf("%-44s %12s  %s\n", "tensor", "max_rel_err", "status");
        for (const auto& r : report.rows) {
            std::printf("%-44s %12.3e  %s\n", r.name.c_str(), r.max_rel, r.status.c_str());
        }
        std::printf("gradcheck: %s\n", report.ok ? "PASS" : "FAIL");
    }
    return report.ok ? 0 : kExitCheckFailed;
}

int cmd_bench(const BenchOptions& opt, const std::string& config_path, const std::string& out_csv) {
    ModelConfig mc;
    if (!config_path.empty()) mc = RunConfig::parse_file(config_path).model;
    std::vector<BenchRow> rows;
    if (!opt.checkpoint.empty()) {
        int64_t need = 0;
        for (int64_t len : opt.lengths) need = std::max(need, mc.frame_count(len));
        Model32 model = load_model(opt.checkpoint, need);
        ModelConfig c = model.config();
        rows = run_bench<float>(c, opt);
    } else {
        rows = run_bench<float>(mc, opt);
    }
    const std::string csv = bench_csv(rows);
    if (out_csv.empty()) {
        std::cout << csv;
    } else {
        std::ofstream out(out_csv, std::ios::trunc);
        if (!out) throw IoError("cannot write " + out_csv);
        out << csv;
        std::cout << csv;
    }
    for (size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].length == 2 * rows[i - 1].length) {
            std::printf("ratio t(%lld)/t(%lld) = %.2f, mem ratio = %.2f\n",
                        static_cast<long long>(rows[i].length), static_cast<long long>(rows[i - 1].length),
                        rows[i].mean_ms / rows[i - 1].mean_ms,
                        static_cast<double>(rows[i].peak_bytes) / static_cast<double>(rows[i - 1].peak_bytes));
        }
    }
    return 0;
}

int cmd_inspect(const std::string& ckpt_path, bool show_defaults, bool as_json) {
    if (show_defaults) {
        std::cout << RunConfig::defaults_text();
        return 0;
    }
    Model32 model = load_model(ckpt_path);
    auto by_module = model.param_count_by_module();
    std::map<std::string, int64_t> by_tensor;
    for (const auto& p : model.params()) by_tensor[p.name] = p.tensor.numel();

    std::vector<std::string> violations;
    auto expect = [&](const std::string& name, int64_t want) {
        auto it = by_tensor.find(name);
        const int64_t got = (it == by_tensor.end()) ? 0 : it->second;
        if (got != want) {
            violations.push_back(name + " has " + std::to_string(got) + " params, expected " + std::to_string(want));
        }
    };
    expect("frontend.wavetable", 256);
    expect("frontend.ph.phases", 6);
    expect("channels.reverb.alpha_pos", 256);

    // empirical decay-gate bound on random bytes
    Prng rng(1234);
    const int64_t probe_len = std::min<int64_t>(model.config().lmax * model.config().hop, 256);
    auto batch = random_byte_batch(8, std::max<int64_t>(probe_len, model.config().window), rng,
                                   static_cast<int>(model.config().num_classes));
    ForwardCtxT<float> ctx;
    auto fe = model.frontend().forward(batch, ctx);
    auto gate = model.sequencer().reverb.gate(fe.h);
    float gmin = gate.data()[0], gmax = gate.data()[0];
    for (float g : gate.data()) {
        gmin = std::min(gmin, g);
        gmax = std::max(gmax, g);
    }
    if (!(gmin > kGammaMin && gmax < kGammaMax)) {
        violations.push_back("decay gate outside (" + std::to_string(kGammaMin) + ", " + std::to_string(kGammaMax) +
                             "): observed [" + std::to_string(gmin) + ", " + std::to_string(gmax) + "]");
    }

    if (as_json) {
        nlohmann::json jt;
        for (const auto& [k, v] : by_tensor) jt[k] = v;
        nlohmann::json jm;
        for (const auto& [k, v] : by_module) jm[k] = v;
        nlohmann::json j{{"per_tensor", jt},
                         {"per_module", jm},
                         {"total", model.param_count()},
                         {"gate_min", gmin},
                         {"gate_max", gmax},
                         {"violations", violations}};
        std::cout << j.dump(2) << "\n";
    } else {
        std::printf("%-36s %12s\n", "tensor", "params");
        for (const auto& p : model.params()) {
            std::printf("%-36s %12lld\n", p.name.c_str(), static_cast<long long>(p.tensor.numel()));
        }
        std::printf("\n%-36s %12s\n", "module", "params");
        for (const auto& [k, v] : by_module) std::printf("%-36s %12lld\n", k.c_str(), static_cast<long long>(v));
        std::printf("%-36s %12lld\n", "total", static_cast<long long>(model.param_count()));
        std::printf("decay gate on random bytes: [%.6f, %.6f]\n", gmin, gmax);
        for (const auto& v : violations) std::printf("VIOLATION: %s\n", v.c_str());
        if (violations.empty()) std::printf("structural counts OK\n");
    }
    return violations.empty() ? 0 : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kathleen: byte-level text classifier"};
    app.require_subcommand(1);

    // train
    auto* train = app.add_subcommand("train", "train a model from a config file");
    std::string train_config, train_out = "runs";
    std::string seeds_csv;
    train->add_option("--config", train_config, "run config file")->required();
    train->add_option("--seed", seeds_csv, "seed or comma-separated seeds (overrides train.seed)");
    train->add_option("--out", train_out, "output directory");

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    std::string eval_ckpt, eval_config, eval_split = "test";
    eval->add_option("--checkpoint", eval_ckpt, "checkpoint path")->required();
    eval->add_option("--config", eval_config, "run config file (data section)")->required();
    eval->add_option("--split", eval_split, "train | test")->check(CLI::IsMember({"train", "test"}));

    // gradcheck
    auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient check (64-bit mode)");
    std::string gc_size = "tiny";
    bool gc_fresh = false, gc_json = false;
    double gc_h = 1e-4, gc_tol = 1e-3;
    gc->add_option("--size", gc_size, "model size (tiny)")->check(CLI::IsMember({"tiny"}));
    gc->add_flag("--fresh-init", gc_fresh, "check at the structured init instead of randomized params");
    gc->add_flag("--json", gc_json, "machine-readable output");
    gc->add_option("--fd-step", gc_h, "central-difference step");
    gc->add_option("--tol", gc_tol, "max relative error");

    // bench
    auto* bench = app.add_subcommand("bench", "timing and memory vs sequence length");
    BenchOptions bopt;
    std::string bench_lengths = "1024,2048,4096", bench_config, bench_out;
    bench->add_option("--lengths", bench_lengths, "comma-separated byte lengths");
    bench->add_option("--repeat", bopt.repeat, "repetitions per length");
    bench->add_option("--batch", bopt.batch, "batch size");
    bench->add_flag("--backward", bopt.backward, "time forward+backward");
    bench->add_option("--checkpoint", bopt.checkpoint, "bench a trained checkpoint");
    bench->add_option("--config", bench_config, "run config file (model section)");
    bench->add_option("--out", bench_out, "CSV output path (default stdout)");

    // inspect
    auto* inspect = app.add_subcommand("inspect", "parameter accounting of a checkpoint");
    std::string inspect_ckpt;
    bool inspect_defaults = false, inspect_json = false;
    inspect->add_option("checkpoint", inspect_ckpt, "checkpoint path");
    inspect->add_flag("--defaults", inspect_defaults, "print every config key with its default");
    inspect->add_flag("--json", inspect_json, "machine-readable output");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train) {
            std::vector<uint64_t> seeds;
            if (!seeds_csv.empty()) {
                std::stringstream ss(seeds_csv);
                std::string item;
                while (std::getline(ss, item, ',')) seeds.push_back(std::stoull(item));
            }
            return cmd_train(train_config, seeds, train_out);
        }
        if (*eval) return cmd_eval(eval_ckpt, eval_config, eval_split);
        if (*gc) return cmd_gradcheck(gc_fresh, gc_h, gc_tol, gc_json);
        if (*bench) {
            bopt.lengths.clear();
            std::stringstream ss(bench_lengths);
            std::string item;
            while (std::getline(ss, item, ',')) bopt.lengths.push_back(std::stoll(item));
            return cmd_bench(bopt, bench_config, bench_out);
        }
        if (*inspect) {
            if (!inspect_defaults && inspect_ckpt.empty()) {
                std::cerr << "inspect: give a checkpoint path or --defaults\n";
                return kExitConfig;
            }
            return cmd_inspect(inspect_ckpt, inspect_defaults, inspect_json);
        }
    } catch (const DivergenceError& e) {
        std::cerr << e.what() << "\n";
        return kExitDiverged;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return 0;
}
