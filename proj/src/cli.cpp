// Copyright (c) 2026, the cosflow authors
// SPDX-License-Identifier: Apache-2.0

#include "cosflow/cli.hpp"

#include "cosflow/checkpoint.hpp"
#include "cosflow/config.hpp"
#include "cosflow/experiments.hpp"
#include "cosflow/io.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <map>
#include <optional>
#include <sstream>

namespace cosflow {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string seed_suffix(std::uint64_t seed) { return "_seed" + std::to_string(seed); }

// Which benchmark a command starts from before user config is layered on top.
json base_document(const std::string& command) {
    if (command == "repro finetune-gain" || command == "repro grad-noise") return aniso_patch();
    return json::object();
}

class RunContext {
public:
    RunContext(const std::string& command, const json& resolved, fs::path dir)
        : cfg_(parse_config(resolved)), manifest_(command, resolved, std::move(dir)) {
        fs::create_directories(manifest_.dir());
        write("config.resolved.json", resolved.dump(2) + "\n");
        write("seeds.json", json(cfg_.seeds).dump() + "\n");
    }

    [[nodiscard]] const ExperimentConfig& cfg() const { return cfg_; }
    [[nodiscard]] fs::path path(const std::string& name) const { return manifest_.dir() / name; }

    void write(const std::string& name, const std::string& content, bool deterministic = true) {
        write_file(path(name), content);
        manifest_.add_output(name, deterministic);
    }
    void write_batch(const std::string& name, const Batch& batch) {
        write_batch_csv(path(name), batch);
        manifest_.add_output(name);
    }
    void write_checkpoint(const std::string& name, const Checkpoint& ckpt) {
        save_checkpoint(ckpt, path(name));
        manifest_.add_output(name);
    }
    void input(const std::string& file) { manifest_.add_input(file); }
    void finish() const { manifest_.write(); }

private:
    ExperimentConfig cfg_;
    RunManifest manifest_;
};

const std::string& require_input(const std::string& value, const char* what) {
    if (value.empty()) throw ConfigError(std::string("missing required input: ") + what);
    return value;
}

Checkpoint load_input_checkpoint(RunContext& ctx) {
    const std::string& path = require_input(ctx.cfg().inputs.checkpoint, "--checkpoint");
    ctx.input(path);
    return load_checkpoint(path);
}

json lineage_entry(const char* stage, CouplingStrategy s, std::uint64_t seed, int epochs) {
    return {{"stage", stage}, {"strategy", to_string(s)}, {"seed", seed}, {"epochs", epochs}};
}

std::string records_csv(const std::vector<RunRecord>& records) {
    std::ostringstream out;
    write_records_csv(out, records);
    return out.str();
}

std::string trajectory_csv(const Trajectory& t) {
    std::ostringstream out;
    write_trajectory_csv(out, t);
    return out.str();
}

std::string profile_csv(const std::vector<CosinePoint>& profile) {
    std::ostringstream out;
    out << "t,mean_cos,std_cos\n";
    for (const CosinePoint& p : profile) {
        out << format_double(p.t) << ',' << format_double(p.mean_cos) << ',' << format_double(p.std_cos) << '\n';
    }
    return out.str();
}

json metric_line(const char* name, double value, std::size_t n, std::uint64_t seed, const std::string& digest) {
    return MetricReport{name, value, n, seed, digest}.to_json();
}

// ---------------------------------------------------------------- commands

void cmd_gen_data(RunContext& ctx, std::ostream& log) {
    for (std::uint64_t s : ctx.cfg().seeds) {
        const ExperimentConfig cfg = for_replicate(ctx.cfg(), s);
        ctx.write_batch("data" + seed_suffix(s) + ".csv", training_data(cfg));
    }
    log << "wrote " << ctx.cfg().seeds.size() << " dataset(s)\n";
}

void cmd_train(RunContext& ctx, std::ostream& log) {
    struct Out {
        std::uint64_t seed;
        TrainedModel model;
        TrainConfig trainer;
    };
    auto results = map_seeds(ctx.cfg().seeds, [&](std::uint64_t s) {
        const ExperimentConfig cfg = for_replicate(ctx.cfg(), s);
        return Out{s, train_model(cfg, training_data(cfg)), cfg.trainer};
    });
    for (const Out& r : results) {
        ctx.write("train" + seed_suffix(r.seed) + ".csv", records_csv(r.model.records), !r.trainer.record_wall_time);
        ctx.write_checkpoint("model" + seed_suffix(r.seed) + ".ckpt",
                             {r.model.params, r.model.optimizer,
                              json::array({lineage_entry("train", r.trainer.strategy, r.trainer.seed, r.trainer.epochs)})});
        const double last = r.model.records.empty() ? 0.0 : r.model.records.back().loss;
        log << "seed " << r.seed << ": " << r.model.records.size() << " steps, final loss " << last << '\n';
    }
}

void cmd_finetune(RunContext& ctx, std::ostream& log) {
    Checkpoint ckpt = load_input_checkpoint(ctx);
    const ExperimentConfig cfg = for_replicate(ctx.cfg(), ctx.cfg().seeds.front());
    TrainConfig base = cfg.trainer;
    base.seed = cfg.finetune_seed;
    const FinetuneResult r = finetune(ckpt, training_data(cfg), cfg.finetune, base);

    json lineage = ckpt.lineage;
    lineage.push_back(lineage_entry("finetune", cfg.finetune.strategy, base.seed, cfg.finetune.extra_epochs));
    lineage.back()["moments_reset"] = r.moments_reset;
    ctx.write("finetune.csv", records_csv(r.run.records), !cfg.trainer.record_wall_time);
    ctx.write_checkpoint("model.ckpt", {r.run.params, r.run.optimizer, lineage});
    ctx.write("finetune_summary.json",
              json{{"extra_epochs", cfg.finetune.extra_epochs},
                   {"strategy", to_string(cfg.finetune.strategy)},
                   {"moments_reset", r.moments_reset},
                   {"epoch", r.run.params.epoch},
                   {"steps", r.run.params.steps}}
                      .dump(2) + "\n");
    log << "fine-tuned to epoch " << r.run.params.epoch << " (" << r.run.records.size() << " steps)\n";
}

void cmd_sample(RunContext& ctx, std::ostream& log) {
    const Checkpoint ckpt = load_input_checkpoint(ctx);
    const SamplerConfig& sc = ctx.cfg().sampler;
    const SampleResult r = draw_samples(ckpt.params, sc, sc.n_samples);
    ctx.write_batch("samples.csv", r.samples);
    ctx.write("trajectory.csv", trajectory_csv(r.trajectory));
    log << "drew " << r.samples.rows() << " samples in " << r.trajectory.steps.size() << " steps\n";
}

void cmd_eval(RunContext& ctx, std::ostream& log) {
    const ExperimentConfig& cfg = ctx.cfg();
    const std::string& samples_path = require_input(cfg.inputs.samples, "--samples");
    ctx.input(samples_path);
    const Batch samples = read_batch_csv(samples_path);
    Batch reference;
    if (!cfg.inputs.reference.empty()) {
        ctx.input(cfg.inputs.reference);
        reference = read_batch_csv(cfg.inputs.reference);
    } else {
        reference = reference_data(cfg);
    }
    if (samples.cols() != reference.cols()) throw ShapeError("eval: samples and reference differ in dimension");
    const Eigen::Index n = std::min(samples.rows(), reference.rows());
    const std::string digest = sha256_file(ctx.path("config.resolved.json"));
    const double ed = energy_distance(samples, reference, cfg.metrics.estimator);
    const double sw = sliced_w2(samples.topRows(n), reference.topRows(n), cfg.metrics.n_proj, cfg.metrics.seed);
    std::string lines = metric_line("energy_distance", ed, static_cast<std::size_t>(samples.rows()), cfg.metrics.seed, digest).dump() + "\n" +
                        metric_line("sliced_w2", sw, static_cast<std::size_t>(n), cfg.metrics.seed, digest).dump() + "\n";
    ctx.write("metrics.jsonl", lines);
    log << "energy_distance " << ed << "\nsliced_w2 " << sw << '\n';
}

void cmd_schedule_dump(RunContext& ctx, std::ostream& log) {
    const SamplerConfig& sc = ctx.cfg().sampler;
    const auto uniform = uniform_schedule(sc.steps).times();
    const auto shifted = snr_shift_schedule(sc.steps, sc.ratio).times();
    std::vector<double> adaptive;
    if (!ctx.cfg().inputs.checkpoint.empty()) {
        const Checkpoint ckpt = load_input_checkpoint(ctx);
        const SampleResult r = sample_ode(model_field(ckpt.params), ckpt.params.dim, sc.n_samples, sc.adaptive, sc.seed);
        double t = 1.0;
        adaptive.push_back(t);
        for (const TrajectoryStep& s : r.trajectory.steps) {
            t = s.t - s.dt;
            adaptive.push_back(t);
        }
    }
    std::ostringstream out;
    out << "step,t_uniform,t_snr_shift,t_adaptive\n";
    const std::size_t rows = std::max(uniform.size(), adaptive.size());
    for (std::size_t k = 0; k < rows; ++k) {
        out << k << ',';
        if (k < uniform.size()) out << format_double(uniform[k]);
        out << ',';
        if (k < shifted.size()) out << format_double(shifted[k]);
        out << ',';
        if (k < adaptive.size()) out << format_double(adaptive[k]);
        out << '\n';
    }
    ctx.write("schedules.csv", out.str());
    log << "wrote " << rows << " schedule rows\n";
}

void cmd_couple_bench(RunContext& ctx, std::ostream& log) {
    const BenchConfig& bc = ctx.cfg().bench;
    std::mt19937_64 rng(bc.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int d = ctx.cfg().dataset.d;
    std::ostringstream timings;
    timings << "n,cost_kind,repeat,seconds,total_cost\n";
    json plans = json::array();
    for (int n : bc.sizes) {
        for (int rep = 0; rep < bc.repeats; ++rep) {
            Batch data(n, d), noise(n, d);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < d; ++j) {
                    data(i, j) = normal(rng);
                    noise(i, j) = normal(rng);
                }
            }
            const CostMatrix cost = build_cost_matrix(data, noise, bc.cost_kind);
            const auto start = std::chrono::steady_clock::now();
            const AssignmentPlan plan = solve_assignment(cost);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            timings << n << ',' << to_string(bc.cost_kind) << ',' << rep << ',' << format_double(secs) << ','
                    << format_double(plan.total_cost) << '\n';
            json entry{{"n", n}, {"repeat", rep}, {"plan", to_json(plan)}};
            if (n <= kBruteForceLimit) {
                entry["cost"] = to_json(cost);
                entry["brute_force"] = to_json(brute_force_assignment(cost));
            }
            plans.push_back(std::move(entry));
        }
        log << "n = " << n << " done\n";
    }
    ctx.write("couple_bench.csv", timings.str(), false);
    ctx.write("plans.json", plans.dump(2) + "\n");
}

void cmd_probe(RunContext& ctx, std::ostream& log) {
    const Checkpoint ckpt = load_input_checkpoint(ctx);
    const ExperimentConfig cfg = for_replicate(ctx.cfg(), ctx.cfg().seeds.front());
    const GradientNoiseStats st = gradient_noise_probe(ckpt.params, training_data(cfg), cfg.probe);
    ctx.write("probe.json", json{{"strategy", to_string(cfg.probe.strategy)},
                                 {"n_batches", st.n_batches},
                                 {"grad_cov_trace", st.grad_cov_trace},
                                 {"loss_variance", st.loss_variance},
                                 {"mean_loss", st.mean_loss},
                                 {"mean_grad_norm", st.mean_grad_norm}}
                                .dump(2) + "\n");
    log << "grad_cov_trace " << st.grad_cov_trace << "  loss_variance " << st.loss_variance << '\n';
}

// Per-seed model for the mixture figures: the given checkpoint, or a fresh training run.
ModelParams figure_model(RunContext& ctx, const ExperimentConfig& cfg, std::uint64_t seed, const std::optional<Checkpoint>& given) {
    if (given) return given->params;
    TrainedModel m = train_model(cfg, training_data(cfg));
    ctx.write("train" + seed_suffix(seed) + ".csv", records_csv(m.records), !cfg.trainer.record_wall_time);
    return std::move(m.params);
}

void cmd_repro(RunContext& ctx, const std::string& figure, std::ostream& log) {
    std::optional<Checkpoint> given;
    if (!ctx.cfg().inputs.checkpoint.empty() && figure != "finetune-gain" && figure != "grad-noise") {
        given = load_input_checkpoint(ctx);
    }
    std::ostringstream summary;
    if (figure == "fig2a") {
        summary << "seed,cos_t0.9,cos_t0.1\n";
        for (std::uint64_t s : ctx.cfg().seeds) {
            const ExperimentConfig cfg = for_replicate(ctx.cfg(), s);
            const ModelParams p = figure_model(ctx, cfg, s, given);
            const CosineTrend trend = cosine_trend(p, cfg.sampler.n_samples, cfg.sampler.seed);
            ctx.write("cosine_profile" + seed_suffix(s) + ".csv", profile_csv(trend.profile));
            summary << s << ',' << format_double(trend.late_cos) << ',' << format_double(trend.early_cos) << '\n';
            log << "seed " << s << ": cos(t=0.9) = " << trend.late_cos << ", cos(t=0.1) = " << trend.early_cos << '\n';
        }
        ctx.write("fig2a.csv", summary.str());
    } else if (figure == "fig2b") {
        summary << "seed,schedule,step,t\n";
        for (std::uint64_t s : ctx.cfg().seeds) {
            const ExperimentConfig cfg = for_replicate(ctx.cfg(), s);
            const ModelParams p = figure_model(ctx, cfg, s, given);
            const int steps = cfg.sampler.steps;
            auto emit = [&](const char* name, const std::vector<double>& times) {
                for (std::size_t k = 0; k < times.size(); ++k) summary << s << ',' << name << ',' << k << ',' << format_double(times[k]) << '\n';
            };
            emit("uniform", uniform_schedule(steps).times());
            emit("snr_shift", snr_shift_schedule(steps, cfg.sampler.ratio).times());
            for (bool invert : {false, true}) {
                AdaptiveConfig a = cfg.sampler.adaptive;
                a.invert_gate = invert;
                const SampleResult r = sample_ode(model_field(p), p.dim, cfg.sampler.n_samples, a, cfg.sampler.seed);
                std::vector<double> times{1.0};
                for (const TrajectoryStep& st : r.trajectory.steps) times.push_back(st.t - st.dt);
                emit(invert ? "adaptive_inverted" : "adaptive", times);
            }
        }
        ctx.write("fig2b.csv", summary.str());
    } else if (figure == "fid-vs-steps") {
        summary << "seed,budget,uniform,snr_shift,adaptive,adaptive_inverted,adaptive_steps,inverted_steps,winning_gate\n";
        log << "seed budget   uniform  snr_shift  adaptive  inverted\n";
        for (std::uint64_t s : ctx.cfg().seeds) {
            const ExperimentConfig cfg = for_replicate(ctx.cfg(), s);
            const ModelParams p = figure_model(ctx, cfg, s, given);
            const Batch reference = reference_data(cfg);
            for (int budget : cfg.repro.budgets) {
                const BudgetComparison c = compare_schedules(p, cfg, budget, reference);
                summary << s << ',' << budget << ',' << format_double(c.uniform) << ',' << format_double(c.snr_shift) << ','
                        << format_double(c.adaptive) << ',' << format_double(c.adaptive_inverted) << ',' << c.adaptive_steps << ','
                        << c.inverted_steps << ',' << c.winning_gate() << '\n';
                log << s << ' ' << budget << "  " << c.uniform << "  " << c.snr_shift << "  " << c.adaptive << "  "
                    << c.adaptive_inverted << '\n';
            }
        }
        ctx.write("fid_vs_steps.csv", summary.str());
    } else if (figure == "finetune-gain" || figure == "grad-noise") {
        summary << "seed,energy_base,energy_cosine_ot,energy_independent,grad_trace_cosine_ot,grad_trace_independent,"
                   "loss_var_cosine_ot,loss_var_independent\n";
        for (std::uint64_t s : ctx.cfg().seeds) {
            const ExperimentConfig cfg = for_replicate(ctx.cfg(), s);
            const fs::path work = ctx.path("work" + seed_suffix(s));
            fs::create_directories(work);
            const FinetuneGain g = finetune_gain(cfg, work);
            summary << s << ',' << format_double(g.energy_base) << ',' << format_double(g.energy_cosine) << ','
                    << format_double(g.energy_independent) << ',' << format_double(g.noise_cosine.grad_cov_trace) << ','
                    << format_double(g.noise_independent.grad_cov_trace) << ',' << format_double(g.noise_cosine.loss_variance)
                    << ',' << format_double(g.noise_independent.loss_variance) << '\n';
            log << "seed " << s << ": energy cosine_ot " << g.energy_cosine << " vs independent " << g.energy_independent
                << "; grad trace " << g.noise_cosine.grad_cov_trace << " vs " << g.noise_independent.grad_cov_trace << '\n';
        }
        ctx.write(figure == "finetune-gain" ? "finetune_gain.csv" : "grad_noise.csv", summary.str());
    } else {
        throw UsageError("unknown figure '" + figure + "' (expected fig2a|fig2b|fid-vs-steps|finetune-gain|grad-noise)");
    }
}

// ---------------------------------------------------------------- plumbing

struct Shortcut {
    const char* flag;
    const char* key;
    const char* help;
    bool list = false;
};

const std::map<std::string, std::vector<Shortcut>>& shortcuts() {
    static const std::map<std::string, std::vector<Shortcut>> table{
        {"gen-data", {{"--kind", "dataset.kind", "dataset kind"}, {"--n", "dataset.n", "sample count"}, {"--seeds", "seeds", "replicate seeds", true}}},
        {"train",
         {{"--epochs", "trainer.epochs", "training epochs"},
          {"--strategy", "trainer.strategy", "independent|cosine_ot|euclidean_ot"},
          {"--seeds", "seeds", "replicate seeds", true}}},
        {"finetune",
         {{"--checkpoint", "inputs.checkpoint", "checkpoint to resume"},
          {"--extra-epochs", "finetune.extra_epochs", "additional epochs"},
          {"--strategy", "finetune.strategy", "coupling for the extra epochs"}}},
        {"sample",
         {{"--checkpoint", "inputs.checkpoint", "trained checkpoint"},
          {"--kind", "sampler.kind", "ode|sde"},
          {"--schedule", "sampler.schedule", "uniform|snr_shift|adaptive"},
          {"--steps", "sampler.steps", "step budget"},
          {"--ratio", "sampler.ratio", "SNR shift ratio"},
          {"--n", "sampler.n_samples", "sample count"}}},
        {"eval", {{"--samples", "inputs.samples", "samples CSV"}, {"--reference", "inputs.reference", "reference CSV"}}},
        {"schedule-dump",
         {{"--steps", "sampler.steps", "step budget"},
          {"--ratio", "sampler.ratio", "SNR shift ratio"},
          {"--checkpoint", "inputs.checkpoint", "model for the adaptive schedule"}}},
        {"couple-bench", {{"--sizes", "bench.sizes", "batch sizes, comma separated", true}, {"--repeats", "bench.repeats", "repeats per size"}}},
        {"probe-grad-noise",
         {{"--checkpoint", "inputs.checkpoint", "frozen model"},
          {"--strategy", "probe.strategy", "coupling strategy"},
          {"--n-batches", "probe.n_batches", "number of minibatches"}}},
        {"repro",
         {{"--steps", "repro.budgets", "step budgets, comma separated", true},
          {"--seeds", "seeds", "replicate seeds", true},
          {"--checkpoint", "inputs.checkpoint", "reuse a trained model"}}},
    };
    return table;
}

fs::path default_out_dir(const std::string& command, const json& resolved) {
    const char* root = std::getenv(kOutputRootEnv);
    std::string name = command;
    std::replace(name.begin(), name.end(), ' ', '-');
    return fs::path(root && *root ? root : "runs") / (name + "-" + sha256_hex(resolved.dump()).substr(0, 10));
}

int replay(const fs::path& manifest_path, const fs::path& out_dir, std::ostream& out) {
    json manifest;
    try {
        manifest = json::parse(read_file(manifest_path));
    } catch (const json::exception& e) {
        throw IoError("manifest " + manifest_path.string() + " is not valid JSON: " + e.what());
    }
    for (const auto& in : manifest.at("inputs")) {
        if (sha256_file(in.at("path").get<std::string>()) != in.at("sha256").get<std::string>()) {
            throw IoError("replay: input " + in.at("path").get<std::string>() + " changed since the original run");
        }
    }
    execute_command(manifest.at("command").get<std::string>(), manifest.at("config"), out_dir, out);
    int mismatches = 0;
    for (const auto& o : manifest.at("outputs")) {
        if (!o.at("deterministic").get<bool>()) continue;
        const std::string rel = o.at("path").get<std::string>();
        const fs::path file = out_dir / rel;
        const bool same = fs::exists(file) && sha256_file(file) == o.at("sha256").get<std::string>();
        if (!same) ++mismatches;
        out << (same ? "identical " : "DIFFERS   ") << rel << '\n';
    }
    return mismatches == 0 ? 0 : 1;
}

}  // namespace

void execute_command(const std::string& command, const json& resolved, const fs::path& out_dir, std::ostream& log) {
    RunContext ctx(command, resolved, out_dir);
    if (command == "gen-data") cmd_gen_data(ctx, log);
    else if (command == "train") cmd_train(ctx, log);
    else if (command == "finetune") cmd_finetune(ctx, log);
    else if (command == "sample") cmd_sample(ctx, log);
    else if (command == "eval") cmd_eval(ctx, log);
    else if (command == "schedule-dump") cmd_schedule_dump(ctx, log);
    else if (command == "couple-bench") cmd_couple_bench(ctx, log);
    else if (command == "probe-grad-noise") cmd_probe(ctx, log);
    else if (command.rfind("repro ", 0) == 0) cmd_repro(ctx, command.substr(6), log);
    else throw UsageError("unknown command '" + command + "'");
    ctx.finish();
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"cosflow: cosine-coupled flow matching laboratory"};
    app.require_subcommand(1);

    struct Common {
        std::string config;
        std::vector<std::string> overrides;
        std::string out;
        std::map<std::string, std::string> flags;
    };
    std::map<std::string, Common> common;
    std::string figure;
    std::string manifest_path;
    std::string replay_out;

    for (const auto& [name, flags] : shortcuts()) {
        CLI::App* sub = app.add_subcommand(name);
        Common& c = common[name];
        sub->add_option("--config", c.config, "JSON config file");
        sub->add_option("--set", c.overrides, "override, key.path=value (repeatable)");
        sub->add_option("--out", c.out, "output directory");
        for (const Shortcut& s : flags) sub->add_option(s.flag, c.flags[s.key], s.help);
        if (name == "repro") {
            sub->add_option("figure", figure, "fig2a|fig2b|fid-vs-steps|finetune-gain|grad-noise")->required();
        }
    }
    CLI::App* rep = app.add_subcommand("replay", "re-execute a run from its manifest and compare outputs");
    rep->add_option("manifest", manifest_path, "manifest.json of the original run")->required();
    rep->add_option("--out", replay_out, "directory for the replayed run")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (rep->parsed()) return replay(manifest_path, replay_out, out);

        std::string name;
        for (CLI::App* sub : app.get_subcommands()) name = sub->get_name();
        const Common& c = common[name];
        const std::string command = name == "repro" ? "repro " + figure : name;
        if (name == "repro") {
            const std::vector<std::string> figures{"fig2a", "fig2b", "fid-vs-steps", "finetune-gain", "grad-noise"};
            if (std::find(figures.begin(), figures.end(), figure) == figures.end()) {
                throw UsageError("unknown figure '" + figure + "'");
            }
        }

        json user = c.config.empty() ? json::object() : load_config_file(c.config);
        for (const auto& [key, value] : c.flags) {
            if (value.empty()) continue;
            const bool list = std::any_of(shortcuts().at(name).begin(), shortcuts().at(name).end(),
                                          [&](const Shortcut& s) { return key == s.key && s.list; });
            apply_override(user, key + "=" + (list ? "[" + value + "]" : value));
        }
        for (const std::string& o : c.overrides) apply_override(user, o);

        // Layer user settings over the command's benchmark, then resolve.
        json merged = base_document(command);
        merged.merge_patch(user);
        json resolved = resolve_config(merged);
        const fs::path out_dir = !c.out.empty() ? fs::path(c.out)
                                 : !resolved["output_dir"].get<std::string>().empty()
                                     ? fs::path(resolved["output_dir"].get<std::string>())
                                     : default_out_dir(command, resolved);
        resolved["output_dir"] = "";
        execute_command(command, resolved, out_dir, out);
        out << "outputs in " << out_dir.string() << '\n';
        return 0;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace cosflow
