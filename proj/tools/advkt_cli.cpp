// advkt command-line front end: ingest, simulate, augment (dry-run), train,
// eval, export-embeddings. Exit codes: 0 success, 1 validation/usage error,
// 2 runtime failure.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "advkt/checkpoint.hpp"
#include "advkt/config.hpp"
#include "advkt/discriminator.hpp"
#include "advkt/evaluator.hpp"
#include "advkt/generator.hpp"
#include "advkt/oracle.hpp"
#include "advkt/trainer.hpp"

namespace fs = std::filesystem;
using namespace advkt;

namespace {

Dataset ingest_file(const std::string& path, const IngestOptions& opts) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    return ingest_log(in, opts);
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << content;
}

std::vector<int> parse_edges(const std::string& csv) {
    std::vector<int> edges;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) edges.push_back(std::stoi(tok));
    return edges;
}

struct TrainArgs {
    std::string config_path;
    std::string data_path;
    std::string val_path;
    std::string out_dir;
    double val_fraction = 0.2;
    int min_interactions = 10;
    std::vector<std::string> overrides;
};

int run_train(const TrainArgs& args) {
    TrainConfig cfg;
    if (!args.config_path.empty()) cfg = load_config_file(args.config_path, cfg);
    for (const auto& kv : args.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + kv + "'");
        apply_config_entry(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }

    const IngestOptions iopts{args.min_interactions, cfg.max_len};
    Dataset train_data = ingest_file(args.data_path, iopts);
    Dataset val_data;
    if (!args.val_path.empty()) {
        val_data = align_to_catalog(ingest_file(args.val_path, iopts), train_data.catalog);
    } else {
        auto [tr, va] = split(train_data, args.val_fraction, cfg.seed);
        train_data = std::move(tr);
        val_data = std::move(va);
    }

    const fs::path out(args.out_dir);
    fs::create_directories(out / "checkpoints");
    write_file(out / "config.resolved", render_config(cfg));

    const auto t0 = std::chrono::steady_clock::now();
    const TrainRun run =
        train(cfg, train_data, val_data, (out / "checkpoints" / "diverged.ckpt").string());
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    write_file(out / "metrics.csv", run.metrics_csv());
    save_checkpoint(run.best_model, (out / "checkpoints" / "best.ckpt").string());

    std::ostringstream report;
    report << "epochs_run: " << run.history.size() << "\nbest_epoch: " << run.best_epoch
           << "\nbest_val_auc: " << run.best_val_auc
           << "\nval_acc_at_best: " << run.history[static_cast<std::size_t>(run.best_epoch - 1)].val_acc
           << "\ntrain_sequences: " << train_data.sequences.size()
           << "\nval_sequences: " << val_data.sequences.size()
           << "\nwall_seconds: " << secs << "\nmaster_seed: " << cfg.seed << "\nepoch_seeds:";
    for (auto s : run.epoch_seeds) report << ' ' << s;
    report << '\n';
    write_file(out / "report.txt", report.str());

    std::cout << "trained " << run.history.size() << " epochs; best epoch " << run.best_epoch
              << " val_auc " << run.best_val_auc << "\nartifacts in " << out.string() << "\n";
    return 0;
}

int run_eval(const std::string& ckpt, const std::string& data_path, const std::string& mode_s,
             const std::string& buckets_s, const std::string& out_dir, int threads) {
    const ModelState model = load_checkpoint(ckpt);
    const IngestOptions iopts{1, model.dims.max_len};
    const Dataset data = align_to_catalog(ingest_file(data_path, iopts), model.catalog);
    const RolloutMode mode =
        mode_s == "single_step" ? RolloutMode::single_step : RolloutMode::multi_step;

    const EvalReport rep = evaluate(model, data, mode, threads);
    std::cout << report_text(rep);

    const auto buckets = auc_by_length(model, data, parse_edges(buckets_s), mode, threads);
    std::cout << "\nstep-index buckets:\n";
    for (const auto& b : buckets) {
        std::cout << "  [" << b.lo << "," << b.hi << (&b == &buckets.back() ? "]" : ")")
                  << " count " << b.count << " auc ";
        if (b.defined) std::cout << b.auc;
        else std::cout << "n/a";
        std::cout << '\n';
    }

    const fs::path out(out_dir);
    fs::create_directories(out);
    write_file(out / "report.csv", report_csv(rep));
    write_file(out / "auc_by_length.csv", buckets_csv(buckets));
    return 0;
}

int run_ingest(const std::string& data_path, const std::string& out_dir, int min_inter,
               int max_len) {
    const Dataset d = ingest_file(data_path, {min_inter, max_len});
    std::cout << "students: " << d.sequences.size() << "\nquestions: " << d.n_questions()
              << "\nconcepts: " << d.n_concepts() << "\nsteps: " << d.n_steps() << '\n';
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ofstream out(fs::path(out_dir) / "ingested.csv", std::ios::binary);
        serialize(d, out);
        std::cout << "wrote " << (fs::path(out_dir) / "ingested.csv").string() << '\n';
    }
    return 0;
}

int run_simulate(const OracleConfig& cfg, const std::string& out_dir) {
    const OracleData data = simulate(cfg);
    fs::create_directories(out_dir);
    {
        std::ofstream out(fs::path(out_dir) / "corpus.csv", std::ios::binary);
        serialize(data.dataset, out);
    }
    {
        std::ofstream out(fs::path(out_dir) / "hidden.csv", std::ios::binary);
        write_hidden_csv(data, out);
    }
    std::cout << "simulated " << data.dataset.sequences.size() << " students, "
              << data.dataset.n_steps() << " steps -> " << out_dir << '\n';
    return 0;
}

int run_augment(const std::string& data_path, const std::string& op, std::uint64_t seed,
                const std::string& out_dir, const TrainConfig& rates, int count) {
    const Dataset d = ingest_file(data_path, {1, rates.max_len});
    const CorpusStats stats = compute_stats(d, rates.smoothing);
    const int mask_id = d.n_questions();

    // Dry-run output reuses the corpus format; masked questions appear as
    // question_id -1 with no concepts, synthetic chains carry response 0.
    std::vector<LearningSequence> samples;
    Rng rng(seed);
    if (op == "synthetic") {
        const int n = count > 0 ? count : static_cast<int>(d.sequences.size());
        for (int i = 0; i < n; ++i) {
            LearningSequence seq;
            seq.student_id = i;
            for (int q : sample_synthetic_questions(stats, rng)) seq.steps.push_back({q, 0});
            samples.push_back(std::move(seq));
        }
    } else {
        for (const auto& src : d.sequences) {
            AugmentedSample aug;
            if (op == "mask") aug = mask_aug(src.steps, mask_id, rates.mask_rate, rng);
            else if (op == "crop") aug = crop_aug(src.steps, rates.crop_fraction, rng);
            else if (op == "permute") {
                const int span = std::clamp(
                    static_cast<int>(std::ceil(rates.permute_fraction *
                                               static_cast<double>(src.steps.size()))),
                    2, static_cast<int>(src.steps.size()));
                aug = permute_aug(src.steps, span, rng);
            } else if (op == "replace") aug = replace_aug(src.steps, stats, rates.replace_rate, rng);
            else if (op == "reverse") aug = reverse_labels(src.steps, rates.flip_prob, rng);
            else throw ValidationError("unknown augmentation op '" + op + "'");
            LearningSequence seq;
            seq.student_id = src.student_id;
            seq.steps = std::move(aug.steps);
            samples.push_back(std::move(seq));
        }
    }

    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "augmented.csv", std::ios::binary);
    out << "student_id,order,question_id,concept_ids,response\n";
    for (const auto& seq : samples) {
        int order = 1;
        for (const auto& st : seq.steps) {
            out << seq.student_id << ',' << order++ << ',';
            if (st.question == mask_id) {
                out << -1 << ",,";
            } else {
                out << d.catalog.question_originals[static_cast<std::size_t>(st.question)] << ',';
                const auto& q = d.catalog.questions[static_cast<std::size_t>(st.question)];
                for (std::size_t i = 0; i < q.concept_ids.size(); ++i) {
                    if (i) out << '|';
                    out << d.catalog.concept_originals[static_cast<std::size_t>(q.concept_ids[i])];
                }
                out << ',';
            }
            out << st.response << '\n';
        }
    }
    std::cout << "wrote " << samples.size() << " samples to "
              << (fs::path(out_dir) / "augmented.csv").string() << '\n';
    return 0;
}

int run_export(const std::string& ckpt, const std::string& data_path, const std::string& out_file,
               std::uint64_t seed) {
    const ModelState model = load_checkpoint(ckpt);
    const IngestOptions iopts{1, model.dims.max_len};
    const Dataset data = align_to_catalog(ingest_file(data_path, iopts), model.catalog);
    const CorpusStats stats = compute_stats(data);
    const TrainConfig rates;  // default augmentation rates

    std::vector<AugmentedSample> samples;
    Rng rng(seed);
    for (const auto& src : data.sequences) {
        samples.push_back({src.steps, Provenance::original});

        const int T = static_cast<int>(src.steps.size());
        int op = below_int(rng, 4);
        if (op == 2 && T < 2) op = 0;
        switch (op) {
            case 0: samples.push_back(mask_aug(src.steps, model.dims.mask_id(), rates.mask_rate, rng)); break;
            case 1: samples.push_back(crop_aug(src.steps, rates.crop_fraction, rng)); break;
            case 2: {
                const int span = std::clamp(static_cast<int>(std::ceil(rates.permute_fraction * T)), 2, T);
                samples.push_back(permute_aug(src.steps, span, rng));
                break;
            }
            default: samples.push_back(replace_aug(src.steps, stats, rates.replace_rate, rng)); break;
        }

        std::vector<int> qs;
        if (bernoulli(rng, rates.e_synth_fraction)) {
            qs = sample_synthetic_questions(stats, rng);
        } else {
            for (const auto& st : src.steps) qs.push_back(st.question);
        }
        const RolloutResult roll = rollout(model, qs, {}, RolloutMode::multi_step);
        AugmentedSample gen;
        gen.prov = Provenance::generative;
        for (std::size_t t = 0; t < qs.size(); ++t) gen.steps.push_back({qs[t], roll.hard[t]});
        samples.push_back(std::move(gen));

        samples.push_back(reverse_labels(src.steps, rates.flip_prob, rng));
    }

    std::ofstream out(out_file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + out_file + "'");
    export_embeddings(model, samples, out);
    std::cout << "wrote " << samples.size() << " rows to " << out_file << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adversarial multi-step knowledge tracing"};
    app.require_subcommand(1);

    // ingest
    auto* c_ingest = app.add_subcommand("ingest", "validate and normalize an interaction log");
    std::string in_data, in_out;
    int in_min = 10, in_maxlen = 200;
    c_ingest->add_option("--data", in_data, "interaction CSV")->required();
    c_ingest->add_option("--out", in_out, "output directory (writes ingested.csv)");
    c_ingest->add_option("--min-interactions", in_min);
    c_ingest->add_option("--max-len", in_maxlen);

    // simulate
    auto* c_sim = app.add_subcommand("simulate", "generate a synthetic student corpus");
    OracleConfig ocfg;
    std::string sim_out = "synth";
    c_sim->add_option("--students", ocfg.n_students);
    c_sim->add_option("--questions", ocfg.n_questions);
    c_sim->add_option("--concepts", ocfg.n_concepts);
    c_sim->add_option("--seed", ocfg.seed);
    c_sim->add_option("--gain", ocfg.learning_gain);
    c_sim->add_option("--guess", ocfg.guess);
    c_sim->add_option("--slip", ocfg.slip);
    c_sim->add_option("--ability-sd", ocfg.ability_sd);
    c_sim->add_option("--difficulty-sd", ocfg.difficulty_sd);
    c_sim->add_option("--len-min", ocfg.len_min);
    c_sim->add_option("--len-max", ocfg.len_max);
    c_sim->add_option("--stay-prob", ocfg.stay_prob);
    c_sim->add_option("--out", sim_out, "output directory")->required();

    // augment
    auto* c_aug = app.add_subcommand("augment", "dry-run augmentation to CSV");
    std::string aug_data, aug_op = "mask", aug_out = "aug";
    std::uint64_t aug_seed = 1;
    int aug_count = 0;
    TrainConfig aug_rates;
    c_aug->add_option("--data", aug_data)->required();
    c_aug->add_option("--op", aug_op, "mask|crop|permute|replace|reverse|synthetic");
    c_aug->add_option("--seed", aug_seed);
    c_aug->add_option("--count", aug_count, "synthetic sample count (default: corpus size)");
    c_aug->add_option("--mask-rate", aug_rates.mask_rate);
    c_aug->add_option("--crop-fraction", aug_rates.crop_fraction);
    c_aug->add_option("--permute-fraction", aug_rates.permute_fraction);
    c_aug->add_option("--replace-rate", aug_rates.replace_rate);
    c_aug->add_option("--flip-prob", aug_rates.flip_prob);
    c_aug->add_option("--out", aug_out)->required();

    // train
    auto* c_train = app.add_subcommand("train", "train on an interaction log");
    TrainArgs targs;
    c_train->add_option("--config", targs.config_path, "key = value config file");
    c_train->add_option("--data", targs.data_path, "training CSV")->required();
    c_train->add_option("--val", targs.val_path, "validation CSV (default: split from --data)");
    c_train->add_option("--val-fraction", targs.val_fraction);
    c_train->add_option("--min-interactions", targs.min_interactions);
    c_train->add_option("--out", targs.out_dir, "run directory")->required();
    c_train->add_option("--set", targs.overrides, "config override key=value")->take_all();

    // eval
    auto* c_eval = app.add_subcommand("eval", "evaluate a checkpoint");
    std::string ev_ckpt, ev_data, ev_mode = "multi_step", ev_buckets = "1,50,100,150,200",
                ev_out = ".";
    int ev_threads = 0;
    c_eval->add_option("--checkpoint", ev_ckpt)->required();
    c_eval->add_option("--data", ev_data)->required();
    c_eval->add_option("--mode", ev_mode, "multi_step|single_step");
    c_eval->add_option("--buckets", ev_buckets, "step-index bucket edges");
    c_eval->add_option("--out", ev_out);
    c_eval->add_option("--threads", ev_threads);

    // export-embeddings
    auto* c_exp = app.add_subcommand("export-embeddings",
                                     "score R/T/E/V samples and dump last D_o rows");
    std::string ex_ckpt, ex_data, ex_out = "embeddings.csv";
    std::uint64_t ex_seed = 1;
    c_exp->add_option("--checkpoint", ex_ckpt)->required();
    c_exp->add_option("--data", ex_data)->required();
    c_exp->add_option("--out", ex_out);
    c_exp->add_option("--seed", ex_seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (c_ingest->parsed()) return run_ingest(in_data, in_out, in_min, in_maxlen);
        if (c_sim->parsed()) return run_simulate(ocfg, sim_out);
        if (c_aug->parsed()) return run_augment(aug_data, aug_op, aug_seed, aug_out, aug_rates, aug_count);
        if (c_train->parsed()) return run_train(targs);
        if (c_eval->parsed()) return run_eval(ev_ckpt, ev_data, ev_mode, ev_buckets, ev_out, ev_threads);
        if (c_exp->parsed()) return run_export(ex_ckpt, ex_data, ex_out, ex_seed);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const ContractError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const UndefinedMetricError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
