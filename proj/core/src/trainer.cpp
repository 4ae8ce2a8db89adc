#include "advkt/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "advkt/discriminator.hpp"
#include "advkt/generator.hpp"
#include "advkt/threading.hpp"

namespace advkt {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

std::string g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void TrainConfig::validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ContractError("gamma must be in [0,1]");
    if (lr_g <= 0.0 || lr_d <= 0.0) throw ContractError("learning rates must be positive");
    if (batch_size <= 0 || max_epochs <= 0 || patience <= 0) {
        throw ContractError("batch_size, max_epochs and patience must be positive");
    }
    if (d_update_period < 0) throw ContractError("d_update_period must be >= 0");
    if (alpha < 0.0) throw ContractError("alpha must be >= 0");
    if (!(e_synth_fraction >= 0.0 && e_synth_fraction <= 1.0)) {
        throw ContractError("e_synth_fraction must be in [0,1]");
    }
}

std::string TrainRun::metrics_csv() const {
    std::ostringstream os;
    os << "epoch,l_bce,l_adv,l_ar,l_dist,gp,val_acc,val_auc\n";
    for (const auto& e : history) {
        os << e.epoch << ',' << g17(e.l_bce) << ',' << g17(e.l_adv) << ',' << g17(e.l_ar)
           << ',' << g17(e.l_dist) << ',' << g17(e.gp) << ',' << g17(e.val_acc) << ','
           << g17(e.val_auc) << '\n';
    }
    return os.str();
}

Adam::Adam(const ad::ParamStore& ps, std::vector<ad::ParamId> group, double lr)
    : group_(std::move(group)), lr_(lr) {
    m_.reserve(group_.size());
    v_.reserve(group_.size());
    for (ad::ParamId id : group_) {
        m_.emplace_back(Mat::Zero(ps[id].rows(), ps[id].cols()));
        v_.emplace_back(Mat::Zero(ps[id].rows(), ps[id].cols()));
    }
}

void Adam::step(ad::ParamStore& ps, const ad::GradStore& grads) {
    ++t_;
    const double bc1 = 1.0 - std::pow(kBeta1, t_);
    const double bc2 = 1.0 - std::pow(kBeta2, t_);
    for (std::size_t i = 0; i < group_.size(); ++i) {
        const ad::ParamId id = group_[i];
        const Mat& g = grads[id];
        m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * g;
        v_[i] = kBeta2 * v_[i].array().matrix() + (1.0 - kBeta2) * g.cwiseProduct(g);
        ps[id].array() -=
            lr_ * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + kAdamEps);
    }
}

std::vector<ad::ParamId> generator_param_group(const ModelState& m) {
    std::vector<ad::ParamId> g{m.emb.question, m.emb.concept_};
    for (int i = 0; i < m.params.size(); ++i) {
        if (m.params.names[static_cast<std::size_t>(i)].rfind("gen/", 0) == 0) g.push_back(i);
    }
    return g;
}

std::vector<ad::ParamId> discriminator_param_group(const ModelState& m) {
    std::vector<ad::ParamId> g{m.emb.question, m.emb.position, m.emb.response};
    for (int i = 0; i < m.params.size(); ++i) {
        if (m.params.names[static_cast<std::size_t>(i)].rfind("disc/", 0) == 0) g.push_back(i);
    }
    return g;
}

std::vector<const std::vector<Step>*> assemble_generator_batch(
    std::span<const PoolItem> pool, std::span<const int> indices) {
    std::vector<const std::vector<Step>*> out;
    out.reserve(indices.size());
    for (int i : indices) {
        const PoolItem& item = pool[static_cast<std::size_t>(i)];
        if (item.prov != Provenance::original) {
            throw ContractError("generator batch may only contain original sequences, got " +
                                std::string(provenance_name(item.prov)));
        }
        out.push_back(item.steps);
    }
    return out;
}

namespace {

// ---- tape-side loss builders; values match the plain functions in losses.cpp ----

ad::NodeId bce_node(ad::Tape& tape, std::span<const ad::NodeId> probs,
                    std::span<const int> labels) {
    std::vector<ad::NodeId> terms;
    terms.reserve(probs.size());
    for (std::size_t t = 0; t < probs.size(); ++t) {
        const ad::NodeId p = labels[t] == 1 ? probs[t] : tape.one_minus(probs[t]);
        terms.push_back(tape.log_clamped(p, kProbEps));
    }
    return tape.scale(tape.sum(terms), -1.0);
}

ad::NodeId adv_node(ad::Tape& tape, std::span<const ad::NodeId> probs,
                    std::span<const double> reward_values, AdvSign sign) {
    std::vector<ad::NodeId> terms;
    terms.reserve(probs.size());
    for (std::size_t t = 0; t < probs.size(); ++t) {
        terms.push_back(tape.scale(tape.abs_(tape.add_const(probs[t], -0.5)), reward_values[t]));
    }
    const double factor = (sign == AdvSign::as_written ? 1.0 : -1.0) /
                          static_cast<double>(probs.size());
    return tape.scale(tape.sum(terms), factor);
}

ad::NodeId ar_node(ad::Tape& tape, std::span<const ad::NodeId> logprobs,
                   std::span<const int> questions) {
    std::vector<ad::NodeId> terms;
    for (std::size_t t = 0; t + 1 < questions.size(); ++t) {
        terms.push_back(tape.pick(logprobs[t], questions[t + 1]));
    }
    if (terms.empty()) return tape.zeros(1, 1);
    return tape.scale(tape.sum(terms), -1.0);
}

struct DSample {
    std::vector<Step> steps;
    Provenance prov = Provenance::original;
};

[[noreturn]] void diverge(const ModelState& model, const std::string& diag_checkpoint,
                          std::string message) {
    if (!diag_checkpoint.empty()) {
        save_checkpoint(model, diag_checkpoint);
        message += "; parameters saved to " + diag_checkpoint;
    }
    throw DivergenceError(message);
}

void steps_to_arrays(const std::vector<Step>& steps, std::vector<int>& qs, std::vector<int>& rs) {
    qs.clear();
    rs.clear();
    qs.reserve(steps.size());
    rs.reserve(steps.size());
    for (const auto& st : steps) {
        qs.push_back(st.question);
        rs.push_back(st.response);
    }
}

}  // namespace

TrainRun train(const TrainConfig& cfg, const Dataset& train_data, const Dataset& val_data,
               const std::string& diag_checkpoint) {
    cfg.validate();
    if (train_data.sequences.empty() || val_data.sequences.empty()) {
        throw ContractError("train/validation datasets must be non-empty");
    }
    for (const auto& ds : {&train_data, &val_data}) {
        for (const auto& seq : ds->sequences) {
            if (static_cast<int>(seq.steps.size()) > cfg.max_len) {
                throw ValidationError("sequence longer than max_len; re-ingest with a larger limit");
            }
        }
    }

    Dims dims;
    dims.n_questions = train_data.n_questions();
    dims.n_concepts = train_data.n_concepts();
    dims.max_len = cfg.max_len;
    dims.embed_dim = cfg.embed_dim;
    dims.hidden_dim = cfg.hidden_dim;
    dims.heads = cfg.heads;

    ModelState model = ModelState::create(dims, train_data.catalog, derive_seed(cfg.seed, 1));
    const CorpusStats stats = compute_stats(train_data, cfg.smoothing);

    Adam opt_g(model.params, generator_param_group(model), cfg.lr_g);
    Adam opt_d(model.params, discriminator_param_group(model), cfg.lr_d);

    const int threads = resolve_threads(cfg.threads);
    ad::GradStore main_grads(model.params);
    std::vector<ad::GradStore> thread_grads;
    for (int t = 0; t < threads; ++t) thread_grads.emplace_back(model.params);

    const int n_train = static_cast<int>(train_data.sequences.size());
    std::vector<PoolItem> g_pool;
    g_pool.reserve(static_cast<std::size_t>(n_train));
    for (const auto& seq : train_data.sequences) {
        g_pool.push_back({&seq.steps, Provenance::original});
    }

    TrainRun run;
    run.config = cfg;
    run.best_val_auc = -1.0;
    double last_dist = 0.0, last_gp = 0.0;
    int since_best = 0;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const std::uint64_t epoch_seed = derive_seed(cfg.seed, 2, static_cast<std::uint64_t>(epoch));
        run.epoch_seeds.push_back(epoch_seed);
        Rng epoch_rng(epoch_seed);

        std::vector<int> order(static_cast<std::size_t>(n_train));
        for (int i = 0; i < n_train; ++i) order[static_cast<std::size_t>(i)] = i;
        shuffle(order, epoch_rng);

        // ---- generator pass ----
        double ep_bce = 0.0, ep_adv = 0.0, ep_ar = 0.0;
        const bool with_ar = cfg.lambda2 != 0.0;
        const bool with_adv = cfg.lambda1 != 0.0;
        for (int start = 0; start < n_train; start += cfg.batch_size) {
            const int bsz = std::min(cfg.batch_size, n_train - start);
            const auto batch = assemble_generator_batch(
                g_pool, std::span(order).subspan(static_cast<std::size_t>(start), static_cast<std::size_t>(bsz)));

            for (auto& tg : thread_grads) tg.zero();
            std::vector<double> tsum_bce(static_cast<std::size_t>(threads), 0.0);
            std::vector<double> tsum_adv(static_cast<std::size_t>(threads), 0.0);
            std::vector<double> tsum_ar(static_cast<std::size_t>(threads), 0.0);

            parallel_chunks(bsz, threads, [&](int tid, int lo, int hi) {
                std::vector<int> qs, rs;
                for (int i = lo; i < hi; ++i) {
                    steps_to_arrays(*batch[static_cast<std::size_t>(i)], qs, rs);
                    ad::Tape tape(model.params, &thread_grads[static_cast<std::size_t>(tid)]);
                    const RolloutNodes nodes =
                        rollout_tape(tape, model, qs, rs, RolloutMode::multi_step, with_ar);

                    std::vector<std::pair<ad::NodeId, double>> seeds;
                    const ad::NodeId bce = bce_node(tape, nodes.prob, rs);
                    seeds.emplace_back(bce, 1.0 / bsz);
                    tsum_bce[static_cast<std::size_t>(tid)] += tape.scalar(bce);

                    if (with_adv) {
                        const PrefixScores ps = score_prefixes(model, qs, nodes.hard);
                        const std::vector<double> rw = rewards(ps.scores, cfg.gamma);
                        const ad::NodeId adv = adv_node(tape, nodes.prob, rw, cfg.adv_sign);
                        seeds.emplace_back(adv, cfg.lambda1 / bsz);
                        tsum_adv[static_cast<std::size_t>(tid)] += tape.scalar(adv);
                    }
                    if (with_ar) {
                        const ad::NodeId ar = ar_node(tape, nodes.ar_logprob, qs);
                        seeds.emplace_back(ar, cfg.lambda2 / bsz);
                        tsum_ar[static_cast<std::size_t>(tid)] += tape.scalar(ar);
                    }
                    tape.backward_weighted(seeds);
                }
            });

            double b_bce = 0.0, b_adv = 0.0, b_ar = 0.0;
            main_grads.zero();
            for (int t = 0; t < threads; ++t) {
                main_grads.add(thread_grads[static_cast<std::size_t>(t)]);
                b_bce += tsum_bce[static_cast<std::size_t>(t)];
                b_adv += tsum_adv[static_cast<std::size_t>(t)];
                b_ar += tsum_ar[static_cast<std::size_t>(t)];
            }
            if (!std::isfinite(b_bce) || !std::isfinite(b_adv) || !std::isfinite(b_ar)) {
                diverge(model, diag_checkpoint,
                        "non-finite generator loss at epoch " + std::to_string(epoch) +
                            ", batch " + std::to_string(start / cfg.batch_size));
            }
            opt_g.step(model.params, main_grads);
            ep_bce += b_bce;
            ep_adv += b_adv;
            ep_ar += b_ar;
        }

        // ---- discriminator pass ----
        if (cfg.d_update_period > 0 && epoch % cfg.d_update_period == 0) {
            std::vector<DSample> positives, negatives;
            positives.reserve(static_cast<std::size_t>(2 * n_train));
            negatives.reserve(static_cast<std::size_t>(2 * n_train));
            std::vector<int> qs, rs;
            for (int i = 0; i < n_train; ++i) {
                const auto& steps = train_data.sequences[static_cast<std::size_t>(i)].steps;
                positives.push_back({steps, Provenance::original});

                Rng aug_rng(derive_seed(cfg.seed, 3, static_cast<std::uint64_t>(epoch),
                                        static_cast<std::uint64_t>(i)));
                const int T = static_cast<int>(steps.size());
                int op = below_int(aug_rng, 4);
                if (op == 2 && T < 2) op = 0;  // permute needs at least two steps
                AugmentedSample aug;
                switch (op) {
                    case 0: aug = mask_aug(steps, model.dims.mask_id(), cfg.mask_rate, aug_rng); break;
                    case 1: aug = crop_aug(steps, cfg.crop_fraction, aug_rng); break;
                    case 2: {
                        const int span = std::clamp(
                            static_cast<int>(std::ceil(cfg.permute_fraction * T)), 2, T);
                        aug = permute_aug(steps, span, aug_rng);
                        break;
                    }
                    default: aug = replace_aug(steps, stats, cfg.replace_rate, aug_rng); break;
                }
                positives.push_back({std::move(aug.steps), Provenance::augmented});

                Rng rev_rng(derive_seed(cfg.seed, 4, static_cast<std::uint64_t>(epoch),
                                        static_cast<std::uint64_t>(i)));
                AugmentedSample rev = reverse_labels(steps, cfg.flip_prob, rev_rng);
                negatives.push_back({std::move(rev.steps), Provenance::reversed});

                // generative negative: generator-labelled real or bigram questions
                Rng gen_rng(derive_seed(cfg.seed, 5, static_cast<std::uint64_t>(epoch),
                                        static_cast<std::uint64_t>(i)));
                if (bernoulli(gen_rng, cfg.e_synth_fraction)) {
                    qs = sample_synthetic_questions(stats, gen_rng);
                } else {
                    qs.clear();
                    for (const auto& st : steps) qs.push_back(st.question);
                }
                const RolloutResult roll = rollout(model, qs, {}, RolloutMode::multi_step);
                DSample gen_sample;
                gen_sample.prov = Provenance::generative;
                gen_sample.steps.reserve(qs.size());
                for (std::size_t t = 0; t < qs.size(); ++t) {
                    gen_sample.steps.push_back({qs[t], roll.hard[t]});
                }
                negatives.push_back(std::move(gen_sample));
            }
            shuffle(positives, epoch_rng);
            shuffle(negatives, epoch_rng);

            const int half = std::max(1, cfg.batch_size / 2);
            double ep_dist = 0.0, ep_gp = 0.0;
            int n_dbatches = 0;
            const int n_pairs = static_cast<int>(std::min(positives.size(), negatives.size()));
            for (int start = 0; start < n_pairs; start += half) {
                const int np = std::min(half, n_pairs - start);
                const int nn = np;
                const int total = np + nn;

                for (auto& tg : thread_grads) tg.zero();
                std::vector<double> tsum_pos(static_cast<std::size_t>(threads), 0.0);
                std::vector<double> tsum_neg(static_cast<std::size_t>(threads), 0.0);
                std::vector<double> tsum_gp(static_cast<std::size_t>(threads), 0.0);

                const double dist_sign = cfg.disc_sign == DiscSign::as_written ? -1.0 : 1.0;
                parallel_chunks(total, threads, [&](int tid, int lo, int hi) {
                    std::vector<int> bq, br;
                    for (int k = lo; k < hi; ++k) {
                        const bool is_pos = k < np;
                        const DSample& s = is_pos
                                               ? positives[static_cast<std::size_t>(start + k)]
                                               : negatives[static_cast<std::size_t>(start + k - np)];
                        steps_to_arrays(s.steps, bq, br);
                        ad::Tape tape(model.params, &thread_grads[static_cast<std::size_t>(tid)]);
                        const DiscPassNodes pass = disc_pass_tape(tape, model, bq, br);
                        // d L_D / d score: L_dist = mean(neg) - mean(pos), applied
                        // with the configured sign; gradient penalty averaged over
                        // the whole batch with weight alpha.
                        const double score_seed =
                            dist_sign * (is_pos ? -1.0 / np : 1.0 / nn);
                        const std::pair<ad::NodeId, double> seeds[] = {
                            {pass.score, score_seed},
                            {pass.gp_term, cfg.alpha / total},
                        };
                        tape.backward_weighted(seeds);
                        (is_pos ? tsum_pos : tsum_neg)[static_cast<std::size_t>(tid)] += pass.score_value;
                        tsum_gp[static_cast<std::size_t>(tid)] += pass.gp_value;
                    }
                });

                double sum_pos = 0.0, sum_neg = 0.0, sum_gp = 0.0;
                main_grads.zero();
                for (int t = 0; t < threads; ++t) {
                    main_grads.add(thread_grads[static_cast<std::size_t>(t)]);
                    sum_pos += tsum_pos[static_cast<std::size_t>(t)];
                    sum_neg += tsum_neg[static_cast<std::size_t>(t)];
                    sum_gp += tsum_gp[static_cast<std::size_t>(t)];
                }
                const double l_dist = sum_neg / nn - sum_pos / np;
                const double gp_val = cfg.alpha * sum_gp / total;
                if (!std::isfinite(l_dist) || !std::isfinite(gp_val)) {
                    diverge(model, diag_checkpoint,
                            "non-finite discriminator loss at epoch " + std::to_string(epoch));
                }
                opt_d.step(model.params, main_grads);
                ep_dist += l_dist;
                ep_gp += gp_val;
                ++n_dbatches;
            }
            if (n_dbatches > 0) {
                last_dist = ep_dist / n_dbatches;
                last_gp = ep_gp / n_dbatches;
            }
        }

        // ---- validation + early stopping ----
        const EvalReport rep = evaluate(model, val_data, RolloutMode::multi_step, threads);

        EpochStats es;
        es.epoch = epoch;
        es.l_bce = ep_bce / n_train;
        es.l_adv = ep_adv / n_train;
        es.l_ar = ep_ar / n_train;
        es.l_dist = last_dist;
        es.gp = last_gp;
        es.val_acc = rep.acc;
        es.val_auc = rep.auc;
        run.history.push_back(es);

        if (rep.auc > run.best_val_auc) {
            run.best_val_auc = rep.auc;
            run.best_epoch = epoch;
            run.best_model = model;
            since_best = 0;
        } else {
            ++since_best;
        }
        if (since_best >= cfg.patience) break;
    }
    return run;
}

}  // namespace advkt
