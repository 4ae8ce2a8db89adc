#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "advkt/augmentor.hpp"
#include "advkt/corpus.hpp"
#include "advkt/evaluator.hpp"
#include "advkt/losses.hpp"
#include "advkt/model.hpp"

namespace advkt {

struct TrainConfig {
    double gamma = 0.95;
    double lambda1 = 1000.0;
    double lambda2 = 1.0;
    double alpha = 10.0;
    double lr_g = 0.001;
    double lr_d = 0.005;
    int d_update_period = 2;  // epochs between discriminator updates; 0 disables them
    int batch_size = 32;
    int max_epochs = 200;
    int patience = 10;
    std::uint64_t seed = 42;
    AdvSign adv_sign = AdvSign::reinforce;
    DiscSign disc_sign = DiscSign::separating;
    int embed_dim = 64;
    int hidden_dim = 64;
    int heads = 4;
    int max_len = 200;
    double mask_rate = 0.15;
    double crop_fraction = 0.8;
    double permute_fraction = 0.2;  // span = ceil(fraction * T), at least 2
    double replace_rate = 0.2;
    double flip_prob = 0.5;
    double e_synth_fraction = 0.5;  // share of generative negatives on bigram questions
    double smoothing = 0.0;
    int threads = 0;  // 0 = hardware concurrency

    void validate() const;
};

struct EpochStats {
    int epoch = 0;
    double l_bce = 0.0;
    double l_adv = 0.0;
    double l_ar = 0.0;
    double l_dist = 0.0;
    double gp = 0.0;
    double val_acc = 0.0;
    double val_auc = 0.0;
};

struct TrainRun {
    TrainConfig config;
    std::vector<EpochStats> history;
    int best_epoch = 0;               // 1-based; epoch whose checkpoint is kept
    double best_val_auc = 0.0;
    ModelState best_model;
    std::vector<std::uint64_t> epoch_seeds;  // per-epoch shuffle sub-seeds

    std::string metrics_csv() const;
};

// Adam over a subset of the parameter store. Separate optimizers cover the
// generator group (generator weights + question/concept tables) and the
// discriminator group (discriminator weights + question/position/response
// tables); the shared question table carries independent moment state in each.
class Adam {
  public:
    Adam(const ad::ParamStore& ps, std::vector<ad::ParamId> group, double lr);
    void step(ad::ParamStore& ps, const ad::GradStore& grads);
    std::span<const ad::ParamId> group() const { return group_; }

  private:
    std::vector<ad::ParamId> group_;
    double lr_;
    int t_ = 0;
    std::vector<Mat> m_;
    std::vector<Mat> v_;
};

std::vector<ad::ParamId> generator_param_group(const ModelState& m);
std::vector<ad::ParamId> discriminator_param_group(const ModelState& m);

// A sequence offered to a batch assembler, tagged with where it came from.
struct PoolItem {
    const std::vector<Step>* steps = nullptr;
    Provenance prov = Provenance::original;
};

// Generator batches may only consume original sequences; augmented and
// reversed pools feed the discriminator alone. Throws ContractError on a
// mis-tagged item.
std::vector<const std::vector<Step>*> assemble_generator_batch(
    std::span<const PoolItem> pool, std::span<const int> indices);

// Alternating adversarial training with early stopping on validation
// multi-step AUC. Throws DivergenceError when a loss goes non-finite; when
// diag_checkpoint is non-empty the failing parameters are saved there first.
TrainRun train(const TrainConfig& cfg, const Dataset& train_data, const Dataset& val_data,
               const std::string& diag_checkpoint = "");

}  // namespace advkt
