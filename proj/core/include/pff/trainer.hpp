#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pff/degrade.hpp"
#include "pff/filter_flow.hpp"
#include "pff/image.hpp"
#include "pff/metrics.hpp"
#include "pff/net.hpp"
#include "pff/rng.hpp"

namespace pff {

// Self-supervised training recipe: corrupted/clean pairs are synthesized on
// the fly from clean crops and the predictor learns to undo the corruption.
struct TrainConfig {
    DegradeSpec degrade;
    NetConfig net;
    int patch = 32;
    int batch = 8;
    double lr = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double weight_decay = 0.0;
    double flow_smooth_l2 = 0.0;  // optional L2 on flow first differences
    double flow_sparse_l1 = 0.0;  // optional L1 on flow coefficients
    int steps = 2000;
    int eval_every = 200;
    int ckpt_every = 0;  // 0: only final
    uint64_t seed = 0;

    std::string to_kv() const;
    static TrainConfig from_kv(const std::string& text);
    static TrainConfig from_file(const std::string& path);
};

// Optimizer accumulators, aligned with Network::params() order.
struct TrainState {
    int64_t step = 0;
    std::vector<std::vector<float>> m, v;
    Rng rng{0};

    static TrainState init(Network& net, uint64_t seed);
};

struct Batch {
    std::vector<Image> inputs;   // degraded crops
    std::vector<Image> targets;  // clean crops
};

// Random clean crops from random corpus images, degraded per cfg.degrade
// (a fresh blur kernel per patch for the deblur task).
Batch sample_batch(const std::vector<Image>& corpus, const TrainConfig& cfg, Rng& rng);

struct L1Result {
    double loss = 0.0;
    Tensor grad;
};
L1Result l1_loss(const Tensor& pred, const Tensor& target);

// Classical bias-corrected ADAM; L2 weight decay is added to the gradient.
// Throws NumericalError naming the tensor if a gradient is non-finite.
void adam_step(Network& net, const Gradients& grads, TrainState& state, const TrainConfig& cfg);

// One optimization step on a batch; returns the training loss.
double train_step(Network& net, TrainState& state, const Batch& batch, const TrainConfig& cfg);

struct TrainResult {
    Network net;
    TrainState state;
    std::vector<double> loss_history;
};

// Full loop: sample -> forward -> constrain -> apply -> L1 -> backward ->
// adam. Writes TSV eval rows (step, loss, psnr, ssim) to log_path and
// checkpoints to ckpt_path. heldout_clean images are degraded once with a
// seed derived from cfg.seed to form the eval set. A non-finite loss aborts
// with the last good checkpoint left on disk.
TrainResult train(const TrainConfig& cfg, const std::vector<Image>& corpus,
                  const std::vector<Image>& heldout_clean, const std::string& ckpt_path,
                  const std::string& log_path);

struct InferResult {
    Image restored;
    FilterFlow flow;  // stitched; empty (k=0) in direct-image mode
};

// Eval-mode inference over non-overlapping tiles. Edge tiles are padded by
// replication to the pooling granularity and cropped back; the per-tile
// flows stitch into one full-image FilterFlow whose application to the full
// image is the restored output.
InferResult infer_tiled(Network& net, const Image& img, int tile);

// Repeated infer_tiled, each output feeding the next; returns all n outputs.
std::vector<Image> iterate_pff(Network& net, const Image& img, int n, int tile);

struct EvalReport {
    MetricsReport restored;  // model output vs clean
    MetricsReport degraded;  // input vs clean baseline
};

// pairs are (degraded, clean); outputs are clamped to [0,1] before metrics.
EvalReport evaluate(Network& net, const std::vector<std::pair<Image, Image>>& pairs, int tile);

// corpus helper: loads every PNG/PPM in a directory (sorted by name),
// converted to `channels` via rgb_to_y or gray replication as needed
std::vector<Image> load_corpus(const std::string& dir, int channels);

}  // namespace pff
