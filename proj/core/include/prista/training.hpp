#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prista/adam.hpp"
#include "prista/cdp.hpp"
#include "prista/network.hpp"

namespace prista {

struct TrainConfig {
  NetworkConfig net;
  std::int64_t n = 32;
  std::int64_t J = 2;
  int epochs = 30;
  int batch = 10;
  double lr0 = 1e-3;
  double lr_decay = 0.95;
  int lr_decay_every = 2;
  std::vector<double> alpha_set{9.0, 27.0, 81.0};
  std::uint64_t seed = 0;
  double val_fraction = 0.1;
  double eval_alpha = 27.0;  // per-epoch held-out evaluation noise level
  int threads = 0;           // 0 -> hardware concurrency; never affects numerics

  void validate() const;
};

/// lr0 * lr_decay^floor(epoch / lr_decay_every), epoch 0-based.
double lr_schedule(const TrainConfig& cfg, int epoch);

struct EpochRow {
  int epoch = 0;
  std::string split;  // "train" or "val"
  double loss = 0.0, psnr = 0.0, ssim = 0.0, lr = 0.0;
};

struct TrainResult {
  Network net;
  AdamState adam;
  int epochs_done = 0;
  int skipped_updates = 0;  // degenerate zero-loss batches (perfect fit)
  std::vector<EpochRow> rows;
};

/// log(sum_{k,i} ||x_i^k - t_i||^2 / (B * N)) composed on the callers' tape;
/// stage_outputs[i][k] is stage k of item i, truths[i] is [1, n, n].
Var log_loss(const std::vector<std::vector<Var>>& stage_outputs,
             const std::vector<Tensor>& truths);

void save_checkpoint(const std::string& path, const Network& net, const AdamState& adam,
                     const TrainConfig& cfg, int epochs_done);

struct LoadedCheckpoint {
  Network net;
  AdamState adam;
  TrainConfig cfg;
  int epochs_done = 0;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

/// Trains on [0,1] images of side cfg.n. Writes metrics.csv and
/// checkpoint.prnt into out_dir (when non-empty) after every epoch. With
/// resume_path set, the checkpoint's config is adopted (epochs and threads
/// come from cfg) and training continues bit-identically to an
/// uninterrupted run.
TrainResult train(const std::vector<Tensor>& images, const TrainConfig& cfg,
                  const std::string& out_dir = "", const std::string& resume_path = "");

struct EvalItem {
  double psnr = 0.0, ssim = 0.0;
};

struct EvalSummary {
  std::vector<EvalItem> items;
  double mean_psnr = 0.0, mean_ssim = 0.0;
  double loss = 0.0;
};

/// Measures every image with the given masks (noise seed derived per item
/// from noise_base), runs the network, sign-aligns and scores stage K.
EvalSummary evaluate(const Network& net, const std::vector<Tensor>& images, const MaskSet& masks,
                     double alpha, std::uint64_t noise_base, int threads = 0);

void write_metrics_csv(const std::string& path, const std::vector<EpochRow>& rows);

/// Deterministic substream seed for (tag, a, b, c); the train loop derives
/// every stochastic choice this way, so resumed runs replay exactly.
std::uint64_t sub_seed(std::uint64_t seed, std::string_view tag, std::uint64_t a = 0,
                       std::uint64_t b = 0, std::uint64_t c = 0);

/// Splits [0, count) into threads chunks and runs fn(i) for every index.
/// Exceptions are rethrown in index order.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

}  // namespace prista
