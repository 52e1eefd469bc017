#include "prista/training.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "prista/checkpoint.hpp"
#include "prista/fft.hpp"
#include "prista/metrics.hpp"
#include "prista/rng.hpp"
#include "prista/solvers.hpp"

namespace prista {

void TrainConfig::validate() const {
  net.validate();
  if (!is_pow2(n)) throw std::invalid_argument("TrainConfig: n must be a power of two");
  if (J < 1) throw std::invalid_argument("TrainConfig: J must be >= 1");
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (batch < 1) throw std::invalid_argument("TrainConfig: batch must be >= 1");
  if (!(lr0 > 0.0)) throw std::invalid_argument("TrainConfig: lr0 must be > 0");
  if (alpha_set.empty()) throw std::invalid_argument("TrainConfig: alpha_set must be nonempty");
  for (double a : alpha_set) {
    if (a < 0.0) throw std::invalid_argument("TrainConfig: alpha must be >= 0");
  }
  if (val_fraction < 0.0 || val_fraction >= 1.0) {
    throw std::invalid_argument("TrainConfig: val_fraction must be in [0, 1)");
  }
}

double lr_schedule(const TrainConfig& cfg, int epoch) {
  if (epoch < 0) throw std::invalid_argument("lr_schedule: epoch must be >= 0");
  return cfg.lr0 * std::pow(cfg.lr_decay, static_cast<double>(epoch / cfg.lr_decay_every));
}

std::uint64_t sub_seed(std::uint64_t seed, std::string_view tag, std::uint64_t a, std::uint64_t b,
                       std::uint64_t c) {
  std::uint64_t s = Rng::derive(seed, tag);
  s = Rng::derive(s, a);
  s = Rng::derive(s, b);
  s = Rng::derive(s, c);
  return s;
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      for (int i = t; i < count; i += threads) {
        try {
          fn(i);
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      }
    });
  }
  for (std::thread& th : pool) th.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

Var log_loss(const std::vector<std::vector<Var>>& stage_outputs,
             const std::vector<Tensor>& truths) {
  if (stage_outputs.empty() || stage_outputs.size() != truths.size()) {
    throw std::invalid_argument("log_loss: item count mismatch");
  }
  Tape& tape = *stage_outputs[0][0].tape();
  Var total;
  for (std::size_t i = 0; i < stage_outputs.size(); ++i) {
    Var truth = tape.constant(truths[i]);
    for (const Var& xk : stage_outputs[i]) {
      Var d = sub(xk, truth);
      Var s = sum(mul(d, d));
      total = total.valid() ? add(total, s) : s;
    }
  }
  const double pixels = static_cast<double>(truths[0].size());
  const double scale = 1.0 / (static_cast<double>(truths.size()) * pixels);
  Var scaled = mul_scalar(total, tape.constant(Tensor::scalar(scale)));
  return log(scaled);
}

// ---- checkpoint (de)serialization ----

namespace {

nlohmann::json config_to_json(const TrainConfig& cfg) {
  return nlohmann::json{
      {"stages", cfg.net.stages},
      {"channels", cfg.net.channels},
      {"cbam_reduction", cfg.net.cbam_reduction},
      {"share_resfblock", cfg.net.share_resfblock},
      {"share_cbam", cfg.net.share_cbam},
      {"convu_final_relu", cfg.net.convu_final_relu},
      {"n", cfg.n},
      {"J", cfg.J},
      {"epochs", cfg.epochs},
      {"batch", cfg.batch},
      {"lr0", cfg.lr0},
      {"lr_decay", cfg.lr_decay},
      {"lr_decay_every", cfg.lr_decay_every},
      {"alpha_set", cfg.alpha_set},
      {"seed", cfg.seed},
      {"val_fraction", cfg.val_fraction},
      {"eval_alpha", cfg.eval_alpha},
  };
}

TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  cfg.net.stages = j.at("stages").get<int>();
  cfg.net.channels = j.at("channels").get<int>();
  cfg.net.cbam_reduction = j.at("cbam_reduction").get<int>();
  cfg.net.share_resfblock = j.at("share_resfblock").get<bool>();
  cfg.net.share_cbam = j.at("share_cbam").get<bool>();
  cfg.net.convu_final_relu = j.at("convu_final_relu").get<bool>();
  cfg.n = j.at("n").get<std::int64_t>();
  cfg.J = j.at("J").get<std::int64_t>();
  cfg.epochs = j.at("epochs").get<int>();
  cfg.batch = j.at("batch").get<int>();
  cfg.lr0 = j.at("lr0").get<double>();
  cfg.lr_decay = j.at("lr_decay").get<double>();
  cfg.lr_decay_every = j.at("lr_decay_every").get<int>();
  cfg.alpha_set = j.at("alpha_set").get<std::vector<double>>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.val_fraction = j.at("val_fraction").get<double>();
  cfg.eval_alpha = j.at("eval_alpha").get<double>();
  return cfg;
}

}  // namespace

void save_checkpoint(const std::string& path, const Network& net, const AdamState& adam,
                     const TrainConfig& cfg, int epochs_done) {
  NamedTensors tensors;
  for (int p = 0; p < net.params.count(); ++p) {
    tensors.add(net.params.names[static_cast<std::size_t>(p)],
                net.params.values[static_cast<std::size_t>(p)]);
  }
  for (int p = 0; p < net.params.count(); ++p) {
    tensors.add("adam/m/" + net.params.names[static_cast<std::size_t>(p)],
                adam.m[static_cast<std::size_t>(p)]);
    tensors.add("adam/v/" + net.params.names[static_cast<std::size_t>(p)],
                adam.v[static_cast<std::size_t>(p)]);
  }
  nlohmann::json meta{
      {"kind", "checkpoint"}, {"epoch", epochs_done},       {"adam_step", adam.step},
      {"prng", Rng::kAlgorithm}, {"config", config_to_json(cfg)},
  };
  write_container(path, tensors, meta.dump());
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  Container c = read_container(path);
  nlohmann::json meta = nlohmann::json::parse(c.meta_json);
  if (meta.value("kind", "") != "checkpoint") {
    throw std::runtime_error("load_checkpoint: not a checkpoint container: " + path);
  }
  LoadedCheckpoint out;
  out.cfg = config_from_json(meta.at("config"));
  out.epochs_done = meta.at("epoch").get<int>();

  ParamSet params;
  for (const auto& [name, tensor] : c.tensors.items) {
    if (name.rfind("adam/", 0) == 0) continue;
    params.add(name, tensor);
  }
  out.net = assemble_network(out.cfg.net, std::move(params));
  out.adam = init_adam(out.net.params);
  out.adam.step = meta.at("adam_step").get<std::int64_t>();
  for (int p = 0; p < out.net.params.count(); ++p) {
    const std::string& name = out.net.params.names[static_cast<std::size_t>(p)];
    out.adam.m[static_cast<std::size_t>(p)] = c.tensors.get("adam/m/" + name);
    out.adam.v[static_cast<std::size_t>(p)] = c.tensors.get("adam/v/" + name);
  }
  return out;
}

// ---- metrics CSV ----

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_metrics_csv(const std::string& path, const std::vector<EpochRow>& rows) {
  std::string text = "epoch,split,loss,psnr,ssim,lr\n";
  for (const EpochRow& r : rows) {
    text += std::to_string(r.epoch) + "," + r.split + "," + format_double(r.loss) + "," +
            format_double(r.psnr) + "," + format_double(r.ssim) + "," + format_double(r.lr) + "\n";
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw std::runtime_error("metrics: cannot open " + tmp);
    os << text;
  }
  std::filesystem::rename(tmp, path);
}

// ---- evaluation ----

EvalSummary evaluate(const Network& net, const std::vector<Tensor>& images, const MaskSet& masks,
                     double alpha, std::uint64_t noise_base, int threads) {
  EvalSummary out;
  const int count = static_cast<int>(images.size());
  out.items.resize(static_cast<std::size_t>(count));
  std::vector<double> sq_errors(static_cast<std::size_t>(count), 0.0);
  parallel_for(count, threads, [&](int i) {
    const Tensor& truth = images[static_cast<std::size_t>(i)];
    Measurement meas = measure(truth, masks, alpha,
                               Rng::derive(noise_base, static_cast<std::uint64_t>(i)));
    std::vector<Tensor> outs = network_infer(net, meas, masks);
    Tensor xk = outs.back().reshaped({masks.n, masks.n});
    Tensor aligned = align_global_sign(xk, truth);
    out.items[static_cast<std::size_t>(i)].psnr = psnr(aligned, truth);
    out.items[static_cast<std::size_t>(i)].ssim = ssim(aligned, truth);
    double acc = 0.0;
    for (const Tensor& stage : outs) {
      for (std::int64_t k = 0; k < stage.size(); ++k) {
        const double d = stage[k] - truth[k];
        acc += d * d;
      }
    }
    sq_errors[static_cast<std::size_t>(i)] = acc;
  });
  double total_sq = 0.0;
  for (double s : sq_errors) total_sq += s;
  const double pixels = count ? static_cast<double>(images[0].size()) : 1.0;
  out.loss = count ? std::log(total_sq / (static_cast<double>(count) * pixels)) : 0.0;
  for (const EvalItem& it : out.items) {
    out.mean_psnr += it.psnr;
    out.mean_ssim += it.ssim;
  }
  if (count) {
    out.mean_psnr /= count;
    out.mean_ssim /= count;
  }
  return out;
}

// ---- training ----

namespace {

std::vector<int> shuffled_indices(int count, std::uint64_t seed) {
  std::vector<int> idx(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) idx[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  for (int i = count - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  return idx;
}

struct ItemResult {
  double sq_error = 0.0;            // sum over stages of ||x^k - truth||^2
  std::vector<Tensor> grads;        // d sq_error / d params, registry order
  Tensor last_stage;                // x^K as [1, n, n]
};

ItemResult run_item(const Network& net, const Measurement& meas, const MaskSet& masks,
                    const Tensor& truth_1nn) {
  Tape tape;
  std::vector<Var> pvars = make_param_vars(tape, net, /*requires_grad=*/true);
  std::vector<Var> outs = network_forward(tape, pvars, net, meas, masks, default_x0(masks.n));
  Var truth = tape.constant(truth_1nn);
  Var total;
  for (const Var& xk : outs) {
    Var d = sub(xk, truth);
    Var s = sum(mul(d, d));
    total = total.valid() ? add(total, s) : s;
  }
  ItemResult result;
  result.sq_error = total.value().scalar_value();
  result.last_stage = outs.back().value();
  result.grads.reserve(pvars.size());
  if (result.sq_error > 0.0) {
    tape.backward(total);
    for (const Var& p : pvars) {
      result.grads.push_back(tape.has_grad(p) ? tape.grad(p) : Tensor::zeros(p.value().shape()));
    }
  } else {
    for (const Var& p : pvars) result.grads.push_back(Tensor::zeros(p.value().shape()));
  }
  return result;
}

}  // namespace

TrainResult train(const std::vector<Tensor>& images, const TrainConfig& requested,
                  const std::string& out_dir, const std::string& resume_path) {
  TrainConfig cfg = requested;
  TrainResult result;
  int start_epoch = 0;
  if (!resume_path.empty()) {
    LoadedCheckpoint resumed = load_checkpoint(resume_path);
    cfg = resumed.cfg;
    cfg.epochs = requested.epochs;
    cfg.threads = requested.threads;
    result.net = std::move(resumed.net);
    result.adam = std::move(resumed.adam);
    start_epoch = resumed.epochs_done;
  }
  cfg.validate();
  if (resume_path.empty()) {
    result.net = init_network(cfg.net, cfg.seed);
    result.adam = init_adam(result.net.params);
  }

  const int count = static_cast<int>(images.size());
  for (const Tensor& img : images) {
    if (img.rank() != 2 || img.extent(0) != cfg.n || img.extent(1) != cfg.n) {
      throw std::invalid_argument("train: images must be [" + std::to_string(cfg.n) + ", " +
                                  std::to_string(cfg.n) + "]");
    }
  }
  int val_count = count >= 2 ? std::max(1, static_cast<int>(std::lround(cfg.val_fraction * count))) : 0;
  if (val_count >= count) val_count = count - 1;
  const std::vector<int> split = shuffled_indices(count, sub_seed(cfg.seed, "split"));
  std::vector<int> val_idx(split.begin(), split.begin() + val_count);
  std::vector<int> train_idx(split.begin() + val_count, split.end());
  const int train_count = static_cast<int>(train_idx.size());
  if (train_count < cfg.batch) {
    throw std::invalid_argument("train: need at least " + std::to_string(cfg.batch + val_count) +
                                " images for one batch plus the held-out split");
  }
  std::vector<Tensor> val_images;
  val_images.reserve(val_idx.size());
  for (int i : val_idx) val_images.push_back(images[static_cast<std::size_t>(i)]);

  const MaskSet train_masks = generate_masks(cfg.n, cfg.J, sub_seed(cfg.seed, "train_masks"));
  const MaskSet eval_masks = generate_masks(cfg.n, cfg.J, sub_seed(cfg.seed, "eval_masks"));
  const double pixels = static_cast<double>(cfg.n * cfg.n);
  const int steps = train_count / cfg.batch;

  for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_schedule(cfg, epoch);
    const std::vector<int> perm = shuffled_indices(train_count, sub_seed(cfg.seed, "shuffle", epoch));
    double loss_sum = 0.0;
    int loss_steps = 0;
    std::vector<ItemResult> batch_items(static_cast<std::size_t>(cfg.batch));
    std::vector<Tensor> batch_truths(static_cast<std::size_t>(cfg.batch));

    for (int step = 0; step < steps; ++step) {
      Rng alpha_rng(sub_seed(cfg.seed, "alpha", epoch, step));
      const double alpha = cfg.alpha_set[alpha_rng.next_u64() % cfg.alpha_set.size()];

      std::vector<Measurement> meas(static_cast<std::size_t>(cfg.batch));
      for (int b = 0; b < cfg.batch; ++b) {
        const Tensor& truth = images[static_cast<std::size_t>(
            train_idx[static_cast<std::size_t>(perm[static_cast<std::size_t>(step * cfg.batch + b)])])];
        batch_truths[static_cast<std::size_t>(b)] = truth.reshaped({1, cfg.n, cfg.n});
        meas[static_cast<std::size_t>(b)] =
            measure(truth, train_masks, alpha, sub_seed(cfg.seed, "noise", epoch, step, b));
      }
      parallel_for(cfg.batch, cfg.threads, [&](int b) {
        batch_items[static_cast<std::size_t>(b)] =
            run_item(result.net, meas[static_cast<std::size_t>(b)], train_masks,
                     batch_truths[static_cast<std::size_t>(b)]);
      });

      double sq_total = 0.0;
      for (const ItemResult& item : batch_items) sq_total += item.sq_error;
      if (sq_total == 0.0) {
        // perfect fit: log-loss pole, skip the update
        ++result.skipped_updates;
        continue;
      }
      const double loss = std::log(sq_total / (static_cast<double>(cfg.batch) * pixels));
      if (!std::isfinite(loss)) {
        if (!out_dir.empty()) {
          save_checkpoint(out_dir + "/checkpoint_diagnostic.prnt", result.net, result.adam, cfg,
                          epoch);
        }
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                 " step " + std::to_string(step));
      }
      // d log(S)/d theta = (sum_i d m_i/d theta) / (B * N * S) = (...) / sq_total
      std::vector<Tensor> grads;
      grads.reserve(result.net.params.values.size());
      for (std::size_t p = 0; p < result.net.params.values.size(); ++p) {
        Tensor g = Tensor::zeros(result.net.params.values[p].shape());
        for (const ItemResult& item : batch_items) {
          const Tensor& gi = item.grads[p];
          for (std::int64_t k = 0; k < g.size(); ++k) g[k] += gi[k];
        }
        for (std::int64_t k = 0; k < g.size(); ++k) g[k] /= sq_total;
        grads.push_back(std::move(g));
      }
      adam_step(result.net.params, grads, result.adam, lr);
      loss_sum += loss;
      ++loss_steps;
    }

    EpochRow train_row;
    train_row.epoch = epoch;
    train_row.split = "train";
    train_row.loss = loss_steps ? loss_sum / loss_steps : std::nan("");
    train_row.lr = lr;
    {
      double p_acc = 0.0, s_acc = 0.0;
      for (int b = 0; b < cfg.batch; ++b) {
        const Tensor xk = batch_items[static_cast<std::size_t>(b)].last_stage.reshaped({cfg.n, cfg.n});
        const Tensor truth = batch_truths[static_cast<std::size_t>(b)].reshaped({cfg.n, cfg.n});
        const Tensor aligned = align_global_sign(xk, truth);
        p_acc += psnr(aligned, truth);
        s_acc += ssim(aligned, truth);
      }
      train_row.psnr = p_acc / cfg.batch;
      train_row.ssim = s_acc / cfg.batch;
    }
    result.rows.push_back(train_row);

    if (!val_images.empty()) {
      EvalSummary val = evaluate(result.net, val_images, eval_masks, cfg.eval_alpha,
                                 sub_seed(cfg.seed, "eval_noise"), cfg.threads);
      EpochRow val_row;
      val_row.epoch = epoch;
      val_row.split = "val";
      val_row.loss = val.loss;
      val_row.psnr = val.mean_psnr;
      val_row.ssim = val.mean_ssim;
      val_row.lr = lr;
      result.rows.push_back(val_row);
    }

    result.epochs_done = epoch + 1;
    if (!out_dir.empty()) {
      write_metrics_csv(out_dir + "/metrics.csv", result.rows);
      save_checkpoint(out_dir + "/checkpoint.prnt", result.net, result.adam, cfg,
                      result.epochs_done);
    }
  }
  if (result.epochs_done == 0) result.epochs_done = start_epoch;
  return result;
}

}  // namespace prista
