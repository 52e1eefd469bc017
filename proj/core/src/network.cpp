#include "prista/network.hpp"

#include <cmath>
#include <stdexcept>

#include "prista/rng.hpp"

namespace prista {

void NetworkConfig::validate() const {
  if (stages < 1) throw std::invalid_argument("NetworkConfig: stages must be >= 1");
  if (channels < 1) throw std::invalid_argument("NetworkConfig: channels must be >= 1");
  if (cbam_reduction < 1 || channels < cbam_reduction || channels % cbam_reduction != 0) {
    throw std::invalid_argument("NetworkConfig: channels must be a positive multiple of cbam_reduction");
  }
}

int ParamSet::add(std::string name, Tensor t) {
  names.push_back(std::move(name));
  values.push_back(std::move(t));
  return static_cast<int>(values.size()) - 1;
}

int ParamSet::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  return -1;
}

namespace {

struct Builder {
  ParamSet* params;
  Rng* rng;  // null when assembling from an existing registry

  int tensor(const std::string& name, Shape shape, double xavier_bound) {
    if (!rng) {
      int idx = params->index_of(name);
      if (idx < 0) throw std::runtime_error("network: checkpoint is missing parameter '" + name + "'");
      if (params->values[static_cast<std::size_t>(idx)].shape() != shape) {
        throw std::runtime_error("network: checkpoint parameter '" + name + "' has shape " +
                                 shape_string(params->values[static_cast<std::size_t>(idx)].shape()) +
                                 ", expected " + shape_string(shape));
      }
      return idx;
    }
    Tensor t(shape);
    if (xavier_bound > 0.0) {
      for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng->uniform(-xavier_bound, xavier_bound);
    }
    return params->add(name, std::move(t));
  }

  int scalar(const std::string& name, double value) {
    if (!rng) return tensor(name, {1}, 0.0);
    return params->add(name, Tensor::scalar(value));
  }

  int conv(const std::string& name, std::int64_t cout, std::int64_t cin, std::int64_t k) {
    const double fan_in = static_cast<double>(cin * k * k);
    const double fan_out = static_cast<double>(cout * k * k);
    return tensor(name, {cout, cin, k, k}, std::sqrt(6.0 / (fan_in + fan_out)));
  }

  int bias(const std::string& name, std::int64_t c) { return tensor(name, {c}, 0.0); }

  int dense_w(const std::string& name, std::int64_t out, std::int64_t in) {
    return tensor(name, {out, in}, std::sqrt(6.0 / static_cast<double>(in + out)));
  }

  CbamRefs cbam(const std::string& prefix, std::int64_t c, std::int64_t r) {
    CbamRefs refs;
    const std::int64_t hidden = c / r;
    refs.mlp_w1 = dense_w(prefix + "/mlp_w1", hidden, c);
    refs.mlp_b1 = bias(prefix + "/mlp_b1", hidden);
    refs.mlp_w2 = dense_w(prefix + "/mlp_w2", c, hidden);
    refs.mlp_b2 = bias(prefix + "/mlp_b2", c);
    refs.spatial_w = conv(prefix + "/spatial_w", 1, 2, 7);
    refs.spatial_b = bias(prefix + "/spatial_b", 1);
    return refs;
  }

  ConvURefs convu(const std::string& prefix, std::int64_t c) {
    ConvURefs refs;
    refs.w1 = conv(prefix + "/w1", c, c, 3);
    refs.b1 = bias(prefix + "/b1", c);
    refs.w2 = conv(prefix + "/w2", c, c, 3);
    refs.b2 = bias(prefix + "/b2", c);
    refs.w3 = conv(prefix + "/w3", c, c, 3);
    refs.b3 = bias(prefix + "/b3", c);
    return refs;
  }

  ResFRefs resf(const std::string& prefix, std::int64_t c) {
    ResFRefs refs;
    refs.sw1 = conv(prefix + "/sw1", c, c, 3);
    refs.sb1 = bias(prefix + "/sb1", c);
    refs.sw2 = conv(prefix + "/sw2", c, c, 3);
    refs.sb2 = bias(prefix + "/sb2", c);
    refs.fw1 = conv(prefix + "/fw1", 2 * c, 2 * c, 1);
    refs.fb1 = bias(prefix + "/fb1", 2 * c);
    refs.fw2 = conv(prefix + "/fw2", 2 * c, 2 * c, 1);
    refs.fb2 = bias(prefix + "/fb2", 2 * c);
    return refs;
  }
};

Network build(const NetworkConfig& cfg, ParamSet params, Rng* rng) {
  cfg.validate();
  Network net;
  net.cfg = cfg;
  net.params = std::move(params);
  Builder b{&net.params, rng};
  const std::int64_t c = cfg.channels;
  for (int k = 1; k <= cfg.stages; ++k) {
    const std::string sk = "stage" + std::to_string(k) + "/";
    StageRefs stage;
    stage.eta = b.scalar(sk + "eta", 0.5);
    stage.rho = b.scalar(sk + "rho", 0.01);

    stage.F.conv_w = b.conv(sk + "F/conv_in/w", c, 1, 3);
    stage.F.conv_b = b.bias(sk + "F/conv_in/b", c);
    if (cfg.share_cbam && k > 1) {
      stage.F.cbam = net.stages[0].F.cbam;
    } else {
      stage.F.cbam = b.cbam(sk + "F/cbam", c, cfg.cbam_reduction);
    }
    stage.F.convu = b.convu(sk + "F/convu", c);
    if (cfg.share_resfblock && k > 1) {
      stage.F.resf = net.stages[0].F.resf;
    } else {
      stage.F.resf = b.resf(sk + "F/resf", c);
    }

    if (cfg.share_resfblock && k > 1) {
      stage.Finv.resf = net.stages[0].Finv.resf;
    } else {
      stage.Finv.resf = b.resf(sk + "Finv/resf", c);
    }
    stage.Finv.convu = b.convu(sk + "Finv/convu", c);
    if (cfg.share_cbam && k > 1) {
      stage.Finv.cbam = net.stages[0].Finv.cbam;
    } else {
      stage.Finv.cbam = b.cbam(sk + "Finv/cbam", c, cfg.cbam_reduction);
    }
    stage.Finv.conv_w = b.conv(sk + "Finv/conv_out/w", 1, c, 3);
    stage.Finv.conv_b = b.bias(sk + "Finv/conv_out/b", 1);

    net.stages.push_back(stage);
  }
  return net;
}

}  // namespace

Network init_network(const NetworkConfig& cfg, std::uint64_t seed) {
  Rng rng(Rng::derive(seed, "network_init"));
  return build(cfg, ParamSet{}, &rng);
}

Network assemble_network(const NetworkConfig& cfg, ParamSet params) {
  return build(cfg, std::move(params), nullptr);
}

std::vector<Var> make_param_vars(Tape& tape, const Network& net, bool requires_grad) {
  std::vector<Var> vars;
  vars.reserve(net.params.values.size());
  for (const Tensor& t : net.params.values) vars.push_back(tape.leaf(t, requires_grad));
  return vars;
}

Var cbam(const Var& f, const CbamRefs& refs, const std::vector<Var>& p) {
  auto mlp = [&](const Var& x) {
    return dense(relu(dense(x, p[refs.mlp_w1], p[refs.mlp_b1])), p[refs.mlp_w2], p[refs.mlp_b2]);
  };
  Var mc = sigmoid(add(mlp(global_avg_pool(f)), mlp(global_max_pool(f))));
  Var f1 = mul_channels(f, mc);
  Var ms = sigmoid(conv2d(concat_channels(channel_mean(f1), channel_max(f1)), p[refs.spatial_w],
                          p[refs.spatial_b]));
  return mul_spatial(f1, ms);
}

Var res_fblock(const Var& f, const ResFRefs& refs, const std::vector<Var>& p) {
  const std::int64_t c = f.value().extent(0);
  Var spatial = conv2d(relu(conv2d(f, p[refs.sw1], p[refs.sb1])), p[refs.sw2], p[refs.sb2]);
  Tape& t = *f.tape();
  Var zero_im = t.constant(Tensor::zeros(f.value().shape()));
  auto [fre, fim] = fft2c(f, zero_im);
  Var q = conv2d(concat_channels(fre, fim), p[refs.fw1], p[refs.fb1]);
  q = conv2d(relu(q), p[refs.fw2], p[refs.fb2]);
  auto [sre, sim] = ifft2c(slice_channels(q, 0, c), slice_channels(q, c, 2 * c));
  (void)sim;  // features are real; the inverse transform's imaginary part is dropped
  return add(add(f, spatial), sre);
}

Var conv_unit(const Var& f, const ConvURefs& refs, const std::vector<Var>& p, bool final_relu) {
  Var t = relu(conv2d(f, p[refs.w1], p[refs.b1]));
  t = relu(conv2d(t, p[refs.w2], p[refs.b2]));
  t = conv2d(t, p[refs.w3], p[refs.b3]);
  return final_relu ? relu(t) : t;
}

Var transform_F(const Var& r, const TransformRefs& refs, const std::vector<Var>& p,
                const NetworkConfig& cfg) {
  Var t = conv2d(r, p[refs.conv_w], p[refs.conv_b]);
  t = cbam(t, refs.cbam, p);
  t = conv_unit(t, refs.convu, p, cfg.convu_final_relu);
  return res_fblock(t, refs.resf, p);
}

Var transform_Finv(const Var& f, const TransformRefs& refs, const std::vector<Var>& p,
                   const NetworkConfig& cfg) {
  Var t = res_fblock(f, refs.resf, p);
  t = conv_unit(t, refs.convu, p, cfg.convu_final_relu);
  t = cbam(t, refs.cbam, p);
  return conv2d(t, p[refs.conv_w], p[refs.conv_b]);
}

Var ppm(const Var& r, const StageRefs& stage, const std::vector<Var>& p,
        const NetworkConfig& cfg) {
  Var theta = abs(p[stage.rho]);
  Var features = soft_threshold(transform_F(r, stage.F, p, cfg), theta);
  return add(r, transform_Finv(features, stage.Finv, p, cfg));
}

Tensor default_x0(std::int64_t n) { return Tensor::ones({1, n, n}); }

std::vector<Var> network_forward(Tape& tape, const std::vector<Var>& params, const Network& net,
                                 const Measurement& meas, const MaskSet& masks, const Tensor& x0) {
  if (static_cast<int>(params.size()) != net.params.count()) {
    throw std::invalid_argument("network_forward: parameter table size mismatch");
  }
  Var x = tape.constant(x0);
  std::vector<Var> outputs;
  outputs.reserve(net.stages.size());
  for (const StageRefs& stage : net.stages) {
    Var r = sgd_step(x, params[stage.eta], meas, masks);
    x = ppm(r, stage, params, net.cfg);
    outputs.push_back(x);
  }
  return outputs;
}

std::vector<Tensor> network_infer(const Network& net, const Measurement& meas,
                                  const MaskSet& masks, const Tensor* x0) {
  Tape tape;
  std::vector<Var> params = make_param_vars(tape, net, /*requires_grad=*/false);
  Tensor start = x0 ? *x0 : default_x0(masks.n);
  std::vector<Var> outs = network_forward(tape, params, net, meas, masks, start);
  std::vector<Tensor> values;
  values.reserve(outs.size());
  for (const Var& v : outs) values.push_back(v.value());
  return values;
}

}  // namespace prista
