#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prista/cdp.hpp"
#include "prista/ops.hpp"
#include "prista/tape.hpp"

namespace prista {

struct NetworkConfig {
  int stages = 3;      // K
  int channels = 8;    // C (feature width of F / F~)
  int cbam_reduction = 4;
  bool share_resfblock = false;
  bool share_cbam = false;
  bool convu_final_relu = false;  // ReLU after ConvU's third conv

  void validate() const;
};

// Indices into the flat parameter registry. Shared blocks alias the indices
// of stage 1, so gradient accumulation over stages happens on one leaf.
struct CbamRefs {
  int mlp_w1 = -1, mlp_b1 = -1, mlp_w2 = -1, mlp_b2 = -1;
  int spatial_w = -1, spatial_b = -1;
};

struct ConvURefs {
  int w1 = -1, b1 = -1, w2 = -1, b2 = -1, w3 = -1, b3 = -1;
};

struct ResFRefs {
  int sw1 = -1, sb1 = -1, sw2 = -1, sb2 = -1;  // spatial branch convs
  int fw1 = -1, fb1 = -1, fw2 = -1, fb2 = -1;  // frequency branch 1x1 convs
};

struct TransformRefs {
  int conv_w = -1, conv_b = -1;  // 1->C entry conv for F, C->1 exit conv for F~
  CbamRefs cbam;
  ConvURefs convu;
  ResFRefs resf;
};

struct StageRefs {
  int eta = -1;  // scalar step size
  int rho = -1;  // unconstrained scalar, theta = |rho|
  TransformRefs F, Finv;
};

struct ParamSet {
  std::vector<std::string> names;
  std::vector<Tensor> values;

  int add(std::string name, Tensor t);
  int count() const { return static_cast<int>(values.size()); }
  int index_of(const std::string& name) const;  // -1 if absent
};

struct Network {
  NetworkConfig cfg;
  ParamSet params;
  std::vector<StageRefs> stages;
};

/// Xavier-uniform weights (zero biases), eta = 0.5 and rho = 0.01 per stage.
Network init_network(const NetworkConfig& cfg, std::uint64_t seed);

/// Rebuild the stage reference table for a parameter registry that was
/// produced by init_network (used after checkpoint load).
Network assemble_network(const NetworkConfig& cfg, ParamSet params);

/// Leaf Vars in registry order; one leaf per distinct parameter.
std::vector<Var> make_param_vars(Tape& tape, const Network& net, bool requires_grad = true);

// ---- blocks (p = param leaf table in registry order) ----
Var cbam(const Var& f, const CbamRefs& refs, const std::vector<Var>& p);
Var res_fblock(const Var& f, const ResFRefs& refs, const std::vector<Var>& p);
Var conv_unit(const Var& f, const ConvURefs& refs, const std::vector<Var>& p, bool final_relu);
Var transform_F(const Var& r, const TransformRefs& refs, const std::vector<Var>& p,
                const NetworkConfig& cfg);
Var transform_Finv(const Var& f, const TransformRefs& refs, const std::vector<Var>& p,
                   const NetworkConfig& cfg);
/// x = r + F~(soft(F(r), |rho|)).
Var ppm(const Var& r, const StageRefs& stage, const std::vector<Var>& p,
        const NetworkConfig& cfg);

Tensor default_x0(std::int64_t n);  // all-ones [1, n, n]

/// Unfolded forward pass; returns the stage outputs x^1..x^K.
std::vector<Var> network_forward(Tape& tape, const std::vector<Var>& params, const Network& net,
                                 const Measurement& meas, const MaskSet& masks, const Tensor& x0);

/// No-grad forward; returns stage outputs as tensors [1, n, n].
std::vector<Tensor> network_infer(const Network& net, const Measurement& meas,
                                  const MaskSet& masks, const Tensor* x0 = nullptr);

}  // namespace prista
