#include "prista/ops.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "prista/fft.hpp"

namespace prista {

namespace {

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (!a.value().same_shape(b.value())) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                shape_string(a.value().shape()) + " vs " +
                                shape_string(b.value().shape()));
  }
}

void check_rank3(const Var& v, const char* op) {
  if (v.value().rank() != 3) {
    throw std::invalid_argument(std::string(op) + ": expected rank-3 [C,H,W], got " +
                                shape_string(v.value().shape()));
  }
}

void add_into(Tensor& dst, const Tensor& src) {
  double* d = dst.data();
  const double* s = src.data();
  const std::int64_t n = dst.size();
  for (std::int64_t i = 0; i < n; ++i) d[i] += s[i];
}

int next_id(const Tape& t) { return static_cast<int>(t.var_count()); }

Tape& tape_of(const Var& v, const char* op) {
  if (!v.valid()) throw std::invalid_argument(std::string(op) + ": uninitialized Var");
  return *v.tape();
}

constexpr double kMagGuard = 1e-12;

}  // namespace

Var add(const Var& a, const Var& b) {
  Tape& t = tape_of(a, "add");
  t.check_owns({a, b}, "add");
  check_same_shape(a, b, "add");
  Tensor out(a.value().shape());
  const std::int64_t n = out.size();
  for (std::int64_t i = 0; i < n; ++i) out[i] = a.value()[i] + b.value()[i];
  const int aid = a.id(), bid = b.id();
  const bool arg = a.requires_grad(), brg = b.requires_grad();
  return t.record(std::move(out), {a, b}, [=](Tape& tp, const Tensor& g) {
    if (arg) add_into(tp.grad_buffer(aid), g);
    if (brg) add_into(tp.grad_buffer(bid), g);
  });
}

Var sub(const Var& a, const Var& b) {
  Tape& t = tape_of(a, "sub");
  t.check_owns({a, b}, "sub");
  check_same_shape(a, b, "sub");
  Tensor out(a.value().shape());
  const std::int64_t n = out.size();
  for (std::int64_t i = 0; i < n; ++i) out[i] = a.value()[i] - b.value()[i];
  const int aid = a.id(), bid = b.id();
  const bool arg = a.requires_grad(), brg = b.requires_grad();
  return t.record(std::move(out), {a, b}, [=](Tape& tp, const Tensor& g) {
    if (arg) add_into(tp.grad_buffer(aid), g);
    if (brg) {
      Tensor& gb = tp.grad_buffer(bid);
      for (std::int64_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(const Var& a, const Var& b) {
  Tape& t = tape_of(a, "mul");
  t.check_owns({a, b}, "mul");
  check_same_shape(a, b, "mul");
  Tensor out(a.value().shape());
  const std::int64_t n = out.size();
  for (std::int64_t i = 0; i < n; ++i) out[i] = a.value()[i] * b.value()[i];
  const int aid = a.id(), bid = b.id();
  const bool arg = a.requires_grad(), brg = b.requires_grad();
  return t.record(std::move(out), {a, b}, [=](Tape& tp, const Tensor& g) {
    if (arg) {
      Tensor& ga = tp.grad_buffer(aid);
      const Tensor& bv = tp.value_of(bid);
      for (std::int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (brg) {
      Tensor& gb = tp.grad_buffer(bid);
      const Tensor& av = tp.value_of(aid);
      for (std::int64_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var div(const Var& a, const Var& b) {
  Tape& t = tape_of(a, "div");
  t.check_owns({a, b}, "div");
  check_same_shape(a, b, "div");
  Tensor out(a.value().shape());
  const std::int64_t n = out.size();
  for (std::int64_t i = 0; i < n; ++i) {
    if (b.value()[i] == 0.0) throw std::runtime_error("div: zero denominator");
    out[i] = a.value()[i] / b.value()[i];
  }
  const int aid = a.id(), bid = b.id();
  const bool arg = a.requires_grad(), brg = b.requires_grad();
  return t.record(std::move(out), {a, b}, [=](Tape& tp, const Tensor& g) {
    const Tensor& bv = tp.value_of(bid);
    if (arg) {
      Tensor& ga = tp.grad_buffer(aid);
      for (std::int64_t i = 0; i < g.size(); ++i) ga[i] += g[i] / bv[i];
    }
    if (brg) {
      Tensor& gb = tp.grad_buffer(bid);
      const Tensor& av = tp.value_of(aid);
      for (std::int64_t i = 0; i < g.size(); ++i) gb[i] -= g[i] * av[i] / (bv[i] * bv[i]);
    }
  });
}

Var neg(const Var& v) {
  Tape& t = tape_of(v, "neg");
  Tensor out(v.value().shape());
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = -v.value()[i];
  const int vid = v.id();
  return t.record(std::move(out), {v}, [=](Tape& tp, const Tensor& g) {
    Tensor& gv = tp.grad_buffer(vid);
    for (std::int64_t i = 0; i < g.size(); ++i) gv[i] -= g[i];
  });
}

Var relu(const Var& v) {
  Tape& t = tape_of(v, "relu");
  Tensor out(v.value().shape());
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = v.value()[i] > 0.0 ? v.value()[i] : 0.0;
  const int vid = v.id();
  return t.record(std::move(out), {v}, [=](Tape& tp, const Tensor& g) {
    Tensor& gv = tp.grad_buffer(vid);
    const Tensor& val = tp.value_of(vid);
    for (std::int64_t i = 0; i < g.size(); ++i) {
      if (val[i] > 0.0) gv[i] += g[i];
    }
  });
}

Var sigmoid(const Var& v) {
  Tape& t = tape_of(v, "sigmoid");
  Tensor out(v.value().shape());
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-v.value()[i]));
  const int vid = v.id();
  const int oid = next_id(t);
  return t.record(std::move(out), {v}, [=](Tape& tp, const Tensor& g) {
    Tensor& gv = tp.grad_buffer(vid);
    const Tensor& s = tp.value_of(oid);
    for (std::int64_t i = 0; i < g.size(); ++i) gv[i] += g[i] * s[i] * (1.0 - s[i]);
  });
}

Var abs(const Var& v) {
  Tape& t = tape_of(v, "abs");
  Tensor out(v.value().shape());
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = std::abs(v.value()[i]);
  const int vid = v.id();
  return t.record(std::move(out), {v}, [=](Tape& tp, const Tensor& g) {
    Tensor& gv = tp.grad_buffer(vid);
    const Tensor& val = tp.value_of(vid);
    for (std::int64_t i = 0; i < g.size(); ++i) {
      if (val[i] > 0.0) gv[i] += g[i];
      else if (val[i] < 0.0) gv[i] -= g[i];
    }
  });
}

Var log(const Var& v) {
  Tape& t = tape_of(v, "log");
  Tensor out(v.value().shape());
  for (std::int64_t i = 0; i < out.size(); ++i) {
    if (v.value()[i] <= 0.0) throw std::runtime_error("log: non-positive input");
    out[i] = std::log(v.value()[i]);
  }
  const int vid = v.id();
  return t.record(std::move(out), {v}, [=](Tape& tp, const Tensor& g) {
    Tensor& gv = tp.grad_buffer(vid);
    const Tensor& val = tp.value_of(vid);
    for (std::int64_t i = 0; i < g.size(); ++i) gv[i] += g[i] / val[i];
  });
}

Var sqrt(const Var& v) {
  Tape& t = tape_of(v, "sqrt");
  Tensor out(v.value().shape());
  for (std::int64_t i = 0; i < out.size(); ++i) {
    if (v.value()[i] < 0.0) throw std::runtime_error("sqrt: negative input");
    out[i] = std::sqrt(v.value()[i]);
  }
  const int vid = v.id();
  const int oid = next_id(t);
  return t.record(std::move(out), {v}, [=](Tape& tp, const Tensor& g) {
    Tensor& gv = tp.grad_buffer(vid);
    const Tensor& s = tp.value_of(oid);
    for (std::int64_t i = 0; i < g.size(); ++i) gv[i] += g[i] * 0.5 / s[i];
  });
}

Var maximum_scalar(const Var& v, double c) {
  Tape& t = tape_of(v, "maximum_scalar");
  Tensor out(v.value().shape());
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = std::max(v.value()[i], c);
  const int vid = v.id();
  return t.record(std::move(out), {v}, [=](Tape& tp, const Tensor& g) {
    Tensor& gv = tp.grad_buffer(vid);
    const Tensor& val = tp.value_of(vid);
    for (std::int64_t i = 0; i < g.size(); ++i) {
      if (val[i] > c) gv[i] += g[i];
    }
  });
}

Var soft_threshold(const Var& v, const Var& theta) {
  Tape& t = tape_of(v, "soft_threshold");
  t.check_owns({v, theta}, "soft_threshold");
  if (!theta.value().is_scalar()) throw std::invalid_argument("soft_threshold: theta must be scalar");
  const double th = theta.value().scalar_value();
  if (th < 0.0) throw std::runtime_error("soft_threshold: negative theta");
  Tensor out(v.value().shape());
  for (std::int64_t i = 0; i < out.size(); ++i) {
    const double x = v.value()[i];
    const double m = std::abs(x) - th;
    out[i] = m > 0.0 ? (x > 0.0 ? m : -m) : 0.0;
  }
  const int vid = v.id(), tid = theta.id();
  const bool vrg = v.requires_grad(), trg = theta.requires_grad();
  return t.record(std::move(out), {v, theta}, [=](Tape& tp, const Tensor& g) {
    const Tensor& val = tp.value_of(vid);
    const double thv = tp.value_of(tid).scalar_value();
    if (vrg) {
      Tensor& gv = tp.grad_buffer(vid);
      for (std::int64_t i = 0; i < g.size(); ++i) {
        if (std::abs(val[i]) > thv) gv[i] += g[i];
      }
    }
    if (trg) {
      double acc = 0.0;
      for (std::int64_t i = 0; i < g.size(); ++i) {
        if (val[i] > thv) acc -= g[i];
        else if (val[i] < -thv) acc += g[i];
      }
      tp.grad_buffer(tid)[0] += acc;
    }
  });
}

Var complex_magnitude(const Var& re, const Var& im) {
  Tape& t = tape_of(re, "complex_magnitude");
  t.check_owns({re, im}, "complex_magnitude");
  check_same_shape(re, im, "complex_magnitude");
  Tensor out(re.value().shape());
  for (std::int64_t i = 0; i < out.size(); ++i) {
    out[i] = std::sqrt(re.value()[i] * re.value()[i] + im.value()[i] * im.value()[i]);
  }
  const int rid = re.id(), iid = im.id();
  const int oid = next_id(t);
  const bool rrg = re.requires_grad(), irg = im.requires_grad();
  return t.record(std::move(out), {re, im}, [=](Tape& tp, const Tensor& g) {
    const Tensor& m = tp.value_of(oid);
    const Tensor& rv = tp.value_of(rid);
    const Tensor& iv = tp.value_of(iid);
    Tensor* gr = rrg ? &tp.grad_buffer(rid) : nullptr;
    Tensor* gi = irg ? &tp.grad_buffer(iid) : nullptr;
    for (std::int64_t i = 0; i < g.size(); ++i) {
      const double d = std::max(m[i], kMagGuard);
      if (gr) (*gr)[i] += g[i] * rv[i] / d;
      if (gi) (*gi)[i] += g[i] * iv[i] / d;
    }
  });
}

Var mul_scalar(const Var& v, const Var& s) {
  Tape& t = tape_of(v, "mul_scalar");
  t.check_owns({v, s}, "mul_scalar");
  if (!s.value().is_scalar()) throw std::invalid_argument("mul_scalar: s must be scalar");
  const double sv = s.value().scalar_value();
  Tensor out(v.value().shape());
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = v.value()[i] * sv;
  const int vid = v.id(), sid = s.id();
  const bool vrg = v.requires_grad(), srg = s.requires_grad();
  return t.record(std::move(out), {v, s}, [=](Tape& tp, const Tensor& g) {
    if (vrg) {
      Tensor& gv = tp.grad_buffer(vid);
      const double sc = tp.value_of(sid).scalar_value();
      for (std::int64_t i = 0; i < g.size(); ++i) gv[i] += g[i] * sc;
    }
    if (srg) {
      const Tensor& val = tp.value_of(vid);
      double acc = 0.0;
      for (std::int64_t i = 0; i < g.size(); ++i) acc += g[i] * val[i];
      tp.grad_buffer(sid)[0] += acc;
    }
  });
}

Var sum(const Var& v) {
  Tape& t = tape_of(v, "sum");
  Tensor out = Tensor::scalar(v.value().sum());
  const int vid = v.id();
  return t.record(std::move(out), {v}, [=](Tape& tp, const Tensor& g) {
    Tensor& gv = tp.grad_buffer(vid);
    const double gs = g[0];
    for (std::int64_t i = 0; i < gv.size(); ++i) gv[i] += gs;
  });
}

Var mean(const Var& v) {
  Tape& t = tape_of(v, "mean");
  const double n = static_cast<double>(v.value().size());
  Tensor out = Tensor::scalar(v.value().sum() / n);
  const int vid = v.id();
  return t.record(std::move(out), {v}, [=](Tape& tp, const Tensor& g) {
    Tensor& gv = tp.grad_buffer(vid);
    const double gs = g[0] / n;
    for (std::int64_t i = 0; i < gv.size(); ++i) gv[i] += gs;
  });
}

Var global_avg_pool(const Var& v) {
  check_rank3(v, "global_avg_pool");
  Tape& t = tape_of(v, "global_avg_pool");
  const std::int64_t c = v.value().extent(0), hw = v.value().extent(1) * v.value().extent(2);
  Tensor out({c});
  for (std::int64_t ch = 0; ch < c; ++ch) {
    double s = 0.0;
    const double* p = v.value().data() + ch * hw;
    for (std::int64_t i = 0; i < hw; ++i) s += p[i];
    out[ch] = s / static_cast<double>(hw);
  }
  const int vid = v.id();
  return t.record(std::move(out), {v}, [=](Tape& tp, const Tensor& g) {
    Tensor& gv = tp.grad_buffer(vid);
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const double gs = g[ch] / static_cast<double>(hw);
      double* p = gv.data() + ch * hw;
      for (std::int64_t i = 0; i < hw; ++i) p[i] += gs;
    }
  });
}

Var global_max_pool(const Var& v) {
  check_rank3(v, "global_max_pool");
  Tape& t = tape_of(v, "global_max_pool");
  const std::int64_t c = v.value().extent(0), hw = v.value().extent(1) * v.value().extent(2);
  Tensor out({c});
  std::vector<std::int64_t> argmax(static_cast<std::size_t>(c), 0);
  for (std::int64_t ch = 0; ch < c; ++ch) {
    const double* p = v.value().data() + ch * hw;
    std::int64_t best = 0;
    for (std::int64_t i = 1; i < hw; ++i) {
      if (p[i] > p[best]) best = i;
    }
    argmax[static_cast<std::size_t>(ch)] = best;
    out[ch] = p[best];
  }
  const int vid = v.id();
  return t.record(std::move(out), {v}, [=, am = std::move(argmax)](Tape& tp, const Tensor& g) {
    Tensor& gv = tp.grad_buffer(vid);
    for (std::int64_t ch = 0; ch < c; ++ch) {
      gv[ch * hw + am[static_cast<std::size_t>(ch)]] += g[ch];
    }
  });
}

Var channel_mean(const Var& v) {
  check_rank3(v, "channel_mean");
  Tape& t = tape_of(v, "channel_mean");
  const std::int64_t c = v.value().extent(0), h = v.value().extent(1), w = v.value().extent(2);
  const std::int64_t hw = h * w;
  Tensor out({1, h, w});
  for (std::int64_t ch = 0; ch < c; ++ch) {
    const double* p = v.value().data() + ch * hw;
    for (std::int64_t i = 0; i < hw; ++i) out[i] += p[i];
  }
  for (std::int64_t i = 0; i < hw; ++i) out[i] /= static_cast<double>(c);
  const int vid = v.id();
  return t.record(std::move(out), {v}, [=](Tape& tp, const Tensor& g) {
    Tensor& gv = tp.grad_buffer(vid);
    for (std::int64_t ch = 0; ch < c; ++ch) {
      double* p = gv.data() + ch * hw;
      for (std::int64_t i = 0; i < hw; ++i) p[i] += g[i] / static_cast<double>(c);
    }
  });
}

Var channel_max(const Var& v) {
  check_rank3(v, "channel_max");
  Tape& t = tape_of(v, "channel_max");
  const std::int64_t c = v.value().extent(0), h = v.value().extent(1), w = v.value().extent(2);
  const std::int64_t hw = h * w;
  Tensor out({1, h, w});
  std::vector<std::int32_t> argmax(static_cast<std::size_t>(hw), 0);
  for (std::int64_t i = 0; i < hw; ++i) {
    std::int32_t best = 0;
    double bv = v.value()[i];
    for (std::int64_t ch = 1; ch < c; ++ch) {
      const double x = v.value()[ch * hw + i];
      if (x > bv) {
        bv = x;
        best = static_cast<std::int32_t>(ch);
      }
    }
    argmax[static_cast<std::size_t>(i)] = best;
    out[i] = bv;
  }
  const int vid = v.id();
  return t.record(std::move(out), {v}, [=, am = std::move(argmax)](Tape& tp, const Tensor& g) {
    Tensor& gv = tp.grad_buffer(vid);
    for (std::int64_t i = 0; i < hw; ++i) {
      gv[static_cast<std::int64_t>(am[static_cast<std::size_t>(i)]) * hw + i] += g[i];
    }
  });
}

Var concat_channels(const Var& a, const Var& b) {
  check_rank3(a, "concat_channels");
  check_rank3(b, "concat_channels");
  Tape& t = tape_of(a, "concat_channels");
  t.check_owns({a, b}, "concat_channels");
  const std::int64_t h = a.value().extent(1), w = a.value().extent(2);
  if (b.value().extent(1) != h || b.value().extent(2) != w) {
    throw std::invalid_argument("concat_channels: spatial shape mismatch");
  }
  const std::int64_t ca = a.value().extent(0), cb = b.value().extent(0), hw = h * w;
  Tensor out({ca + cb, h, w});
  for (std::int64_t i = 0; i < ca * hw; ++i) out[i] = a.value()[i];
  for (std::int64_t i = 0; i < cb * hw; ++i) out[ca * hw + i] = b.value()[i];
  const int aid = a.id(), bid = b.id();
  const bool arg = a.requires_grad(), brg = b.requires_grad();
  return t.record(std::move(out), {a, b}, [=](Tape& tp, const Tensor& g) {
    if (arg) {
      Tensor& ga = tp.grad_buffer(aid);
      for (std::int64_t i = 0; i < ca * hw; ++i) ga[i] += g[i];
    }
    if (brg) {
      Tensor& gb = tp.grad_buffer(bid);
      for (std::int64_t i = 0; i < cb * hw; ++i) gb[i] += g[ca * hw + i];
    }
  });
}

Var slice_channels(const Var& v, std::int64_t c0, std::int64_t c1) {
  check_rank3(v, "slice_channels");
  Tape& t = tape_of(v, "slice_channels");
  const std::int64_t c = v.value().extent(0), h = v.value().extent(1), w = v.value().extent(2);
  if (c0 < 0 || c1 <= c0 || c1 > c) throw std::invalid_argument("slice_channels: bad range");
  const std::int64_t hw = h * w;
  Tensor out({c1 - c0, h, w});
  for (std::int64_t i = 0; i < (c1 - c0) * hw; ++i) out[i] = v.value()[c0 * hw + i];
  const int vid = v.id();
  return t.record(std::move(out), {v}, [=](Tape& tp, const Tensor& g) {
    Tensor& gv = tp.grad_buffer(vid);
    for (std::int64_t i = 0; i < (c1 - c0) * hw; ++i) gv[c0 * hw + i] += g[i];
  });
}

Var repeat_channels(const Var& v, std::int64_t times) {
  check_rank3(v, "repeat_channels");
  if (v.value().extent(0) != 1) throw std::invalid_argument("repeat_channels: expected [1,H,W]");
  if (times < 1) throw std::invalid_argument("repeat_channels: times must be >= 1");
  Tape& t = tape_of(v, "repeat_channels");
  const std::int64_t h = v.value().extent(1), w = v.value().extent(2), hw = h * w;
  Tensor out({times, h, w});
  for (std::int64_t c = 0; c < times; ++c) {
    for (std::int64_t i = 0; i < hw; ++i) out[c * hw + i] = v.value()[i];
  }
  const int vid = v.id();
  return t.record(std::move(out), {v}, [=](Tape& tp, const Tensor& g) {
    Tensor& gv = tp.grad_buffer(vid);
    for (std::int64_t c = 0; c < times; ++c) {
      for (std::int64_t i = 0; i < hw; ++i) gv[i] += g[c * hw + i];
    }
  });
}

Var sum_channels(const Var& v) {
  check_rank3(v, "sum_channels");
  Tape& t = tape_of(v, "sum_channels");
  const std::int64_t c = v.value().extent(0), h = v.value().extent(1), w = v.value().extent(2);
  const std::int64_t hw = h * w;
  Tensor out({1, h, w});
  for (std::int64_t ch = 0; ch < c; ++ch) {
    for (std::int64_t i = 0; i < hw; ++i) out[i] += v.value()[ch * hw + i];
  }
  const int vid = v.id();
  return t.record(std::move(out), {v}, [=](Tape& tp, const Tensor& g) {
    Tensor& gv = tp.grad_buffer(vid);
    for (std::int64_t ch = 0; ch < c; ++ch) {
      for (std::int64_t i = 0; i < hw; ++i) gv[ch * hw + i] += g[i];
    }
  });
}

Var mul_channels(const Var& f, const Var& s) {
  check_rank3(f, "mul_channels");
  Tape& t = tape_of(f, "mul_channels");
  t.check_owns({f, s}, "mul_channels");
  const std::int64_t c = f.value().extent(0), hw = f.value().extent(1) * f.value().extent(2);
  if (s.value().rank() != 1 || s.value().extent(0) != c) {
    throw std::invalid_argument("mul_channels: scale must be [C]");
  }
  Tensor out(f.value().shape());
  for (std::int64_t ch = 0; ch < c; ++ch) {
    const double sc = s.value()[ch];
    for (std::int64_t i = 0; i < hw; ++i) out[ch * hw + i] = f.value()[ch * hw + i] * sc;
  }
  const int fid = f.id(), sid = s.id();
  const bool frg = f.requires_grad(), srg = s.requires_grad();
  return t.record(std::move(out), {f, s}, [=](Tape& tp, const Tensor& g) {
    const Tensor& fv = tp.value_of(fid);
    const Tensor& sv = tp.value_of(sid);
    if (frg) {
      Tensor& gf = tp.grad_buffer(fid);
      for (std::int64_t ch = 0; ch < c; ++ch) {
        for (std::int64_t i = 0; i < hw; ++i) gf[ch * hw + i] += g[ch * hw + i] * sv[ch];
      }
    }
    if (srg) {
      Tensor& gs = tp.grad_buffer(sid);
      for (std::int64_t ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (std::int64_t i = 0; i < hw; ++i) acc += g[ch * hw + i] * fv[ch * hw + i];
        gs[ch] += acc;
      }
    }
  });
}

Var mul_spatial(const Var& f, const Var& m) {
  check_rank3(f, "mul_spatial");
  check_rank3(m, "mul_spatial");
  Tape& t = tape_of(f, "mul_spatial");
  t.check_owns({f, m}, "mul_spatial");
  const std::int64_t c = f.value().extent(0), h = f.value().extent(1), w = f.value().extent(2);
  if (m.value().extent(0) != 1 || m.value().extent(1) != h || m.value().extent(2) != w) {
    throw std::invalid_argument("mul_spatial: gate must be [1,H,W]");
  }
  const std::int64_t hw = h * w;
  Tensor out(f.value().shape());
  for (std::int64_t ch = 0; ch < c; ++ch) {
    for (std::int64_t i = 0; i < hw; ++i) out[ch * hw + i] = f.value()[ch * hw + i] * m.value()[i];
  }
  const int fid = f.id(), mid = m.id();
  const bool frg = f.requires_grad(), mrg = m.requires_grad();
  return t.record(std::move(out), {f, m}, [=](Tape& tp, const Tensor& g) {
    const Tensor& fv = tp.value_of(fid);
    const Tensor& mv = tp.value_of(mid);
    if (frg) {
      Tensor& gf = tp.grad_buffer(fid);
      for (std::int64_t ch = 0; ch < c; ++ch) {
        for (std::int64_t i = 0; i < hw; ++i) gf[ch * hw + i] += g[ch * hw + i] * mv[i];
      }
    }
    if (mrg) {
      Tensor& gm = tp.grad_buffer(mid);
      for (std::int64_t ch = 0; ch < c; ++ch) {
        for (std::int64_t i = 0; i < hw; ++i) gm[i] += g[ch * hw + i] * fv[ch * hw + i];
      }
    }
  });
}

Var dense(const Var& x, const Var& w, const Var& b) {
  Tape& t = tape_of(x, "dense");
  t.check_owns({x, w, b}, "dense");
  if (x.value().rank() != 1 || w.value().rank() != 2 || b.value().rank() != 1) {
    throw std::invalid_argument("dense: expected x[In], w[Out,In], b[Out]");
  }
  const std::int64_t in = x.value().extent(0);
  const std::int64_t out_n = w.value().extent(0);
  if (w.value().extent(1) != in || b.value().extent(0) != out_n) {
    throw std::invalid_argument("dense: dimension mismatch");
  }
  Tensor out({out_n});
  for (std::int64_t o = 0; o < out_n; ++o) {
    double acc = b.value()[o];
    const double* wr = w.value().data() + o * in;
    for (std::int64_t i = 0; i < in; ++i) acc += wr[i] * x.value()[i];
    out[o] = acc;
  }
  const int xid = x.id(), wid = w.id(), bid = b.id();
  const bool xrg = x.requires_grad(), wrg = w.requires_grad(), brg = b.requires_grad();
  return t.record(std::move(out), {x, w, b}, [=](Tape& tp, const Tensor& g) {
    const Tensor& xv = tp.value_of(xid);
    const Tensor& wv = tp.value_of(wid);
    if (xrg) {
      Tensor& gx = tp.grad_buffer(xid);
      for (std::int64_t o = 0; o < out_n; ++o) {
        const double go = g[o];
        const double* wr = wv.data() + o * in;
        for (std::int64_t i = 0; i < in; ++i) gx[i] += go * wr[i];
      }
    }
    if (wrg) {
      Tensor& gw = tp.grad_buffer(wid);
      for (std::int64_t o = 0; o < out_n; ++o) {
        const double go = g[o];
        double* gwr = gw.data() + o * in;
        for (std::int64_t i = 0; i < in; ++i) gwr[i] += go * xv[i];
      }
    }
    if (brg) {
      Tensor& gb = tp.grad_buffer(bid);
      for (std::int64_t o = 0; o < out_n; ++o) gb[o] += g[o];
    }
  });
}

// ---- conv2d ----

namespace {

void check_conv_shapes(const Tensor& in, const Tensor& k, const Tensor& b) {
  if (in.rank() != 3 || k.rank() != 4 || b.rank() != 1) {
    throw std::invalid_argument("conv2d: expected input[Cin,H,W], kernel[Cout,Cin,kh,kw], bias[Cout]");
  }
  if (k.extent(1) != in.extent(0)) {
    throw std::invalid_argument("conv2d: kernel Cin " + std::to_string(k.extent(1)) +
                                " != input Cin " + std::to_string(in.extent(0)));
  }
  if (b.extent(0) != k.extent(0)) throw std::invalid_argument("conv2d: bias size != Cout");
  if (k.extent(2) % 2 == 0 || k.extent(3) % 2 == 0) {
    throw std::invalid_argument("conv2d: kernel extents must be odd for same padding");
  }
}

}  // namespace

Tensor conv2d_forward(const Tensor& in, const Tensor& k, const Tensor& b) {
  check_conv_shapes(in, k, b);
  const std::int64_t cin = in.extent(0), h = in.extent(1), w = in.extent(2);
  const std::int64_t cout = k.extent(0), kh = k.extent(2), kw = k.extent(3);
  const std::int64_t ph = kh / 2, pw = kw / 2;
  Tensor out({cout, h, w});
  for (std::int64_t co = 0; co < cout; ++co) {
    double* oplane = out.data() + co * h * w;
    const double bias = b[co];
    for (std::int64_t i = 0; i < h * w; ++i) oplane[i] = bias;
    for (std::int64_t ci = 0; ci < cin; ++ci) {
      const double* iplane = in.data() + ci * h * w;
      const double* kplane = k.data() + (co * cin + ci) * kh * kw;
      for (std::int64_t ky = 0; ky < kh; ++ky) {
        const std::int64_t dy = ky - ph;
        const std::int64_t y0 = std::max<std::int64_t>(0, -dy);
        const std::int64_t y1 = std::min<std::int64_t>(h, h - dy);
        for (std::int64_t kx = 0; kx < kw; ++kx) {
          const double wv = kplane[ky * kw + kx];
          if (wv == 0.0) continue;
          const std::int64_t dx = kx - pw;
          const std::int64_t x0 = std::max<std::int64_t>(0, -dx);
          const std::int64_t x1 = std::min<std::int64_t>(w, w - dx);
          for (std::int64_t y = y0; y < y1; ++y) {
            double* orow = oplane + y * w;
            const double* irow = iplane + (y + dy) * w + dx;
            for (std::int64_t x = x0; x < x1; ++x) orow[x] += wv * irow[x];
          }
        }
      }
    }
  }
  return out;
}

Tensor conv2d_backward_input(const Tensor& gout, const Tensor& k, const Shape& in_shape) {
  const std::int64_t cin = in_shape[0], h = in_shape[1], w = in_shape[2];
  const std::int64_t cout = k.extent(0), kh = k.extent(2), kw = k.extent(3);
  const std::int64_t ph = kh / 2, pw = kw / 2;
  Tensor gin({cin, h, w});
  for (std::int64_t co = 0; co < cout; ++co) {
    const double* gplane = gout.data() + co * h * w;
    for (std::int64_t ci = 0; ci < cin; ++ci) {
      double* iplane = gin.data() + ci * h * w;
      const double* kplane = k.data() + (co * cin + ci) * kh * kw;
      for (std::int64_t ky = 0; ky < kh; ++ky) {
        const std::int64_t dy = ky - ph;
        const std::int64_t y0 = std::max<std::int64_t>(0, -dy);
        const std::int64_t y1 = std::min<std::int64_t>(h, h - dy);
        for (std::int64_t kx = 0; kx < kw; ++kx) {
          const double wv = kplane[ky * kw + kx];
          if (wv == 0.0) continue;
          const std::int64_t dx = kx - pw;
          const std::int64_t x0 = std::max<std::int64_t>(0, -dx);
          const std::int64_t x1 = std::min<std::int64_t>(w, w - dx);
          for (std::int64_t y = y0; y < y1; ++y) {
            const double* grow = gplane + y * w;
            double* irow = iplane + (y + dy) * w + dx;
            for (std::int64_t x = x0; x < x1; ++x) irow[x] += wv * grow[x];
          }
        }
      }
    }
  }
  return gin;
}

Tensor conv2d_backward_kernel(const Tensor& gout, const Tensor& in, const Shape& k_shape) {
  const std::int64_t cout = k_shape[0], cin = k_shape[1], kh = k_shape[2], kw = k_shape[3];
  const std::int64_t h = in.extent(1), w = in.extent(2);
  const std::int64_t ph = kh / 2, pw = kw / 2;
  Tensor gk(k_shape);
  for (std::int64_t co = 0; co < cout; ++co) {
    const double* gplane = gout.data() + co * h * w;
    for (std::int64_t ci = 0; ci < cin; ++ci) {
      const double* iplane = in.data() + ci * h * w;
      double* kplane = gk.data() + (co * cin + ci) * kh * kw;
      for (std::int64_t ky = 0; ky < kh; ++ky) {
        const std::int64_t dy = ky - ph;
        const std::int64_t y0 = std::max<std::int64_t>(0, -dy);
        const std::int64_t y1 = std::min<std::int64_t>(h, h - dy);
        for (std::int64_t kx = 0; kx < kw; ++kx) {
          const std::int64_t dx = kx - pw;
          const std::int64_t x0 = std::max<std::int64_t>(0, -dx);
          const std::int64_t x1 = std::min<std::int64_t>(w, w - dx);
          double acc = 0.0;
          for (std::int64_t y = y0; y < y1; ++y) {
            const double* grow = gplane + y * w;
            const double* irow = iplane + (y + dy) * w + dx;
            for (std::int64_t x = x0; x < x1; ++x) acc += grow[x] * irow[x];
          }
          kplane[ky * kw + kx] += acc;
        }
      }
    }
  }
  return gk;
}

Tensor conv2d_backward_bias(const Tensor& gout) {
  const std::int64_t cout = gout.extent(0), hw = gout.extent(1) * gout.extent(2);
  Tensor gb({cout});
  for (std::int64_t co = 0; co < cout; ++co) {
    double acc = 0.0;
    const double* p = gout.data() + co * hw;
    for (std::int64_t i = 0; i < hw; ++i) acc += p[i];
    gb[co] = acc;
  }
  return gb;
}

Var conv2d(const Var& input, const Var& kernel, const Var& bias) {
  Tape& t = tape_of(input, "conv2d");
  t.check_owns({input, kernel, bias}, "conv2d");
  Tensor out = conv2d_forward(input.value(), kernel.value(), bias.value());
  const int iid = input.id(), kid = kernel.id(), bid = bias.id();
  const bool irg = input.requires_grad(), krg = kernel.requires_grad(), brg = bias.requires_grad();
  return t.record(std::move(out), {input, kernel, bias}, [=](Tape& tp, const Tensor& g) {
    const Tensor& iv = tp.value_of(iid);
    const Tensor& kv = tp.value_of(kid);
    if (irg) add_into(tp.grad_buffer(iid), conv2d_backward_input(g, kv, iv.shape()));
    if (krg) add_into(tp.grad_buffer(kid), conv2d_backward_kernel(g, iv, kv.shape()));
    if (brg) add_into(tp.grad_buffer(bid), conv2d_backward_bias(g));
  });
}

// ---- FFT pair ops ----

namespace {

std::pair<Var, Var> fft_pair(const Var& re, const Var& im, bool inverse, const char* op) {
  Tape& t = tape_of(re, op);
  t.check_owns({re, im}, op);
  check_same_shape(re, im, op);
  if (re.value().rank() < 2) throw std::invalid_argument(std::string(op) + ": rank must be >= 2");
  Tensor ore = re.value();
  Tensor oim = im.value();
  fft2_unitary(ore, oim, inverse);
  const int rid = re.id(), iid = im.id();
  const bool rrg = re.requires_grad(), irg = im.requires_grad();
  // Each output contributes independently; the adjoint of the unitary
  // transform is the opposite-direction transform.
  auto back_through = [=](Tape& tp, Tensor gre, Tensor gim) {
    fft2_unitary(gre, gim, !inverse);
    if (rrg) add_into(tp.grad_buffer(rid), gre);
    if (irg) add_into(tp.grad_buffer(iid), gim);
  };
  Var out_re = t.record(std::move(ore), {re, im}, [=](Tape& tp, const Tensor& g) {
    back_through(tp, g, Tensor::zeros(g.shape()));
  });
  Var out_im = t.record(std::move(oim), {re, im}, [=](Tape& tp, const Tensor& g) {
    back_through(tp, Tensor::zeros(g.shape()), g);
  });
  return {out_re, out_im};
}

}  // namespace

std::pair<Var, Var> fft2c(const Var& re, const Var& im) { return fft_pair(re, im, false, "fft2c"); }

std::pair<Var, Var> ifft2c(const Var& re, const Var& im) { return fft_pair(re, im, true, "ifft2c"); }

}  // namespace prista
