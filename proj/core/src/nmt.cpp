#include "embkit/nmt.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace embkit::nmt {

using num::GruCache;
using num::GruParams;
using num::Matrix;
using num::ParamSet;
using num::Rng;
using num::Vector;

namespace {

// Resolved parameter handles; built once per public call.
struct Net {
  std::size_t e_src, e_tgt;
  GruParams enc, encb, dec;
  std::size_t init_w, init_b;
  std::size_t out_w, out_b;
  std::size_t att_w = 0, att_u = 0, att_v = 0;
  std::size_t ctx_dim = 0;  // h for plain (R_S), 2h for attention (context)
};

Net resolve(const TranslationModel& m) {
  Net net;
  const ParamSet& ps = m.params;
  net.e_src = ps.handle("E_src");
  net.e_tgt = ps.handle("E_tgt");
  net.enc = num::find_gru(ps, "enc");
  net.dec = num::find_gru(ps, "dec");
  net.init_w = ps.handle("init.W");
  net.init_b = ps.handle("init.b");
  net.out_w = ps.handle("out.W");
  net.out_b = ps.handle("out.b");
  if (m.variant == Variant::attention) {
    net.encb = num::find_gru(ps, "encb");
    net.att_w = ps.handle("att.W");
    net.att_u = ps.handle("att.U");
    net.att_v = ps.handle("att.v");
    net.ctx_dim = 2 * m.hidden;
  } else {
    net.ctx_dim = m.hidden;
  }
  return net;
}

struct AttCache {
  Matrix pre_tanh;  // n x a, tanh already applied
  Vector alpha;
};

struct DecStep {
  GruCache gru;   // gru.h_prev is the state attention looked at
  AttCache att;
  Vector probs;   // softmax over classes (full) or candidates (sampled)
  int prev_token = -1;
  int gold = -1;
  std::size_t gold_pos = 0;
};

struct ForwardCache {
  std::vector<GruCache> enc_fwd;
  std::vector<GruCache> enc_bwd;
  EncodedSource enc;
  Vector s0;
  std::vector<DecStep> steps;
};

EncodedSource run_encoder(const TranslationModel& m, const Net& net,
                          std::span<const int> source, std::vector<GruCache>* fwd_caches,
                          std::vector<GruCache>* bwd_caches) {
  if (source.empty()) throw std::invalid_argument("encode: empty source");
  const Matrix& e_src = m.params.value(net.e_src);
  const std::size_t n = source.size();
  const std::size_t h = m.hidden;
  EncodedSource out;
  if (fwd_caches) fwd_caches->resize(n);
  Vector state(h, 0.0);
  std::vector<Vector> fwd_states;
  if (m.variant == Variant::attention) fwd_states.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = e_src.row(static_cast<std::size_t>(source[i]));
    state = num::gru_step(m.params, net.enc, x, state,
                          fwd_caches ? &(*fwd_caches)[i] : nullptr);
    if (m.variant == Variant::attention) fwd_states.push_back(state);
  }
  if (m.variant == Variant::plain) {
    out.summary = std::move(state);
    return out;
  }
  if (bwd_caches) bwd_caches->resize(n);
  out.annotations = Matrix(n, 2 * h);
  Vector back(h, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    const auto x = e_src.row(static_cast<std::size_t>(source[i]));
    back = num::gru_step(m.params, net.encb, x, back,
                         bwd_caches ? &(*bwd_caches)[i] : nullptr);
    auto row = out.annotations.row(i);
    std::copy(fwd_states[i].begin(), fwd_states[i].end(), row.begin());
    std::copy(back.begin(), back.end(), row.begin() + static_cast<std::ptrdiff_t>(h));
  }
  out.summary.assign(2 * h, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    num::axpy(1.0 / static_cast<double>(n), out.annotations.row(i), out.summary);
  }
  return out;
}

Attention run_attention(const TranslationModel& m, const Net& net,
                        std::span<const double> state, const Matrix& annotations,
                        AttCache* cache) {
  const Matrix& w = m.params.value(net.att_w);
  const Matrix& u = m.params.value(net.att_u);
  const Matrix& v = m.params.value(net.att_v);
  const std::size_t a = w.rows();
  const std::size_t n = annotations.rows();
  Vector ws(a, 0.0);
  num::matvec_add(w, state, ws);
  Matrix tanh_mat(n, a);
  Vector scores(n);
  for (std::size_t j = 0; j < n; ++j) {
    auto row = tanh_mat.row(j);
    std::copy(ws.begin(), ws.end(), row.begin());
    num::matvec_add(u, annotations.row(j), row);
    for (double& x : row) x = std::tanh(x);
    scores[j] = num::dot(v.row(0), row);
  }
  Attention att;
  att.weights = num::softmax(scores);
  att.context.assign(annotations.cols(), 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    num::axpy(att.weights[j], annotations.row(j), att.context);
  }
  if (cache) {
    cache->pre_tanh = std::move(tanh_mat);
    cache->alpha = att.weights;
  }
  return att;
}

// Gradient of one attention call. dH accumulates annotation gradients,
// dstate the decoder-state gradient.
void attention_backward(TranslationModel& m, const Net& net, const AttCache& cache,
                        const Matrix& annotations, std::span<const double> state,
                        std::span<const double> dctx, Matrix& d_annotations,
                        std::span<double> dstate) {
  const Matrix& w = m.params.value(net.att_w);
  const Matrix& u = m.params.value(net.att_u);
  const Matrix& v = m.params.value(net.att_v);
  const std::size_t a = w.rows();
  const std::size_t n = annotations.rows();

  Vector dalpha(n);
  for (std::size_t j = 0; j < n; ++j) {
    dalpha[j] = num::dot(dctx, annotations.row(j));
    num::axpy(cache.alpha[j], dctx, d_annotations.row(j));
  }
  const double mix = num::dot(cache.alpha, dalpha);
  Vector sum_da(a, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double de = cache.alpha[j] * (dalpha[j] - mix);
    const auto t = cache.pre_tanh.row(j);
    num::axpy(de, t, m.params.grad(net.att_v).row(0));
    Vector da(a);
    for (std::size_t i = 0; i < a; ++i) {
      da[i] = de * v.row(0)[i] * (1.0 - t[i] * t[i]);
    }
    num::outer_add(m.params.grad(net.att_u), 1.0, da, annotations.row(j));
    num::matvec_t_add(u, da, d_annotations.row(j));
    num::axpy(1.0, da, sum_da);
  }
  num::outer_add(m.params.grad(net.att_w), 1.0, sum_da, state);
  num::matvec_t_add(w, sum_da, dstate);
}

// Teacher-forced forward pass. candidates empty = full softmax.
double run_forward(const TranslationModel& m, const Net& net, std::span<const int> source,
                   std::span<const int> target, std::span<const int> candidates,
                   ForwardCache* fc) {
  if (target.empty()) throw std::invalid_argument("sequence_loss: empty target");
  const Matrix& e_tgt = m.params.value(net.e_tgt);
  const Matrix& out_w = m.params.value(net.out_w);
  const auto& out_b = m.params.value(net.out_b);
  const std::size_t h = m.hidden;

  EncodedSource enc =
      run_encoder(m, net, source, fc ? &fc->enc_fwd : nullptr, fc ? &fc->enc_bwd : nullptr);

  // decoder start state from a learned projection of the encoder summary
  Vector s(h, 0.0);
  num::matvec_add(m.params.value(net.init_w), enc.summary, s);
  num::axpy(1.0, m.params.value(net.init_b).row(0), s);
  for (double& x : s) x = std::tanh(x);
  if (fc) fc->s0 = s;

  std::vector<int> ys(target.begin(), target.end());
  ys.push_back(m.eos_id);
  if (fc) fc->steps.resize(ys.size());

  double loss = 0.0;
  int prev = m.bos_id;
  Vector x(m.dim + net.ctx_dim);
  for (std::size_t t = 0; t < ys.size(); ++t) {
    DecStep* step = fc ? &fc->steps[t] : nullptr;
    const auto emb = e_tgt.row(static_cast<std::size_t>(prev));
    std::copy(emb.begin(), emb.end(), x.begin());
    if (m.variant == Variant::attention) {
      Attention att = run_attention(m, net, s, enc.annotations, step ? &step->att : nullptr);
      std::copy(att.context.begin(), att.context.end(),
                x.begin() + static_cast<std::ptrdiff_t>(m.dim));
    } else {
      std::copy(enc.summary.begin(), enc.summary.end(),
                x.begin() + static_cast<std::ptrdiff_t>(m.dim));
    }
    s = num::gru_step(m.params, net.dec, x, s, step ? &step->gru : nullptr);

    const int gold = ys[t];
    std::size_t gold_pos;
    Vector logits;
    if (candidates.empty()) {
      logits.resize(m.target_size());
      for (std::size_t c = 0; c < logits.size(); ++c) {
        logits[c] = num::dot(out_w.row(c), s) + out_b.row(0)[c];
      }
      gold_pos = static_cast<std::size_t>(gold);
    } else {
      logits.resize(candidates.size());
      const auto it = std::lower_bound(candidates.begin(), candidates.end(), gold);
      if (it == candidates.end() || *it != gold) {
        throw std::invalid_argument("sampled softmax: gold id " + std::to_string(gold) +
                                    " outside candidate set");
      }
      gold_pos = static_cast<std::size_t>(it - candidates.begin());
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        const auto id = static_cast<std::size_t>(candidates[c]);
        logits[c] = num::dot(out_w.row(id), s) + out_b.row(0)[id];
      }
    }
    loss += sampled_logprob(logits, gold_pos);
    if (step) {
      step->probs = num::softmax(logits);
      step->prev_token = prev;
      step->gold = gold;
      step->gold_pos = gold_pos;
    }
    prev = gold;  // teacher forcing
  }
  if (fc) fc->enc = std::move(enc);
  return loss;
}

void run_backward(TranslationModel& m, const Net& net, std::span<const int> source,
                  std::span<const int> candidates, ForwardCache& fc) {
  ParamSet& ps = m.params;
  const Matrix& out_w = ps.value(net.out_w);
  const std::size_t h = m.hidden;
  const std::size_t n = source.size();
  const bool attention = m.variant == Variant::attention;

  Vector ds(h, 0.0);                // gradient wrt the running decoder state
  Vector d_summary(net.ctx_dim, 0.0);  // plain: dR_S accumulated across steps
  Matrix d_annotations;
  if (attention) d_annotations = Matrix(n, 2 * h);

  for (std::size_t t = fc.steps.size(); t-- > 0;) {
    DecStep& step = fc.steps[t];
    // softmax + nll: dlogit = p - onehot(gold)
    Vector dlogit = step.probs;
    dlogit[step.gold_pos] -= 1.0;
    // state after this step: h_prev of the next step, or recomputed from the
    // cache for the last one
    Vector state_t(h);
    if (t + 1 < fc.steps.size()) {
      state_t = fc.steps[t + 1].gru.h_prev;
    } else {
      const GruCache& c = step.gru;
      for (std::size_t i = 0; i < h; ++i) {
        state_t[i] = (1.0 - c.z[i]) * c.h_prev[i] + c.z[i] * c.hbar[i];
      }
    }
    if (candidates.empty()) {
      for (std::size_t c = 0; c < dlogit.size(); ++c) {
        if (dlogit[c] == 0.0) continue;
        num::axpy(dlogit[c], state_t, ps.grad(net.out_w).row(c));
        ps.grad(net.out_b).row(0)[c] += dlogit[c];
        num::axpy(dlogit[c], out_w.row(c), ds);
      }
    } else {
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        const auto id = static_cast<std::size_t>(candidates[c]);
        num::axpy(dlogit[c], state_t, ps.grad(net.out_w).row(id));
        ps.grad(net.out_b).row(0)[id] += dlogit[c];
        num::axpy(dlogit[c], out_w.row(id), ds);
      }
    }

    Vector dx(m.dim + net.ctx_dim, 0.0);
    Vector ds_prev(h, 0.0);
    num::gru_backward(ps, net.dec, step.gru, ds, dx, ds_prev);

    num::axpy(1.0, std::span<const double>(dx).first(m.dim),
              ps.grad(net.e_tgt).row(static_cast<std::size_t>(step.prev_token)));
    const auto dctx = std::span<const double>(dx).subspan(m.dim, net.ctx_dim);
    if (attention) {
      // attention read the pre-step state
      attention_backward(m, net, step.att, fc.enc.annotations, step.gru.h_prev, dctx,
                         d_annotations, ds_prev);
    } else {
      num::axpy(1.0, dctx, d_summary);
    }
    ds = std::move(ds_prev);
  }

  // initial state projection: s0 = tanh(init.W r + init.b)
  Vector da0(h);
  for (std::size_t i = 0; i < h; ++i) da0[i] = ds[i] * (1.0 - fc.s0[i] * fc.s0[i]);
  num::outer_add(ps.grad(net.init_w), 1.0, da0, fc.enc.summary);
  num::axpy(1.0, da0, ps.grad(net.init_b).row(0));
  Vector dr(net.ctx_dim, 0.0);
  num::matvec_t_add(ps.value(net.init_w), da0, dr);
  num::axpy(1.0, dr, d_summary);

  if (attention) {
    // summary is the mean annotation
    for (std::size_t j = 0; j < n; ++j) {
      num::axpy(1.0 / static_cast<double>(n), d_summary, d_annotations.row(j));
    }
    // forward encoder chain
    Vector dh(h, 0.0);
    for (std::size_t i = n; i-- > 0;) {
      num::axpy(1.0, std::span<const double>(d_annotations.row(i)).first(h), dh);
      Vector dx(m.dim, 0.0), dh_prev(h, 0.0);
      num::gru_backward(ps, net.enc, fc.enc_fwd[i], dh, dx, dh_prev);
      num::axpy(1.0, dx, ps.grad(net.e_src).row(static_cast<std::size_t>(source[i])));
      dh = std::move(dh_prev);
    }
    // backward encoder chain runs n..1, so its final state is at position 0
    Vector dg(h, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      num::axpy(1.0, std::span<const double>(d_annotations.row(i)).subspan(h, h), dg);
      Vector dx(m.dim, 0.0), dg_prev(h, 0.0);
      num::gru_backward(ps, net.encb, fc.enc_bwd[i], dg, dx, dg_prev);
      num::axpy(1.0, dx, ps.grad(net.e_src).row(static_cast<std::size_t>(source[i])));
      dg = std::move(dg_prev);
    }
  } else {
    // d_summary is dR_S, the gradient at the last forward state
    Vector dh = std::move(d_summary);
    for (std::size_t i = n; i-- > 0;) {
      Vector dx(m.dim, 0.0), dh_prev(h, 0.0);
      num::gru_backward(ps, net.enc, fc.enc_fwd[i], dh, dx, dh_prev);
      num::axpy(1.0, dx, ps.grad(net.e_src).row(static_cast<std::size_t>(source[i])));
      dh = std::move(dh_prev);
    }
  }
}

void init_uniform(Matrix& m, Rng& rng, double bound) {
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-bound, bound);
}

}  // namespace

std::shared_ptr<const corpus::Vocabulary> extend_target_vocab(
    const corpus::Vocabulary& vocab) {
  auto extended = std::make_shared<corpus::Vocabulary>(vocab);
  if (!extended->contains(kBos)) extended->add(std::string(kBos));
  if (!extended->contains(kEos)) extended->add(std::string(kEos));
  return extended;
}

TranslationModel init_model(std::shared_ptr<const corpus::Vocabulary> source_vocab,
                            std::shared_ptr<const corpus::Vocabulary> target_vocab,
                            const Config& config, Rng& rng) {
  TranslationModel m;
  m.variant = config.variant;
  m.dim = config.dim;
  m.hidden = config.hidden;
  m.source_vocab = std::move(source_vocab);
  m.target_vocab = extend_target_vocab(*target_vocab);
  m.bos_id = m.target_vocab->id(kBos);
  m.eos_id = m.target_vocab->id(kEos);

  const auto vs = static_cast<std::size_t>(m.source_vocab->size());
  const auto vt = static_cast<std::size_t>(m.target_vocab->size());
  const std::size_t d = config.dim;
  const std::size_t h = config.hidden;
  const bool attention = m.variant == Variant::attention;
  const std::size_t ctx = attention ? 2 * h : h;

  ParamSet& ps = m.params;
  ps.add("E_src", vs, d);
  ps.add("E_tgt", vt, d);
  num::make_gru(ps, "enc", d, h);
  if (attention) num::make_gru(ps, "encb", d, h);
  num::make_gru(ps, "dec", d + ctx, h);
  ps.add("init.W", h, ctx);
  ps.add("init.b", 1, h);
  if (attention) {
    ps.add("att.W", h, h);
    ps.add("att.U", h, 2 * h);
    ps.add("att.v", 1, h);
  }
  ps.add("out.W", vt, h);
  ps.add("out.b", 1, vt);

  // embeddings uniform(-0.5/d, 0.5/d); weights uniform(-0.08, 0.08);
  // biases start at zero. Drawn in insertion order for reproducibility.
  const double emb_bound = 0.5 / static_cast<double>(d);
  for (std::size_t hdl = 0; hdl < ps.count(); ++hdl) {
    const std::string& name = ps.name(hdl);
    if (name == "E_src" || name == "E_tgt") {
      init_uniform(ps.value(hdl), rng, emb_bound);
    } else if (name.ends_with(".bz") || name.ends_with(".br") || name.ends_with(".bh") ||
               name == "init.b" || name == "out.b") {
      continue;
    } else {
      init_uniform(ps.value(hdl), rng, 0.08);
    }
  }
  return m;
}

EncodedSource encode(const TranslationModel& model, std::span<const int> source) {
  const Net net = resolve(model);
  return run_encoder(model, net, source, nullptr, nullptr);
}

Attention attend(const TranslationModel& model, std::span<const double> state,
                 const Matrix& annotations) {
  if (model.variant != Variant::attention) {
    throw std::logic_error("attend: model is the plain variant");
  }
  const Net net = resolve(model);
  return run_attention(model, net, state, annotations, nullptr);
}

std::vector<int> sample_candidates(std::size_t vocab_size, std::span<const int> gold_ids,
                                   std::size_t budget, Rng& rng) {
  std::vector<char> in_set(vocab_size, 0);
  std::vector<int> set;
  for (int g : gold_ids) {
    if (g < 0 || static_cast<std::size_t>(g) >= vocab_size) {
      throw std::invalid_argument("sample_candidates: gold id out of range");
    }
    if (!in_set[static_cast<std::size_t>(g)]) {
      in_set[static_cast<std::size_t>(g)] = 1;
      set.push_back(g);
    }
  }
  if (set.size() < budget) {
    std::vector<int> rest;
    rest.reserve(vocab_size - set.size());
    for (std::size_t i = 0; i < vocab_size; ++i) {
      if (!in_set[i]) rest.push_back(static_cast<int>(i));
    }
    const std::size_t need = std::min(budget - set.size(), rest.size());
    for (std::size_t i = 0; i < need; ++i) {
      std::swap(rest[i], rest[i + rng.below(rest.size() - i)]);
      set.push_back(rest[i]);
    }
  }
  std::sort(set.begin(), set.end());
  return set;
}

double sampled_logprob(std::span<const double> logits, std::size_t gold_pos) {
  if (gold_pos >= logits.size()) {
    throw std::invalid_argument("sampled_logprob: gold position outside candidate set");
  }
  return num::log_sum_exp(logits) - logits[gold_pos];
}

double sequence_loss(const TranslationModel& model, std::span<const int> source,
                     std::span<const int> target, const SoftmaxPlan& plan, Rng& rng) {
  const Net net = resolve(model);
  std::vector<int> candidates;
  if (plan.mode == SoftmaxMode::sampled) {
    if (plan.budget < 1 || plan.budget > model.target_size()) {
      throw std::invalid_argument("sampled softmax: budget must be in [1, |V_t|]");
    }
    std::vector<int> golds(target.begin(), target.end());
    golds.push_back(model.eos_id);
    candidates = sample_candidates(model.target_size(), golds, plan.budget, rng);
  }
  return run_forward(model, net, source, target, candidates, nullptr);
}

double sequence_loss_grad(TranslationModel& model, std::span<const int> source,
                          std::span<const int> target, std::span<const int> candidates) {
  const Net net = resolve(model);
  ForwardCache fc;
  const double loss = run_forward(model, net, source, target, candidates, &fc);
  run_backward(model, net, source, candidates, fc);
  return loss;
}

std::vector<int> translate_greedy(const TranslationModel& model,
                                  std::span<const int> source, std::size_t max_len) {
  const Net net = resolve(model);
  std::vector<int> output;
  if (max_len == 0) return output;
  const EncodedSource enc = run_encoder(model, net, source, nullptr, nullptr);
  const Matrix& e_tgt = model.params.value(net.e_tgt);
  const Matrix& out_w = model.params.value(net.out_w);
  const auto& out_b = model.params.value(net.out_b);
  const std::size_t h = model.hidden;

  Vector s(h, 0.0);
  num::matvec_add(model.params.value(net.init_w), enc.summary, s);
  num::axpy(1.0, model.params.value(net.init_b).row(0), s);
  for (double& x : s) x = std::tanh(x);

  int prev = model.bos_id;
  Vector x(model.dim + net.ctx_dim);
  for (std::size_t t = 0; t < max_len; ++t) {
    const auto emb = e_tgt.row(static_cast<std::size_t>(prev));
    std::copy(emb.begin(), emb.end(), x.begin());
    if (model.variant == Variant::attention) {
      const Attention att = run_attention(model, net, s, enc.annotations, nullptr);
      std::copy(att.context.begin(), att.context.end(),
                x.begin() + static_cast<std::ptrdiff_t>(model.dim));
    } else {
      std::copy(enc.summary.begin(), enc.summary.end(),
                x.begin() + static_cast<std::ptrdiff_t>(model.dim));
    }
    s = num::gru_step(model.params, net.dec, x, s, nullptr);
    int best = 0;
    double best_logit = -1e300;
    for (std::size_t c = 0; c < model.target_size(); ++c) {
      const double logit = num::dot(out_w.row(c), s) + out_b.row(0)[c];
      if (logit > best_logit) {
        best_logit = logit;
        best = static_cast<int>(c);
      }
    }
    if (best == model.eos_id) break;
    output.push_back(best);
    prev = best;
  }
  return output;
}

embstore::EmbeddingSpace export_embeddings(const TranslationModel& model, Side side,
                                           std::string name) {
  if (name.empty()) name = side == Side::source ? "nmt-src" : "nmt-tgt";
  if (side == Side::source) {
    return embstore::EmbeddingSpace(*model.source_vocab, model.params.value("E_src"),
                                    std::move(name));
  }
  return embstore::EmbeddingSpace(*model.target_vocab, model.params.value("E_tgt"),
                                  std::move(name));
}

namespace {

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  out.write(reinterpret_cast<const char*>(b), 8);
}

void write_f64(std::ostream& out, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  write_u64(out, v);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double read_f64(std::istream& in) {
  const std::uint64_t v = read_u64(in);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

nlohmann::json vocab_to_json(const corpus::Vocabulary& v) {
  return {{"words", v.words()}, {"counts", v.counts()}};
}

corpus::Vocabulary vocab_from_json(const nlohmann::json& j) {
  return corpus::Vocabulary::from_words(j.at("words").get<std::vector<std::string>>(),
                                        j.at("counts").get<std::vector<std::int64_t>>());
}

constexpr char kMagic[4] = {'E', 'M', 'B', 'K'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void save_model(const TranslationModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  nlohmann::json header = {
      {"variant", model.variant == Variant::attention ? "attention" : "plain"},
      {"dim", model.dim},
      {"hidden", model.hidden},
      {"bos_id", model.bos_id},
      {"eos_id", model.eos_id},
      {"source_vocab", vocab_to_json(*model.source_vocab)},
      {"target_vocab", vocab_to_json(*model.target_vocab)},
  };
  const std::string hs = header.dump();
  write_u32(out, static_cast<std::uint32_t>(hs.size()));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  write_u32(out, static_cast<std::uint32_t>(model.params.count()));
  for (std::size_t h = 0; h < model.params.count(); ++h) {
    const std::string& name = model.params.name(h);
    const Matrix& mat = model.params.value(h);
    write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(out, mat.rows());
    write_u64(out, mat.cols());
    for (std::size_t i = 0; i < mat.size(); ++i) write_f64(out, mat.data()[i]);
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

TranslationModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error(path + ": not a model checkpoint");
  }
  const std::uint32_t version = read_u32(in);
  if (version != kVersion) {
    throw std::runtime_error(path + ": unsupported checkpoint version " +
                             std::to_string(version));
  }
  const std::uint32_t header_len = read_u32(in);
  std::string hs(header_len, '\0');
  in.read(hs.data(), header_len);
  const auto header = nlohmann::json::parse(hs);

  TranslationModel m;
  m.variant = header.at("variant").get<std::string>() == "attention" ? Variant::attention
                                                                     : Variant::plain;
  m.dim = header.at("dim").get<std::size_t>();
  m.hidden = header.at("hidden").get<std::size_t>();
  m.bos_id = header.at("bos_id").get<int>();
  m.eos_id = header.at("eos_id").get<int>();
  m.source_vocab = std::make_shared<corpus::Vocabulary>(
      vocab_from_json(header.at("source_vocab")));
  m.target_vocab = std::make_shared<corpus::Vocabulary>(
      vocab_from_json(header.at("target_vocab")));

  const std::uint32_t count = read_u32(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = read_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const std::uint64_t rows = read_u64(in);
    const std::uint64_t cols = read_u64(in);
    const std::size_t h = m.params.add(name, rows, cols);
    Matrix& mat = m.params.value(h);
    for (std::size_t k = 0; k < mat.size(); ++k) mat.data()[k] = read_f64(in);
  }
  if (!in) throw std::runtime_error(path + ": truncated checkpoint");
  return m;
}

TranslationModel train(const corpus::ParallelCorpus& corpus, const Config& config,
                       TrainStats* stats) {
  if (corpus.pairs.empty()) throw std::runtime_error("empty corpus");
  Rng rng(config.seed);
  TranslationModel model =
      init_model(corpus.source_vocab, corpus.target_vocab, config, rng);
  const Net net = resolve(model);

  if (config.plan.mode == SoftmaxMode::sampled &&
      (config.plan.budget < 1 || config.plan.budget > model.target_size())) {
    throw std::invalid_argument("sampled softmax: budget must be in [1, |V_t|]");
  }

  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < corpus.pairs.size(); ++i) {
    if (!corpus.pairs[i].first.empty() && !corpus.pairs[i].second.empty()) {
      usable.push_back(i);
    }
  }
  if (usable.empty()) throw std::runtime_error("no usable sentence pairs");

  const std::size_t batch = std::max<std::size_t>(config.batch, 1);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(usable);
    double loss_sum = 0.0;
    std::size_t sentences = 0;
    for (std::size_t start = 0; start < usable.size(); start += batch) {
      const std::size_t end = std::min(start + batch, usable.size());
      std::vector<int> candidates;
      if (config.plan.mode == SoftmaxMode::sampled) {
        std::vector<int> golds;
        for (std::size_t i = start; i < end; ++i) {
          const auto& tgt = corpus.pairs[usable[i]].second;
          golds.insert(golds.end(), tgt.begin(), tgt.end());
        }
        golds.push_back(model.eos_id);
        candidates = sample_candidates(model.target_size(), golds, config.plan.budget, rng);
      }
      for (std::size_t i = start; i < end; ++i) {
        const auto& pair = corpus.pairs[usable[i]];
        ForwardCache fc;
        loss_sum += run_forward(model, net, pair.first, pair.second, candidates, &fc);
        run_backward(model, net, pair.first, candidates, fc);
        ++sentences;
      }
      model.params.scale_grads(1.0 / static_cast<double>(end - start));
      num::sgd_update(model.params, config.lr, config.clip_norm);
    }
    if (stats) {
      stats->epoch_mean_loss.push_back(loss_sum / static_cast<double>(sentences));
    }
  }
  return model;
}

}  // namespace embkit::nmt
