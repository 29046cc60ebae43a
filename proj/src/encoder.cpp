// Copyright 2026 The fcalink Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fcalink/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace fcalink::nn {

namespace {

constexpr double kNormEps = 1e-5;

std::string layer_name(const std::string& prefix, std::size_t l, const char* what) {
  return prefix + "layer" + std::to_string(l) + "." + what;
}

template <class T>
T sigmoid(T z) {
  if (z >= 0) return T(1) / (T(1) + std::exp(-z));
  const T e = std::exp(z);
  return e / (T(1) + e);
}

// Binary cross-entropy on a logit.
template <class T>
T bce_with_logit(T z, int label) {
  const T y = static_cast<T>(label);
  return std::max(z, T(0)) - z * y + std::log1p(std::exp(-std::abs(z)));
}

template <class T>
T gelu(T x) {
  return T(0.5) * x * (T(1) + std::erf(x / std::numbers::sqrt2_v<T>));
}

template <class T>
T gelu_grad(T x) {
  const T cdf = T(0.5) * (T(1) + std::erf(x / std::numbers::sqrt2_v<T>));
  const T pdf = std::exp(T(-0.5) * x * x) / std::sqrt(T(2) * std::numbers::pi_v<T>);
  return cdf + x * pdf;
}

// Forward kernels accumulate every output element in a fixed order that does
// not depend on the row's position or alignment, so a token's state is
// reproduced bit for bit wherever it sits in a batch.
template <class T>
T row_sum(const T* v, Eigen::Index n) {
  T acc = 0;
  for (Eigen::Index i = 0; i < n; ++i) acc += v[i];
  return acc;
}

// y.row(r) = x.row(r) * w (+ b), as axpy over the rows of w.
template <class T>
Matrix<T> matmul_rows(const Matrix<T>& x, const T* w, Eigen::Index w_rows, Eigen::Index w_cols,
                      const T* bias) {
  if (x.cols() != w_rows) throw UsageError("matrix shapes do not agree");
  Matrix<T> y(x.rows(), w_cols);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    T* __restrict yr = y.data() + r * w_cols;
    for (Eigen::Index j = 0; j < w_cols; ++j) yr[j] = bias ? bias[j] : T(0);
    const T* xr = x.data() + r * x.cols();
    for (Eigen::Index k = 0; k < w_rows; ++k) {
      const T a = xr[k];
      const T* __restrict wk = w + k * w_cols;
      for (Eigen::Index j = 0; j < w_cols; ++j) yr[j] += a * wk[j];
    }
  }
  return y;
}

template <class T>
Matrix<T> layer_norm(const Matrix<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     LayerNormCache<T>* cache) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  Matrix<T> xhat(n, d);
  Matrix<T> y(n, d);
  std::vector<T> inv_std(static_cast<std::size_t>(n));
  std::vector<T> centered(static_cast<std::size_t>(d));
  for (Eigen::Index r = 0; r < n; ++r) {
    const T* xr = x.data() + r * d;
    const T mean = row_sum(xr, d) / static_cast<T>(d);
    for (Eigen::Index c = 0; c < d; ++c) {
      const T z = xr[c] - mean;
      centered[static_cast<std::size_t>(c)] = z * z;
    }
    const T var = row_sum(centered.data(), d) / static_cast<T>(d);
    const T inv = T(1) / std::sqrt(var + static_cast<T>(kNormEps));
    inv_std[static_cast<std::size_t>(r)] = inv;
    for (Eigen::Index c = 0; c < d; ++c) {
      const T h = (xr[c] - mean) * inv;
      xhat(r, c) = h;
      y(r, c) = h * gamma.data[static_cast<std::size_t>(c)] + beta.data[static_cast<std::size_t>(c)];
    }
  }
  if (cache) {
    cache->normalized = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

template <class T>
Matrix<T> layer_norm_backward(const Matrix<T>& dy, const LayerNormCache<T>& cache,
                              const Tensor<T>& gamma, Tensor<T>& dgamma, Tensor<T>& dbeta) {
  const Matrix<T>& xhat = cache.normalized;
  dgamma.row() += (dy.array() * xhat.array()).colwise().sum().matrix();
  dbeta.row() += dy.colwise().sum();
  Matrix<T> dxhat = dy.array().rowwise() * gamma.row().array();
  Matrix<T> dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const T m1 = dxhat.row(r).mean();
    const T m2 = (dxhat.row(r).array() * xhat.row(r).array()).mean();
    dx.row(r) = cache.inv_std[static_cast<std::size_t>(r)] *
                (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2);
  }
  return dx;
}

template <class T>
Matrix<T> linear(const Matrix<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  return matmul_rows(x, w.data.data(), static_cast<Eigen::Index>(w.rows),
                     static_cast<Eigen::Index>(w.cols), b.data.data());
}

template <class T>
Matrix<T> linear_nobias(const Matrix<T>& x, const Tensor<T>& w) {
  return matmul_rows<T>(x, w.data.data(), static_cast<Eigen::Index>(w.rows),
                        static_cast<Eigen::Index>(w.cols), nullptr);
}

// dY → dX, accumulating dW and db.
template <class T>
Matrix<T> linear_backward(const Matrix<T>& x, const Matrix<T>& dy, const Tensor<T>& w,
                          Tensor<T>& dw, Tensor<T>& db) {
  dw.mat().noalias() += x.transpose() * dy;
  db.row() += dy.colwise().sum();
  return dy * w.mat().transpose();
}

// Inverted dropout mask (entries 0 or 1/(1-p)), drawn row by row per sequence.
template <class T>
Matrix<T> dropout_mask(const PackedBatch& batch, Eigen::Index cols, const DropoutPlan& plan,
                       std::uint64_t stream) {
  Matrix<T> mask(static_cast<Eigen::Index>(batch.num_rows()), cols);
  const T keep = static_cast<T>(1.0 / (1.0 - plan.rate));
  for (std::size_t s = 0; s < batch.num_sequences(); ++s) {
    Rng rng(derive_seed(derive_seed(plan.seed, s), stream));
    for (std::size_t r = batch.offsets[s]; r < batch.offsets[s + 1]; ++r)
      for (Eigen::Index c = 0; c < cols; ++c)
        mask(static_cast<Eigen::Index>(r), c) = rng.uniform01() < plan.rate ? T(0) : keep;
  }
  return mask;
}

bool dropout_active(const DropoutPlan* plan) { return plan != nullptr && plan->rate > 0.0; }

// Attendable rows of sequence s ordered by (token id, segment, row). Rows that
// tie on (id, segment) hold identical states, so reductions over keys in this
// order give bit-identical results for any arrangement of the payload.
std::vector<Eigen::Index> canonical_keys(const PackedBatch& batch, std::size_t s) {
  std::vector<Eigen::Index> keys;
  for (std::size_t r = batch.offsets[s]; r < batch.offsets[s + 1]; ++r)
    if (batch.key_mask[r]) keys.push_back(static_cast<Eigen::Index>(r));
  std::sort(keys.begin(), keys.end(), [&](Eigen::Index a, Eigen::Index b) {
    const auto ua = static_cast<std::size_t>(a);
    const auto ub = static_cast<std::size_t>(b);
    if (batch.ids[ua] != batch.ids[ub]) return batch.ids[ua] < batch.ids[ub];
    if (batch.segments[ua] != batch.segments[ub]) return batch.segments[ua] < batch.segments[ub];
    return a < b;
  });
  return keys;
}

template <class T>
Matrix<T> gather_rows(const Matrix<T>& m, const std::vector<Eigen::Index>& rows, Eigen::Index c0,
                      Eigen::Index width) {
  Matrix<T> out(static_cast<Eigen::Index>(rows.size()), width);
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = m.block(rows[i], c0, 1, width);
  return out;
}

template <class T>
void scatter_add_rows(Matrix<T>& m, const std::vector<Eigen::Index>& rows, Eigen::Index c0,
                      const Matrix<T>& src) {
  for (std::size_t i = 0; i < rows.size(); ++i)
    m.block(rows[i], c0, 1, src.cols()) += src.row(static_cast<Eigen::Index>(i));
}

struct LayerNames {
  std::string wq, bq, wk, bk, wv, bv, wo, bo, n1g, n1b, w1, b1, w2, b2, n2g, n2b;
  LayerNames(const std::string& p, std::size_t l)
      : wq(layer_name(p, l, "attention.query.weight")),
        bq(layer_name(p, l, "attention.query.bias")),
        wk(layer_name(p, l, "attention.key.weight")),
        bk(layer_name(p, l, "attention.key.bias")),
        wv(layer_name(p, l, "attention.value.weight")),
        bv(layer_name(p, l, "attention.value.bias")),
        wo(layer_name(p, l, "attention.output.weight")),
        bo(layer_name(p, l, "attention.output.bias")),
        n1g(layer_name(p, l, "attention_norm.gamma")),
        n1b(layer_name(p, l, "attention_norm.beta")),
        w1(layer_name(p, l, "ffn.in.weight")),
        b1(layer_name(p, l, "ffn.in.bias")),
        w2(layer_name(p, l, "ffn.out.weight")),
        b2(layer_name(p, l, "ffn.out.bias")),
        n2g(layer_name(p, l, "ffn_norm.gamma")),
        n2b(layer_name(p, l, "ffn_norm.beta")) {}
};

}  // namespace

// ---------------------------------------------------------------------------
// Config

void EncoderConfig::validate() const {
  if (d_model == 0 || n_layers == 0 || n_heads == 0 || d_ff == 0 || vocab_size == 0 || max_len == 0)
    throw UsageError("encoder dimensions must all be >= 1");
  if (d_model % n_heads != 0) throw UsageError("d_model must be divisible by n_heads");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw UsageError("dropout must lie in [0, 1)");
}

nlohmann::json EncoderConfig::to_json() const {
  return {{"d_model", d_model},       {"n_layers", n_layers}, {"n_heads", n_heads},
          {"d_ff", d_ff},             {"vocab_size", vocab_size}, {"max_len", max_len},
          {"dropout", dropout},       {"seed", seed}};
}

EncoderConfig EncoderConfig::from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.d_model = j.value("d_model", c.d_model);
  c.n_layers = j.value("n_layers", c.n_layers);
  c.n_heads = j.value("n_heads", c.n_heads);
  c.d_ff = j.value("d_ff", c.d_ff);
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.max_len = j.value("max_len", c.max_len);
  c.dropout = j.value("dropout", c.dropout);
  c.seed = j.value("seed", c.seed);
  return c;
}

PackedBatch PackedBatch::pack(const SequenceRefs& seqs, bool trim_padding) {
  PackedBatch b;
  for (const TokenSequence* s : seqs) {
    std::size_t len = s->length();
    if (trim_padding) {
      while (len > 0 && s->attention[len - 1] == 0) --len;
    }
    for (std::size_t p = 0; p < len; ++p) {
      b.ids.push_back(s->ids[p]);
      b.segments.push_back(s->segments[p]);
      b.key_mask.push_back(s->attention[p]);
    }
    b.offsets.push_back(b.ids.size());
  }
  return b;
}

// ---------------------------------------------------------------------------
// Parameters

template <class T>
void add_encoder_params(ParamSet<T>& p, const std::string& prefix, const EncoderConfig& cfg) {
  cfg.validate();
  const std::size_t d = cfg.d_model;
  p.add(prefix + "token_embedding", cfg.vocab_size, d);
  p.add(prefix + "segment_embedding", 2, d);
  p.add(prefix + "embedding_norm.gamma", 1, d);
  p.add(prefix + "embedding_norm.beta", 1, d);
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const LayerNames n(prefix, l);
    p.add(n.wq, d, d);
    p.add(n.bq, 1, d);
    p.add(n.wk, d, d);
    p.add(n.bk, 1, d);
    p.add(n.wv, d, d);
    p.add(n.bv, 1, d);
    p.add(n.wo, d, d);
    p.add(n.bo, 1, d);
    p.add(n.n1g, 1, d);
    p.add(n.n1b, 1, d);
    p.add(n.w1, d, cfg.d_ff);
    p.add(n.b1, 1, cfg.d_ff);
    p.add(n.w2, cfg.d_ff, d);
    p.add(n.b2, 1, d);
    p.add(n.n2g, 1, d);
    p.add(n.n2b, 1, d);
  }
}

template <class T>
void init_encoder_params(ParamSet<T>& p, const std::string& prefix, const EncoderConfig& cfg,
                         Rng& rng) {
  const double emb_std = 1.0 / std::sqrt(static_cast<double>(cfg.d_model));
  fill_normal(p.at(prefix + "token_embedding"), emb_std, rng);
  fill_normal(p.at(prefix + "segment_embedding"), emb_std, rng);
  fill_constant(p.at(prefix + "embedding_norm.gamma"), T(1));
  const double d_std = 1.0 / std::sqrt(static_cast<double>(cfg.d_model));
  const double ff_std = 1.0 / std::sqrt(static_cast<double>(cfg.d_ff));
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const LayerNames n(prefix, l);
    fill_normal(p.at(n.wq), d_std, rng);
    fill_normal(p.at(n.wk), d_std, rng);
    fill_normal(p.at(n.wv), d_std, rng);
    fill_normal(p.at(n.wo), d_std, rng);
    fill_constant(p.at(n.n1g), T(1));
    fill_normal(p.at(n.w1), d_std, rng);
    fill_normal(p.at(n.w2), ff_std, rng);
    fill_constant(p.at(n.n2g), T(1));
  }
}

// ---------------------------------------------------------------------------
// Encoder forward / backward

template <class T>
Matrix<T> encoder_forward(const ParamSet<T>& p, const std::string& prefix, const EncoderConfig& cfg,
                          const PackedBatch& batch, EncoderCache<T>* cache,
                          const DropoutPlan* dropout) {
  const auto n = static_cast<Eigen::Index>(batch.num_rows());
  const auto d = static_cast<Eigen::Index>(cfg.d_model);
  const std::size_t heads = cfg.n_heads;
  const auto dh = static_cast<Eigen::Index>(cfg.d_model / heads);
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  const bool drop = dropout_active(dropout);

  const auto& tok = p.at(prefix + "token_embedding").mat();
  const auto& seg = p.at(prefix + "segment_embedding").mat();
  Matrix<T> x(n, d);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto id = batch.ids[static_cast<std::size_t>(r)];
    if (id < 0 || static_cast<std::size_t>(id) >= cfg.vocab_size)
      throw UsageError("token id " + std::to_string(id) + " outside vocabulary of size " +
                       std::to_string(cfg.vocab_size));
    x.row(r) = tok.row(id) + seg.row(batch.segments[static_cast<std::size_t>(r)] ? 1 : 0);
  }
  if (cache) {
    cache->batch = batch;
    cache->layers.assign(cfg.n_layers, {});
  }
  x = layer_norm(x, p.at(prefix + "embedding_norm.gamma"), p.at(prefix + "embedding_norm.beta"),
                 cache ? &cache->embed_norm : nullptr);
  if (drop) {
    Matrix<T> mask = dropout_mask<T>(batch, d, *dropout, 0);
    x.array() *= mask.array();
    if (cache) cache->embed_drop = std::move(mask);
  }

  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const LayerNames nm(prefix, l);
    LayerCache<T>* lc = cache ? &cache->layers[l] : nullptr;
    Matrix<T> q = linear(x, p.at(nm.wq), p.at(nm.bq));
    Matrix<T> k = linear(x, p.at(nm.wk), p.at(nm.bk));
    Matrix<T> v = linear(x, p.at(nm.wv), p.at(nm.bv));
    Matrix<T> context(n, d);
    if (lc) lc->probs.resize(batch.num_sequences() * heads);
    for (std::size_t s = 0; s < batch.num_sequences(); ++s) {
      const auto o = static_cast<Eigen::Index>(batch.offsets[s]);
      const auto len = static_cast<Eigen::Index>(batch.offsets[s + 1] - batch.offsets[s]);
      const std::vector<Eigen::Index> keys = canonical_keys(batch, s);
      for (std::size_t h = 0; h < heads; ++h) {
        const auto c0 = static_cast<Eigen::Index>(h) * dh;
        const Matrix<T> kh = gather_rows(k, keys, c0, dh);
        const Matrix<T> vh = gather_rows(v, keys, c0, dh);
        const auto nk = kh.rows();
        Matrix<T> probs(len, nk);
        for (Eigen::Index r = 0; r < len; ++r) {
          const T* qr = q.data() + (o + r) * d + c0;
          T* pr = probs.data() + r * nk;
          for (Eigen::Index j = 0; j < nk; ++j) {
            const T* kj = kh.data() + j * dh;
            T dot = 0;
            for (Eigen::Index c = 0; c < dh; ++c) dot += qr[c] * kj[c];
            pr[j] = dot * scale;
          }
          T mx = pr[0];
          for (Eigen::Index j = 1; j < nk; ++j) mx = std::max(mx, pr[j]);
          for (Eigen::Index j = 0; j < nk; ++j) pr[j] = std::exp(pr[j] - mx);
          const T total = row_sum(pr, nk);
          for (Eigen::Index j = 0; j < nk; ++j) pr[j] /= total;
          T* cr = context.data() + (o + r) * d + c0;
          for (Eigen::Index c = 0; c < dh; ++c) cr[c] = 0;
          for (Eigen::Index j = 0; j < nk; ++j) {
            const T a = pr[j];
            const T* vj = vh.data() + j * dh;
            for (Eigen::Index c = 0; c < dh; ++c) cr[c] += a * vj[c];
          }
        }
        if (lc) lc->probs[s * heads + h] = std::move(probs);
      }
    }
    Matrix<T> attn = linear(context, p.at(nm.wo), p.at(nm.bo));
    if (drop) {
      Matrix<T> mask = dropout_mask<T>(batch, d, *dropout, 1 + 2 * l);
      attn.array() *= mask.array();
      if (lc) lc->attn_drop = std::move(mask);
    }
    Matrix<T> x1 = layer_norm<T>(x + attn, p.at(nm.n1g), p.at(nm.n1b),
                                 lc ? &lc->attn_norm : nullptr);
    Matrix<T> ff_pre = linear(x1, p.at(nm.w1), p.at(nm.b1));
    Matrix<T> ff_act = ff_pre.unaryExpr([](T z) { return gelu(z); });
    Matrix<T> ff = linear(ff_act, p.at(nm.w2), p.at(nm.b2));
    if (drop) {
      Matrix<T> mask = dropout_mask<T>(batch, d, *dropout, 2 + 2 * l);
      ff.array() *= mask.array();
      if (lc) lc->ff_drop = std::move(mask);
    }
    Matrix<T> x2 = layer_norm<T>(x1 + ff, p.at(nm.n2g), p.at(nm.n2b),
                                 lc ? &lc->ff_norm : nullptr);
    if (lc) {
      lc->input = std::move(x);
      lc->q = std::move(q);
      lc->k = std::move(k);
      lc->v = std::move(v);
      lc->context = std::move(context);
      lc->attn_out = std::move(x1);
      lc->ff_pre = std::move(ff_pre);
      lc->ff_act = std::move(ff_act);
    }
    x = std::move(x2);
  }
  return x;
}

template <class T>
void encoder_backward(const ParamSet<T>& p, const std::string& prefix, const EncoderConfig& cfg,
                      const EncoderCache<T>& cache, const Matrix<T>& d_hidden, ParamSet<T>& g) {
  const PackedBatch& batch = cache.batch;
  const std::size_t heads = cfg.n_heads;
  const auto dh = static_cast<Eigen::Index>(cfg.d_model / heads);
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));

  Matrix<T> dx = d_hidden;
  for (std::size_t li = cfg.n_layers; li-- > 0;) {
    const LayerNames nm(prefix, li);
    const LayerCache<T>& lc = cache.layers[li];

    // x2 = LN(x1 + drop(ffn(x1)))
    Matrix<T> dsum2 = layer_norm_backward(dx, lc.ff_norm, p.at(nm.n2g), g.at(nm.n2g), g.at(nm.n2b));
    Matrix<T> dff = dsum2;
    if (lc.ff_drop.size() > 0) dff.array() *= lc.ff_drop.array();
    Matrix<T> dact = linear_backward(lc.ff_act, dff, p.at(nm.w2), g.at(nm.w2), g.at(nm.b2));
    Matrix<T> dpre = dact.array() * lc.ff_pre.unaryExpr([](T z) { return gelu_grad(z); }).array();
    Matrix<T> dx1 = dsum2 + linear_backward(lc.attn_out, dpre, p.at(nm.w1), g.at(nm.w1),
                                            g.at(nm.b1));

    // x1 = LN(x + drop(attention(x)))
    Matrix<T> dsum1 =
        layer_norm_backward(dx1, lc.attn_norm, p.at(nm.n1g), g.at(nm.n1g), g.at(nm.n1b));
    Matrix<T> dattn = dsum1;
    if (lc.attn_drop.size() > 0) dattn.array() *= lc.attn_drop.array();
    Matrix<T> dcontext = linear_backward(lc.context, dattn, p.at(nm.wo), g.at(nm.wo), g.at(nm.bo));

    Matrix<T> dq = Matrix<T>::Zero(lc.q.rows(), lc.q.cols());
    Matrix<T> dk = Matrix<T>::Zero(lc.k.rows(), lc.k.cols());
    Matrix<T> dv = Matrix<T>::Zero(lc.v.rows(), lc.v.cols());
    for (std::size_t s = 0; s < batch.num_sequences(); ++s) {
      const auto o = static_cast<Eigen::Index>(batch.offsets[s]);
      const auto len = static_cast<Eigen::Index>(batch.offsets[s + 1] - batch.offsets[s]);
      const std::vector<Eigen::Index> keys = canonical_keys(batch, s);
      for (std::size_t h = 0; h < heads; ++h) {
        const auto c0 = static_cast<Eigen::Index>(h) * dh;
        const Matrix<T>& probs = lc.probs[s * heads + h];
        const Matrix<T> kh = gather_rows(lc.k, keys, c0, dh);
        const Matrix<T> vh = gather_rows(lc.v, keys, c0, dh);
        const auto dctx = dcontext.block(o, c0, len, dh);
        const Matrix<T> dprobs = dctx * vh.transpose();
        const Matrix<T> dvh = probs.transpose() * dctx;
        Matrix<T> dscores(probs.rows(), probs.cols());
        for (Eigen::Index r = 0; r < len; ++r) {
          const T dot = (dprobs.row(r).array() * probs.row(r).array()).sum();
          dscores.row(r) = probs.row(r).array() * (dprobs.row(r).array() - dot);
        }
        dscores *= scale;
        dq.block(o, c0, len, dh).noalias() += dscores * kh;
        const Matrix<T> dkh = dscores.transpose() * lc.q.block(o, c0, len, dh);
        scatter_add_rows(dk, keys, c0, dkh);
        scatter_add_rows(dv, keys, c0, dvh);
      }
    }
    dx = dsum1;
    dx += linear_backward(lc.input, dq, p.at(nm.wq), g.at(nm.wq), g.at(nm.bq));
    dx += linear_backward(lc.input, dk, p.at(nm.wk), g.at(nm.wk), g.at(nm.bk));
    dx += linear_backward(lc.input, dv, p.at(nm.wv), g.at(nm.wv), g.at(nm.bv));
  }

  if (cache.embed_drop.size() > 0) dx.array() *= cache.embed_drop.array();
  Matrix<T> demb = layer_norm_backward(dx, cache.embed_norm, p.at(prefix + "embedding_norm.gamma"),
                                       g.at(prefix + "embedding_norm.gamma"),
                                       g.at(prefix + "embedding_norm.beta"));
  auto dtok = g.at(prefix + "token_embedding").mat();
  auto dseg = g.at(prefix + "segment_embedding").mat();
  for (Eigen::Index r = 0; r < demb.rows(); ++r) {
    dtok.row(batch.ids[static_cast<std::size_t>(r)]) += demb.row(r);
    dseg.row(batch.segments[static_cast<std::size_t>(r)] ? 1 : 0) += demb.row(r);
  }
}

template <class T>
std::vector<Matrix<T>> forward(const ParamSet<T>& params, const std::string& prefix,
                               const EncoderConfig& cfg, const SequenceRefs& seqs) {
  const PackedBatch batch = PackedBatch::pack(seqs, false);
  const Matrix<T> hidden = encoder_forward<T>(params, prefix, cfg, batch, nullptr, nullptr);
  std::vector<Matrix<T>> out;
  out.reserve(seqs.size());
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    const auto o = static_cast<Eigen::Index>(batch.offsets[s]);
    const auto len = static_cast<Eigen::Index>(batch.offsets[s + 1] - batch.offsets[s]);
    out.emplace_back(hidden.block(o, 0, len, hidden.cols()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Heads

namespace {

// Rows of the [CLS] token (first row of every sequence).
template <class T>
Matrix<T> gather_cls(const Matrix<T>& hidden, const PackedBatch& batch) {
  Matrix<T> cls(static_cast<Eigen::Index>(batch.num_sequences()), hidden.cols());
  for (std::size_t s = 0; s < batch.num_sequences(); ++s)
    cls.row(static_cast<Eigen::Index>(s)) = hidden.row(static_cast<Eigen::Index>(batch.offsets[s]));
  return cls;
}

template <class T>
Matrix<T> scatter_cls(const Matrix<T>& d_cls, const PackedBatch& batch, Eigen::Index cols) {
  Matrix<T> d = Matrix<T>::Zero(static_cast<Eigen::Index>(batch.num_rows()), cols);
  for (std::size_t s = 0; s < batch.num_sequences(); ++s)
    d.row(static_cast<Eigen::Index>(batch.offsets[s])) = d_cls.row(static_cast<Eigen::Index>(s));
  return d;
}

// P = σ(ReLU(h·W_cls)·W) for every row of h; returns logits.
template <class T>
struct LinkHeadCache {
  Matrix<T> input;
  Matrix<T> pre;
  Matrix<T> act;
};

template <class T>
Matrix<T> link_head_forward(const ParamSet<T>& p, const std::string& prefix, const Matrix<T>& h,
                            LinkHeadCache<T>* cache) {
  Matrix<T> pre = linear_nobias(h, p.at(prefix + "cls_projection"));
  Matrix<T> act = pre.cwiseMax(T(0));
  Matrix<T> logits = linear_nobias(act, p.at(prefix + "output"));
  if (cache) {
    cache->input = h;
    cache->pre = std::move(pre);
    cache->act = std::move(act);
  }
  return logits;
}

template <class T>
Matrix<T> link_head_backward(const ParamSet<T>& p, const std::string& prefix,
                             const LinkHeadCache<T>& cache, const Matrix<T>& dlogits,
                             ParamSet<T>& g) {
  g.at(prefix + "output").mat().noalias() += cache.act.transpose() * dlogits;
  Matrix<T> dact = dlogits * p.at(prefix + "output").mat().transpose();
  Matrix<T> dpre = dact.array() * (cache.pre.array() > T(0)).template cast<T>();
  g.at(prefix + "cls_projection").mat().noalias() += cache.input.transpose() * dpre;
  return dpre * p.at(prefix + "cls_projection").mat().transpose();
}

template <class T>
void add_link_head(ParamSet<T>& p, const std::string& prefix, std::size_t in, std::size_t hidden,
                   Rng& rng) {
  fill_normal(p.add(prefix + "cls_projection", in, hidden), 1.0 / std::sqrt(double(in)), rng);
  fill_normal(p.add(prefix + "output", hidden, 1), 1.0 / std::sqrt(double(hidden)), rng);
}

// Mean BCE over logits; writes dL/dlogit.
template <class T>
double bce_batch(const Matrix<T>& logits, const std::vector<int>& labels, Matrix<T>* dlogits) {
  const auto n = logits.rows();
  if (static_cast<std::size_t>(n) != labels.size())
    throw UsageError("one label per sequence is required");
  double loss = 0;
  if (dlogits) dlogits->resize(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    loss += static_cast<double>(bce_with_logit(logits(i, 0), y));
    if (dlogits) (*dlogits)(i, 0) = (sigmoid(logits(i, 0)) - static_cast<T>(y)) / static_cast<T>(n);
  }
  return n > 0 ? loss / static_cast<double>(n) : 0.0;
}

template <class T>
std::vector<double> sigmoid_all(const Matrix<T>& logits) {
  std::vector<double> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i)
    out[static_cast<std::size_t>(i)] = static_cast<double>(sigmoid(logits(i, 0)));
  return out;
}

}  // namespace

template <class T>
ParamSet<T> make_pretrain_params(const EncoderConfig& cfg, std::uint64_t seed) {
  ParamSet<T> p;
  add_encoder_params(p, kEncoderPrefix, cfg);
  Rng rng(seed);
  init_encoder_params(p, kEncoderPrefix, cfg, rng);
  const std::size_t d = cfg.d_model;
  const double d_std = 1.0 / std::sqrt(static_cast<double>(d));
  fill_normal(p.add("mtp.transform.weight", d, d), d_std, rng);
  p.add("mtp.transform.bias", 1, d);
  fill_constant(p.add("mtp.norm.gamma", 1, d), T(1));
  p.add("mtp.norm.beta", 1, d);
  fill_normal(p.add("mtp.decoder.weight", d, cfg.vocab_size), d_std, rng);
  p.add("mtp.decoder.bias", 1, cfg.vocab_size);
  fill_normal(p.add("ncp.pooler.weight", d, d), d_std, rng);
  p.add("ncp.pooler.bias", 1, d);
  fill_normal(p.add("ncp.classifier.weight", d, 1), d_std, rng);
  p.add("ncp.classifier.bias", 1, 1);
  return p;
}

template <class T>
ParamSet<T> make_oo_params(const EncoderConfig& cfg, std::uint64_t seed) {
  ParamSet<T> p;
  add_encoder_params(p, kEncoderPrefix, cfg);
  Rng rng(seed);
  init_encoder_params(p, kEncoderPrefix, cfg, rng);
  add_link_head(p, "oo.", cfg.d_model, cfg.d_model, rng);
  return p;
}

template <class T>
ParamSet<T> make_oa_params(const EncoderConfig& object_cfg, const EncoderConfig& attribute_cfg,
                           std::uint64_t seed) {
  ParamSet<T> p;
  add_encoder_params(p, kObjectTowerPrefix, object_cfg);
  add_encoder_params(p, kAttributeTowerPrefix, attribute_cfg);
  Rng rng(seed);
  init_encoder_params(p, kObjectTowerPrefix, object_cfg, rng);
  init_encoder_params(p, kAttributeTowerPrefix, attribute_cfg, rng);
  add_link_head(p, "oa.", object_cfg.d_model + attribute_cfg.d_model, object_cfg.d_model, rng);
  return p;
}

template <class T>
PretrainLosses pretrain_loss(const ParamSet<T>& p, const EncoderConfig& cfg,
                             const SequenceRefs& seqs, const std::vector<int>& ncp_labels,
                             ParamSet<T>* grads, const DropoutPlan* dropout) {
  const PackedBatch batch = PackedBatch::pack(seqs, true);
  EncoderCache<T> cache;
  const Matrix<T> hidden =
      encoder_forward<T>(p, kEncoderPrefix, cfg, batch, grads ? &cache : nullptr, dropout);
  const auto d = hidden.cols();
  PretrainLosses losses;
  Matrix<T> d_hidden;
  if (grads) d_hidden = Matrix<T>::Zero(hidden.rows(), d);

  // Masked-token prediction over selected rows.
  std::vector<Eigen::Index> rows;
  std::vector<TokenId> targets;
  for (std::size_t s = 0; s < seqs.size(); ++s)
    for (std::size_t r = batch.offsets[s]; r < batch.offsets[s + 1]; ++r) {
      const TokenId label = seqs[s]->mtp_labels[r - batch.offsets[s]];
      if (label == kIgnoreLabel) continue;
      if (label < 0 || static_cast<std::size_t>(label) >= cfg.vocab_size)
        throw UsageError("masked-token label outside the vocabulary");
      rows.push_back(static_cast<Eigen::Index>(r));
      targets.push_back(label);
    }
  losses.masked_positions = rows.size();
  if (!rows.empty()) {
    const auto m = static_cast<Eigen::Index>(rows.size());
    Matrix<T> sel(m, d);
    for (Eigen::Index i = 0; i < m; ++i) sel.row(i) = hidden.row(rows[static_cast<std::size_t>(i)]);
    Matrix<T> t_pre = linear(sel, p.at("mtp.transform.weight"), p.at("mtp.transform.bias"));
    Matrix<T> t_act = t_pre.unaryExpr([](T z) { return gelu(z); });
    LayerNormCache<T> norm_cache;
    Matrix<T> z = layer_norm(t_act, p.at("mtp.norm.gamma"), p.at("mtp.norm.beta"), &norm_cache);
    Matrix<T> logits = linear(z, p.at("mtp.decoder.weight"), p.at("mtp.decoder.bias"));
    Matrix<T> dlogits(m, logits.cols());
    double total = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
      const T mx = logits.row(i).maxCoeff();
      RowVector<T> e = (logits.row(i).array() - mx).exp();
      const T sum = e.sum();
      const TokenId y = targets[static_cast<std::size_t>(i)];
      total += static_cast<double>(std::log(sum) + mx - logits(i, y));
      dlogits.row(i) = e / sum;
      dlogits(i, y) -= T(1);
    }
    losses.mtp = total / static_cast<double>(m);
    if (grads) {
      dlogits /= static_cast<T>(m);
      Matrix<T> dz = linear_backward(z, dlogits, p.at("mtp.decoder.weight"),
                                     grads->at("mtp.decoder.weight"), grads->at("mtp.decoder.bias"));
      Matrix<T> dact = layer_norm_backward(dz, norm_cache, p.at("mtp.norm.gamma"),
                                           grads->at("mtp.norm.gamma"), grads->at("mtp.norm.beta"));
      Matrix<T> dpre = dact.array() * t_pre.unaryExpr([](T v) { return gelu_grad(v); }).array();
      Matrix<T> dsel =
          linear_backward(sel, dpre, p.at("mtp.transform.weight"),
                          grads->at("mtp.transform.weight"), grads->at("mtp.transform.bias"));
      for (Eigen::Index i = 0; i < m; ++i) d_hidden.row(rows[static_cast<std::size_t>(i)]) += dsel.row(i);
    }
  }

  // Neighbour prediction on [CLS] through a tanh pooler.
  const Matrix<T> cls = gather_cls(hidden, batch);
  Matrix<T> pooled = linear(cls, p.at("ncp.pooler.weight"), p.at("ncp.pooler.bias"));
  pooled = pooled.array().tanh();
  const Matrix<T> logits = linear(pooled, p.at("ncp.classifier.weight"), p.at("ncp.classifier.bias"));
  Matrix<T> dlogits;
  losses.ncp = bce_batch(logits, ncp_labels, grads ? &dlogits : nullptr);
  if (grads) {
    Matrix<T> dpooled = linear_backward(pooled, dlogits, p.at("ncp.classifier.weight"),
                                        grads->at("ncp.classifier.weight"),
                                        grads->at("ncp.classifier.bias"));
    Matrix<T> dpre = dpooled.array() * (T(1) - pooled.array().square());
    Matrix<T> dcls = linear_backward(cls, dpre, p.at("ncp.pooler.weight"),
                                     grads->at("ncp.pooler.weight"), grads->at("ncp.pooler.bias"));
    d_hidden += scatter_cls(dcls, batch, d);
    encoder_backward<T>(p, kEncoderPrefix, cfg, cache, d_hidden, *grads);
  }
  return losses;
}

template <class T>
std::vector<double> ncp_probabilities(const ParamSet<T>& p, const EncoderConfig& cfg,
                                      const SequenceRefs& seqs) {
  const PackedBatch batch = PackedBatch::pack(seqs, true);
  const Matrix<T> hidden = encoder_forward<T>(p, kEncoderPrefix, cfg, batch, nullptr, nullptr);
  Matrix<T> pooled =
      linear(gather_cls(hidden, batch), p.at("ncp.pooler.weight"), p.at("ncp.pooler.bias"));
  pooled = pooled.array().tanh();
  return sigmoid_all<T>(linear(pooled, p.at("ncp.classifier.weight"), p.at("ncp.classifier.bias")));
}

template <class T>
double oo_loss(const ParamSet<T>& p, const EncoderConfig& cfg, const SequenceRefs& seqs,
               const std::vector<int>& labels, ParamSet<T>* grads, const DropoutPlan* dropout) {
  const PackedBatch batch = PackedBatch::pack(seqs, true);
  EncoderCache<T> cache;
  const Matrix<T> hidden =
      encoder_forward<T>(p, kEncoderPrefix, cfg, batch, grads ? &cache : nullptr, dropout);
  LinkHeadCache<T> head;
  const Matrix<T> logits = link_head_forward<T>(p, "oo.", gather_cls(hidden, batch), &head);
  Matrix<T> dlogits;
  const double loss = bce_batch(logits, labels, grads ? &dlogits : nullptr);
  if (grads) {
    const Matrix<T> dcls = link_head_backward<T>(p, "oo.", head, dlogits, *grads);
    encoder_backward<T>(p, kEncoderPrefix, cfg, cache, scatter_cls(dcls, batch, hidden.cols()),
                        *grads);
  }
  return loss;
}

template <class T>
std::vector<double> oo_probabilities(const ParamSet<T>& p, const EncoderConfig& cfg,
                                     const SequenceRefs& seqs) {
  const PackedBatch batch = PackedBatch::pack(seqs, true);
  const Matrix<T> hidden = encoder_forward<T>(p, kEncoderPrefix, cfg, batch, nullptr, nullptr);
  return sigmoid_all<T>(link_head_forward<T>(p, "oo.", gather_cls(hidden, batch), nullptr));
}

template <class T>
double oa_loss(const ParamSet<T>& p, const EncoderConfig& object_cfg,
               const EncoderConfig& attribute_cfg, const SequenceRefs& object_seqs,
               const SequenceRefs& attribute_seqs, const std::vector<int>& labels,
               ParamSet<T>* grads, const DropoutPlan* dropout) {
  if (object_seqs.size() != attribute_seqs.size())
    throw UsageError("object and attribute batches differ in size");
  const PackedBatch ob = PackedBatch::pack(object_seqs, true);
  const PackedBatch ab = PackedBatch::pack(attribute_seqs, true);
  EncoderCache<T> oc;
  EncoderCache<T> ac;
  DropoutPlan attr_plan;
  if (dropout) attr_plan = {dropout->rate, derive_seed(dropout->seed, 0xA77)};
  const Matrix<T> oh =
      encoder_forward<T>(p, kObjectTowerPrefix, object_cfg, ob, grads ? &oc : nullptr, dropout);
  const Matrix<T> ah = encoder_forward<T>(p, kAttributeTowerPrefix, attribute_cfg, ab,
                                          grads ? &ac : nullptr, dropout ? &attr_plan : nullptr);
  const Matrix<T> ocls = gather_cls(oh, ob);
  const Matrix<T> acls = gather_cls(ah, ab);
  Matrix<T> joined(ocls.rows(), ocls.cols() + acls.cols());
  joined << ocls, acls;
  LinkHeadCache<T> head;
  const Matrix<T> logits = link_head_forward<T>(p, "oa.", joined, &head);
  Matrix<T> dlogits;
  const double loss = bce_batch(logits, labels, grads ? &dlogits : nullptr);
  if (grads) {
    const Matrix<T> djoined = link_head_backward<T>(p, "oa.", head, dlogits, *grads);
    const Matrix<T> docls = djoined.leftCols(ocls.cols());
    const Matrix<T> dacls = djoined.rightCols(acls.cols());
    encoder_backward<T>(p, kObjectTowerPrefix, object_cfg, oc, scatter_cls(docls, ob, oh.cols()),
                        *grads);
    encoder_backward<T>(p, kAttributeTowerPrefix, attribute_cfg, ac,
                        scatter_cls(dacls, ab, ah.cols()), *grads);
  }
  return loss;
}

template <class T>
std::vector<double> oa_probabilities(const ParamSet<T>& p, const EncoderConfig& object_cfg,
                                     const EncoderConfig& attribute_cfg,
                                     const SequenceRefs& object_seqs,
                                     const SequenceRefs& attribute_seqs) {
  if (object_seqs.size() != attribute_seqs.size())
    throw UsageError("object and attribute batches differ in size");
  const PackedBatch ob = PackedBatch::pack(object_seqs, true);
  const PackedBatch ab = PackedBatch::pack(attribute_seqs, true);
  const Matrix<T> ocls =
      gather_cls<T>(encoder_forward<T>(p, kObjectTowerPrefix, object_cfg, ob, nullptr, nullptr), ob);
  const Matrix<T> acls = gather_cls<T>(
      encoder_forward<T>(p, kAttributeTowerPrefix, attribute_cfg, ab, nullptr, nullptr), ab);
  Matrix<T> joined(ocls.rows(), ocls.cols() + acls.cols());
  joined << ocls, acls;
  return sigmoid_all<T>(link_head_forward<T>(p, "oa.", joined, nullptr));
}

template <class T>
double oo_head(const ParamSet<T>& p, const RowVector<T>& h_cls) {
  const Matrix<T> h = h_cls;
  return static_cast<double>(sigmoid(link_head_forward<T>(p, "oo.", h, nullptr)(0, 0)));
}

template <class T>
double oa_head(const ParamSet<T>& p, const RowVector<T>& h_object, const RowVector<T>& h_attribute) {
  const auto& w = p.at("oa.cls_projection");
  if (static_cast<std::size_t>(h_object.size() + h_attribute.size()) != w.rows)
    throw UsageError("tower widths do not match the pair head");
  Matrix<T> joined(1, h_object.size() + h_attribute.size());
  joined << h_object, h_attribute;
  return static_cast<double>(sigmoid(link_head_forward<T>(p, "oa.", joined, nullptr)(0, 0)));
}

#define FCALINK_INSTANTIATE(T)                                                                     \
  template void add_encoder_params<T>(ParamSet<T>&, const std::string&, const EncoderConfig&);    \
  template void init_encoder_params<T>(ParamSet<T>&, const std::string&, const EncoderConfig&,    \
                                       Rng&);                                                      \
  template Matrix<T> encoder_forward<T>(const ParamSet<T>&, const std::string&,                   \
                                        const EncoderConfig&, const PackedBatch&,                  \
                                        EncoderCache<T>*, const DropoutPlan*);                     \
  template void encoder_backward<T>(const ParamSet<T>&, const std::string&, const EncoderConfig&, \
                                    const EncoderCache<T>&, const Matrix<T>&, ParamSet<T>&);       \
  template std::vector<Matrix<T>> forward<T>(const ParamSet<T>&, const std::string&,              \
                                             const EncoderConfig&, const SequenceRefs&);           \
  template ParamSet<T> make_pretrain_params<T>(const EncoderConfig&, std::uint64_t);              \
  template ParamSet<T> make_oo_params<T>(const EncoderConfig&, std::uint64_t);                    \
  template ParamSet<T> make_oa_params<T>(const EncoderConfig&, const EncoderConfig&,              \
                                         std::uint64_t);                                           \
  template PretrainLosses pretrain_loss<T>(const ParamSet<T>&, const EncoderConfig&,              \
                                           const SequenceRefs&, const std::vector<int>&,           \
                                           ParamSet<T>*, const DropoutPlan*);                      \
  template std::vector<double> ncp_probabilities<T>(const ParamSet<T>&, const EncoderConfig&,     \
                                                    const SequenceRefs&);                          \
  template double oo_loss<T>(const ParamSet<T>&, const EncoderConfig&, const SequenceRefs&,       \
                             const std::vector<int>&, ParamSet<T>*, const DropoutPlan*);           \
  template std::vector<double> oo_probabilities<T>(const ParamSet<T>&, const EncoderConfig&,      \
                                                   const SequenceRefs&);                           \
  template double oa_loss<T>(const ParamSet<T>&, const EncoderConfig&, const EncoderConfig&,      \
                             const SequenceRefs&, const SequenceRefs&, const std::vector<int>&,    \
                             ParamSet<T>*, const DropoutPlan*);                                    \
  template std::vector<double> oa_probabilities<T>(const ParamSet<T>&, const EncoderConfig&,      \
                                                   const EncoderConfig&, const SequenceRefs&,      \
                                                   const SequenceRefs&);                           \
  template double oo_head<T>(const ParamSet<T>&, const RowVector<T>&);                            \
  template double oa_head<T>(const ParamSet<T>&, const RowVector<T>&, const RowVector<T>&);

FCALINK_INSTANTIATE(float)
FCALINK_INSTANTIATE(double)

#undef FCALINK_INSTANTIATE

}  // namespace fcalink::nn
