#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairgate/error.hpp"
#include "fairgate/math.hpp"
#include "fairgate/random.hpp"

namespace fairgate {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// One direction of the recurrent layer. Input maps are d_hid x d_emb,
// recurrent maps d_hid x d_hid, biases d_hid.
struct GruCell {
  Matrix w_z, w_r, w_h;
  Matrix u_z, u_r, u_h;
  Vector b_z, b_r, b_h;
};

// Bidirectional GRU classifier: token embeddings, one cell per direction and
// a logistic head over the concatenated final states. Gradients use the same
// type.
struct BiGru {
  Matrix embedding;  // vocab_size x d_emb
  GruCell forward;
  GruCell backward;
  Vector w_out;  // 2 * d_hid
  double b_out = 0.0;

  Eigen::Index vocab_size() const { return embedding.rows(); }
  Eigen::Index d_emb() const { return embedding.cols(); }
  Eigen::Index d_hid() const { return forward.b_z.size(); }

  static BiGru zeros(Eigen::Index vocab_size, Eigen::Index d_emb, Eigen::Index d_hid) {
    const auto cell = [&] {
      GruCell c;
      c.w_z = c.w_r = c.w_h = Matrix::Zero(d_hid, d_emb);
      c.u_z = c.u_r = c.u_h = Matrix::Zero(d_hid, d_hid);
      c.b_z = c.b_r = c.b_h = Vector::Zero(d_hid);
      return c;
    };
    BiGru m;
    m.embedding = Matrix::Zero(vocab_size, d_emb);
    m.forward = cell();
    m.backward = cell();
    m.w_out = Vector::Zero(2 * d_hid);
    return m;
  }
};

// Visits every parameter block in a fixed order as (name, data span, rows,
// cols). Works on const and mutable models; the span constness follows.
template <typename Model, typename Fn>
void visit_blocks(Model& m, Fn&& fn) {
  const auto mat = [&](std::string_view name, auto& x) {
    fn(name, std::span(x.data(), static_cast<std::size_t>(x.size())),
       static_cast<std::size_t>(x.rows()), static_cast<std::size_t>(x.cols()));
  };
  const auto cell = [&](auto& c, std::string_view w_z, std::string_view w_r,
                        std::string_view w_h, std::string_view u_z, std::string_view u_r,
                        std::string_view u_h, std::string_view b_z, std::string_view b_r,
                        std::string_view b_h) {
    mat(w_z, c.w_z);
    mat(w_r, c.w_r);
    mat(w_h, c.w_h);
    mat(u_z, c.u_z);
    mat(u_r, c.u_r);
    mat(u_h, c.u_h);
    mat(b_z, c.b_z);
    mat(b_r, c.b_r);
    mat(b_h, c.b_h);
  };
  mat("embedding", m.embedding);
  cell(m.forward, "forward.w_z", "forward.w_r", "forward.w_h", "forward.u_z", "forward.u_r",
       "forward.u_h", "forward.b_z", "forward.b_r", "forward.b_h");
  cell(m.backward, "backward.w_z", "backward.w_r", "backward.w_h", "backward.u_z",
       "backward.u_r", "backward.u_h", "backward.b_z", "backward.b_r", "backward.b_h");
  mat("w_out", m.w_out);
  fn(std::string_view("b_out"), std::span(&m.b_out, 1), std::size_t{1}, std::size_t{1});
}

// Matrices and embeddings uniform in [-scale, scale], biases zero.
inline void init_uniform(BiGru& m, Rng& rng, double scale = 0.1) {
  visit_blocks(m, [&](std::string_view name, std::span<double> data, std::size_t, std::size_t) {
    const bool is_bias = name.find(".b_") != std::string_view::npos || name == "b_out";
    for (double& x : data) x = is_bias ? 0.0 : rng.uniform(-scale, scale);
  });
}

namespace detail {

inline Vector sigmoid_vec(const Vector& a) {
  return a.unaryExpr([](double t) { return sigmoid(t); });
}

}  // namespace detail

// Activations of one time step, kept for backpropagation.
struct GruStep {
  std::int32_t id = 0;
  Vector h_prev, z, r, h_tilde, h;
};

struct GruCache {
  Eigen::Index vocab_size = 0, d_emb = 0, d_hid = 0;
  std::vector<GruStep> forward;   // in text order
  std::vector<GruStep> backward;  // in reverse text order
  double p = 0.5;
};

namespace detail {

inline void run_direction(const GruCell& c, const Matrix& embedding,
                          std::span<const std::int32_t> ids, bool reverse,
                          std::vector<GruStep>& steps) {
  Vector h = Vector::Zero(c.b_z.size());
  steps.reserve(ids.size());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const auto id = ids[reverse ? ids.size() - 1 - k : k];
    const Vector e = embedding.row(id).transpose();
    GruStep s;
    s.id = id;
    s.h_prev = h;
    s.z = sigmoid_vec(c.w_z * e + c.u_z * h + c.b_z);
    s.r = sigmoid_vec(c.w_r * e + c.u_r * h + c.b_r);
    s.h_tilde = (c.w_h * e + c.u_h * s.r.cwiseProduct(h) + c.b_h).array().tanh().matrix();
    h = (Vector::Ones(h.size()) - s.z).cwiseProduct(h) + s.z.cwiseProduct(s.h_tilde);
    s.h = h;
    steps.push_back(std::move(s));
  }
}

}  // namespace detail

// Runs both directions over the non-padding ids and returns p(unfair) with
// the activations needed by gru_backward. Padding id 0 is skipped entirely.
inline GruCache gru_forward(const BiGru& m, std::span<const std::int32_t> ids) {
  std::vector<std::int32_t> live;
  live.reserve(ids.size());
  for (auto id : ids) {
    if (id < 0 || id >= m.vocab_size()) {
      throw ShapeError("token id " + std::to_string(id) + " out of range for vocabulary of " +
                       std::to_string(m.vocab_size()));
    }
    if (id != 0) live.push_back(id);
  }
  if (live.empty()) throw ValidationError("gru_forward: empty sequence");

  GruCache cache;
  cache.vocab_size = m.vocab_size();
  cache.d_emb = m.d_emb();
  cache.d_hid = m.d_hid();
  detail::run_direction(m.forward, m.embedding, live, false, cache.forward);
  detail::run_direction(m.backward, m.embedding, live, true, cache.backward);

  const auto hid = m.d_hid();
  const double logit = m.w_out.head(hid).dot(cache.forward.back().h) +
                       m.w_out.tail(hid).dot(cache.backward.back().h) + m.b_out;
  cache.p = sigmoid(logit);
  return cache;
}

inline double gru_predict(const BiGru& m, std::span<const std::int32_t> ids) {
  return gru_forward(m, ids).p;
}

namespace detail {

// Backpropagation through time for one direction, starting from dL/dh_T.
inline void backprop_direction(const GruCell& c, const Matrix& embedding,
                               const std::vector<GruStep>& steps, Vector dh, GruCell& g,
                               Matrix& d_embedding) {
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
    const GruStep& s = *it;
    const Vector e = embedding.row(s.id).transpose();
    const Vector ones = Vector::Ones(dh.size());

    const Vector dz = dh.cwiseProduct(s.h_tilde - s.h_prev);
    const Vector dh_tilde = dh.cwiseProduct(s.z);
    Vector dh_prev = dh.cwiseProduct(ones - s.z);

    const Vector da_h = dh_tilde.cwiseProduct(ones - s.h_tilde.cwiseProduct(s.h_tilde));
    const Vector rh = s.r.cwiseProduct(s.h_prev);
    g.w_h.noalias() += da_h * e.transpose();
    g.u_h.noalias() += da_h * rh.transpose();
    g.b_h += da_h;
    const Vector d_rh = c.u_h.transpose() * da_h;
    const Vector dr = d_rh.cwiseProduct(s.h_prev);
    dh_prev += d_rh.cwiseProduct(s.r);

    const Vector da_z = dz.cwiseProduct(s.z.cwiseProduct(ones - s.z));
    g.w_z.noalias() += da_z * e.transpose();
    g.u_z.noalias() += da_z * s.h_prev.transpose();
    g.b_z += da_z;
    dh_prev.noalias() += c.u_z.transpose() * da_z;

    const Vector da_r = dr.cwiseProduct(s.r.cwiseProduct(ones - s.r));
    g.w_r.noalias() += da_r * e.transpose();
    g.u_r.noalias() += da_r * s.h_prev.transpose();
    g.b_r += da_r;
    dh_prev.noalias() += c.u_r.transpose() * da_r;

    Vector de = c.w_h.transpose() * da_h;
    de.noalias() += c.w_z.transpose() * da_z;
    de.noalias() += c.w_r.transpose() * da_r;
    d_embedding.row(s.id) += de.transpose();

    dh = dh_prev;
  }
}

}  // namespace detail

// Adds the gradient of bce_loss(p, y) w.r.t. every parameter into `grad`,
// scaled by `weight` (used for batch means).
inline void gru_accumulate_gradients(const BiGru& m, const GruCache& cache, double y,
                                     BiGru& grad, double weight = 1.0) {
  if (cache.vocab_size != m.vocab_size() || cache.d_emb != m.d_emb() ||
      cache.d_hid != m.d_hid() || cache.forward.empty() ||
      cache.forward.size() != cache.backward.size()) {
    throw ShapeError("gru_backward: cache was not produced by this model");
  }
  if (grad.vocab_size() != m.vocab_size() || grad.d_emb() != m.d_emb() ||
      grad.d_hid() != m.d_hid()) {
    throw ShapeError("gru_backward: gradient buffer shape mismatch");
  }
  const auto hid = m.d_hid();
  // The 1e-12 clamp in bce_loss is inactive at any p a finite logit produces
  // in practice, so the logit gradient is p - y.
  const double d_logit = (cache.p - y) * weight;
  const Vector& h_fwd = cache.forward.back().h;
  const Vector& h_bwd = cache.backward.back().h;
  grad.w_out.head(hid) += d_logit * h_fwd;
  grad.w_out.tail(hid) += d_logit * h_bwd;
  grad.b_out += d_logit;

  detail::backprop_direction(m.forward, m.embedding, cache.forward, d_logit * m.w_out.head(hid),
                             grad.forward, grad.embedding);
  detail::backprop_direction(m.backward, m.embedding, cache.backward,
                             d_logit * m.w_out.tail(hid), grad.backward, grad.embedding);
}

inline BiGru gru_backward(const BiGru& m, const GruCache& cache, double y) {
  auto grad = BiGru::zeros(m.vocab_size(), m.d_emb(), m.d_hid());
  gru_accumulate_gradients(m, cache, y, grad);
  return grad;
}

}  // namespace fairgate
