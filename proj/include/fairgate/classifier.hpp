#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fairgate/config.hpp"
#include "fairgate/features.hpp"
#include "fairgate/gru.hpp"
#include "fairgate/logistic.hpp"

namespace fairgate {

// Token ids for the recurrent model. A text with no tokens at all is scored
// as a single unknown token.
inline std::vector<std::int32_t> sequence_input(std::string_view raw, const Vocabulary& vocab,
                                                std::size_t max_len) {
  auto ids = encode_sequence(raw, vocab, max_len);
  if (ids.empty()) ids.push_back(Vocabulary::kUnknownId);
  return ids;
}

// A trained model of any kind together with the vocabulary it was fit on.
class TextClassifier {
 public:
  using Parameters = std::variant<LogisticRegression, BiGru>;

  TextClassifier(ModelKind kind, Vocabulary vocab, Parameters params, std::size_t max_len = 200)
      : kind_(kind), vocab_(std::move(vocab)), params_(std::move(params)), max_len_(max_len) {
    check_shapes();
  }

  ModelKind kind() const { return kind_; }
  const Vocabulary& vocab() const { return vocab_; }
  const Parameters& parameters() const { return params_; }
  Parameters& parameters() { return params_; }
  std::size_t max_len() const { return max_len_; }

  const LogisticRegression& logistic() const { return std::get<LogisticRegression>(params_); }
  const BiGru& gru() const { return std::get<BiGru>(params_); }

  // Probability that the review is unfair.
  double predict(std::string_view raw) const {
    if (kind_ == ModelKind::bigru) return gru_predict(gru(), sequence_input(raw, vocab_, max_len_));
    return lr_predict(logistic(), vectorize(raw, vocab_));
  }

  void check_shapes() const {
    if (vocab_.mode() != vocab_mode_for(kind_)) {
      throw ShapeError("vocabulary mode " + std::string(to_string(vocab_.mode())) +
                       " does not fit model kind " + std::string(to_string(kind_)));
    }
    if (kind_ == ModelKind::bigru) {
      if (!std::holds_alternative<BiGru>(params_)) throw ShapeError("bigru needs GRU parameters");
      const auto& g = gru();
      if (static_cast<std::size_t>(g.vocab_size()) != vocab_.size()) {
        throw ShapeError("embedding has " + std::to_string(g.vocab_size()) +
                         " rows but the vocabulary has " + std::to_string(vocab_.size()) +
                         " entries");
      }
      const auto e = g.d_emb(), h = g.d_hid();
      bool ok = true;
      for (const GruCell* c : {&g.forward, &g.backward}) {
        for (const Matrix* w : {&c->w_z, &c->w_r, &c->w_h}) ok &= w->rows() == h && w->cols() == e;
        for (const Matrix* u : {&c->u_z, &c->u_r, &c->u_h}) ok &= u->rows() == h && u->cols() == h;
        for (const Vector* b : {&c->b_z, &c->b_r, &c->b_h}) ok &= b->size() == h;
      }
      ok &= g.w_out.size() == 2 * h;
      if (!ok) throw ShapeError("inconsistent GRU parameter shapes");
    } else {
      if (!std::holds_alternative<LogisticRegression>(params_)) {
        throw ShapeError("logistic model kinds need logistic parameters");
      }
      if (logistic().weights.size() != vocab_.size()) {
        throw ShapeError("weight vector has " + std::to_string(logistic().weights.size()) +
                         " entries but the vocabulary has " + std::to_string(vocab_.size()));
      }
    }
  }

 private:
  ModelKind kind_;
  Vocabulary vocab_;
  Parameters params_;
  std::size_t max_len_;
};

}  // namespace fairgate
