#pragma once

// Local objectives F_k and the data behind them.
//
// Two families:
//  * QuadraticObjective: F_k(w) = 1/2 (w - b_k)^T A_k (w - b_k) with exactly
//    controllable smoothness, heterogeneity and gradient noise.
//  * ClassifyObjective: softmax regression or a one-hidden-layer tanh network
//    on a synthetic Gaussian-mixture dataset split across clients.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fedqueue/errors.hpp"
#include "fedqueue/rng.hpp"

namespace fedqueue {

using Vec = std::vector<double>;

enum class Split { Train, Test };

struct Evaluation {
  double loss = 0.0;
  std::optional<double> accuracy;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return dot(a, a); }

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

class Objective {
 public:
  virtual ~Objective() = default;

  virtual std::size_t dimension() const = 0;
  virtual std::size_t num_clients() const = 0;

  /// Exact gradient of the full local objective F_k.
  virtual Vec gradient(std::size_t k, std::span<const double> w) const = 0;
  virtual double client_loss(std::size_t k, std::span<const double> w) const = 0;

  /// Unbiased minibatch estimate of the gradient of F_k.
  virtual Vec stochastic_gradient(std::size_t k, std::span<const double> w, std::size_t batch_size,
                                  Stream& rng) const = 0;

  virtual Evaluation evaluate(std::span<const double> w, Split split) const = 0;

  /// Relative sizes |D_k|, used by data-size client weighting.
  virtual std::vector<double> client_sizes() const = 0;

  virtual Vec initial_model() const { return Vec(dimension(), 0.0); }

  /// Gradient of F = sum_k p_k F_k.
  Vec global_gradient(std::span<const double> w, std::span<const double> weights) const {
    Vec g(dimension(), 0.0);
    for (std::size_t k = 0; k < num_clients(); ++k) axpy(weights[k], gradient(k, w), g);
    return g;
  }
};

// ---------------------------------------------------------------------------
// Quadratic family

/// Row-major dense square matrix, small p only.
struct DenseMatrix {
  std::size_t n = 0;
  std::vector<double> a;

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m{n, std::vector<double>(n * n, 0.0)};
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static DenseMatrix diagonal(std::span<const double> d) {
    DenseMatrix m{d.size(), std::vector<double>(d.size() * d.size(), 0.0)};
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  double& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }

  Vec apply(std::span<const double> x) const {
    Vec y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) y[i] = dot(std::span(a).subspan(i * n, n), x);
    return y;
  }
};

/// Solves M x = rhs by Gaussian elimination with partial pivoting.
inline Vec solve_linear(DenseMatrix m, Vec rhs) {
  const std::size_t n = m.n;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(m(r, col)) > std::abs(m(pivot, col))) pivot = r;
    if (m(pivot, col) == 0.0) throw NumericalError("singular system");
    if (pivot != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(m(col, j), m(pivot, j));
      std::swap(rhs[col], rhs[pivot]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = m(r, col) / m(col, col);
      if (f == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) m(r, j) -= f * m(col, j);
      rhs[r] -= f * rhs[col];
    }
  }
  Vec x(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = rhs[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= m(i, j) * x[j];
    x[i] = s / m(i, i);
  }
  return x;
}

struct QuadraticClient {
  DenseMatrix A;
  Vec b;
  double sigma = 0.0;  // stochastic gradient noise: E||g - grad F_k||^2 = sigma^2
};

class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(std::vector<QuadraticClient> clients, std::vector<double> weights = {})
      : clients_(std::move(clients)), weights_(std::move(weights)) {
    if (clients_.empty()) throw InputError("quadratic objective needs at least one client");
    const auto p = clients_.front().b.size();
    for (const auto& c : clients_) {
      if (c.A.n != p || c.b.size() != p) throw InputError("all clients must share dimension p");
      for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < i; ++j)
          if (c.A(i, j) != c.A(j, i)) throw InputError("A_k must be symmetric");
      if (c.sigma < 0.0) throw InputError("sigma must be >= 0");
    }
    if (weights_.empty()) weights_.assign(clients_.size(), 1.0 / static_cast<double>(clients_.size()));
  }

  std::size_t dimension() const override { return clients_.front().b.size(); }
  std::size_t num_clients() const override { return clients_.size(); }

  Vec gradient(std::size_t k, std::span<const double> w) const override {
    const auto& c = clients_.at(k);
    Vec diff(w.begin(), w.end());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= c.b[i];
    return c.A.apply(diff);
  }

  double client_loss(std::size_t k, std::span<const double> w) const override {
    const auto& c = clients_.at(k);
    Vec diff(w.begin(), w.end());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= c.b[i];
    return 0.5 * dot(diff, c.A.apply(diff));
  }

  Vec stochastic_gradient(std::size_t k, std::span<const double> w, std::size_t batch_size,
                          Stream& rng) const override {
    if (batch_size < 1) throw InputError("batch_size must be >= 1");
    if (!all_finite(w)) throw NumericalError("non-finite model");
    Vec g = gradient(k, w);
    const double sigma = clients_[k].sigma;
    if (sigma > 0.0) {
      const double scale = sigma / std::sqrt(static_cast<double>(g.size()));
      for (auto& x : g) x += scale * rng.normal();
    }
    return g;
  }

  double global_loss(std::span<const double> w) const {
    double s = 0.0;
    for (std::size_t k = 0; k < clients_.size(); ++k) s += weights_[k] * client_loss(k, w);
    return s;
  }

  Evaluation evaluate(std::span<const double> w, Split) const override { return {global_loss(w), {}}; }

  std::vector<double> client_sizes() const override { return std::vector<double>(clients_.size(), 1.0); }

  DenseMatrix global_hessian() const {
    const auto p = dimension();
    DenseMatrix h{p, std::vector<double>(p * p, 0.0)};
    for (std::size_t k = 0; k < clients_.size(); ++k)
      for (std::size_t i = 0; i < p * p; ++i) h.a[i] += weights_[k] * clients_[k].A.a[i];
    return h;
  }

  Vec minimizer() const {
    const auto p = dimension();
    Vec rhs(p, 0.0);
    for (std::size_t k = 0; k < clients_.size(); ++k) axpy(weights_[k], clients_[k].A.apply(clients_[k].b), rhs);
    return solve_linear(global_hessian(), rhs);
  }

  double optimal_value() const { return global_loss(minimizer()); }

  const std::vector<QuadraticClient>& clients() const noexcept { return clients_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

 private:
  std::vector<QuadraticClient> clients_;
  std::vector<double> weights_;
};

struct QuadraticSpec {
  std::size_t num_clients = 4;
  std::size_t dimension = 10;
  double L = 1.0;         // largest eigenvalue of the shared curvature
  double mu = 0.1;        // smallest eigenvalue
  double b_spread = 0.0;  // client optimum spread; 0 gives G = 0
  std::vector<double> sigma;  // per client, empty = all zero
  std::uint64_t seed = 0;
};

/// Shared curvature A = Q diag(linspace(mu, L)) Q^T with a random rotation Q,
/// client optima b_k = b0 + b_spread * N(0, I).
inline QuadraticObjective make_quadratic(const QuadraticSpec& spec) {
  const std::size_t p = spec.dimension;
  if (p == 0 || spec.num_clients == 0) throw InputError("quadratic needs p >= 1 and K >= 1");
  if (!(spec.L >= spec.mu && spec.mu >= 0.0)) throw InputError("need L >= mu >= 0");
  Stream rng(spec.seed, Purpose::Data, 0);

  // Gram-Schmidt on a Gaussian matrix gives a random orthogonal basis.
  std::vector<Vec> basis;
  while (basis.size() < p) {
    Vec v(p);
    for (auto& x : v) x = rng.normal();
    for (const auto& u : basis) axpy(-dot(v, u), u, v);
    const double n = std::sqrt(norm2(v));
    if (n < 1e-8) continue;
    for (auto& x : v) x /= n;
    basis.push_back(std::move(v));
  }
  DenseMatrix A{p, std::vector<double>(p * p, 0.0)};
  for (std::size_t e = 0; e < p; ++e) {
    const double lambda =
        p == 1 ? spec.L : spec.mu + (spec.L - spec.mu) * static_cast<double>(e) / static_cast<double>(p - 1);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j) A(i, j) += lambda * basis[e][i] * basis[e][j];
  }
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < i; ++j) A(i, j) = A(j, i) = 0.5 * (A(i, j) + A(j, i));

  Vec b0(p);
  for (auto& x : b0) x = rng.normal();
  std::vector<QuadraticClient> clients;
  for (std::size_t k = 0; k < spec.num_clients; ++k) {
    Vec b = b0;
    for (auto& x : b) x += spec.b_spread * rng.normal();
    const double sigma = spec.sigma.empty() ? 0.0 : spec.sigma.at(spec.sigma.size() == 1 ? 0 : k);
    clients.push_back({A, std::move(b), sigma});
  }
  return QuadraticObjective(std::move(clients));
}

// ---------------------------------------------------------------------------
// Synthetic classification

struct Dataset {
  std::size_t feature_dim = 0;
  std::size_t num_classes = 0;
  std::vector<double> features;  // row-major, one row per sample
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return std::span(features).subspan(i * feature_dim, feature_dim);
  }
};

struct MixtureSpec {
  std::size_t feature_dim = 20;
  std::size_t num_classes = 10;
  std::size_t train_samples = 6000;
  std::size_t test_samples = 2000;
  double class_sep = 1.0;  // std of class means per coordinate; noise std is 1
  std::uint64_t seed = 0;
};

/// Gaussian mixture: class means ~ N(0, sep^2 I), x = mean_y + N(0, I), labels uniform.
inline std::pair<Dataset, Dataset> make_gaussian_mixture(const MixtureSpec& spec) {
  if (spec.num_classes < 2 || spec.feature_dim < 1) throw InputError("need >= 2 classes and >= 1 feature");
  Stream rng(spec.seed, Purpose::Data, 1);
  std::vector<double> means(spec.num_classes * spec.feature_dim);
  for (auto& m : means) m = spec.class_sep * rng.normal();
  auto draw = [&](std::size_t n) {
    Dataset d{spec.feature_dim, spec.num_classes, std::vector<double>(n * spec.feature_dim), std::vector<int>(n)};
    for (std::size_t i = 0; i < n; ++i) {
      const auto y = static_cast<std::size_t>(rng.below(spec.num_classes));
      d.labels[i] = static_cast<int>(y);
      for (std::size_t j = 0; j < spec.feature_dim; ++j)
        d.features[i * spec.feature_dim + j] = means[y * spec.feature_dim + j] + rng.normal();
    }
    return d;
  };
  Dataset train = draw(spec.train_samples);
  Dataset test = draw(spec.test_samples);
  return {std::move(train), std::move(test)};
}

struct DataPartition {
  std::vector<std::vector<std::size_t>> indices;  // per client, sorted
  double dirichlet_alpha = 0.0;                   // 0 for IID splits
};

/// Class-skewed split: for each class, client proportions ~ Dirichlet(alpha 1_K).
/// Draws that leave a client empty are redrawn.
inline DataPartition dirichlet_partition(std::span<const int> labels, std::size_t K, double alpha_dir,
                                         Stream& rng) {
  if (!(alpha_dir > 0.0)) throw InputError("dirichlet alpha must be > 0");
  if (K < 1) throw InputError("need at least one client");
  if (labels.size() < K) throw InputError("fewer samples than clients");
  int num_classes = 0;
  for (int y : labels) num_classes = std::max(num_classes, y + 1);
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(i);

  constexpr int kMaxAttempts = 1000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    DataPartition part{std::vector<std::vector<std::size_t>>(K), alpha_dir};
    for (auto members : by_class) {
      std::shuffle(members.begin(), members.end(), rng);
      std::vector<double> share(K);
      double total = 0.0;
      for (auto& s : share) {
        s = std::gamma_distribution<double>(alpha_dir, 1.0)(rng);
        total += s;
      }
      if (!(total > 0.0)) {
        share.assign(K, 1.0);
        total = static_cast<double>(K);
      }
      double cum = 0.0;
      std::size_t begin = 0;
      for (std::size_t k = 0; k < K; ++k) {
        cum += share[k];
        const auto end = k + 1 == K ? members.size()
                                    : std::min(members.size(), static_cast<std::size_t>(std::llround(
                                                                   cum / total * static_cast<double>(members.size()))));
        for (std::size_t i = begin; i < std::max(begin, end); ++i) part.indices[k].push_back(members[i]);
        begin = std::max(begin, end);
      }
    }
    if (std::all_of(part.indices.begin(), part.indices.end(), [](const auto& v) { return !v.empty(); })) {
      for (auto& v : part.indices) std::sort(v.begin(), v.end());
      return part;
    }
  }
  throw InputError("could not draw a partition giving every client a sample");
}

/// Shuffled equal-size split.
inline DataPartition iid_partition(std::size_t n, std::size_t K, Stream& rng) {
  if (n < K) throw InputError("fewer samples than clients");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  DataPartition part{std::vector<std::vector<std::size_t>>(K), 0.0};
  for (std::size_t i = 0; i < n; ++i) part.indices[i % K].push_back(order[i]);
  for (auto& v : part.indices) std::sort(v.begin(), v.end());
  return part;
}

enum class ModelShape { Linear, Hidden };

/// Softmax classifier. Parameters are laid out as
/// Linear: [W (C x d), b (C)]; Hidden: [W1 (H x d), b1 (H), W2 (C x H), b2 (C)].
class ClassifierModel {
 public:
  ClassifierModel(std::size_t d, std::size_t C, ModelShape shape, std::size_t hidden)
      : d_(d), C_(C), shape_(shape), H_(shape == ModelShape::Hidden ? hidden : 0) {
    if (shape == ModelShape::Hidden && hidden == 0) throw InputError("hidden layer width must be >= 1");
  }

  std::size_t num_params() const {
    return shape_ == ModelShape::Linear ? C_ * d_ + C_ : H_ * d_ + H_ + C_ * H_ + C_;
  }
  ModelShape shape() const noexcept { return shape_; }

  /// Mean cross-entropy over the given samples; accumulates its gradient into
  /// `grad` when non-empty. Returns (loss, correct count).
  std::pair<double, std::size_t> loss_and_grad(std::span<const double> w, const Dataset& data,
                                               std::span<const std::size_t> idx, std::span<double> grad) const {
    std::vector<double> hidden(H_), logits(C_), dlogits(C_), dhidden(H_);
    double loss = 0.0;
    std::size_t correct = 0;
    const double inv_n = 1.0 / static_cast<double>(idx.size());
    const bool want_grad = !grad.empty();
    for (std::size_t i : idx) {
      const auto x = data.row(i);
      const auto y = static_cast<std::size_t>(data.labels[i]);
      std::span<const double> act = x;
      std::size_t in = d_;
      std::size_t out_w = 0;
      if (shape_ == ModelShape::Hidden) {
        for (std::size_t h = 0; h < H_; ++h)
          hidden[h] = std::tanh(dot(w.subspan(h * d_, d_), x) + w[H_ * d_ + h]);
        act = hidden;
        in = H_;
        out_w = H_ * d_ + H_;
      }
      const std::size_t out_b = out_w + C_ * in;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < C_; ++c) {
        logits[c] = dot(w.subspan(out_w + c * in, in), act) + w[out_b + c];
        mx = std::max(mx, logits[c]);
      }
      double z = 0.0;
      for (std::size_t c = 0; c < C_; ++c) z += std::exp(logits[c] - mx);
      const double log_z = mx + std::log(z);
      loss += (log_z - logits[y]) * inv_n;
      if (std::max_element(logits.begin(), logits.end()) - logits.begin() == static_cast<std::ptrdiff_t>(y))
        ++correct;
      if (!want_grad) continue;
      for (std::size_t c = 0; c < C_; ++c)
        dlogits[c] = (std::exp(logits[c] - log_z) - (c == y ? 1.0 : 0.0)) * inv_n;
      std::fill(dhidden.begin(), dhidden.end(), 0.0);
      for (std::size_t c = 0; c < C_; ++c) {
        axpy(dlogits[c], act, grad.subspan(out_w + c * in, in));
        grad[out_b + c] += dlogits[c];
        if (shape_ == ModelShape::Hidden) axpy(dlogits[c], w.subspan(out_w + c * in, in), dhidden);
      }
      if (shape_ == ModelShape::Hidden) {
        for (std::size_t h = 0; h < H_; ++h) {
          const double dpre = dhidden[h] * (1.0 - hidden[h] * hidden[h]);
          axpy(dpre, x, grad.subspan(h * d_, d_));
          grad[H_ * d_ + h] += dpre;
        }
      }
    }
    return {loss, correct};
  }

 private:
  std::size_t d_;
  std::size_t C_;
  ModelShape shape_;
  std::size_t H_;
};

class ClassifyObjective final : public Objective {
 public:
  ClassifyObjective(Dataset train, Dataset test, DataPartition partition, ModelShape shape,
                    std::size_t hidden = 32, std::uint64_t init_seed = 0)
      : train_(std::move(train)),
        test_(std::move(test)),
        partition_(std::move(partition)),
        model_(train_.feature_dim, train_.num_classes, shape, hidden),
        init_seed_(init_seed) {
    all_train_.resize(train_.size());
    std::iota(all_train_.begin(), all_train_.end(), 0);
    all_test_.resize(test_.size());
    std::iota(all_test_.begin(), all_test_.end(), 0);
    for (const auto& part : partition_.indices)
      if (part.empty()) throw InputError("every client needs at least one sample");
  }

  std::size_t dimension() const override { return model_.num_params(); }
  std::size_t num_clients() const override { return partition_.indices.size(); }

  Vec gradient(std::size_t k, std::span<const double> w) const override {
    Vec g(dimension(), 0.0);
    model_.loss_and_grad(w, train_, partition_.indices.at(k), g);
    return g;
  }

  double client_loss(std::size_t k, std::span<const double> w) const override {
    return model_.loss_and_grad(w, train_, partition_.indices.at(k), {}).first;
  }

  Vec stochastic_gradient(std::size_t k, std::span<const double> w, std::size_t batch_size,
                          Stream& rng) const override {
    if (batch_size < 1) throw InputError("batch_size must be >= 1");
    if (!all_finite(w)) throw NumericalError("non-finite model");
    const auto& part = partition_.indices.at(k);
    std::vector<std::size_t> batch(batch_size);
    for (auto& i : batch) i = part[rng.below(part.size())];
    Vec g(dimension(), 0.0);
    model_.loss_and_grad(w, train_, batch, g);
    return g;
  }

  Evaluation evaluate(std::span<const double> w, Split split) const override {
    const auto& data = split == Split::Train ? train_ : test_;
    const auto& idx = split == Split::Train ? all_train_ : all_test_;
    const auto [loss, correct] = model_.loss_and_grad(w, data, idx, {});
    return {loss, static_cast<double>(correct) / static_cast<double>(idx.size())};
  }

  std::vector<double> client_sizes() const override {
    std::vector<double> s;
    for (const auto& part : partition_.indices) s.push_back(static_cast<double>(part.size()));
    return s;
  }

  Vec initial_model() const override {
    Vec w(dimension(), 0.0);
    if (model_.shape() == ModelShape::Hidden) {
      // Small random first layer so hidden units are not symmetric.
      Stream rng(init_seed_, Purpose::ModelInit, 0);
      const double scale = 1.0 / std::sqrt(static_cast<double>(train_.feature_dim));
      for (auto& x : w) x = scale * rng.normal();
    }
    return w;
  }

  const DataPartition& partition() const noexcept { return partition_; }
  const Dataset& train() const noexcept { return train_; }
  const Dataset& test() const noexcept { return test_; }

 private:
  Dataset train_;
  Dataset test_;
  DataPartition partition_;
  ClassifierModel model_;
  std::uint64_t init_seed_;
  std::vector<std::size_t> all_train_;
  std::vector<std::size_t> all_test_;
};

// ---------------------------------------------------------------------------
// Assumption constants measured empirically

struct HeterogeneityStats {
  double G_hat = 0.0;
  double sigma_hat = 0.0;
  double L_hat = 0.0;
};

/// G_hat: max over probes and clients of ||grad F_k - grad F||.
/// sigma_hat: max over clients of the RMS stochastic-gradient deviation.
/// L_hat: max over probes of a secant power iteration on grad F, which
/// converges to the top curvature for quadratics.
inline HeterogeneityStats heterogeneity_stats(const Objective& objective, std::span<const Vec> probes,
                                              std::span<const double> weights, std::size_t batch_size,
                                              std::size_t noise_draws, Stream& rng) {
  if (probes.size() < 10) throw InputError("heterogeneity_stats needs at least 10 probe points");
  HeterogeneityStats out;
  const auto K = objective.num_clients();
  for (const auto& w : probes) {
    const Vec g = objective.global_gradient(w, weights);
    for (std::size_t k = 0; k < K; ++k) {
      Vec d = objective.gradient(k, w);
      axpy(-1.0, g, d);
      out.G_hat = std::max(out.G_hat, std::sqrt(norm2(d)));
    }
    Vec v(w.size());
    for (auto& x : v) x = rng.normal();
    double ratio = 0.0;
    for (int it = 0; it < 200; ++it) {
      const double n = std::sqrt(norm2(v));
      if (n == 0.0) break;
      const double h = 1e-4 * std::max(1.0, std::sqrt(norm2(w))) / n;
      Vec shifted = w;
      axpy(h, v, shifted);
      Vec diff = objective.global_gradient(shifted, weights);
      axpy(-1.0, g, diff);
      const double next = std::sqrt(norm2(diff)) / (h * n);
      const bool settled = std::abs(next - ratio) <= 1e-10 * std::max(1.0, next);
      ratio = next;
      v = std::move(diff);
      if (settled) break;
    }
    out.L_hat = std::max(out.L_hat, ratio);
  }
  const auto& w0 = probes.front();
  for (std::size_t k = 0; k < K; ++k) {
    const Vec exact = objective.gradient(k, w0);
    double acc = 0.0;
    for (std::size_t i = 0; i < noise_draws; ++i) {
      Vec g = objective.stochastic_gradient(k, w0, batch_size, rng);
      axpy(-1.0, exact, g);
      acc += norm2(g);
    }
    if (noise_draws > 0) out.sigma_hat = std::max(out.sigma_hat, std::sqrt(acc / static_cast<double>(noise_draws)));
  }
  return out;
}

}  // namespace fedqueue
