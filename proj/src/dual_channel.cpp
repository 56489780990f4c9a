#include "xte/dual_channel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <nlohmann/json.hpp>

#include "xte/explain.hpp"

namespace xte {

using ad::Parameter;
using ad::Tape;
using ad::Tensor;
using ad::Var;
using ojson = nlohmann::ordered_json;

void ModelConfig::validate() const {
  if (in_dim < 1 || num_classes < 1 || hidden < 1 || layers < 0 || aggr_hidden < 1)
    throw Error(ErrorCode::BadParams, "model dimensions must be positive");
  if (!(attn_temperature > 0)) throw Error(ErrorCode::BadParams, "attention temperature must be > 0");
  if (!feature_names.empty() && static_cast<int>(feature_names.size()) != in_dim)
    throw Error(ErrorCode::BadParams, "feature_names must have in_dim entries");
}

void DualChannelModel::add_param(const std::string& name, size_t rows, size_t cols, double bound, Rng& rng) {
  Tensor v(rows, cols);
  for (double& x : v.data) x = bound * (2 * rng.uniform() - 1);
  index_[name] = params_.size();
  params_.emplace_back(name, std::move(v));
}

DualChannelModel::DualChannelModel(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng rng(seed);
  const size_t d = cfg_.in_dim, h = cfg_.hidden, n = cfg_.num_classes, H = cfg_.aggr_hidden;
  auto linear = [&](const std::string& p, size_t in, size_t out, bool bias = true) {
    double bound = 1.0 / std::sqrt(double(in));
    add_param(p + ".w", in, out, bound, rng);
    if (bias) add_param(p + ".b", 1, out, bound, rng);
  };
  for (std::string pass : {"g1.ext", "g1.cls"}) {
    linear(pass + ".in", d, h);
    for (int l = 0; l < cfg_.layers; ++l) {
      linear(pass + "." + std::to_string(l) + ".mlp1", h, h);
      linear(pass + "." + std::to_string(l) + ".mlp2", h, h);
    }
  }
  linear("g1.score1", 2 * h, h);
  linear("g1.score2", h, 1);
  linear("g1.head", h, n);
  add_param("g2.w", n, d, 1.0 / std::sqrt(double(d)), rng);
  add_param("g2.b", 1, n, 1.0 / std::sqrt(double(d)), rng);
  linear("aggr.l1", 2 * n, H, false);
  linear("aggr.l2", H, H);
  linear("aggr.l3", H, n);
}

Parameter& DualChannelModel::param(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error(ErrorCode::Internal, "no parameter " + name);
  return params_[it->second];
}

const Parameter& DualChannelModel::param(const std::string& name) const {
  return const_cast<DualChannelModel*>(this)->param(name);
}

void DualChannelModel::set_tau(double tau) {
  if (!(tau >= 0.3 - 1e-12 && tau <= 1.0 + 1e-12)) throw Error(ErrorCode::BadParams, "tau must lie in [0.3, 1]");
  tau_ = tau;
}

std::vector<std::vector<double>> DualChannelModel::rule_weights() const {
  const Tensor& w = param("g2.w").value;
  std::vector<std::vector<double>> out(w.rows, std::vector<double>(w.cols));
  for (size_t i = 0; i < w.rows; ++i)
    for (size_t j = 0; j < w.cols; ++j) out[i][j] = w(i, j);
  return out;
}

std::vector<double> DualChannelModel::rule_bias() const { return param("g2.b").value.data; }

namespace {

// Parameters are bound as tape leaves on use; the tape writes gradients back
// through the pointer, so the const_cast never mutates during forward.
Var P(Tape& t, const DualChannelModel& m, const std::string& name) {
  return t.param(const_cast<Parameter&>(m.param(name)));
}

Var linear(Tape& t, const DualChannelModel& m, const std::string& p, Var x, bool bias = true) {
  Var y = ad::matmul(x, P(t, m, p + ".w"));
  return bias ? ad::add(y, P(t, m, p + ".b")) : y;
}

struct Topology {
  std::vector<int> src, dst, dir_edge;  // directed copies of every edge
  std::vector<int> us, vs;
  Tensor degree, isolated;  // n x 1
};

Topology topology(const Graph& g) {
  Topology tp;
  const int n = g.num_nodes();
  tp.degree = Tensor(n, 1);
  tp.isolated = Tensor(n, 1);
  for (int e = 0; e < g.num_edges(); ++e) {
    auto [u, v] = g.edges()[e];
    tp.us.push_back(u);
    tp.vs.push_back(v);
    tp.src.insert(tp.src.end(), {u, v});
    tp.dst.insert(tp.dst.end(), {v, u});
    tp.dir_edge.insert(tp.dir_edge.end(), {e, e});
    tp.degree.data[u] += 1;
    tp.degree.data[v] += 1;
  }
  for (int v = 0; v < n; ++v)
    if (tp.degree.data[v] == 0) {
      tp.degree.data[v] = 1;
      tp.isolated.data[v] = 1;
    }
  return tp;
}

Tensor features_of(const DualChannelModel& m, const Graph& g) {
  if (g.num_nodes() == 0) throw Error(ErrorCode::EmptyGraph, "model input has no nodes");
  if (g.feature_dim() != m.config().in_dim)
    throw Error(ErrorCode::FeatureDimMismatch, "graph has feature dim " + std::to_string(g.feature_dim()) +
                                                   ", model expects " + std::to_string(m.config().in_dim));
  return Tensor(g.num_nodes(), g.feature_dim(), g.features());
}

// Sum-aggregation GIN stack. `dir_weights` (2E x 1) scales each message.
Var gin_pass(Tape& t, const DualChannelModel& m, const std::string& prefix, Var x, const Topology& tp, size_t n,
             const Var* dir_weights) {
  Var h = linear(t, m, prefix + ".in", x);
  for (int l = 0; l < m.config().layers; ++l) {
    Var msg = ad::gather_rows(h, tp.src);
    if (dir_weights) msg = ad::scale_rows(msg, *dir_weights);
    Var z = ad::add(h, ad::segment_sum(msg, tp.dst, n));
    std::string p = prefix + "." + std::to_string(l);
    h = ad::relu(linear(t, m, p + ".mlp2", ad::relu(linear(t, m, p + ".mlp1", z))));
  }
  return h;
}

Var score_mlp(Tape& t, const DualChannelModel& m, Var pair) {
  return linear(t, m, "g1.score2", ad::relu(linear(t, m, "g1.score1", pair)));
}

}  // namespace

G1Vars g1_forward(Tape& t, const DualChannelModel& m, const Graph& g, const std::vector<double>* forced_scores) {
  Tensor X = features_of(m, g);
  const size_t n = g.num_nodes(), E = g.num_edges();
  Topology tp = topology(g);
  Var x = t.constant(X);
  G1Vars out;
  Var weights;
  if (E == 0) {
    weights = t.constant(Tensor(n, 1, 1.0));
  } else {
    if (forced_scores) {
      if (forced_scores->size() != E) throw Error(ErrorCode::ShapeMismatch, "forced score count != edge count");
      out.edge_scores = t.constant(Tensor(E, 1, *forced_scores));
    } else {
      Var h = gin_pass(t, m, "g1.ext", x, tp, n, nullptr);
      Var hu = ad::gather_rows(h, tp.us), hv = ad::gather_rows(h, tp.vs);
      out.edge_logits =
          ad::scale(ad::add(score_mlp(t, m, ad::concat(hu, hv)), score_mlp(t, m, ad::concat(hv, hu))), 0.5);
      out.edge_scores = ad::sigmoid(out.edge_logits);
    }
    Var dir = ad::gather_rows(out.edge_scores, tp.dir_edge);
    Var sums = ad::segment_sum(dir, tp.dst, n);
    weights = ad::div(ad::add(sums, t.constant(tp.isolated)), t.constant(tp.degree));
    Var emb = gin_pass(t, m, "g1.cls", x, tp, n, &dir);
    Var readout = ad::sum_rows(ad::scale_rows(emb, weights));
    out.logits = linear(t, m, "g1.head", readout);
    return out;
  }
  Var emb = gin_pass(t, m, "g1.cls", x, tp, n, nullptr);
  out.logits = linear(t, m, "g1.head", ad::sum_rows(ad::scale_rows(emb, weights)));
  return out;
}

Var g2_forward(Tape& t, const DualChannelModel& m, const Graph& g) {
  Var s = ad::sum_rows(t.constant(features_of(m, g)));
  return ad::add(ad::matmul(s, ad::transpose(P(t, m, "g2.w"))), P(t, m, "g2.b"));
}

Var attention(Tape& t, const DualChannelModel& m) {
  // Input importance is the mean absolute first-layer weight of that input, so
  // a down-weighted input cannot be amplified back by the layer itself.
  Var w1 = P(t, m, "aggr.l1.w");
  Var norms = ad::matmul(ad::abs(w1), t.constant(Tensor(w1.cols(), 1, 1.0 / double(w1.cols()))));
  return ad::softmax_rows(ad::scale(ad::transpose(norms), 1.0 / m.config().attn_temperature));
}

Var blen_from_logits(Tape& t, const DualChannelModel& m, Var u1, Var u2, double tau, Ablation ab) {
  const size_t n = m.config().num_classes;
  Var z1 = ab.drop_topo ? t.constant(Tensor(1, n)) : ad::sigmoid(ad::scale(u1, 1.0 / tau));
  Var z2 = ab.drop_rule ? t.constant(Tensor(1, n)) : ad::sigmoid(ad::scale(u2, 1.0 / tau));
  Var x = ad::mul(ad::concat(z1, z2), attention(t, m));
  Var h1 = ad::leaky_relu(linear(t, m, "aggr.l1", x, false));
  Var h2 = ad::leaky_relu(linear(t, m, "aggr.l2", h1));
  return linear(t, m, "aggr.l3", h2);
}

Var blen_aggregate(Tape& t, const DualChannelModel& m, Var a1, Var a2, double tau, Ablation ab) {
  auto logit = [](Var z) { return ad::sub(ad::log(z), ad::log(ad::add_scalar(ad::scale(z, -1.0), 1.0))); };
  return blen_from_logits(t, m, logit(a1), logit(a2), tau, ab);
}

double temperature_squash(double z, double tau) {
  double u = std::log(z) - std::log1p(-z);
  return 1.0 / (1.0 + std::exp(-u / tau));
}

namespace {

std::vector<double> sigmoid_of(const Tensor& u) {
  std::vector<double> p;
  for (double v : u.data) p.push_back(1.0 / (1.0 + std::exp(-v)));
  return p;
}

}  // namespace

G1Result g1_predict(const DualChannelModel& m, const Graph& g, const std::vector<double>* forced_scores) {
  Tape t;
  G1Vars v = g1_forward(t, m, g, forced_scores);
  G1Result r;
  r.probs = sigmoid_of(v.logits.value());
  if (v.edge_scores.id >= 0) r.edge_scores = v.edge_scores.value().data;
  return r;
}

std::vector<double> g2_predict(const DualChannelModel& m, const Graph& g) {
  Tape t;
  return sigmoid_of(g2_forward(t, m, g).value());
}

std::vector<double> predict_logits(const DualChannelModel& m, const Graph& g, Ablation ab) {
  Tape t;
  G1Vars v = g1_forward(t, m, g);
  return blen_from_logits(t, m, v.logits, g2_forward(t, m, g), m.tau(), ab).value().data;
}

int argmax_lowest(const std::vector<double>& v) {
  int best = 0;
  for (size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = static_cast<int>(i);
  return best;
}

int predict(const DualChannelModel& m, const Graph& g, Ablation ab) { return argmax_lowest(predict_logits(m, g, ab)); }

double accuracy(const DualChannelModel& m, const DatasetSplit& split, Ablation ab, int threads) {
  if (split.records.empty()) return 0.0;
  std::vector<char> ok(split.records.size());
  parallel_for(split.records.size(), threads,
               [&](size_t i) { ok[i] = predict(m, split.records[i].graph, ab) == split.records[i].label; });
  return double(std::count(ok.begin(), ok.end(), 1)) / double(ok.size());
}

namespace {

double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }

void check_scores(const std::vector<double>& p) {
  for (double v : p)
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::BadParams, "edge scores must lie in [0,1]");
}

}  // namespace

double loss_gisst(double ce, const std::vector<double>& p, double lambda1, double lambda2) {
  check_scores(p);
  if (p.empty()) return ce;
  double s = 0, ent = 0;
  for (double v : p) {
    s += v;
    ent += xlogy(v, v) + xlogy(1 - v, 1 - v);
  }
  return ce + lambda1 * s / double(p.size()) + lambda2 * ent / double(p.size());
}

double loss_ib(double ce, const std::vector<double>& p, double lambda1, double r) {
  check_scores(p);
  if (!(r > 0 && r < 1)) throw Error(ErrorCode::BadParams, "r must lie in (0,1)");
  double kl = 0;
  for (double v : p) kl += xlogy(v, v / r) + xlogy(1 - v, (1 - v) / (1 - r));
  return ce + lambda1 * kl;
}

namespace {

// log p and log(1-p) for p = sigmoid(s), computed from the logits.
std::pair<Var, Var> log_probs(Var s) {
  return {ad::scale(ad::softplus(ad::scale(s, -1.0)), -1.0), ad::scale(ad::softplus(s), -1.0)};
}

}  // namespace

Var gisst_regularizer(Var s, double lambda1, double lambda2) {
  if (s.id < 0 || s.rows() == 0) return Var{};
  Var p = ad::sigmoid(s);
  auto [lp, lq] = log_probs(s);
  Var q = ad::add_scalar(ad::scale(p, -1.0), 1.0);
  Var ent = ad::add(ad::mul(p, lp), ad::mul(q, lq));
  return ad::add(ad::scale(ad::mean(p), lambda1), ad::scale(ad::mean(ent), lambda2));
}

Var ib_regularizer(Var s, double lambda1, double r) {
  if (!(r > 0 && r < 1)) throw Error(ErrorCode::BadParams, "r must lie in (0,1)");
  if (s.id < 0 || s.rows() == 0) return Var{};
  Var p = ad::sigmoid(s);
  auto [lp, lq] = log_probs(s);
  Var q = ad::add_scalar(ad::scale(p, -1.0), 1.0);
  Var kl = ad::add(ad::mul(p, ad::add_scalar(lp, -std::log(r))), ad::mul(q, ad::add_scalar(lq, -std::log1p(-r))));
  return ad::scale(ad::sum(kl), lambda1);
}

Var bce_with_logits(Var u, int label) {
  Tensor y(1, u.cols());
  if (label < 0 || size_t(label) >= u.cols()) throw Error(ErrorCode::BadParams, "label outside class range");
  y.data[label] = 1.0;
  return ad::mean(ad::sub(ad::softplus(u), ad::mul(u, u.tape->constant(y))));
}

const char* loss_variant_name(LossVariant v) { return v == LossVariant::IB ? "ib" : "gisst"; }

LossVariant parse_loss_variant(const std::string& s) {
  if (s == "ib") return LossVariant::IB;
  if (s == "gisst") return LossVariant::GISST;
  throw Error(ErrorCode::BadParams, "unknown loss '" + s + "' (expected gisst or ib)");
}

void TrainConfig::validate() const {
  if (!(lambda1 >= 0 && lambda2 >= 0 && lambda_ent >= 0)) throw Error(ErrorCode::BadParams, "lambdas must be >= 0");
  if (!(r > 0 && r < 1)) throw Error(ErrorCode::BadParams, "r must lie in (0,1)");
  if (r_final && !(*r_final > 0 && *r_final < 1)) throw Error(ErrorCode::BadParams, "final r must lie in (0,1)");
  if (epochs < 0 || warmup_epochs < 0) throw Error(ErrorCode::BadParams, "epoch counts must be >= 0");
  if (warmup_epochs > epochs) throw Error(ErrorCode::BadParams, "warmup epochs exceed total epochs");
  if (!(lr >= 0) || !(weight_decay >= 0)) throw Error(ErrorCode::BadParams, "lr and weight decay must be >= 0");
  if (!(tau_start >= 0.3 && tau_start <= 1.0 && tau_end >= 0.3 && tau_end <= 1.0))
    throw Error(ErrorCode::BadParams, "tau schedule must stay in [0.3, 1]");
  if (batch_size < 0) throw Error(ErrorCode::BadParams, "batch size must be >= 0");
}

TrainConfig TrainConfig::for_task(Task t) {
  TrainConfig c;
  switch (t) {
    case Task::RedBlueNodes:
      c.lr = 0.01;
      c.warmup_epochs = 20;
      c.epochs = 120;
      c.weight_decay = 0.03;
      c.lambda_ent = 0.1;
      break;
    case Task::TopoFeature:
      // g1 needs a long warmup to pick up cycles; a lighter decay keeps g2's
      // threshold from collapsing once the aggregator saturates.
      c.lr = 0.003;
      c.warmup_epochs = 100;
      c.epochs = 200;
      c.weight_decay = 0.001;
      c.lambda_ent = 0.01;
      break;
    case Task::MotifTask:
      c.lr = 0.003;
      c.warmup_epochs = 50;
      c.epochs = 150;
      c.weight_decay = 0.01;
      c.lambda_ent = 0.1;
      break;
  }
  return c;
}

ModelConfig model_config_for(const DatasetSplit& split) {
  ModelConfig c;
  int classes = 2;
  if (split.spec) classes = split.spec->task == Task::MotifTask ? 3 : 2;
  for (auto& r : split.records) classes = std::max(classes, r.label + 1);
  c.num_classes = classes;
  if (!split.records.empty()) {
    const Graph& g = split.records.front().graph;
    c.in_dim = g.feature_dim();
    c.feature_names = g.feature_names();
    if (static_cast<int>(c.feature_names.size()) != c.in_dim) {
      c.feature_names.clear();
      for (int k = 0; k < c.in_dim; ++k) c.feature_names.push_back("f" + std::to_string(k));
    }
  }
  return c;
}

namespace {

struct Adam {
  double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  long step = 0;

  void update(std::vector<Parameter>& ps, double lr) {
    ++step;
    const double c1 = 1 - std::pow(b1, double(step)), c2 = 1 - std::pow(b2, double(step));
    for (auto& p : ps)
      for (size_t i = 0; i < p.value.size(); ++i) {
        double g = p.grad.data[i];
        p.adam_m.data[i] = b1 * p.adam_m.data[i] + (1 - b1) * g;
        p.adam_v.data[i] = b2 * p.adam_v.data[i] + (1 - b2) * g * g;
        p.value.data[i] -= lr * (p.adam_m.data[i] / c1) / (std::sqrt(p.adam_v.data[i] / c2) + eps);
      }
  }
};

Var add_opt(Var a, Var b) { return b.id < 0 ? a : ad::add(a, b); }

}  // namespace

std::vector<EpochStats> train(DualChannelModel& m, const DatasetSplit& split, const TrainConfig& cfg) {
  cfg.validate();
  if (split.records.empty()) throw Error(ErrorCode::BadParams, "training split is empty");
  for (auto& r : split.records)
    if (r.label < 0 || r.label >= m.config().num_classes)
      throw Error(ErrorCode::BadParams, "record label outside the model's class range");
  const size_t N = split.records.size();
  const size_t B = cfg.batch_size == 0 ? N : std::min<size_t>(cfg.batch_size, N);
  const int main_epochs = std::max(0, cfg.epochs - cfg.warmup_epochs);
  Adam adam;
  std::vector<EpochStats> history;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const bool warm = epoch < cfg.warmup_epochs;
    double tau = cfg.tau_start, r = cfg.r;
    if (!warm) {
      int k = epoch - cfg.warmup_epochs;
      double frac = main_epochs <= 1 ? 1.0 : double(k) / double(main_epochs - 1);
      tau = cfg.tau_start + (cfg.tau_end - cfg.tau_start) * frac;
      if (cfg.r_final) r = cfg.r + (*cfg.r_final - cfg.r) * frac;
    }
    m.set_tau(std::clamp(tau, 0.3, 1.0));
    std::vector<size_t> order(N);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);

    double loss_sum = 0;
    size_t correct = 0;
    for (size_t start = 0; start < N; start += B) {
      const size_t end = std::min(N, start + B);
      const double wscale = 1.0 / double(end - start);
      for (auto& p : m.parameters()) p.zero_grad();
      try {
        for (size_t i = start; i < end; ++i) {
          const Record& rec = split.records[order[i]];
          Tape t;
          G1Vars g1 = g1_forward(t, m, rec.graph);
          Var u2 = g2_forward(t, m, rec.graph);
          Var reg = cfg.loss == LossVariant::IB ? ib_regularizer(g1.edge_logits, cfg.lambda1, r)
                                                : gisst_regularizer(g1.edge_logits, cfg.lambda1, cfg.lambda2);
          Var logits = blen_from_logits(t, m, g1.logits, u2, m.tau());
          Var loss = warm ? ad::add(bce_with_logits(g1.logits, rec.label), bce_with_logits(u2, rec.label))
                          : bce_with_logits(logits, rec.label);
          loss = add_opt(loss, reg);
          loss_sum += loss.item();
          correct += argmax_lowest(logits.value().data) == rec.label;
          t.backward(ad::scale(loss, wscale));
        }
        if (!warm && cfg.lambda_ent > 0) {
          Tape t;
          Var a = attention(t, m);
          Var ent = ad::scale(ad::sum(ad::mul(a, ad::log(a))), -cfg.lambda_ent);
          loss_sum += ent.item() * double(end - start);
          t.backward(ent);
        }
      } catch (const Error& e) {
        if (e.code() == ErrorCode::NonFinite || e.code() == ErrorCode::DomainError)
          throw Error(ErrorCode::NonFinite, "training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
        throw;
      }
      for (auto& p : m.parameters())
        for (double g : p.grad.data)
          if (!std::isfinite(g))
            throw Error(ErrorCode::NonFinite, "non-finite gradient at epoch " + std::to_string(epoch));
      // L2 on the linear channel folded into its gradient before the Adam step.
      for (const char* name : {"g2.w", "g2.b"}) {
        if (!cfg.decay_bias && std::string(name) == "g2.b") continue;
        Parameter& p = m.param(name);
        for (size_t k = 0; k < p.value.size(); ++k) p.grad.data[k] += cfg.weight_decay * p.value.data[k];
      }
      adam.update(m.parameters(), cfg.lr);
    }
    if (!std::isfinite(loss_sum))
      throw Error(ErrorCode::NonFinite, "non-finite loss at epoch " + std::to_string(epoch));
    history.push_back({epoch, warm, m.tau(), loss_sum / double(N), double(correct) / double(N)});
    if (cfg.on_epoch) cfg.on_epoch(history.back(), m);
  }
  return history;
}

ChannelRelevance channel_relevance(const DualChannelModel& m) {
  Tape t;
  ChannelRelevance c;
  c.attention = attention(t, m).value().data;
  const size_t n = m.config().num_classes;
  for (size_t i = 0; i < c.attention.size(); ++i) (i < n ? c.topo : c.rule) += c.attention[i];
  double total = c.topo + c.rule;
  c.topo /= total;
  c.rule /= total;
  bool topo = c.topo >= 0.1, rule = c.rule >= 0.1;
  c.selection = topo && rule ? "Both" : topo ? "Topo" : "Rule";
  return c;
}

double ablate_channel(const DualChannelModel& m, const DatasetSplit& split, Channel which, int threads) {
  Ablation ab;
  (which == Channel::Topo ? ab.drop_topo : ab.drop_rule) = true;
  return accuracy(m, split, ab, threads);
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  return s == "-0.00" ? "0.00" : s;
}

std::string term(double coef, const std::string& name) {
  if (std::abs(coef - 1.0) < 0.005) return name;
  return fmt(coef) + "·" + name;
}

}  // namespace

std::string render_rule(const std::vector<std::pair<std::string, double>>& kept, double bias) {
  double M = 0;
  for (auto& [_, w] : kept) M = std::max(M, std::abs(w));
  if (M == 0) throw Error(ErrorCode::AllWeightsDropped, "no weight survives the drop threshold");
  std::vector<std::string> lhs, rhs;
  for (auto& [name, w] : kept) (w > 0 ? lhs : rhs).push_back(term(std::abs(w) / M, "x_" + name));
  double k = -bias / M;
  auto join = [](const std::vector<std::string>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? " + " : "") + v[i];
    return s;
  };
  std::string right = join(rhs);
  if (std::abs(k) >= 0.005 || right.empty()) {
    if (right.empty())
      right = fmt(k);
    else
      right += (k < 0 ? " - " : " + ") + fmt(std::abs(k));
  }
  return (lhs.empty() ? std::string("0") : join(lhs)) + " ≥ " + right;
}

RuleReport extract_rule(const DualChannelModel& m, double drop_ratio, const DatasetSplit* heldout) {
  if (!(drop_ratio >= 0 && drop_ratio < 1)) throw Error(ErrorCode::BadParams, "drop ratio must lie in [0,1)");
  RuleReport rep;
  rep.drop_ratio = drop_ratio;
  rep.relevance = channel_relevance(m);
  auto W = m.rule_weights();
  auto b = m.rule_bias();
  const auto& names = m.config().feature_names;
  for (size_t c = 0; c < W.size(); ++c) {
    double mx = 0;
    for (double w : W[c]) mx = std::max(mx, std::abs(w));
    if (mx == 0) throw Error(ErrorCode::AllWeightsDropped, "class " + std::to_string(c) + " has all-zero weights");
    RuleRow row;
    row.class_id = static_cast<int>(c);
    row.bias = b[c];
    std::vector<bool> keep(W[c].size());
    for (size_t j = 0; j < W[c].size(); ++j)
      if (std::abs(W[c][j]) >= drop_ratio * mx) {
        keep[j] = true;
        row.kept.emplace_back(j < names.size() ? names[j] : "f" + std::to_string(j), W[c][j]);
      }
    row.rendered = render_rule(row.kept, row.bias);
    if (heldout && !heldout->records.empty()) {
      size_t agree = 0;
      for (auto& rec : heldout->records) {
        const Graph& g = rec.graph;
        double full = b[c], trunc = b[c];
        for (int k = 0; k < g.feature_dim(); ++k) {
          double s = 0;
          for (int v = 0; v < g.num_nodes(); ++v) s += g.feature(v, k);
          full += W[c][k] * s;
          if (keep[k]) trunc += W[c][k] * s;
        }
        agree += (full >= 0) == (trunc >= 0);
      }
      row.agreement = double(agree) / double(heldout->records.size());
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

LossIdentityReport verify_loss_identities(int trials, std::uint64_t seed, double tolerance) {
  LossIdentityReport rep;
  rep.trials = trials;
  rep.tolerance = tolerance;
  const double eps = 1e-12;
  for (int t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    const int E = rng.range(1, 30);
    const double ce = 3 * rng.uniform(), l1 = 2 * rng.uniform(), l2 = 2 * rng.uniform();
    const double r = 0.05 + 0.9 * rng.uniform();
    std::vector<bool> in_q(E);
    int q = 0;
    for (int e = 0; e < E; ++e) q += (in_q[e] = rng.coin());
    std::vector<double> pg(E), pi(E);
    for (int e = 0; e < E; ++e) {
      pg[e] = in_q[e] ? 1 - eps : eps;
      pi[e] = in_q[e] ? 1.0 : r;
    }
    rep.max_err_gisst =
        std::max(rep.max_err_gisst, std::abs(loss_gisst(ce, pg, l1, l2) - (ce + l1 * q / double(E))));
    rep.max_err_ib = std::max(rep.max_err_ib, std::abs(loss_ib(ce, pi, l1, r) - (ce + l1 * q * std::log(1 / r))));
  }
  return rep;
}

std::string loss_identity_report_to_json(const LossIdentityReport& r) {
  ojson j;
  j["trials"] = r.trials;
  j["tolerance"] = r.tolerance;
  j["max_err_gisst"] = r.max_err_gisst;
  j["max_err_ib"] = r.max_err_ib;
  j["pass"] = r.pass();
  return j.dump(2) + "\n";
}

std::string model_to_json(const DualChannelModel& m) {
  const ModelConfig& c = m.config();
  ojson j;
  j["format"] = "xte-dual-channel";
  j["version"] = 1;
  j["config"] = {{"in_dim", c.in_dim},
                 {"num_classes", c.num_classes},
                 {"hidden", c.hidden},
                 {"layers", c.layers},
                 {"aggr_hidden", c.aggr_hidden},
                 {"attn_temperature", c.attn_temperature},
                 {"feature_names", c.feature_names}};
  j["tau"] = m.tau();
  ojson ps = ojson::array();
  for (auto& p : m.parameters())
    ps.push_back({{"name", p.name}, {"shape", {p.value.rows, p.value.cols}}, {"data", p.value.data}});
  j["params"] = std::move(ps);
  return j.dump(1) + "\n";
}

DualChannelModel model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format") != "xte-dual-channel") throw Error(ErrorCode::SchemaError, "not a dual-channel checkpoint");
    if (j.at("version") != 1) throw Error(ErrorCode::SchemaError, "unsupported checkpoint version");
    const auto& jc = j.at("config");
    ModelConfig c;
    c.in_dim = jc.at("in_dim");
    c.num_classes = jc.at("num_classes");
    c.hidden = jc.at("hidden");
    c.layers = jc.at("layers");
    c.aggr_hidden = jc.at("aggr_hidden");
    c.attn_temperature = jc.at("attn_temperature");
    c.feature_names = jc.at("feature_names").get<std::vector<std::string>>();
    DualChannelModel m(c, 0);
    m.set_tau(j.at("tau"));
    size_t loaded = 0;
    for (const auto& jp : j.at("params")) {
      std::string name = jp.at("name");
      if (!m.has_param(name)) throw Error(ErrorCode::SchemaError, "unknown parameter " + name);
      Parameter& p = m.param(name);
      auto shape = jp.at("shape").get<std::vector<size_t>>();
      auto data = jp.at("data").get<std::vector<double>>();
      if (shape.size() != 2 || shape[0] != p.value.rows || shape[1] != p.value.cols || data.size() != p.value.size())
        throw Error(ErrorCode::SchemaError, "shape mismatch for parameter " + name);
      p.value.data = std::move(data);
      ++loaded;
    }
    if (loaded != m.parameters().size()) throw Error(ErrorCode::SchemaError, "checkpoint is missing parameters");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("malformed checkpoint: ") + e.what());
  }
}

std::string rule_report_to_json(const RuleReport& r) {
  ojson j;
  j["drop_ratio"] = r.drop_ratio;
  ojson rows = ojson::array();
  for (auto& row : r.rows) {
    ojson jr;
    jr["class"] = row.class_id;
    ojson kept = ojson::array();
    for (auto& [name, w] : row.kept) kept.push_back({{"feature", name}, {"weight", w}});
    jr["kept"] = std::move(kept);
    jr["bias"] = row.bias;
    jr["rule"] = row.rendered;
    jr["agreement"] = row.agreement ? ojson(*row.agreement) : ojson(nullptr);
    rows.push_back(std::move(jr));
  }
  j["rows"] = std::move(rows);
  j["relevance"] = {{"attention", r.relevance.attention},
                    {"topo", r.relevance.topo},
                    {"rule", r.relevance.rule},
                    {"selection", r.relevance.selection}};
  return j.dump(2) + "\n";
}

std::string history_to_json(const std::vector<EpochStats>& h) {
  ojson a = ojson::array();
  for (auto& e : h)
    a.push_back({{"epoch", e.epoch},
                 {"phase", e.warmup ? "warmup" : "main"},
                 {"tau", e.tau},
                 {"loss", e.loss},
                 {"train_acc", e.train_acc}});
  return a.dump(1) + "\n";
}

}  // namespace xte
