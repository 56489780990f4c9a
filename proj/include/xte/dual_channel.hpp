#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xte/autodiff.hpp"
#include "xte/datasets.hpp"
#include "xte/graph.hpp"
#include "xte/rng.hpp"

namespace xte {

struct ModelConfig {
  int in_dim = 3;
  int num_classes = 2;  // n1 = n2
  int hidden = 16;
  int layers = 3;
  int aggr_hidden = 20;
  double attn_temperature = 0.6;
  std::vector<std::string> feature_names = {"red", "blue", "uncolored"};

  void validate() const;
};

// g1: GIN extractor -> symmetric edge scorer -> GIN classifier with gated
// messages and score-weighted readout. g2: sigmoid(W sum_u x_u + b).
// aggr: temperature re-squash, softmax attention, 3-layer MLP.
class DualChannelModel {
 public:
  explicit DualChannelModel(ModelConfig cfg = {}, std::uint64_t seed = 0);

  const ModelConfig& config() const { return cfg_; }
  std::vector<ad::Parameter>& parameters() { return params_; }
  const std::vector<ad::Parameter>& parameters() const { return params_; }
  ad::Parameter& param(const std::string& name);
  const ad::Parameter& param(const std::string& name) const;
  bool has_param(const std::string& name) const { return index_.count(name) > 0; }

  double tau() const { return tau_; }
  void set_tau(double tau);

  // g2 weights as rows per class.
  std::vector<std::vector<double>> rule_weights() const;
  std::vector<double> rule_bias() const;

 private:
  void add_param(const std::string& name, size_t rows, size_t cols, double bound, Rng& rng);

  ModelConfig cfg_;
  std::vector<ad::Parameter> params_;
  std::map<std::string, size_t> index_;
  double tau_ = 1.0;
};

enum class Channel { Topo, Rule };
struct Ablation {
  bool drop_topo = false;
  bool drop_rule = false;
};

struct G1Vars {
  ad::Var logits;       // 1 x n1
  ad::Var edge_logits;  // E x 1, unset (id -1) on edgeless graphs
  ad::Var edge_scores;  // E x 1
};

// `forced_scores` replaces the learned p_uv (one value per edge).
G1Vars g1_forward(ad::Tape& t, const DualChannelModel& m, const Graph& g,
                  const std::vector<double>* forced_scores = nullptr);
ad::Var g2_forward(ad::Tape& t, const DualChannelModel& m, const Graph& g);  // logits, 1 x n2
ad::Var attention(ad::Tape& t, const DualChannelModel& m);                     // 1 x (n1+n2)
// Aggregator on channel logits; equivalent to re-squashing sigmoid(u) at temperature tau.
ad::Var blen_from_logits(ad::Tape& t, const DualChannelModel& m, ad::Var u1, ad::Var u2, double tau,
                         Ablation ab = {});
// Aggregator on channel probabilities in (0,1); logits are recovered as log(z) - log(1-z).
ad::Var blen_aggregate(ad::Tape& t, const DualChannelModel& m, ad::Var a1, ad::Var a2, double tau,
                       Ablation ab = {});
double temperature_squash(double z, double tau);

struct G1Result {
  std::vector<double> probs;
  std::vector<double> edge_scores;
};
G1Result g1_predict(const DualChannelModel& m, const Graph& g, const std::vector<double>* forced_scores = nullptr);
std::vector<double> g2_predict(const DualChannelModel& m, const Graph& g);
std::vector<double> predict_logits(const DualChannelModel& m, const Graph& g, Ablation ab = {});
int predict(const DualChannelModel& m, const Graph& g, Ablation ab = {});
int argmax_lowest(const std::vector<double>& v);
double accuracy(const DualChannelModel& m, const DatasetSplit& split, Ablation ab = {}, int threads = 1);

// Regularized losses on plain score vectors (0 log 0 = 0).
double loss_gisst(double ce, const std::vector<double>& scores, double lambda1, double lambda2);
double loss_ib(double ce, const std::vector<double>& scores, double lambda1, double r);
// Differentiable regularizers from edge logits.
ad::Var gisst_regularizer(ad::Var edge_logits, double lambda1, double lambda2);
ad::Var ib_regularizer(ad::Var edge_logits, double lambda1, double r);
// Mean over classes of binary CE with logits against the one-hot label.
ad::Var bce_with_logits(ad::Var logits, int label);

enum class LossVariant { GISST, IB };
const char* loss_variant_name(LossVariant v);
LossVariant parse_loss_variant(const std::string& s);

struct TrainConfig {
  LossVariant loss = LossVariant::IB;
  double lambda1 = 0.01;
  double lambda2 = 0.01;
  double r = 0.5;
  std::optional<double> r_final;  // linear decay of r over the main phase when set
  int epochs = 60;                // including warmup
  int warmup_epochs = 20;
  double lr = 0.01;
  double weight_decay = 1e-2;  // L2 on g2's W, added to the gradient
  bool decay_bias = true;      // also apply it to g2's bias
  double lambda_ent = 0.1;
  double tau_start = 1.0;
  double tau_end = 0.3;
  int batch_size = 32;  // 0 = full batch
  std::uint64_t seed = 0;
  std::function<void(const struct EpochStats&, const DualChannelModel&)> on_epoch;  // optional progress hook

  void validate() const;
  // Desk-scale settings per synthetic task (the paper tunes per dataset too).
  static TrainConfig for_task(Task t);
};

struct EpochStats {
  int epoch = 0;
  bool warmup = false;
  double tau = 1.0;
  double loss = 0.0;
  double train_acc = 0.0;
};

std::vector<EpochStats> train(DualChannelModel& m, const DatasetSplit& split, const TrainConfig& cfg);
ModelConfig model_config_for(const DatasetSplit& split);

struct ChannelRelevance {
  std::vector<double> attention;  // per input
  double topo = 0.0, rule = 0.0;  // grouped, sum to 1
  std::string selection;          // "Topo", "Rule" or "Both"
};
ChannelRelevance channel_relevance(const DualChannelModel& m);
double ablate_channel(const DualChannelModel& m, const DatasetSplit& split, Channel which, int threads = 1);

struct RuleRow {
  int class_id = 0;
  std::vector<std::pair<std::string, double>> kept;  // raw weights
  double bias = 0.0;
  std::string rendered;
  std::optional<double> agreement;  // truncated vs full g2 decisions on held-out data
};

struct RuleReport {
  double drop_ratio = 1e-2;
  std::vector<RuleRow> rows;
  ChannelRelevance relevance;
};

RuleReport extract_rule(const DualChannelModel& m, double drop_ratio = 1e-2, const DatasetSplit* heldout = nullptr);
std::string render_rule(const std::vector<std::pair<std::string, double>>& kept, double bias);

// Loss reductions on saturated scores: GISST with p in {eps, 1-eps} equals
// ce + l1*|q|/|E|; IB with p in {r, 1} equals ce + l1*|q|*log(1/r).
struct LossIdentityReport {
  int trials = 0;
  double tolerance = 1e-6;
  double max_err_gisst = 0.0;
  double max_err_ib = 0.0;
  bool pass() const { return max_err_gisst <= tolerance && max_err_ib <= tolerance; }
};
LossIdentityReport verify_loss_identities(int trials = 20, std::uint64_t seed = 0, double tolerance = 1e-6);
std::string loss_identity_report_to_json(const LossIdentityReport& r);

std::string model_to_json(const DualChannelModel& m);
DualChannelModel model_from_json(const std::string& text);
std::string rule_report_to_json(const RuleReport& r);
std::string history_to_json(const std::vector<EpochStats>& h);

}  // namespace xte
