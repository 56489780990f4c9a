#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "xte/classifier.hpp"
#include "xte/datasets.hpp"
#include "xte/dual_channel.hpp"
#include "xte/explain.hpp"
#include "xte/faithfulness.hpp"
#include "xte/json_io.hpp"

using namespace xte;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Globals {
  std::uint64_t seed = 0;
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::string manifest;
};

// Collects what a run read and wrote; serialized next to the artifact.
struct Manifest {
  std::string subcommand;
  ojson config = ojson::object();
  std::vector<std::string> inputs, outputs;
};

void emit(const std::string& text, const std::string& out, Manifest& man) {
  if (out.empty() || out == "-") {
    std::cout << text;
    std::cout.flush();
  } else {
    write_file(out, text);
    man.outputs.push_back(out);
  }
}

void write_manifest(const Globals& g, const Manifest& man, const std::string& out, double seconds) {
  ojson j;
  j["subcommand"] = man.subcommand;
  j["config"] = man.config;
  j["seed"] = g.seed;
  j["threads"] = g.threads;
  j["version"] = kVersion;
  j["inputs"] = man.inputs;
  j["outputs"] = man.outputs;
  j["duration_seconds"] = seconds;
  std::string path = g.manifest;
  if (path.empty() && !out.empty() && out != "-") path = out + ".manifest.json";
  if (path.empty())
    std::cerr << ojson{{"manifest", j}}.dump() << "\n";
  else
    write_file(path, j.dump(2) + "\n");
}

std::vector<Record> load_records(const std::string& path, Manifest& man) {
  man.inputs.push_back(path);
  return split_from_jsonl(read_file(path)).records;
}

PiOptions mutant_options(const std::string& mutant) {
  PiOptions o;
  if (mutant.empty()) return o;
  if (mutant == "pi-skip-robustness") {
    o.skip_robustness = true;
    return o;
  }
  throw Error(ErrorCode::BadParams, "unknown mutant '" + mutant + "' (expected pi-skip-robustness)");
}

Basis parse_basis(const std::string& s) {
  if (s == "ladder") return Basis::Ladder;
  if (s == "tree") return Basis::Tree;
  if (s == "wheel") return Basis::Wheel;
  throw Error(ErrorCode::BadParams, "unknown basis '" + s + "' (expected ladder, tree or wheel)");
}

// Default corpus for the existential suites.
std::vector<std::string> default_corpus() { return {"exists x y . E(x,y)", "triangle-motif", "red-exists"}; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explanation lattices, faithfulness and dual-channel GNN tools"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kVersion);
  Globals g;
  app.add_option("--seed", g.seed, "Random seed for every stochastic step");
  app.add_option("--threads", g.threads, "Worker threads for parallel subcommands (1 = deterministic order)")
      ->check(CLI::PositiveNumber);
  app.add_option("--manifest", g.manifest, "Run manifest path (default: <out>.manifest.json, or stderr)");

  Manifest man;
  std::string out;
  std::function<void()> run;

  // gen -----------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset split as JSONL");
  std::string gen_task, gen_base = "ba", gen_ood = "none", gen_basis = "wheel";
  DatasetSpec spec;
  gen->add_option("--task", gen_task, "redblue | topofeature | motif")->required();
  gen->add_option("--count", spec.count, "Number of graphs");
  gen->add_option("--min-nodes", spec.min_nodes, "Smallest node count");
  gen->add_option("--max-nodes", spec.max_nodes, "Largest node count");
  gen->add_option("--base", gen_base, "ba | er (RedBlueNodes base graph)");
  gen->add_option("--ba-m", spec.ba_m, "Barabasi-Albert attachment count");
  gen->add_option("--er-p", spec.er_p, "Erdos-Renyi edge probability");
  gen->add_option("--ood", gen_ood, "none | larger | baseshift");
  gen->add_option("--ood-nodes", spec.ood_nodes, "Node count for --ood larger");
  gen->add_option("--held-out", gen_basis, "Held-out motif basis for --ood baseshift: ladder | tree | wheel");
  gen->add_option("--out", out, "Output JSONL path (default stdout)");
  gen->callback([&] {
    run = [&] {
      spec.task = parse_task(gen_task);
      if (gen_base == "ba")
        spec.base = BaseKind::BarabasiAlbert;
      else if (gen_base == "er")
        spec.base = BaseKind::ErdosRenyi;
      else
        throw Error(ErrorCode::BadParams, "unknown base '" + gen_base + "' (expected ba or er)");
      spec.ood = parse_ood(gen_ood);
      spec.held_out_basis = parse_basis(gen_basis);
      spec.seed = g.seed;
      man.config = {{"task", task_name(spec.task)}, {"count", spec.count},   {"min_nodes", spec.min_nodes},
                    {"max_nodes", spec.max_nodes},  {"base", gen_base},        {"ba_m", spec.ba_m},
                    {"er_p", spec.er_p},            {"ood", ood_name(spec.ood)}, {"ood_nodes", spec.ood_nodes},
                    {"held_out", gen_basis}};
      emit(split_to_jsonl(generate(spec)), out, man);
    };
  });

  // explain -------------------------------------------------------------
  auto* ex = app.add_subcommand("explain", "Enumerate TE or PI explanations for each graph of a JSONL file");
  std::string ex_kind = "te", ex_clf, ex_graph, ex_metric = "edges+nodes", ex_mutant;
  bool ex_feat = false;
  int ex_cap = 24;
  ex->add_option("--kind", ex_kind, "te | pi");
  ex->add_option("--classifier", ex_clf, "Builtin name or formula text")->required();
  ex->add_option("--graph", ex_graph, "Input graphs (JSONL)")->required();
  ex->add_option("--metric", ex_metric, "TE size metric: edges+nodes | edges | nodes | edges+nodes+features");
  ex->add_flag("--feature-masking", ex_feat, "Include nonzero feature entries in the lattice");
  ex->add_option("--cap", ex_cap, "Maximum lattice elements per graph (<= 63)");
  ex->add_option("--mutant", ex_mutant, "Diagnostic mutant: pi-skip-robustness");
  ex->add_option("--out", out, "Output path (default stdout); one JSON report per input line");
  ex->callback([&] {
    run = [&] {
      if (ex_kind != "te" && ex_kind != "pi") throw Error(ErrorCode::BadParams, "--kind must be te or pi");
      Classifier c = Classifier::from_text(ex_clf);
      SizeMetric metric = parse_size_metric(ex_metric);
      LatticeOptions lo{ex_feat, ex_cap};
      PiOptions po = mutant_options(ex_mutant);
      man.config = {{"kind", ex_kind},          {"classifier", ex_clf}, {"metric", size_metric_name(metric)},
                    {"feature_masking", ex_feat}, {"cap", ex_cap},      {"mutant", ex_mutant}};
      auto records = load_records(ex_graph, man);
      std::vector<std::string> lines(records.size());
      parallel_for(records.size(), g.threads, [&](size_t i) {
        ExplainContext ctx(records[i].graph, c, lo);
        ExplanationSet s = ex_kind == "te" ? trivial_explanations(ctx, metric) : pi_explanations(ctx, po);
        lines[i] = explanation_to_json(records[i].graph, s).dump() + "\n";
      });
      std::string text;
      for (auto& l : lines) text += l;
      emit(text, out, man);
    };
  });

  // faith ---------------------------------------------------------------
  auto* fa = app.add_subcommand("faith", "Suf / Nec / Faith of an explanation, or the Faith ratio of edge scores");
  std::string fa_graph, fa_scores, fa_mask, fa_clf, fa_mode = "exhaustive";
  int fa_index = 0, fa_samples = 1000;
  double fa_k = 0.3, fa_b = 0.05;
  bool fa_no_nodes = false, fa_ratio = false;
  std::vector<double> fa_ks{0.1, 0.2, 0.3}, fa_bs{0.05, 0.1};
  fa->add_option("--graph", fa_graph, "Input graphs (JSONL)")->required();
  fa->add_option("--index", fa_index, "Which record of the JSONL file to use");
  fa->add_option("--classifier", fa_clf, "Builtin name or formula text")->required();
  auto* o_scores = fa->add_option("--scores", fa_scores, "Edge scores JSON (array, one per edge)");
  auto* o_mask = fa->add_option("--mask", fa_mask, "Explanation mask JSON {\"nodes\":[..],\"edges\":[[u,v],..]}");
  o_scores->excludes(o_mask);
  fa->add_option("--k", fa_k, "Top-k edge fraction when --scores is given");
  fa->add_option("--mode", fa_mode, "exhaustive | montecarlo");
  fa->add_option("--samples", fa_samples, "MonteCarlo samples");
  fa->add_option("--b", fa_b, "MonteCarlo edge budget fraction");
  fa->add_flag("--no-node-removals", fa_no_nodes, "Exhaustive: never delete region nodes");
  fa->add_flag("--ratio", fa_ratio, "Report the Faith ratio of the scores instead (needs --scores)");
  fa->add_option("--ks", fa_ks, "Faith ratio: top-k fractions");
  fa->add_option("--bs", fa_bs, "Faith ratio: budget fractions");
  fa->add_option("--out", out, "Output path (default stdout)");
  fa->callback([&] {
    run = [&] {
      Classifier c = Classifier::from_text(fa_clf);
      auto records = load_records(fa_graph, man);
      if (fa_index < 0 || fa_index >= static_cast<int>(records.size()))
        throw Error(ErrorCode::BadParams, "--index outside the JSONL file");
      const Graph& host = records[fa_index].graph;
      if (fa_scores.empty() && fa_mask.empty()) throw Error(ErrorCode::BadParams, "give --scores or --mask");
      man.config = {{"classifier", fa_clf}, {"index", fa_index}, {"mode", fa_mode}, {"samples", fa_samples},
                    {"b", fa_b},            {"k", fa_k},         {"node_removals", !fa_no_nodes}, {"ratio", fa_ratio},
                    {"ks", fa_ks},          {"bs", fa_bs}};
      std::vector<double> scores;
      if (!fa_scores.empty()) {
        man.inputs.push_back(fa_scores);
        try {
          auto j = nlohmann::json::parse(read_file(fa_scores));
          scores = (j.is_object() ? j.at("scores") : j).get<std::vector<double>>();
        } catch (const nlohmann::json::exception& e) {
          throw Error(ErrorCode::SchemaError, std::string("scores file: ") + e.what());
        }
      }
      if (fa_ratio) {
        if (scores.empty()) throw Error(ErrorCode::BadParams, "--ratio needs --scores");
        FaithRatio r = faith_ratio(host, scores, c, fa_ks, fa_bs, g.seed, fa_samples);
        ojson j;
        j["ratio"] = r.degenerate ? ojson("inf") : ojson(r.ratio);
        j["degenerate"] = r.degenerate;
        j["faith_original"] = r.faith_original;
        j["faith_shuffled"] = r.faith_shuffled;
        emit(j.dump(2) + "\n", out, man);
        return;
      }
      SubgraphMask m;
      if (!fa_mask.empty()) {
        man.inputs.push_back(fa_mask);
        try {
          m = mask_from_json(host, nlohmann::json::parse(read_file(fa_mask)));
        } catch (const nlohmann::json::exception& e) {
          throw Error(ErrorCode::SchemaError, std::string("mask file: ") + e.what());
        }
      } else {
        m = topk_explanation(scores, host, fa_k);
      }
      PerturbConfig cfg;
      if (fa_mode == "exhaustive")
        cfg = PerturbConfig::exhaustive(!fa_no_nodes);
      else if (fa_mode == "montecarlo")
        cfg = PerturbConfig::monte_carlo(fa_samples, g.seed, fa_b);
      else
        throw Error(ErrorCode::BadParams, "--mode must be exhaustive or montecarlo");
      ojson j = faith_report_to_json(faith(host, m, c, cfg));
      j["mask"] = mask_to_json(host, m);
      emit(j.dump(2) + "\n", out, man);
    };
  });

  // train ---------------------------------------------------------------
  auto* tr = app.add_subcommand("train", "Train a dual-channel model and write a checkpoint");
  std::string tr_task, tr_loss, tr_train, tr_test, tr_history;
  std::optional<double> tr_r, tr_l1, tr_l2, tr_lr, tr_wd, tr_lent;
  std::optional<int> tr_epochs, tr_warm, tr_batch;
  int tr_count = 500;
  tr->add_option("--task", tr_task, "redblue | topofeature | motif (selects generator and defaults)")->required();
  tr->add_option("--loss", tr_loss, "gisst | ib (default ib)");
  tr->add_option("--r", tr_r, "IB prior r in (0,1)");
  tr->add_option("--lambda1", tr_l1, "Sparsity / IB weight");
  tr->add_option("--lambda2", tr_l2, "GISST entropy weight");
  tr->add_option("--epochs", tr_epochs, "Total epochs including warmup");
  tr->add_option("--warmup", tr_warm, "Warmup epochs (channels trained separately)");
  tr->add_option("--lr", tr_lr, "Adam learning rate");
  tr->add_option("--weight-decay", tr_wd, "L2 on the linear channel");
  tr->add_option("--lambda-ent", tr_lent, "Attention entropy weight");
  tr->add_option("--batch-size", tr_batch, "Mini-batch size (0 = full batch)");
  tr->add_option("--train", tr_train, "Training JSONL (default: generate --count graphs with --seed)");
  tr->add_option("--count", tr_count, "Generated training set size");
  tr->add_option("--test", tr_test, "Held-out JSONL for the summary");
  tr->add_option("--history", tr_history, "Per-epoch history JSON path");
  tr->add_option("--out", out, "Checkpoint path")->required();
  tr->callback([&] {
    run = [&] {
      Task task = parse_task(tr_task);
      TrainConfig cfg = TrainConfig::for_task(task);
      if (!tr_loss.empty()) cfg.loss = parse_loss_variant(tr_loss);
      if (tr_r) cfg.r = *tr_r;
      if (tr_l1) cfg.lambda1 = *tr_l1;
      if (tr_l2) cfg.lambda2 = *tr_l2;
      if (tr_epochs) cfg.epochs = *tr_epochs;
      if (tr_warm) cfg.warmup_epochs = *tr_warm;
      if (tr_lr) cfg.lr = *tr_lr;
      if (tr_wd) cfg.weight_decay = *tr_wd;
      if (tr_lent) cfg.lambda_ent = *tr_lent;
      if (tr_batch) cfg.batch_size = *tr_batch;
      cfg.seed = g.seed;
      cfg.validate();
      DatasetSplit split;
      if (!tr_train.empty()) {
        split.records = load_records(tr_train, man);
      } else {
        DatasetSpec s;
        s.task = task;
        s.count = tr_count;
        s.seed = g.seed;
        split = generate(s);
      }
      man.config = {{"task", task_name(task)},         {"loss", loss_variant_name(cfg.loss)},
                    {"r", cfg.r},                      {"lambda1", cfg.lambda1},
                    {"lambda2", cfg.lambda2},          {"epochs", cfg.epochs},
                    {"warmup_epochs", cfg.warmup_epochs}, {"lr", cfg.lr},
                    {"weight_decay", cfg.weight_decay}, {"lambda_ent", cfg.lambda_ent},
                    {"batch_size", cfg.batch_size},    {"train", tr_train.empty() ? "generated" : tr_train},
                    {"count", static_cast<int>(split.records.size())}};
      DualChannelModel m(model_config_for(split), g.seed);
      auto history = train(m, split, cfg);
      emit(model_to_json(m), out, man);
      if (!tr_history.empty()) {
        write_file(tr_history, history_to_json(history));
        man.outputs.push_back(tr_history);
      }
      ojson summary;
      summary["train_acc"] = accuracy(m, split, {}, g.threads);
      if (!tr_test.empty()) {
        DatasetSplit test;
        test.records = load_records(tr_test, man);
        summary["test_acc"] = accuracy(m, test, {}, g.threads);
        summary["acc_without_topo"] = ablate_channel(m, test, Channel::Topo, g.threads);
        summary["acc_without_rule"] = ablate_channel(m, test, Channel::Rule, g.threads);
      }
      ChannelRelevance rel = channel_relevance(m);
      summary["relevance"] = {{"topo", rel.topo}, {"rule", rel.rule}, {"selection", rel.selection}};
      std::cout << summary.dump(2) << "\n";
    };
  });

  // rule ----------------------------------------------------------------
  auto* ru = app.add_subcommand("rule", "Extract inequality rules from a checkpoint's linear channel");
  std::string ru_model, ru_heldout;
  double ru_drop = 1e-2;
  ru->add_option("--model", ru_model, "Checkpoint JSON")->required();
  ru->add_option("--drop-ratio", ru_drop, "Drop weights below this fraction of the row maximum");
  ru->add_option("--heldout", ru_heldout, "JSONL split for the agreement rate");
  ru->add_option("--out", out, "Output path (default stdout)");
  ru->callback([&] {
    run = [&] {
      man.inputs.push_back(ru_model);
      DualChannelModel m = model_from_json(read_file(ru_model));
      std::optional<DatasetSplit> held;
      if (!ru_heldout.empty()) {
        held.emplace();
        held->records = load_records(ru_heldout, man);
      }
      man.config = {{"drop_ratio", ru_drop}, {"heldout", ru_heldout}};
      emit(rule_report_to_json(extract_rule(m, ru_drop, held ? &*held : nullptr)), out, man);
    };
  });

  // verify --------------------------------------------------------------
  auto* ve = app.add_subcommand("verify", "Check theorem instances exhaustively on small graphs");
  std::string ve_suite = "all", ve_mutant;
  std::vector<std::string> ve_clfs;
  int ve_max = 4, ve_trials = 20;
  ve->add_option("--suite", ve_suite, "te-pi | ambiguity | suf-nec | loss-identities | all");
  ve->add_option("--max-nodes", ve_max, "Largest graph in the exhaustive corpus (<= 5)");
  ve->add_option("--classifier", ve_clfs, "Classifiers for te-pi / suf-nec (default: existential corpus)");
  ve->add_option("--trials", ve_trials, "Random trials for loss-identities");
  ve->add_option("--mutant", ve_mutant, "Diagnostic mutant: pi-skip-robustness");
  ve->add_option("--out", out, "Output path (default stdout)");
  ve->callback([&] {
    run = [&] {
      if (ve_max < 0) throw Error(ErrorCode::BadParams, "--max-nodes must be >= 0");
      if (ve_max > 5) throw Error(ErrorCode::TooLarge, "--max-nodes above 5 makes the exhaustive corpus too large");
      const std::vector<std::string> suites = {"te-pi", "ambiguity", "suf-nec", "loss-identities"};
      if (ve_suite != "all" && std::find(suites.begin(), suites.end(), ve_suite) == suites.end())
        throw Error(ErrorCode::BadParams, "unknown suite '" + ve_suite + "'");
      auto want = [&](const std::string& s) { return ve_suite == "all" || ve_suite == s; };
      VerifyOptions vo;
      vo.threads = g.threads;
      vo.pi = mutant_options(ve_mutant);
      auto names = ve_clfs.empty() ? default_corpus() : ve_clfs;
      man.config = {{"suite", ve_suite}, {"max_nodes", ve_max}, {"classifiers", names}, {"mutant", ve_mutant},
                    {"trials", ve_trials}};
      ojson reports = ojson::array();
      bool pass = true;
      auto add = [&](ojson j) {
        pass = pass && j.value("pass", false);
        reports.push_back(std::move(j));
      };
      for (auto& name : names) {
        if (!want("te-pi") && !want("suf-nec")) break;
        ClassifierAst ast = resolve_classifier(name);
        Classifier c = Classifier::from_ast(ast);
        CorpusOptions corpus = corpus_for({&ast}, ve_max);
        if (want("te-pi")) {
          ojson j = tepi_report_to_json(verify_te_subset_pi(c, corpus, vo));
          j["classifier"] = name;
          if (!c.purely_existential())
            j["te_subset_pi"]["reason"] = "classifier is not purely existential; TE subset PI is not implied";
          add(std::move(j));
        }
        if (want("suf-nec")) {
          ojson j = suf_nec_report_to_json(verify_suf_nec(c, corpus, vo));
          j["classifier"] = name;
          add(std::move(j));
        }
      }
      if (want("ambiguity")) {
        ClassifierAst a1 = parse("exists x y . E(x,y)"), a2 = parse("forall x . exists y . E(x,y)");
        CorpusOptions corpus;
        corpus.max_nodes = ve_max;
        add(ambiguity_report_to_json(verify_te_ambiguity(Classifier::from_ast(a1), Classifier::from_ast(a2), corpus, vo)));
      }
      if (want("suf-nec")) {
        CorpusOptions corpus;
        corpus.max_nodes = ve_max;
        ojson j = zero_faith_report_to_json(verify_zero_faith(Classifier::from_text("exists x y . E(x,y)"), corpus, 2, vo));
        add(std::move(j));
      }
      if (want("loss-identities")) add(ojson::parse(loss_identity_report_to_json(verify_loss_identities(ve_trials, g.seed))));
      ojson j;
      j["suite"] = ve_suite;
      j["max_nodes"] = ve_max;
      j["pass"] = pass;
      j["reports"] = std::move(reports);
      emit(j.dump(2) + "\n", out, man);
    };
  });

  auto fail = [](const std::string& code, const std::string& msg, int exit_code) {
    std::cerr << ojson{{"error", {{"code", code}, {"message", msg}}}}.dump() << "\n";
    return exit_code;
  };
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("UsageError", e.what(), 2);
  }
  for (auto* sub : app.get_subcommands()) man.subcommand = sub->get_name();
  const auto t0 = std::chrono::steady_clock::now();
  try {
    run();
    write_manifest(g, man, out,
                   std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  } catch (const Error& e) {
    return fail(error_code_name(e.code()), e.what(), is_validation_error(e.code()) ? 2 : 1);
  } catch (const std::exception& e) {
    return fail("Internal", e.what(), 1);
  }
  return 0;
}
