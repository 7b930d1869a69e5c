// Copyright 2026 The incse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// incse: data generation, pretraining, sequential adaptation, evaluation and
// reporting from a single JSON run config.
//
// Layout under out_dir:
//   M0.bin, M0.imp                  pretrained model and its importance state
//   <strategy>/M<t>.bin [.imp]      adapted models
//   <strategy>/matrix.csv ...       sequence reports
//   comparison/                     paired report for --strategy both
//
// Exit codes: 0 success, 1 validation error, 2 runtime error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "incse/cli/config.hpp"
#include "incse/continual/checkpoint.hpp"
#include "incse/data/manifest.hpp"
#include "incse/error.hpp"
#include "incse/harness/dataset.hpp"
#include "incse/harness/evaluate.hpp"
#include "incse/harness/report.hpp"
#include "incse/harness/sequence.hpp"
#include "incse/model/checkpoint.hpp"

namespace fs = std::filesystem;
using namespace incse;

namespace {

// Flag overrides shared by every config-driven subcommand. Flags win.
struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> data_dir, out_dir;
  std::optional<double> lr, lambda, alpha_interp, beta, epsilon;
  std::optional<int> pretrain_epochs, adapt_epochs, batch_size;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("-c,--config", o.config, "Run config (JSON)")->required();
  app->add_option("--seed", o.seed, "Master seed; every random choice derives from it");
  app->add_option("--workers", o.workers, "Evaluation threads (default 1)");
  app->add_option("--data-dir", o.data_dir, "Corpus directory");
  app->add_option("--out-dir", o.out_dir, "Output directory for checkpoints and reports");
  app->add_option("--lr", o.lr, "Learning rate");
  app->add_option("--lambda", o.lambda, "Penalty weight");
  app->add_option("--alpha-interp", o.alpha_interp, "Fisher interpolation weight for the newest task");
  app->add_option("--beta", o.beta, "Mix between curvature (0) and path (1) importance");
  app->add_option("--epsilon", o.epsilon, "Damping of the path importance denominator");
  app->add_option("--pretrain-epochs", o.pretrain_epochs, "Epochs on the first task");
  app->add_option("--adapt-epochs", o.adapt_epochs, "Epochs on each later task");
  app->add_option("--batch-size", o.batch_size, "Utterances per update");
}

cli::RunConfig resolve(const Overrides& o) {
  cli::RunConfig c = cli::load_run_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.workers) c.workers = *o.workers;
  if (o.data_dir) c.data_dir = *o.data_dir;
  if (o.out_dir) c.out_dir = *o.out_dir;
  if (o.lr) c.train.lr = *o.lr;
  if (o.lambda) c.train.reg.lambda = *o.lambda;
  if (o.alpha_interp) c.train.reg.alpha_interp = *o.alpha_interp;
  if (o.beta) c.train.reg.beta = *o.beta;
  if (o.epsilon) c.train.reg.epsilon = *o.epsilon;
  if (o.pretrain_epochs) c.pretrain_epochs = *o.pretrain_epochs;
  if (o.adapt_epochs) c.adapt_epochs = *o.adapt_epochs;
  if (o.batch_size) c.train.batch_size = *o.batch_size;
  cli::assign_seeds(c);
  cli::validate(c);
  return c;
}

fs::path manifest_path(const cli::RunConfig& c, const data::TaskSpec& t) { return c.data_dir / t.task_id / "manifest.json"; }

data::Manifest build_one(const cli::RunConfig& c, const data::TaskSpec& t) {
  std::cerr << "gen-data: " << t.task_id << " -> " << (c.data_dir / t.task_id).string() << '\n';
  const fs::path dir = c.data_dir / t.task_id;
  fs::remove_all(dir);
  return data::build_task(t, dir);
}

// Loads a task corpus, generating it when absent. A corpus generated from a
// different seed is an error rather than silently reused.
data::Manifest ensure_task(const cli::RunConfig& c, const data::TaskSpec& t) {
  const fs::path p = manifest_path(c, t);
  if (!fs::exists(p)) return build_one(c, t);
  data::Manifest m = data::load_manifest(p);
  INCSE_CHECK(m.seed == t.seed && m.task_id == t.task_id, ErrorCode::kValidation, "corpus ", p.string(),
              " was generated with a different seed or id; rerun gen-data");
  return m;
}

std::vector<harness::MagnitudePair> load_pairs(const cli::RunConfig& c, const data::TaskSpec& t) {
  return harness::pairs_of(harness::load_split(ensure_task(c, t), t.split, c.stft));
}

const data::TaskSpec& find_test(const cli::RunConfig& c, const std::string& id) {
  for (const auto& t : c.tests)
    if (t.task_id == id) return t;
  ::incse::detail::fail(ErrorCode::kValidation, "unknown test set '", id, "'");
}

fs::path model_path(const cli::RunConfig& c, harness::Strategy s, std::size_t t) {
  if (t == 0) return c.out_dir / "M0.bin";
  return c.out_dir / std::string(harness::to_string(s)) / ("M" + std::to_string(t) + ".bin");
}

fs::path state_path(const fs::path& model) {
  fs::path p = model;
  return p.replace_extension(".imp");
}

void save_checkpoint(const fs::path& path, const model::Enhancer& m, const continual::ImportanceState* s) {
  fs::create_directories(path.parent_path());
  model::save_model(path, m);
  if (s != nullptr) continual::save_state(state_path(path), *s);
}

int cmd_gen_data(const Overrides& o) {
  const cli::RunConfig c = resolve(o);
  for (const auto* list : {&c.tasks, &c.tests})
    for (const auto& t : *list) {
      const data::Manifest m = build_one(c, t);
      std::cout << t.task_id << '\t' << m.entries.size() << '\n';
    }
  return 0;
}

int cmd_pretrain(const Overrides& o) {
  const cli::RunConfig c = resolve(o);
  const auto pairs = load_pairs(c, c.tasks.front());
  const auto seq = cli::sequence_config(c, harness::Strategy::kFinetune);
  const harness::Pretrained p = harness::pretrain(c.model, pairs, seq.pretrain, &std::cerr);
  const fs::path out = model_path(c, harness::Strategy::kFinetune, 0);
  save_checkpoint(out, p.model, &p.state);
  std::cout << out.string() << '\n';
  return 0;
}

int cmd_adapt(const Overrides& o, const std::string& strategy_name, int task) {
  const cli::RunConfig c = resolve(o);
  const harness::Strategy strategy = harness::parse_strategy(strategy_name);
  INCSE_CHECK(strategy != harness::Strategy::kNone, ErrorCode::kValidation, "adapt: strategy must be finetune or seril");
  INCSE_CHECK(task >= 1 && static_cast<std::size_t>(task) < c.tasks.size(), ErrorCode::kValidation,
              "adapt: --task must lie in [1, ", c.tasks.size() - 1, "]");
  const auto t = static_cast<std::size_t>(task);
  const fs::path prev = model_path(c, strategy, t - 1);
  INCSE_CHECK(fs::exists(prev), ErrorCode::kValidation, "adapt: missing checkpoint ", prev.string());
  model::Enhancer m = model::load_model(prev);

  const auto seq = cli::sequence_config(c, strategy);
  harness::TrainConfig tc = seq.adapt;
  tc.strategy = strategy;
  tc.seed = data::derive_seed(seq.adapt.seed, t);
  const auto pairs = load_pairs(c, c.tasks[t]);
  std::cerr << "adapt: " << strategy_name << " on " << c.tasks[t].task_id << '\n';
  const fs::path out = model_path(c, strategy, t);
  if (strategy == harness::Strategy::kSeril) {
    continual::ImportanceState state = continual::load_state(state_path(prev));
    continual::PathAccumulator acc(m.params());
    harness::train_task(m, pairs, tc, &state, &acc, &std::cerr);
    state = continual::finalize_task(state, acc, m, pairs, tc.reg);
    save_checkpoint(out, m, &state);
  } else {
    harness::train_task(m, pairs, tc, nullptr, nullptr, &std::cerr);
    save_checkpoint(out, m, nullptr);
  }
  std::cout << out.string() << '\n';
  return 0;
}

int cmd_eval(const Overrides& o, const std::string& model_file, const std::string& testset,
             const std::string& enhance_out) {
  const cli::RunConfig c = resolve(o);
  const data::TaskSpec& t = find_test(c, testset);
  const model::Enhancer m = model::load_model(model_file);
  const auto utts = harness::load_split(ensure_task(c, t), t.split, c.stft);
  const double score = harness::evaluate(m, harness::pairs_of(utts), c.workers);
  if (!enhance_out.empty()) {
    fs::create_directories(enhance_out);
    for (const auto& u : utts)
      dsp::write_wav(fs::path(enhance_out) / u.meta.noisy_path.filename(), harness::enhance_waveform(m, u, c.stft));
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", score);
  std::cout << buf << '\n';
  return 0;
}

int cmd_sequence(const Overrides& o, const std::string& strategy_name) {
  const cli::RunConfig c = resolve(o);
  std::vector<harness::Strategy> strategies;
  if (strategy_name == "both") {
    strategies = {harness::Strategy::kFinetune, harness::Strategy::kSeril};
  } else {
    strategies = {harness::parse_strategy(strategy_name)};
  }
  std::vector<std::vector<harness::MagnitudePair>> tasks, tests;
  for (const auto& t : c.tasks) tasks.push_back(load_pairs(c, t));
  for (const auto& t : c.tests) tests.push_back(load_pairs(c, t));

  const auto base = cli::sequence_config(c, strategies.front());
  const harness::Pretrained start = harness::pretrain(c.model, tasks.front(), base.pretrain, &std::cerr);
  fs::create_directories(c.out_dir);
  save_checkpoint(model_path(c, strategies.front(), 0), start.model, &start.state);

  harness::ReportInputs both;
  for (harness::Strategy s : strategies) {
    const auto seq = cli::sequence_config(c, s);
    const harness::SequenceResult r = harness::adapt_sequence(start, tasks, tests, seq, &std::cerr);
    for (std::size_t t = 1; t < r.models.size(); ++t)
      save_checkpoint(model_path(c, s, t), r.models[t], s == harness::Strategy::kSeril ? &r.states[t] : nullptr);

    harness::ReportInputs in;
    in.unprocessed = r.unprocessed;
    (s == harness::Strategy::kSeril ? in.seril : in.finetune) = r.matrix;
    both.unprocessed = r.unprocessed;
    if (s == harness::Strategy::kSeril) both.seril = r.matrix;
    if (s == harness::Strategy::kFinetune) both.finetune = r.matrix;
    const fs::path dir = c.out_dir / std::string(harness::to_string(s));
    harness::emit_report(in, dir);
    std::cout << (dir / "matrix.csv").string() << '\n';
  }
  if (both.seril && both.finetune) {
    harness::emit_report(both, c.out_dir / "comparison");
    std::cout << (c.out_dir / "comparison" / "report.json").string() << '\n';
  }
  std::ofstream(c.out_dir / "config.resolved.json") << cli::to_json(c).dump(2) << '\n';
  return 0;
}

int cmd_report(const std::string& seril_dir, const std::string& finetune_dir, const std::string& out_dir) {
  harness::ReportInputs in;
  in.seril = harness::load_matrix_csv(fs::path(seril_dir) / "matrix.csv");
  in.finetune = harness::load_matrix_csv(fs::path(finetune_dir) / "matrix.csv");
  in.unprocessed = harness::load_unprocessed_csv(fs::path(seril_dir) / "unprocessed.csv");
  INCSE_CHECK(in.seril->model_ids == in.finetune->model_ids && in.seril->testset_ids == in.finetune->testset_ids,
              ErrorCode::kValidation, "report: seril and finetune matrices cover different grids");
  const nlohmann::json j = harness::report_json(in);
  if (!out_dir.empty()) harness::emit_report(in, out_dir);
  std::cout << j.dump(2) << '\n';
  return 0;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kValidation:
    case ErrorCode::kParse:
    case ErrorCode::kInvalidArgument:
      return 1;
    default:
      return 2;
  }
}

void print_error(std::string_view code, std::string message) {
  for (char& ch : message)
    if (ch == '\n' || ch == '\r') ch = ' ';
  std::cerr << "ERROR " << code << ": " << message << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incremental speech enhancement: data, training, adaptation and evaluation"};
  app.require_subcommand(1);

  Overrides o;
  auto* gen = app.add_subcommand("gen-data", "Synthesize every task and test corpus into data_dir");
  add_common(gen, o);

  auto* pre = app.add_subcommand("pretrain", "Train M0 on the first task and write M0.bin / M0.imp");
  add_common(pre, o);

  std::string adapt_strategy = "seril";
  int adapt_task = 1;
  auto* adapt = app.add_subcommand("adapt", "Adapt the previous checkpoint of a strategy to task N");
  add_common(adapt, o);
  adapt->add_option("--strategy", adapt_strategy, "finetune or seril")->check(CLI::IsMember({"finetune", "seril"}));
  adapt->add_option("--task", adapt_task, "Task index N >= 1")->required();

  std::string eval_model, eval_testset, enhance_out;
  auto* ev = app.add_subcommand("eval", "Print the mean SDR (dB) of a model on a test set");
  add_common(ev, o);
  ev->add_option("--model", eval_model, "Model checkpoint")->required();
  ev->add_option("--testset", eval_testset, "Test set id from the config")->required();
  ev->add_option("--enhance-out", enhance_out, "Directory for enhanced WAVs");

  std::string seq_strategy = "both";
  auto* seq = app.add_subcommand("sequence", "Pretrain, adapt over all tasks, score every model on every test set");
  add_common(seq, o);
  seq->add_option("--strategy", seq_strategy, "none, finetune, seril or both")
      ->check(CLI::IsMember({"none", "finetune", "seril", "both"}));

  std::string rep_seril, rep_finetune, rep_out;
  auto* rep = app.add_subcommand("report", "Compare the matrices of a seril and a finetune run");
  rep->add_option("--seril", rep_seril, "Directory holding the seril matrix.csv")->required();
  rep->add_option("--finetune", rep_finetune, "Directory holding the finetune matrix.csv")->required();
  rep->add_option("--out", rep_out, "Write the combined report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return 1;
  }

  try {
    if (*gen) return cmd_gen_data(o);
    if (*pre) return cmd_pretrain(o);
    if (*adapt) return cmd_adapt(o, adapt_strategy, adapt_task);
    if (*ev) return cmd_eval(o, eval_model, eval_testset, enhance_out);
    if (*seq) return cmd_sequence(o, seq_strategy);
    if (*rep) return cmd_report(rep_seril, rep_finetune, rep_out);
  } catch (const Error& e) {
    print_error(to_string(e.code()), e.what());
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    print_error("io", e.what());
    return 2;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 2;
  }
  return 0;
}
