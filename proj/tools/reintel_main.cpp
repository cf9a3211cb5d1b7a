// reintel CLI: runs the pipeline stages over a key=value config file.
// Exit codes: 0 ok, 1 usage error, 2 runtime error.

#include <CLI11.hpp>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "reintel/reintel.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::string seed;
  int variant = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_variant) {
  cmd->add_option("--config", args.config_path, "path to key=value config file")
      ->required();
  cmd->add_option("--out", args.out_dir, "output directory (overrides out_dir)");
  cmd->add_option("--seed", args.seed, "root seed (overrides seed)");
  if (with_variant)
    cmd->add_option("--variant", args.variant, "model variant 1..3")
        ->check(CLI::Range(1, 3));
}

reintel::PipelineConfig load_config(const CommonArgs& args) {
  std::map<std::string, std::string> overrides;
  if (!args.out_dir.empty()) overrides["out_dir"] = args.out_dir;
  if (!args.seed.empty()) overrides["seed"] = args.seed;
  if (args.variant != 0) overrides["variant"] = std::to_string(args.variant);
  return reintel::load_pipeline_config(args.config_path, overrides);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"reintel: multimodal reliable/unreliable post classification pipeline"};
  app.require_subcommand(1);

  CommonArgs gen_args, pre_args, feat_args, train_args, pred_args, ens_args, eval_args;
  std::string ens_inputs, eval_pred, eval_split = "val", ens_out;

  auto* c_gen = app.add_subcommand("generate", "write a synthetic dataset");
  add_common(c_gen, gen_args, false);
  auto* c_pre = app.add_subcommand("preprocess", "normalize post texts");
  add_common(c_pre, pre_args, false);
  auto* c_feat = app.add_subcommand("featurize", "build the metadata feature matrix");
  add_common(c_feat, feat_args, false);
  auto* c_train = app.add_subcommand("train", "train one fusion model variant");
  add_common(c_train, train_args, true);
  auto* c_pred = app.add_subcommand("predict", "score every post with a trained model");
  add_common(c_pred, pred_args, true);
  auto* c_ens = app.add_subcommand("ensemble", "average prediction files");
  add_common(c_ens, ens_args, false);
  c_ens->add_option("--inputs", ens_inputs, "comma-separated prediction files")
      ->required();
  c_ens->add_option("--out-file", ens_out, "output prediction file");
  auto* c_eval = app.add_subcommand("evaluate", "ROC-AUC report for a prediction file");
  add_common(c_eval, eval_args, false);
  c_eval->add_option("--pred", eval_pred, "prediction file to score")->required();
  c_eval->add_option("--split", eval_split, "train|val|all (default val)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (c_gen->parsed()) {
      auto cfg = load_config(gen_args);
      std::cout << "wrote " << reintel::stage_generate(cfg) << "\n";
    } else if (c_pre->parsed()) {
      auto cfg = load_config(pre_args);
      std::cout << "wrote " << reintel::stage_preprocess(cfg) << "\n";
    } else if (c_feat->parsed()) {
      auto cfg = load_config(feat_args);
      std::cout << "wrote " << reintel::stage_featurize(cfg) << "\n";
    } else if (c_train->parsed()) {
      auto cfg = load_config(train_args);
      std::cout << "wrote " << reintel::stage_train(cfg, cfg.variant) << "\n";
    } else if (c_pred->parsed()) {
      auto cfg = load_config(pred_args);
      std::cout << "wrote " << reintel::stage_predict(cfg, cfg.variant) << "\n";
    } else if (c_ens->parsed()) {
      auto cfg = load_config(ens_args);
      std::vector<std::string> inputs;
      for (auto& p : reintel::split(ens_inputs, ','))
        if (!reintel::trim(p).empty()) inputs.push_back(reintel::trim(p));
      std::cout << "wrote " << reintel::stage_ensemble(cfg, inputs, ens_out) << "\n";
    } else if (c_eval->parsed()) {
      auto cfg = load_config(eval_args);
      auto report = reintel::stage_evaluate(cfg, eval_pred, eval_split);
      std::cout << reintel::format_report(report);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
