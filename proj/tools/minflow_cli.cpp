// Command-line front end: train, gradcheck, export-dot, gen-data.

#include <cstdint>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "minflow/cli.hpp"

namespace cli = minflow::cli;

int main(int argc, char** argv) {
  CLI::App app{"minflow: dataflow-graph logistic regression with reverse-mode autodiff"};
  app.require_subcommand(1);

  cli::TrainConfig train;
  std::string engine = "graph";
  std::string data_path;
  std::size_t synthetic_n = 0;
  double margin = 2.0;
  bool setosa = false;
  std::vector<double> init;
  std::string out_dir;
  auto* train_cmd = app.add_subcommand("train", "train the classifier and write loss_log.csv, params.csv, graph.dot");
  train_cmd->add_option("--engine", engine, "graph or reference")
      ->check(CLI::IsMember({"graph", "reference"}))
      ->capture_default_str();
  auto* data_opt = train_cmd->add_option("--data", data_path, "CSV file with f1,f2,label rows");
  auto* synth_opt = train_cmd->add_option("--synthetic", synthetic_n, "generate n separable points instead");
  data_opt->excludes(synth_opt);
  train_cmd->add_option("--margin", margin, "separation margin for --synthetic")->capture_default_str();
  train_cmd->add_flag("--setosa-vs-rest", setosa, "--data is a 5-column iris CSV; label 1 iff setosa");
  train_cmd->add_option("--epochs", train.epochs, "full-batch epochs")->capture_default_str();
  train_cmd->add_option("--lr", train.learning_rate, "learning rate")->capture_default_str();
  train_cmd->add_option("--seed", train.seed, "PRNG seed")->capture_default_str();
  train_cmd->add_option("--init", init, "explicit start parameters w0,w1,b")->expected(3)->delimiter(',');
  train_cmd->add_option("--out", out_dir, "output directory")->required();

  std::uint64_t gc_seed = 42;
  double eps = 1e-6;
  std::size_t trials = 100;
  auto* gc_cmd = app.add_subcommand("gradcheck", "compare autodiff gradients with central differences");
  gc_cmd->add_option("--eps", eps, "finite-difference step")->capture_default_str();
  gc_cmd->add_option("--trials", trials, "random instances")->capture_default_str();
  gc_cmd->add_option("--seed", gc_seed, "PRNG seed")->capture_default_str();

  std::string dot_out;
  bool with_gradients = false;
  auto* dot_cmd = app.add_subcommand("export-dot", "write the classifier graph in DOT format");
  dot_cmd->add_option("--out", dot_out, "output file")->required();
  dot_cmd->add_flag("--with-gradients", with_gradients, "include the gradient nodes for [b, W, X]");

  std::size_t gen_n = 100;
  std::uint64_t gen_seed = 42;
  double gen_margin = 2.0;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen-data", "write a linearly separable synthetic dataset");
  gen_cmd->add_option("--n", gen_n, "number of points (even)")->capture_default_str();
  gen_cmd->add_option("--seed", gen_seed, "PRNG seed")->capture_default_str();
  gen_cmd->add_option("--margin", gen_margin, "separation margin")->capture_default_str();
  gen_cmd->add_option("--out", gen_out, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitConfig;
  }

  if (train_cmd->parsed()) {
    train.engine = engine == "graph" ? cli::Engine::Graph : cli::Engine::Reference;
    if (!data_path.empty()) {
      train.data = cli::FileSource{data_path, setosa};
    } else if (*synth_opt) {
      train.data = cli::SyntheticSource{synthetic_n, margin};
    } else {
      std::cerr << "error: one of --data or --synthetic is required\n";
      return cli::kExitConfig;
    }
    if (!init.empty()) train.init = minflow::ClassifierParams::make(init[0], init[1], init[2]);
    return cli::cmd_train(train, out_dir, std::cout, std::cerr);
  }
  if (gc_cmd->parsed()) return cli::cmd_gradcheck(gc_seed, eps, trials, std::cout, std::cerr);
  if (dot_cmd->parsed()) return cli::cmd_export_dot(dot_out, with_gradients, std::cout, std::cerr);
  return cli::cmd_gen_data(gen_n, gen_seed, gen_margin, gen_out, std::cout, std::cerr);
}
