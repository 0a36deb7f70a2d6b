#ifndef MINFLOW_CLI_HPP_
#define MINFLOW_CLI_HPP_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "minflow/autodiff.hpp"
#include "minflow/data.hpp"
#include "minflow/dot.hpp"
#include "minflow/gradcheck.hpp"
#include "minflow/model.hpp"
#include "minflow/runtime.hpp"

namespace minflow::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;

enum class Engine { Graph, Reference };

struct SyntheticSource {
  std::size_t n = 100;
  double margin = 2.0;
};

struct FileSource {
  std::filesystem::path path;
  bool setosa_vs_rest = false;
};

struct TrainConfig {
  std::size_t epochs = 1000;
  double learning_rate = 0.01;
  std::uint64_t seed = 42;
  Engine engine = Engine::Graph;
  std::variant<SyntheticSource, FileSource> data = SyntheticSource{};
  std::optional<ClassifierParams> init;  // explicit start; otherwise N(0, 0.01^2) draws from `seed`
};

struct LossLogRow {
  std::size_t epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
};
using LossLog = std::vector<LossLogRow>;

struct TrainOutcome {
  LossLog log;
  ClassifierParams params;
  double final_loss = 0.0;
  double final_accuracy = 0.0;
  std::optional<std::string> dot;  // graph engine only
};

/// Empty when valid, else the reason.
inline std::string validate(const TrainConfig& c) {
  if (c.epochs < 1) return "epochs must be >= 1";
  if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) return "learning rate must be positive";
  if (const auto* s = std::get_if<SyntheticSource>(&c.data)) {
    if (s->n < 2 || s->n % 2 != 0) return "synthetic n must be even and >= 2";
    if (!(s->margin > 0.0)) return "margin must be positive";
  }
  return {};
}

inline Dataset load_dataset(const TrainConfig& c) {
  if (const auto* s = std::get_if<SyntheticSource>(&c.data)) return gen_synthetic(s->n, c.seed, s->margin).dataset;
  const auto& f = std::get<FileSource>(c.data);
  return f.setosa_vs_rest ? load_iris_setosa_vs_rest(f.path) : load_csv(f.path);
}

/// Start parameters: the explicit ones, or W[0], W[1], b[0] drawn in that order from the session
/// sampler, which is the order a Session initializes the classifier's variables.
inline ClassifierParams start_params(const TrainConfig& c) {
  if (c.init) return *c.init;
  NormalSampler rng(c.seed);
  const double w0 = rng.normal(0.0, 0.01);
  const double w1 = rng.normal(0.0, 0.01);
  const double b0 = rng.normal(0.0, 0.01);
  return ClassifierParams::make(w0, w1, b0);
}

inline TrainOutcome train_graph(const Dataset& d, const TrainConfig& c) {
  ClassifierGraph cg = build_linear_classifier(
      c.learning_rate, c.init ? ClassifierInit::from(*c.init) : ClassifierInit{});
  const LinearModelGraph& m = cg.model;
  Session session(cg.graph, c.seed);
  session.initialize_variables();
  const FeedDict feeds = classifier_feeds(m, d.X, d.Z);
  const std::size_t n = d.size();

  TrainOutcome out;
  out.log.reserve(c.epochs);
  for (std::size_t e = 0; e < c.epochs; ++e) {
    const double acc = accuracy(session.run(m.Y, feeds).reshaped(Shape{n}), d.Z);
    const double loss = session.apply_step(m.step, feeds).item();
    out.log.push_back({e, loss, acc});
  }
  const std::vector<Tensor> final_values = session.run({m.Y, m.E}, feeds);
  out.params = params_from_session(session, m);
  out.final_accuracy = accuracy(final_values[0].reshaped(Shape{n}), d.Z);
  out.final_loss = final_values[1].item();
  out.dot = export_dot(cg.graph);
  return out;
}

inline TrainOutcome train_reference(const Dataset& d, const TrainConfig& c) {
  TrainOutcome out;
  out.log.reserve(c.epochs);
  const RefTrainResult r = ref_train(d.X, d.Z, c.epochs, c.learning_rate, start_params(c),
                                     [&](std::size_t e, const ClassifierParams& p, double loss) {
                                       out.log.push_back({e, loss, accuracy(ref_predict(d.X, p), d.Z)});
                                     });
  out.params = r.params;
  out.final_loss = ref_loss(d.X, d.Z, r.params);
  out.final_accuracy = accuracy(ref_predict(d.X, r.params), d.Z);
  return out;
}

inline TrainOutcome train(const Dataset& d, const TrainConfig& c) {
  return c.engine == Engine::Graph ? train_graph(d, c) : train_reference(d, c);
}

/// `epoch,loss,accuracy` with 17 significant digits.
inline std::string format_loss_log(const LossLog& log) {
  std::string out = "epoch,loss,accuracy\n";
  for (const auto& row : log) {
    out += std::to_string(row.epoch) + "," + format_double(row.loss) + "," + format_double(row.accuracy) + "\n";
  }
  return out;
}

inline std::string format_params(const ClassifierParams& p) {
  return "name,index,value\nW,0," + format_double(p.W[0]) + "\nW,1," + format_double(p.W[1]) + "\nb,0," +
         format_double(p.b[0]) + "\n";
}

/// Trains and writes loss_log.csv, params.csv and (graph engine) graph.dot into `out_dir`.
inline int cmd_train(const TrainConfig& config, const std::filesystem::path& out_dir, std::ostream& out,
                     std::ostream& err) {
  if (const std::string problem = validate(config); !problem.empty()) {
    err << "error: " << problem << "\n";
    return kExitConfig;
  }
  Dataset data;
  try {
    data = load_dataset(config);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  if (!data.has_both_classes()) {
    err << "error: training data must contain both classes\n";
    return kExitData;
  }

  const TrainOutcome result = train(data, config);
  try {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error(Errc::IoError, "cannot create " + out_dir.string() + ": " + ec.message());
    write_text(out_dir / "loss_log.csv", format_loss_log(result.log));
    write_text(out_dir / "params.csv", format_params(result.params));
    if (result.dot) write_text(out_dir / "graph.dot", *result.dot);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  out << "engine=" << (config.engine == Engine::Graph ? "graph" : "reference") << " n=" << data.size()
      << " epochs=" << config.epochs << " final_loss=" << format_double(result.final_loss)
      << " final_accuracy=" << format_double(result.final_accuracy) << "\n";
  return kExitOk;
}

/// Exit 0 iff every adjoint agrees with central differences within kGradcheckTolerance.
inline int cmd_gradcheck(std::uint64_t seed, double eps, std::size_t trials, std::ostream& out, std::ostream& err) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    err << "error: eps must be positive\n";
    return kExitConfig;
  }
  if (trials == 0) {
    err << "warning: trials=0, nothing checked\n";
    out << "trials=0 entries=0 max_rel_error=0\n";
    return kExitOk;
  }
  const GradcheckReport r = gradcheck_classifier(seed, eps, trials);
  out << "trials=" << r.trials << " entries=" << r.entries << " max_rel_error=" << r.max_rel_error << "\n";
  if (r.degenerate > 0) err << "degenerate differences: " << r.degenerate << " of " << r.entries << " (eps too small)\n";
  if (!r.passed()) {
    err << "gradient check failed (tolerance " << kGradcheckTolerance << ")\n" << r.worst;
    return kExitCheckFailed;
  }
  return kExitOk;
}

/// Writes the classifier graph; with_gradients first adds the adjoints of E for [b, W, X].
inline int cmd_export_dot(const std::filesystem::path& path, bool with_gradients, std::ostream& out,
                          std::ostream& err) {
  Graph g;
  const LinearModelGraph m = build_classifier_forward(g);
  if (with_gradients) gradients(g, m.E, {m.b, m.W, m.X});
  try {
    write_text(path, export_dot(g));
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  out << "wrote " << path.string() << " (" << g.size() << " nodes)\n";
  return kExitOk;
}

inline int cmd_gen_data(std::size_t n, std::uint64_t seed, double margin, const std::filesystem::path& path,
                        std::ostream& out, std::ostream& err) {
  if (n < 2 || n % 2 != 0 || !(margin > 0.0) || !std::isfinite(margin)) {
    err << "error: n must be even and >= 2, margin positive\n";
    return kExitConfig;
  }
  try {
    save_csv(gen_synthetic(n, seed, margin).dataset, path);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  out << "wrote " << n << " rows to " << path.string() << "\n";
  return kExitOk;
}

}  // namespace minflow::cli

#endif  // MINFLOW_CLI_HPP_
