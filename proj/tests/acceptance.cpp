// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "minflow/cli.hpp"
#include "minflow/minflow.hpp"
#include "oracles.hpp"

namespace {

using namespace minflow;
namespace fs = std::filesystem;

struct Verdict {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const char* title, const std::function<Verdict()>& check) {
  Verdict v;
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  if (!v.pass) ++failures;
  std::printf("[%s] %d. %s: %s\n", v.pass ? "PASS" : "FAIL", id, title, v.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Verdict gradient_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const GradcheckReport r = gradcheck_classifier(42, 1e-6, 100);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {r.passed() && r.trials >= 100 && secs < 10.0,
          fmt("trials=%zu entries=%zu max_rel_error=%.3g (tol 1e-5) time=%.3fs", r.trials, r.entries,
              r.max_rel_error, secs)};
}

Verdict engine_equivalence() {
  const Dataset d = gen_synthetic(100, 42, 2.0).dataset;
  const ClassifierParams start = ClassifierParams::make(0.01, -0.02, 0.005);
  ClassifierGraph cg = build_linear_classifier(0.01, ClassifierInit::from(start));
  Session s(cg.graph, 0);
  s.initialize_variables();
  const FeedDict feeds = classifier_feeds(cg.model, d.X, d.Z);
  const RefTrainResult ref = ref_train(d.X, d.Z, 1000, 0.01, start);
  double worst_loss = 0.0;
  for (std::size_t e = 0; e < 1000; ++e)
    worst_loss = std::max(worst_loss, std::abs(s.apply_step(cg.model.step, feeds).item() - ref.losses[e]));
  const ClassifierParams got = params_from_session(s, cg.model);
  const double worst_param = std::max({std::abs(got.W[0] - ref.params.W[0]), std::abs(got.W[1] - ref.params.W[1]),
                                       std::abs(got.b[0] - ref.params.b[0])});
  return {worst_loss <= 1e-8 && worst_param <= 1e-8,
          fmt("1000 epochs n=100 max|dloss|=%.3g max|dparam|=%.3g (tol 1e-8)", worst_loss, worst_param)};
}

Verdict closed_form() {
  Graph g;
  const LinearModelGraph m = build_classifier_forward(g, {ZerosInit{}, ZerosInit{}});
  const std::vector<NodeId> grads = gradients(g, m.E, {m.W, m.b});
  Session s(g, 0);
  s.initialize_variables();
  oracle::Rng rng(2024);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = rng.index(1, 50);
    const Tensor X = rng.tensor(Shape{n, 2}, -3, 3);
    std::vector<double> z(n);
    for (double& zi : z) zi = rng.uniform(0, 1) < 0.5 ? 1 : 0;
    const double w0 = rng.uniform(-2, 2), w1 = rng.uniform(-2, 2), b0 = rng.uniform(-2, 2);
    s.assign(m.W, Tensor::matrix({{w0}, {w1}}));
    s.assign(m.b, Tensor::vector({b0}));
    const auto got = s.run(grads, classifier_feeds(m, X, Tensor::vector(z)));
    double dw0 = 0, dw1 = 0, db = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = oracle::sigmoid(X.at(i, 0) * w0 + X.at(i, 1) * w1 + b0) - z[i];
      dw0 += X.at(i, 0) * r;
      dw1 += X.at(i, 1) * r;
      db += r;
    }
    worst = std::max({worst, std::abs(got[0][0] - dw0), std::abs(got[0][1] - dw1), std::abs(got[1][0] - db)});
  }
  return {worst <= 1e-10, fmt("20 points max|adjoint - closed form|=%.3g (tol 1e-10)", worst)};
}

Verdict convergence() {
  cli::TrainConfig syn;
  const Dataset sd = cli::load_dataset(syn);
  const cli::TrainOutcome so = cli::train(sd, syn);
  std::size_t rises = 0;
  for (std::size_t e = 11; e < so.log.size(); ++e) rises += so.log[e].loss > so.log[e - 1].loss;

  cli::TrainConfig iris;
  iris.data = cli::FileSource{MINFLOW_TEST_DATA_DIR "/iris.csv", true};
  iris.epochs = MINFLOW_IRIS_EPOCHS;
  iris.learning_rate = MINFLOW_IRIS_LR;
  const Dataset id = cli::load_dataset(iris);
  const cli::TrainOutcome io = cli::train(id, iris);

  return {so.final_accuracy == 1.0 && rises == 0 && id.size() == 150 && io.final_accuracy >= 0.95,
          fmt("synthetic acc=%.4f loss rises after epoch 10=%zu final_loss=%.6g; iris setosa-vs-rest acc=%.4f "
              "(epochs=%d lr=%g)",
              so.final_accuracy, rises, so.final_loss, io.final_accuracy, MINFLOW_IRIS_EPOCHS, MINFLOW_IRIS_LR)};
}

Verdict initialization() {
  ClassifierGraph cg = build_linear_classifier(0.01, ClassifierInit::from(ClassifierParams::make(0, 0, 0)));
  Session s(cg.graph, 0);
  s.initialize_variables();
  oracle::Rng rng(5);
  double worst = 0.0;
  for (std::size_t n : {1u, 2u, 7u, 100u, 150u, 1000u}) {
    const Tensor X = rng.tensor(Shape{n, 2}, -100, 100);
    std::vector<double> z(n);
    for (double& zi : z) zi = rng.uniform(0, 1) < 0.5 ? 1 : 0;
    const double loss = s.run(cg.model.E, classifier_feeds(cg.model, X, Tensor::vector(z))).item();
    worst = std::max(worst, std::abs(loss - static_cast<double>(n) * std::numbers::ln2));
  }
  return {worst <= 1e-9, fmt("n in {1,2,7,100,150,1000} max|E - n ln2|=%.3g (tol 1e-9)", worst)};
}

Verdict determinism(const fs::path& tmp) {
  bool same = true;
  std::string detail;
  for (cli::Engine engine : {cli::Engine::Graph, cli::Engine::Reference}) {
    cli::TrainConfig c;
    c.engine = engine;
    std::ostringstream out, err;
    const fs::path a = tmp / "a", b = tmp / "b";
    if (cli::cmd_train(c, a, out, err) != 0 || cli::cmd_train(c, b, out, err) != 0) return {false, err.str()};
    for (const char* f : {"loss_log.csv", "params.csv"}) {
      const bool eq = slurp(a / f) == slurp(b / f) && !slurp(a / f).empty();
      same = same && eq;
      detail += fmt("%s %s %s; ", engine == cli::Engine::Graph ? "graph" : "reference", f, eq ? "identical" : "DIFFER");
    }
  }
  return {same, detail};
}

Verdict kernel_oracles() {
  oracle::Rng rng(7);
  double worst = 0.0;
  auto track = [&](const Tensor& got, const std::vector<double>& want) {
    if (got.size() != want.size()) {
      worst = INFINITY;
      return;
    }
    for (std::size_t i = 0; i < want.size(); ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
  };
  for (int t = 0; t < 1000; ++t) {
    const std::size_t m = rng.index(1, 6), k = rng.index(1, 6), n = rng.index(1, 6);
    const Tensor A = rng.tensor(Shape{m, k}), B = rng.tensor(Shape{k, n}), C = rng.tensor(Shape{m, k});
    const Tensor bias = rng.tensor(Shape{k});
    const Tensor pos = rng.tensor(Shape{m, k}, 1e-3, 5.0);
    const double s = rng.uniform(-2, 2);
    const oracle::Matrix a = oracle::to_matrix(A);

    track(matmul(A, B), oracle::matmul(a, oracle::to_matrix(B)));

    std::vector<double> arb(m * k), sig(m * k), relu(m * k), lg(m * k), neg(m * k), add(m * k), sub(m * k),
        mul(m * k), smul(m * k), tr(m * k), sgrad(m * k), rgrad(m * k), lgrad(m * k), csum(k, 0.0);
    double total = 0.0, dp = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        const std::size_t f = i * k + j;
        const double x = a(i, j), c = C[f];
        arb[f] = x + bias[j];
        sig[f] = oracle::sigmoid(x);
        relu[f] = x > 0 ? x : 0;
        lg[f] = std::log(pos[f]);
        neg[f] = -x;
        add[f] = x + c;
        sub[f] = x - c;
        mul[f] = x * c;
        smul[f] = s * x;
        tr[j * m + i] = x;
        sgrad[f] = c * sig[f] * (1 - sig[f]);
        rgrad[f] = x > 0 ? c : 0;
        lgrad[f] = c / pos[f];
        csum[j] += x;
        total += x;
        dp += x * c;
      }
    track(add_row_broadcast(A, bias), arb);
    track(map_unary(UnaryKind::Sigmoid, A), sig);
    track(map_unary(UnaryKind::Relu, A), relu);
    track(map_unary(UnaryKind::Log, pos), lg);
    track(map_unary(UnaryKind::Neg, A), neg);
    track(binary_elementwise(BinaryKind::Add, A, C), add);
    track(binary_elementwise(BinaryKind::Sub, A, C), sub);
    track(binary_elementwise(BinaryKind::Mul, A, C), mul);
    track(binary_elementwise(BinaryKind::Mul, Tensor::scalar(s), A), smul);
    track(reduce_sum(A), {total});
    track(dot(A.reshaped(Shape{m * k}), C.reshaped(Shape{m * k})), {dp});
    track(transpose(A), tr);
    track(column_sum(A), csum);
    track(broadcast_to(Tensor::scalar(s), Shape{m, k}), std::vector<double>(m * k, s));
    track(sigmoid_grad(map_unary(UnaryKind::Sigmoid, A), C), sgrad);
    track(relu_grad(A, C), rgrad);
    track(log_grad(pos, C), lgrad);
  }

  // d(v.v)/dv = 2v through two Dot inputs fanning out of one node.
  double fan_worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = rng.index(1, 10);
    Graph g;
    const NodeId v = g.add_placeholder("v", NodeShape{n});
    const NodeId loss = g.add_op(OpKind::Dot, {v, v}, "loss");
    const NodeId adj = gradients(g, loss, {v}).front();
    Session sess(g, 0);
    sess.initialize_variables();
    const Tensor x = rng.tensor(Shape{n});
    const Tensor got = sess.run(adj, {{v, x}});
    for (std::size_t i = 0; i < n; ++i) fan_worst = std::max(fan_worst, std::abs(got[i] - 2 * x[i]));
  }
  return {worst <= 1e-12 && fan_worst <= 1e-12,
          fmt("1000 instances x 18 kernels max abs error=%.3g; fan-out dot(v,v) max|adj - 2v|=%.3g (tol 1e-12)",
              worst, fan_worst)};
}

Verdict dot_export(const fs::path& tmp) {
  auto count = [](const std::string& text, const std::string& needle) {
    std::istringstream lines(text);
    std::size_t n = 0;
    for (std::string line; std::getline(lines, line);) n += line.find(needle) != std::string::npos;
    return n;
  };
  std::ostringstream out, err;
  if (cli::cmd_export_dot(tmp / "f.dot", false, out, err) != 0 || cli::cmd_export_dot(tmp / "g.dot", true, out, err) != 0)
    return {false, err.str()};
  const std::string f = slurp(tmp / "f.dot"), g = slurp(tmp / "g.dot");
  const std::size_t fv = count(f, "[label="), fe = count(f, " -> "), gv = count(g, "[label="), ge = count(g, " -> ");

  Graph ref;
  build_classifier_forward(ref);
  std::size_t arity_sum = 0;
  for (const Node& n : ref.nodes()) arity_sum += n.inputs.size();

  return {fv == kClassifierForwardNodes && fe == kClassifierForwardEdges && fe == arity_sum && gv > fv && ge > fe,
          fmt("forward vertices=%zu (expected %zu) edges=%zu (arity sum %zu); with gradients vertices=%zu edges=%zu",
              fv, kClassifierForwardNodes, fe, arity_sum, gv, ge)};
}

}  // namespace

int main() {
  std::random_device rd;
  const fs::path tmp = fs::temp_directory_path() / ("minflow_acceptance_" + std::to_string(rd()));
  fs::create_directories(tmp);

  report(1, "gradient oracle", gradient_oracle);
  report(2, "engine equivalence", engine_equivalence);
  report(3, "closed-form adjoints", closed_form);
  report(4, "convergence", convergence);
  report(5, "initialization sanity", initialization);
  report(6, "determinism", [&] { return determinism(tmp); });
  report(7, "kernel oracles", kernel_oracles);
  report(8, "dot export", [&] { return dot_export(tmp); });

  fs::remove_all(tmp);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
