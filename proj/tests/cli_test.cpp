#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>

#include "minflow/cli.hpp"

namespace minflow::cli {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::random_device rd;
    dir_ = fs::temp_directory_path() / ("minflow_cli_test_" + std::to_string(rd()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(CliTest, TrainWritesLogParamsAndGraph) {
  TrainConfig c;
  c.epochs = 5;
  ASSERT_EQ(cmd_train(c, dir_ / "run", out_, err_), kExitOk) << err_.str();
  const std::string log = slurp(dir_ / "run" / "loss_log.csv");
  EXPECT_EQ(log.rfind("epoch,loss,accuracy\n0,", 0), 0u);
  EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 6);
  EXPECT_TRUE(std::regex_match(slurp(dir_ / "run" / "params.csv"),
                               std::regex("name,index,value\nW,0,[^\n]+\nW,1,[^\n]+\nb,0,[^\n]+\n")));
  EXPECT_TRUE(fs::exists(dir_ / "run" / "graph.dot"));
  EXPECT_NE(out_.str().find("engine=graph n=100 epochs=5"), std::string::npos);
}

TEST_F(CliTest, ReferenceEngineWritesNoGraph) {
  TrainConfig c;
  c.epochs = 3;
  c.engine = Engine::Reference;
  ASSERT_EQ(cmd_train(c, dir_, out_, err_), kExitOk);
  EXPECT_TRUE(fs::exists(dir_ / "params.csv"));
  EXPECT_FALSE(fs::exists(dir_ / "graph.dot"));
}

TEST_F(CliTest, EnginesProduceTheSameFiles) {
  TrainConfig c;
  c.epochs = 50;
  c.data = SyntheticSource{40, 1.0};
  ASSERT_EQ(cmd_train(c, dir_ / "g", out_, err_), kExitOk);
  c.engine = Engine::Reference;
  ASSERT_EQ(cmd_train(c, dir_ / "r", out_, err_), kExitOk);

  const Dataset d = load_dataset(c);
  TrainConfig gc = c;
  gc.engine = Engine::Graph;
  const TrainOutcome g = train(d, gc);
  const TrainOutcome r = train(d, c);
  ASSERT_EQ(g.log.size(), r.log.size());
  for (std::size_t e = 0; e < g.log.size(); ++e) {
    EXPECT_NEAR(g.log[e].loss, r.log[e].loss, 1e-8);
    EXPECT_EQ(g.log[e].accuracy, r.log[e].accuracy);
  }
  for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(g.params.W[k], r.params.W[k], 1e-8);
  EXPECT_NEAR(g.params.b[0], r.params.b[0], 1e-8);
}

TEST_F(CliTest, TrainIsDeterministic) {
  TrainConfig c;
  c.epochs = 20;
  c.seed = 3;
  ASSERT_EQ(cmd_train(c, dir_ / "a", out_, err_), kExitOk);
  ASSERT_EQ(cmd_train(c, dir_ / "b", out_, err_), kExitOk);
  EXPECT_EQ(slurp(dir_ / "a" / "loss_log.csv"), slurp(dir_ / "b" / "loss_log.csv"));
  EXPECT_EQ(slurp(dir_ / "a" / "params.csv"), slurp(dir_ / "b" / "params.csv"));
}

TEST_F(CliTest, ExplicitInitIsUsedByBothEngines) {
  TrainConfig c;
  c.epochs = 1;
  c.learning_rate = 1e-300;
  c.init = ClassifierParams::make(0.25, -0.5, 0.125);
  const Dataset d = load_dataset(c);
  for (Engine e : {Engine::Graph, Engine::Reference}) {
    c.engine = e;
    const TrainOutcome o = train(d, c);
    EXPECT_EQ(o.params.W[0], 0.25);
    EXPECT_EQ(o.params.W[1], -0.5);
    EXPECT_EQ(o.params.b[0], 0.125);
  }
}

TEST_F(CliTest, TrainConfigErrors) {
  TrainConfig c;
  c.epochs = 0;
  EXPECT_EQ(cmd_train(c, dir_, out_, err_), kExitConfig);
  c.epochs = 1;
  c.learning_rate = -1;
  EXPECT_EQ(cmd_train(c, dir_, out_, err_), kExitConfig);
  c.learning_rate = 0.1;
  c.data = SyntheticSource{3, 1.0};
  EXPECT_EQ(cmd_train(c, dir_, out_, err_), kExitConfig);
  EXPECT_FALSE(fs::exists(dir_ / "loss_log.csv"));
}

TEST_F(CliTest, TrainDataErrors) {
  TrainConfig c;
  c.epochs = 1;
  c.data = FileSource{dir_ / "missing.csv"};
  EXPECT_EQ(cmd_train(c, dir_, out_, err_), kExitData);
  std::ofstream(dir_ / "bad.csv") << "1,2,0\n3,4,7\n";
  c.data = FileSource{dir_ / "bad.csv"};
  EXPECT_EQ(cmd_train(c, dir_, out_, err_), kExitData);
  EXPECT_NE(err_.str().find("line 2"), std::string::npos);
  std::ofstream(dir_ / "one_class.csv") << "1,2,1\n3,4,1\n";
  c.data = FileSource{dir_ / "one_class.csv"};
  EXPECT_EQ(cmd_train(c, dir_, out_, err_), kExitData);
}

TEST_F(CliTest, GradcheckDefaultsPass) {
  EXPECT_EQ(cmd_gradcheck(42, 1e-6, 100, out_, err_), kExitOk) << err_.str();
  EXPECT_NE(out_.str().find("trials=100"), std::string::npos);
}

TEST_F(CliTest, GradcheckDegenerateStepFails) {
  EXPECT_EQ(cmd_gradcheck(42, 1e-300, 5, out_, err_), kExitCheckFailed);
  EXPECT_NE(err_.str().find("degenerate"), std::string::npos);
}

TEST_F(CliTest, GradcheckArguments) {
  EXPECT_EQ(cmd_gradcheck(42, 0.0, 5, out_, err_), kExitConfig);
  EXPECT_EQ(cmd_gradcheck(42, 1e-6, 0, out_, err_), kExitOk);
  EXPECT_NE(err_.str().find("warning"), std::string::npos);
}

TEST_F(CliTest, ExportDot) {
  ASSERT_EQ(cmd_export_dot(dir_ / "f.dot", false, out_, err_), kExitOk);
  ASSERT_EQ(cmd_export_dot(dir_ / "g.dot", true, out_, err_), kExitOk);
  auto count = [](const std::string& s, const std::regex& re) {
    std::istringstream lines(s);
    long n = 0;
    for (std::string line; std::getline(lines, line);) n += std::regex_match(line, re);
    return n;
  };
  const std::regex vertex("n[0-9]+ \\[label=.*\\];");
  const std::regex edge("n[0-9]+ -> n[0-9]+;");
  const std::string f = slurp(dir_ / "f.dot");
  const std::string g = slurp(dir_ / "g.dot");
  EXPECT_EQ(count(f, vertex), static_cast<long>(kClassifierForwardNodes));
  EXPECT_EQ(count(f, edge), static_cast<long>(kClassifierForwardEdges));
  EXPECT_GT(count(g, vertex), count(f, vertex));
  EXPECT_GT(count(g, edge), count(f, edge));
  EXPECT_EQ(cmd_export_dot(dir_ / "no_such_dir" / "x.dot", false, out_, err_), kExitData);
}

TEST_F(CliTest, GenDataRoundTrips) {
  ASSERT_EQ(cmd_gen_data(10, 4, 1.0, dir_ / "d.csv", out_, err_), kExitOk);
  const Dataset d = load_csv(dir_ / "d.csv");
  EXPECT_EQ(d.X, gen_synthetic(10, 4, 1.0).dataset.X);
  EXPECT_EQ(cmd_gen_data(9, 4, 1.0, dir_ / "e.csv", out_, err_), kExitConfig);
}

}  // namespace
}  // namespace minflow::cli
