#include <gtest/gtest.h>

#include <csignal>
#include <sstream>
#include <thread>

#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include "fairgate/cli.hpp"
#include "service_fixture.hpp"

namespace fairgate {
namespace {

using testing::read_text;
using testing::TempDir;
using testing::write_text;

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = cli::dispatch(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string write_corpus_file(const TempDir& dir, std::size_t per_market, std::uint64_t seed) {
  std::vector<LabeledReview> all;
  for (const auto& m : synthetic::markets()) {
    auto part = synthetic::generate(m, per_market, seed);
    all.insert(all.end(), part.begin(), part.end());
  }
  const auto path = dir.file("corpus.jsonl");
  save_corpus(path, all);
  return path;
}

std::string small_config(const TempDir& dir) {
  const auto path = dir.file("train.json");
  write_text(path, R"({"max_epochs": 8, "d_emb": 6, "d_hid": 6, "seed": 3})");
  return path;
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({"frobnicate"}).code, cli::kUsageError);
  EXPECT_EQ(run({}).code, cli::kUsageError);
  EXPECT_EQ(run({"kappa"}).code, cli::kUsageError);
  EXPECT_EQ(run({"benchmark", "--corpus", "x", "--format", "xml"}).code, cli::kUsageError);
  const auto help = run({"--help"});
  EXPECT_EQ(help.code, cli::kOk);
  EXPECT_NE(help.out.find("benchmark"), std::string::npos);
}

TEST(Cli, DomainErrorsExitOne) {
  TempDir dir;
  const auto r = run({"kappa", "--corpus", dir.file("missing.jsonl")});
  EXPECT_EQ(r.code, cli::kDomainError);
  EXPECT_NE(r.err.find("error:"), std::string::npos);

  write_text(dir.file("bad.jsonl"), "{\"id\": 1}\n");
  EXPECT_EQ(run({"ingest", "--corpus", dir.file("bad.jsonl")}).code, cli::kDomainError);

  const auto corpus = write_corpus_file(dir, 20, 1);
  EXPECT_EQ(run({"train", "--corpus", corpus, "--market", "uber", "--model", "svm", "--out",
                 dir.file("m.json")})
                .code,
            cli::kDomainError);
  write_text(dir.file("cfg.json"), R"({"learning_rate": 0.001, "momentum": 0.9})");
  EXPECT_EQ(run({"train", "--corpus", corpus, "--market", "uber", "--config", dir.file("cfg.json"),
                 "--out", dir.file("m.json")})
                .code,
            cli::kDomainError);
}

TEST(Cli, KappaReportsJson) {
  TempDir dir;
  std::vector<LabeledReview> reviews;
  // 10 items: both unfair 4, both fair 4, disagreements 2
  const auto add = [&](Label a, Label b) {
    reviews.push_back({"r" + std::to_string(reviews.size()), "uber", "text", {a, b}, std::nullopt});
  };
  for (int i = 0; i < 4; ++i) add(Label::unfair, Label::unfair);
  for (int i = 0; i < 4; ++i) add(Label::fair, Label::fair);
  add(Label::unfair, Label::fair);
  add(Label::fair, Label::unfair);
  save_corpus(dir.file("c.jsonl"), reviews);
  const auto r = run({"kappa", "--corpus", dir.file("c.jsonl")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  // po = 0.8, pe = 0.5 -> 0.6
  EXPECT_NEAR(j["observed_agreement"].get<double>(), 0.8, 1e-12);
  EXPECT_NEAR(j["kappa"].get<double>(), 0.6, 1e-12);
}

TEST(Cli, IngestSummarisesAndWritesResolvedCorpus) {
  TempDir dir;
  std::vector<LabeledReview> reviews{
      {"a", "uber", "one", {Label::unfair, Label::unfair}, std::nullopt},
      {"b", "uber", "two", {Label::unfair, Label::fair}, std::nullopt},
      {"c", "upwork", "three", {Label::fair, Label::fair}, std::nullopt}};
  save_corpus(dir.file("c.jsonl"), reviews);
  const auto r = run({"ingest", "--corpus", dir.file("c.jsonl"), "--out", dir.file("r.jsonl")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["reviews"], 3);
  EXPECT_EQ(j["resolved"], 2);
  EXPECT_EQ(j["needs_tiebreak"], nlohmann::json::array({"b"}));
  EXPECT_EQ(j["markets"]["uber"]["unfair"], 1);
  const auto resolved = load_corpus(dir.file("r.jsonl"));
  ASSERT_EQ(resolved.size(), 2u);
  EXPECT_EQ(resolved[1].label, Label::fair);

  const auto uber_only = run({"ingest", "--corpus", dir.file("c.jsonl"), "--market", "upwork"});
  EXPECT_EQ(nlohmann::json::parse(uber_only.out)["reviews"], 1);
}

TEST(Cli, SplitWritesThreeFilesReproducibly) {
  TempDir dir;
  const auto corpus = write_corpus_file(dir, 50, 2);
  const auto a = run({"split", "--corpus", corpus, "--market", "uber", "--out", dir.file("a"),
                      "--seed", "11"});
  const auto b = run({"split", "--corpus", corpus, "--market", "uber", "--out", dir.file("b"),
                      "--seed", "11"});
  ASSERT_EQ(a.code, cli::kOk) << a.err;
  ASSERT_EQ(b.code, cli::kOk) << b.err;
  std::size_t total = 0;
  for (const char* f : {"train.jsonl", "test.jsonl", "validation.jsonl"}) {
    const auto bytes = read_text(dir.file(std::string("a/") + f));
    EXPECT_EQ(bytes, read_text(dir.file(std::string("b/") + f))) << f;
    total += load_corpus(dir.file(std::string("a/") + f)).size();
  }
  EXPECT_EQ(total, 50u);
  EXPECT_EQ(load_corpus(dir.file("a/train.jsonl")).size(), 40u);
  const auto j = nlohmann::json::parse(a.out);
  EXPECT_EQ(j["train"]["fair"].get<int>() + j["train"]["unfair"].get<int>(), 40);
}

TEST(Cli, TrainWritesModelAndHistory) {
  TempDir dir;
  const auto corpus = write_corpus_file(dir, 60, 4);
  const auto cfg = small_config(dir);
  for (const char* kind : {"word-lr", "bigru"}) {
    const auto model = dir.file(std::string(kind) + ".json");
    const auto r = run({"train", "--corpus", corpus, "--market", "grubhub", "--model", kind,
                        "--config", cfg, "--out", model});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["kind"], kind);
    EXPECT_GE(j["best_epoch"].get<int>(), 1);

    const auto saved = load_model(model);
    EXPECT_EQ(saved.market, "grubhub");
    EXPECT_EQ(to_string(saved.classifier.kind()), kind);
    const auto history = read_text(dir.file(std::string(kind) + ".history.csv"));
    EXPECT_EQ(history.rfind("epoch,train_loss,val_loss,val_acc\n", 0), 0u);
    const auto lines = std::count(history.begin(), history.end(), '\n');
    EXPECT_EQ(lines, j["stopped_epoch"].get<int>() + 1);
  }

  // same seed, same bytes; different seed, different model
  const auto again = dir.file("again.json");
  ASSERT_EQ(run({"train", "--corpus", corpus, "--market", "grubhub", "--model", "word-lr",
                 "--config", cfg, "--out", again})
                .code,
            cli::kOk);
  EXPECT_EQ(read_text(again), read_text(dir.file("word-lr.json")));
  const auto other = dir.file("other.json");
  ASSERT_EQ(run({"train", "--corpus", corpus, "--market", "grubhub", "--model", "word-lr",
                 "--config", cfg, "--seed", "99", "--out", other})
                .code,
            cli::kOk);
  EXPECT_NE(read_text(other), read_text(again));
  EXPECT_EQ(load_model(other).config.seed, 99u);
}

TEST(Cli, BenchmarkRendersEveryCell) {
  TempDir dir;
  const auto corpus = write_corpus_file(dir, 40, 6);
  const auto cfg = small_config(dir);
  const auto r = run({"benchmark", "--corpus", corpus, "--config", cfg, "--model", "word-lr",
                      "--model", "char-lr", "--format", "csv", "--seed", "2"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const auto rows = parse_report_csv(r.out);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].market, "grubhub");
  EXPECT_EQ(rows[1].kind, ModelKind::char_lr);

  ASSERT_EQ(run({"benchmark", "--corpus", corpus, "--config", cfg, "--model", "word-lr", "--model",
                 "char-lr", "--format", "csv", "--seed", "2", "--out", dir.file("r.csv")})
                .code,
            cli::kOk);
  EXPECT_EQ(read_text(dir.file("r.csv")), r.out);
}

TEST(Cli, StatsOverLog) {
  testing::ServiceFixture fx;
  {
    auto svc = fx.service();
    svc->record_attempt("a", "upwork", "rude", false);
    svc->record_attempt("a", "upwork", "polite", true);
    svc->record_attempt("c", "upwork", "rude", true);
  }
  const auto r = run({"stats", "--log", fx.log_path()});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["corrections"]["sessions_initially_unfair"], 2);
  EXPECT_NEAR(j["corrections"]["correction_rate"].get<double>(), 0.5, 1e-12);
  ASSERT_EQ(j["moderation_flags"].size(), 1u);
  EXPECT_EQ(j["moderation_flags"][0]["session_id"], "c");

  const auto filtered = nlohmann::json::parse(run({"stats", "--log", fx.log_path(), "--market",
                                                   "uber"})
                                                  .out);
  EXPECT_EQ(filtered["corrections"]["sessions_total"], 0);
}

int free_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

// Runs the real executable and talks to it over HTTP.
TEST(Cli, ServeAnswersRequests) {
  testing::ServiceFixture fx;
  const int port = free_port();
  const std::string port_arg = std::to_string(port);
  const pid_t pid = ::fork();
  ASSERT_GE(pid, 0);
  if (pid == 0) {
    ::execl(FAIRGATE_CLI_PATH, "fairgate", "serve", "--config", fx.config_path.c_str(), "--port",
            port_arg.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  httplib::Client client("127.0.0.1", port);
  httplib::Result res;
  for (int i = 0; i < 100 && !res; ++i) {
    res = client.Get("/v1/markets");
    if (!res) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  ASSERT_TRUE(res) << "server did not come up";
  EXPECT_EQ(res->status, 200);
  const auto v = client.Post("/v1/validate", R"({"market":"uber","text":"late again"})",
                             "application/json");
  ASSERT_TRUE(v);
  EXPECT_EQ(nlohmann::json::parse(v->body)["p_unfair"], 0.5);
  ::kill(pid, SIGTERM);
  int status = 0;
  ::waitpid(pid, &status, 0);
}

}  // namespace
}  // namespace fairgate
