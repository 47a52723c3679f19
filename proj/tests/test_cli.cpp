#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <sys/wait.h>
#include <unistd.h>

#include "behaviorkit/featurize.hpp"
#include "behaviorkit/timeline.hpp"

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("bkit_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run(const std::string& args) {
  const std::string cmd = std::string(BKIT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("cli: help and usage errors") {
  CHECK(run("--help") == 0);
  CHECK(run("gen") == 2);                       // missing required flags
  CHECK(run("nonexistent-subcommand") == 2);
  CHECK(run("gen --preset bogus --out /tmp/x.jsonl") == 3);  // bad preset value
}

TEST_CASE("cli: gen -> parse -> featurize -> train -> apply round trip") {
  TempDir dir;
  const auto corpus = (dir.path / "na.jsonl").string();
  CHECK(run("gen --preset neutral-ability --generator offline --seed 11 --out " + corpus) == 0);
  CHECK(fs::exists(corpus));
  {
    auto loaded = bkit::load_corpus(corpus);
    CHECK(loaded.samples.size() == 2000);
  }

  CHECK(run("parse --input " + corpus + " --strict-tags") == 0);

  const auto features = (dir.path / "features.csv").string();
  CHECK(run("featurize --input " + corpus + " --out " + features) == 0);
  {
    std::ifstream in(features);
    std::string header;
    std::getline(in, header);
    CHECK(header.find("turn_id,level,gender") == 0);
    CHECK(header.find("Defeated") != std::string::npos);
  }

  const auto report = (dir.path / "report.json").string();
  const auto model = (dir.path / "model.json").string();
  CHECK(run("train --input " + corpus + " --target level --trees 25 --seeds 4 --seed 2 --out " +
            report + " --model-out " + model) == 0);
  {
    auto doc = nlohmann::json::parse(slurp(report));
    CHECK(doc["mean_accuracy"].get<double>() >= 0.99);
    CHECK(doc["summary"].get<std::string>().find("mean accuracy of") == 0);
  }

  const auto apply_out = (dir.path / "apply.json").string();
  CHECK(run("apply --model " + model + " --input " + corpus + " --out " + apply_out) == 0);
  {
    auto doc = nlohmann::json::parse(slurp(apply_out));
    double sum = 0;
    for (const auto& p : doc["percentages"]) sum += p.get<double>();
    CHECK(std::fabs(sum - 100.0) <= 0.01);
    CHECK(doc["total"].get<long>() == 2000);
  }

  const auto shap_out = (dir.path / "shap.json").string();
  const auto plot_out = (dir.path / "shap.csv").string();
  CHECK(run("explain --model " + model + " --input " + corpus + " --out " + shap_out +
            " --plot-data " + plot_out + " --top 10") == 0);
  {
    auto doc = nlohmann::json::parse(slurp(shap_out));
    CHECK(doc["classes"].size() == 3);
    CHECK(doc["classes"][0]["ranking"].size() == 10);
    std::ifstream in(plot_out);
    std::string header;
    std::getline(in, header);
    CHECK(header == "class,rank,feature_index,feature_name,mean_abs_phi,direction");
  }
}

TEST_CASE("cli: remote generation requires endpoint settings") {
  TempDir dir;
  CHECK(run("gen --preset control --generator remote --out " + (dir.path / "x.jsonl").string()) ==
        2);
}

TEST_CASE("cli: custom preset builds from --trait/--size/--gendered") {
  TempDir dir;
  const auto out = (dir.path / "custom.jsonl").string();
  CHECK(run("gen --preset custom --out " + out) == 2);  // --trait missing
  CHECK(run("gen --preset custom --trait benevolence --size 36 --gendered --seed 5 --out " + out) ==
        0);
  auto corpus = bkit::load_corpus(out);
  REQUIRE(corpus.samples.size() == 36);
  CHECK(corpus.metadata.trait == bkit::Trait::Benevolence);
  CHECK(corpus.metadata.gendered);
  int male = 0;
  for (const auto& s : corpus.samples) male += s.gender == bkit::Gender::Male;
  CHECK(male == 18);

  // --fresh replaces the file instead of resuming it
  CHECK(run("gen --preset custom --trait benevolence --size 36 --gendered --seed 5 --fresh --out " +
            out) == 0);
  CHECK(bkit::load_corpus(out).samples.size() == 36);
}

TEST_CASE("cli: parse reports malformed lines with their number") {
  TempDir dir;
  const auto bad = dir.path / "bad.txt";
  {
    std::ofstream out(bad);
    out << "{f: confident} all good\n";
    out << "{f: broken\n";
  }
  const std::string cmd = std::string(BKIT_CLI_PATH) + " parse --input " + bad.string() +
                          " 2>" + (dir.path / "err.txt").string();
  const int status = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(status) == 3);
  const std::string err = slurp(dir.path / "err.txt");
  CHECK(err.find("line 2") != std::string::npos);
}

TEST_CASE("cli: timeline compiles a single turn") {
  TempDir dir;
  const auto out = (dir.path / "tl.json").string();
  CHECK(run("timeline --text \"{g: Clap} Well done.\" --out " + out) == 0);
  auto tl = bkit::import_timeline(out);
  REQUIRE(tl.events.size() == 1);
  CHECK(tl.events[0].name == "Clap");
  CHECK(tl.events[0].dur_ms == 2067);
}

TEST_CASE("cli: stats runs on a ratings file") {
  TempDir dir;
  const auto ratings = dir.path / "ratings.csv";
  {
    std::ofstream out(ratings);
    out << "participant,condition,item,response\n";
    for (int p = 0; p < 6; ++p) {
      for (int c = 0; c < 3; ++c) {
        for (const char* item : {"ability1", "ability2"}) {
          out << "p" << p << "," << bkit::to_string(static_cast<bkit::Level>(c)) << "," << item
              << "," << ((p + c) % 4 - 1) << "\n";
        }
      }
    }
  }
  const auto out_txt = (dir.path / "stats.txt").string();
  const auto out_json = (dir.path / "stats.json").string();
  CHECK(run("stats --ratings " + ratings.string() + " --out " + out_txt + " --json " + out_json) ==
        0);
  const std::string text = slurp(out_txt);
  CHECK(text.find("Mean Ability") != std::string::npos);
  CHECK(text.find("F(") != std::string::npos);
  auto doc = nlohmann::json::parse(slurp(out_json));
  CHECK(doc["anovas"].size() == 1);
}

TEST_CASE("cli: inputs are never mutated") {
  TempDir dir;
  const auto corpus = (dir.path / "c.jsonl").string();
  setenv("SOURCE_DATE_EPOCH", "0", 1);
  CHECK(run("gen --preset control --generator offline --seed 3 --out " + corpus) == 0);
  unsetenv("SOURCE_DATE_EPOCH");
  const std::string before = slurp(corpus);
  CHECK(run("parse --input " + corpus) == 0);
  CHECK(run("cooc --input " + corpus + " --min-count 3 --out " + (dir.path / "cooc.json").string()) ==
        0);
  CHECK(slurp(corpus) == before);
}
