// Copyright 2026 The lgseg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "lgseg/cli.hpp"
#include "lgseg/embed.hpp"
#include "lgseg/scene.hpp"

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = lgseg::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("pipeline through the command line") {
  fixture::TempDir dir("cli");
  const std::string corpus = (dir / "corpus").string();
  const std::string again = (dir / "again").string();
  const std::vector<std::string> gen{"gen", "--out", corpus, "--scenes", "2", "--seed", "4", "--set", "density=150",
                                     "--set", "n_categories=6"};
  REQUIRE(run(gen).code == 0);
  auto gen2 = gen;
  gen2[2] = again;
  REQUIRE(run(gen2).code == 0);
  for (const char* f : {"scene_0000.sc3d", "scene_0001.sc3d", "catalog.tsv"}) {
    CHECK(slurp(dir / "corpus" / f) == slurp(dir / "again" / f));
    CHECK(!slurp(dir / "corpus" / f).empty());
  }
  const std::string catalog = (dir / "corpus" / "catalog.tsv").string();

  const Result stats = run({"stats", "--scenes", corpus, "--catalog", catalog});
  CHECK(stats.code == 0);
  CHECK(stats.out.find("floor") != std::string::npos);

  const std::string ckpt = (dir / "model.ckpt").string();
  REQUIRE(run({"finetune", "--scenes", corpus, "--catalog", catalog, "--out", ckpt, "--set", "epochs=2", "--set",
               "loss=ce", "--set", "resolution=0.1", "--set", "hidden=16"})
              .code == 0);
  CHECK(std::filesystem::exists(ckpt + ".manifest"));

  const std::string preds = (dir / "preds").string();
  REQUIRE(run({"predict", "--checkpoint", ckpt, "--scenes", corpus, "--out", preds, "--set", "resolution=0.1"}).code ==
          0);
  const Result ev = run({"eval", "--gt", corpus, "--pred", preds, "--catalog", catalog});
  CHECK(ev.code == 0);
  CHECK(ev.out.find("mean\tall") != std::string::npos);

  // Ground truth scored against itself.
  const std::string truth = (dir / "truth").string();
  std::filesystem::create_directories(truth);
  for (const char* name : {"scene_0000", "scene_0001"}) {
    const lgseg::Scene s = lgseg::read_scene(dir / "corpus" / (std::string(name) + ".sc3d"));
    std::vector<lgseg::CategoryId> labels;
    for (const auto& p : s.points) labels.push_back(p.semantic);
    lgseg::write_predictions(dir / "truth" / (std::string(name) + ".sprd"), labels);
  }
  const std::string report = (dir / "report").string();
  const Result perfect = run({"eval", "--gt", corpus, "--pred", truth, "--catalog", catalog, "--out", report});
  CHECK(perfect.code == 0);
  CHECK(perfect.out.find("mean\tall\t1.000000") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "report" / "report.json"));

  const std::string masked = (dir / "masked").string();
  CHECK(run({"annotate", "--scenes", corpus, "--fraction", "0.1", "--out", masked}).code == 0);
  CHECK(std::filesystem::exists(dir / "masked" / "scene_0000.sc3d"));

  const std::string emb = (dir / "anchors.emb").string();
  CHECK(run({"embed-import", "--synthetic", "16", "--catalog", catalog, "--out", emb}).code == 0);
  const std::string small = (dir / "small.emb").string();
  CHECK(run({"pca", "--embeddings", emb, "--dim", "4", "--out", small}).code == 0);
  CHECK(lgseg::read_embeddings(small).vectors.cols() == 4);
}

TEST_CASE("exit codes") {
  fixture::TempDir dir("cli_errors");
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"eval", "--gt", "x.sc3d"}).code == 1);
  CHECK(run({"--version"}).code == 0);
  CHECK(run({"gen", "--out", dir.path().string(), "--set", "colour=red"}).code == 1);

  {
    std::ofstream bad(dir / "bad.sc3d", std::ios::binary);
    bad << "NOPE0000000000000000";
  }
  {
    std::ofstream cat(dir / "cat.tsv");
    cat << "0\tfloor\t1\t1\thead\n";
  }
  const Result r = run({"stats", "--scenes", (dir / "bad.sc3d").string(), "--catalog", (dir / "cat.tsv").string()});
  CHECK(r.code == 2);
  CHECK(!r.err.empty());
  CHECK(run({"stats", "--scenes", (dir / "missing.sc3d").string(), "--catalog", (dir / "cat.tsv").string()}).code ==
        2);
}

TEST_CASE("tiny experiment") {
  fixture::TempDir dir("cli_experiment");
  const std::vector<std::string> args{"experiment",         "--out",
                                      (dir / "a").string(), "--set",
                                      "seeds=0,1",          "--set",
                                      "arms=scratch+ce,ours", "--set",
                                      "train_scenes=3",     "--set",
                                      "val_scenes=1",       "--set",
                                      "density=100",        "--set",
                                      "n_categories=8",     "--set",
                                      "epochs=2",           "--set",
                                      "cells_per_scene=32", "--set",
                                      "resolution=0.1",     "--set",
                                      "hidden=16"};
  const Result a = run(args);
  REQUIRE(a.code == 0);
  auto b_args = args;
  b_args[2] = (dir / "b").string();
  REQUIRE(run(b_args).code == 0);
  const std::string table = slurp(dir / "a" / "table.txt");
  CHECK(table == slurp(dir / "b" / "table.txt"));
  CHECK(slurp(dir / "a" / "results.json") == slurp(dir / "b" / "results.json"));
  CHECK(table.find("ours") != std::string::npos);
  CHECK(table.find("scratch+ce") != std::string::npos);
  std::size_t runs = 0;
  for (std::size_t pos = 0; (pos = slurp(dir / "a" / "results.json").find("\"seed\"", pos)) != std::string::npos; ++pos)
    ++runs;
  CHECK(runs == 4);
}
