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

#include <cmath>

#include "lgseg/config.hpp"
#include "lgseg/error.hpp"
#include "lgseg/experiment.hpp"

using namespace lgseg;

TEST_CASE("key=value parsing") {
  const KeyValues kv = KeyValues::parse("# comment\n\n lr = 0.1 \nepochs=5\nlr=0.2\nseeds=1, 2,3\nflag=on\n");
  CHECK(kv.number("lr", 0) == 0.2);
  CHECK(kv.integer("epochs", 0) == 5);
  CHECK(kv.integers("seeds", {}) == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(kv.flag("flag", false));
  CHECK(kv.number("missing", 7.5) == 7.5);
  CHECK(kv.entries().size() == 4);

  CHECK_THROWS_AS(KeyValues::parse("novalue\n"), FormatError);
  CHECK_THROWS_AS(KeyValues::parse("=1\n"), FormatError);
  const KeyValues bad = KeyValues::parse("x=abc\nb=maybe\nn=-3\n");
  CHECK_THROWS_AS(bad.number("x", 0), Error);
  CHECK_THROWS_AS(bad.flag("b", false), FormatError);
  CHECK_THROWS_AS(bad.integer("n", 0), Error);

  KeyValues base = KeyValues::parse("a=1\nb=2\n");
  base.merge(KeyValues::parse("b=3\nc=4\n"));
  CHECK(base.format() == "a=1\nb=3\nc=4\n");
  const std::string_view known[] = {"a", "b"};
  CHECK(base.unknown(known) == std::vector<std::string>{"c"});
}

TEST_CASE("shortest round-trip doubles") {
  CHECK(format_double(20.0) == "20");
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(0.05 * 0.3) == "0.015");
  for (double v : {1.0 / 3.0, 6.02e23, -1e-300, 0.0}) CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("describe and apply round trip") {
  TrainConfig cfg;
  cfg.lr = 0.037;
  cfg.epochs = 13;
  cfg.milestones = {3, 9};
  cfg.loss = ClassLoss::weighted_ce;
  cfg.use_color = false;
  cfg.augment = true;
  cfg.augment_cfg.n_samples = 3;
  cfg.augment_cfg.structural_ids = {0, 1};
  const KeyValues kv = describe(cfg);
  TrainConfig back;
  apply(kv, back);
  CHECK(describe(back).format() == kv.format());
  CHECK(back.milestones == cfg.milestones);
  CHECK(back.loss == ClassLoss::weighted_ce);
  CHECK(back.augment_cfg.structural_ids == cfg.augment_cfg.structural_ids);
  for (const auto& [k, v] : kv.entries()) {
    const auto keys = train_keys();
    CHECK(std::find(keys.begin(), keys.end(), k) != keys.end());
  }

  SyntheticSpec spec;
  spec.density = 123.5;
  spec.primitives = {Primitive::sphere};
  SyntheticSpec spec_back;
  apply(describe(spec), spec_back);
  CHECK(describe(spec_back).format() == describe(spec).format());
  CHECK(spec_back.primitives == spec.primitives);
}

TEST_CASE("experiment configuration") {
  CHECK(parse_arm("ours") == Arm{true, ClassLoss::cfocal, true});
  CHECK(parse_arm("pretrain+cfocal+augment").label() == "ours");
  CHECK(parse_arm("scratch+ce").name() == "scratch+ce");
  CHECK(parse_arm("scratch+ce").label() == "scratch+ce");
  CHECK_THROWS_AS(parse_arm("scratch"), UsageError);
  CHECK_THROWS_AS(parse_arm("warm+ce"), UsageError);
  CHECK_THROWS_AS(parse_arm("scratch+ce+rotate"), UsageError);

  const ExperimentConfig d = default_experiment();
  CHECK(d.arms.size() == 3);
  CHECK(d.seeds.size() == 5);

  const ExperimentConfig e = experiment_config(
      KeyValues::parse("seeds=7\narms=scratch+ce,ours\nfinetune.epochs=20\nlr=0.01\npretrain.lr=0.02\n"));
  CHECK(e.seeds == std::vector<std::uint64_t>{7});
  CHECK(e.arms.size() == 2);
  CHECK(e.finetune.epochs == 20);
  CHECK(e.finetune.milestones == default_milestones(20));
  CHECK(e.finetune.lr == 0.01);
  CHECK(e.pretrain.lr == 0.02);
  CHECK_THROWS_AS(experiment_config(KeyValues::parse("colour=1\n")), UsageError);
  CHECK_THROWS_AS(experiment_config(KeyValues::parse("fraction=0\n")), UsageError);
  CHECK_THROWS_AS(experiment_config(KeyValues::parse("seeds=\n")), UsageError);
}
