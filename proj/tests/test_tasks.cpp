#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "maltml/errors.hpp"
#include "maltml/rng.hpp"
#include "maltml/tasks.hpp"

using namespace maltml;

TEST_CASE("family sampling") {
  SUBCASE("10k draws stay in [0, pi] with mean near pi/2") {
    Rng rng = derive_rng(1001, {streams::kFamilies});
    double sum = 0.0;
    for (int i = 0; i < 10000; ++i) {
      FamilyParams f = sample_family(rng);
      REQUIRE(f.phase >= kPhaseLo);
      REQUIRE(f.phase <= kPhaseHi);
      sum += f.phase;
    }
    CHECK(sum / 10000.0 == doctest::Approx(kPhaseHi / 2.0).epsilon(0.05 / (kPhaseHi / 2.0)));
  }
  SUBCASE("fixed seed reproduces the sequence") {
    Rng a = derive_rng(7, {streams::kFamilies});
    Rng b = derive_rng(7, {streams::kFamilies});
    for (int i = 0; i < 100; ++i) CHECK(sample_family(a).phase == sample_family(b).phase);
  }
  SUBCASE("distinct seeds differ") {
    Rng a = derive_rng(7, {streams::kFamilies});
    Rng b = derive_rng(8, {streams::kFamilies});
    CHECK(sample_family(a).phase != sample_family(b).phase);
  }
}

TEST_CASE("task sampling") {
  SUBCASE("10k draws stay in [0.1, 5.0] with mean near 2.55") {
    Rng rng = derive_rng(1002, {streams::kTasks});
    FamilyParams family{1.0};
    double sum = 0.0;
    for (int i = 0; i < 10000; ++i) {
      Task t = sample_task(family, rng);
      REQUIRE(t.amplitude >= kAmplitudeLo);
      REQUIRE(t.amplitude <= kAmplitudeHi);
      sum += t.amplitude;
    }
    CHECK(sum / 10000.0 == doctest::Approx(2.55).epsilon(0.05 / 2.55));
  }
  SUBCASE("task inherits the family phase") {
    Rng rng = derive_rng(3, {streams::kTasks});
    for (int i = 0; i < 50; ++i) {
      FamilyParams family{rng.uniform(kPhaseLo, kPhaseHi)};
      CHECK(sample_task(family, rng).phase == family.phase);
    }
  }
  SUBCASE("fixed seed gives identical task") {
    Rng a = derive_rng(5, {streams::kTasks});
    Rng b = derive_rng(5, {streams::kTasks});
    FamilyParams family{0.5};
    CHECK(sample_task(family, a).amplitude == sample_task(family, b).amplitude);
  }
}

TEST_CASE("draw_samples") {
  SUBCASE("sine identities") {
    Task unit{1.0, 0.0};
    CHECK(unit.eval(kPhaseHi / 2.0) == doctest::Approx(1.0).epsilon(1e-12));
    Task shifted{2.0, kPhaseHi / 2.0};
    CHECK(shifted.eval(0.0) == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("targets follow amplitude * sin(x + phase) exactly") {
    Rng rng = derive_rng(9, {streams::kSamples});
    Task task{3.3, 0.9};
    SampleSet set = draw_samples(task, 200, SampleRole::Support, rng);
    REQUIRE(set.size() == 200);
    for (std::size_t i = 0; i < set.size(); ++i) {
      REQUIRE(set.xs[i] >= kInputLo);
      REQUIRE(set.xs[i] <= kInputHi);
      CHECK(set.ys[i] == task.amplitude * std::sin(set.xs[i] + task.phase));
    }
  }
  SUBCASE("small amplitude bounds the targets") {
    Rng rng = derive_rng(10, {streams::kSamples});
    Task task{0.1, 2.0};
    SampleSet set = draw_samples(task, 100, SampleRole::Query, rng);
    for (double y : set.ys) CHECK(std::abs(y) <= 0.1);
  }
  SUBCASE("empty draw rejected") {
    Rng rng = derive_rng(11, {streams::kSamples});
    CHECK_THROWS_AS(draw_samples(Task{}, 0, SampleRole::Support, rng), ConfigError);
  }
  SUBCASE("support and query use fresh x values") {
    Rng rng = derive_rng(12, {streams::kSamples});
    Task task{1.0, 0.0};
    SampleSet support = draw_samples(task, 10, SampleRole::Support, rng);
    SampleSet query = draw_samples(task, 10, SampleRole::Query, rng);
    CHECK(support.xs != query.xs);
  }
}

TEST_CASE("stream derivation isolates purposes") {
  // Same master seed: different purposes give different draws, and draws for
  // one purpose do not depend on how much another stream consumed.
  Rng fam1 = derive_rng(42, {streams::kFamilies});
  Rng tasks1 = derive_rng(42, {streams::kTasks});
  CHECK(fam1.uniform(0, 1) != tasks1.uniform(0, 1));

  Rng a = derive_rng(42, {streams::kSamples, 3});
  Rng burn = derive_rng(42, {streams::kFamilies});
  for (int i = 0; i < 1000; ++i) burn.next_u64();
  Rng b = derive_rng(42, {streams::kSamples, 3});
  for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("linspace covers the interval inclusively") {
  std::vector<double> xs = linspace(-5.0, 5.0, 100);
  REQUIRE(xs.size() == 100);
  CHECK(xs.front() == -5.0);
  CHECK(xs.back() == 5.0);
  for (std::size_t i = 1; i < xs.size(); ++i) CHECK(xs[i] > xs[i - 1]);
}
