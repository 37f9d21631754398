#include <cmath>

#include "doctest.h"

#include "../support/builders.hpp"
#include "../support/oracles.hpp"
#include "hinet/config.hpp"

using namespace hinet;
using namespace hinet::testing;

namespace {

// Root node with one numeric attribute x and a label y = 3x (+ optional
// intercept), plus a text tag for one-hot tests.
GraphFixture regression_fixture(std::size_t n, double slope, double intercept,
                                std::uint64_t seed) {
  GraphFixture fx;
  NodeTypeId roots = fx.schema->declare_node("roots");
  fx.schema->declare_property(roots, "x", ValueKind::Real, false, "attr(x)");
  fx.schema->declare_property(roots, "y", ValueKind::Real, false, "attr(y)");
  fx.freeze();
  Rng rng(seed);
  std::vector<NodeInstance> instances;
  for (std::size_t i = 0; i < n; ++i) {
    double x = rng.normal();
    instances.push_back(make_instance(
        "r" + std::to_string(i),
        {{"x", Value::real(x)}, {"y", Value::real(slope * x + intercept)}}));
  }
  fx.graph->populate(roots, std::move(instances));
  fx.graph->seal();
  return fx;
}

LearnableSpec simple_spec(Task task = Task::Regression) {
  LearnableSpec spec;
  spec.name = "simple";
  spec.root = "roots";
  spec.task = task;
  spec.label_plan = parse_query("roots() prop y");
  FeatureQuerySpec f;
  f.name = "x";
  f.plan = parse_query("roots() prop x");
  spec.features.push_back(std::move(f));
  return spec;
}

}  // namespace

TEST_CASE("lexicon reserves bias and freezes") {
  Lexicon lex;
  CHECK(lex.size() == 1);
  CHECK(lex.lookup("__bias__") == Lexicon::kBias);
  auto a = lex.lookup_or_add("f1");
  REQUIRE(a);
  CHECK(*a == 1);
  lex.freeze();
  CHECK_FALSE(lex.lookup_or_add("f2"));
  CHECK(lex.lookup_or_add("f1") == a);
  CHECK(lex.size() == 2);
}

TEST_CASE("encoding rules") {
  GraphFixture fx;
  NodeTypeId roots = fx.schema->declare_node("roots");
  fx.schema->declare_property(roots, "expr", ValueKind::List, true,
                              "attr(expr)", ValueKind::Real);
  fx.schema->declare_property(roots, "bag", ValueKind::List, false,
                              "attr(bag)", ValueKind::Text);
  fx.schema->declare_property(roots, "posTag", ValueKind::Text, false,
                              "attr(posTag)");
  fx.schema->declare_property(roots, "flag", ValueKind::Bool, false,
                              "attr(flag)");
  fx.schema->declare_property(roots, "unorderedNums", ValueKind::List, false,
                              "attr(unorderedNums)", ValueKind::Real);
  fx.freeze();
  Value expr = Value::list(ValueKind::Real,
                           {Value::real(0.5), Value::real(1.2)}, true);
  Value bag = Value::list(
      ValueKind::Text,
      {Value::text("A"), Value::text("B"), Value::text("A")});
  Value nums = Value::list(ValueKind::Real, {Value::real(1), Value::real(2)});
  fx.graph->populate(roots, {make_instance("r1", {{"expr", expr},
                                                  {"bag", bag},
                                                  {"posTag", Value::text("NN")},
                                                  {"flag", Value::boolean(true)},
                                                  {"unorderedNums", nums}})});
  fx.graph->seal();
  const NodeInstance& r1 = fx.graph->instances_of(roots)[0];

  auto encode_one = [&](const char* name, const char* query, Lexicon& lex) {
    LearnableSpec spec;
    spec.root = "roots";
    spec.label_plan = parse_query("roots() prop posTag");
    FeatureQuerySpec f;
    f.name = name;
    f.plan = parse_query(query);
    spec.features.push_back(std::move(f));
    return encode(*fx.graph, r1, spec, lex);
  };

  SUBCASE("ordered numeric list becomes positional features") {
    Lexicon lex;
    FeatureVector fv = encode_one("q", "roots() prop expr", lex);
    REQUIRE(fv.entries.size() == 3);
    CHECK(fv.entries[0] == std::pair<std::uint32_t, double>{0, 1.0});
    CHECK(lex.lookup("q[0]"));
    CHECK(lex.lookup("q[1]"));
    CHECK(fv.entries[1].second == doctest::Approx(0.5));
    CHECK(fv.entries[2].second == doctest::Approx(1.2));
  }
  SUBCASE("text one-hot") {
    Lexicon lex;
    FeatureVector fv = encode_one("posTag", "roots() prop posTag", lex);
    REQUIRE(fv.entries.size() == 2);
    REQUIRE(lex.lookup("posTag=NN"));
    CHECK(fv.entries[1].first == *lex.lookup("posTag=NN"));
    CHECK(fv.entries[1].second == 1.0);
  }
  SUBCASE("unordered text list becomes multiplicity bag") {
    Lexicon lex;
    FeatureVector fv = encode_one("tags", "roots() prop bag", lex);
    REQUIRE(lex.lookup("tags=A"));
    double a_count = 0;
    for (auto [idx, v] : fv.entries)
      if (idx == *lex.lookup("tags=A")) a_count = v;
    CHECK(a_count == 2.0);
  }
  SUBCASE("bool scalar maps to 0/1") {
    Lexicon lex;
    FeatureVector fv = encode_one("flag", "roots() prop flag", lex);
    REQUIRE(fv.entries.size() == 2);
    CHECK(fv.entries[1].second == 1.0);
  }
  SUBCASE("unordered numeric lists are rejected") {
    Lexicon lex;
    try {
      encode_one("nums", "roots() prop unorderedNums", lex);
      FAIL("expected KindMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::KindMismatch);
    }
  }
  SUBCASE("frozen lexicon drops unseen names") {
    Lexicon lex;
    lex.freeze();
    FeatureVector fv = encode_one("posTag", "roots() prop posTag", lex);
    REQUIRE(fv.entries.size() == 1);  // bias only
    CHECK(fv.entries[0].first == Lexicon::kBias);
  }
  SUBCASE("encoding is deterministic") {
    Lexicon lex;
    FeatureVector a = encode_one("q", "roots() prop expr", lex);
    FeatureVector b = encode_one("q", "roots() prop expr", lex);
    CHECK(a.entries == b.entries);
  }
}

TEST_CASE("build_examples applies filters and counts skips") {
  GraphFixture fx;
  NodeTypeId roots = fx.schema->declare_node("roots");
  fx.schema->declare_property(roots, "y", ValueKind::Real, false, "attr(y)");
  fx.schema->declare_property(roots, "keep", ValueKind::Bool, false,
                              "attr(keep)");
  fx.freeze();
  std::vector<NodeInstance> instances;
  for (int i = 0; i < 5; ++i) {
    NodeInstance inst = make_instance("r" + std::to_string(i));
    if (i != 2) inst.attrs.emplace("y", Value::real(i));  // r2 lacks the label
    inst.attrs.emplace("keep", Value::boolean(i % 2 == 0));
    instances.push_back(std::move(inst));
  }
  fx.graph->populate(roots, std::move(instances));
  fx.graph->seal();

  LearnableSpec spec;
  spec.root = "roots";
  spec.task = Task::Regression;
  spec.label_plan = parse_query("roots() prop y");

  SUBCASE("default filter keeps all; missing labels are skipped") {
    Lexicon lex;
    BuildResult out = build_examples(*fx.graph, spec, lex);
    CHECK(out.examples.size() == 4);
    CHECK(out.skipped == 1);
  }
  SUBCASE("example filter keeps the selected subset") {
    spec.filter_plan = parse_query("roots() prop keep");
    Lexicon lex;
    BuildResult out = build_examples(*fx.graph, spec, lex);
    CHECK(out.examples.size() == 2);  // r0, r4 (r2 lacks label)
    CHECK(out.skipped == 1);
  }
  SUBCASE("explicit id list") {
    Lexicon lex;
    std::vector<std::string> ids{"r1", "r3"};
    BuildResult out = build_examples(*fx.graph, spec, lex, &ids);
    CHECK(out.examples.size() == 2);
  }
}

TEST_CASE("sgd recovers a noiseless line to the least-squares solution") {
  GraphFixture fx = regression_fixture(200, 3.0, 0.0, 5);
  Learner learner(simple_spec());
  auto report = learner.learn(*fx.graph);
  CHECK(report.examples == 200);
  const std::vector<double>& w = learner.model().weights;
  auto x_index = learner.lexicon().lookup("x");
  REQUIRE(x_index);
  CHECK(std::abs(w[*x_index] - 3.0) <= 1e-2);
  CHECK(std::abs(w[Lexicon::kBias]) <= 1e-2);

  SUBCASE("matches the closed-form oracle") {
    std::vector<std::vector<double>> rows;
    std::vector<double> y;
    for (const NodeInstance& inst : fx.graph->instances_of(
             fx.schema->node_id_or_throw("roots"))) {
      rows.push_back({1.0, inst.attr("x")->as_real()});
      y.push_back(inst.attr("y")->as_real());
    }
    std::vector<double> ls = least_squares(rows, y);
    CHECK(std::abs(w[Lexicon::kBias] - ls[0]) <= 1e-2);
    CHECK(std::abs(w[*x_index] - ls[1]) <= 1e-2);
  }
}

TEST_CASE("zero epochs gives the zero model") {
  GraphFixture fx = regression_fixture(20, 2.0, 1.0, 6);
  LearnableSpec spec = simple_spec();
  spec.sgd.epochs = 0;
  Learner learner(spec);
  learner.learn(*fx.graph);
  const NodeInstance& r0 =
      fx.graph->instances_of(fx.schema->node_id_or_throw("roots"))[0];
  CHECK(learner.predict(*fx.graph, r0).as_real() == 0.0);
}

TEST_CASE("training is bit-deterministic for a fixed seed") {
  GraphFixture fx = regression_fixture(50, -1.5, 0.25, 7);
  Learner a(simple_spec());
  Learner b(simple_spec());
  a.learn(*fx.graph);
  b.learn(*fx.graph);
  REQUIRE(a.model().weights.size() == b.model().weights.size());
  for (std::size_t i = 0; i < a.model().weights.size(); ++i)
    CHECK(a.model().weights[i] == b.model().weights[i]);
}

TEST_CASE("loss gradients match central finite differences") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t d = 1 + rng.below(8);
    std::vector<double> w(d);
    for (double& wi : w) wi = rng.normal();
    FeatureVector fv;
    for (std::uint32_t i = 0; i < d; ++i)
      if (i == 0 || rng.uniform() < 0.7)
        fv.entries.push_back({i, rng.normal()});
    double y = rng.normal();
    double target = rng.uniform() < 0.5 ? 0.0 : 1.0;

    std::vector<double> gs = squared_loss_gradient(w, fv, y);
    std::vector<double> gl = logistic_loss_gradient(w, fv, target);
    const double eps = 1e-5;
    for (std::size_t i = 0; i < d; ++i) {
      std::vector<double> hi = w, lo = w;
      hi[i] += eps;
      lo[i] -= eps;
      double fd_s =
          (squared_loss(hi, fv, y) - squared_loss(lo, fv, y)) / (2 * eps);
      double fd_l = (logistic_loss(hi, fv, target) -
                     logistic_loss(lo, fv, target)) /
                    (2 * eps);
      double denom_s = std::max({std::abs(fd_s), std::abs(gs[i]), 1e-8});
      double denom_l = std::max({std::abs(fd_l), std::abs(gl[i]), 1e-8});
      CHECK(std::abs(fd_s - gs[i]) / denom_s <= 1e-5);
      CHECK(std::abs(fd_l - gl[i]) / denom_l <= 1e-5);
    }
  }
}

TEST_CASE("predict is the dot product for regression") {
  LinearModel model;
  model.task = Task::Regression;
  model.weights = {1.0, 2.0};
  model.trained = true;
  FeatureVector fv;
  fv.entries = {{0, 1.0}, {1, 3.0}};
  CHECK(predict_score(model, fv) == doctest::Approx(7.0));
}

TEST_CASE("classification ties break toward the lexically smaller label") {
  LinearModel model;
  model.task = Task::Classification;
  model.labels = {"A", "B"};
  model.label_weights = {{0.5}, {0.5}};
  model.trained = true;
  FeatureVector fv;
  fv.entries = {{0, 1.0}};
  CHECK(predict_label(model, fv) == "A");
}

TEST_CASE("predictions written back to the graph read back identically") {
  GraphFixture fx = regression_fixture(10, 1.0, 0.5, 8);
  Learner learner(simple_spec());
  learner.learn(*fx.graph);
  NodeTypeId roots = fx.schema->node_id_or_throw("roots");
  std::vector<std::pair<std::string, Value>> predictions;
  for (const NodeInstance& inst : fx.graph->instances_of(roots))
    predictions.push_back({inst.id, learner.predict(*fx.graph, inst)});
  fx.graph->write_prediction(roots, "yhat", predictions);
  QueryResult r = evaluate(parse_query("roots() prop yhat"), *fx.graph);
  const ValueSequence& seq = std::get<ValueSequence>(r);
  REQUIRE(seq.size() == 10);
  for (std::size_t i = 0; i < 10; ++i)
    CHECK(seq.values[i].as_real() ==
          predictions[i].second.as_real());
}

TEST_CASE("continuous evaluation") {
  auto example = [](double y, double x) {
    LearningExample ex;
    ex.label = Value::real(y);
    ex.features.entries = {{0, x}};
    return ex;
  };
  LinearModel identity;
  identity.task = Task::Regression;
  identity.weights = {1.0};
  identity.trained = true;

  SUBCASE("perfect predictions") {
    std::vector<LearningExample> xs{example(1, 1), example(2, 2),
                                    example(3, 3)};
    EvalReport r = test_continuous(identity, xs);
    CHECK(r.ssr == 0.0);
    REQUIRE(r.pearson);
    CHECK(*r.pearson == doctest::Approx(1.0));
  }
  SUBCASE("negated predictions give r = -1") {
    std::vector<LearningExample> xs{example(1, -1), example(2, -2),
                                    example(3, -3)};
    EvalReport r = test_continuous(identity, xs);
    REQUIRE(r.pearson);
    CHECK(*r.pearson == doctest::Approx(-1.0));
  }
  SUBCASE("agrees with the definitional oracle on random vectors") {
    Rng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<LearningExample> xs;
      std::vector<double> y, yhat;
      for (int i = 0; i < 20; ++i) {
        double yi = rng.normal(), pi = rng.normal();
        xs.push_back(example(yi, pi));
        y.push_back(yi);
        yhat.push_back(pi);
      }
      EvalReport r = test_continuous(identity, xs);
      MetricsOracle m = metrics_reference(y, yhat);
      CHECK(std::abs(r.ssr - m.ssr) <= 1e-9);
      CHECK(std::abs(r.mse - m.mse) <= 1e-9);
      REQUIRE(r.pearson);
      REQUIRE(m.pearson);
      CHECK(std::abs(*r.pearson - *m.pearson) <= 1e-9);
    }
  }
  SUBCASE("zero variance flags pearson undefined") {
    std::vector<LearningExample> xs{example(1, 5), example(1, 6)};
    LinearModel zero;
    zero.task = Task::Regression;
    zero.weights = {0.0};
    zero.trained = true;
    EvalReport r = test_continuous(zero, xs);
    CHECK_FALSE(r.pearson.has_value());
  }
  SUBCASE("empty test set") {
    CHECK_THROWS_AS(test_continuous(identity, {}), Error);
  }
}

TEST_CASE("discrete evaluation tallies match a hand count") {
  LinearModel model;
  model.task = Task::Classification;
  model.labels = {"a", "b"};
  // Feature 0 votes for "a", feature 1 votes for "b".
  model.label_weights = {{1.0, 0.0}, {0.0, 1.0}};
  model.trained = true;
  auto example = [](const std::string& gold, double fa, double fb) {
    LearningExample ex;
    ex.label = Value::text(gold);
    ex.features.entries = {{0, fa}, {1, fb}};
    return ex;
  };
  std::vector<LearningExample> xs{
      example("a", 1, 0), example("a", 1, 0), example("a", 0, 1),
      example("b", 0, 1)};
  EvalReport r = test_discrete(model, xs);
  CHECK(r.accuracy == doctest::Approx(0.75));
  CHECK(r.per_label["a"].precision == doctest::Approx(1.0));
  CHECK(r.per_label["a"].recall == doctest::Approx(2.0 / 3));
  CHECK(r.per_label["b"].precision == doctest::Approx(0.5));
  CHECK(r.per_label["b"].recall == doctest::Approx(1.0));

  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<LearningExample> random_xs;
    std::size_t correct = 0;
    for (int i = 0; i < 20; ++i) {
      bool gold_a = rng.uniform() < 0.5;
      bool pred_a = rng.uniform() < 0.5;
      random_xs.push_back(example(gold_a ? "a" : "b", pred_a ? 1.0 : 0.0,
                                  pred_a ? 0.0 : 1.0));
      if (gold_a == pred_a) ++correct;
    }
    EvalReport rr = test_discrete(model, random_xs);
    CHECK(rr.accuracy == doctest::Approx(correct / 20.0));
  }
}

TEST_CASE("classification on a separable one-hot problem") {
  GraphFixture fx;
  NodeTypeId roots = fx.schema->declare_node("roots");
  fx.schema->declare_property(roots, "color", ValueKind::Text, false,
                              "attr(color)");
  fx.schema->declare_property(roots, "labelAttr", ValueKind::Text, false,
                              "attr(labelAttr)");
  fx.freeze();
  std::vector<NodeInstance> instances;
  const char* colors[] = {"red", "green", "blue"};
  Rng rng(41);
  for (int i = 0; i < 90; ++i) {
    const char* c = colors[rng.below(3)];
    instances.push_back(make_instance(
        "r" + std::to_string(i),
        {{"color", Value::text(c)}, {"labelAttr", Value::text(c)}}));
  }
  fx.graph->populate(roots, std::move(instances));
  fx.graph->seal();

  LearnableSpec spec;
  spec.name = "colors";
  spec.root = "roots";
  spec.task = Task::Classification;
  spec.label_plan = parse_query("roots() prop labelAttr");
  FeatureQuerySpec f;
  f.name = "color";
  f.plan = parse_query("roots() prop color");
  spec.features.push_back(std::move(f));
  Learner learner(spec);
  learner.learn(*fx.graph);
  EvalReport r = learner.test_discrete(*fx.graph);
  CHECK(r.accuracy == doctest::Approx(1.0));
}

TEST_CASE("families are independent and rank deterministically") {
  GraphFixture fx = regression_fixture(60, 2.0, 0.0, 9);

  auto spec_for = [&](const std::string& p) {
    LearnableSpec spec = simple_spec();
    spec.name = "fam[" + p + "]";
    if (p == "bad") {
      // A constant feature: cannot explain y.
      spec.features[0].plan = parse_query("roots() count");
      spec.features[0].name = "const";
    }
    return spec;
  };

  SUBCASE("duplicate parameters are rejected") {
    CHECK_THROWS_AS(LearnerFamily::make({"a", "a"}, spec_for), Error);
  }
  SUBCASE("empty family operations raise") {
    LearnerFamily family = LearnerFamily::make({}, spec_for);
    CHECK_THROWS_AS(family.train_all(*fx.graph), Error);
    CHECK_THROWS_AS(family.rank(), Error);
  }
  SUBCASE("training one member leaves the others untouched") {
    LearnerFamily family = LearnerFamily::make({"good", "bad"}, spec_for);
    family.member(0).learner->learn(*fx.graph);
    CHECK(family.member(0).learner->model().trained);
    CHECK_FALSE(family.member(1).learner->model().trained);
  }
  SUBCASE("rank orders by metric, best first") {
    LearnerFamily family = LearnerFamily::make({"good", "bad"}, spec_for);
    family.train_all(*fx.graph);
    family.test_all(*fx.graph);
    auto order = family.rank();
    CHECK(family.members()[order[0]].parameter == "good");
    CHECK(family.best().parameter == "good");
  }
  SUBCASE("metric ties break on the lexically smaller parameter") {
    LearnerFamily family = LearnerFamily::make({"beta", "alpha"}, spec_for);
    family.train_all(*fx.graph);
    family.test_all(*fx.graph);
    auto order = family.rank();
    CHECK(family.members()[order[0]].parameter == "alpha");
  }
  SUBCASE("family of one is its own best") {
    LearnerFamily family = LearnerFamily::make({"only"}, spec_for);
    family.train_all(*fx.graph);
    family.test_all(*fx.graph);
    CHECK(family.best().parameter == "only");
  }
}

TEST_CASE("empty training set raises") {
  LearnableSpec spec = simple_spec();
  CHECK_THROWS_AS(train(spec, {}, 1), Error);
}
