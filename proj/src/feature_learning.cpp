#include "hinet/feature_learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hinet/rng.hpp"

namespace hinet {

std::optional<std::uint32_t> Lexicon::lookup(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::uint32_t> Lexicon::lookup_or_add(const std::string& name) {
  auto it = index_.find(name);
  if (it != index_.end()) return it->second;
  if (frozen_) return std::nullopt;
  std::uint32_t idx = static_cast<std::uint32_t>(names_.size());
  names_.push_back(name);
  index_.emplace(name, idx);
  return idx;
}

double FeatureVector::dot(const std::vector<double>& weights) const {
  double acc = 0;
  for (const auto& [idx, val] : entries)
    if (idx < weights.size()) acc += weights[idx] * val;
  return acc;
}

namespace {

// Collects scalar elements of a query result, flattening one list level.
// Returns the elements plus whether a lone list value supplied them.
struct Elements {
  std::vector<Value> items;
  std::optional<bool> list_ordered;  // set when the result was a single list
};

Elements elements_of(const QueryResult& result, const std::string& qname) {
  Elements out;
  if (const Value* v = std::get_if<Value>(&result)) {
    if (v->kind() == ValueKind::List) {
      out.list_ordered = v->ordered();
      for (const Value& item : v->items()) out.items.push_back(item);
    } else {
      out.items.push_back(*v);
    }
    return out;
  }
  if (const ValueSequence* seq = std::get_if<ValueSequence>(&result)) {
    if (seq->values.size() == 1 &&
        seq->values[0].kind() == ValueKind::List) {
      out.list_ordered = seq->values[0].ordered();
      for (const Value& item : seq->values[0].items())
        out.items.push_back(item);
      return out;
    }
    for (const Value& v : seq->values) {
      if (v.kind() == ValueKind::List)
        for (const Value& item : v.items()) out.items.push_back(item);
      else
        out.items.push_back(v);
    }
    return out;
  }
  raise(ErrorCode::KindMismatch,
        "feature query '" + qname +
            "' must produce a value or a value sequence");
}

void add_feature(Lexicon& lexicon,
                 std::map<std::uint32_t, double>& accumulator,
                 const std::string& name, double value, bool additive) {
  auto idx = lexicon.lookup_or_add(name);
  if (!idx) return;  // frozen lexicon drops unseen names
  if (additive)
    accumulator[*idx] += value;
  else
    accumulator[*idx] = value;
}

void encode_query_result(const FeatureQuerySpec& q, const QueryResult& result,
                         Lexicon& lexicon,
                         std::map<std::uint32_t, double>& accumulator) {
  Elements elems = elements_of(result, q.name);
  if (elems.items.empty()) return;

  bool any_text = false, any_numeric = false;
  for (const Value& v : elems.items) {
    if (v.kind() == ValueKind::Text)
      any_text = true;
    else
      any_numeric = true;  // Int, Real, Bool all map to numbers
  }
  if (any_text && any_numeric)
    raise(ErrorCode::KindMismatch,
          "feature query '" + q.name + "' mixes text and numeric values");

  bool ordered = q.ordered.value_or(elems.list_ordered.value_or(false));
  auto numeric = [](const Value& v) {
    return v.kind() == ValueKind::Bool ? (v.as_bool() ? 1.0 : 0.0)
                                       : v.as_real();
  };

  if (any_numeric) {
    if (ordered) {
      for (std::size_t i = 0; i < elems.items.size(); ++i)
        add_feature(lexicon, accumulator,
                    q.name + "[" + std::to_string(i) + "]",
                    numeric(elems.items[i]), false);
      return;
    }
    if (elems.items.size() == 1) {
      add_feature(lexicon, accumulator, q.name, numeric(elems.items[0]), false);
      return;
    }
    raise(ErrorCode::KindMismatch,
          "feature query '" + q.name +
              "' produced an unordered numeric collection; mark it ordered");
  }

  // Text values: positional one-hot when ordered, multiplicity bag otherwise.
  if (ordered) {
    for (std::size_t i = 0; i < elems.items.size(); ++i)
      add_feature(lexicon, accumulator,
                  q.name + "[" + std::to_string(i) + "]=" +
                      elems.items[i].as_text(),
                  1.0, false);
    return;
  }
  for (const Value& v : elems.items)
    add_feature(lexicon, accumulator, q.name + "=" + v.as_text(), 1.0, true);
}

}  // namespace

FeatureVector encode(const InstanceGraph& graph, const NodeInstance& root,
                     const LearnableSpec& spec, Lexicon& lexicon) {
  std::map<std::uint32_t, double> accumulator;
  accumulator[Lexicon::kBias] = 1.0;
  for (const FeatureQuerySpec& q : spec.features) {
    QueryResult result = evaluate(q.plan, graph, &root);
    encode_query_result(q, result, lexicon, accumulator);
  }
  FeatureVector fv;
  fv.entries.assign(accumulator.begin(), accumulator.end());
  return fv;
}

namespace {

std::optional<Value> extract_label(const QueryResult& result) {
  if (const Value* v = std::get_if<Value>(&result)) return *v;
  if (const ValueSequence* seq = std::get_if<ValueSequence>(&result)) {
    if (seq->values.size() == 1 && seq->values[0].kind() != ValueKind::List)
      return seq->values[0];
    return std::nullopt;
  }
  return std::nullopt;
}

// Labels route by kind: numeric to regression, Text/Bool to classification.
std::optional<Value> label_for_task(const Value& raw, Task task) {
  switch (task) {
    case Task::Regression:
      if (raw.is_numeric()) return Value::real(raw.as_real());
      return std::nullopt;
    case Task::Classification:
      if (raw.kind() == ValueKind::Text) return raw;
      if (raw.kind() == ValueKind::Bool)
        return Value::text(raw.as_bool() ? "true" : "false");
      return std::nullopt;
  }
  return std::nullopt;
}

bool truthy(const QueryResult& result) {
  if (const Value* v = std::get_if<Value>(&result)) {
    switch (v->kind()) {
      case ValueKind::Bool: return v->as_bool();
      case ValueKind::Int: return v->as_int() != 0;
      case ValueKind::Real: return v->as_real() != 0.0;
      case ValueKind::Text: return !v->as_text().empty();
      case ValueKind::List: return !v->items().empty();
    }
  }
  if (const InstanceSet* s = std::get_if<InstanceSet>(&result))
    return !s->empty();
  if (const ValueSequence* s = std::get_if<ValueSequence>(&result)) {
    if (s->values.size() == 1) return truthy(QueryResult(s->values[0]));
    return !s->empty();
  }
  if (const Grouping* g = std::get_if<Grouping>(&result))
    return !g->groups.empty();
  if (const EdgePath* p = std::get_if<EdgePath>(&result)) return p->found;
  return false;
}

}  // namespace

BuildResult build_examples(const InstanceGraph& graph,
                           const LearnableSpec& spec, Lexicon& lexicon,
                           const std::vector<std::string>* root_ids) {
  NodeTypeId root_type = graph.schema().node_id_or_throw(spec.root);
  std::vector<const NodeInstance*> roots;
  if (root_ids) {
    for (const std::string& id : *root_ids) {
      const NodeInstance* inst = graph.find_instance(root_type, id);
      if (!inst)
        raise(ErrorCode::UnknownInstance,
              "no instance '" + id + "' of node type '" + spec.root + "'");
      roots.push_back(inst);
    }
  } else {
    for (const NodeInstance& inst : graph.instances_of(root_type))
      roots.push_back(&inst);
  }

  BuildResult out;
  for (const NodeInstance* root : roots) {
    try {
      if (spec.filter_plan &&
          !truthy(evaluate(*spec.filter_plan, graph, root)))
        continue;  // filtered out, not a failure
      QueryResult raw = evaluate(spec.label_plan, graph, root);
      std::optional<Value> label = extract_label(raw);
      if (label) label = label_for_task(*label, spec.task);
      if (!label) {
        ++out.skipped;
        continue;
      }
      LearningExample ex;
      ex.root = root;
      ex.label = *label;
      ex.features = encode(graph, *root, spec, lexicon);
      out.examples.push_back(std::move(ex));
    } catch (const Error&) {
      ++out.skipped;
    }
  }
  return out;
}

double squared_loss(const std::vector<double>& weights,
                    const FeatureVector& features, double y) {
  double r = y - features.dot(weights);
  return 0.5 * r * r;
}

std::vector<double> squared_loss_gradient(const std::vector<double>& weights,
                                          const FeatureVector& features,
                                          double y) {
  double r = y - features.dot(weights);
  std::vector<double> grad(weights.size(), 0.0);
  for (const auto& [idx, val] : features.entries)
    if (idx < grad.size()) grad[idx] = -r * val;
  return grad;
}

namespace {

double sigmoid(double z) {
  if (z >= 0) {
    double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

double logistic_loss(const std::vector<double>& weights,
                     const FeatureVector& features, double target) {
  double z = features.dot(weights);
  // -log p(target); stable log(1 + exp(.)) form
  double m = std::max(z, 0.0);
  double log1pe = m + std::log(std::exp(-m) + std::exp(z - m));
  return log1pe - target * z;
}

std::vector<double> logistic_loss_gradient(const std::vector<double>& weights,
                                           const FeatureVector& features,
                                           double target) {
  double p = sigmoid(features.dot(weights));
  std::vector<double> grad(weights.size(), 0.0);
  for (const auto& [idx, val] : features.entries)
    if (idx < grad.size()) grad[idx] = (p - target) * val;
  return grad;
}

LinearModel train(const LearnableSpec& spec,
                  const std::vector<LearningExample>& examples,
                  std::size_t weight_count) {
  if (examples.empty())
    raise(ErrorCode::EmptyTrainingSet,
          "learner '" + spec.name + "' has no training examples");
  LinearModel model;
  model.task = spec.task;
  const SgdConfig& cfg = spec.sgd;
  Rng rng(cfg.shuffle_seed);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);

  // One step of w <- w + lr * err * phi - lr * l2 * w, with both terms taken
  // at the current weights.
  auto step = [&](std::vector<double>& w, double err, const FeatureVector& fv) {
    if (cfg.l2 != 0.0)
      for (double& wi : w) wi -= cfg.learning_rate * cfg.l2 * wi;
    for (const auto& [idx, val] : fv.entries)
      w[idx] += cfg.learning_rate * err * val;
  };

  if (spec.task == Task::Regression) {
    model.weights.assign(weight_count, 0.0);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      rng.shuffle(order);
      for (std::size_t i : order) {
        const LearningExample& ex = examples[i];
        double err = ex.label.as_real() - ex.features.dot(model.weights);
        step(model.weights, err, ex.features);
      }
    }
  } else {
    for (const LearningExample& ex : examples) {
      const std::string& l = ex.label.as_text();
      if (std::find(model.labels.begin(), model.labels.end(), l) ==
          model.labels.end())
        model.labels.push_back(l);
    }
    std::sort(model.labels.begin(), model.labels.end());
    model.label_weights.assign(model.labels.size(),
                               std::vector<double>(weight_count, 0.0));
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      rng.shuffle(order);
      for (std::size_t i : order) {
        const LearningExample& ex = examples[i];
        for (std::size_t l = 0; l < model.labels.size(); ++l) {
          double target = ex.label.as_text() == model.labels[l] ? 1.0 : 0.0;
          std::vector<double>& w = model.label_weights[l];
          double err = target - sigmoid(ex.features.dot(w));
          step(w, err, ex.features);
        }
      }
    }
  }
  model.trained = true;
  return model;
}

double predict_score(const LinearModel& model, const FeatureVector& features) {
  return features.dot(model.weights);
}

std::string predict_label(const LinearModel& model,
                          const FeatureVector& features) {
  if (model.labels.empty())
    raise(ErrorCode::UntrainedClassifier, "classifier has no labels");
  std::size_t best = 0;
  double best_score = features.dot(model.label_weights[0]);
  for (std::size_t l = 1; l < model.labels.size(); ++l) {
    double score = features.dot(model.label_weights[l]);
    if (score > best_score) {  // ties keep the lexically smaller label
      best_score = score;
      best = l;
    }
  }
  return model.labels[best];
}

std::optional<double> pearson_correlation(const std::vector<double>& a,
                                          const std::vector<double>& b) {
  std::size_t n = a.size();
  if (n == 0 || n != b.size()) return std::nullopt;
  double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n;
  double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double cov = 0, var_a = 0, var_b = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double da = a[i] - mean_a, db = b[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a == 0.0 || var_b == 0.0) return std::nullopt;
  return cov / std::sqrt(var_a * var_b);
}

EvalReport test_continuous(const LinearModel& model,
                           const std::vector<LearningExample>& examples) {
  if (examples.empty()) raise(ErrorCode::EmptyTestSet, "no test examples");
  EvalReport report;
  report.task = Task::Regression;
  report.n = examples.size();
  std::vector<double> y, yhat;
  y.reserve(examples.size());
  yhat.reserve(examples.size());
  for (const LearningExample& ex : examples) {
    y.push_back(ex.label.as_real());
    yhat.push_back(predict_score(model, ex.features));
  }
  double ssr = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double r = y[i] - yhat[i];
    ssr += r * r;
  }
  report.ssr = ssr;
  report.mse = ssr / static_cast<double>(report.n);
  report.pearson = pearson_correlation(y, yhat);
  return report;
}

EvalReport test_discrete(const LinearModel& model,
                         const std::vector<LearningExample>& examples) {
  if (examples.empty()) raise(ErrorCode::EmptyTestSet, "no test examples");
  EvalReport report;
  report.task = Task::Classification;
  report.n = examples.size();
  std::map<std::string, std::size_t> tp, fp, fn;
  std::size_t correct = 0;
  for (const LearningExample& ex : examples) {
    const std::string& gold = ex.label.as_text();
    std::string pred = predict_label(model, ex.features);
    if (pred == gold) {
      ++correct;
      ++tp[gold];
    } else {
      ++fp[pred];
      ++fn[gold];
    }
  }
  report.accuracy = static_cast<double>(correct) / static_cast<double>(report.n);
  auto labels = model.labels;
  for (const auto& [l, c] : fn)
    if (std::find(labels.begin(), labels.end(), l) == labels.end())
      labels.push_back(l);
  for (const std::string& l : labels) {
    PRF prf;
    std::size_t tpl = tp.count(l) ? tp[l] : 0;
    std::size_t fpl = fp.count(l) ? fp[l] : 0;
    std::size_t fnl = fn.count(l) ? fn[l] : 0;
    prf.support = tpl + fnl;
    prf.precision = (tpl + fpl) ? static_cast<double>(tpl) / (tpl + fpl) : 0.0;
    prf.recall = (tpl + fnl) ? static_cast<double>(tpl) / (tpl + fnl) : 0.0;
    prf.f1 = (prf.precision + prf.recall) > 0
                 ? 2 * prf.precision * prf.recall / (prf.precision + prf.recall)
                 : 0.0;
    report.per_label[l] = prf;
  }
  return report;
}

BuildResult Learner::build(const InstanceGraph& graph,
                           const std::vector<std::string>* root_ids) {
  return build_examples(graph, spec_, lexicon_, root_ids);
}

Learner::LearnReport Learner::learn(const InstanceGraph& graph,
                                    const std::vector<std::string>* root_ids) {
  BuildResult built = build(graph, root_ids);
  lexicon_.freeze();
  model_ = hinet::train(spec_, built.examples, lexicon_.size());
  return LearnReport{built.examples.size(), built.skipped};
}

Value Learner::predict(const InstanceGraph& graph,
                       const NodeInstance& root) const {
  if (!model_.trained)
    raise(ErrorCode::UntrainedClassifier,
          "learner '" + spec_.name + "' is not trained");
  Lexicon& lex = const_cast<Lexicon&>(lexicon_);  // frozen: read-only lookups
  FeatureVector fv = encode(graph, root, spec_, lex);
  if (spec_.task == Task::Regression)
    return Value::real(predict_score(model_, fv));
  return Value::text(predict_label(model_, fv));
}

EvalReport Learner::test_continuous(const InstanceGraph& graph,
                                    const std::vector<std::string>* root_ids) {
  if (!model_.trained)
    raise(ErrorCode::UntrainedClassifier,
          "learner '" + spec_.name + "' is not trained");
  BuildResult built = build(graph, root_ids);
  return hinet::test_continuous(model_, built.examples);
}

EvalReport Learner::test_discrete(const InstanceGraph& graph,
                                  const std::vector<std::string>* root_ids) {
  if (!model_.trained)
    raise(ErrorCode::UntrainedClassifier,
          "learner '" + spec_.name + "' is not trained");
  BuildResult built = build(graph, root_ids);
  return hinet::test_discrete(model_, built.examples);
}

EvalReport Learner::test(const InstanceGraph& graph,
                         const std::vector<std::string>* root_ids) {
  return spec_.task == Task::Regression ? test_continuous(graph, root_ids)
                                        : test_discrete(graph, root_ids);
}

const std::vector<std::string>& Learner::labels() const {
  if (!model_.trained)
    raise(ErrorCode::UntrainedClassifier,
          "learner '" + spec_.name + "' is not trained");
  if (spec_.task != Task::Classification)
    raise(ErrorCode::KindMismatch,
          "learner '" + spec_.name + "' is not a classifier");
  return model_.labels;
}

std::vector<double> Learner::scores(const InstanceGraph& graph,
                                    const NodeInstance& instance) const {
  const std::vector<std::string>& ls = labels();
  Lexicon& lex = const_cast<Lexicon&>(lexicon_);
  FeatureVector fv = encode(graph, instance, spec_, lex);
  std::vector<double> out;
  out.reserve(ls.size());
  for (std::size_t l = 0; l < ls.size(); ++l)
    out.push_back(fv.dot(model_.label_weights[l]));
  return out;
}

LearnerFamily LearnerFamily::make(
    const std::vector<std::string>& parameters,
    const std::function<LearnableSpec(const std::string&)>& spec_template) {
  LearnerFamily family;
  for (const std::string& p : parameters) {
    for (const Member& m : family.members_)
      if (m.parameter == p)
        raise(ErrorCode::DuplicateParameter,
              "family parameter '" + p + "' appears twice");
    Member member;
    member.parameter = p;
    member.learner = std::make_shared<Learner>(spec_template(p));
    family.members_.push_back(std::move(member));
  }
  return family;
}

void LearnerFamily::train_all(const InstanceGraph& graph,
                              const std::vector<std::string>* root_ids) {
  if (members_.empty()) raise(ErrorCode::EmptyFamily, "family is empty");
  for (Member& m : members_) m.learner->learn(graph, root_ids);
}

void LearnerFamily::test_all(const InstanceGraph& graph,
                             const std::vector<std::string>* root_ids) {
  if (members_.empty()) raise(ErrorCode::EmptyFamily, "family is empty");
  for (Member& m : members_) {
    m.report = m.learner->test(graph, root_ids);
    m.tested = true;
  }
}

std::vector<std::size_t> LearnerFamily::rank() const {
  if (members_.empty()) raise(ErrorCode::EmptyFamily, "family is empty");
  for (const Member& m : members_)
    if (!m.tested)
      raise(ErrorCode::EmptyTestSet,
            "family member '" + m.parameter + "' has not been tested");
  auto metric = [](const Member& m) {
    if (m.report.task == Task::Regression)
      return m.report.pearson.value_or(
          -std::numeric_limits<double>::infinity());
    return m.report.accuracy;
  };
  std::vector<std::size_t> order(members_.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    double ma = metric(members_[a]), mb = metric(members_[b]);
    if (ma != mb) return ma > mb;
    return members_[a].parameter < members_[b].parameter;
  });
  return order;
}

const LearnerFamily::Member& LearnerFamily::best() const {
  return members_[rank().front()];
}

}  // namespace hinet
