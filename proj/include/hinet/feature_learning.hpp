#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hinet/query_language.hpp"

namespace hinet {

enum class Task { Regression, Classification };

// Feature-name dictionary. Indices are dense, 0 is the bias; once frozen,
// unknown names stay absent and the feature is dropped.
class Lexicon {
 public:
  Lexicon() { names_.push_back("__bias__"); index_.emplace("__bias__", 0); }

  static constexpr std::uint32_t kBias = 0;

  std::optional<std::uint32_t> lookup(const std::string& name) const;
  std::optional<std::uint32_t> lookup_or_add(const std::string& name);

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }
  std::size_t size() const { return names_.size(); }
  const std::string& name_of(std::uint32_t index) const { return names_.at(index); }

 private:
  std::vector<std::string> names_;
  std::map<std::string, std::uint32_t> index_;
  bool frozen_ = false;
};

// Sparse feature vector: (index, value) sorted by index, indices unique.
struct FeatureVector {
  std::vector<std::pair<std::uint32_t, double>> entries;

  double dot(const std::vector<double>& weights) const;
};

struct SgdConfig {
  double learning_rate = 0.01;
  std::size_t epochs = 100;
  double l2 = 0.0;
  std::uint64_t shuffle_seed = 42;
};

// One feature query. `ordered` controls positional encoding of multi-value
// numeric results; when unset it is inherited from a single list value's
// declared flag.
struct FeatureQuerySpec {
  std::string name;
  QueryPlan plan;
  std::optional<bool> ordered;
};

struct LearnableSpec {
  std::string name;
  std::string root;  // node type name
  Task task = Task::Regression;
  QueryPlan label_plan;
  std::vector<FeatureQuerySpec> features;
  std::optional<QueryPlan> filter_plan;  // example selection
  SgdConfig sgd;
};

struct LearningExample {
  const NodeInstance* root = nullptr;
  FeatureVector features;
  Value label;
};

struct LinearModel {
  Task task = Task::Regression;
  std::vector<double> weights;               // regression
  std::vector<std::string> labels;           // classification, sorted
  std::vector<std::vector<double>> label_weights;  // one-vs-all

  bool trained = false;
};

struct PRF {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::size_t support = 0;
};

struct EvalReport {
  Task task = Task::Regression;
  std::size_t n = 0;
  // regression
  double ssr = 0;
  double mse = 0;
  std::optional<double> pearson;  // absent when either side has zero variance
  // classification
  double accuracy = 0;
  std::map<std::string, PRF> per_label;
};

// Encoding rules: numeric scalar -> "q"=v; Bool -> 0/1; Text t -> "q=t"=1;
// ordered numeric values -> "q[i]"=v_i; unordered Text values -> bag "q=t"
// counts; ordered Text -> positional one-hot. Multi-valued numeric results
// without an ordered marking are rejected. The bias feature is always set.
FeatureVector encode(const InstanceGraph& graph, const NodeInstance& root,
                     const LearnableSpec& spec, Lexicon& lexicon);

struct BuildResult {
  std::vector<LearningExample> examples;
  std::size_t skipped = 0;
};

// Roots passing the example filter, paired with label and features. Roots
// whose label or feature queries fail are skipped and counted.
BuildResult build_examples(const InstanceGraph& graph, const LearnableSpec& spec,
                           Lexicon& lexicon,
                           const std::vector<std::string>* root_ids = nullptr);

LinearModel train(const LearnableSpec& spec,
                  const std::vector<LearningExample>& examples,
                  std::size_t weight_count);

double predict_score(const LinearModel& model, const FeatureVector& features);
std::string predict_label(const LinearModel& model,
                          const FeatureVector& features);

EvalReport test_continuous(const LinearModel& model,
                           const std::vector<LearningExample>& examples);
EvalReport test_discrete(const LinearModel& model,
                         const std::vector<LearningExample>& examples);

// Pearson product-moment correlation; absent when either variance is zero.
std::optional<double> pearson_correlation(const std::vector<double>& a,
                                          const std::vector<double>& b);

// Loss primitives used by the SGD updates, exposed for gradient checking.
double squared_loss(const std::vector<double>& weights,
                    const FeatureVector& features, double y);
std::vector<double> squared_loss_gradient(const std::vector<double>& weights,
                                          const FeatureVector& features,
                                          double y);
double logistic_loss(const std::vector<double>& weights,
                     const FeatureVector& features, double target);
std::vector<double> logistic_loss_gradient(const std::vector<double>& weights,
                                           const FeatureVector& features,
                                           double target);

// Score source for joint inference: per-label raw linear scores.
class LabelScorer {
 public:
  virtual ~LabelScorer() = default;
  virtual const std::string& name() const = 0;
  virtual bool is_trained() const = 0;
  virtual const std::vector<std::string>& labels() const = 0;
  virtual std::vector<double> scores(const InstanceGraph& graph,
                                     const NodeInstance& instance) const = 0;
};

// A declared learnable bound to its lexicon and model.
class Learner : public LabelScorer {
 public:
  explicit Learner(LearnableSpec spec) : spec_(std::move(spec)) {}

  struct LearnReport {
    std::size_t examples = 0;
    std::size_t skipped = 0;
  };

  // Builds examples (growing the lexicon), freezes it, runs SGD.
  LearnReport learn(const InstanceGraph& graph,
                    const std::vector<std::string>* root_ids = nullptr);

  Value predict(const InstanceGraph& graph, const NodeInstance& root) const;
  EvalReport test_continuous(const InstanceGraph& graph,
                             const std::vector<std::string>* root_ids = nullptr);
  EvalReport test_discrete(const InstanceGraph& graph,
                           const std::vector<std::string>* root_ids = nullptr);
  EvalReport test(const InstanceGraph& graph,
                  const std::vector<std::string>* root_ids = nullptr);

  const LearnableSpec& spec() const { return spec_; }
  const Lexicon& lexicon() const { return lexicon_; }
  const LinearModel& model() const { return model_; }

  // LabelScorer
  const std::string& name() const override { return spec_.name; }
  bool is_trained() const override { return model_.trained; }
  const std::vector<std::string>& labels() const override;
  std::vector<double> scores(const InstanceGraph& graph,
                             const NodeInstance& instance) const override;

 private:
  BuildResult build(const InstanceGraph& graph,
                    const std::vector<std::string>* root_ids);

  LearnableSpec spec_;
  Lexicon lexicon_;
  LinearModel model_;
};

// Independent learners instantiated from one spec template, one per
// parameter value.
class LearnerFamily {
 public:
  struct Member {
    std::string parameter;
    std::shared_ptr<Learner> learner;
    EvalReport report;
    bool tested = false;
  };

  static LearnerFamily make(
      const std::vector<std::string>& parameters,
      const std::function<LearnableSpec(const std::string&)>& spec_template);

  void train_all(const InstanceGraph& graph,
                 const std::vector<std::string>* root_ids = nullptr);
  void test_all(const InstanceGraph& graph,
                const std::vector<std::string>* root_ids = nullptr);

  // Indices sorted by metric descending (Pearson for regression, accuracy
  // for classification); ties break on parameter text. Requires test_all.
  std::vector<std::size_t> rank() const;
  const Member& best() const;

  std::size_t size() const { return members_.size(); }
  const std::vector<Member>& members() const { return members_; }
  Member& member(std::size_t i) { return members_[i]; }

 private:
  std::vector<Member> members_;
};

}  // namespace hinet
