#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mediation/counterfactual.hpp"
#include "mediation/graph.hpp"
#include "mediation/model.hpp"
#include "mediation/sampling.hpp"

namespace mediation {

/// Source of (observational or interventional) joint distributions. Every
/// answer comes from the declared source only.
class DistributionProvider {
 public:
  virtual ~DistributionProvider() = default;

  virtual const Schema& schema() const = 0;
  /// Graph used to check formula premises; null in pure-data mode.
  virtual const CausalGraph* graph() const = 0;
  virtual bool supports(const Regime& regime) const = 0;
  /// Joint of `over` under `regime`. Throws EstimandError for regimes the
  /// source cannot answer.
  virtual Distribution joint(const Regime& regime,
                             const std::vector<std::size_t>& over) const = 0;
  /// Records backing a regime; 0 for exact sources.
  virtual std::size_t sample_size(const Regime& regime) const = 0;
  virtual bool exact() const = 0;
};

class ExactProvider final : public DistributionProvider {
 public:
  /// The model must outlive the provider.
  explicit ExactProvider(const Scm& scm) : scm_(&scm) {}

  const Schema& schema() const override { return scm_->schema(); }
  const CausalGraph* graph() const override { return &scm_->graph(); }
  bool supports(const Regime&) const override { return true; }
  Distribution joint(const Regime& regime,
                     const std::vector<std::size_t>& over) const override;
  std::size_t sample_size(const Regime&) const override { return 0; }
  bool exact() const override { return true; }

 private:
  const Scm* scm_;
};

/// Empirical frequencies from regime-indexed datasets. Datasets sharing a
/// regime are pooled. With `smoothing` > 0 every cell of a queried marginal
/// (restricted to the regime's fixed values) receives that pseudo-count.
class DatasetProvider final : public DistributionProvider {
 public:
  DatasetProvider(Schema schema, std::vector<Dataset> datasets,
                  std::optional<CausalGraph> graph = std::nullopt,
                  double smoothing = 0.0);

  const Schema& schema() const override { return schema_; }
  const CausalGraph* graph() const override {
    return graph_ ? &*graph_ : nullptr;
  }
  bool supports(const Regime& regime) const override;
  Distribution joint(const Regime& regime,
                     const std::vector<std::size_t>& over) const override;
  std::size_t sample_size(const Regime& regime) const override;
  bool exact() const override { return false; }

 private:
  Schema schema_;
  std::vector<Dataset> datasets_;
  std::optional<CausalGraph> graph_;
  double smoothing_;
};

enum class Formula { eq8, eq15, eq17, eq26, eq27 };

std::string to_string(Formula formula);
Formula parse_formula(const std::string& text);
/// eq8, eq15 and eq17 target the natural direct effect; the others the
/// natural indirect effect.
bool targets_direct_effect(Formula formula);
/// eq8 and eq26 read interventional regimes; the others observational data.
bool is_experimental(Formula formula);

struct EstimandQuery {
  std::size_t treatment = 0;
  int x = 1;
  int x_ref = 0;
  std::vector<std::size_t> mediators;
  std::size_t outcome = 0;
  /// Report effects on the indicator of this outcome value.
  std::optional<int> indicator;
  /// W for eq8/eq26, S for eq15; must be empty for eq17/eq27.
  std::vector<std::size_t> covariates;
};

enum class PremiseState { verified, violated, unverified };

std::string to_string(PremiseState state);

struct SkippedStratum {
  Assignment cell;
};

struct EstimandResult {
  Formula formula = Formula::eq8;
  double value = 0.0;
  /// Outer strata (w or s cells) with zero mass in the source.
  std::vector<SkippedStratum> skipped_strata;
  /// Mass of strata whose terms were all defined.
  double evaluated_mass = 0.0;
  /// Mass of strata in which some needed conditional had an empty
  /// conditioning event.
  double positivity_mass = 0.0;
  std::vector<std::string> warnings;
  /// Regime declaration and record count for each regime read (dataset
  /// sources only).
  std::vector<std::pair<std::string, std::size_t>> sample_sizes;
  PremiseState premises = PremiseState::unverified;
  std::vector<std::string> premise_notes;

  bool positivity_violation() const { return positivity_mass > 0.0; }
};

/// Dispatches to the formula; checks the premises against the provider's
/// graph when it has one and records the outcome instead of refusing.
EstimandResult evaluate_estimand(const DistributionProvider& provider,
                                 Formula formula, const EstimandQuery& query);

EstimandResult nde_eq8(const DistributionProvider& provider,
                       const EstimandQuery& query);
EstimandResult nde_eq15(const DistributionProvider& provider,
                        const EstimandQuery& query);
EstimandResult nde_eq17(const DistributionProvider& provider,
                        const EstimandQuery& query);
EstimandResult nie_eq26(const DistributionProvider& provider,
                        const EstimandQuery& query);
EstimandResult nie_eq27(const DistributionProvider& provider,
                        const EstimandQuery& query);

inline constexpr double kCrosscheckTolerance = 1e-9;

enum class CrosscheckStatus { pass, fail, not_applicable };

std::string to_string(CrosscheckStatus status);

struct CrosscheckReport {
  Formula formula = Formula::eq8;
  double ground_truth = 0.0;
  EstimandResult estimate;
  double gap = 0.0;
  /// not_applicable when the exact source violates positivity.
  CrosscheckStatus status = CrosscheckStatus::fail;
};

/// Ground truth by enumeration against the exact-provider estimand.
CrosscheckReport crosscheck(const Scm& scm, Formula formula,
                            const EstimandQuery& query);

}  // namespace mediation
