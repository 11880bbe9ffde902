#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "malt/dataset.hpp"
#include "malt/model.hpp"

namespace malt {

struct BudgetSpec {
    double epsilon = 0.0; // L2 perturbation budget, >= 0 and finite
    double p = 2.0;       // only 2 is supported
    std::optional<ClipBox> clip;
};

enum class AttackMethod { ExactQp, Greedy, Pgd };

struct AttackOutcome {
    Vector r;
    std::vector<std::size_t> flipped; // labels with y_j h_j(x+r) <= 0
    double rnorm = 0.0;
    bool feasible = false;
    AttackMethod method = AttackMethod::ExactQp;
};

inline constexpr double kDefaultFlipMargin = 1e-6;

/// Minimum-L2-norm perturbation flipping exactly the target set: for j in
/// targets y_j h_j(x+r) <= -margin, for all others y_j h_j(x+r) >= +margin,
/// plus optional box constraints on x+r. Solved by Hildreth dual coordinate
/// ascent; contradictory constraint systems come back feasible = false.
/// The margin is floored at 1e-9 so the feasibility flags stay strictly
/// checkable. Throws NumericError on iteration-cap without convergence.
AttackOutcome minNormFlip(const LinearModel& model, std::span<const double> x,
                          std::span<const double> y,
                          const std::vector<std::size_t>& targets,
                          double margin = kDefaultFlipMargin,
                          std::optional<ClipBox> clip = std::nullopt);

struct ExactAttackability {
    int cStar = 0;
    AttackOutcome witness;
};

/// Exact oracle: largest flip set achievable within the budget, by subset
/// enumeration in descending size (m <= 12). Ties among equal sizes break
/// by smaller perturbation norm, then lexicographic subset order.
ExactAttackability exactAttackability(const LinearModel& model,
                                      std::span<const double> x,
                                      std::span<const double> y,
                                      const BudgetSpec& budget,
                                      double margin = kDefaultFlipMargin);

struct GreedyAttackability {
    int cA = 0;
    AttackOutcome outcome;
};

struct PgdOptions {
    int steps = 200;
    double stepSize = 0.0; // <= 0 means epsilon / 20
};

/// Budgeted greedy estimator: grow the flip set by the label whose inclusion
/// stays feasible with the smallest perturbation norm. Linear models use the
/// exact QP per candidate; MLPs use the PGD surrogate. cA <= cStar on linear
/// models.
GreedyAttackability greedyAttackability(const Model& model, std::span<const double> x,
                                        std::span<const double> y,
                                        const BudgetSpec& budget,
                                        double margin = kDefaultFlipMargin,
                                        const PgdOptions& pgd = {});

/// Projected gradient descent on sum_{j in T} y_j h_j(x+r): step against the
/// gradient, project r to the epsilon ball and x+r to the clip box. Stops
/// early once every target margin is <= 0. Deterministic (zero init).
AttackOutcome pgdAttack(const Model& model, std::span<const double> x,
                        std::span<const double> y,
                        const std::vector<std::size_t>& targets,
                        const BudgetSpec& budget, int steps, double stepSize);

struct RiskReport {
    double cleanRisk = 0.0;        // mean hinge loss
    double worstCaseRiskUB = 0.0;  // mean per-label worst-case hinge estimate
    double eq4Bound = 0.0;         // cleanRisk + eps * mean subset-max row norm
};

RiskReport adversarialRiskReport(const LinearModel& model, const Matrix& X,
                                 const Matrix& Y, double epsilon);

} // namespace malt
