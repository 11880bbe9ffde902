#pragma once

#include <functional>
#include <string>
#include <vector>

#include "malt/attack.hpp"
#include "malt/metrics.hpp"
#include "malt/sae.hpp"
#include "malt/train.hpp"

namespace malt {

/// The linear layer whose row geometry is reported: W for linear models,
/// W2 for MLPs.
const Matrix& linearLayer(const Model& model);

struct EvalConfig {
    double epsilon = 0.3;       // attack budget for caMean / attacked F1
    std::string split = "test";
    double margin = kDefaultFlipMargin;
    PgdOptions pgd;             // used for MLP attacks
    double alpha = kDefaultAlpha;
};

struct PointEval {
    double phiAlignValue = 0.0;
    double saeMean = 0.0;       // mean greedy phi of the raw transfer vectors
    double caMean = 0.0;        // mean greedy attackability
    double cleanMicroF1 = 0.0;
    double cleanMacroF1 = 0.0;
    double attackedMicroF1 = 0.0; // F1 after applying each greedy witness
    double attackedMacroF1 = 0.0;
};

PointEval evaluateModel(const Model& model, const Dataset& dataset,
                        const EvalConfig& config);

struct SweepSetting {
    Regularizer reg = Regularizer::None;
    double lambda = 0.0;
};

struct SweepRow {
    SweepSetting setting;
    PointEval eval;
};

struct SweepConfig {
    ModelInit init;
    TrainSpec base; // regularizer/lambda overridden per setting
    EvalConfig eval;
};

/// Trains one model per setting and evaluates it. Rows are produced in
/// order; onRow (when set) observes each finished row, so callers can
/// persist partial results if a later point fails.
std::vector<SweepRow> runSweep(const Dataset& dataset, const SweepConfig& config,
                               const std::vector<SweepSetting>& settings,
                               const std::function<void(const SweepRow&)>& onRow = {});

} // namespace malt
