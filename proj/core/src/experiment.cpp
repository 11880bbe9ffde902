#include "malt/experiment.hpp"

#include <stdexcept>

#include "malt/sae.hpp"

namespace malt {

const Matrix& linearLayer(const Model& model) {
    if (const auto* lin = std::get_if<LinearModel>(&model)) return lin->W;
    return std::get<MlpModel>(model).W2;
}

PointEval evaluateModel(const Model& model, const Dataset& dataset,
                        const EvalConfig& config) {
    const auto& rows = dataset.split(config.split);
    if (rows.empty()) throw std::invalid_argument("evaluateModel: empty split");
    const std::size_t m = dataset.labels();

    PointEval eval;
    eval.phiAlignValue = phiAlign(linearLayer(model));

    BudgetSpec budget;
    budget.epsilon = config.epsilon;
    budget.clip = dataset.clipBox;

    Matrix cleanPred(rows.size(), m);
    Matrix attackedPred(rows.size(), m);
    Matrix truth(rows.size(), m);
    double saeSum = 0.0;
    double caSum = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto x = dataset.X.row(rows[i]);
        saeSum += saeGreedy(transferVectorsRaw(model, x, /*allowClamp=*/true)).phi;

        GreedyAttackability greedy = greedyAttackability(
            model, x, dataset.Y.row(rows[i]), budget, config.margin, config.pgd);
        caSum += greedy.cA;

        Prediction clean = forward(model, x);
        Prediction attacked = forward(model, added(x, greedy.outcome.r));
        for (std::size_t j = 0; j < m; ++j) {
            cleanPred(i, j) = clean.signs[j];
            attackedPred(i, j) = attacked.signs[j];
            truth(i, j) = dataset.Y(rows[i], j);
        }
    }
    eval.saeMean = saeSum / static_cast<double>(rows.size());
    eval.caMean = caSum / static_cast<double>(rows.size());

    EvalReport clean = f1Scores(cleanPred, truth);
    EvalReport attacked = f1Scores(attackedPred, truth);
    eval.cleanMicroF1 = clean.microF1;
    eval.cleanMacroF1 = clean.macroF1;
    eval.attackedMicroF1 = attacked.microF1;
    eval.attackedMacroF1 = attacked.macroF1;
    return eval;
}

std::vector<SweepRow> runSweep(const Dataset& dataset, const SweepConfig& config,
                               const std::vector<SweepSetting>& settings,
                               const std::function<void(const SweepRow&)>& onRow) {
    if (settings.empty()) throw std::invalid_argument("runSweep: empty grid");
    std::vector<SweepRow> rows;
    rows.reserve(settings.size());
    for (const SweepSetting& setting : settings) {
        TrainSpec spec = config.base;
        spec.regularizer = setting.reg;
        spec.lambda = setting.reg == Regularizer::None ? 0.0 : setting.lambda;
        TrainResult trained = train(dataset, config.init, spec);

        SweepRow row;
        row.setting = setting;
        row.eval = evaluateModel(trained.model, dataset, config.eval);
        rows.push_back(row);
        if (onRow) onRow(rows.back());
    }
    return rows;
}

} // namespace malt
