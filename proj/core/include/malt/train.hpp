#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "malt/dataset.hpp"
#include "malt/errors.hpp"
#include "malt/model.hpp"

namespace malt {

enum class Regularizer { None, L2, Nuclear, ArmPrimal, ArmSingle, ArmSae };

std::string regularizerName(Regularizer reg);
Regularizer regularizerFromName(const std::string& name);

struct TrainSpec {
    Regularizer regularizer = Regularizer::None;
    double lambda = 0.0;
    double alpha = 0.01;       // clamp floor in the ArmSingle/ArmSae denominators
    std::size_t epochs = 100;
    std::size_t batchSize = 32;
    double learningRate = 0.1;
    double momentum = 0.0;
    double lrDecay = 1.0;      // per-epoch learning-rate multiplier
    std::size_t patience = 0;  // early stop after this many epochs without
                               // validation Micro-F1 improvement; 0 disables
    std::uint64_t seed = 0;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double trainLoss = 0.0;
    double regValue = 0.0;
    double valMicroF1 = 0.0;
};

struct TrainTrace {
    std::vector<EpochRecord> records;
};

struct TrainResult {
    Model model; // best-validation snapshot
    TrainTrace trace;
    double bestValMicroF1 = 0.0;
    std::size_t bestEpoch = 0;
};

/// Thrown when the training loss turns non-finite; carries the trace of the
/// epochs that completed.
class TrainingDiverged : public NumericError {
  public:
    TrainingDiverged(const std::string& what, TrainTrace partial)
        : NumericError(what), trace(std::move(partial)) {}
    TrainTrace trace;
};

/// Mean over instances of sum_j max(0, 1 - y_j h_j(x)).
double hingeLoss(const Model& model, const Matrix& X, const Matrix& Y,
                 std::span<const std::size_t> rows);
double hingeLoss(const Model& model, const Matrix& X, const Matrix& Y);

struct RegEval {
    double value = 0.0;
    Vector grad; // flat parameter layout
};

/// Regularizer value and parameter gradient, averaged over the batch rows.
/// Subset maxima (ArmPrimal, ArmSae) differentiate through the frozen
/// maximizing subset; where a clamp is exactly at its boundary the
/// subgradient 0 is chosen. Nuclear reports the subgradient U V^T; training
/// applies the proximal step instead.
RegEval regularizerValueAndGrad(const Model& model, const Matrix& X, const Matrix& Y,
                                std::span<const std::size_t> rows,
                                const TrainSpec& spec);

/// Singular value thresholding, the proximal operator of tau * nuclear norm.
Matrix svtProx(const Matrix& W, double tau);

enum class ModelKind { Linear, Mlp };

struct ModelInit {
    ModelKind kind = ModelKind::Linear;
    std::size_t hidden = 16;  // MLP only
    double initScale = 0.1;   // MLP weight scale; linear starts at zero
};

Model initModel(const ModelInit& init, std::size_t d, std::size_t m,
                std::uint64_t seed);

/// Minibatch SGD on hinge + lambda * regularizer. The nuclear regime applies
/// a singular-value-thresholding step (threshold lambda * lr) after each
/// update instead of a gradient term. Returns the best-validation snapshot.
/// Fully deterministic for a fixed (dataset, init, spec).
TrainResult train(const Dataset& dataset, const ModelInit& init, const TrainSpec& spec);
TrainResult train(const Dataset& dataset, Model initial, const TrainSpec& spec);

void writeTraceCsv(const TrainTrace& trace, const std::string& path);

} // namespace malt
