#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "malt/linalg.hpp"

namespace malt {

/// Per-label decision scores and the resulting sign decisions.
/// signs[j] is +1 iff scores[j] > 0; ties at exactly 0 resolve to -1.
struct Prediction {
    Vector scores;
    std::vector<int> signs;
};

struct LinearModel {
    Matrix W; // m x d
    Vector b; // m, zeros when no bias is wanted

    LinearModel() = default;
    explicit LinearModel(Matrix weights, Vector bias = {});

    std::size_t labels() const { return W.rows; }
    std::size_t features() const { return W.cols; }
};

/// One-hidden-layer network, h(x) = W2 tanh(W1 x + b1) + b2.
/// tanh keeps the scores twice differentiable, which the regularized
/// training needs when it differentiates through input gradients.
struct MlpModel {
    Matrix W1; // k x d
    Vector b1; // k
    Matrix W2; // m x k
    Vector b2; // m

    MlpModel() = default;
    MlpModel(Matrix w1, Vector bias1, Matrix w2, Vector bias2);

    std::size_t labels() const { return W2.rows; }
    std::size_t hidden() const { return W1.rows; }
    std::size_t features() const { return W1.cols; }
};

using Model = std::variant<LinearModel, MlpModel>;

std::size_t labelCount(const Model& model);
std::size_t featureCount(const Model& model);

Vector scores(const Model& model, std::span<const double> x);
Prediction forward(const Model& model, std::span<const double> x);

/// Gradient of h_j with respect to the input x.
Vector inputGradient(const Model& model, std::span<const double> x, std::size_t j);

/// All m input gradients in one pass (shares the forward computation).
std::vector<Vector> allInputGradients(const Model& model, std::span<const double> x);

/// Cached intermediates of the MLP forward pass.
struct MlpForward {
    Vector pre;    // W1 x + b1
    Vector act;    // tanh(pre)
    Vector dact;   // 1 - act^2
    Vector scores; // W2 act + b2
};
MlpForward mlpForward(const MlpModel& model, std::span<const double> x);

// Flat parameter layout: linear = [W row-major | b]; mlp = [W1 | b1 | W2 | b2].
std::size_t paramCount(const Model& model);
Vector packParams(const Model& model);
void unpackParams(Model& model, std::span<const double> params);

enum class LossKind { Hinge };

/// Exact subgradient of sum_j max(0, 1 - y_j h_j(x)) in flat layout.
/// At the hinge kink (margin exactly 1) the subgradient 0 is chosen.
Vector paramGradients(const Model& model, std::span<const double> x,
                      std::span<const double> y, LossKind loss);

// JSON serialization; round-trips finite doubles exactly.
std::string toJson(const Model& model);
Model modelFromJson(const std::string& text);
void saveModel(const Model& model, const std::string& path);
Model loadModel(const std::string& path);

} // namespace malt
