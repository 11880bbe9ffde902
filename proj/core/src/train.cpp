#include "malt/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "malt/format.hpp"
#include "malt/metrics.hpp"
#include "malt/rng.hpp"
#include "malt/sae.hpp"

namespace malt {

std::string regularizerName(Regularizer reg) {
    switch (reg) {
        case Regularizer::None: return "none";
        case Regularizer::L2: return "l2";
        case Regularizer::Nuclear: return "nuclear";
        case Regularizer::ArmPrimal: return "arm-primal";
        case Regularizer::ArmSingle: return "arm-single";
        case Regularizer::ArmSae: return "arm-sae";
    }
    throw std::invalid_argument("unknown regularizer");
}

Regularizer regularizerFromName(const std::string& name) {
    if (name == "none") return Regularizer::None;
    if (name == "l2") return Regularizer::L2;
    if (name == "nuclear") return Regularizer::Nuclear;
    if (name == "arm-primal") return Regularizer::ArmPrimal;
    if (name == "arm-single") return Regularizer::ArmSingle;
    if (name == "arm-sae") return Regularizer::ArmSae;
    throw std::invalid_argument("unknown regularizer '" + name + "'");
}

double hingeLoss(const Model& model, const Matrix& X, const Matrix& Y,
                 std::span<const std::size_t> rows) {
    if (rows.empty()) throw std::invalid_argument("hingeLoss: empty batch");
    const std::size_t m = labelCount(model);
    if (Y.cols != m) throw std::invalid_argument("hingeLoss: label dimension mismatch");
    double total = 0.0;
    for (std::size_t i : rows) {
        Vector h = scores(model, X.row(i));
        for (std::size_t j = 0; j < m; ++j)
            total += std::max(0.0, 1.0 - Y(i, j) * h[j]);
    }
    return total / static_cast<double>(rows.size());
}

double hingeLoss(const Model& model, const Matrix& X, const Matrix& Y) {
    std::vector<std::size_t> rows(X.rows);
    std::iota(rows.begin(), rows.end(), 0);
    return hingeLoss(model, X, Y, rows);
}

namespace {

struct MlpOffsets {
    std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;
};

MlpOffsets offsetsOf(const MlpModel& mlp) {
    const std::size_t k = mlp.hidden(), d = mlp.features(), m = mlp.labels();
    MlpOffsets off;
    off.w1 = 0;
    off.b1 = k * d;
    off.w2 = k * d + k;
    off.b2 = off.w2 + m * k;
    return off;
}

// Directional derivative of the input gradient: u^T grad_x h_j, given
// p = W1 u and the cached forward pass.
double mlpDirDeriv(const MlpModel& mlp, const MlpForward& f, const Vector& p,
                   std::size_t j) {
    double v = 0.0;
    for (std::size_t l = 0; l < p.size(); ++l) v += p[l] * f.dact[l] * mlp.W2(j, l);
    return v;
}

// Adds coefA * d(u^T grad_x h_j)/dtheta + coefB * d(h_j)/dtheta to the flat
// gradient. This is the closed-form double backprop through the one-hidden-
// layer network.
void accumulateMlpTerm(Vector& grad, const MlpModel& mlp, const MlpForward& f,
                       std::span<const double> x, std::span<const double> u,
                       const Vector& p, std::size_t j, double coefA, double coefB) {
    const MlpOffsets off = offsetsOf(mlp);
    const std::size_t k = mlp.hidden(), d = mlp.features();
    for (std::size_t l = 0; l < k; ++l) {
        grad[off.w2 + j * k + l] += coefA * p[l] * f.dact[l] + coefB * f.act[l];
        double w2jl = mlp.W2(j, l);
        double a1 = coefA * f.dact[l] * w2jl;
        double a2 = (-2.0 * coefA * f.act[l] * p[l] + coefB) * f.dact[l] * w2jl;
        for (std::size_t q = 0; q < d; ++q)
            grad[off.w1 + l * d + q] += a1 * u[q] + a2 * x[q];
        grad[off.b1 + l] += a2;
    }
    grad[off.b2 + j] += coefB;
}

void addL2(const Model& model, RegEval& eval) {
    Vector params = packParams(model);
    eval.value = 0.5 * dot(params, params);
    eval.grad = std::move(params);
}

void addNuclear(const Model& model, RegEval& eval) {
    const Matrix& W = std::holds_alternative<LinearModel>(model)
                          ? std::get<LinearModel>(model).W
                          : std::get<MlpModel>(model).W2;
    SvdResult dec = svd(W);
    eval.value = std::accumulate(dec.s.begin(), dec.s.end(), 0.0);
    // Subgradient U V^T at the linear layer block; zeros elsewhere.
    const std::size_t off =
        std::holds_alternative<LinearModel>(model) ? 0 : offsetsOf(std::get<MlpModel>(model)).w2;
    const std::size_t k = dec.s.size();
    for (std::size_t j = 0; j < W.rows; ++j)
        for (std::size_t q = 0; q < W.cols; ++q) {
            double g = 0.0;
            for (std::size_t t = 0; t < k; ++t) g += dec.U(j, t) * dec.V(q, t);
            eval.grad[off + j * W.cols + q] += g;
        }
}

void addArmPrimal(const Model& model, const Matrix& Y,
                  std::span<const std::size_t> rows, RegEval& eval) {
    const Matrix& W = std::holds_alternative<LinearModel>(model)
                          ? std::get<LinearModel>(model).W
                          : std::get<MlpModel>(model).W2;
    const std::size_t off =
        std::holds_alternative<LinearModel>(model) ? 0 : offsetsOf(std::get<MlpModel>(model)).w2;
    const double invN = 1.0 / static_cast<double>(rows.size());
    for (std::size_t i : rows) {
        SaeScore score = cWz(W, Y.row(i));
        eval.value += invN * score.phi;
        if (score.phi <= 0.0) continue;
        Vector sum(W.cols, 0.0);
        for (std::size_t j : score.subset) axpy(Y(i, j), W.row(j), sum);
        // Danskin: freeze the achieving subset, grad w_j = y_j * unit(sum).
        for (std::size_t j : score.subset) {
            double c = invN * Y(i, j) / score.phi;
            for (std::size_t q = 0; q < W.cols; ++q)
                eval.grad[off + j * W.cols + q] += c * sum[q];
        }
    }
}

void addArmSingle(const Model& model, const Matrix& X, const Matrix& Y,
                  std::span<const std::size_t> rows, double alpha, RegEval& eval) {
    const std::size_t m = labelCount(model);
    const double invN = 1.0 / static_cast<double>(rows.size());
    const auto* lin = std::get_if<LinearModel>(&model);
    const auto* mlp = std::get_if<MlpModel>(&model);
    for (std::size_t i : rows) {
        auto x = X.row(i);
        Vector h = scores(model, x);
        std::vector<Vector> g = allInputGradients(model, x);
        MlpForward f;
        if (mlp) f = mlpForward(*mlp, x);
        for (std::size_t j = 0; j < m; ++j) {
            double yj = Y(i, j);
            double expArg = std::exp(yj * h[j]);
            bool clampInactive = expArg > alpha;
            double denom = std::max(expArg, alpha);
            double gnorm = norm2(g[j]);
            eval.value += invN * gnorm / denom;
            if (gnorm <= 0.0) continue; // norm subgradient 0 at the origin
            double coefB = clampInactive ? -yj * gnorm / denom : 0.0;
            if (lin) {
                const std::size_t d = lin->features();
                for (std::size_t q = 0; q < d; ++q)
                    eval.grad[j * d + q] +=
                        invN * (g[j][q] / (gnorm * denom) + coefB * x[q]);
                eval.grad[m * d + j] += invN * coefB;
            } else {
                Vector u = scaled(g[j], 1.0 / gnorm);
                Vector p = matVec(mlp->W1, u);
                accumulateMlpTerm(eval.grad, *mlp, f, x, u, p, j, invN / denom,
                                  invN * coefB);
            }
        }
    }
}

void addArmSae(const Model& model, const Matrix& X, const Matrix& Y,
               std::span<const std::size_t> rows, double alpha, RegEval& eval) {
    const double invN = 1.0 / static_cast<double>(rows.size());
    const auto* lin = std::get_if<LinearModel>(&model);
    const auto* mlp = std::get_if<MlpModel>(&model);
    for (std::size_t i : rows) {
        auto x = X.row(i);
        TransferVectors vectors = transferVectorsReg(model, x, Y.row(i), alpha);
        SaeScore score = saeGreedy(vectors);
        eval.value += invN * score.phi;
        if (score.phi <= 0.0) continue;

        Vector v(x.size(), 0.0);
        for (std::size_t j : score.subset) axpy(1.0, vectors.a[j], v);
        Vector u = scaled(v, 1.0 / score.phi);

        Vector h = scores(model, x);
        MlpForward f;
        Vector p;
        if (mlp) {
            f = mlpForward(*mlp, x);
            p = matVec(mlp->W1, u);
        }
        for (std::size_t j : score.subset) {
            double yj = Y(i, j);
            double expArg = std::exp(yj * h[j]);
            bool clampInactive = expArg > alpha;
            double denom = std::max(expArg, alpha);
            if (lin) {
                double uw = dot(u, lin->W.row(j));
                double coefB = clampInactive ? uw / denom : 0.0;
                const std::size_t d = lin->features();
                const std::size_t m = lin->labels();
                for (std::size_t q = 0; q < d; ++q)
                    eval.grad[j * d + q] += invN * (-yj / denom * u[q] + coefB * x[q]);
                eval.grad[m * d + j] += invN * coefB;
            } else {
                double dirDeriv = mlpDirDeriv(*mlp, f, p, j); // u^T grad_x h_j
                double coefB = clampInactive ? dirDeriv / denom : 0.0;
                accumulateMlpTerm(eval.grad, *mlp, f, x, u, p, j, -invN * yj / denom,
                                  invN * coefB);
            }
        }
    }
}

} // namespace

RegEval regularizerValueAndGrad(const Model& model, const Matrix& X, const Matrix& Y,
                                std::span<const std::size_t> rows,
                                const TrainSpec& spec) {
    if (rows.empty()) throw std::invalid_argument("regularizer: empty batch");
    RegEval eval;
    eval.grad.assign(paramCount(model), 0.0);
    switch (spec.regularizer) {
        case Regularizer::None: break;
        case Regularizer::L2: addL2(model, eval); break;
        case Regularizer::Nuclear: addNuclear(model, eval); break;
        case Regularizer::ArmPrimal: addArmPrimal(model, Y, rows, eval); break;
        case Regularizer::ArmSingle:
            addArmSingle(model, X, Y, rows, spec.alpha, eval);
            break;
        case Regularizer::ArmSae: addArmSae(model, X, Y, rows, spec.alpha, eval); break;
    }
    return eval;
}

Matrix svtProx(const Matrix& W, double tau) {
    if (tau < 0.0) throw std::invalid_argument("svtProx: negative threshold");
    SvdResult dec = svd(W);
    Matrix out(W.rows, W.cols, 0.0);
    for (std::size_t t = 0; t < dec.s.size(); ++t) {
        double s = dec.s[t] - tau;
        if (s <= 0.0) continue;
        for (std::size_t i = 0; i < W.rows; ++i)
            for (std::size_t q = 0; q < W.cols; ++q)
                out(i, q) += s * dec.U(i, t) * dec.V(q, t);
    }
    return out;
}

Model initModel(const ModelInit& init, std::size_t d, std::size_t m,
                std::uint64_t seed) {
    if (init.kind == ModelKind::Linear)
        return LinearModel(Matrix(m, d, 0.0), Vector(m, 0.0));
    if (init.hidden == 0) throw std::invalid_argument("initModel: hidden width must be >= 1");
    Rng rng(Rng::deriveSeed(seed, 0x6d6c70)); // keep init stream separate from shuffles
    Matrix W1(init.hidden, d);
    for (double& v : W1.data) v = init.initScale * rng.gaussian();
    Matrix W2(m, init.hidden);
    for (double& v : W2.data) v = init.initScale * rng.gaussian();
    return MlpModel(std::move(W1), Vector(init.hidden, 0.0), std::move(W2),
                    Vector(m, 0.0));
}

TrainResult train(const Dataset& dataset, const ModelInit& init, const TrainSpec& spec) {
    return train(dataset, initModel(init, dataset.features(), dataset.labels(), spec.seed),
                 spec);
}

namespace {

double validationMicroF1(const Model& model, const Dataset& dataset,
                         const std::vector<std::size_t>& rows) {
    Matrix pred(rows.size(), dataset.labels());
    Matrix truth(rows.size(), dataset.labels());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        Prediction p = forward(model, dataset.X.row(rows[i]));
        for (std::size_t j = 0; j < dataset.labels(); ++j) {
            pred(i, j) = p.signs[j];
            truth(i, j) = dataset.Y(rows[i], j);
        }
    }
    return f1Scores(pred, truth).microF1;
}

} // namespace

TrainResult train(const Dataset& dataset, Model initial, const TrainSpec& spec) {
    if (spec.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    if (spec.batchSize < 1) throw std::invalid_argument("train: batch size must be >= 1");
    if (!(spec.lambda >= 0.0) || !std::isfinite(spec.lambda))
        throw std::invalid_argument("train: lambda must be finite and nonnegative");
    if (!(spec.alpha > 0.0)) throw std::invalid_argument("train: alpha must be positive");
    if (!(spec.learningRate > 0.0) || !std::isfinite(spec.learningRate))
        throw std::invalid_argument("train: learning rate must be positive");
    if (dataset.splits.train.empty() || dataset.splits.val.empty())
        throw std::invalid_argument("train: dataset needs train and val splits");
    if (featureCount(initial) != dataset.features() ||
        labelCount(initial) != dataset.labels())
        throw std::invalid_argument("train: model does not match dataset shape");

    const bool useReg = spec.lambda > 0.0 && spec.regularizer != Regularizer::None;
    const bool proxReg = useReg && spec.regularizer == Regularizer::Nuclear;

    Model model = std::move(initial);
    Vector params = packParams(model);
    Vector velocity(params.size(), 0.0);
    Vector grad(params.size());

    Rng rng(spec.seed);
    std::vector<std::size_t> perm = dataset.splits.train;

    TrainResult result;
    double lr = spec.learningRate;
    double bestF1 = -1.0;
    std::size_t sinceImprove = 0;

    for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
        rng.shuffle(perm);
        double lossSum = 0.0;
        double regSum = 0.0;
        for (std::size_t start = 0; start < perm.size(); start += spec.batchSize) {
            const std::size_t count = std::min(spec.batchSize, perm.size() - start);
            std::span<const std::size_t> rows(perm.data() + start, count);

            double batchLoss = hingeLoss(model, dataset.X, dataset.Y, rows);
            if (!std::isfinite(batchLoss))
                throw TrainingDiverged(
                    "training loss became non-finite at epoch " + std::to_string(epoch),
                    result.trace);
            lossSum += batchLoss * static_cast<double>(count);

            std::fill(grad.begin(), grad.end(), 0.0);
            const double invCount = 1.0 / static_cast<double>(count);
            for (std::size_t i : rows) {
                Vector gi =
                    paramGradients(model, dataset.X.row(i), dataset.Y.row(i), LossKind::Hinge);
                axpy(invCount, gi, grad);
            }
            if (useReg && !proxReg) {
                RegEval reg = regularizerValueAndGrad(model, dataset.X, dataset.Y, rows, spec);
                axpy(spec.lambda, reg.grad, grad);
                regSum += reg.value * static_cast<double>(count);
            }

            for (std::size_t t = 0; t < params.size(); ++t) {
                velocity[t] = spec.momentum * velocity[t] - lr * grad[t];
                params[t] += velocity[t];
            }
            unpackParams(model, params);

            if (proxReg) {
                if (auto* lin = std::get_if<LinearModel>(&model)) {
                    lin->W = svtProx(lin->W, spec.lambda * lr);
                } else {
                    auto& mlp = std::get<MlpModel>(model);
                    mlp.W2 = svtProx(mlp.W2, spec.lambda * lr);
                }
                params = packParams(model);
            }
        }

        EpochRecord record;
        record.epoch = epoch;
        record.trainLoss = lossSum / static_cast<double>(perm.size());
        if (proxReg) {
            const Matrix& W = std::holds_alternative<LinearModel>(model)
                                  ? std::get<LinearModel>(model).W
                                  : std::get<MlpModel>(model).W2;
            Vector s = svd(W).s;
            record.regValue = std::accumulate(s.begin(), s.end(), 0.0);
        } else {
            record.regValue = useReg ? regSum / static_cast<double>(perm.size()) : 0.0;
        }
        record.valMicroF1 = validationMicroF1(model, dataset, dataset.splits.val);
        result.trace.records.push_back(record);

        // Ties go to the later snapshot, so a plateaued validation score still
        // returns the most-trained model; the patience counter only resets on
        // strict improvement.
        if (record.valMicroF1 >= bestF1) {
            if (record.valMicroF1 > bestF1) sinceImprove = 0;
            else ++sinceImprove;
            bestF1 = record.valMicroF1;
            result.model = model;
            result.bestEpoch = epoch;
        } else {
            ++sinceImprove;
        }
        if (spec.patience > 0 && sinceImprove >= spec.patience) break;
        lr *= spec.lrDecay;
    }

    result.bestValMicroF1 = bestF1;
    return result;
}

void writeTraceCsv(const TrainTrace& trace, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open trace file for writing: " + path);
    out << "# schemaVersion=1\n";
    out << "epoch,trainLoss,regValue,valMicroF1\n";
    for (const EpochRecord& r : trace.records)
        out << r.epoch << ',' << formatDouble17(r.trainLoss) << ','
            << formatDouble17(r.regValue) << ',' << formatDouble17(r.valMicroF1) << '\n';
}

} // namespace malt
