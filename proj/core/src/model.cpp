#include "malt/model.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "malt/errors.hpp"

namespace malt {

namespace {

constexpr int kModelSchemaVersion = 1;

void requireFinite(const Matrix& M, const char* what) {
    if (!allFinite(M)) throw std::invalid_argument(std::string(what) + ": non-finite entries");
}

void requireFinite(const Vector& v, const char* what) {
    if (!allFinite(std::span<const double>(v)))
        throw std::invalid_argument(std::string(what) + ": non-finite entries");
}

std::vector<int> signsOf(const Vector& s) {
    std::vector<int> out(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) out[j] = s[j] > 0.0 ? 1 : -1;
    return out;
}

} // namespace

LinearModel::LinearModel(Matrix weights, Vector bias) : W(std::move(weights)), b(std::move(bias)) {
    if (W.rows == 0 || W.cols == 0)
        throw std::invalid_argument("linear model: empty weight matrix");
    if (b.empty()) b.assign(W.rows, 0.0);
    if (b.size() != W.rows)
        throw std::invalid_argument("linear model: bias length != label count");
    requireFinite(W, "linear model W");
    requireFinite(b, "linear model b");
}

MlpModel::MlpModel(Matrix w1, Vector bias1, Matrix w2, Vector bias2)
    : W1(std::move(w1)), b1(std::move(bias1)), W2(std::move(w2)), b2(std::move(bias2)) {
    if (W1.rows == 0 || W1.cols == 0 || W2.rows == 0)
        throw std::invalid_argument("mlp model: empty layer");
    if (W2.cols != W1.rows)
        throw std::invalid_argument("mlp model: layer width mismatch");
    if (b1.size() != W1.rows || b2.size() != W2.rows)
        throw std::invalid_argument("mlp model: bias length mismatch");
    requireFinite(W1, "mlp W1");
    requireFinite(b1, "mlp b1");
    requireFinite(W2, "mlp W2");
    requireFinite(b2, "mlp b2");
}

std::size_t labelCount(const Model& model) {
    return std::visit([](const auto& m) { return m.labels(); }, model);
}

std::size_t featureCount(const Model& model) {
    return std::visit([](const auto& m) { return m.features(); }, model);
}

MlpForward mlpForward(const MlpModel& model, std::span<const double> x) {
    MlpForward f;
    f.pre = matVec(model.W1, x);
    axpy(1.0, model.b1, f.pre);
    f.act.resize(f.pre.size());
    f.dact.resize(f.pre.size());
    for (std::size_t l = 0; l < f.pre.size(); ++l) {
        f.act[l] = std::tanh(f.pre[l]);
        f.dact[l] = 1.0 - f.act[l] * f.act[l];
    }
    f.scores = matVec(model.W2, f.act);
    axpy(1.0, model.b2, f.scores);
    return f;
}

Vector scores(const Model& model, std::span<const double> x) {
    if (x.size() != featureCount(model))
        throw std::invalid_argument("forward: input dimension mismatch");
    if (const auto* lin = std::get_if<LinearModel>(&model)) {
        Vector s = matVec(lin->W, x);
        axpy(1.0, lin->b, s);
        return s;
    }
    return mlpForward(std::get<MlpModel>(model), x).scores;
}

Prediction forward(const Model& model, std::span<const double> x) {
    Prediction p;
    p.scores = scores(model, x);
    p.signs = signsOf(p.scores);
    return p;
}

Vector inputGradient(const Model& model, std::span<const double> x, std::size_t j) {
    if (j >= labelCount(model))
        throw std::invalid_argument("inputGradient: label index out of range");
    if (x.size() != featureCount(model))
        throw std::invalid_argument("inputGradient: input dimension mismatch");
    if (const auto* lin = std::get_if<LinearModel>(&model))
        return lin->W.rowCopy(j);
    const auto& mlp = std::get<MlpModel>(model);
    MlpForward f = mlpForward(mlp, x);
    // W1^T diag(1 - t^2) w2_j
    Vector e(mlp.hidden());
    for (std::size_t l = 0; l < e.size(); ++l) e[l] = f.dact[l] * mlp.W2(j, l);
    return matTVec(mlp.W1, e);
}

std::vector<Vector> allInputGradients(const Model& model, std::span<const double> x) {
    const std::size_t m = labelCount(model);
    std::vector<Vector> grads(m);
    if (const auto* lin = std::get_if<LinearModel>(&model)) {
        if (x.size() != lin->features())
            throw std::invalid_argument("allInputGradients: input dimension mismatch");
        for (std::size_t j = 0; j < m; ++j) grads[j] = lin->W.rowCopy(j);
        return grads;
    }
    const auto& mlp = std::get<MlpModel>(model);
    if (x.size() != mlp.features())
        throw std::invalid_argument("allInputGradients: input dimension mismatch");
    MlpForward f = mlpForward(mlp, x);
    Vector e(mlp.hidden());
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t l = 0; l < e.size(); ++l) e[l] = f.dact[l] * mlp.W2(j, l);
        grads[j] = matTVec(mlp.W1, e);
    }
    return grads;
}

std::size_t paramCount(const Model& model) {
    if (const auto* lin = std::get_if<LinearModel>(&model))
        return lin->W.data.size() + lin->b.size();
    const auto& mlp = std::get<MlpModel>(model);
    return mlp.W1.data.size() + mlp.b1.size() + mlp.W2.data.size() + mlp.b2.size();
}

Vector packParams(const Model& model) {
    Vector out;
    out.reserve(paramCount(model));
    auto append = [&out](const std::vector<double>& v) {
        out.insert(out.end(), v.begin(), v.end());
    };
    if (const auto* lin = std::get_if<LinearModel>(&model)) {
        append(lin->W.data);
        append(lin->b);
    } else {
        const auto& mlp = std::get<MlpModel>(model);
        append(mlp.W1.data);
        append(mlp.b1);
        append(mlp.W2.data);
        append(mlp.b2);
    }
    return out;
}

void unpackParams(Model& model, std::span<const double> params) {
    if (params.size() != paramCount(model))
        throw std::invalid_argument("unpackParams: size mismatch");
    std::size_t pos = 0;
    auto take = [&](std::vector<double>& v) {
        std::copy(params.begin() + pos, params.begin() + pos + v.size(), v.begin());
        pos += v.size();
    };
    if (auto* lin = std::get_if<LinearModel>(&model)) {
        take(lin->W.data);
        take(lin->b);
    } else {
        auto& mlp = std::get<MlpModel>(model);
        take(mlp.W1.data);
        take(mlp.b1);
        take(mlp.W2.data);
        take(mlp.b2);
    }
}

Vector paramGradients(const Model& model, std::span<const double> x,
                      std::span<const double> y, LossKind loss) {
    if (loss != LossKind::Hinge)
        throw std::invalid_argument("paramGradients: unsupported loss");
    const std::size_t m = labelCount(model);
    if (y.size() != m)
        throw std::invalid_argument("paramGradients: label dimension mismatch");

    Vector grad(paramCount(model), 0.0);
    if (const auto* lin = std::get_if<LinearModel>(&model)) {
        Vector s = scores(model, x);
        const std::size_t d = lin->features();
        for (std::size_t j = 0; j < m; ++j) {
            if (y[j] * s[j] < 1.0) { // active hinge; kink chooses 0
                for (std::size_t q = 0; q < d; ++q) grad[j * d + q] -= y[j] * x[q];
                grad[m * d + j] -= y[j];
            }
        }
        return grad;
    }

    const auto& mlp = std::get<MlpModel>(model);
    MlpForward f = mlpForward(mlp, x);
    const std::size_t k = mlp.hidden();
    const std::size_t d = mlp.features();
    const std::size_t offW1 = 0, offB1 = k * d, offW2 = k * d + k, offB2 = offW2 + m * k;

    Vector dScore(m, 0.0);
    for (std::size_t j = 0; j < m; ++j)
        if (y[j] * f.scores[j] < 1.0) dScore[j] = -y[j];

    Vector dAct(k, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        if (dScore[j] == 0.0) continue;
        for (std::size_t l = 0; l < k; ++l) {
            grad[offW2 + j * k + l] += dScore[j] * f.act[l];
            dAct[l] += dScore[j] * mlp.W2(j, l);
        }
        grad[offB2 + j] += dScore[j];
    }
    for (std::size_t l = 0; l < k; ++l) {
        double dPre = dAct[l] * f.dact[l];
        if (dPre == 0.0) continue;
        for (std::size_t q = 0; q < d; ++q) grad[offW1 + l * d + q] += dPre * x[q];
        grad[offB1 + l] += dPre;
    }
    return grad;
}

namespace {

nlohmann::json weightsJson(std::initializer_list<const std::vector<double>*> blocks) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto* b : blocks) arr.push_back(*b);
    return arr;
}

} // namespace

std::string toJson(const Model& model) {
    nlohmann::json j;
    j["schemaVersion"] = kModelSchemaVersion;
    if (const auto* lin = std::get_if<LinearModel>(&model)) {
        j["kind"] = "linear";
        j["dims"] = {lin->labels(), lin->features()};
        j["weights"] = weightsJson({&lin->W.data, &lin->b});
    } else {
        const auto& mlp = std::get<MlpModel>(model);
        j["kind"] = "mlp";
        j["dims"] = {mlp.labels(), mlp.features(), mlp.hidden()};
        j["weights"] = weightsJson({&mlp.W1.data, &mlp.b1, &mlp.W2.data, &mlp.b2});
        j["activation"] = "tanh";
    }
    return j.dump();
}

Model modelFromJson(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (!j.contains("schemaVersion") || j["schemaVersion"].get<int>() != kModelSchemaVersion)
        throw std::invalid_argument("model file: unsupported schema version");
    const std::string kind = j.at("kind").get<std::string>();
    const auto dims = j.at("dims").get<std::vector<std::size_t>>();
    const auto weights = j.at("weights").get<std::vector<std::vector<double>>>();
    if (kind == "linear") {
        if (dims.size() != 2 || weights.size() != 2)
            throw std::invalid_argument("model file: malformed linear model");
        return LinearModel(Matrix(dims[0], dims[1], weights[0]), Vector(weights[1]));
    }
    if (kind == "mlp") {
        if (dims.size() != 3 || weights.size() != 4)
            throw std::invalid_argument("model file: malformed mlp model");
        if (j.value("activation", "tanh") != std::string("tanh"))
            throw std::invalid_argument("model file: unsupported activation");
        return MlpModel(Matrix(dims[2], dims[1], weights[0]), Vector(weights[1]),
                        Matrix(dims[0], dims[2], weights[2]), Vector(weights[3]));
    }
    throw std::invalid_argument("model file: unknown kind '" + kind + "'");
}

void saveModel(const Model& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open model file for writing: " + path);
    out << toJson(model) << '\n';
}

Model loadModel(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return modelFromJson(text);
}

} // namespace malt
