#include "malt/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "malt/errors.hpp"
#include "malt/rng.hpp"

namespace malt {

namespace {

constexpr int kDatasetSchemaVersion = 1;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Gaussian vector orthogonalized against `basis` and normalized.
Vector drawOrthonormal(Rng& rng, std::size_t d, const std::vector<Vector>& basis) {
    for (int attempt = 0; attempt < 64; ++attempt) {
        Vector v(d);
        for (double& x : v) x = rng.gaussian();
        for (const Vector& q : basis) axpy(-dot(v, q), q, v);
        double n = norm2(v);
        if (n > 1e-8) return scaled(v, 1.0 / n);
    }
    throw NumericError("failed to draw an orthonormal direction");
}

} // namespace

const std::vector<std::size_t>& Dataset::split(const std::string& name) const {
    if (name == "train") return splits.train;
    if (name == "val") return splits.val;
    if (name == "test") return splits.test;
    throw std::invalid_argument("unknown split '" + name + "'");
}

Generated generate(const SynthSpec& spec) {
    if (spec.n == 0 || spec.d == 0 || spec.m == 0)
        throw std::invalid_argument("generate: n, d, m must be positive");
    if (spec.rho < 0.0 || spec.rho > 1.0)
        throw std::invalid_argument("generate: rho must lie in [0, 1]");
    if (spec.margin <= 0.0)
        throw std::invalid_argument("generate: margin must be positive");
    if (spec.labelNoise < 0.0 || spec.labelNoise >= 0.5)
        throw std::invalid_argument("generate: label noise must lie in [0, 0.5)");

    Rng rng(spec.seed);

    // Ground-truth unit directions with pairwise cosine exactly rho:
    // w_j = sqrt(rho) q0 + sqrt(1-rho) q_j over orthonormal q0, q1, .., qm.
    Matrix W(spec.m, spec.d);
    if (spec.rho == 1.0) {
        Vector q0 = drawOrthonormal(rng, spec.d, {});
        for (std::size_t j = 0; j < spec.m; ++j)
            std::copy(q0.begin(), q0.end(), W.row(j).begin());
    } else {
        const std::size_t needed = spec.rho == 0.0 ? spec.m : spec.m + 1;
        if (needed > spec.d) throw std::invalid_argument("cannot orthogonalize");
        std::vector<Vector> basis;
        Vector q0;
        if (spec.rho > 0.0) {
            q0 = drawOrthonormal(rng, spec.d, basis);
            basis.push_back(q0);
        }
        const double a = std::sqrt(spec.rho);
        const double b = std::sqrt(1.0 - spec.rho);
        for (std::size_t j = 0; j < spec.m; ++j) {
            Vector qj = drawOrthonormal(rng, spec.d, basis);
            basis.push_back(qj);
            auto row = W.row(j);
            for (std::size_t q = 0; q < spec.d; ++q)
                row[q] = (spec.rho > 0.0 ? a * q0[q] : 0.0) + b * qj[q];
        }
    }

    Matrix X(spec.n, spec.d);
    Matrix Y(spec.n, spec.m);
    Vector x(spec.d);
    for (std::size_t i = 0; i < spec.n; ++i) {
        bool ok = false;
        for (int attempt = 0; attempt < 100000 && !ok; ++attempt) {
            for (double& v : x) v = rng.gaussian();
            ok = true;
            for (std::size_t j = 0; j < spec.m && ok; ++j)
                ok = std::abs(dot(W.row(j), x)) >= spec.margin;
        }
        if (!ok) throw NumericError("generate: margin resampling cap reached");
        std::copy(x.begin(), x.end(), X.row(i).begin());
        for (std::size_t j = 0; j < spec.m; ++j)
            Y(i, j) = dot(W.row(j), x) > 0.0 ? 1.0 : -1.0;
    }

    // Self-consistency gate: before noise, the ground truth must classify
    // every instance correctly (margin enforcement guarantees it).
    for (std::size_t i = 0; i < spec.n; ++i)
        for (std::size_t j = 0; j < spec.m; ++j) {
            double s = dot(W.row(j), X.row(i));
            if ((s > 0.0 ? 1.0 : -1.0) != Y(i, j))
                throw NumericError("generate: self-consistency gate failed");
        }

    for (std::size_t i = 0; i < spec.n; ++i)
        for (std::size_t j = 0; j < spec.m; ++j)
            if (rng.uniform() < spec.labelNoise) Y(i, j) = -Y(i, j);

    std::vector<std::size_t> order(spec.n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    const auto nTrain = static_cast<std::size_t>(std::llround(0.5 * spec.n));
    const auto nVal = static_cast<std::size_t>(std::llround(0.3 * spec.n));

    Generated out;
    out.dataset.X = std::move(X);
    out.dataset.Y = std::move(Y);
    auto& s = out.dataset.splits;
    s.train.assign(order.begin(), order.begin() + nTrain);
    s.val.assign(order.begin() + nTrain,
                 order.begin() + std::min(nTrain + nVal, spec.n));
    s.test.assign(order.begin() + std::min(nTrain + nVal, spec.n), order.end());
    out.groundTruthW = std::move(W);
    return out;
}

void saveCsv(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open csv for writing: " + path);
    const std::size_t d = dataset.features();
    const std::size_t m = dataset.labels();
    for (std::size_t q = 0; q < d; ++q) out << 'f' << q << ',';
    for (std::size_t j = 0; j < m; ++j) out << 'l' << j << (j + 1 < m ? "," : "\n");
    for (std::size_t i = 0; i < dataset.instances(); ++i) {
        for (std::size_t q = 0; q < d; ++q) out << fmt17(dataset.X(i, q)) << ',';
        for (std::size_t j = 0; j < m; ++j)
            out << (dataset.Y(i, j) > 0 ? "1" : "-1") << (j + 1 < m ? "," : "\n");
    }
}

namespace {

std::vector<std::string> splitFields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) fields.push_back(cur);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

} // namespace

Dataset loadCsv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open csv: " + path);
    std::string line;
    if (!std::getline(in, line) || line.empty())
        throw std::runtime_error(path + ": missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = splitFields(line);
    std::size_t d = 0;
    while (d < header.size() && header[d] == "f" + std::to_string(d)) ++d;
    std::size_t m = 0;
    while (d + m < header.size() && header[d + m] == "l" + std::to_string(m)) ++m;
    if (d == 0 || m == 0 || d + m != header.size())
        throw std::runtime_error(path + ": missing header");

    std::vector<double> xs;
    std::vector<double> ys;
    std::size_t n = 0;
    std::size_t lineNo = 1;
    while (std::getline(in, line)) {
        ++lineNo;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = splitFields(line);
        if (fields.size() != d + m)
            throw std::runtime_error(path + ": line " + std::to_string(lineNo) +
                                     ": expected " + std::to_string(d + m) +
                                     " fields, got " + std::to_string(fields.size()));
        for (std::size_t q = 0; q < d; ++q) {
            char* end = nullptr;
            double v = std::strtod(fields[q].c_str(), &end);
            if (end == fields[q].c_str() || *end != '\0' || !std::isfinite(v))
                throw std::runtime_error(path + ": line " + std::to_string(lineNo) +
                                         ": bad feature value '" + fields[q] + "'");
            xs.push_back(v);
        }
        for (std::size_t j = 0; j < m; ++j) {
            const std::string& f = fields[d + j];
            if (f != "1" && f != "-1")
                throw std::runtime_error(path + ": line " + std::to_string(lineNo) +
                                         ": label value must be -1 or 1, got '" + f + "'");
            ys.push_back(f == "1" ? 1.0 : -1.0);
        }
        ++n;
    }
    Dataset out;
    out.X = Matrix(n, d, std::move(xs));
    out.Y = Matrix(n, m, std::move(ys));
    return out;
}

std::string metaPathFor(const std::string& csvPath) {
    auto dotPos = csvPath.rfind('.');
    auto slashPos = csvPath.find_last_of("/\\");
    if (dotPos == std::string::npos ||
        (slashPos != std::string::npos && dotPos < slashPos))
        return csvPath + ".meta.json";
    return csvPath.substr(0, dotPos) + ".meta.json";
}

void saveDatasetFiles(const Dataset& dataset, const DatasetMeta& meta,
                      const std::string& csvPath) {
    saveCsv(dataset, csvPath);
    nlohmann::json j;
    j["schemaVersion"] = kDatasetSchemaVersion;
    j["n"] = dataset.instances();
    j["d"] = dataset.features();
    j["m"] = dataset.labels();
    j["seed"] = meta.seed;
    j["rho"] = meta.rho;
    j["margin"] = meta.margin;
    j["labelNoise"] = meta.labelNoise;
    if (dataset.clipBox)
        j["clipBox"] = {dataset.clipBox->lo, dataset.clipBox->hi};
    else
        j["clipBox"] = nullptr;
    j["splits"] = {{"train", dataset.splits.train},
                   {"val", dataset.splits.val},
                   {"test", dataset.splits.test}};
    std::ofstream out(metaPathFor(csvPath), std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open sidecar for writing: " + metaPathFor(csvPath));
    out << j.dump(2) << '\n';
}

Dataset loadDatasetFiles(const std::string& csvPath) {
    Dataset dataset = loadCsv(csvPath);
    const std::string metaPath = metaPathFor(csvPath);
    std::ifstream in(metaPath, std::ios::binary);
    if (!in) throw std::runtime_error("missing dataset sidecar: " + metaPath);
    nlohmann::json j = nlohmann::json::parse(in);
    if (!j.contains("schemaVersion") || j["schemaVersion"].get<int>() != kDatasetSchemaVersion)
        throw std::runtime_error(metaPath + ": unsupported schema version");
    if (j.at("n").get<std::size_t>() != dataset.instances() ||
        j.at("d").get<std::size_t>() != dataset.features() ||
        j.at("m").get<std::size_t>() != dataset.labels())
        throw std::runtime_error(metaPath + ": shape does not match csv");
    if (!j.at("clipBox").is_null()) {
        auto box = j["clipBox"].get<std::vector<double>>();
        if (box.size() != 2 || !(box[0] < box[1]))
            throw std::runtime_error(metaPath + ": malformed clipBox");
        dataset.clipBox = ClipBox{box[0], box[1]};
    }
    dataset.splits.train = j.at("splits").at("train").get<std::vector<std::size_t>>();
    dataset.splits.val = j.at("splits").at("val").get<std::vector<std::size_t>>();
    dataset.splits.test = j.at("splits").at("test").get<std::vector<std::size_t>>();
    for (const auto* split : {&dataset.splits.train, &dataset.splits.val, &dataset.splits.test})
        for (std::size_t idx : *split)
            if (idx >= dataset.instances())
                throw std::runtime_error(metaPath + ": split index out of range");
    return dataset;
}

} // namespace malt
