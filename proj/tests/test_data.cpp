#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>

#include "malt/dataset.hpp"
#include "malt/errors.hpp"
#include "malt/rng.hpp"
#include "support.hpp"

using namespace malt;
using testsupport::ScratchDir;

namespace {

SynthSpec baseSpec() {
    SynthSpec spec;
    spec.n = 200;
    spec.d = 10;
    spec.m = 3;
    spec.rho = 0.5;
    spec.margin = 0.1;
    spec.labelNoise = 0.0;
    spec.seed = 7;
    return spec;
}

} // namespace

TEST_CASE("rho of one makes all label columns identical") {
    SynthSpec spec = baseSpec();
    spec.rho = 1.0;
    Generated gen = generate(spec);
    for (std::size_t i = 0; i < spec.n; ++i)
        for (std::size_t j = 1; j < spec.m; ++j)
            CHECK(gen.dataset.Y(i, j) == gen.dataset.Y(i, 0));
}

TEST_CASE("rho of zero decorrelates the labels") {
    SynthSpec spec = baseSpec();
    spec.n = 2000;
    spec.m = 2;
    spec.rho = 0.0;
    Generated gen = generate(spec);
    double mean0 = 0, mean1 = 0;
    for (std::size_t i = 0; i < spec.n; ++i) {
        mean0 += gen.dataset.Y(i, 0);
        mean1 += gen.dataset.Y(i, 1);
    }
    mean0 /= spec.n;
    mean1 /= spec.n;
    double cov = 0, var0 = 0, var1 = 0;
    for (std::size_t i = 0; i < spec.n; ++i) {
        double a = gen.dataset.Y(i, 0) - mean0;
        double b = gen.dataset.Y(i, 1) - mean1;
        cov += a * b;
        var0 += a * a;
        var1 += b * b;
    }
    CHECK(std::abs(cov / std::sqrt(var0 * var1)) < 0.1);
}

TEST_CASE("ground-truth directions have pairwise cosine rho and unit norm") {
    for (double rho : {0.0, 0.3, 0.9}) {
        SynthSpec spec = baseSpec();
        spec.rho = rho;
        Generated gen = generate(spec);
        for (std::size_t j = 0; j < spec.m; ++j) {
            CHECK(norm2(gen.groundTruthW.row(j)) == doctest::Approx(1.0).epsilon(1e-12));
            for (std::size_t k = j + 1; k < spec.m; ++k)
                CHECK(cosine(gen.groundTruthW.row(j), gen.groundTruthW.row(k)) ==
                      doctest::Approx(rho).epsilon(1e-9));
        }
    }
}

TEST_CASE("margins are enforced and the ground truth classifies perfectly") {
    SynthSpec spec = baseSpec();
    Generated gen = generate(spec);
    for (std::size_t i = 0; i < spec.n; ++i)
        for (std::size_t j = 0; j < spec.m; ++j) {
            double score = dot(gen.groundTruthW.row(j), gen.dataset.X.row(i));
            CHECK(std::abs(score) >= spec.margin);
            CHECK((score > 0 ? 1.0 : -1.0) == gen.dataset.Y(i, j)); // noise is 0
        }
}

TEST_CASE("orthogonalization fails when too many labels are requested") {
    SynthSpec spec = baseSpec();
    spec.rho = 0.0;
    spec.m = 30;
    spec.d = 20;
    CHECK_THROWS_WITH_AS(generate(spec), "cannot orthogonalize", std::invalid_argument);
}

TEST_CASE("generation validates its spec") {
    SynthSpec bad = baseSpec();
    bad.labelNoise = 0.5;
    CHECK_THROWS_AS(generate(bad), std::invalid_argument);
    bad = baseSpec();
    bad.rho = 1.5;
    CHECK_THROWS_AS(generate(bad), std::invalid_argument);
    bad = baseSpec();
    bad.margin = 0.0;
    CHECK_THROWS_AS(generate(bad), std::invalid_argument);
}

TEST_CASE("splits are deterministic, disjoint and sized 50/30/20") {
    SynthSpec spec = baseSpec();
    spec.n = 203; // odd size exercises the rounding
    Generated a = generate(spec);
    Generated b = generate(spec);
    CHECK(a.dataset.splits.train == b.dataset.splits.train);
    CHECK(a.dataset.splits.val == b.dataset.splits.val);
    CHECK(a.dataset.splits.test == b.dataset.splits.test);

    const auto& s = a.dataset.splits;
    CHECK(std::abs(static_cast<double>(s.train.size()) - 0.5 * spec.n) <= 1.0);
    CHECK(std::abs(static_cast<double>(s.val.size()) - 0.3 * spec.n) <= 1.0);
    CHECK(std::abs(static_cast<double>(s.test.size()) - 0.2 * spec.n) <= 1.0);

    std::vector<bool> seen(spec.n, false);
    for (const auto* split : {&s.train, &s.val, &s.test})
        for (std::size_t idx : *split) {
            CHECK(idx < spec.n);
            CHECK_FALSE(seen[idx]);
            seen[idx] = true;
        }
    CHECK(s.train.size() + s.val.size() + s.test.size() == spec.n);
}

TEST_CASE("csv round trip is bit exact") {
    ScratchDir dir("data_csv");
    SynthSpec spec = baseSpec();
    spec.labelNoise = 0.05;
    Generated gen = generate(spec);
    const std::string path = dir.file("data.csv");
    saveCsv(gen.dataset, path);
    Dataset back = loadCsv(path);
    REQUIRE(back.instances() == gen.dataset.instances());
    REQUIRE(back.features() == gen.dataset.features());
    REQUIRE(back.labels() == gen.dataset.labels());
    CHECK(std::memcmp(back.X.data.data(), gen.dataset.X.data.data(),
                      back.X.data.size() * sizeof(double)) == 0);
    CHECK(back.Y.data == gen.dataset.Y.data);
}

TEST_CASE("csv loader reports malformed input with line numbers") {
    ScratchDir dir("data_bad");

    auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream out(dir.file(name), std::ios::binary);
        out << text;
        return dir.file(name);
    };

    const std::string empty = write("empty.csv", "");
    CHECK_THROWS_WITH_AS(loadCsv(empty), (empty + ": missing header").c_str(),
                         std::runtime_error);

    const std::string badLabel =
        write("label.csv", "f0,f1,l0\n1.0,2.0,1\n0.5,0.25,0\n");
    try {
        loadCsv(badLabel);
        FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
        CHECK(std::string(e.what()).find("label value") != std::string::npos);
    }

    const std::string ragged = write("ragged.csv", "f0,f1,l0\n1.0,2.0,1\n0.5,1\n");
    try {
        loadCsv(ragged);
        FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }

    const std::string badHeader = write("header.csv", "x0,x1,l0\n1.0,2.0,1\n");
    CHECK_THROWS_AS(loadCsv(badHeader), std::runtime_error);

    const std::string badValue = write("value.csv", "f0,l0\nnotanumber,1\n");
    CHECK_THROWS_AS(loadCsv(badValue), std::runtime_error);
}

TEST_CASE("dataset files round trip splits and clip box through the sidecar") {
    ScratchDir dir("data_sidecar");
    SynthSpec spec = baseSpec();
    Generated gen = generate(spec);
    gen.dataset.clipBox = ClipBox{-1.0, 1.0};
    DatasetMeta meta{spec.seed, spec.rho, spec.margin, spec.labelNoise};
    const std::string path = dir.file("ds.csv");
    saveDatasetFiles(gen.dataset, meta, path);
    CHECK(metaPathFor(path) == dir.file("ds.meta.json"));

    Dataset back = loadDatasetFiles(path);
    CHECK(back.splits.train == gen.dataset.splits.train);
    CHECK(back.splits.val == gen.dataset.splits.val);
    CHECK(back.splits.test == gen.dataset.splits.test);
    REQUIRE(back.clipBox.has_value());
    CHECK(back.clipBox->lo == -1.0);
    CHECK(back.clipBox->hi == 1.0);
    CHECK(back.X.data == gen.dataset.X.data);

    std::remove(metaPathFor(path).c_str());
    CHECK_THROWS_AS(loadDatasetFiles(path), std::runtime_error);
}
