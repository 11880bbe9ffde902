#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "malt/model.hpp"
#include "malt/rng.hpp"
#include "malt/sae.hpp"
#include "support.hpp"

using namespace malt;
using namespace testsupport;

namespace {

TransferVectors vectorsOf(std::vector<Vector> a) {
    TransferVectors v;
    v.a = std::move(a);
    return v;
}

// Linear model and input with every |h_j| above the clamp threshold.
struct ScoredInstance {
    LinearModel model;
    Vector x;
};

ScoredInstance wellScoredInstance(Rng& rng, std::size_t m, std::size_t d) {
    for (;;) {
        LinearModel model = randomLinear(rng, m, d);
        Vector x = randomVector(rng, d);
        Vector h = scores(Model(model), x);
        bool ok = true;
        for (double s : h) ok = ok && std::abs(s) > 0.05;
        if (ok) return {std::move(model), std::move(x)};
    }
}

} // namespace

TEST_CASE("directional attackability on the identity model") {
    LinearModel lin(Matrix(2, 2, {1.0, 0.0, 0.0, 1.0}));
    double inv = -1.0 / std::sqrt(2.0);
    double got = directionalAttackability(Model(lin), Vector{1.0, 1.0}, Vector{inv, inv});
    CHECK(std::abs(got - std::sqrt(2.0)) <= 1e-12);
}

TEST_CASE("directional attackability is zero for orthogonal directions") {
    LinearModel lin(Matrix(2, 3, {1.0, 0.0, 0.0, 0.0, 1.0, 0.0}));
    double got = directionalAttackability(Model(lin), Vector{1.0, 1.0, 1.0},
                                          Vector{0.0, 0.0, 1.0});
    CHECK(got == 0.0);
}

TEST_CASE("directional attackability requires a unit direction") {
    LinearModel lin(Matrix(1, 2, {1.0, 0.0}));
    CHECK_THROWS_AS(
        directionalAttackability(Model(lin), Vector{1.0, 0.0}, Vector{0.5, 0.0}),
        std::invalid_argument);
}

TEST_CASE("near-boundary scores are rejected unless clamped") {
    LinearModel lin(Matrix(1, 2, {1.0, 0.0}));
    Vector x{0.0, 1.0}; // h = 0
    CHECK_THROWS_WITH_AS(transferVectorsRaw(Model(lin), x, false), "near-boundary score",
                         std::invalid_argument);
    TransferVectors clamped = transferVectorsRaw(Model(lin), x, true);
    CHECK(clamped.a[0][0] == doctest::Approx(-1.0 / kScoreDenomEta));
}

TEST_CASE("directional attackability equals the regrouped subset form") {
    Rng rng(51);
    for (int rep = 0; rep < 50; ++rep) {
        auto [model, x] = wellScoredInstance(rng, 6, 8);
        Vector rdir = randomUnit(rng, 8);
        double got = directionalAttackability(Model(model), x, rdir);

        // Regrouped form: sum a_j over the labels the direction pushes.
        TransferVectors vectors = transferVectorsRaw(Model(model), x, false);
        Vector sum(8, 0.0);
        for (std::size_t j = 0; j < 6; ++j)
            if (dot(rdir, vectors.a[j]) > 0.0) axpy(1.0, vectors.a[j], sum);
        CHECK(std::abs(got - dot(rdir, sum)) <= 1e-10);
    }
}

TEST_CASE("labeled directional variant uses the exponential denominators") {
    LinearModel lin(Matrix(1, 2, {2.0, 0.0}));
    Vector x{1.0, 0.0};       // h = 2
    Vector yPos{1.0};         // margin +2: denominator e^2
    Vector yNeg{-1.0};        // margin -2: denominator e^{-2} > alpha
    Vector rdir{-1.0, 0.0};   // pushes h down
    double pos = directionalAttackabilityReg(Model(lin), x, rdir, yPos, 0.01);
    CHECK(pos == doctest::Approx(2.0 / std::exp(2.0)).epsilon(1e-12));
    // For y = -1 the harmful direction reverses; this rdir helps, so 0.
    CHECK(directionalAttackabilityReg(Model(lin), x, rdir, yNeg, 0.01) == 0.0);
    Vector rdirUp{1.0, 0.0};
    double neg = directionalAttackabilityReg(Model(lin), x, rdirUp, yNeg, 0.01);
    CHECK(neg == doctest::Approx(2.0 / std::exp(-2.0)).epsilon(1e-12));
}

TEST_CASE("greedy on a single label") {
    SaeScore score = saeGreedy(vectorsOf({Vector{-1.0, 0.0}}));
    CHECK(score.phi == doctest::Approx(1.0));
    CHECK(score.subset == std::vector<std::size_t>{0});
    CHECK(score.perLabelTerms[0] == doctest::Approx(1.0));
}

TEST_CASE("greedy combines orthogonal vectors") {
    SaeScore score = saeGreedy(vectorsOf({Vector{1.0, 0.0}, Vector{0.0, 1.0}}));
    CHECK(score.subset == std::vector<std::size_t>{0, 1});
    CHECK(score.phi == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("greedy rejects unsupported dual orders") {
    CHECK_THROWS_AS(saeGreedy(vectorsOf({Vector{1.0}}), 3.0), std::invalid_argument);
}

TEST_CASE("brute force on degenerate inputs") {
    SaeScore zeros = saeBruteforce(vectorsOf({Vector{0.0, 0.0}, Vector{0.0, 0.0}}));
    CHECK(zeros.phi == 0.0);
    CHECK(zeros.subset.empty());

    SaeScore opposing = saeBruteforce(vectorsOf({Vector{1.0, 0.0}, Vector{-1.0, 0.0}}));
    CHECK(opposing.phi == doctest::Approx(1.0));
    CHECK(opposing.subset == std::vector<std::size_t>{0});

    std::vector<Vector> tooMany(21, Vector{1.0});
    CHECK_THROWS_WITH_AS(saeBruteforce(vectorsOf(tooMany)), "enumeration cap",
                         std::invalid_argument);
}

TEST_CASE("greedy empty-subset convention matches brute force on zeros") {
    SaeScore score = saeGreedy(vectorsOf({Vector{0.0, 0.0}, Vector{0.0, 0.0}}));
    CHECK(score.phi == 0.0);
    CHECK(score.subset.empty());
}

TEST_CASE("greedy is bounded by brute force and exact on aligned instances") {
    Rng rng(52);
    int alignedCases = 0;
    for (int rep = 0; rep < 200; ++rep) {
        std::size_t m = 1 + rng.below(10);
        std::size_t d = 2 + rng.below(5);
        bool positiveOrthant = rep % 2 == 0;
        std::vector<Vector> a(m);
        for (Vector& v : a) {
            v = randomVector(rng, d);
            if (positiveOrthant)
                for (double& t : v) t = std::abs(t);
        }
        TransferVectors vectors = vectorsOf(a);
        SaeScore greedy = saeGreedy(vectors);
        SaeScore brute = saeBruteforce(vectors);

        CHECK(greedy.phi <= brute.phi + 1e-9);
        CHECK(greedy.phi + 1e-9 >= greedy.perLabelTerms[0]); // first-step lower bound
        double maxTerm = 0.0, sumTerm = 0.0;
        for (double t : greedy.perLabelTerms) {
            maxTerm = std::max(maxTerm, t);
            sumTerm += t;
        }
        CHECK(greedy.phi + 1e-9 >= maxTerm);
        CHECK(brute.phi <= sumTerm + 1e-9);

        bool allPairsAligned = true;
        for (std::size_t i = 0; i < m && allPairsAligned; ++i)
            for (std::size_t j = i + 1; j < m; ++j)
                if (dot(a[i], a[j]) < 0.0) {
                    allPairsAligned = false;
                    break;
                }
        if (allPairsAligned) {
            ++alignedCases;
            CHECK(greedy.phi == doctest::Approx(brute.phi).epsilon(1e-9));
        }
    }
    CHECK(alignedCases > 50); // the positive-orthant half guarantees plenty
}

TEST_CASE("brute force agrees with direction sampling") {
    Rng rng(53);
    for (int rep = 0; rep < 5; ++rep) {
        auto [model, x] = wellScoredInstance(rng, 8, 6);
        TransferVectors vectors = transferVectorsRaw(Model(model), x, false);
        SaeScore brute = saeBruteforce(vectors);

        double sampledMax = 0.0;
        for (int s = 0; s < 10000; ++s) {
            Vector rdir = randomUnit(rng, 6);
            sampledMax =
                std::max(sampledMax, directionalAttackability(Model(model), x, rdir));
        }
        CHECK(sampledMax <= brute.phi + 1e-9);

        Vector sum(6, 0.0);
        for (std::size_t j : brute.subset) axpy(1.0, vectors.a[j], sum);
        if (brute.phi > 0.0) {
            Vector star = scaled(sum, 1.0 / norm2(sum));
            double attained = directionalAttackability(Model(model), x, star);
            CHECK(attained >= brute.phi - 1e-9);
        }
    }
}

TEST_CASE("scaling every vector scales phi and keeps subsets") {
    Rng rng(54);
    for (int rep = 0; rep < 20; ++rep) {
        std::size_t m = 2 + rng.below(6);
        std::vector<Vector> a(m);
        for (Vector& v : a) v = randomVector(rng, 4);
        double c = 0.1 + 5.0 * rng.uniform();

        std::vector<Vector> b(m);
        for (std::size_t j = 0; j < m; ++j) b[j] = scaled(a[j], c);

        SaeScore g1 = saeGreedy(vectorsOf(a)), g2 = saeGreedy(vectorsOf(b));
        SaeScore b1 = saeBruteforce(vectorsOf(a)), b2 = saeBruteforce(vectorsOf(b));
        CHECK(g2.phi == doctest::Approx(c * g1.phi).epsilon(1e-10));
        CHECK(b2.phi == doctest::Approx(c * b1.phi).epsilon(1e-10));
        CHECK(g1.subset == g2.subset);
        CHECK(b1.subset == b2.subset);
    }
}

TEST_CASE("regularizer denominators") {
    // Confident correct prediction: huge denominator, tiny phi-hat.
    LinearModel confident(Matrix(1, 2, {1.0, 0.0}), Vector{0.0});
    Vector xBig{10.0, 0.0};
    SaeScore tiny = saeRegularizerValue(Model(confident), xBig, Vector{1.0}, 0.01);
    CHECK(tiny.phi == doctest::Approx(1.0 / std::exp(10.0)).epsilon(1e-9));

    // Misclassified with margin -1: denominator e^{-1}, clamp inactive.
    LinearModel unit(Matrix(1, 2, {1.0, 0.0}), Vector{0.0});
    Vector xOne{1.0, 0.0};
    SaeScore mild = saeRegularizerValue(Model(unit), xOne, Vector{-1.0}, 0.01);
    CHECK(mild.phi == doctest::Approx(std::exp(1.0)).epsilon(1e-12));

    // Margin -10: e^{-10} < alpha, clamp active at 0.01.
    Vector xTen{10.0, 0.0};
    SaeScore clamped = saeRegularizerValue(Model(unit), xTen, Vector{-1.0}, 0.01);
    CHECK(clamped.phi == doctest::Approx(1.0 / 0.01).epsilon(1e-12));

    CHECK_THROWS_AS(saeRegularizerValue(Model(unit), xOne, Vector{-1.0}, 0.0),
                    std::invalid_argument);
}

TEST_CASE("cWz on aligned and orthogonal rows") {
    Matrix aligned(2, 2, {1.0, 0.0, 1.0, 0.0});
    SaeScore a = cWz(aligned, Vector{1.0, 1.0});
    CHECK(a.phi == doctest::Approx(2.0));
    CHECK(a.subset == std::vector<std::size_t>{0, 1});

    Matrix ortho(2, 2, {1.0, 0.0, 0.0, 1.0});
    CHECK(cWz(ortho, Vector{1.0, 1.0}).phi == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("cWz equals brute force on signed rows") {
    Rng rng(55);
    for (int rep = 0; rep < 30; ++rep) {
        std::size_t m = 1 + rng.below(8);
        Matrix W = randomMatrix(rng, m, 5);
        Vector y = randomLabels(rng, m);
        std::vector<Vector> signedRows(m);
        for (std::size_t j = 0; j < m; ++j) signedRows[j] = scaled(W.row(j), y[j]);
        SaeScore direct = cWz(W, y);
        SaeScore viaBrute = saeBruteforce(vectorsOf(signedRows));
        CHECK(direct.phi == doctest::Approx(viaBrute.phi).epsilon(1e-12));
        CHECK(direct.subset == viaBrute.subset);
    }
}

TEST_CASE("cWz is bounded by the row-norm sum, equality when aligned") {
    Rng rng(56);
    for (int rep = 0; rep < 200; ++rep) {
        std::size_t m = 1 + rng.below(8);
        Matrix W = randomMatrix(rng, m, 6);
        Vector y = randomLabels(rng, m);
        double sumNorm = 0.0;
        for (std::size_t j = 0; j < m; ++j) sumNorm += norm2(W.row(j));
        CHECK(cWz(W, y).phi <= sumNorm + 1e-9);
    }

    // All signed rows on one ray: the bound is attained.
    Vector dir = randomUnit(rng, 6);
    Matrix W(3, 6);
    Vector y{1.0, -1.0, 1.0};
    Vector coef{0.5, -1.5, 2.0}; // y_j * coef_j > 0, so y_j w_j all align
    double sumNorm = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
        for (std::size_t q = 0; q < 6; ++q) W(j, q) = coef[j] * dir[q];
        sumNorm += std::abs(coef[j]);
    }
    CHECK(cWz(W, y).phi == doctest::Approx(sumNorm).epsilon(1e-10));
}
