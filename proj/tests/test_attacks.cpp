#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <iostream>

#include "malt/attack.hpp"
#include "malt/rng.hpp"
#include "support.hpp"

using namespace malt;
using namespace testsupport;

namespace {

// Exact min-norm point of {C r <= rhs} by KKT active-set enumeration: for
// each candidate active set solve G lambda = -rhs_A and keep solutions with
// nonnegative multipliers that satisfy every constraint. Independent of the
// iterative solver under test.
struct KktOracle {
    bool feasible = false;
    Vector r;
};

bool solveDense(std::vector<Vector> A, Vector b, Vector& out) {
    const std::size_t n = b.size();
    out.assign(n, 0.0);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t row = col + 1; row < n; ++row)
            if (std::abs(A[row][col]) > std::abs(A[pivot][col])) pivot = row;
        if (std::abs(A[pivot][col]) < 1e-12) return false;
        std::swap(A[pivot], A[col]);
        std::swap(b[pivot], b[col]);
        for (std::size_t row = col + 1; row < n; ++row) {
            double f = A[row][col] / A[col][col];
            for (std::size_t k = col; k < n; ++k) A[row][k] -= f * A[col][k];
            b[row] -= f * b[col];
        }
    }
    for (std::size_t row = n; row-- > 0;) {
        double s = b[row];
        for (std::size_t k = row + 1; k < n; ++k) s -= A[row][k] * out[k];
        out[row] = s / A[row][row];
    }
    return true;
}

KktOracle kktMinNorm(const std::vector<Vector>& rows, const Vector& rhs, std::size_t dim) {
    const std::size_t K = rows.size();
    KktOracle best;
    double bestNorm = 0.0;
    for (std::uint32_t mask = 0; mask < (1u << K); ++mask) {
        std::vector<std::size_t> act;
        for (std::size_t k = 0; k < K; ++k)
            if (mask & (1u << k)) act.push_back(k);

        Vector r(dim, 0.0);
        if (!act.empty()) {
            std::vector<Vector> G(act.size(), Vector(act.size()));
            Vector negRhs(act.size());
            for (std::size_t a = 0; a < act.size(); ++a) {
                for (std::size_t b = 0; b < act.size(); ++b)
                    G[a][b] = dot(rows[act[a]], rows[act[b]]);
                negRhs[a] = -rhs[act[a]];
            }
            Vector lambda;
            if (!solveDense(G, negRhs, lambda)) continue;
            bool nonneg = true;
            for (double l : lambda) nonneg = nonneg && l >= -1e-9;
            if (!nonneg) continue;
            for (std::size_t a = 0; a < act.size(); ++a)
                axpy(-lambda[a], rows[act[a]], r);
        }
        bool ok = true;
        for (std::size_t k = 0; k < K && ok; ++k)
            ok = dot(rows[k], r) <= rhs[k] + 1e-8;
        if (!ok) continue;
        double n = norm2(r);
        if (!best.feasible || n < bestNorm) {
            best.feasible = true;
            best.r = r;
            bestNorm = n;
        }
    }
    return best;
}

// The same half-space system minNormFlip solves (bias included, no clip).
void buildRows(const LinearModel& model, const Vector& x, const Vector& y,
               const std::vector<std::size_t>& targets, double margin,
               std::vector<Vector>& rows, Vector& rhs) {
    Vector h = scores(Model(model), x);
    std::vector<bool> inT(model.labels(), false);
    for (std::size_t j : targets) inT[j] = true;
    rows.clear();
    rhs.clear();
    for (std::size_t j = 0; j < model.labels(); ++j) {
        if (inT[j]) {
            rows.push_back(scaled(model.W.row(j), y[j]));
            rhs.push_back(-margin - y[j] * h[j]);
        } else {
            rows.push_back(scaled(model.W.row(j), -y[j]));
            rhs.push_back(y[j] * h[j] - margin);
        }
    }
}

} // namespace

TEST_CASE("single-label min-norm flip lands on the hyperplane") {
    LinearModel lin(Matrix(1, 2, {3.0, 4.0}), Vector{0.0});
    Vector x{1.0, 0.5}; // w . x = 5, distance 5 / ||w|| = 1
    AttackOutcome out = minNormFlip(lin, x, Vector{1.0}, {0}, 0.0);
    REQUIRE(out.feasible);
    CHECK(out.rnorm == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(out.r[0] == doctest::Approx(-0.6).epsilon(1e-6));
    CHECK(out.r[1] == doctest::Approx(-0.8).epsilon(1e-6));
    CHECK(out.flipped == std::vector<std::size_t>{0});
}

TEST_CASE("identical rows make flip-one-keep-other infeasible") {
    LinearModel lin(Matrix(2, 2, {1.0, 0.0, 1.0, 0.0}), Vector(2, 0.0));
    AttackOutcome out = minNormFlip(lin, Vector{0.5, 0.5}, Vector{1.0, 1.0}, {0});
    CHECK_FALSE(out.feasible);
}

TEST_CASE("min-norm flip matches the KKT enumeration oracle") {
    Rng rng(61);
    int solved = 0;
    for (int rep = 0; rep < 60; ++rep) {
        std::size_t m = 2 + rng.below(4); // up to 5 labels
        std::size_t d = 3 + rng.below(4);
        LinearModel model = randomLinear(rng, m, d);
        Vector x = randomVector(rng, d);
        Vector y = randomLabels(rng, m);
        std::vector<std::size_t> targets;
        for (std::size_t j = 0; j < m; ++j)
            if (rng.uniform() < 0.4) targets.push_back(j);

        std::vector<Vector> rows;
        Vector rhs;
        const double margin = 1e-6;
        buildRows(model, x, y, targets, margin, rows, rhs);
        KktOracle oracle = kktMinNorm(rows, rhs, d);
        AttackOutcome out = minNormFlip(model, x, y, targets, margin);

        CHECK(out.feasible == oracle.feasible);
        if (oracle.feasible && out.feasible) {
            ++solved;
            double want = norm2(oracle.r);
            CHECK(out.rnorm ==
                  doctest::Approx(want).epsilon(1e-5).scale(std::max(want, 1e-6)));
            for (std::size_t q = 0; q < d; ++q)
                CHECK(out.r[q] == doctest::Approx(oracle.r[q]).epsilon(1e-4).scale(1.0));
        }
    }
    CHECK(solved > 20);
}

TEST_CASE("aligned boundaries let one perturbation flip both labels") {
    LinearModel lin(Matrix(2, 2, {1.0, 0.0, 1.0, 0.0}), Vector(2, 0.0));
    BudgetSpec budget;
    budget.epsilon = 0.6;
    ExactAttackability ex =
        exactAttackability(lin, Vector{0.5, 0.5}, Vector{1.0, 1.0}, budget);
    CHECK(ex.cStar == 2);
    CHECK(ex.witness.rnorm == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(ex.witness.r[0] == doctest::Approx(-0.5).epsilon(1e-4));
}

TEST_CASE("orthogonal boundaries cap the exact attackability at one") {
    LinearModel lin(Matrix(2, 2, {1.0, 0.0, 0.0, 1.0}), Vector(2, 0.0));
    BudgetSpec budget;
    budget.epsilon = 0.6;
    ExactAttackability ex =
        exactAttackability(lin, Vector{0.5, 0.5}, Vector{1.0, 1.0}, budget);
    CHECK(ex.cStar == 1);
}

TEST_CASE("exact oracle cap and budget validation") {
    LinearModel big(Matrix(13, 2, 1.0));
    BudgetSpec budget;
    budget.epsilon = 1.0;
    CHECK_THROWS_AS(exactAttackability(big, Vector{1.0, 1.0}, Vector(13, 1.0), budget),
                    std::invalid_argument);
    LinearModel ok(Matrix(2, 2, 1.0));
    BudgetSpec bad;
    bad.epsilon = -1.0;
    CHECK_THROWS_AS(exactAttackability(ok, Vector{1.0, 1.0}, Vector{1.0, 1.0}, bad),
                    std::invalid_argument);
}

TEST_CASE("exact enumeration matches a shuffled independent enumerator") {
    Rng rng(62);
    for (int rep = 0; rep < 25; ++rep) {
        std::size_t m = 2 + rng.below(5); // up to 6
        std::size_t d = 3 + rng.below(4);
        LinearModel model = randomLinear(rng, m, d);
        Vector x = randomVector(rng, d);
        Vector y = randomLabels(rng, m);
        BudgetSpec budget;
        budget.epsilon = 0.3 + 1.5 * rng.uniform();

        ExactAttackability got = exactAttackability(model, x, y, budget);

        // Independent pass: every subset in a shuffled order, best by
        // (size, rnorm, lexicographic subset).
        std::vector<std::uint32_t> masks(1u << m);
        for (std::uint32_t i = 0; i < masks.size(); ++i) masks[i] = i;
        rng.shuffle(masks);
        int bestSize = -1;
        double bestNorm = 0.0;
        std::vector<std::size_t> bestSubset;
        for (std::uint32_t mask : masks) {
            std::vector<std::size_t> targets;
            for (std::size_t j = 0; j < m; ++j)
                if (mask & (1u << j)) targets.push_back(j);
            AttackOutcome out = minNormFlip(model, x, y, targets);
            if (!out.feasible || out.rnorm > budget.epsilon) continue;
            int size = static_cast<int>(targets.size());
            bool better = size > bestSize ||
                          (size == bestSize && out.rnorm < bestNorm - 1e-12) ||
                          (size == bestSize && std::abs(out.rnorm - bestNorm) <= 1e-12 &&
                           std::lexicographical_compare(targets.begin(), targets.end(),
                                                        bestSubset.begin(), bestSubset.end()));
            if (better) {
                bestSize = size;
                bestNorm = out.rnorm;
                bestSubset = targets;
            }
        }
        CHECK(got.cStar == std::max(bestSize, 0));
        if (bestSize > 0)
            CHECK(got.witness.rnorm == doctest::Approx(bestNorm).epsilon(1e-9));
    }
}

TEST_CASE("greedy never beats exact and both grow with the budget") {
    Rng rng(63);
    int equal = 0, total = 0;
    for (int rep = 0; rep < 500; ++rep) {
        std::size_t m = 1 + rng.below(10);
        std::size_t d = 2 + rng.below(19);
        LinearModel model = randomLinear(rng, m, d);
        Vector x = randomVector(rng, d);
        Vector y = randomLabels(rng, m);

        int lastCa = 0, lastCstar = 0;
        bool first = true;
        for (double eps : {0.2, 0.6, 1.5}) {
            BudgetSpec budget;
            budget.epsilon = eps;
            GreedyAttackability greedy = greedyAttackability(Model(model), x, y, budget);
            int cstar = 0;
            if (m <= 8) { // keep the exact side tractable
                ExactAttackability ex = exactAttackability(model, x, y, budget);
                cstar = ex.cStar;
                CHECK(greedy.cA <= ex.cStar);
                if (ex.witness.feasible) {
                    // Witness re-verified through the model.
                    Vector h = scores(Model(model), added(x, ex.witness.r));
                    for (std::size_t j = 0; j < m; ++j) {
                        bool inT = std::find(ex.witness.flipped.begin(),
                                             ex.witness.flipped.end(),
                                             j) != ex.witness.flipped.end();
                        if (inT)
                            CHECK(y[j] * h[j] <= 0.0);
                        else
                            CHECK(y[j] * h[j] > 0.0);
                    }
                    CHECK(static_cast<int>(ex.witness.flipped.size()) == ex.cStar);
                }
                if (eps == 1.5) {
                    ++total;
                    if (greedy.cA == ex.cStar) ++equal;
                }
            }
            if (!first) {
                CHECK(greedy.cA >= lastCa);
                if (m <= 8) CHECK(cstar >= lastCstar);
            }
            lastCa = greedy.cA;
            lastCstar = cstar;
            first = false;

            if (greedy.cA > 0) {
                Vector h = scores(Model(model), added(x, greedy.outcome.r));
                for (std::size_t j : greedy.outcome.flipped) CHECK(y[j] * h[j] <= 0.0);
            }
        }
    }
    std::cout << "greedy == exact on " << equal << "/" << total
              << " instances at the largest budget\n";
    CHECK(total > 100);
    CHECK(equal > 0);
}

TEST_CASE("clip boxes constrain the exact witness") {
    LinearModel lin(Matrix(1, 2, {1.0, 0.0}), Vector{0.0});
    Vector x{0.5, 0.0};
    BudgetSpec loose;
    loose.epsilon = 2.0;
    ExactAttackability noClip = exactAttackability(lin, x, Vector{1.0}, loose);
    CHECK(noClip.cStar == 1);

    BudgetSpec clipped = loose;
    clipped.clip = ClipBox{0.2, 1.0}; // x + r can not cross the boundary
    ExactAttackability withClip = exactAttackability(lin, x, Vector{1.0}, clipped);
    CHECK(withClip.cStar == 0);
}

TEST_CASE("pgd returns immediately when targets already flipped") {
    Rng rng(64);
    MlpModel mlp = randomMlp(rng, 3, 4, 5);
    Vector x = randomVector(rng, 5);
    Vector h = scores(Model(mlp), x);
    Vector y(3);
    for (std::size_t j = 0; j < 3; ++j) y[j] = h[j] > 0 ? -1.0 : 1.0; // all "wrong"
    BudgetSpec budget;
    budget.epsilon = 0.5;
    AttackOutcome out = pgdAttack(Model(mlp), x, y, {0, 1, 2}, budget, 50, 0.05);
    CHECK(out.feasible);
    CHECK(out.rnorm == 0.0);
}

TEST_CASE("pgd with zero budget only succeeds on free flips") {
    Rng rng(65);
    MlpModel mlp = randomMlp(rng, 2, 4, 3);
    Vector x = randomVector(rng, 3);
    Vector h = scores(Model(mlp), x);
    Vector y{h[0] > 0 ? 1.0 : -1.0, h[1] > 0 ? 1.0 : -1.0}; // correctly classified
    BudgetSpec budget;
    budget.epsilon = 0.0;
    AttackOutcome out = pgdAttack(Model(mlp), x, y, {0}, budget, 50, 0.05);
    CHECK_FALSE(out.feasible);
    CHECK(out.rnorm == 0.0);
}

TEST_CASE("pgd on the linear path tracks the qp distance for single-label flips") {
    Rng rng(66);
    int checked = 0;
    for (int rep = 0; rep < 40 && checked < 20; ++rep) {
        LinearModel model = randomLinear(rng, 1, 6);
        Vector x = randomVector(rng, 6);
        Vector h = scores(Model(model), x);
        Vector y{h[0] > 0 ? 1.0 : -1.0}; // correctly classified, real flip needed
        if (std::abs(h[0]) < 0.05) continue;
        ++checked;

        AttackOutcome qp = minNormFlip(model, x, y, {0});
        REQUIRE(qp.feasible);

        BudgetSpec enough;
        enough.epsilon = qp.rnorm * 1.02;
        AttackOutcome pgd =
            pgdAttack(Model(model), x, y, {0}, enough, 4000, qp.rnorm / 200.0);
        CHECK(pgd.feasible);
        CHECK(pgd.rnorm <= qp.rnorm * 1.05);
        CHECK(pgd.rnorm >= qp.rnorm * 0.95);

        BudgetSpec tooSmall;
        tooSmall.epsilon = qp.rnorm * 0.95;
        AttackOutcome blocked =
            pgdAttack(Model(model), x, y, {0}, tooSmall, 4000, qp.rnorm / 200.0);
        CHECK_FALSE(blocked.feasible);
    }
    CHECK(checked >= 10);
}

TEST_CASE("risk report arithmetic") {
    // One instance: hinge 0.2, c_wz = 2, eps = 0.1 -> bound 0.4.
    LinearModel lin(Matrix(1, 2, {2.0, 0.0}), Vector{0.0});
    Matrix X(1, 2, {0.4, 0.0});
    Matrix Y(1, 1, {1.0});
    RiskReport r = adversarialRiskReport(lin, X, Y, 0.1);
    CHECK(r.cleanRisk == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(r.eq4Bound == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(r.worstCaseRiskUB == doctest::Approx(0.4).epsilon(1e-12));

    RiskReport zero = adversarialRiskReport(lin, X, Y, 0.0);
    CHECK(zero.cleanRisk == zero.worstCaseRiskUB);
    CHECK(zero.cleanRisk == zero.eq4Bound);
}

TEST_CASE("worst-case estimate dominates sampled perturbations") {
    Rng rng(67);
    LinearModel model = randomLinear(rng, 4, 6);
    const double eps = 0.5;
    for (int inst = 0; inst < 20; ++inst) {
        Vector x = randomVector(rng, 6);
        Matrix X(1, 6, x);
        Vector yv = randomLabels(rng, 4);
        Matrix Y(1, 4, yv);
        RiskReport report = adversarialRiskReport(model, X, Y, eps);
        for (int s = 0; s < 50; ++s) {
            Vector r = scaled(randomUnit(rng, 6), eps * rng.uniform());
            Vector h = scores(Model(model), added(x, r));
            double hinge = 0.0;
            for (std::size_t j = 0; j < 4; ++j)
                hinge += std::max(0.0, 1.0 - yv[j] * h[j]);
            CHECK(hinge <= report.worstCaseRiskUB + 1e-9);
        }
    }
}
