#include "malt/attack.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

#include "malt/errors.hpp"
#include "malt/sae.hpp"

namespace malt {

namespace {

constexpr double kQpTol = 1e-10;        // KKT residual target
constexpr double kQpAcceptTol = 1e-8;   // contract bound
constexpr int kQpMaxSweeps = 20000;     // fast-path budget before the fallback
constexpr int kQpCheckWindow = 128;     // sweeps between infeasibility checks

struct HalfspaceSystem {
    std::vector<Vector> rows; // c_k . r <= rhs_k
    Vector rhs;
};

// Feasibility is judged by the strict sign conditions of the outcome, so the
// flip margin must stay positive.
double effectiveMargin(double margin) { return std::max(margin, 1e-9); }

HalfspaceSystem buildSystem(const LinearModel& model, std::span<const double> x,
                            std::span<const double> y,
                            const std::vector<bool>& inTarget, double margin,
                            const std::optional<ClipBox>& clip) {
    const std::size_t m = model.labels();
    const std::size_t d = model.features();
    Vector h = scores(Model(model), x);
    HalfspaceSystem sys;
    for (std::size_t j = 0; j < m; ++j) {
        double yj = y[j];
        if (inTarget[j]) {
            sys.rows.push_back(scaled(model.W.row(j), yj));
            sys.rhs.push_back(-margin - yj * h[j]);
        } else {
            sys.rows.push_back(scaled(model.W.row(j), -yj));
            sys.rhs.push_back(yj * h[j] - margin);
        }
    }
    if (clip) {
        for (std::size_t q = 0; q < d; ++q) {
            Vector ePos(d, 0.0), eNeg(d, 0.0);
            ePos[q] = 1.0;
            eNeg[q] = -1.0;
            sys.rows.push_back(std::move(ePos));
            sys.rhs.push_back(clip->hi - x[q]);
            sys.rows.push_back(std::move(eNeg));
            sys.rhs.push_back(x[q] - clip->lo);
        }
    }
    return sys;
}

struct QpSolution {
    Vector r;
    bool feasible = true;
};

// Minimum-norm solution of the symmetric PSD system G x = b via the SVD
// pseudoinverse.
Vector pinvSolve(const Matrix& G, const Vector& b) {
    SvdResult dec = svd(G);
    double cutoff = 1e-12 * (dec.s.empty() ? 0.0 : dec.s[0]);
    Vector x(G.cols, 0.0);
    for (std::size_t t = 0; t < dec.s.size(); ++t) {
        if (dec.s[t] <= cutoff) continue;
        double coef = 0.0;
        for (std::size_t i = 0; i < G.rows; ++i) coef += dec.U(i, t) * b[i];
        coef /= dec.s[t];
        for (std::size_t i = 0; i < G.cols; ++i) x[i] += coef * dec.V(i, t);
    }
    return x;
}

// Minimum-norm least-squares solution of E_sub z ~= f via SVD.
Vector lsSolveMinNorm(const Matrix& E, const Vector& f) {
    SvdResult dec = svd(E);
    double cutoff = 1e-12 * (dec.s.empty() ? 0.0 : dec.s[0]);
    Vector z(E.cols, 0.0);
    for (std::size_t t = 0; t < dec.s.size(); ++t) {
        if (dec.s[t] <= cutoff) continue;
        double coef = 0.0;
        for (std::size_t i = 0; i < E.rows; ++i) coef += dec.U(i, t) * f[i];
        coef /= dec.s[t];
        for (std::size_t i = 0; i < E.cols; ++i) z[i] += coef * dec.V(i, t);
    }
    return z;
}

// Lawson-Hanson nonnegative least squares: min ||E lambda - f|| s.t.
// lambda >= 0. Inner partial steps keep iterates nonnegative.
Vector nnls(const Matrix& E, const Vector& f) {
    const std::size_t K = E.cols;
    const std::size_t n = E.rows;
    Vector lambda(K, 0.0);
    std::vector<char> passive(K, 0);
    Vector resid = f;

    double colScale = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += E(i, k) * E(i, k);
        colScale = std::max(colScale, std::sqrt(s));
    }
    const double tolW = 1e-13 * colScale;

    auto subMatrix = [&](const std::vector<std::size_t>& set) {
        Matrix S(n, set.size());
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t a = 0; a < set.size(); ++a) S(i, a) = E(i, set[a]);
        return S;
    };

    for (std::size_t outer = 0; outer < 3 * K + 10; ++outer) {
        // Most positive gradient of the residual among the active columns.
        std::size_t best = K;
        double bestW = tolW * (1.0 + norm2(resid));
        for (std::size_t k = 0; k < K; ++k) {
            if (passive[k]) continue;
            double w = 0.0;
            for (std::size_t i = 0; i < n; ++i) w += E(i, k) * resid[i];
            if (w > bestW) {
                bestW = w;
                best = k;
            }
        }
        if (best == K) break;
        passive[best] = 1;

        for (std::size_t inner = 0; inner <= K; ++inner) {
            std::vector<std::size_t> set;
            for (std::size_t k = 0; k < K; ++k)
                if (passive[k]) set.push_back(k);
            if (set.empty()) break;
            Vector z = lsSolveMinNorm(subMatrix(set), f);

            double minZ = 0.0;
            for (double v : z) minZ = std::min(minZ, v);
            if (minZ > 0.0 || (minZ == 0.0 && inner > 0)) {
                for (std::size_t a = 0; a < set.size(); ++a) lambda[set[a]] = z[a];
                break;
            }
            // Partial step toward z, retiring coordinates that reach zero.
            double alpha = 1.0;
            for (std::size_t a = 0; a < set.size(); ++a)
                if (z[a] <= 0.0 && lambda[set[a]] - z[a] > 0.0)
                    alpha = std::min(alpha, lambda[set[a]] / (lambda[set[a]] - z[a]));
            for (std::size_t a = 0; a < set.size(); ++a) {
                double next = lambda[set[a]] + alpha * (z[a] - lambda[set[a]]);
                if (next <= 1e-14 * (1.0 + std::abs(z[a]))) {
                    next = 0.0;
                    passive[set[a]] = 0;
                }
                lambda[set[a]] = next;
            }
            if (alpha >= 1.0) break;
        }

        resid = f;
        for (std::size_t k = 0; k < K; ++k)
            if (lambda[k] != 0.0)
                for (std::size_t i = 0; i < n; ++i) resid[i] -= E(i, k) * lambda[k];
    }
    return lambda;
}

// Least-distance fallback: the minimum-norm point of {C r <= rhs} comes out
// of one NNLS solve on the stacked system [(-C)^T; (-rhs)^T] (Lawson-Hanson,
// chapter 23). The NNLS residual rho decides everything: rho = 0 certifies
// infeasibility, otherwise ||rho||^2 = 1/(1 + ||r*||^2) and r* = rho_head /
// ||rho||^2. Systems whose minimum perturbation exceeds ~1e6 are therefore
// reported infeasible, which is the intended reading for attack budgets.
QpSolution solveLdp(const HalfspaceSystem& sys, std::size_t dim, bool* solved) {
    const std::size_t K = sys.rows.size();
    Matrix E(dim + 1, K);
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t q = 0; q < dim; ++q) E(q, k) = -sys.rows[k][q];
        E(dim, k) = -sys.rhs[k];
    }
    Vector f(dim + 1, 0.0);
    f[dim] = 1.0;

    Vector lambda = nnls(E, f);
    Vector rho(dim + 1, 0.0);
    for (std::size_t i = 0; i <= dim; ++i) {
        rho[i] = -f[i];
        for (std::size_t k = 0; k < K; ++k) rho[i] += E(i, k) * lambda[k];
    }
    double rhoSq = dot(rho, rho);

    QpSolution sol;
    *solved = true;
    if (rhoSq <= 1e-12) {
        sol.feasible = false;
        sol.r.assign(dim, 0.0);
        return sol;
    }

    auto verified = [&](const Vector& r, const Vector& duals) {
        for (std::size_t k = 0; k < K; ++k) {
            double slack = dot(sys.rows[k], r) - sys.rhs[k];
            if (slack > kQpAcceptTol) return false;
            if (std::abs(duals[k] * slack) / (1.0 + duals[k]) > kQpAcceptTol) return false;
        }
        return true;
    };

    // Primal refinement: rho determines r only to a precision of about
    // eps / rhoSq, which is too coarse for large solutions. Recomputing the
    // minimum-norm point of the active equality system in primal space
    // restores full precision.
    std::vector<std::size_t> activeSet;
    double lambdaMax = 0.0;
    for (double l : lambda) lambdaMax = std::max(lambdaMax, l);
    for (std::size_t k = 0; k < K; ++k)
        if (lambda[k] > 1e-9 * lambdaMax) activeSet.push_back(k);

    Vector refined(dim, 0.0);
    if (!activeSet.empty()) {
        Matrix Ca(activeSet.size(), dim);
        Vector da(activeSet.size());
        for (std::size_t a = 0; a < activeSet.size(); ++a) {
            for (std::size_t q = 0; q < dim; ++q) Ca(a, q) = sys.rows[activeSet[a]][q];
            da[a] = sys.rhs[activeSet[a]];
        }
        // Min-norm solution of Ca refined = da via the transposed LS solve.
        SvdResult dec = svd(Ca);
        double cutoff = 1e-12 * (dec.s.empty() ? 0.0 : dec.s[0]);
        for (std::size_t t = 0; t < dec.s.size(); ++t) {
            if (dec.s[t] <= cutoff) continue;
            double coef = 0.0;
            for (std::size_t a = 0; a < activeSet.size(); ++a)
                coef += dec.U(a, t) * da[a];
            coef /= dec.s[t];
            for (std::size_t q = 0; q < dim; ++q) refined[q] += coef * dec.V(q, t);
        }
        // Multipliers for the refined point: rows_A^T u = -refined.
        Matrix Mt(dim, activeSet.size());
        for (std::size_t q = 0; q < dim; ++q)
            for (std::size_t a = 0; a < activeSet.size(); ++a)
                Mt(q, a) = sys.rows[activeSet[a]][q];
        Vector negR = scaled(refined, -1.0);
        Vector ua = lsSolveMinNorm(Mt, negR);
        bool nonneg = true;
        for (double v : ua) nonneg = nonneg && v >= -1e-9 * (1.0 + normInf(ua));
        if (nonneg) {
            Vector duals(K, 0.0);
            for (std::size_t a = 0; a < activeSet.size(); ++a)
                duals[activeSet[a]] = std::max(0.0, ua[a]);
            if (verified(refined, duals)) {
                sol.r = std::move(refined);
                return sol;
            }
        }
    } else if (verified(Vector(dim, 0.0), Vector(K, 0.0))) {
        sol.r.assign(dim, 0.0);
        return sol;
    }

    // Fall back to the direct LDP point.
    sol.r.resize(dim);
    for (std::size_t q = 0; q < dim; ++q) sol.r[q] = rho[q] / rhoSq;
    Vector duals(K);
    for (std::size_t k = 0; k < K; ++k) duals[k] = lambda[k] / rhoSq;
    if (!verified(sol.r, duals)) *solved = false;
    return sol;
}

// Hildreth dual coordinate ascent for min 1/2 ||r||^2 s.t. C r <= rhs.
// Diverging duals certify infeasibility.
QpSolution solveMinNormQp(const HalfspaceSystem& sys, std::size_t dim) {
    const std::size_t K = sys.rows.size();
    QpSolution sol;
    sol.r.assign(dim, 0.0);

    std::vector<char> active(K, 1);
    for (std::size_t k = 0; k < K; ++k) {
        double nn = dot(sys.rows[k], sys.rows[k]);
        if (nn == 0.0) {
            if (sys.rhs[k] < 0.0) { // 0 <= rhs_k violated, no r can help
                sol.feasible = false;
                return sol;
            }
            active[k] = 0;
        }
    }

    // Gram matrix of the active rows.
    Matrix G(K, K, 0.0);
    for (std::size_t a = 0; a < K; ++a) {
        if (!active[a]) continue;
        for (std::size_t b = a; b < K; ++b) {
            if (!active[b]) continue;
            G(a, b) = dot(sys.rows[a], sys.rows[b]);
            G(b, a) = G(a, b);
        }
    }

    double maxRowNorm = 0.0;
    for (std::size_t k = 0; k < K; ++k)
        if (active[k]) maxRowNorm = std::max(maxRowNorm, std::sqrt(G(k, k)));

    Vector u(K, 0.0);
    Vector Gu(K, 0.0);
    Vector uPrev(K, 0.0);
    Vector slack(K, 0.0);
    for (int sweep = 0; sweep < kQpMaxSweeps; ++sweep) {
        for (std::size_t k = 0; k < K; ++k) {
            if (!active[k]) continue;
            double w = Gu[k] + sys.rhs[k];
            double next = std::max(0.0, u[k] - w / G(k, k));
            double delta = next - u[k];
            if (delta != 0.0) {
                u[k] = next;
                for (std::size_t b = 0; b < K; ++b)
                    if (active[b]) Gu[b] += delta * G(k, b);
            }
        }

        // r = -C^T u; check primal feasibility and complementary slackness.
        std::fill(sol.r.begin(), sol.r.end(), 0.0);
        for (std::size_t k = 0; k < K; ++k)
            if (u[k] != 0.0) axpy(-u[k], sys.rows[k], sol.r);
        // Scaled KKT residual: primal violation plus complementarity
        // normalized by the dual magnitude (large duals would otherwise
        // demand slacks below float precision).
        double residual = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            if (!active[k]) continue;
            slack[k] = dot(sys.rows[k], sol.r) - sys.rhs[k];
            residual = std::max(residual, slack[k]);
            residual = std::max(residual, std::abs(u[k] * slack[k]) / (1.0 + u[k]));
        }
        if (residual <= kQpTol) return sol;

        if ((sweep + 1) % kQpCheckWindow == 0) {
            // Infeasible systems drift along a Farkas direction: lambda >= 0
            // with C^T lambda = 0 and rhs . lambda < 0. Test the windowed
            // dual increment for that certificate.
            Vector lambda(K, 0.0);
            double l1 = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                lambda[k] = std::max(0.0, u[k] - uPrev[k]);
                l1 += lambda[k];
            }
            if (l1 > 1e-14 * (1.0 + norm2(u))) {
                Vector comb(dim, 0.0);
                double rhsDot = 0.0;
                for (std::size_t k = 0; k < K; ++k) {
                    if (lambda[k] == 0.0) continue;
                    axpy(lambda[k] / l1, sys.rows[k], comb);
                    rhsDot += (lambda[k] / l1) * sys.rhs[k];
                }
                if (norm2(comb) <= 1e-8 * maxRowNorm && rhsDot < 0.0) {
                    sol.feasible = false;
                    return sol;
                }
            }
            uPrev = u;
        }
    }

    // Degenerate or near-contradictory systems stall the sweeps; the
    // least-distance reduction settles them decisively.
    bool solved = false;
    QpSolution ldp = solveLdp(sys, dim, &solved);
    if (solved) return ldp;

    double residual = 0.0;
    for (std::size_t k = 0; k < K; ++k)
        if (active[k])
            residual = std::max(residual, dot(sys.rows[k], sol.r) - sys.rhs[k]);
    throw NumericError("min-norm QP did not converge, residual " +
                       std::to_string(residual));
}

std::vector<std::size_t> flippedLabels(const Model& model, std::span<const double> x,
                                       std::span<const double> y, const Vector& r) {
    Vector xp = added(x, r);
    Vector h = scores(model, xp);
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < h.size(); ++j)
        if (y[j] * h[j] <= 0.0) out.push_back(j);
    return out;
}

bool verifyExact(const Model& model, std::span<const double> x, std::span<const double> y,
                 const Vector& r, const std::vector<bool>& inTarget) {
    Vector xp = added(x, r);
    Vector h = scores(model, xp);
    for (std::size_t j = 0; j < h.size(); ++j) {
        double margin = y[j] * h[j];
        if (inTarget[j] ? margin > 0.0 : margin <= 0.0) return false;
    }
    return true;
}

} // namespace

AttackOutcome minNormFlip(const LinearModel& model, std::span<const double> x,
                          std::span<const double> y,
                          const std::vector<std::size_t>& targets, double margin,
                          std::optional<ClipBox> clip) {
    const std::size_t m = model.labels();
    if (y.size() != m) throw std::invalid_argument("minNormFlip: label dimension mismatch");
    std::vector<bool> inTarget(m, false);
    for (std::size_t j : targets) {
        if (j >= m) throw std::invalid_argument("minNormFlip: target index out of range");
        inTarget[j] = true;
    }

    const double eff = effectiveMargin(margin);
    HalfspaceSystem sys = buildSystem(model, x, y, inTarget, eff, clip);
    QpSolution qp = solveMinNormQp(sys, model.features());

    AttackOutcome out;
    out.method = AttackMethod::ExactQp;
    out.r = std::move(qp.r);
    out.rnorm = norm2(out.r);
    if (!qp.feasible) {
        out.feasible = false;
        out.r.assign(model.features(), 0.0);
        out.rnorm = 0.0;
        return out;
    }
    out.feasible = verifyExact(Model(model), x, y, out.r, inTarget);
    out.flipped = flippedLabels(Model(model), x, y, out.r);
    return out;
}

ExactAttackability exactAttackability(const LinearModel& model,
                                      std::span<const double> x,
                                      std::span<const double> y,
                                      const BudgetSpec& budget, double margin) {
    const std::size_t m = model.labels();
    if (m > 12) throw std::invalid_argument("exact enumeration cap exceeded (m > 12)");
    if (!(budget.epsilon >= 0.0) || !std::isfinite(budget.epsilon))
        throw std::invalid_argument("budget epsilon must be finite and nonnegative");
    if (budget.p != 2.0) throw std::invalid_argument("only p = 2 budgets are supported");

    // Subsets of each size in lexicographic order, sizes descending.
    std::vector<std::vector<std::uint32_t>> bySize(m + 1);
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask)
        bySize[static_cast<std::size_t>(std::popcount(mask))].push_back(mask);
    for (auto& masks : bySize) std::sort(masks.begin(), masks.end(), [m](auto a, auto b) {
        std::vector<std::size_t> sa, sb;
        for (std::size_t j = 0; j < m; ++j) {
            if (a & (1u << j)) sa.push_back(j);
            if (b & (1u << j)) sb.push_back(j);
        }
        return std::lexicographical_compare(sa.begin(), sa.end(), sb.begin(), sb.end());
    });

    for (std::size_t size = m + 1; size-- > 0;) {
        bool found = false;
        AttackOutcome best;
        for (std::uint32_t mask : bySize[size]) {
            std::vector<std::size_t> targets;
            for (std::size_t j = 0; j < m; ++j)
                if (mask & (1u << j)) targets.push_back(j);
            AttackOutcome out = minNormFlip(model, x, y, targets, margin, budget.clip);
            if (!out.feasible || out.rnorm > budget.epsilon) continue;
            if (!found || out.rnorm < best.rnorm) {
                best = std::move(out);
                found = true;
            }
        }
        if (found) return {static_cast<int>(size), std::move(best)};
    }
    AttackOutcome none;
    none.r.assign(model.features(), 0.0);
    none.feasible = false;
    return {0, std::move(none)};
}

GreedyAttackability greedyAttackability(const Model& model, std::span<const double> x,
                                        std::span<const double> y,
                                        const BudgetSpec& budget, double margin,
                                        const PgdOptions& pgdOpts) {
    const std::size_t m = labelCount(model);
    if (!(budget.epsilon >= 0.0) || !std::isfinite(budget.epsilon))
        throw std::invalid_argument("budget epsilon must be finite and nonnegative");
    const auto* lin = std::get_if<LinearModel>(&model);
    const double stepSize =
        pgdOpts.stepSize > 0.0 ? pgdOpts.stepSize : budget.epsilon / 20.0;

    GreedyAttackability result;
    result.outcome.r.assign(featureCount(model), 0.0);
    result.outcome.feasible = true;
    result.outcome.method = lin ? AttackMethod::Greedy : AttackMethod::Pgd;

    std::vector<std::size_t> chosen;
    for (;;) {
        bool found = false;
        AttackOutcome best;
        std::size_t bestLabel = m;
        for (std::size_t j = 0; j < m; ++j) {
            if (std::find(chosen.begin(), chosen.end(), j) != chosen.end()) continue;
            std::vector<std::size_t> targets = chosen;
            targets.push_back(j);
            std::sort(targets.begin(), targets.end());
            AttackOutcome out =
                lin ? minNormFlip(*lin, x, y, targets, margin, budget.clip)
                    : pgdAttack(model, x, y, targets, budget, pgdOpts.steps, stepSize);
            if (!out.feasible || out.rnorm > budget.epsilon) continue;
            if (!found || out.rnorm < best.rnorm) {
                best = std::move(out);
                bestLabel = j;
                found = true;
            }
        }
        if (!found) break;
        chosen.push_back(bestLabel);
        std::sort(chosen.begin(), chosen.end());
        best.method = lin ? AttackMethod::Greedy : AttackMethod::Pgd;
        result.outcome = std::move(best);
    }
    result.cA = static_cast<int>(chosen.size());
    return result;
}

AttackOutcome pgdAttack(const Model& model, std::span<const double> x,
                        std::span<const double> y,
                        const std::vector<std::size_t>& targets,
                        const BudgetSpec& budget, int steps, double stepSize) {
    if (steps < 1) throw std::invalid_argument("pgdAttack: steps must be >= 1");
    const std::size_t m = labelCount(model);
    const std::size_t d = featureCount(model);
    for (std::size_t j : targets)
        if (j >= m) throw std::invalid_argument("pgdAttack: target index out of range");

    auto targetsHit = [&](const Vector& r) {
        Vector h = scores(model, added(x, r));
        for (std::size_t j : targets)
            if (y[j] * h[j] > 0.0) return false;
        return true;
    };

    AttackOutcome out;
    out.method = AttackMethod::Pgd;
    out.r.assign(d, 0.0);

    auto finish = [&](bool feasible) {
        out.rnorm = norm2(out.r);
        out.feasible = feasible;
        out.flipped = flippedLabels(model, x, y, out.r);
        return out;
    };

    if (targetsHit(out.r)) return finish(true);
    if (budget.epsilon <= 0.0) return finish(false);

    Vector r(d, 0.0);
    for (int step = 0; step < steps; ++step) {
        Vector xp = added(x, r);
        Vector grad(d, 0.0);
        std::vector<Vector> gs = allInputGradients(model, xp);
        for (std::size_t j : targets) axpy(y[j], gs[j], grad);
        axpy(-stepSize, grad, r);

        double n = norm2(r);
        if (n > budget.epsilon) {
            for (double& v : r) v *= budget.epsilon / n;
        }
        if (budget.clip) {
            for (std::size_t q = 0; q < d; ++q) {
                double clipped = std::clamp(x[q] + r[q], budget.clip->lo, budget.clip->hi);
                r[q] = clipped - x[q];
            }
        }
        if (targetsHit(r)) {
            out.r = r;
            return finish(true);
        }
    }
    out.r = r;
    return finish(false);
}

RiskReport adversarialRiskReport(const LinearModel& model, const Matrix& X,
                                 const Matrix& Y, double epsilon) {
    if (X.rows != Y.rows) throw std::invalid_argument("risk report: X/Y row mismatch");
    if (X.rows == 0) throw std::invalid_argument("risk report: empty dataset");
    const std::size_t m = model.labels();

    Vector rowNorm(m);
    for (std::size_t j = 0; j < m; ++j) rowNorm[j] = norm2(model.W.row(j));

    RiskReport report;
    double cwzSum = 0.0;
    for (std::size_t i = 0; i < X.rows; ++i) {
        Vector h = scores(Model(model), X.row(i));
        for (std::size_t j = 0; j < m; ++j) {
            double margin = Y(i, j) * h[j];
            report.cleanRisk += std::max(0.0, 1.0 - margin);
            report.worstCaseRiskUB += std::max(0.0, 1.0 - margin + epsilon * rowNorm[j]);
        }
        cwzSum += cWz(model.W, Y.row(i)).phi;
    }
    report.cleanRisk /= static_cast<double>(X.rows);
    report.worstCaseRiskUB /= static_cast<double>(X.rows);
    report.eq4Bound = report.cleanRisk + epsilon * cwzSum / static_cast<double>(X.rows);
    return report;
}

} // namespace malt
