#pragma once

// Brute-force LP oracle for small programs with all-finite variable bounds.
// The feasible region is then a polytope, so if it is nonempty the optimum
// sits on a vertex, and every vertex is the intersection of n linearly
// independent active hyperplanes drawn from {constraint boundaries, bound
// faces}. Enumerating all n-subsets is exponential and only viable for the
// test sizes (n <= 6), which is the point: it shares no code path with the
// simplex engine.

#include <cmath>
#include <vector>

#include "stochflow/lp.hpp"

namespace lp_oracle {

struct OracleResult {
    bool feasible = false;
    double objective = 0.0;
};

namespace detail {

// Solves a dense n x n system in place; false when singular.
inline bool solve_square(std::vector<double>& a, std::vector<double>& b, int n) {
    for (int k = 0; k < n; ++k) {
        int p = k;
        for (int i = k + 1; i < n; ++i)
            if (std::abs(a[static_cast<size_t>(i) * n + k]) >
                std::abs(a[static_cast<size_t>(p) * n + k]))
                p = i;
        if (std::abs(a[static_cast<size_t>(p) * n + k]) < 1e-9) return false;
        if (p != k) {
            for (int j = 0; j < n; ++j)
                std::swap(a[static_cast<size_t>(k) * n + j], a[static_cast<size_t>(p) * n + j]);
            std::swap(b[static_cast<size_t>(k)], b[static_cast<size_t>(p)]);
        }
        for (int i = k + 1; i < n; ++i) {
            const double m = a[static_cast<size_t>(i) * n + k] / a[static_cast<size_t>(k) * n + k];
            if (m == 0.0) continue;
            for (int j = k; j < n; ++j)
                a[static_cast<size_t>(i) * n + j] -= m * a[static_cast<size_t>(k) * n + j];
            b[static_cast<size_t>(i)] -= m * b[static_cast<size_t>(k)];
        }
    }
    for (int k = n - 1; k >= 0; --k) {
        double s = b[static_cast<size_t>(k)];
        for (int j = k + 1; j < n; ++j) s -= a[static_cast<size_t>(k) * n + j] * b[static_cast<size_t>(j)];
        b[static_cast<size_t>(k)] = s / a[static_cast<size_t>(k) * n + k];
    }
    return true;
}

}  // namespace detail

// Requires every bound finite. Tolerance is absolute; the generated test
// programs keep coefficients at unit scale.
inline OracleResult vertex_enumeration_oracle(const stochflow::LinearProgram& lp,
                                              double tol = 1e-7) {
    using stochflow::Relation;
    const int n = lp.n_vars;
    const int m = static_cast<int>(lp.constraints.size());

    std::vector<std::vector<double>> rows(static_cast<size_t>(m),
                                          std::vector<double>(static_cast<size_t>(n), 0.0));
    for (int i = 0; i < m; ++i)
        for (const auto& [j, v] : lp.constraints[static_cast<size_t>(i)].coeffs)
            rows[static_cast<size_t>(i)][static_cast<size_t>(j)] += v;

    // candidate hyperplanes: every constraint as an equality, then both bound
    // faces of every variable
    struct Plane {
        std::vector<double> normal;
        double rhs;
    };
    std::vector<Plane> planes;
    for (int i = 0; i < m; ++i)
        planes.push_back({rows[static_cast<size_t>(i)], lp.constraints[static_cast<size_t>(i)].rhs});
    for (int j = 0; j < n; ++j) {
        std::vector<double> e(static_cast<size_t>(n), 0.0);
        e[static_cast<size_t>(j)] = 1.0;
        planes.push_back({e, lp.lower[static_cast<size_t>(j)]});
        planes.push_back({std::move(e), lp.upper[static_cast<size_t>(j)]});
    }
    const int total = static_cast<int>(planes.size());

    auto feasible_point = [&](const std::vector<double>& x) {
        for (int j = 0; j < n; ++j) {
            if (x[static_cast<size_t>(j)] < lp.lower[static_cast<size_t>(j)] - tol) return false;
            if (x[static_cast<size_t>(j)] > lp.upper[static_cast<size_t>(j)] + tol) return false;
        }
        for (int i = 0; i < m; ++i) {
            double act = 0.0;
            for (int j = 0; j < n; ++j)
                act += rows[static_cast<size_t>(i)][static_cast<size_t>(j)] * x[static_cast<size_t>(j)];
            const auto& c = lp.constraints[static_cast<size_t>(i)];
            if (c.relation == Relation::LessEqual && act > c.rhs + tol) return false;
            if (c.relation == Relation::GreaterEqual && act < c.rhs - tol) return false;
            if (c.relation == Relation::Equal && std::abs(act - c.rhs) > tol) return false;
        }
        return true;
    };

    OracleResult result;
    const bool maximize = lp.sense == stochflow::Sense::Maximize;

    std::vector<int> pick(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) pick[static_cast<size_t>(i)] = i;

    std::vector<double> a(static_cast<size_t>(n) * static_cast<size_t>(n));
    std::vector<double> b(static_cast<size_t>(n));
    for (;;) {
        for (int r = 0; r < n; ++r) {
            const Plane& p = planes[static_cast<size_t>(pick[static_cast<size_t>(r)])];
            for (int j = 0; j < n; ++j) a[static_cast<size_t>(r) * n + j] = p.normal[static_cast<size_t>(j)];
            b[static_cast<size_t>(r)] = p.rhs;
        }
        std::vector<double> x = b;
        std::vector<double> mat = a;
        if (detail::solve_square(mat, x, n) && feasible_point(x)) {
            double obj = lp.objective_constant;
            for (int j = 0; j < n; ++j)
                obj += lp.objective[static_cast<size_t>(j)] * x[static_cast<size_t>(j)];
            if (!result.feasible || (maximize ? obj > result.objective : obj < result.objective))
                result.objective = obj;
            result.feasible = true;
        }

        // next combination in lexicographic order
        int i = n - 1;
        while (i >= 0 && pick[static_cast<size_t>(i)] == total - n + i) --i;
        if (i < 0) break;
        ++pick[static_cast<size_t>(i)];
        for (int j = i + 1; j < n; ++j) pick[static_cast<size_t>(j)] = pick[static_cast<size_t>(j - 1)] + 1;
    }
    return result;
}

}  // namespace lp_oracle
