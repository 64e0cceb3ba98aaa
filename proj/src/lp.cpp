#include "stochflow/lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "stochflow/errors.hpp"

namespace stochflow {

std::string to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Unbounded: return "unbounded";
    }
    return "?";
}

int LinearProgram::add_variable(double lo, double up, double obj_coeff, std::string name) {
    const int j = n_vars++;
    lower.push_back(lo);
    upper.push_back(up);
    objective.push_back(obj_coeff);
    if (!name.empty()) {
        var_names.resize(static_cast<size_t>(n_vars));
        var_names.back() = std::move(name);
    } else if (!var_names.empty()) {
        var_names.resize(static_cast<size_t>(n_vars));
    }
    return j;
}

void LinearProgram::add_constraint(ConstraintRow row) {
    constraints.push_back(std::move(row));
}

std::string LinearProgram::var_name(int j) const {
    if (j < static_cast<int>(var_names.size()) && !var_names[static_cast<size_t>(j)].empty())
        return var_names[static_cast<size_t>(j)];
    return "x" + std::to_string(j);
}

void LinearProgram::check_well_formed() const {
    if (n_vars < 0) throw std::invalid_argument("lp: negative n_vars");
    const size_t n = static_cast<size_t>(n_vars);
    if (objective.size() != n || lower.size() != n || upper.size() != n)
        throw std::invalid_argument("lp: objective/bounds size mismatch");
    for (int j = 0; j < n_vars; ++j) {
        const double lo = lower[static_cast<size_t>(j)];
        const double up = upper[static_cast<size_t>(j)];
        if (std::isnan(lo) || std::isnan(up) || lo > up)
            throw std::invalid_argument("lp: bad bounds on variable " + std::to_string(j));
        if (lo == kInfinity || up == -kInfinity)
            throw std::invalid_argument("lp: empty bound range on variable " + std::to_string(j));
        if (!std::isfinite(objective[static_cast<size_t>(j)]))
            throw std::invalid_argument("lp: non-finite objective coefficient");
    }
    for (const ConstraintRow& row : constraints) {
        if (!std::isfinite(row.rhs)) throw std::invalid_argument("lp: non-finite rhs");
        for (const auto& [j, v] : row.coeffs) {
            if (j < 0 || j >= n_vars)
                throw std::invalid_argument("lp: constraint references variable " + std::to_string(j));
            if (!std::isfinite(v)) throw std::invalid_argument("lp: non-finite coefficient");
        }
    }
}

ResidualReport check_solution(const LinearProgram& lp, const std::vector<double>& primal) {
    if (static_cast<int>(primal.size()) != lp.n_vars)
        throw std::invalid_argument("check_solution: primal length mismatch");
    ResidualReport rep;
    for (int j = 0; j < lp.n_vars; ++j) {
        const double v = primal[static_cast<size_t>(j)];
        rep.max_bound_violation = std::max(rep.max_bound_violation, lp.lower[static_cast<size_t>(j)] - v);
        rep.max_bound_violation = std::max(rep.max_bound_violation, v - lp.upper[static_cast<size_t>(j)]);
        rep.objective_value += lp.objective[static_cast<size_t>(j)] * v;
    }
    rep.objective_value += lp.objective_constant;
    for (const ConstraintRow& row : lp.constraints) {
        double act = 0.0;
        for (const auto& [j, v] : row.coeffs) act += v * primal[static_cast<size_t>(j)];
        double viol = 0.0;
        switch (row.relation) {
            case Relation::LessEqual: viol = act - row.rhs; break;
            case Relation::GreaterEqual: viol = row.rhs - act; break;
            case Relation::Equal: viol = std::abs(act - row.rhs); break;
        }
        rep.max_constraint_violation = std::max(rep.max_constraint_violation, viol);
    }
    rep.max_bound_violation = std::max(rep.max_bound_violation, 0.0);
    rep.max_constraint_violation = std::max(rep.max_constraint_violation, 0.0);
    return rep;
}

namespace {

std::string fmt_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void write_lp_text(const LinearProgram& lp, std::ostream& out) {
    out << "\\ LP dump\n";
    if (lp.objective_constant != 0.0)
        out << "\\ objective constant (not part of the format): " << fmt_real(lp.objective_constant) << "\n";
    out << (lp.sense == Sense::Maximize ? "Maximize\n" : "Minimize\n");
    out << " obj:";
    bool first = true;
    for (int j = 0; j < lp.n_vars; ++j) {
        const double c = lp.objective[static_cast<size_t>(j)];
        if (c == 0.0) continue;
        out << (first ? " " : (c < 0 ? " " : " + "));
        if (c < 0) out << "- ";
        out << fmt_real(std::abs(c)) << " " << lp.var_name(j);
        first = false;
    }
    if (first) out << " 0 " << lp.var_name(0);
    out << "\nSubject To\n";
    for (size_t i = 0; i < lp.constraints.size(); ++i) {
        const ConstraintRow& row = lp.constraints[i];
        out << " c" << i << ":";
        bool rfirst = true;
        for (const auto& [j, v] : row.coeffs) {
            if (v == 0.0) continue;
            out << (rfirst ? " " : (v < 0 ? " " : " + "));
            if (v < 0) out << "- ";
            out << fmt_real(std::abs(v)) << " " << lp.var_name(j);
            rfirst = false;
        }
        if (rfirst) out << " 0 " << lp.var_name(0);
        switch (row.relation) {
            case Relation::LessEqual: out << " <= "; break;
            case Relation::Equal: out << " = "; break;
            case Relation::GreaterEqual: out << " >= "; break;
        }
        out << fmt_real(row.rhs) << "\n";
    }
    out << "Bounds\n";
    for (int j = 0; j < lp.n_vars; ++j) {
        const double lo = lp.lower[static_cast<size_t>(j)];
        const double up = lp.upper[static_cast<size_t>(j)];
        if (lo == -kInfinity && up == kInfinity) {
            out << " " << lp.var_name(j) << " free\n";
        } else if (lo == up) {
            out << " " << lp.var_name(j) << " = " << fmt_real(lo) << "\n";
        } else {
            out << " ";
            if (lo == -kInfinity) out << "-infinity";
            else out << fmt_real(lo);
            out << " <= " << lp.var_name(j) << " <= ";
            if (up == kInfinity) out << "+infinity";
            else out << fmt_real(up);
            out << "\n";
        }
    }
    out << "End\n";
}

namespace {

// Dense LU with partial pivoting, row-major storage. Solves with the basis
// matrix and its transpose; the transposed solves stream matrix rows so all
// four substitutions stay contiguous.
class DenseLu {
public:
    bool factor(int n, std::vector<double>&& matrix) {
        n_ = n;
        a_ = std::move(matrix);
        piv_.assign(static_cast<size_t>(n), 0);
        double* a = a_.data();
        for (int k = 0; k < n; ++k) {
            int p = k;
            double best = std::abs(a[static_cast<size_t>(k) * n + k]);
            for (int i = k + 1; i < n; ++i) {
                const double v = std::abs(a[static_cast<size_t>(i) * n + k]);
                if (v > best) { best = v; p = i; }
            }
            if (best < 1e-12) return false;
            piv_[static_cast<size_t>(k)] = p;
            if (p != k)
                std::swap_ranges(a + static_cast<size_t>(k) * n, a + static_cast<size_t>(k + 1) * n,
                                 a + static_cast<size_t>(p) * n);
            const double pivot = a[static_cast<size_t>(k) * n + k];
            const double* rowk = a + static_cast<size_t>(k) * n;
            for (int i = k + 1; i < n; ++i) {
                double* rowi = a + static_cast<size_t>(i) * n;
                const double mult = rowi[k] / pivot;
                rowi[k] = mult;
                if (mult == 0.0) continue;
                for (int j = k + 1; j < n; ++j) rowi[j] -= mult * rowk[j];
            }
        }
        return true;
    }

    // In-place solve of B x = rhs.
    void ftran(std::vector<double>& x) const {
        const int n = n_;
        const double* a = a_.data();
        for (int k = 0; k < n; ++k) {
            const int p = piv_[static_cast<size_t>(k)];
            if (p != k) std::swap(x[static_cast<size_t>(k)], x[static_cast<size_t>(p)]);
        }
        for (int k = 0; k < n; ++k) {
            const double* rowk = a + static_cast<size_t>(k) * n;
            double s = x[static_cast<size_t>(k)];
            for (int j = 0; j < k; ++j) s -= rowk[j] * x[static_cast<size_t>(j)];
            x[static_cast<size_t>(k)] = s;
        }
        for (int k = n - 1; k >= 0; --k) {
            const double* rowk = a + static_cast<size_t>(k) * n;
            double s = x[static_cast<size_t>(k)];
            for (int j = k + 1; j < n; ++j) s -= rowk[j] * x[static_cast<size_t>(j)];
            x[static_cast<size_t>(k)] = s / rowk[k];
        }
    }

    // In-place solve of B^T y = rhs.
    void btran(std::vector<double>& y) const {
        const int n = n_;
        const double* a = a_.data();
        for (int k = 0; k < n; ++k) {
            const double* rowk = a + static_cast<size_t>(k) * n;
            const double yk = y[static_cast<size_t>(k)] / rowk[k];
            y[static_cast<size_t>(k)] = yk;
            if (yk == 0.0) continue;
            for (int j = k + 1; j < n; ++j) y[static_cast<size_t>(j)] -= rowk[j] * yk;
        }
        for (int k = n - 1; k >= 0; --k) {
            const double* rowk = a + static_cast<size_t>(k) * n;
            const double yk = y[static_cast<size_t>(k)];
            if (yk != 0.0)
                for (int j = 0; j < k; ++j) y[static_cast<size_t>(j)] -= rowk[j] * yk;
        }
        for (int k = n - 1; k >= 0; --k) {
            const int p = piv_[static_cast<size_t>(k)];
            if (p != k) std::swap(y[static_cast<size_t>(k)], y[static_cast<size_t>(p)]);
        }
    }

private:
    int n_ = 0;
    std::vector<double> a_;
    std::vector<int> piv_;
};

enum class VarState : unsigned char { Basic, AtLower, AtUpper, FreeAtZero };

struct SparseColumn {
    std::vector<std::pair<int, double>> entries;  // (row, value)
};

// Bounded-variable primal simplex over the standardized problem
//   minimize c.v  s.t.  A.v = rhs,  lo <= v <= up
// where v = structural variables followed by one slack per row (and
// artificials appended for phase 1). The basis inverse is kept as a dense LU
// factorization plus a product-form eta chain, refactorized periodically.
class SimplexEngine {
public:
    SimplexEngine(const LinearProgram& lp, const SolveOptions& opt) : lp_(lp), opt_(opt) {
        m_ = static_cast<int>(lp.constraints.size());
        n_struct_ = lp.n_vars;
        minimize_ = lp.sense == Sense::Minimize;

        if (m_ > opt.max_rows || n_struct_ > opt.max_cols)
            throw ProblemTooLargeError(
                "problem has " + std::to_string(m_) + " rows / " + std::to_string(n_struct_) +
                " columns, beyond the configured solver limits (" + std::to_string(opt.max_rows) +
                " rows, " + std::to_string(opt.max_cols) + " columns)");

        budget_ = opt.max_iterations > 0
                      ? opt.max_iterations
                      : static_cast<std::int64_t>(50) * (n_struct_ + m_);

        cols_.resize(static_cast<size_t>(n_struct_));
        for (int i = 0; i < m_; ++i)
            for (const auto& [j, v] : lp.constraints[static_cast<size_t>(i)].coeffs)
                if (v != 0.0) cols_[static_cast<size_t>(j)].entries.emplace_back(i, v);

        lo_ = lp.lower;
        up_ = lp.upper;
        cost_.assign(static_cast<size_t>(n_struct_), 0.0);
        rhs_.resize(static_cast<size_t>(m_));
        for (int i = 0; i < m_; ++i) rhs_[static_cast<size_t>(i)] = lp.constraints[static_cast<size_t>(i)].rhs;

        // Slacks: row + slack = rhs; bound range encodes the relation.
        slack_begin_ = n_struct_;
        for (int i = 0; i < m_; ++i) {
            SparseColumn col;
            col.entries.emplace_back(i, 1.0);
            cols_.push_back(std::move(col));
            switch (lp.constraints[static_cast<size_t>(i)].relation) {
                case Relation::LessEqual: lo_.push_back(0.0); up_.push_back(kInfinity); break;
                case Relation::GreaterEqual: lo_.push_back(-kInfinity); up_.push_back(0.0); break;
                case Relation::Equal: lo_.push_back(0.0); up_.push_back(0.0); break;
            }
            cost_.push_back(0.0);
        }
    }

    SolveReport run() {
        SolveReport report;
        setup_initial_basis();

        if (has_artificials_) {
            run_phase(/*phase1=*/true);
            double infeas = 0.0;
            for (int j = artificial_begin_; j < n_total(); ++j) infeas += x_[static_cast<size_t>(j)];
            double rhs_scale = 1.0;
            for (double b : rhs_) rhs_scale += std::abs(b);
            if (infeas > opt_.feasibility_tol * rhs_scale) {
                report.status = SolveStatus::Infeasible;
                report.iterations = iterations_;
                return report;
            }
            // Pin artificials at zero for phase 2; basic ones may remain,
            // stuck at value zero.
            for (int j = artificial_begin_; j < n_total(); ++j) {
                lo_[static_cast<size_t>(j)] = 0.0;
                up_[static_cast<size_t>(j)] = 0.0;
                x_[static_cast<size_t>(j)] = 0.0;
                if (state_[static_cast<size_t>(j)] != VarState::Basic)
                    state_[static_cast<size_t>(j)] = VarState::AtLower;
            }
        }

        for (int j = 0; j < n_total(); ++j) cost_[static_cast<size_t>(j)] = 0.0;
        for (int j = 0; j < n_struct_; ++j)
            cost_[static_cast<size_t>(j)] =
                minimize_ ? lp_.objective[static_cast<size_t>(j)] : -lp_.objective[static_cast<size_t>(j)];

        const bool bounded = run_phase(/*phase1=*/false);
        report.iterations = iterations_;
        if (!bounded) {
            report.status = SolveStatus::Unbounded;
            return report;
        }

        refactor();  // tighten residual drift before extraction

        report.status = SolveStatus::Optimal;
        report.primal.assign(x_.begin(), x_.begin() + n_struct_);
        double obj = lp_.objective_constant;
        for (int j = 0; j < n_struct_; ++j)
            obj += lp_.objective[static_cast<size_t>(j)] * x_[static_cast<size_t>(j)];
        report.objective_value = obj;

        std::vector<double> y(static_cast<size_t>(m_));
        for (int i = 0; i < m_; ++i) y[static_cast<size_t>(i)] = cost_[static_cast<size_t>(basis_[static_cast<size_t>(i)])];
        btran(y);
        report.duals.resize(static_cast<size_t>(m_));
        for (int i = 0; i < m_; ++i)
            report.duals[static_cast<size_t>(i)] = minimize_ ? y[static_cast<size_t>(i)] : -y[static_cast<size_t>(i)];
        return report;
    }

private:
    int n_total() const { return static_cast<int>(cols_.size()); }

    void setup_initial_basis() {
        const int n = n_total();  // structurals + slacks at this point
        x_.assign(static_cast<size_t>(n), 0.0);
        state_.assign(static_cast<size_t>(n), VarState::AtLower);
        basis_.assign(static_cast<size_t>(m_), -1);

        for (int j = 0; j < n_struct_; ++j) {
            if (lo_[static_cast<size_t>(j)] > -kInfinity) {
                state_[static_cast<size_t>(j)] = VarState::AtLower;
                x_[static_cast<size_t>(j)] = lo_[static_cast<size_t>(j)];
            } else if (up_[static_cast<size_t>(j)] < kInfinity) {
                state_[static_cast<size_t>(j)] = VarState::AtUpper;
                x_[static_cast<size_t>(j)] = up_[static_cast<size_t>(j)];
            } else {
                state_[static_cast<size_t>(j)] = VarState::FreeAtZero;
                x_[static_cast<size_t>(j)] = 0.0;
            }
        }

        std::vector<double> activity(static_cast<size_t>(m_), 0.0);
        for (int j = 0; j < n_struct_; ++j) {
            const double v = x_[static_cast<size_t>(j)];
            if (v == 0.0) continue;
            for (const auto& [row, coeff] : cols_[static_cast<size_t>(j)].entries)
                activity[static_cast<size_t>(row)] += coeff * v;
        }

        artificial_begin_ = n;
        has_artificials_ = false;
        for (int i = 0; i < m_; ++i) {
            const int slack = slack_begin_ + i;
            const double want = rhs_[static_cast<size_t>(i)] - activity[static_cast<size_t>(i)];
            const double slo = lo_[static_cast<size_t>(slack)];
            const double sup = up_[static_cast<size_t>(slack)];
            if (want >= slo && want <= sup) {
                basis_[static_cast<size_t>(i)] = slack;
                state_[static_cast<size_t>(slack)] = VarState::Basic;
                x_[static_cast<size_t>(slack)] = want;
                continue;
            }
            const double clamped = std::clamp(want, slo, sup);
            state_[static_cast<size_t>(slack)] = clamped == slo ? VarState::AtLower : VarState::AtUpper;
            x_[static_cast<size_t>(slack)] = clamped;

            const double residual = want - clamped;
            SparseColumn col;
            col.entries.emplace_back(i, residual > 0 ? 1.0 : -1.0);
            cols_.push_back(std::move(col));
            lo_.push_back(0.0);
            up_.push_back(kInfinity);
            cost_.push_back(0.0);
            x_.push_back(std::abs(residual));
            state_.push_back(VarState::Basic);
            basis_[static_cast<size_t>(i)] = n_total() - 1;
            has_artificials_ = true;
        }

        if (has_artificials_)
            for (int j = artificial_begin_; j < n_total(); ++j) cost_[static_cast<size_t>(j)] = 1.0;

        refactor();
    }

    void refactor() {
        std::vector<double> b(static_cast<size_t>(m_) * static_cast<size_t>(m_), 0.0);
        for (int i = 0; i < m_; ++i) {
            const int j = basis_[static_cast<size_t>(i)];
            for (const auto& [row, coeff] : cols_[static_cast<size_t>(j)].entries)
                b[static_cast<size_t>(row) * static_cast<size_t>(m_) + static_cast<size_t>(i)] = coeff;
        }
        if (!lu_.factor(m_, std::move(b)))
            throw SolverError("numerically singular basis during refactorization");
        etas_r_.clear();
        etas_d_.clear();

        // Recompute basic values from scratch: x_B = B^-1 (rhs - N x_N).
        std::vector<double> r = rhs_;
        std::vector<char> is_basic(static_cast<size_t>(n_total()), 0);
        for (int i = 0; i < m_; ++i) is_basic[static_cast<size_t>(basis_[static_cast<size_t>(i)])] = 1;
        for (int j = 0; j < n_total(); ++j) {
            if (is_basic[static_cast<size_t>(j)]) continue;
            const double v = x_[static_cast<size_t>(j)];
            if (v == 0.0) continue;
            for (const auto& [row, coeff] : cols_[static_cast<size_t>(j)].entries)
                r[static_cast<size_t>(row)] -= coeff * v;
        }
        lu_.ftran(r);
        for (int i = 0; i < m_; ++i) x_[static_cast<size_t>(basis_[static_cast<size_t>(i)])] = r[static_cast<size_t>(i)];
    }

    void ftran(std::vector<double>& v) const {
        lu_.ftran(v);
        for (size_t e = 0; e < etas_r_.size(); ++e) {
            const int r = etas_r_[e];
            const std::vector<double>& d = etas_d_[e];
            const double vr = v[static_cast<size_t>(r)] / d[static_cast<size_t>(r)];
            if (vr != 0.0)
                for (int i = 0; i < m_; ++i) v[static_cast<size_t>(i)] -= d[static_cast<size_t>(i)] * vr;
            v[static_cast<size_t>(r)] = vr;
        }
    }

    void btran(std::vector<double>& v) const {
        for (size_t e = etas_r_.size(); e-- > 0;) {
            const int r = etas_r_[e];
            const std::vector<double>& d = etas_d_[e];
            double dot = 0.0;
            for (int i = 0; i < m_; ++i) dot += d[static_cast<size_t>(i)] * v[static_cast<size_t>(i)];
            v[static_cast<size_t>(r)] =
                (v[static_cast<size_t>(r)] - (dot - d[static_cast<size_t>(r)] * v[static_cast<size_t>(r)])) /
                d[static_cast<size_t>(r)];
        }
        lu_.btran(v);
    }

    double reduced_cost(int j, const std::vector<double>& y) const {
        double d = cost_[static_cast<size_t>(j)];
        for (const auto& [row, coeff] : cols_[static_cast<size_t>(j)].entries)
            d -= y[static_cast<size_t>(row)] * coeff;
        return d;
    }

    // Returns false iff unbounded (phase 2 only).
    bool run_phase(bool phase1) {
        const double opt_tol = opt_.optimality_tol;
        int consecutive_degenerate = 0;
        bool bland = false;

        std::vector<double> y(static_cast<size_t>(m_));
        std::vector<double> w(static_cast<size_t>(m_));

        for (;;) {
            if (iterations_ >= budget_)
                throw SolverError("iteration budget exhausted (" + std::to_string(budget_) + ")");
            if (static_cast<int>(etas_r_.size()) >= opt_.refactor_interval) refactor();

            for (int i = 0; i < m_; ++i)
                y[static_cast<size_t>(i)] = cost_[static_cast<size_t>(basis_[static_cast<size_t>(i)])];
            btran(y);

            int entering = -1;
            double best_score = opt_tol;
            int direction = 0;
            for (int j = 0; j < n_total(); ++j) {
                const VarState st = state_[static_cast<size_t>(j)];
                if (st == VarState::Basic) continue;
                if (lo_[static_cast<size_t>(j)] == up_[static_cast<size_t>(j)]) continue;  // fixed
                const double d = reduced_cost(j, y);
                double score = 0.0;
                int dir = 0;
                if (st == VarState::AtLower && d < -opt_tol) { score = -d; dir = 1; }
                else if (st == VarState::AtUpper && d > opt_tol) { score = d; dir = -1; }
                else if (st == VarState::FreeAtZero && std::abs(d) > opt_tol) { score = std::abs(d); dir = d < 0 ? 1 : -1; }
                if (dir == 0) continue;
                if (bland) { entering = j; direction = dir; break; }
                if (score > best_score) { best_score = score; entering = j; direction = dir; }
            }
            if (entering < 0) return true;  // phase optimal

            w.assign(static_cast<size_t>(m_), 0.0);
            for (const auto& [row, coeff] : cols_[static_cast<size_t>(entering)].entries)
                w[static_cast<size_t>(row)] = coeff;
            ftran(w);

            // Ratio test: smallest step that drives a basic variable (or the
            // entering variable itself) to a bound.
            const double self_range = up_[static_cast<size_t>(entering)] - lo_[static_cast<size_t>(entering)];
            double theta = self_range;  // may be +inf
            int block_row = -1;
            const double pivot_tol = 1e-10;
            for (int i = 0; i < m_; ++i) {
                const double wi = w[static_cast<size_t>(i)];
                if (std::abs(wi) <= pivot_tol) continue;
                const int bj = basis_[static_cast<size_t>(i)];
                const double rate = direction * wi;  // basic value moves at -rate
                double room;
                if (rate > 0) {
                    const double lo = lo_[static_cast<size_t>(bj)];
                    if (lo == -kInfinity) continue;
                    room = (x_[static_cast<size_t>(bj)] - lo) / rate;
                } else {
                    const double up = up_[static_cast<size_t>(bj)];
                    if (up == kInfinity) continue;
                    room = (up - x_[static_cast<size_t>(bj)]) / (-rate);
                }
                if (room < 0) room = 0;
                if (room < theta - 1e-12) { theta = room; block_row = i; }
                else if (block_row >= 0 && room <= theta + 1e-12 &&
                         std::abs(wi) > std::abs(w[static_cast<size_t>(block_row)])) {
                    block_row = i;  // stability tie-break: larger pivot wins
                }
            }

            if (theta == kInfinity) {
                if (phase1) throw SolverError("phase-1 objective unbounded (numerical failure)");
                return false;  // unbounded
            }

            ++iterations_;
            const bool degenerate = theta <= 1e-11;
            consecutive_degenerate = degenerate ? consecutive_degenerate + 1 : 0;
            if (consecutive_degenerate > 100) bland = true;
            else if (!degenerate) bland = false;

            if (block_row < 0) {
                // Bound flip: entering runs to its opposite bound.
                for (int i = 0; i < m_; ++i) {
                    const int bj = basis_[static_cast<size_t>(i)];
                    x_[static_cast<size_t>(bj)] -= theta * direction * w[static_cast<size_t>(i)];
                }
                if (direction > 0) {
                    x_[static_cast<size_t>(entering)] = up_[static_cast<size_t>(entering)];
                    state_[static_cast<size_t>(entering)] = VarState::AtUpper;
                } else {
                    x_[static_cast<size_t>(entering)] = lo_[static_cast<size_t>(entering)];
                    state_[static_cast<size_t>(entering)] = VarState::AtLower;
                }
                continue;
            }

            // Pivot: leaving variable snaps to the bound it hit.
            const int leaving = basis_[static_cast<size_t>(block_row)];
            const double rate = direction * w[static_cast<size_t>(block_row)];
            for (int i = 0; i < m_; ++i) {
                const int bj = basis_[static_cast<size_t>(i)];
                x_[static_cast<size_t>(bj)] -= theta * direction * w[static_cast<size_t>(i)];
            }
            x_[static_cast<size_t>(entering)] += theta * direction;
            if (rate > 0) {
                x_[static_cast<size_t>(leaving)] = lo_[static_cast<size_t>(leaving)];
                state_[static_cast<size_t>(leaving)] = VarState::AtLower;
            } else {
                x_[static_cast<size_t>(leaving)] = up_[static_cast<size_t>(leaving)];
                state_[static_cast<size_t>(leaving)] = VarState::AtUpper;
            }
            basis_[static_cast<size_t>(block_row)] = entering;
            state_[static_cast<size_t>(entering)] = VarState::Basic;

            etas_r_.push_back(block_row);
            etas_d_.push_back(w);
        }
    }

    const LinearProgram& lp_;
    const SolveOptions& opt_;
    int m_ = 0;
    int n_struct_ = 0;
    int slack_begin_ = 0;
    int artificial_begin_ = 0;
    bool has_artificials_ = false;
    bool minimize_ = false;
    std::int64_t budget_ = 0;
    std::int64_t iterations_ = 0;

    std::vector<SparseColumn> cols_;
    std::vector<double> lo_, up_, cost_, x_, rhs_;
    std::vector<int> basis_;
    std::vector<VarState> state_;
    DenseLu lu_;
    std::vector<int> etas_r_;
    std::vector<std::vector<double>> etas_d_;
};

}  // namespace

SolveReport solve_lp(const LinearProgram& lp, const SolveOptions& options) {
    lp.check_well_formed();
    if (lp.constraints.empty() && lp.n_vars == 0) {
        SolveReport report;
        report.status = SolveStatus::Optimal;
        report.objective_value = lp.objective_constant;
        return report;
    }
    SimplexEngine engine(lp, options);
    return engine.run();
}

}  // namespace stochflow
