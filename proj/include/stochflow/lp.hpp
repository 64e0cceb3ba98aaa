#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace stochflow {

enum class Sense { Minimize, Maximize };
enum class Relation { LessEqual, Equal, GreaterEqual };
enum class SolveStatus { Optimal, Infeasible, Unbounded };

std::string to_string(SolveStatus status);

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct ConstraintRow {
    std::vector<std::pair<int, double>> coeffs;  // sparse (variable index, coefficient)
    Relation relation = Relation::LessEqual;
    double rhs = 0.0;
};

// A bounded-variable linear program. Variables carry individual
// [lower, upper] bounds (either side may be infinite); constraints are
// sparse rows with <=, =, >= relations.
struct LinearProgram {
    int n_vars = 0;
    Sense sense = Sense::Maximize;
    std::vector<double> objective;
    double objective_constant = 0.0;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<ConstraintRow> constraints;
    std::vector<std::string> var_names;  // optional, for dumps and debugging

    int add_variable(double lo, double up, double obj_coeff, std::string name = {});
    void add_constraint(ConstraintRow row);

    // Throws std::invalid_argument on malformed programs (bound order,
    // out-of-range column indices, non-finite coefficients).
    void check_well_formed() const;

    std::string var_name(int j) const;
};

struct SolveReport {
    SolveStatus status = SolveStatus::Optimal;
    double objective_value = 0.0;          // includes objective_constant, original sense
    std::vector<double> primal;            // n_vars, meaningful when optimal
    std::vector<double> duals;             // one per constraint: d objective / d rhs
    std::int64_t iterations = 0;
};

struct SolveOptions {
    double feasibility_tol = 1e-9;
    double optimality_tol = 1e-9;
    // 0 means the default budget 50 * (n_vars + n_constraints).
    std::int64_t max_iterations = 0;
    int refactor_interval = 150;
    // Desk-scale guards: the dense basis factorization makes row counts much
    // beyond this impractical, so refuse instead of thrashing.
    int max_rows = 4000;
    int max_cols = 200000;
};

// Two-phase primal simplex with individually bounded variables, Dantzig
// pricing and a Bland's-rule fallback after degenerate stalls. Deterministic
// for a fixed input. Throws SolverError when no status can be certified
// within the iteration budget and ProblemTooLargeError beyond the size
// guards in `options`.
SolveReport solve_lp(const LinearProgram& lp, const SolveOptions& options = {});

struct ResidualReport {
    double max_bound_violation = 0.0;
    double max_constraint_violation = 0.0;
    double objective_value = 0.0;
};

// Exact feasibility residuals of a claimed solution, independent of any
// solver path. Throws std::invalid_argument on length mismatch.
ResidualReport check_solution(const LinearProgram& lp, const std::vector<double>& primal);

// Writes the program in the conventional textual LP interchange format
// (Maximize/Subject To/Bounds/End). The constant objective term, which the
// format cannot express, is emitted as a comment.
void write_lp_text(const LinearProgram& lp, std::ostream& out);

}  // namespace stochflow
