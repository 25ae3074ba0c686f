#include "lsched/fsmc.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace lsched {

namespace {

constexpr double kRowSumSlack = 1e-12;
// Entries this small are floating-point residue of a row that sums to one,
// not genuine transitions; treat them as absent when building the
// reachability graph (the linear solve still uses the exact values).
constexpr double kEdgeCut = 1e-14;

std::string row_label(int p) { return "state " + std::to_string(p); }

}  // namespace

StateSpace StateSpace::make(int B, int N) {
    if (B < 0) throw DomainError("StateSpace: buffer size B must be >= 0");
    if (N < 1) throw DomainError("StateSpace: continuity depth N must be >= 1");
    return StateSpace{B, N, B + N};
}

double PolicyMatrix::row_sum(int p) const {
    double s = 0.0;
    for (double a : alpha_hat[static_cast<std::size_t>(p)]) s += a;
    return s;
}

double PolicyMatrix::residual(int p) const {
    return std::max(0.0, 1.0 - row_sum(p));
}

void PolicyMatrix::validate() const {
    if (!(nu_d >= 0.0 && nu_d <= 1.0)) {
        throw InfeasiblePolicyError("policy: nu_d must lie in [0, 1]");
    }
    const auto n = static_cast<std::size_t>(space.num_states());
    if (alpha_hat.size() != n) {
        throw InfeasiblePolicyError("policy: expected " + std::to_string(n) +
                                    " rows, got " +
                                    std::to_string(alpha_hat.size()));
    }
    for (int p = 0; p <= space.M; ++p) {
        const auto& row = alpha_hat[static_cast<std::size_t>(p)];
        const auto want = static_cast<std::size_t>(space.mu(p) + 1);
        if (row.size() != want) {
            throw InfeasiblePolicyError(
                "policy: " + row_label(p) + " must have " +
                std::to_string(want) + " entries, got " +
                std::to_string(row.size()));
        }
        double s = 0.0;
        for (double a : row) {
            if (!std::isfinite(a) || a < 0.0 || a > 1.0) {
                throw InfeasiblePolicyError(
                    "policy: " + row_label(p) +
                    " has an entry outside [0, 1]");
            }
            s += a;
        }
        if (s > 1.0 + kRowSumSlack) {
            throw InfeasiblePolicyError("policy: " + row_label(p) +
                                        " sums to " + std::to_string(s) +
                                        " > 1");
        }
    }
}

ThresholdTable recover_thresholds(const PolicyMatrix& policy,
                                  const FadingModel& fading) {
    policy.validate();
    const StateSpace& sp = policy.space;
    ThresholdTable table;
    table.space = sp;
    table.kappa.resize(static_cast<std::size_t>(sp.num_states()));
    for (int p = 0; p <= sp.M; ++p) {
        const auto& row = policy.alpha_hat[static_cast<std::size_t>(p)];
        auto& krow = table.kappa[static_cast<std::size_t>(p)];
        krow.resize(row.size());
        double cum = 0.0;
        for (int q = 0; q <= sp.mu(p); ++q) {
            cum += row[static_cast<std::size_t>(q)];
            if (cum > 1.0 + kRowSumSlack) {
                throw InfeasiblePolicyError(
                    "thresholds: cumulative scheduling probability of " +
                    row_label(p) + " exceeds 1");
            }
            if (cum <= 0.0) {
                krow[static_cast<std::size_t>(q)] =
                    std::numeric_limits<double>::infinity();
            } else {
                const double u = std::clamp(1.0 - cum, 0.0, 1.0 - 1e-17);
                krow[static_cast<std::size_t>(q)] = fading.inverse_cdf(u);
            }
        }
    }
    return table;
}

std::pair<int, int> decide(int p, double f, const ThresholdTable& table) {
    const StateSpace& sp = table.space;
    if (p < 0 || p > sp.M) throw DomainError("decide: state out of range");
    const auto& krow = table.kappa[static_cast<std::size_t>(p)];
    const int mu = sp.mu(p);
    for (int q = 0; q <= mu; ++q) {
        if (f > krow[static_cast<std::size_t>(q)]) {
            return {q, mu - q + 1};
        }
    }
    return {std::min(p + 1, sp.M), 0};
}

TransitionMatrix assemble(const PolicyMatrix& policy) {
    policy.validate();
    const StateSpace& sp = policy.space;
    const int n = sp.num_states();
    TransitionMatrix m;
    m.space = sp;
    m.q_full.assign(static_cast<std::size_t>(n),
                    std::vector<double>(static_cast<std::size_t>(n), 0.0));
    m.q_sched = m.q_full;
    m.q_csi = m.q_full;
    const double nu_s = policy.nu_s();
    for (int p = 0; p <= sp.M; ++p) {
        const auto up = static_cast<std::size_t>(p);
        const int fwd = std::min(p + 1, sp.M);
        const auto ufwd = static_cast<std::size_t>(fwd);
        double sched = 0.0;
        for (int q = 0; q <= sp.mu(p); ++q) {
            const double a =
                policy.alpha_hat[up][static_cast<std::size_t>(q)];
            m.q_sched[up][static_cast<std::size_t>(q)] += nu_s * a;
            sched += a;
        }
        m.q_sched[up][ufwd] += std::max(0.0, 1.0 - sched);
        m.q_csi[up][ufwd] += policy.nu_d * sched;
        double row_total = 0.0;
        for (int q = 0; q < n; ++q) {
            const auto uq = static_cast<std::size_t>(q);
            m.q_full[up][uq] = m.q_sched[up][uq] + m.q_csi[up][uq];
            row_total += m.q_full[up][uq];
        }
        if (std::abs(row_total - 1.0) > kRowSumSlack) {
            throw NumericalError("assemble: " + row_label(p) +
                                 " of the transition matrix sums to " +
                                 std::to_string(row_total));
        }
    }
    return m;
}

namespace {

// Strongly connected components by repeated forward/backward reachability
// (the chain is tiny, so O(n^3) booleans are plenty).
std::vector<std::vector<bool>> reachability(
    const std::vector<std::vector<double>>& q) {
    const std::size_t n = q.size();
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i) {
        reach[i][i] = true;
        for (std::size_t j = 0; j < n; ++j) {
            if (q[i][j] > kEdgeCut) reach[i][j] = true;
        }
    }
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!reach[i][k]) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (reach[k][j]) reach[i][j] = true;
            }
        }
    }
    return reach;
}

std::vector<std::vector<int>> closed_classes(
    const std::vector<std::vector<double>>& q) {
    const std::size_t n = q.size();
    const auto reach = reachability(q);
    std::vector<int> cls(n, -1);
    std::vector<std::vector<int>> classes;
    for (std::size_t i = 0; i < n; ++i) {
        if (cls[i] >= 0) continue;
        const int id = static_cast<int>(classes.size());
        classes.emplace_back();
        for (std::size_t j = i; j < n; ++j) {
            if (cls[j] < 0 && reach[i][j] && reach[j][i]) {
                cls[j] = id;
                classes[static_cast<std::size_t>(id)].push_back(
                    static_cast<int>(j));
            }
        }
    }
    std::vector<std::vector<int>> closed;
    for (const auto& members : classes) {
        bool is_closed = true;
        for (int i : members) {
            for (std::size_t j = 0; j < n && is_closed; ++j) {
                if (q[static_cast<std::size_t>(i)][j] > kEdgeCut &&
                    cls[j] != cls[static_cast<std::size_t>(i)]) {
                    is_closed = false;
                }
            }
            if (!is_closed) break;
        }
        if (is_closed) closed.push_back(members);
    }
    return closed;
}

// Solve A x = b in place by Gaussian elimination with partial pivoting.
std::vector<double> solve_dense(std::vector<std::vector<double>> a,
                                std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        }
        if (std::abs(a[piv][col]) < 1e-300) {
            throw NumericalError(
                "steady_state: singular linear system (pivot ~ 0)");
        }
        std::swap(a[col], a[piv]);
        std::swap(b[col], b[piv]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t ri = n; ri-- > 0;) {
        double s = b[ri];
        for (std::size_t c = ri + 1; c < n; ++c) s -= a[ri][c] * x[c];
        x[ri] = s / a[ri][ri];
    }
    return x;
}

std::string format_classes(const std::vector<std::vector<int>>& classes) {
    std::ostringstream os;
    for (std::size_t k = 0; k < classes.size(); ++k) {
        os << (k ? ", {" : "{");
        for (std::size_t i = 0; i < classes[k].size(); ++i) {
            os << (i ? "," : "") << classes[k][i];
        }
        os << "}";
    }
    return os.str();
}

}  // namespace

std::vector<double> steady_state(const TransitionMatrix& matrix) {
    const auto& q = matrix.q_full;
    const std::size_t n = q.size();
    const auto closed = closed_classes(q);
    if (closed.empty()) {
        throw NumericalError("steady_state: no closed communicating class");
    }
    if (closed.size() > 1) {
        throw ReducibleChainError(
            "steady_state: chain splits into " +
                std::to_string(closed.size()) +
                " closed communicating classes " + format_classes(closed) +
                "; the stationary distribution is not unique",
            closed);
    }
    const auto& members = closed.front();
    const std::size_t k = members.size();
    // Restricted system: (Q^T - I) pi = 0 with the last equation replaced
    // by sum(pi) = 1.
    std::vector<std::vector<double>> a(k, std::vector<double>(k, 0.0));
    std::vector<double> b(k, 0.0);
    for (std::size_t r = 0; r < k; ++r) {
        for (std::size_t c = 0; c < k; ++c) {
            a[r][c] = q[static_cast<std::size_t>(members[c])]
                       [static_cast<std::size_t>(members[r])] -
                      (r == c ? 1.0 : 0.0);
        }
    }
    for (std::size_t c = 0; c < k; ++c) a[k - 1][c] = 1.0;
    b[k - 1] = 1.0;
    const auto x = solve_dense(std::move(a), std::move(b));

    std::vector<double> pi(n, 0.0);
    double total = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        double v = x[c];
        if (v < 0.0) {
            if (v < -1e-12) {
                throw NumericalError(
                    "steady_state: negative stationary probability " +
                    std::to_string(v));
            }
            v = 0.0;
        }
        pi[static_cast<std::size_t>(members[c])] = v;
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw NumericalError("steady_state: stationary mass " +
                             std::to_string(total) + " != 1");
    }
    for (double& v : pi) v /= total;

    double resid = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += pi[i] * q[i][j];
        resid = std::max(resid, std::abs(s - pi[j]));
    }
    if (resid > 1e-10) {
        throw NumericalError("steady_state: balance residual " +
                             std::to_string(resid) + " exceeds 1e-10");
    }
    return pi;
}

double violation_probability(const PolicyMatrix& policy,
                             const std::vector<double>& pi) {
    const int M = policy.space.M;
    return (1.0 - policy.nu_s() * policy.row_sum(M)) *
           pi[static_cast<std::size_t>(M)];
}

double average_drop_rate(const PolicyMatrix& policy,
                         const std::vector<double>& pi) {
    double theta = 0.0;
    for (int p = policy.space.B; p <= policy.space.M; ++p) {
        theta += (1.0 - policy.nu_s() * policy.row_sum(p)) *
                 pi[static_cast<std::size_t>(p)];
    }
    return theta;
}

ChainSolution solve_chain(const PolicyMatrix& policy) {
    const auto matrix = assemble(policy);
    ChainSolution sol;
    sol.pi = steady_state(matrix);
    sol.gamma = violation_probability(policy, sol.pi);
    sol.theta_r = average_drop_rate(policy, sol.pi);
    return sol;
}

std::string dump_policy(const PolicyMatrix& policy) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << policy.space.B << " " << policy.space.N << " " << policy.nu_d
       << "\n";
    for (const auto& row : policy.alpha_hat) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            os << (i ? " " : "") << row[i];
        }
        os << "\n";
    }
    return os.str();
}

PolicyMatrix load_policy(const std::string& text) {
    std::istringstream is(text);
    int B = 0;
    int N = 0;
    double nu_d = 0.0;
    if (!(is >> B >> N >> nu_d)) {
        throw ConfigError("policy file: malformed header (want: B N nu_d)");
    }
    PolicyMatrix policy;
    policy.space = StateSpace::make(B, N);
    policy.nu_d = nu_d;
    policy.alpha_hat.resize(
        static_cast<std::size_t>(policy.space.num_states()));
    for (int p = 0; p <= policy.space.M; ++p) {
        auto& row = policy.alpha_hat[static_cast<std::size_t>(p)];
        row.resize(static_cast<std::size_t>(policy.space.mu(p) + 1));
        for (double& v : row) {
            if (!(is >> v)) {
                throw ConfigError("policy file: truncated row for " +
                                  row_label(p));
            }
        }
    }
    policy.validate();
    return policy;
}

PolicyMatrix load_policy_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("policy file: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_policy(buf.str());
}

}  // namespace lsched
