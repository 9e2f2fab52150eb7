#ifndef FSHAP_STATS_HPP
#define FSHAP_STATS_HPP

#include <string>
#include <utility>
#include <vector>

#include "fshap/noise.hpp"

namespace fshap {

/// Per-instance noise scores of two attributors on the same instances.
struct PairedScores {
    std::vector<double> a;
    std::vector<double> b;
};

struct WilcoxonResult {
    double p_value = 1.0;
    unsigned n_effective = 0;  // pairs with non-zero difference
    double w_plus = 0.0;       // sum of positive-difference ranks
    bool exact = false;        // enumeration vs normal approximation
    bool degenerate = false;   // all differences zero → p fixed at 1
};

/// Two-sided Wilcoxon signed-rank test. Zero differences are dropped; tied
/// absolute differences receive midranks. Exact enumeration of all 2^n sign
/// assignments for n_effective ≤ 20, normal approximation with tie and
/// continuity corrections beyond.
WilcoxonResult wilcoxon_signed_rank(const PairedScores& pairs);

enum class Magnitude { Negligible, Small, Medium, Large };

char magnitude_letter(Magnitude m);  // N / S / M / L

struct CliffsResult {
    double delta = 0.0;
    Magnitude magnitude = Magnitude::Negligible;
};

/// δ = (#{a_i > b_j} − #{a_i < b_j}) / (|a|·|b|), computed in O(n log n);
/// |δ| < 0.147 → N, < 0.33 → S, < 0.474 → M, else L.
CliffsResult cliffs_delta(const std::vector<double>& a, const std::vector<double>& b);

/// Holm step-down adjustment, returned in the input order:
/// adjusted_(k) = max_{j ≤ k} min(1, (m − j + 1) · p_(j)) over ascending p.
std::vector<double> holm_correction(const std::vector<double>& p);

/// (arithmetic mean, median with the midpoint rule for even n).
std::pair<double, double> summarize(const std::vector<double>& scores);

/// Renders the results table: one CSV row per (task, model, attributor)
/// group with mean/median/n, where each non-featureshap row also carries the
/// Holm-adjusted Wilcoxon p, Cliff's delta, and magnitude of its paired
/// comparison featureshap-vs-baseline (negative delta ⇒ featureshap's noise
/// scores run lower). Holm adjusts across every comparison in the call.
/// Columns: task,model,attributor,mean,median,n,p_adjusted,delta,magnitude.
std::string results_csv(const std::vector<ScoreRow>& rows);

}  // namespace fshap

#endif  // FSHAP_STATS_HPP
