#include "fshap/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <tuple>
#include <unordered_map>

namespace fshap {

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank
// ---------------------------------------------------------------------------

namespace {

/// Midranks of |d| (1-based), doubled so ties at .5 stay integral.
std::vector<unsigned> doubled_midranks(const std::vector<double>& abs_d) {
    const std::size_t n = abs_d.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return abs_d[i] < abs_d[j]; });

    std::vector<unsigned> rank2(n, 0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && abs_d[order[j + 1]] == abs_d[order[i]]) {
            ++j;
        }
        // positions i..j (0-based) share the midrank ((i+1) + (j+1)) / 2.
        const unsigned doubled = static_cast<unsigned>((i + 1) + (j + 1));
        for (std::size_t k = i; k <= j; ++k) {
            rank2[order[k]] = doubled;
        }
        i = j + 1;
    }
    return rank2;
}

/// Exact two-sided p by dynamic programming over the 2^n equiprobable sign
/// assignments: poly[w] counts assignments whose doubled W+ equals w.
/// Counts fit a double exactly for n ≤ 20 (≤ 2^20 states).
double exact_two_sided_p(const std::vector<unsigned>& rank2, double w2_observed) {
    const unsigned total = std::accumulate(rank2.begin(), rank2.end(), 0u);
    std::vector<double> poly(total + 1, 0.0);
    poly[0] = 1.0;
    unsigned reach = 0;
    for (unsigned r : rank2) {
        reach += r;
        for (unsigned w = reach; w >= r; --w) {
            poly[w] += poly[w - r];
        }
    }
    const double denom = std::pow(2.0, static_cast<double>(rank2.size()));
    double below = 0.0, above = 0.0;
    for (unsigned w = 0; w <= total; ++w) {
        if (static_cast<double>(w) <= w2_observed + 1e-9) below += poly[w];
        if (static_cast<double>(w) >= w2_observed - 1e-9) above += poly[w];
    }
    return std::min(1.0, 2.0 * std::min(below, above) / denom);
}

double approx_two_sided_p(const std::vector<unsigned>& rank2, double w_plus) {
    const double n = static_cast<double>(rank2.size());
    const double mean = n * (n + 1.0) / 4.0;

    // Tie correction: subtract Σ(t³ − t)/48 over tie groups of |d|.
    std::unordered_map<unsigned, unsigned> groups;
    for (unsigned r : rank2) {
        ++groups[r];
    }
    double tie_term = 0.0;
    for (const auto& [_, t] : groups) {
        const double td = static_cast<double>(t);
        tie_term += td * td * td - td;
    }
    const double variance = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if (variance <= 0.0) {
        return 1.0;
    }
    double z = w_plus - mean;
    // Continuity correction pulls the statistic half a step toward the mean.
    if (z > 0.5) {
        z -= 0.5;
    } else if (z < -0.5) {
        z += 0.5;
    } else {
        z = 0.0;
    }
    z /= std::sqrt(variance);
    return std::erfc(std::abs(z) / std::sqrt(2.0));
}

}  // namespace

WilcoxonResult wilcoxon_signed_rank(const PairedScores& pairs) {
    if (pairs.a.size() != pairs.b.size() || pairs.a.empty()) {
        throw ContractViolation("paired scores need equal, nonzero lengths");
    }
    std::vector<double> d;
    for (std::size_t i = 0; i < pairs.a.size(); ++i) {
        const double diff = pairs.a[i] - pairs.b[i];
        if (diff != 0.0) {
            d.push_back(diff);
        }
    }

    WilcoxonResult result;
    result.n_effective = static_cast<unsigned>(d.size());
    if (d.empty()) {
        result.degenerate = true;
        result.p_value = 1.0;
        return result;
    }

    std::vector<double> abs_d(d.size());
    std::transform(d.begin(), d.end(), abs_d.begin(), [](double x) { return std::abs(x); });
    const std::vector<unsigned> rank2 = doubled_midranks(abs_d);

    double w2_plus = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d[i] > 0.0) {
            w2_plus += rank2[i];
        }
    }
    result.w_plus = w2_plus / 2.0;

    if (d.size() <= 20) {
        result.exact = true;
        result.p_value = exact_two_sided_p(rank2, w2_plus);
    } else {
        result.exact = false;
        result.p_value = std::min(1.0, approx_two_sided_p(rank2, result.w_plus));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Cliff's delta
// ---------------------------------------------------------------------------

char magnitude_letter(Magnitude m) {
    switch (m) {
        case Magnitude::Negligible: return 'N';
        case Magnitude::Small: return 'S';
        case Magnitude::Medium: return 'M';
        case Magnitude::Large: return 'L';
    }
    return '?';
}

CliffsResult cliffs_delta(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) {
        throw ContractViolation("cliffs_delta needs two non-empty samples");
    }
    std::vector<double> sorted_b = b;
    std::sort(sorted_b.begin(), sorted_b.end());

    // #{b_j < a_i} and #{b_j > a_i} via binary search per a_i.
    long long greater = 0, less = 0;
    for (double x : a) {
        const auto lo = std::lower_bound(sorted_b.begin(), sorted_b.end(), x);
        const auto hi = std::upper_bound(sorted_b.begin(), sorted_b.end(), x);
        greater += lo - sorted_b.begin();                      // a_i > b_j
        less += sorted_b.end() - hi;                           // a_i < b_j
    }
    CliffsResult result;
    result.delta = static_cast<double>(greater - less) /
                   (static_cast<double>(a.size()) * static_cast<double>(b.size()));
    const double mag = std::abs(result.delta);
    result.magnitude = mag < 0.147   ? Magnitude::Negligible
                       : mag < 0.33  ? Magnitude::Small
                       : mag < 0.474 ? Magnitude::Medium
                                     : Magnitude::Large;
    return result;
}

// ---------------------------------------------------------------------------
// Holm correction & summaries
// ---------------------------------------------------------------------------

std::vector<double> holm_correction(const std::vector<double>& p) {
    const std::size_t m = p.size();
    for (double x : p) {
        if (!(x >= 0.0 && x <= 1.0)) {
            throw ContractViolation("p-values must lie in [0,1]");
        }
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return p[i] < p[j]; });

    std::vector<double> adjusted(m, 0.0);
    double running_max = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const double stepped =
            std::min(1.0, static_cast<double>(m - k) * p[order[k]]);
        running_max = std::max(running_max, stepped);
        adjusted[order[k]] = running_max;
    }
    return adjusted;
}

std::pair<double, double> summarize(const std::vector<double>& scores) {
    if (scores.empty()) {
        throw ContractViolation("cannot summarize an empty sample");
    }
    const double mean =
        std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double median =
        n % 2 == 1 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
    return {mean, median};
}

// ---------------------------------------------------------------------------
// Results table
// ---------------------------------------------------------------------------

namespace {

std::string format_g(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

/// CSV escaping for the identifier columns (task/model/attributor names are
/// normally plain, but user-supplied model ids may not be).
std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

std::string results_csv(const std::vector<ScoreRow>& rows) {
    // group key → instance_id → score; maps keep the output order stable.
    using GroupKey = std::tuple<std::string, std::string, std::string>;  // task, model, attributor
    std::map<GroupKey, std::map<std::string, double>> groups;
    for (const auto& row : rows) {
        groups[{task_name(row.task), row.model_id, row.attributor}][row.instance_id] =
            row.noise_score;
    }

    struct Line {
        GroupKey key;
        double mean = 0.0;
        double median = 0.0;
        std::size_t n = 0;
        bool has_comparison = false;
        double p_raw = 1.0;
        double delta = 0.0;
        Magnitude magnitude = Magnitude::Negligible;
        std::size_t comparison_slot = 0;  // index into the Holm family
    };

    std::vector<Line> lines;
    std::vector<double> family_p;
    for (const auto& [key, scores_by_id] : groups) {
        Line line;
        line.key = key;
        std::vector<double> scores;
        for (const auto& [_, s] : scores_by_id) {
            scores.push_back(s);
        }
        std::tie(line.mean, line.median) = summarize(scores);
        line.n = scores.size();

        const auto& [task, model, attributor] = key;
        if (attributor != "featureshap") {
            // Paired comparison against featureshap on the shared instances.
            auto ref = groups.find(GroupKey{task, model, "featureshap"});
            if (ref != groups.end()) {
                PairedScores pairs;
                for (const auto& [id, s] : ref->second) {
                    auto other = scores_by_id.find(id);
                    if (other != scores_by_id.end()) {
                        pairs.a.push_back(s);         // featureshap
                        pairs.b.push_back(other->second);
                    }
                }
                if (!pairs.a.empty()) {
                    line.has_comparison = true;
                    line.p_raw = wilcoxon_signed_rank(pairs).p_value;
                    const CliffsResult cd = cliffs_delta(pairs.a, pairs.b);
                    line.delta = cd.delta;
                    line.magnitude = cd.magnitude;
                    line.comparison_slot = family_p.size();
                    family_p.push_back(line.p_raw);
                }
            }
        }
        lines.push_back(std::move(line));
    }

    const std::vector<double> adjusted = holm_correction(family_p);

    std::string csv = "task,model,attributor,mean,median,n,p_adjusted,delta,magnitude\n";
    for (const auto& line : lines) {
        const auto& [task, model, attributor] = line.key;
        csv += csv_field(task) + ',' + csv_field(model) + ',' + csv_field(attributor) + ',';
        csv += format_g(line.mean) + ',' + format_g(line.median) + ',' +
               std::to_string(line.n) + ',';
        if (line.has_comparison) {
            csv += format_g(adjusted[line.comparison_slot]);
            csv += ',';
            csv += format_g(line.delta);
            csv += ',';
            csv += magnitude_letter(line.magnitude);
        } else {
            csv += ",,";
        }
        csv += '\n';
    }
    return csv;
}

}  // namespace fshap
