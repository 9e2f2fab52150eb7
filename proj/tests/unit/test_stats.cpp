#include <catch2/catch.hpp>

#include <string>
#include <vector>

#include "fshap/stats.hpp"

using namespace fshap;

namespace {

PairedScores against_zero(const std::vector<double>& diffs) {
    PairedScores pairs;
    pairs.a = diffs;
    pairs.b.assign(diffs.size(), 0.0);
    return pairs;
}

std::vector<ScoreRow> rows_for(const std::string& attributor, const std::string& model,
                               const std::vector<double>& scores) {
    std::vector<ScoreRow> rows;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        rows.push_back(
            {"i" + std::to_string(i + 1), Task::CodeGeneration, model, attributor, scores[i]});
    }
    return rows;
}

void append(std::vector<ScoreRow>& to, const std::vector<ScoreRow>& extra) {
    to.insert(to.end(), extra.begin(), extra.end());
}

}  // namespace

// --- Wilcoxon signed-rank ---------------------------------------------------------

TEST_CASE("wilcoxon three positive differences") {
    // All signs positive, distinct magnitudes: the most extreme of the 2^3
    // sign assignments, so p = 2 * (1/8) = 0.25.
    auto r = wilcoxon_signed_rank(against_zero({1.0, 2.0, 3.0}));
    CHECK(r.p_value == Approx(0.25).epsilon(1e-12));
    CHECK(r.n_effective == 3);
    CHECK(r.w_plus == 6.0);
    CHECK(r.exact);
    CHECK_FALSE(r.degenerate);
}

TEST_CASE("wilcoxon four negative differences") {
    auto r = wilcoxon_signed_rank(against_zero({-0.3, -0.24, -0.38, -0.1}));
    CHECK(r.p_value == Approx(0.125).epsilon(1e-12));
    CHECK(r.n_effective == 4);
    CHECK(r.w_plus == 0.0);
    CHECK(r.exact);
}

TEST_CASE("wilcoxon drops zero differences and handles the degenerate case") {
    PairedScores some_zero;
    some_zero.a = {0.5, 0.2, 0.9};
    some_zero.b = {0.5, 0.2, 0.65};
    auto r = wilcoxon_signed_rank(some_zero);
    CHECK(r.n_effective == 1);
    CHECK(r.w_plus == 1.0);
    CHECK(r.p_value == 1.0);  // a single pair can never reach significance

    PairedScores all_zero;
    all_zero.a = {0.1, 0.2};
    all_zero.b = {0.1, 0.2};
    auto d = wilcoxon_signed_rank(all_zero);
    CHECK(d.degenerate);
    CHECK(d.p_value == 1.0);
    CHECK(d.n_effective == 0);
}

TEST_CASE("wilcoxon gives tied magnitudes their midrank") {
    // |d| = {0.3, 0.3, 0.3}: every rank is the midrank 2, so W+ counts two
    // positives at 2 each.
    auto r = wilcoxon_signed_rank(against_zero({0.3, 0.3, -0.3}));
    CHECK(r.w_plus == 4.0);
    CHECK(r.p_value == 1.0);
}

TEST_CASE("wilcoxon large-sample path matches the frozen normal approximation") {
    PairedScores pairs;
    pairs.a = {0.01, 0.02, 0.00, 0.05, 0.03, 0.02, 0.00, 0.01, 0.04, 0.06, 0.02, 0.03, 0.01,
               0.00, 0.05, 0.02, 0.04, 0.01, 0.03, 0.02, 0.06, 0.00, 0.01, 0.02, 0.03};
    pairs.b = {0.20, 0.15, 0.10, 0.30, 0.25, 0.18, 0.12, 0.22, 0.28, 0.35, 0.16, 0.24, 0.14,
               0.11, 0.33, 0.19, 0.27, 0.13, 0.21, 0.17, 0.31, 0.09, 0.15, 0.23, 0.26};
    auto r = wilcoxon_signed_rank(pairs);
    CHECK(r.n_effective == 25);
    CHECK_FALSE(r.exact);
    // Tie- and continuity-corrected z, two-sided.
    CHECK(r.p_value == Approx(1.3023559673087328e-05).epsilon(1e-12));
}

TEST_CASE("wilcoxon switches from enumeration to approximation past twenty pairs") {
    std::vector<double> twenty, twenty_one;
    for (int i = 1; i <= 20; ++i) twenty.push_back(0.01 * i);
    twenty_one = twenty;
    twenty_one.push_back(0.21);
    CHECK(wilcoxon_signed_rank(against_zero(twenty)).exact);
    CHECK_FALSE(wilcoxon_signed_rank(against_zero(twenty_one)).exact);
}

TEST_CASE("wilcoxon rejects mismatched or empty inputs") {
    PairedScores bad;
    bad.a = {1.0};
    CHECK_THROWS_AS(wilcoxon_signed_rank(bad), ContractViolation);
    CHECK_THROWS_AS(wilcoxon_signed_rank(PairedScores{}), ContractViolation);
}

// --- Cliff's delta --------------------------------------------------------------

TEST_CASE("cliffs delta spans its range") {
    auto low = cliffs_delta({1.0, 2.0}, {3.0, 4.0});
    CHECK(low.delta == -1.0);
    CHECK(low.magnitude == Magnitude::Large);

    auto high = cliffs_delta({3.0, 4.0}, {1.0, 2.0});
    CHECK(high.delta == 1.0);

    auto same = cliffs_delta({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0});
    CHECK(same.delta == 0.0);
    CHECK(same.magnitude == Magnitude::Negligible);
}

TEST_CASE("cliffs delta counts dominance pairwise") {
    // a = {0.1, 0.2, 0.9} vs b = {0.15, 0.05}: greater = 5, less = 1 of 6.
    auto r = cliffs_delta({0.1, 0.2, 0.9}, {0.15, 0.05});
    CHECK(r.delta == Approx(4.0 / 6.0));
    CHECK(r.magnitude == Magnitude::Large);
}

TEST_CASE("cliffs delta magnitude bands") {
    // One probe against twenty distinct values: delta = (2k - 20) / 20 where
    // k values sit below the probe.
    auto banded = [](int below) {
        std::vector<double> b;
        for (int i = 1; i <= 20; ++i) b.push_back(static_cast<double>(i));
        return cliffs_delta({below + 0.5}, b);
    };
    CHECK(banded(11).delta == Approx(0.1));
    CHECK(banded(11).magnitude == Magnitude::Negligible);
    CHECK(banded(12).delta == Approx(0.2));
    CHECK(banded(12).magnitude == Magnitude::Small);
    CHECK(banded(14).delta == Approx(0.4));
    CHECK(banded(14).magnitude == Magnitude::Medium);
    CHECK(banded(16).delta == Approx(0.6));
    CHECK(banded(16).magnitude == Magnitude::Large);

    CHECK(magnitude_letter(Magnitude::Negligible) == 'N');
    CHECK(magnitude_letter(Magnitude::Small) == 'S');
    CHECK(magnitude_letter(Magnitude::Medium) == 'M');
    CHECK(magnitude_letter(Magnitude::Large) == 'L');
}

TEST_CASE("cliffs delta rejects empty samples") {
    CHECK_THROWS_AS(cliffs_delta({}, {1.0}), ContractViolation);
    CHECK_THROWS_AS(cliffs_delta({1.0}, {}), ContractViolation);
}

// --- Holm correction --------------------------------------------------------------

TEST_CASE("holm step-down on three p-values") {
    auto adj = holm_correction({0.01, 0.04, 0.03});
    REQUIRE(adj.size() == 3);
    CHECK(adj[0] == Approx(0.03).epsilon(1e-12));
    CHECK(adj[1] == Approx(0.06).epsilon(1e-12));
    CHECK(adj[2] == Approx(0.06).epsilon(1e-12));
}

TEST_CASE("holm results come back in input order") {
    auto adj = holm_correction({0.04, 0.01, 0.03});
    CHECK(adj[0] == Approx(0.06).epsilon(1e-12));
    CHECK(adj[1] == Approx(0.03).epsilon(1e-12));
    CHECK(adj[2] == Approx(0.06).epsilon(1e-12));
}

TEST_CASE("holm clamps at one and enforces monotonicity") {
    auto clamped = holm_correction({0.9, 0.8});
    CHECK(clamped[0] == 1.0);
    CHECK(clamped[1] == 1.0);

    // 2 * 0.01 = 0.02 exceeds 1 * 0.011, so the running max carries forward.
    auto mono = holm_correction({0.01, 0.011});
    CHECK(mono[0] == Approx(0.02).epsilon(1e-12));
    CHECK(mono[1] == Approx(0.02).epsilon(1e-12));

    CHECK(holm_correction({}).empty());
    CHECK(holm_correction({0.5}) == std::vector<double>{0.5});
    CHECK_THROWS_AS(holm_correction({-0.1}), ContractViolation);
    CHECK_THROWS_AS(holm_correction({1.5}), ContractViolation);
}

// --- summaries ------------------------------------------------------------------

TEST_CASE("summarize computes mean and midpoint median") {
    auto [mean, median] = summarize({0.0, 0.01, 0.02, 0.0});
    CHECK(mean == Approx(0.0075));
    CHECK(median == Approx(0.005));

    auto [m2, med2] = summarize({3.0, 1.0, 2.0});
    CHECK(m2 == Approx(2.0));
    CHECK(med2 == 2.0);

    CHECK_THROWS_AS(summarize({}), ContractViolation);
}

// --- results table ------------------------------------------------------------------

TEST_CASE("results table golden render") {
    auto rows = rows_for("featureshap", "m1", {0.0, 0.01, 0.02, 0.0});
    append(rows, rows_for("random", "m1", {0.3, 0.25, 0.4, 0.1}));

    // featureshap is uniformly below the baseline: delta -1, and the paired
    // Wilcoxon is the four-negative-differences case (p = 0.125, alone in
    // its Holm family).
    CHECK(results_csv(rows) ==
          "task,model,attributor,mean,median,n,p_adjusted,delta,magnitude\n"
          "codegen,m1,featureshap,0.0075,0.005,4,,,\n"
          "codegen,m1,random,0.2625,0.275,4,0.125,-1,L\n");
}

TEST_CASE("results table adjusts across the whole comparison family") {
    auto rows = rows_for("featureshap", "m1", {0.0, 0.01, 0.02, 0.0});
    append(rows, rows_for("random", "m1", {0.3, 0.25, 0.4, 0.1}));
    append(rows, rows_for("llm", "m1", {0.5, 0.45, 0.6, 0.2}));

    // Both comparisons have raw p = 0.125; with two hypotheses Holm doubles
    // the smaller and the running max holds the second at the same value.
    const std::string csv = results_csv(rows);
    CHECK(csv.find("codegen,m1,llm,0.4375,0.475,4,0.25,-1,L\n") != std::string::npos);
    CHECK(csv.find("codegen,m1,random,0.2625,0.275,4,0.25,-1,L\n") != std::string::npos);
}

TEST_CASE("results table groups by task and model") {
    auto rows = rows_for("featureshap", "m1", {0.1, 0.2});
    append(rows, rows_for("featureshap", "m2", {0.3, 0.4}));
    rows.push_back({"j1", Task::CodeSummarization, "m1", "featureshap", 0.5});

    const std::string csv = results_csv(rows);
    CHECK(csv.find("codegen,m1,featureshap,0.15,0.15,2,,,\n") != std::string::npos);
    CHECK(csv.find("codegen,m2,featureshap,0.35,0.35,2,,,\n") != std::string::npos);
    CHECK(csv.find("codesum,m1,featureshap,0.5,0.5,1,,,\n") != std::string::npos);
}

TEST_CASE("results table pairs baselines on shared instances only") {
    std::vector<ScoreRow> rows;
    rows.push_back({"i1", Task::CodeGeneration, "m", "featureshap", 0.0});
    rows.push_back({"i2", Task::CodeGeneration, "m", "featureshap", 0.1});
    rows.push_back({"i2", Task::CodeGeneration, "m", "random", 0.4});
    rows.push_back({"i3", Task::CodeGeneration, "m", "random", 0.6});

    // Only i2 is shared: one pair, so the test cannot reach significance.
    const std::string csv = results_csv(rows);
    CHECK(csv.find("codegen,m,random,0.5,0.5,2,1,-1,L\n") != std::string::npos);
}

TEST_CASE("results table leaves baselines without a reference uncompared") {
    auto rows = rows_for("random", "m1", {0.2, 0.3});
    const std::string csv = results_csv(rows);
    CHECK(csv.find("codegen,m1,random,0.25,0.25,2,,,\n") != std::string::npos);
}

TEST_CASE("results table quotes awkward identifier fields") {
    std::vector<ScoreRow> rows;
    rows.push_back({"i1", Task::CodeGeneration, "models/v1,beta", "featureshap", 0.1});
    rows.push_back({"i1", Task::CodeGeneration, "say \"hi\"", "featureshap", 0.2});

    const std::string csv = results_csv(rows);
    CHECK(csv.find("codegen,\"models/v1,beta\",featureshap,") != std::string::npos);
    CHECK(csv.find("codegen,\"say \"\"hi\"\"\",featureshap,") != std::string::npos);
}
