#pragma once
#include <nomahfl/common.hpp>
#include <Eigen/Core>
#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace nomahfl::fuzzy {

// Trapezoid (a, b, c, d) on [0, 1]; a == b or c == d gives a shoulder.
struct MembershipFunction {
    std::string name;
    double a = 0, b = 0, c = 0, d = 0;

    double degree(double x) const;
    void validate() const;
};

struct LinguisticVariable {
    std::string name;
    std::vector<MembershipFunction> classes;

    std::size_t size() const { return classes.size(); }
    std::size_t index_of(const std::string& class_name) const;  // case-insensitive
};

// Three classes with peaks at 0, 0.5, 1 and full overlap between neighbours.
LinguisticVariable three_level(std::string name, std::array<std::string, 3> labels);

LinguisticVariable channel_quality();  // weak, medium, strong
LinguisticVariable data_quantity();    // shortage, average, sufficient
LinguisticVariable staleness();        // fresh, medium, stale
LinguisticVariable output_level();     // poor, fair, average, good, excellent (peaks 0 .. 1 by 0.25)

struct Rule {
    int id = 0;  // 1-based, table order
    std::size_t cq = 0, dq = 0, ms = 0;
    std::size_t out = 0;
};

/*
 * 27 rules mapping (channel quality, data quantity, staleness) classes to
 * an output class. Every antecedent triple occurs exactly once.
 *
 * Text form, one rule per line, '#' starts a comment:
 *     <id> <cq> <dq> <ms> <output>
 * e.g. "24 weak average stale average".
 */
class FuzzyRuleBase {
public:
    static FuzzyRuleBase standard();
    static FuzzyRuleBase load(std::istream& in);
    static FuzzyRuleBase load_file(const std::string& path);

    void save(std::ostream& out) const;

    const std::vector<Rule>& rules() const { return rules_; }
    const Rule& lookup(std::size_t cq, std::size_t dq, std::size_t ms) const;

    friend bool operator==(const FuzzyRuleBase&, const FuzzyRuleBase&);

private:
    explicit FuzzyRuleBase(std::vector<Rule> rules);
    std::vector<Rule> rules_;
};

bool operator==(const Rule& a, const Rule& b);

// Recursion: 1 after an association, otherwise A + 1.
int update_staleness(int previous, bool associated_previous);

struct Normalized {
    double value = 0;
    bool clamped = false;
};

// V / MV clamped into [0, 1].
Normalized normalize(double value, double max_value);

using Degrees = std::vector<double>;

Degrees fuzzify(double nv, const LinguisticVariable& variable);

struct Inference {
    Degrees activation;               // per output class
    std::vector<double> rule_degree;  // per rule, table order

    // 1-based id of the rule with the largest degree (lowest id on ties).
    int strongest_rule() const;
    std::size_t dominant_class() const;
};

// Max-Min: rule degree = min of antecedent degrees, class activation = max over its rules.
Inference infer(const Degrees& cq, const Degrees& dq, const Degrees& ms, const FuzzyRuleBase& rules);

// Centre of gravity of the max of clipped consequents on a uniform grid of [0, 1].
double defuzzify(const Degrees& activation, const LinguisticVariable& output,
                 std::size_t grid_points = 1001);

class FuzzyEngine {
public:
    FuzzyEngine();
    FuzzyEngine(LinguisticVariable cq, LinguisticVariable dq, LinguisticVariable ms,
                LinguisticVariable out, FuzzyRuleBase rules, std::size_t grid_points = 1001);

    Inference evaluate(double nv_cq, double nv_dq, double nv_ms) const;
    double score(double nv_cq, double nv_dq, double nv_ms) const;

    // Most active class per input variable.
    std::array<std::size_t, 3> classify(double nv_cq, double nv_dq, double nv_ms) const;

    const LinguisticVariable& cq() const { return cq_; }
    const LinguisticVariable& dq() const { return dq_; }
    const LinguisticVariable& ms() const { return ms_; }
    const LinguisticVariable& output() const { return out_; }
    const FuzzyRuleBase& rules() const { return rules_; }

private:
    LinguisticVariable cq_, dq_, ms_, out_;
    FuzzyRuleBase rules_;
    std::size_t grid_points_;
    std::vector<double> out_grid_;  // output degrees per grid point, classes contiguous
};

struct AssociationProblem {
    Eigen::MatrixXd score;     // clients x edges
    Eigen::MatrixXd distance;  // clients x edges, used for conflicts
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> covered;
    std::size_t capacity = 4;
};

struct Association {
    std::vector<int> edge_of;                      // per client, -1 when idle
    std::vector<std::vector<std::size_t>> members;  // per edge, in selection order
    std::vector<std::size_t> idle_edges;           // edges left without clients

    std::size_t assigned() const;
    bool is_associated(std::size_t client) const { return edge_of.at(client) >= 0; }
};

/*
 * Each edge ranks the clients it covers by descending score (ties by index)
 * and takes its first `capacity`. A client picked by several edges joins
 * the nearest one; every losing edge then takes its next unassigned client.
 * Repeats until no edge can fill another slot.
 */
Association associate(const AssociationProblem& problem);

}  // namespace nomahfl::fuzzy
