#include <nomahfl/fuzzy.hpp>
#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

namespace nomahfl::fuzzy {

namespace {

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

double MembershipFunction::degree(double x) const
{
    if (x < a || x > d) return 0;
    if (x < b) return (x - a) / (b - a);
    if (x <= c) return 1;
    return (d - x) / (d - c);
}

void MembershipFunction::validate() const
{
    if (!(a <= b && b <= c && c <= d)) {
        throw config_error("membership function '" + name + "' breakpoints must be ordered");
    }
}

std::size_t LinguisticVariable::index_of(const std::string& class_name) const
{
    const auto key = lower(class_name);
    for (std::size_t i = 0; i < classes.size(); ++i) {
        if (lower(classes[i].name) == key) return i;
    }
    throw config_error("unknown class '" + class_name + "' for variable " + name);
}

LinguisticVariable three_level(std::string name, std::array<std::string, 3> labels)
{
    return {std::move(name),
            {{labels[0], 0.0, 0.0, 0.0, 0.5},
             {labels[1], 0.0, 0.5, 0.5, 1.0},
             {labels[2], 0.5, 1.0, 1.0, 1.0}}};
}

LinguisticVariable channel_quality() { return three_level("CQ", {"weak", "medium", "strong"}); }
LinguisticVariable data_quantity() { return three_level("DQ", {"shortage", "average", "sufficient"}); }
LinguisticVariable staleness() { return three_level("MS", {"fresh", "medium", "stale"}); }

LinguisticVariable output_level()
{
    return {"output",
            {{"poor", 0.0, 0.0, 0.0, 0.25},
             {"fair", 0.0, 0.25, 0.25, 0.5},
             {"average", 0.25, 0.5, 0.5, 0.75},
             {"good", 0.5, 0.75, 0.75, 1.0},
             {"excellent", 0.75, 1.0, 1.0, 1.0}}};
}

bool operator==(const Rule& x, const Rule& y)
{
    return x.id == y.id && x.cq == y.cq && x.dq == y.dq && x.ms == y.ms && x.out == y.out;
}

FuzzyRuleBase::FuzzyRuleBase(std::vector<Rule> rules) : rules_(std::move(rules))
{
    if (rules_.size() != 27) {
        throw config_error("rule base needs 27 rules, got " + std::to_string(rules_.size()));
    }
    std::array<int, 27> seen{};
    for (const auto& r : rules_) {
        if (r.cq > 2 || r.dq > 2 || r.ms > 2 || r.out > 4) throw config_error("rule class out of range");
        auto& slot = seen[r.cq * 9 + r.dq * 3 + r.ms];
        if (slot) {
            throw config_error("rule " + std::to_string(r.id) + " repeats an antecedent combination");
        }
        slot = r.id;
    }
}

FuzzyRuleBase FuzzyRuleBase::standard()
{
    std::istringstream table(R"(# id  channel  data        staleness  output
 1  strong   shortage    fresh      fair
 2  strong   shortage    medium     average
 3  strong   shortage    stale      good
 4  strong   average     fresh      average
 5  strong   average     medium     good
 6  strong   average     stale      excellent
 7  strong   sufficient  fresh      good
 8  strong   sufficient  medium     excellent
 9  strong   sufficient  stale      excellent
10  medium   shortage    fresh      poor
11  medium   shortage    medium     fair
12  medium   shortage    stale      average
13  medium   average     fresh      fair
14  medium   average     medium     average
15  medium   average     stale      good
16  medium   sufficient  fresh      average
17  medium   sufficient  medium     good
18  medium   sufficient  stale      excellent
19  weak     shortage    fresh      poor
20  weak     shortage    medium     poor
21  weak     shortage    stale      fair
22  weak     average     fresh      poor
23  weak     average     medium     fair
24  weak     average     stale      average
25  weak     sufficient  fresh      fair
26  weak     sufficient  medium     average
27  weak     sufficient  stale      good
)");
    return load(table);
}

FuzzyRuleBase FuzzyRuleBase::load(std::istream& in)
{
    const auto cq = channel_quality();
    const auto dq = data_quantity();
    const auto ms = staleness();
    const auto out = output_level();
    std::vector<Rule> rules;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        Rule r;
        std::string c, d, s, o;
        if (!(fields >> r.id)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            throw config_error("rule table line " + std::to_string(line_no) + ": expected a rule id");
        }
        if (!(fields >> c >> d >> s >> o)) {
            throw config_error("rule table line " + std::to_string(line_no) + ": expected 4 classes");
        }
        r.cq = cq.index_of(c);
        r.dq = dq.index_of(d);
        r.ms = ms.index_of(s);
        r.out = out.index_of(o);
        rules.push_back(r);
    }
    return FuzzyRuleBase(std::move(rules));
}

FuzzyRuleBase FuzzyRuleBase::load_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw config_error("cannot open rule table " + path);
    return load(in);
}

void FuzzyRuleBase::save(std::ostream& os) const
{
    const auto cq = channel_quality();
    const auto dq = data_quantity();
    const auto ms = staleness();
    const auto out = output_level();
    os << "# id channel data staleness output\n";
    for (const auto& r : rules_) {
        os << r.id << ' ' << cq.classes[r.cq].name << ' ' << dq.classes[r.dq].name << ' '
           << ms.classes[r.ms].name << ' ' << out.classes[r.out].name << '\n';
    }
}

const Rule& FuzzyRuleBase::lookup(std::size_t cq, std::size_t dq, std::size_t ms) const
{
    for (const auto& r : rules_) {
        if (r.cq == cq && r.dq == dq && r.ms == ms) return r;
    }
    throw config_error("no rule for the given classes");
}

bool operator==(const FuzzyRuleBase& a, const FuzzyRuleBase& b)
{
    return a.rules_ == b.rules_;
}

int update_staleness(int previous, bool associated_previous)
{
    return associated_previous ? 1 : previous + 1;
}

Normalized normalize(double value, double max_value)
{
    if (!(max_value > 0)) throw config_error("normalization maximum must be positive");
    if (value < 0) throw config_error("normalized input must be nonnegative");
    const double nv = value / max_value;
    if (nv > 1) return {1.0, true};
    return {nv, false};
}

Degrees fuzzify(double nv, const LinguisticVariable& variable)
{
    Degrees out(variable.size());
    for (std::size_t i = 0; i < variable.size(); ++i) out[i] = variable.classes[i].degree(nv);
    return out;
}

int Inference::strongest_rule() const
{
    const auto it = std::max_element(rule_degree.begin(), rule_degree.end());
    return static_cast<int>(it - rule_degree.begin()) + 1;
}

std::size_t Inference::dominant_class() const
{
    return static_cast<std::size_t>(
        std::max_element(activation.begin(), activation.end()) - activation.begin());
}

Inference infer(const Degrees& cq, const Degrees& dq, const Degrees& ms, const FuzzyRuleBase& rules)
{
    if (cq.size() != 3 || dq.size() != 3 || ms.size() != 3) {
        throw config_error("each input needs three class degrees");
    }
    Inference inf;
    inf.activation.assign(5, 0.0);
    inf.rule_degree.reserve(rules.rules().size());
    for (const auto& r : rules.rules()) {
        const double deg = std::min({cq[r.cq], dq[r.dq], ms[r.ms]});
        inf.rule_degree.push_back(deg);
        inf.activation[r.out] = std::max(inf.activation[r.out], deg);
    }
    return inf;
}

double defuzzify(const Degrees& activation, const LinguisticVariable& output,
                 std::size_t grid_points)
{
    if (activation.size() != output.size()) throw config_error("activation size mismatch");
    if (grid_points < 2) throw config_error("defuzzification grid needs at least 2 points");
    double num = 0;
    double den = 0;
    for (std::size_t i = 0; i < grid_points; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(grid_points - 1);
        double s = 0;
        for (std::size_t k = 0; k < activation.size(); ++k) {
            s = std::max(s, std::min(activation[k], output.classes[k].degree(x)));
        }
        num += x * s;
        den += s;
    }
    if (!(den > 0)) throw runtime_error("no rule fired");
    return num / den;
}

FuzzyEngine::FuzzyEngine()
    : FuzzyEngine(channel_quality(), data_quantity(), staleness(), output_level(),
                  FuzzyRuleBase::standard())
{
}

FuzzyEngine::FuzzyEngine(LinguisticVariable cq, LinguisticVariable dq, LinguisticVariable ms,
                         LinguisticVariable out, FuzzyRuleBase rules, std::size_t grid_points)
    : cq_(std::move(cq)),
      dq_(std::move(dq)),
      ms_(std::move(ms)),
      out_(std::move(out)),
      rules_(std::move(rules)),
      grid_points_(grid_points)
{
    for (const auto* v : {&cq_, &dq_, &ms_}) {
        if (v->size() != 3) throw config_error("input variable " + v->name + " needs 3 classes");
    }
    if (out_.size() != 5) throw config_error("output variable needs 5 classes");
    for (const auto* v : {&cq_, &dq_, &ms_, &out_}) {
        for (const auto& mf : v->classes) mf.validate();
    }
    if (grid_points_ < 2) throw config_error("defuzzification grid needs at least 2 points");
    out_grid_.reserve(grid_points_ * out_.size());
    for (std::size_t i = 0; i < grid_points_; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(grid_points_ - 1);
        for (const auto& mf : out_.classes) out_grid_.push_back(mf.degree(x));
    }
}

Inference FuzzyEngine::evaluate(double nv_cq, double nv_dq, double nv_ms) const
{
    return infer(fuzzify(nv_cq, cq_), fuzzify(nv_dq, dq_), fuzzify(nv_ms, ms_), rules_);
}

double FuzzyEngine::score(double nv_cq, double nv_dq, double nv_ms) const
{
    // same sum as defuzzify(), with the output memberships tabulated once
    const auto act = evaluate(nv_cq, nv_dq, nv_ms).activation;
    const std::size_t k = act.size();
    double num = 0;
    double den = 0;
    for (std::size_t i = 0; i < grid_points_; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(grid_points_ - 1);
        const double* row = &out_grid_[i * k];
        double s = 0;
        for (std::size_t c = 0; c < k; ++c) s = std::max(s, std::min(act[c], row[c]));
        num += x * s;
        den += s;
    }
    if (!(den > 0)) throw runtime_error("no rule fired");
    return num / den;
}

std::array<std::size_t, 3> FuzzyEngine::classify(double nv_cq, double nv_dq, double nv_ms) const
{
    auto argmax = [](const Degrees& d) {
        return static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin());
    };
    return {argmax(fuzzify(nv_cq, cq_)), argmax(fuzzify(nv_dq, dq_)), argmax(fuzzify(nv_ms, ms_))};
}

std::size_t Association::assigned() const
{
    return static_cast<std::size_t>(
        std::count_if(edge_of.begin(), edge_of.end(), [](int e) { return e >= 0; }));
}

Association associate(const AssociationProblem& problem)
{
    const auto n_clients = static_cast<std::size_t>(problem.score.rows());
    const auto n_edges = static_cast<std::size_t>(problem.score.cols());
    if (problem.capacity < 1) throw config_error("edge capacity must be at least 1");
    if (static_cast<std::size_t>(problem.distance.rows()) != n_clients ||
        static_cast<std::size_t>(problem.distance.cols()) != n_edges ||
        static_cast<std::size_t>(problem.covered.rows()) != n_clients ||
        static_cast<std::size_t>(problem.covered.cols()) != n_edges) {
        throw config_error("association matrices differ in shape");
    }
    auto at = [](const auto& mat, std::size_t n, std::size_t m) {
        return mat(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    };

    std::vector<std::vector<std::size_t>> ranking(n_edges);
    for (std::size_t m = 0; m < n_edges; ++m) {
        for (std::size_t n = 0; n < n_clients; ++n) {
            if (at(problem.covered, n, m)) ranking[m].push_back(n);
        }
        std::stable_sort(ranking[m].begin(), ranking[m].end(), [&](std::size_t x, std::size_t y) {
            return at(problem.score, x, m) > at(problem.score, y, m);
        });
    }

    Association result;
    result.edge_of.assign(n_clients, -1);
    result.members.assign(n_edges, {});
    std::vector<std::size_t> cursor(n_edges, 0);

    for (;;) {
        std::map<std::size_t, std::vector<std::size_t>> proposals;  // client -> edges
        for (std::size_t m = 0; m < n_edges; ++m) {
            auto free_slots = problem.capacity - result.members[m].size();
            while (free_slots > 0 && cursor[m] < ranking[m].size()) {
                const auto n = ranking[m][cursor[m]++];
                if (result.edge_of[n] >= 0) continue;
                proposals[n].push_back(m);
                --free_slots;
            }
        }
        if (proposals.empty()) break;
        for (const auto& [n, edges] : proposals) {
            std::size_t best = edges.front();
            for (auto m : edges) {
                if (at(problem.distance, n, m) < at(problem.distance, n, best)) best = m;
            }
            result.edge_of[n] = static_cast<int>(best);
            result.members[best].push_back(n);
        }
    }

    for (std::size_t m = 0; m < n_edges; ++m) {
        if (result.members[m].empty()) result.idle_edges.push_back(m);
    }
    return result;
}

}  // namespace nomahfl::fuzzy
