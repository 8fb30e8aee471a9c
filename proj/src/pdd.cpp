#include <nomahfl/pdd.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace nomahfl::pdd {

namespace {

double clip01(double x)
{
    return std::clamp(x, 0.0, 1.0);
}

void check_sizes(std::size_t m, std::initializer_list<std::size_t> sizes)
{
    for (auto s : sizes) {
        if (s != m) throw config_error("scheduling vectors differ in length");
    }
}

}  // namespace

void SchedulingInstance::validate() const
{
    const auto m = num_edges();
    if (m == 0) throw config_error("scheduling instance has no edges");
    check_sizes(m, {cloud_time.size(), client_times.size()});
    weights.validate();
    if (tau2 < 1) throw config_error("tau_2 must be at least 1");
    for (std::size_t i = 0; i < m; ++i) {
        if (!(edge_energy[i] >= 0) || !(cloud_time[i] >= 0)) {
            throw config_error("edge costs must be nonnegative");
        }
        for (double t : client_times[i]) {
            if (!(t >= 0)) throw config_error("client times must be nonnegative");
        }
    }
}

double SchedulingInstance::max_client_time() const
{
    double u = 0;
    for (const auto& edge : client_times) {
        for (double t : edge) u = std::max(u, t);
    }
    return u;
}

std::vector<double> SchedulingInstance::edge_time_terms(double u) const
{
    std::vector<double> c(num_edges());
    for (std::size_t m = 0; m < c.size(); ++m) c[m] = cloud_time[m] + tau2 * u;
    return c;
}

double SchedulingInstance::objective(std::span<const double> z) const
{
    const auto c = edge_time_terms(max_client_time());
    double w = 0;
    double e = 0;
    for (std::size_t m = 0; m < num_edges(); ++m) {
        w = std::max(w, z[m] * c[m]);
        e += z[m] * edge_energy[m];
    }
    return weights.time * w + weights.energy * e;
}

double SchedulingInstance::objective(std::span<const int> z) const
{
    std::vector<double> zd(z.begin(), z.end());
    return objective(std::span<const double>(zd));
}

std::vector<double> singleton_costs(const SchedulingInstance& inst)
{
    const auto c = inst.edge_time_terms(inst.max_client_time());
    std::vector<double> out(inst.num_edges());
    for (std::size_t m = 0; m < out.size(); ++m) {
        out[m] = inst.weights.time * c[m] + inst.weights.energy * inst.edge_energy[m];
    }
    return out;
}

double ScheduleSolution::residual() const
{
    double r = 0;
    for (std::size_t m = 0; m < z.size(); ++m) {
        r = std::max({r, std::abs(z[m] - z_tilde[m]), std::abs(z[m] * (1 - z_tilde[m]))});
    }
    return r;
}

std::vector<double> update_z_tilde(std::span<const double> z, std::span<const double> q,
                                   std::span<const double> q_tilde, double v)
{
    if (!(v > 0)) throw config_error("penalty must be positive");
    check_sizes(z.size(), {q.size(), q_tilde.size()});
    std::vector<double> out(z.size());
    for (std::size_t m = 0; m < z.size(); ++m) {
        const double zm = z[m];
        out[m] = clip01((zm * zm + q[m] * zm * v + zm + q_tilde[m] * v) / (zm * zm + 1));
    }
    return out;
}

std::vector<double> update_z(const SchedulingInstance& inst, std::span<const double> z_tilde,
                             std::span<const double> q, std::span<const double> q_tilde,
                             double v, std::span<const double> gamma, double u)
{
    if (!(v > 0)) throw config_error("penalty must be positive");
    const auto m_count = inst.num_edges();
    check_sizes(m_count, {z_tilde.size(), q.size(), q_tilde.size(), gamma.size()});
    const auto c = inst.edge_time_terms(u);
    std::vector<double> out(m_count);
    for (std::size_t m = 0; m < m_count; ++m) {
        if (gamma[m] < 0) throw config_error("multiplier must be nonnegative");
        const double one_minus = 1 - z_tilde[m];
        const double i_m = z_tilde[m] / v - q_tilde[m] - q[m] * one_minus -
                           inst.weights.energy * inst.edge_energy[m] - gamma[m] * c[m];
        out[m] = clip01(i_m * v / (1 + one_minus * one_minus));
    }
    return out;
}

Epigraph update_u_w(const SchedulingInstance& inst, std::span<const double> z)
{
    check_sizes(inst.num_edges(), {z.size()});
    Epigraph e;
    e.u = inst.max_client_time();
    const auto c = inst.edge_time_terms(e.u);
    for (std::size_t m = 0; m < z.size(); ++m) e.w = std::max(e.w, z[m] * c[m]);
    return e;
}

Duals update_duals(std::span<const double> z, std::span<const double> z_tilde,
                   std::span<const double> q, std::span<const double> q_tilde, double v)
{
    if (!(v > 0)) throw config_error("penalty must be positive");
    check_sizes(z.size(), {z_tilde.size(), q.size(), q_tilde.size()});
    Duals d{std::vector<double>(z.size()), std::vector<double>(z.size())};
    for (std::size_t m = 0; m < z.size(); ++m) {
        d.q[m] = q[m] + z[m] * (1 - z_tilde[m]) / v;
        d.q_tilde[m] = q_tilde[m] + (z[m] - z_tilde[m]) / v;
    }
    return d;
}

std::vector<double> update_gamma(std::span<const double> gamma, std::span<const double> z,
                                 std::span<const double> edge_time, double w, double step)
{
    if (!(step > 0)) throw config_error("multiplier step must be positive");
    check_sizes(gamma.size(), {z.size(), edge_time.size()});
    std::vector<double> out(gamma.size());
    for (std::size_t m = 0; m < gamma.size(); ++m) {
        out[m] = std::max(0.0, gamma[m] + step * (z[m] * edge_time[m] - w));
    }
    return out;
}

/*
 * With W eliminated the z-subproblem is
 *
 *   min_W  lambda_t W + sum_m g_m(min(t_m, W / c_m)),
 *   g_m(z) = (a_m / 2) (z - z0_m)^2,  a_m = (1 + (1 - z~_m)^2) / v,
 *
 * where z0_m is the closed form with gamma = 0 and t_m = clip(z0_m). The
 * derivative in W is piecewise linear and nondecreasing with kinks at
 * c_m t_m, so the minimizer is found by sweeping the kinks downwards.
 * Active edges (W / c_m < t_m) get gamma_m = a_m (z0_m - W / c_m) / c_m,
 * which makes the closed form return exactly W / c_m.
 */
ZBlock solve_z_block(const SchedulingInstance& inst, std::span<const double> z_tilde,
                     std::span<const double> q, std::span<const double> q_tilde, double v,
                     double u)
{
    const auto m_count = inst.num_edges();
    const auto c = inst.edge_time_terms(u);
    const double lambda_t = inst.weights.time;
    const std::vector<double> no_gamma(m_count, 0.0);

    std::vector<double> a(m_count), z0(m_count), target(m_count);
    for (std::size_t m = 0; m < m_count; ++m) {
        const double one_minus = 1 - z_tilde[m];
        a[m] = (1 + one_minus * one_minus) / v;
        const double i_m = z_tilde[m] / v - q_tilde[m] - q[m] * one_minus -
                           inst.weights.energy * inst.edge_energy[m];
        z0[m] = i_m / a[m];
        target[m] = clip01(z0[m]);
    }

    ZBlock out;
    out.gamma.assign(m_count, 0.0);
    std::vector<std::size_t> timed;  // edges whose schedule costs time
    for (std::size_t m = 0; m < m_count; ++m) {
        if (c[m] > 0 && target[m] > 0) timed.push_back(m);
    }

    double w_star = 0;
    if (lambda_t > 0 && !timed.empty()) {
        std::sort(timed.begin(), timed.end(), [&](std::size_t x, std::size_t y) {
            return c[x] * target[x] > c[y] * target[y];
        });
        double s1 = 0;
        double s2 = 0;
        bool found = false;
        for (std::size_t k = 0; k < timed.size(); ++k) {
            const auto m = timed[k];
            const double upper = c[m] * target[m];
            const double lower = k + 1 < timed.size() ? c[timed[k + 1]] * target[timed[k + 1]] : 0.0;
            s1 += a[m] * z0[m] / c[m];
            s2 += a[m] / (c[m] * c[m]);
            if (lambda_t - s1 + upper * s2 <= 0) {
                w_star = upper;
                found = true;
                break;
            }
            const double root = (s1 - lambda_t) / s2;
            if (root >= lower) {
                w_star = root;
                found = true;
                break;
            }
        }
        if (!found) w_star = 0;
        for (std::size_t m = 0; m < m_count; ++m) {
            if (c[m] > 0 && w_star / c[m] < target[m]) {
                out.gamma[m] = std::max(0.0, a[m] * (z0[m] - w_star / c[m]) / c[m]);
            }
        }
    }

    out.z = update_z(inst, z_tilde, q, q_tilde, v, out.gamma, u);
    // the closed form reproduces W / c_m up to rounding; pin the active ones
    for (std::size_t m = 0; m < m_count; ++m) {
        if (out.gamma[m] > 0) out.z[m] = clip01(w_star / c[m]);
        out.w = std::max(out.w, out.z[m] * c[m]);
    }
    return out;
}

double augmented_lagrangian(const SchedulingInstance& inst, std::span<const double> z,
                            std::span<const double> z_tilde, std::span<const double> q,
                            std::span<const double> q_tilde, double v, double w)
{
    double energy = 0;
    double pen_bin = 0;
    double pen_eq = 0;
    for (std::size_t m = 0; m < z.size(); ++m) {
        energy += z[m] * inst.edge_energy[m];
        const double b = z[m] * (1 - z_tilde[m]) + v * q[m];
        const double e = z[m] - z_tilde[m] + v * q_tilde[m];
        pen_bin += b * b;
        pen_eq += e * e;
    }
    return inst.weights.time * w + inst.weights.energy * energy + (pen_bin + pen_eq) / (2 * v);
}

ScheduleSolution solve(const SchedulingInstance& inst, const PddParams& params)
{
    inst.validate();
    if (!(params.penalty0 > 0) || !(params.shrink > 0 && params.shrink < 1)) {
        throw config_error("penalty must be positive and shrink in (0, 1)");
    }
    if (params.max_outer < 1 || params.max_inner < 1) throw config_error("iteration caps must be positive");

    const auto m_count = inst.num_edges();
    ScheduleSolution s;
    s.z.assign(m_count, params.z_init);
    s.z_tilde.assign(m_count, params.z_init);
    s.q.assign(m_count, 0.0);
    s.q_tilde.assign(m_count, 0.0);
    s.gamma.assign(m_count, 0.0);
    s.penalty = params.penalty0;
    s.u = inst.max_client_time();
    const auto c = inst.edge_time_terms(s.u);
    s.w = update_u_w(inst, s.z).w;

    double eta = params.eta0;
    for (int l = 1; l <= params.max_outer; ++l) {
        double f_prev = augmented_lagrangian(inst, s.z, s.z_tilde, s.q, s.q_tilde, s.penalty, s.w);
        double f = f_prev;
        for (int k = 1; k <= params.max_inner; ++k) {
            s.z_tilde = update_z_tilde(s.z, s.q, s.q_tilde, s.penalty);
            if (params.gamma_rule == GammaRule::exact) {
                auto block = solve_z_block(inst, s.z_tilde, s.q, s.q_tilde, s.penalty, s.u);
                s.z = std::move(block.z);
                s.gamma = std::move(block.gamma);
            } else {
                s.z = update_z(inst, s.z_tilde, s.q, s.q_tilde, s.penalty, s.gamma, s.u);
                const double w = update_u_w(inst, s.z).w;
                s.gamma = update_gamma(s.gamma, s.z, c, w, params.gamma_step / std::sqrt(k));
            }
            const auto epi = update_u_w(inst, s.z);
            s.u = epi.u;
            s.w = epi.w;
            f = augmented_lagrangian(inst, s.z, s.z_tilde, s.q, s.q_tilde, s.penalty, s.w);

            TraceRow row{l, k, f, 0, 0, s.penalty};
            for (std::size_t m = 0; m < m_count; ++m) {
                row.residual_eq = std::max(row.residual_eq, std::abs(s.z[m] - s.z_tilde[m]));
                row.residual_bin = std::max(row.residual_bin, std::abs(s.z[m] * (1 - s.z_tilde[m])));
            }
            s.trace.push_back(row);
            if (!std::isfinite(f)) throw runtime_error("PDD objective is not finite");
            if (std::abs(f_prev - f) < params.epsilon) break;
            f_prev = f;
        }
        s.outer_objective.push_back(f);
        s.outer_iterations = l;

        const double h = s.residual();
        if (h < params.residual_tol) {
            s.converged = true;
            break;
        }
        if (h <= eta) {
            auto d = update_duals(s.z, s.z_tilde, s.q, s.q_tilde, s.penalty);
            s.q = std::move(d.q);
            s.q_tilde = std::move(d.q_tilde);
        } else {
            s.penalty *= params.shrink;
        }
        eta *= 0.5;
    }

    s.binary.assign(m_count, 0);
    bool any = false;
    for (std::size_t m = 0; m < m_count; ++m) {
        if (s.z[m] >= 0.5) {
            s.binary[m] = 1;
            any = true;
        }
    }
    if (!any) {
        const auto single = singleton_costs(inst);
        const auto best = std::min_element(single.begin(), single.end()) - single.begin();
        s.binary[static_cast<std::size_t>(best)] = 1;
        s.repaired = true;
    }
    s.binary_objective = inst.objective(std::span<const int>(s.binary));
    return s;
}

std::vector<int> enumerate_best(const SchedulingInstance& inst)
{
    const auto m_count = inst.num_edges();
    if (m_count == 0 || m_count > 20) throw config_error("enumeration supports 1..20 edges");
    std::vector<int> best;
    double best_value = std::numeric_limits<double>::infinity();
    std::vector<int> z(m_count);
    for (std::uint32_t mask = 1; mask < (1u << m_count); ++mask) {
        for (std::size_t m = 0; m < m_count; ++m) z[m] = (mask >> m) & 1u;
        const double value = inst.objective(std::span<const int>(z));
        if (value < best_value) {
            best_value = value;
            best = z;
        }
    }
    return best;
}

void write_trace_csv(std::ostream& os, const ScheduleSolution& sol)
{
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << "outer,inner,objective,residual_eq,residual_bin,penalty\n";
    os << std::setprecision(12);
    for (const auto& r : sol.trace) {
        os << r.outer << ',' << r.inner << ',' << r.objective << ',' << r.residual_eq << ','
           << r.residual_bin << ',' << r.penalty << '\n';
    }
    os.flags(flags);
    os.precision(prec);
}

namespace {

std::vector<double> parse_list(const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw config_error("not a number: '" + item + "'");
        }
    }
    return out;
}

}  // namespace

/*
 * [schedule]
 * tau2 = 3
 * edge_energy = 4.1, 5.0
 * cloud_time = 0.1, 0.1
 * [weights]
 * time = 0.5
 * energy = 0.5
 * [clients]
 * edge0 = 1.2, 0.9
 * edge1 = 2.0
 */
SchedulingInstance load_instance(const std::string& path)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(path, tree);
    } catch (const pt::ini_parser_error& e) {
        throw config_error(e.what());
    }
    SchedulingInstance inst;
    inst.tau2 = tree.get<int>("schedule.tau2", 1);
    inst.edge_energy = parse_list(tree.get<std::string>("schedule.edge_energy"));
    inst.cloud_time = parse_list(tree.get<std::string>("schedule.cloud_time"));
    inst.weights.time = tree.get<double>("weights.time", 0.5);
    inst.weights.energy = tree.get<double>("weights.energy", 1 - inst.weights.time);
    inst.client_times.resize(inst.edge_energy.size());
    for (std::size_t m = 0; m < inst.client_times.size(); ++m) {
        if (auto v = tree.get_optional<std::string>("clients.edge" + std::to_string(m))) {
            inst.client_times[m] = parse_list(*v);
        }
    }
    inst.validate();
    return inst;
}

}  // namespace nomahfl::pdd
