#include "experiments.hpp"

#include "phaselattice/closeness.hpp"
#include "phaselattice/histories.hpp"
#include "phaselattice/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

namespace phaselattice::cli {

namespace {

struct Report {
    json results = json::object();
    json assertions = json::array();
    bool pass = true;
    std::vector<std::pair<std::string, std::string>> files;

    void check(const std::string& name, bool ok, double value, double bound)
    {
        assertions.push_back(json{{"name", name}, {"value", value}, {"bound", bound}, {"pass", ok}});
        pass = pass && ok;
    }
};

std::vector<double> number_list(const json& sec, const std::string& key, const std::string& where)
{
    const auto it = sec.find(key);
    if (it == sec.end())
        throw ConfigError("missing '" + key + "' in " + where);
    if (!it->is_array() || it->empty())
        throw ConfigError("'" + key + "' in " + where + " must be a non-empty array");
    std::vector<double> out;
    for (const auto& v : *it) {
        if (!v.is_number())
            throw ConfigError("'" + key + "' in " + where + " must contain numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

double number_or(const json& sec, const std::string& key, double fallback, const std::string& where)
{
    const auto it = sec.find(key);
    if (it == sec.end())
        return fallback;
    if (!it->is_number())
        throw ConfigError("'" + key + "' in " + where + " must be a number");
    return it->get<double>();
}

bool flag_or(const json& sec, const std::string& key, bool fallback, const std::string& where)
{
    const auto it = sec.find(key);
    if (it == sec.end())
        return fallback;
    if (!it->is_boolean())
        throw ConfigError("'" + key + "' in " + where + " must be a boolean");
    return it->get<bool>();
}

void strictly_increasing(const std::vector<double>& v, const std::string& what)
{
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1]))
            throw ConfigError(what + " must be strictly increasing");
}

const GaussianState& need_state(const ExperimentConfig& c)
{
    if (!c.state)
        throw ConfigError("experiment '" + c.experiment + "' needs an analytic 'state'");
    return *c.state;
}

const GridSpec& need_grid(const ExperimentConfig& c)
{
    if (!c.grid)
        throw ConfigError("experiment '" + c.experiment + "' needs a 'grid'");
    return *c.grid;
}

std::string fmt(double v)
{
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
}

void run_states(const ExperimentConfig& c, Report& r)
{
    const LatticeParams& p = c.lattice;
    const int d = p.block_size();
    const int n = p.n_min;
    std::vector<CoeffState> states;
    for (int K = 1; K <= p.N; ++K) {
        const int per = d >> K;
        for (int m = 0; m < per; ++m)
            states.push_back(build_state(p, StateKind::psi, K, n, p.first_block * per + m));
    }
    states.push_back(build_state(p, StateKind::chi, p.N, n, p.first_block));

    double gram = 0.0;
    std::ostringstream csv;
    csv << "kind,K,n,m,norm\n";
    for (std::size_t i = 0; i < states.size(); ++i) {
        for (std::size_t j = 0; j < states.size(); ++j) {
            const cplx g = inner_product(p, states[i], states[j], InnerMethod::coefficient);
            gram = std::max(gram, std::abs(g - (i == j ? 1.0 : 0.0)));
        }
        const auto& l = states[i].label;
        csv << to_string(l.kind) << ',' << l.K << ',' << l.n << ',' << l.m << ',' << fmt(std::sqrt(states[i].norm2()))
            << '\n';
    }
    const CompletenessResidual cr = completeness_decomposition(p);
    r.results["states"] = states.size();
    r.results["gram_defect"] = gram;
    r.results["residual_with_chi"] = cr.residual_with_chi;
    r.results["defect_trace"] = cr.defect_trace;
    r.results["defect_rank"] = cr.defect_rank;
    r.results["defect_idempotency"] = cr.defect_idempotency;
    r.results["defect_vs_chi"] = cr.defect_vs_chi;
    r.check("orthonormality", gram < c.tol("orthonormality"), gram, c.tol("orthonormality"));
    r.check("completeness_with_chi", cr.residual_with_chi < c.tol("completeness_residual"), cr.residual_with_chi,
            c.tol("completeness_residual"));
    r.check("defect_rank_one", cr.defect_rank == 1 && std::abs(cr.defect_trace - 1.0) < c.tol("completeness_residual"),
            cr.defect_trace, 1.0);
    r.files.push_back({".csv", csv.str()});
}

void run_moments(const ExperimentConfig& c, Report& r)
{
    const LatticeParams& p = c.lattice;
    const json& sec = c.section("moments");
    const double rel_tol = number_or(sec, "rel_tol", 1e-2, "moments");
    std::ostringstream csv;
    csv << "K,mean_x,mean_p_closed,mean_p_quadrature,var_p_closed,var_p_quadrature,var_x_closed,var_x_quadrature,"
           "tail_estimate\n";
    double worst_mean_x = 0.0;
    json rows = json::array();
    for (int K = 1; K <= p.N; ++K) {
        const MomentReport cf = fiducial_moments(p, K, Method::closed_form);
        const MomentReport q = fiducial_moments(p, K, Method::quadrature, rel_tol);
        worst_mean_x = std::max(worst_mean_x, std::abs(q.moments.mean_x));
        csv << K << ',' << fmt(q.moments.mean_x) << ',' << fmt(cf.moments.mean_p) << ',' << fmt(q.moments.mean_p) << ','
            << fmt(cf.moments.var_p) << ',' << fmt(q.moments.var_p) << ',' << fmt(cf.moments.var_x) << ','
            << fmt(q.moments.var_x) << ',' << fmt(q.tail_estimate) << '\n';
        rows.push_back(json{{"K", K},
                            {"mean_p_discrepancy", q.moments.mean_p - cf.moments.mean_p},
                            {"var_p_discrepancy", q.moments.var_p - cf.moments.var_p},
                            {"var_x_discrepancy", q.moments.var_x - cf.moments.var_x}});
        if (K == 1) {
            const double derived = p.a * p.a / 12.0 - p.a * p.a / (2.0 * pi * pi);
            const double rel = std::abs(q.moments.var_x - derived) / derived;
            r.results["var_x_k1"] = q.moments.var_x;
            r.results["var_x_k1_derived"] = derived;
            r.check("var_x_k1", rel < c.tol("var_x_k1"), rel, c.tol("var_x_k1"));
        }
    }
    r.results["discrepancies"] = rows;
    r.check("mean_x", worst_mean_x < c.tol("mean_x"), worst_mean_x, c.tol("mean_x"));
    r.files.push_back({".csv", csv.str()});
}

void run_projector(const ExperimentConfig& c, Report& r)
{
    const LatticeParams& p = c.lattice;
    const LatticeOperator E = build_projector(p);
    const double trace = E.trace().real();
    const double idem = E.idempotency_defect();
    const SpectralFamily fam = build_family(p, true);
    const BalianLowAudit audit = balian_low_audit(fam);
    const double expected = p.block_size() - 1.0;
    r.results["trace"] = trace;
    r.results["expected_trace"] = expected;
    r.results["idempotency_defect"] = idem;
    r.results["exclusivity_defect"] = audit.exclusivity_defect;
    r.results["defect_trace"] = audit.defect_trace;
    r.results["defect_vs_chi"] = audit.defect_vs_chi;
    r.check("trace", std::abs(trace - expected) < 1e-12, trace, expected);
    r.check("idempotency", idem < c.tol("idempotency"), idem, c.tol("idempotency"));
    r.check("exclusivity", audit.exclusivity_defect < c.tol("exclusivity"), audit.exclusivity_defect,
            c.tol("exclusivity"));
    std::ostringstream csv;
    csv << "quantity,value\n"
        << "trace," << fmt(trace) << "\nidempotency_defect," << fmt(idem) << "\nexclusivity_defect,"
        << fmt(audit.exclusivity_defect) << "\ndefect_trace," << fmt(audit.defect_trace) << "\ndefect_vs_chi,"
        << fmt(audit.defect_vs_chi) << '\n';
    r.files.push_back({".csv", csv.str()});
}

void run_pair(const ExperimentConfig& c, Report& r)
{
    const CommutingPair pair = build_commuting_pair(c.lattice);
    const double comm = commutator_norm(pair.X_op, pair.P_op);
    double spectral = 0.0;
    std::ostringstream csv;
    csv << "n,m,X,P,x_defect,p_defect\n";
    for (const auto& cell : pair.family.cells) {
        const double dx = (pair.X_op * cell.projector - cell.projector.scaled(cell.X)).max_abs();
        const double dp = (pair.P_op * cell.projector - cell.projector.scaled(cell.P)).max_abs() /
                          std::max(1.0, std::abs(cell.P));
        spectral = std::max({spectral, dx, dp});
        csv << cell.n << ',' << cell.m << ',' << fmt(cell.X) << ',' << fmt(cell.P) << ',' << fmt(dx) << ',' << fmt(dp)
            << '\n';
    }
    r.results["cells"] = pair.family.cells.size();
    r.results["commutator_norm"] = comm;
    r.results["spectral_defect"] = spectral;
    r.check("commutator", comm < c.tol("commutator"), comm, c.tol("commutator"));
    r.check("spectral", spectral < c.tol("spectral"), spectral, c.tol("spectral"));
    r.files.push_back({".csv", csv.str()});
}

double moment_error(const MomentVector& g, const MomentVector& e)
{
    const double sx = std::sqrt(e.var_x), sp = std::sqrt(e.var_p);
    return std::max({std::abs(g.mean_x - e.mean_x) / sx, std::abs(g.mean_p - e.mean_p) / sp,
                     std::abs(g.var_x - e.var_x) / e.var_x, std::abs(g.var_p - e.var_p) / e.var_p,
                     std::abs(g.cov_xp - e.cov_xp) / (sx * sp)});
}

void run_evolve(const ExperimentConfig& c, Report& r)
{
    const json& sec = c.section("evolution");
    const double hbar = c.lattice.hbar;
    bool ran = false;
    if (c.state || c.grid || sec.size() > 0) {
        const GaussianState& g = need_state(c);
        const GridSpec& grid = need_grid(c);
        EvolutionParams e;
        e.mass = number_or(sec, "mass", 1.0, "evolution");
        e.diffusion = number_or(sec, "diffusion", 0.0, "evolution");
        const std::vector<double> times = number_list(sec, "times", "evolution");
        strictly_increasing(times, "evolution times");
        if (times.front() <= 0.0)
            throw ConfigError("evolution times must be positive");
        e.validate();

        const WignerGrid W0 = sample_wigner(g, wigner_layout(grid, hbar));
        const MomentVector m0 = g.moments();
        std::ostringstream csv;
        csv << "t,mean_x,mean_p,var_x,var_p,cov_xp,mean_x_closed,mean_p_closed,var_x_closed,var_p_closed,"
               "cov_xp_closed,error\n";
        double worst = 0.0;
        for (double t : times) {
            e.time = t;
            const WignerMoments wm = wigner_moments(evolve_wigner(W0, e));
            const MomentVector cf = evolve_moments(m0, e);
            const double err = moment_error(wm.moments, cf);
            worst = std::max(worst, err);
            const MomentVector& m = wm.moments;
            csv << fmt(t) << ',' << fmt(m.mean_x) << ',' << fmt(m.mean_p) << ',' << fmt(m.var_x) << ',' << fmt(m.var_p)
                << ',' << fmt(m.cov_xp) << ',' << fmt(cf.mean_x) << ',' << fmt(cf.mean_p) << ',' << fmt(cf.var_x) << ','
                << fmt(cf.var_p) << ',' << fmt(cf.cov_xp) << ',' << fmt(err) << '\n';
        }
        r.results["moment_error"] = worst;
        r.check("moments", worst < c.tol("moments_rel"), worst, c.tol("moments_rel"));

        // Pure shear against the analytically transported Gaussian.
        EvolutionParams s = e;
        s.diffusion = 0.0;
        s.time = times.back();
        const WignerGrid sheared = evolve_wigner(W0, s);
        const MomentVector ms = evolve_moments(m0, s);
        GaussianState moved{ms.mean_x, ms.mean_p, ms.var_x, ms.var_p, ms.cov_xp};
        const WignerGrid exact = sample_wigner(moved, W0);
        double diff = 0.0, peak = 0.0;
        for (std::size_t i = 0; i < exact.values.size(); ++i) {
            diff = std::max(diff, std::abs(sheared.values[i] - exact.values[i]));
            peak = std::max(peak, std::abs(exact.values[i]));
        }
        r.results["shear_defect"] = diff / peak;
        r.check("shear", diff / peak < c.tol("shear"), diff / peak, c.tol("shear"));
        r.files.push_back({".csv", csv.str()});
        ran = true;
    }
    if (c.sections.contains("spreading")) {
        const json& sp = c.section("spreading");
        SpreadingInputs in;
        in.mass = number_or(sp, "mass", 0.0, "spreading");
        in.gamma = number_or(sp, "gamma", 0.0, "spreading");
        in.temperature = number_or(sp, "temperature", 0.0, "spreading");
        in.omega = number_or(sp, "omega", 0.0, "spreading");
        in.time = number_or(sp, "time", 0.0, "spreading");
        in.dx_precision = number_or(sp, "dx_precision", 0.0, "spreading");
        in.dv_precision = number_or(sp, "dv_precision", 0.0, "spreading");
        const SpreadingReport rep = spreading_estimates(in);
        json j{{"spreading_ratio", rep.spreading_ratio},
               {"decoherence_time", std::isfinite(rep.decoherence_time) ? json(rep.decoherence_time) : json("inf")},
               {"thermal_ratio", rep.thermal_ratio},
               {"imprecision_cells", rep.imprecision_cells}};
        r.results["spreading"] = j;
        if (sp.contains("expected_cells")) {
            const double want = number_or(sp, "expected_cells", 1.0, "spreading");
            const double ratio = rep.imprecision_cells / want;
            r.check("imprecision_cells", ratio >= 0.5 && ratio <= 2.0, rep.imprecision_cells, want);
        }
        ran = true;
    }
    if (!ran)
        throw ConfigError("evolve needs an 'evolution' or 'spreading' section");
}

void run_closeness(const ExperimentConfig& c, Report& r)
{
    const LatticeParams& p = c.lattice;
    if (!c.state_file.empty()) {
        const WignerGrid W = read_wigner_csv(c.state_file);
        const double s = completeness_sum(W, p);
        const double expected = 1.0 - std::ldexp(1.0, -p.N);
        r.results["completeness_sum"] = s;
        r.results["expected_completeness"] = expected;
        r.check("completeness", std::abs(s - expected) <= c.tol("completeness"), s, expected);
        std::ostringstream csv;
        csv << "N,completeness_sum,expected_completeness\n" << p.N << ',' << fmt(s) << ',' << fmt(expected) << '\n';
        r.files.push_back({".csv", csv.str()});
        return;
    }
    const GaussianState& g = need_state(c);
    const json& sec = c.section("closeness");
    const CompletenessResult cr = completeness_sum(g, p);
    r.results["completeness_sum"] = cr.value;
    r.results["expected_completeness"] = cr.expected;
    r.results["spill"] = cr.spill;
    r.results["breadth"] = cr.breadth;
    r.results["slow_variation"] = cr.slow_variation;
    if (!cr.flag.empty())
        r.results["flag"] = cr.flag;
    r.check("completeness", std::abs(cr.value - cr.expected) <= c.tol("completeness"), cr.value, cr.expected);
    if (flag_or(sec, "norms", true, "closeness")) {
        const ClosenessReport n = distance_norms(g, p);
        r.results["norms"] = json::parse(closeness_json(n));
        if (flag_or(sec, "assert_product", false, "closeness")) {
            const double rel = std::abs(n.product_over_hbar / n.C_predicted - 1.0);
            r.check("closeness_product", rel <= c.tol("closeness_rel"), n.product_over_hbar, n.C_predicted);
        }
        r.files.push_back({".csv", closeness_csv_header() + "\n" + closeness_csv_row("gaussian", n) + "\n"});
    }
}

int aligned(double v, double step, const std::string& what)
{
    const double k = v / step;
    if (std::abs(k - std::round(k)) > 1e-9 * std::max(1.0, std::abs(k)))
        throw ConfigError(what + " endpoint " + fmt(v) + " is not on the lattice");
    return static_cast<int>(std::lround(k));
}

void run_probabilities(const ExperimentConfig& c, Report& r)
{
    const LatticeParams& p = c.lattice;
    const GaussianState& g = need_state(c);
    const json& sec = c.section("probabilities");
    const std::vector<double> xs = number_list(sec, "x", "probabilities");
    const std::vector<double> ps = number_list(sec, "p", "probabilities");
    if (xs.size() != 2 || ps.size() != 2 || !(xs[1] > xs[0]) || !(ps[1] > ps[0]))
        throw ConfigError("probabilities intervals must be [lo, hi] with lo < hi");
    const double step = p.block_size() * p.b();
    const int n1 = aligned(xs[0], p.a, "x interval"), n2 = aligned(xs[1], p.a, "x interval");
    const int b1 = aligned(ps[0], step, "p interval"), b2 = aligned(ps[1], step, "p interval");
    ProbabilityThresholds th;
    th.tolerance = c.tol("probability");
    th.min_sigma_cells = number_or(sec, "min_sigma_cells", th.min_sigma_cells, "probabilities");
    th.min_interval_ratio = number_or(sec, "min_interval_ratio", th.min_interval_ratio, "probabilities");
    const ProbabilityReport pr = probability_intervals(g, n1, n2, b1, b2, p, th);
    const bool conditions = pr.cond_i && pr.cond_ii && pr.cond_iii;
    r.results["p_X"] = pr.p_X;
    r.results["ref_X"] = pr.ref_X;
    r.results["err_X"] = pr.err_X;
    r.results["p_P"] = pr.p_P;
    r.results["ref_P"] = pr.ref_P;
    r.results["err_P"] = pr.err_P;
    r.results["condition_i"] = pr.cond_i;
    r.results["condition_ii"] = pr.cond_ii;
    r.results["condition_iii"] = pr.cond_iii;
    if (conditions) {
        r.check("agreement_X", pr.err_X <= th.tolerance, pr.err_X, th.tolerance);
        r.check("agreement_P", pr.err_P <= th.tolerance, pr.err_P, th.tolerance);
    }
    std::ostringstream csv;
    csv << "p_X,ref_X,err_X,p_P,ref_P,err_P,cond_i,cond_ii,cond_iii\n"
        << fmt(pr.p_X) << ',' << fmt(pr.ref_X) << ',' << fmt(pr.err_X) << ',' << fmt(pr.p_P) << ',' << fmt(pr.ref_P)
        << ',' << fmt(pr.err_P) << ',' << pr.cond_i << ',' << pr.cond_ii << ',' << pr.cond_iii << '\n';
    r.files.push_back({".csv", csv.str()});
}

std::vector<std::vector<double>> edge_lists(const json& sec, std::size_t times)
{
    const auto it = sec.find("edges");
    if (it == sec.end() || !it->is_array() || it->size() != times)
        throw ConfigError("histories 'edges' must hold one list per time");
    std::vector<std::vector<double>> out;
    for (const auto& l : *it) {
        if (!l.is_array())
            throw ConfigError("histories edges must be arrays");
        std::vector<double> e;
        for (const auto& v : l) {
            if (!v.is_number())
                throw ConfigError("histories edges must be numbers");
            e.push_back(v.get<double>());
        }
        strictly_increasing(e, "histories edges");
        out.push_back(std::move(e));
    }
    return out;
}

void run_histories(const ExperimentConfig& c, Report& r)
{
    const json& sec = c.section("histories");
    const auto mode_it = sec.find("mode");
    if (mode_it == sec.end() || !mode_it->is_string())
        throw ConfigError("histories needs a 'mode' of commuting or position");
    const std::string mode = mode_it->get<std::string>();
    const std::vector<double> times = number_list(sec, "times", "histories");
    strictly_increasing(times, "histories times");
    if (times.front() < 0.0)
        throw ConfigError("histories times must be nonnegative");
    const auto edges = edge_lists(sec, times.size());
    const double mass = number_or(sec, "mass", 1.0, "histories");
    if (!(mass > 0.0))
        throw ConfigError("histories mass must be positive");

    if (mode == "commuting") {
        if (!c.resolved.contains("lattice"))
            throw ConfigError("commuting histories need a 'lattice'");
        const std::string flow = sec.value("flow", std::string("identity"));
        if (flow != "identity" && flow != "shear")
            throw ConfigError("histories flow must be identity or shear");
        const CommutingPair pair = build_commuting_pair(c.lattice);
        const LatticeParams& q = pair.family.params;
        std::mt19937_64 rng(c.seed);
        std::normal_distribution<double> gauss;
        CoeffState s;
        for (int n = q.n_min; n <= q.n_max; ++n)
            for (int m = q.m_lo(); m < q.m_hi(); ++m) {
                const double re = gauss(rng);
                const double im = gauss(rng);
                s.coeffs[{n, m}] = cplx(re, im);
            }
        const Eigen::MatrixXcd rho = lattice_density(q, s);
        const LabelFlow f = flow == "shear" ? shear_flow(mass) : identity_flow();
        const DecoherenceMatrix D = commuting_histories(rho, pair, flow_partition(pair.family, f, times, edges));
        r.results["summary"] = json::parse(decoherence_json(D));
        const double off = D.max_offdiagonal();
        const double sum_defect = std::abs(D.diagonal_sum() - 1.0);
        r.check("offdiagonal", off < c.tol("offdiagonal"), off, c.tol("offdiagonal"));
        r.check("sum_rule", sum_defect < c.tol("offdiagonal"), sum_defect, c.tol("offdiagonal"));
        r.check("additivity", D.additivity_defect() < c.tol("sum_rule"), D.additivity_defect(), c.tol("sum_rule"));
        r.files.push_back({".csv", decoherence_csv(D)});
    } else if (mode == "position") {
        const GridSpec& grid = need_grid(c);
        const json cat = sec.value("cat", json::object());
        const double q0 = number_or(cat, "q0", 4.0, "histories.cat");
        const double p0 = number_or(cat, "p0", 1.0, "histories.cat");
        const double sigma = number_or(cat, "sigma", 1.0, "histories.cat");
        const std::vector<double> diffusions = number_list(sec, "diffusions", "histories");
        strictly_increasing(diffusions, "histories diffusions");
        const double hbar = c.lattice.hbar;
        const Eigen::MatrixXcd rho = cat_density(grid, hbar, q0, p0, sigma);
        const DecayReport rep = approximate_position_histories(rho, grid, hbar, mass, times, edges, diffusions);
        json pts = json::array();
        std::ostringstream csv;
        csv << "diffusion,max_offdiagonal,max_offdiagonal_real,diagonal_sum_defect\n";
        for (const auto& pt : rep.points) {
            pts.push_back(json{{"diffusion", pt.diffusion},
                               {"max_offdiagonal", pt.max_offdiagonal},
                               {"max_offdiagonal_real", pt.max_offdiagonal_real},
                               {"diagonal_sum_defect", pt.diagonal_sum_defect}});
            csv << fmt(pt.diffusion) << ',' << fmt(pt.max_offdiagonal) << ',' << fmt(pt.max_offdiagonal_real) << ','
                << fmt(pt.diagonal_sum_defect) << '\n';
        }
        r.results["decay"] = pts;
        r.check("monotone_decrease", rep.monotone, rep.points.back().max_offdiagonal,
                rep.points.front().max_offdiagonal);
        r.files.push_back({".csv", csv.str()});
    } else {
        throw ConfigError("histories mode must be commuting or position");
    }
}

struct SweepRow {
    int N = 0;
    double breadth = 0.0;
    double sigma_x = 0.0, sigma_p = 0.0;
    double completeness = 0.0, deficit = 0.0, expected_deficit = 0.0;
    double retained_product = 0.0, C = 0.0;
    double err_X = 0.0, err_P = 0.0;
};

LatticeParams fitted_lattice(const LatticeParams& base, int N, const GaussianState& g)
{
    LatticeParams p = base;
    p.N = N;
    const double reach = 14.0;
    p.n_min = static_cast<int>(std::floor((g.q0 - reach * g.sigma_x()) / p.a)) - 1;
    p.n_max = static_cast<int>(std::ceil((g.q0 + reach * g.sigma_x()) / p.a)) + 1;
    const double step = p.block_size() * p.b();
    p.first_block = static_cast<int>(std::floor((g.p0 - reach * g.sigma_p()) / step)) - 1;
    p.m_blocks = static_cast<int>(std::ceil((g.p0 + reach * g.sigma_p()) / step)) + 2 - p.first_block;
    return p;
}

void run_sweep(const ExperimentConfig& c, Report& r)
{
    const json& sec = c.section("sweep");
    const std::vector<double> Ns = number_list(sec, "N", "sweep");
    const std::vector<double> breadths = number_list(sec, "breadth", "sweep");
    strictly_increasing(Ns, "sweep N");
    strictly_increasing(breadths, "sweep breadth");
    for (double n : Ns)
        if (n != std::round(n) || n < 1 || n > 12)
            throw ConfigError("sweep N values must be integers in [1, 12]");
    for (double b : breadths)
        if (!(b > 0.0))
            throw ConfigError("sweep breadths must be positive");
    const bool norms = flag_or(sec, "norms", true, "sweep");

    LatticeParams base;
    if (c.resolved.contains("lattice"))
        base = c.lattice;
    std::vector<SweepRow> rows(Ns.size() * breadths.size());
    parallel_for(rows.size(), [&](std::size_t k) {
        SweepRow& row = rows[k];
        row.N = static_cast<int>(Ns[k / breadths.size()]);
        row.breadth = breadths[k % breadths.size()];
        LatticeParams p0 = base;
        p0.N = row.N;
        const double s = std::sqrt(row.breadth * p0.block_size());
        row.sigma_x = s * p0.a;
        row.sigma_p = s * p0.b();
        const GaussianState g = GaussianState::broad(0.0, 0.0, row.sigma_x, row.sigma_p);
        const LatticeParams p = fitted_lattice(base, row.N, g);
        const CompletenessResult cr = completeness_sum(g, p);
        row.completeness = cr.value;
        row.deficit = 1.0 - cr.value;
        row.expected_deficit = 1.0 - cr.expected;
        if (norms) {
            const ClosenessReport n = distance_norms(g, p);
            row.retained_product = n.retained_product_over_hbar;
            row.C = n.C_predicted;
        }
        const double step = p.block_size() * p.b();
        const int nx = std::max(1, static_cast<int>(std::lround(row.sigma_x / p.a)));
        const int nb = std::max(1, static_cast<int>(std::lround(row.sigma_p / step)));
        const ProbabilityReport pr = probability_intervals(g, -nx, nx, -nb, nb, p);
        row.err_X = pr.err_X;
        row.err_P = pr.err_P;
    });

    std::ostringstream csv;
    csv << "N,breadth,sigma_x,sigma_p,completeness,deficit,expected_deficit,retained_product_over_hbar,C_predicted,"
           "prob_err_X,prob_err_P\n";
    double worst_deficit = 0.0;
    bool monotone = true;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const SweepRow& w = rows[k];
        csv << w.N << ',' << fmt(w.breadth) << ',' << fmt(w.sigma_x) << ',' << fmt(w.sigma_p) << ','
            << fmt(w.completeness) << ',' << fmt(w.deficit) << ',' << fmt(w.expected_deficit) << ','
            << fmt(w.retained_product) << ',' << fmt(w.C) << ',' << fmt(w.err_X) << ',' << fmt(w.err_P) << '\n';
        worst_deficit = std::max(worst_deficit, std::abs(w.deficit - w.expected_deficit));
        if (k % breadths.size() != 0) {
            const SweepRow& prev = rows[k - 1];
            const double e0 = std::abs(prev.deficit - prev.expected_deficit);
            const double e1 = std::abs(w.deficit - w.expected_deficit);
            if (e1 > std::max(e0, 1e-12))
                monotone = false;
        }
    }
    r.results["rows"] = rows.size();
    r.results["max_deficit_error"] = worst_deficit;
    r.check("deficit", worst_deficit <= c.tol("completeness"), worst_deficit, c.tol("completeness"));
    r.check("error_decreasing_in_breadth", monotone, monotone ? 1.0 : 0.0, 1.0);
    r.files.push_back({".csv", csv.str()});
}

}  // namespace

Outcome run_experiment(const ExperimentConfig& c)
{
    Report r;
    const std::string& e = c.experiment;
    if (e == "states")
        run_states(c, r);
    else if (e == "moments")
        run_moments(c, r);
    else if (e == "projector")
        run_projector(c, r);
    else if (e == "pair")
        run_pair(c, r);
    else if (e == "evolve")
        run_evolve(c, r);
    else if (e == "closeness")
        run_closeness(c, r);
    else if (e == "probabilities")
        run_probabilities(c, r);
    else if (e == "histories")
        run_histories(c, r);
    else if (e == "sweep")
        run_sweep(c, r);
    else
        throw ConfigError("unknown experiment '" + e + "'");

    Outcome out;
    out.summary["experiment"] = e;
    out.summary["version"] = PHASELATTICE_VERSION;
    out.summary["seed"] = c.seed;
    out.summary["config"] = c.resolved;
    out.summary["results"] = r.results;
    out.summary["assertions"] = r.assertions;
    out.summary["pass"] = r.pass;
    out.files = std::move(r.files);
    out.pass = r.pass;
    return out;
}

}  // namespace phaselattice::cli
