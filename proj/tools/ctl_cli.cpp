// Seeded experiment runner: ctl <subcommand> [options].
//
// Exit codes: 0 all checks pass, 1 a check failed, 2 bad flags, 3 budget overflow.

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "ctl/hardness.hpp"
#include "ctl/localtest.hpp"
#include "ctl/moments.hpp"
#include "ctl/tomography.hpp"

namespace {

using namespace ctl;
using nlohmann::json;

constexpr const char* kVersion = "ctl-0.1.0";
constexpr Index kDimBudget = 4096;

struct Check {
    std::string name;
    bool pass{false};
    double value{0.0};
    double std_error{0.0};
};

struct Report {
    std::string subcommand;
    json config = json::object();
    std::uint64_t seed{0};
    std::vector<Check> checks;
    json values = json::object();

    void check(std::string name, bool pass, double value, double se = 0.0) {
        checks.push_back({std::move(name), pass, value, se});
    }
    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

unsigned thread_count() {
    if (const char* env = std::getenv("CTL_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return static_cast<unsigned>(n);
    }
    return 1;
}

// Runs fn(i) for i < n on the worker pool; results are stored by index.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, Fn fn) {
    std::vector<T> out(n);
    const unsigned threads = std::min<unsigned>(thread_count(), static_cast<unsigned>(std::max<std::size_t>(n, 1)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex err_mutex;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    out[i] = fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!err) err = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
    return out;
}

void require_budget(Index total, const std::string& what) {
    if (total > kDimBudget)
        throw BudgetError(what + " dimension " + std::to_string(total) + " exceeds " + std::to_string(kDimBudget));
}

Index ipow(Index b, int e) {
    Index r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string number(double v) { return json(v).dump(); }

std::string render(const Report& rep, const std::string& format) {
    if (format == "csv") {
        std::ostringstream os;
        os << "kind,name,pass,value,std_error\r\n";
        os << "meta,version,," << csv_field(kVersion) << ",\r\n";
        os << "meta,subcommand,," << csv_field(rep.subcommand) << ",\r\n";
        os << "meta,seed,," << rep.seed << ",\r\n";
        os << "meta,config,," << csv_field(rep.config.dump()) << ",\r\n";
        for (const auto& c : rep.checks)
            os << "check," << csv_field(c.name) << ',' << (c.pass ? "true" : "false") << ',' << number(c.value) << ','
               << number(c.std_error) << "\r\n";
        for (const auto& [k, v] : rep.values.items()) os << "value," << csv_field(k) << ",," << csv_field(v.dump()) << ",\r\n";
        return os.str();
    }
    json j;
    j["version"] = kVersion;
    j["subcommand"] = rep.subcommand;
    j["config"] = rep.config;
    j["seed"] = rep.seed;
    j["checks"] = json::array();
    for (const auto& c : rep.checks)
        j["checks"].push_back({{"name", c.name}, {"pass", c.pass}, {"value", c.value}, {"std_error", c.std_error}});
    j["values"] = rep.values;
    j["all_pass"] = rep.all_pass();
    return j.dump(2) + "\n";
}

// ---- subcommands ----

struct Common {
    std::uint64_t seed{0};
    std::string out;
    std::string format{"json"};
};

Report run_verify(const Common& c) {
    Report rep;
    Rng rng(c.seed);
    {
        double worst = 0.0;
        bool cptp = true;
        for (int k = 0; k < 50; ++k) {
            const Index d1 = 1 + static_cast<Index>(k % 3);
            const Index d2 = 1 + static_cast<Index>((k / 3) % 3);
            const Index r = 1 + static_cast<Index>(k % 4);
            const Channel ch = random_channel(d1, d2, std::max<Index>(r, (d1 + d2 - 1) / d2), rng);
            const Channel back = kraus_to_choi(choi_to_kraus(ch));
            worst = std::max(worst, (back.choi() - ch.choi()).norm());
            const Channel dc = contract(dilate(ch, ch.kraus_rank()));
            worst = std::max(worst, (dc.choi() - ch.choi()).norm());
            cptp = cptp && is_psd(ch.choi());
        }
        rep.check("channels.round_trip", worst < 1e-9 && cptp, worst);
    }
    {
        std::size_t bad = 0;
        for (int k = 0; k < 10; ++k) {
            const Channel a = random_channel(2, 2, 2, rng);
            const Channel b = random_channel(2, 2, 2, rng);
            const DiamondEstimate e = diamond_distance(a, b, rng, {4, 300, 1e-8});
            if (choi_trace_distance(a, b) > e.lower + 1e-9 || e.lower > e.upper + 1e-9) ++bad;
        }
        rep.check("metrics.sandwich", bad == 0, static_cast<double>(bad));
    }
    {
        const Channel ch = random_channel(2, 3, 2, rng);
        const LabelledOperator x(ch.choi(), FactorLayout({{out(0), 3}, {in(0), 2}}));
        const Label order[] = {in(0), out(0)};
        rep.check("combs.channel_is_1comb", is_deterministic_comb(x, order), 1.0);
    }
    {
        const ComplexMatrix id = identity(3);
        const double v = fourth_moment_trace(id, id, id, id).real();
        rep.check("moments.identity_returns_d", std::abs(v - 3.0) < 1e-12, v);
    }
    {
        const LocalTestDims dims{2, 2, 2};
        const Tester t = random_parallel_tester({1, 2, 2, 2, 2}, rng);
        const auto bundle = make_local_test_bundle(t, dims);
        const auto r = verify_dilation_identity(bundle, random_channel(2, 2, 2, rng), 2000, rng);
        rep.check("localtest.identity_n1", r.ok(), r.max_exact_gap);
    }
    {
        const Regime regimes[] = {Regime::TypeI, Regime::TypeII_nearBoundary, Regime::TypeII_mid,
                                  Regime::TypeII_largeRank};
        const HardDims dims[] = {{6, 3, 2}, {5, 2, 3}, {4, 3, 2}, {2, 4, 3}};
        double worst = 0.0;
        for (int k = 0; k < 4; ++k) worst = std::max(worst, build_instance(regimes[k], dims[k], 0.1, rng).iso.defect());
        rep.check("hardness.isometries", worst < 1e-9, worst);
        const auto fam = generic_type2_family(2, 3, 1, 0.2, rng);
        const auto cert = certify_gamma_comb(fam, 1, 2);
        rep.check("hardness.gamma_certificate", cert.ok, cert.min_gap_eigenvalue);
    }
    {
        const ComplexMatrix v = random_isometry(2, 3, rng);
        const auto r = isometry_tomography(v, 0.2, rng, PureStateOracleConfig{0.0, 1.0});
        rep.check("tomography.noiseless", r.op_error < 1e-9, r.op_error);
    }
    return rep;
}

Report run_moments(const Common& c, const std::string& kind, const std::string& regime, const HardDims& dims,
                   double eps, std::size_t samples, const std::string& variant, Index d, int quadruples) {
    Report rep;
    Rng rng(c.seed);
    if (kind == "weingarten") {
        require_budget(d * d, "Weingarten");
        std::size_t bad = 0;
        double worst_z = 0.0;
        for (int q = 0; q < quadruples; ++q) {
            const ComplexMatrix a1 = complex_gaussian(d, d, rng);
            const ComplexMatrix b1 = complex_gaussian(d, d, rng);
            const ComplexMatrix a2 = complex_gaussian(d, d, rng);
            const ComplexMatrix b2 = complex_gaussian(d, d, rng);
            const Complex exact = fourth_moment_trace(a1, b1, a2, b2);
            const auto mc = fourth_moment_monte_carlo(a1, b1, a2, b2, samples, rng);
            const double z = std::abs(exact - mc.mean) / std::max(mc.std_error, 1e-12);
            worst_z = std::max(worst_z, z);
            if (z > 5.0) ++bad;
        }
        rep.check("weingarten.monte_carlo_5sigma", bad == 0, worst_z);
        return rep;
    }
    const Regime reg = regime_from_string(regime);
    require_budget(dims.d1 * dims.d2 * dims.r, "isometry");
    const MomentVariant var = variant == "diamond" ? MomentVariant::Diamond : MomentVariant::Choi;
    const auto m = moment_experiment(reg, dims, eps, samples, rng, var);
    rep.check("second_moment_lower_bound", m.second_ok, m.second_mean, m.second_se);
    rep.check("fourth_moment_upper_bound", m.fourth_ok, m.fourth_mean, m.fourth_se);
    rep.values["second_lower"] = m.bounds.second_lower;
    rep.values["fourth_upper"] = m.bounds.fourth_upper;
    rep.values["fourth_max"] = m.fourth_max;
    return rep;
}

Report run_localtest(const Common& c, int n, const LocalTestDims& dims, int testers, int channels,
                     std::size_t samples, int outcomes) {
    Report rep;
    require_budget(ipow(dims.d1 * dims.d2 * dims.r, n), "tester");
    Rng rng(c.seed);
    std::size_t failures = 0;
    double worst_gap = 0.0;
    double worst_z = 0.0;
    for (int t = 0; t < testers; ++t) {
        const Tester tester = random_parallel_tester({n, dims.d1, dims.d2, dims.r, outcomes}, rng);
        const auto bundle = make_local_test_bundle(tester, dims);
        for (int k = 0; k < channels; ++k) {
            const Index rank = std::max<Index>(1, std::min(dims.r, (dims.d1 + dims.d2 - 1) / dims.d2));
            const Index use = std::max(rank, static_cast<Index>(1 + (k % dims.r)));
            const Channel ch = random_channel(dims.d1, dims.d2, std::min(use, dims.r), rng);
            const auto r = verify_dilation_identity(bundle, ch, samples, rng);
            if (!r.ok()) ++failures;
            worst_gap = std::max(worst_gap, r.max_exact_gap);
            worst_z = std::max(worst_z, r.max_abs_z);
        }
    }
    rep.check("exact_identity", worst_gap <= kIdentityTol, worst_gap);
    rep.check("monte_carlo_5sigma", worst_z <= kZBand, worst_z);
    rep.values["failures"] = failures;
    return rep;
}

Report run_packing(const Common& c, const std::string& regime, const HardDims& dims, double eps, int count,
                   const std::string& metric) {
    Report rep;
    require_budget(dims.d1 * dims.d2 * dims.r, "isometry");
    const auto net = sample_packing_net(regime_from_string(regime), dims, eps, count, net_metric_from_string(metric), c.seed);
    rep.check("min_pairwise_positive", net.min_pairwise > 0.0, net.min_pairwise);
    rep.values["separation_ratio"] = net.separation_ratio();
    rep.values["net"] = json::parse(packing_net_to_json(net));
    return rep;
}

Report run_tomography(const Common& c, const std::string& mode, Index d1, Index d2, Index r, double eps,
                      std::size_t trials, double min_rate) {
    Report rep;
    const bool channel = mode == "channel";
    require_budget(channel ? r * d2 * d1 : d2 * d1, "isometry");
    struct Outcome {
        bool success{false};
        double op_error{0.0};
        double choi_error{0.0};
        std::uint64_t queries{0};
    };
    const auto outs = parallel_map<Outcome>(trials, [&](std::size_t i) {
        Rng rng(trial_seed(c.seed, i));
        TomographyReport t;
        if (channel) {
            const Channel ch = random_channel(d1, d2, r, rng);
            t = channel_tomography(ch, r, eps, rng);
        } else {
            t = isometry_tomography(random_isometry(d1, d2, rng), eps, rng);
        }
        return Outcome{t.success, t.op_error, t.choi_error, t.queries_charged};
    });
    std::size_t ok = 0;
    double mean = 0.0;
    for (const auto& o : outs) {
        ok += o.success ? 1 : 0;
        mean += o.op_error;
    }
    const double rate = trials ? static_cast<double>(ok) / static_cast<double>(trials) : 0.0;
    const double se = trials ? std::sqrt(rate * (1.0 - rate) / static_cast<double>(trials)) : 0.0;
    rep.check("success_rate", rate >= min_rate, rate, se);
    rep.values["mean_op_error"] = trials ? mean / static_cast<double>(trials) : 0.0;
    rep.values["queries_per_trial"] = outs.empty() ? 0 : outs.front().queries;
    rep.values["eps_max"] = eps_max_for(eps);
    return rep;
}

Report run_distances(const Common& c, Index d1, Index d2, Index rank, std::size_t pairs, int restarts) {
    Report rep;
    require_budget(d1 * d2, "Choi");
    struct Pair {
        double choi{0.0};
        double lower{0.0};
        double upper{0.0};
    };
    const auto vals = parallel_map<Pair>(pairs, [&](std::size_t i) {
        Rng rng(trial_seed(c.seed, i));
        const Channel a = random_channel(d1, d2, rank, rng);
        const Channel b = random_channel(d1, d2, rank, rng);
        const auto e = diamond_distance(a, b, rng, {restarts, 1000, 1e-8});
        return Pair{choi_trace_distance(a, b), e.lower, e.upper};
    });
    std::size_t bad = 0;
    double mean_gap = 0.0;
    for (const auto& p : vals) {
        if (p.choi > p.lower + 1e-9 || p.lower > p.upper + 1e-9) ++bad;
        mean_gap += p.lower - p.choi;
    }
    rep.check("sandwich_violations", bad == 0, static_cast<double>(bad));
    rep.values["mean_lower_minus_choi"] = pairs ? mean_gap / static_cast<double>(pairs) : 0.0;
    return rep;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical laboratory for quantum channel tomography"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", common.seed, "root seed")->required();
        sub->add_option("--out", common.out, "report path (stdout when omitted)");
        sub->add_option("--format", common.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
    };

    auto* verify = app.add_subcommand("verify", "run the invariant suite");
    add_common(verify);

    std::string kind = "hard", regime = "type1", variant = "choi", metric = "choi", mode = "isometry";
    HardDims dims{6, 3, 2};
    double eps = 0.05;
    std::size_t samples = 2000;
    Index wd = 2;
    int quadruples = 10;
    auto add_dims = [&](CLI::App* sub) {
        sub->add_option("--d1", dims.d1)->check(CLI::PositiveNumber);
        sub->add_option("--d2", dims.d2)->check(CLI::PositiveNumber);
        sub->add_option("--r", dims.r)->check(CLI::PositiveNumber);
    };

    auto* moments = app.add_subcommand("moments", "moment experiments");
    add_common(moments);
    add_dims(moments);
    moments->add_option("--kind", kind, "hard | weingarten")->check(CLI::IsMember({"hard", "weingarten"}));
    moments->add_option("--regime", regime);
    moments->add_option("--eps", eps);
    moments->add_option("--samples", samples)->check(CLI::Range(2, 10000000));
    moments->add_option("--variant", variant)->check(CLI::IsMember({"choi", "diamond"}));
    moments->add_option("--d", wd, "Weingarten dimension")->check(CLI::PositiveNumber);
    moments->add_option("--quadruples", quadruples)->check(CLI::PositiveNumber);

    int n = 1, testers = 2, channels = 2, outcomes = 3;
    auto* local = app.add_subcommand("localtest", "local-tester identity checks");
    add_common(local);
    add_dims(local);
    local->add_option("--n", n)->check(CLI::Range(1, 2));
    local->add_option("--testers", testers)->check(CLI::PositiveNumber);
    local->add_option("--channels", channels)->check(CLI::PositiveNumber);
    local->add_option("--samples", samples)->check(CLI::Range(2, 10000000));
    local->add_option("--outcomes", outcomes)->check(CLI::Range(1, 16));

    int count = 16;
    auto* packing = app.add_subcommand("packing-net", "sample a packing net");
    add_common(packing);
    add_dims(packing);
    packing->add_option("--regime", regime);
    packing->add_option("--eps", eps);
    packing->add_option("--count", count)->check(CLI::Range(2, 1 << 20));
    packing->add_option("--metric", metric)->check(CLI::IsMember({"choi", "diamond_lower"}));

    std::size_t trials = 100;
    double min_rate = 2.0 / 3.0;
    auto* tomo = app.add_subcommand("tomography", "tomography success-rate trials");
    add_common(tomo);
    add_dims(tomo);
    tomo->add_option("--mode", mode)->check(CLI::IsMember({"isometry", "channel"}));
    tomo->add_option("--eps", eps);
    tomo->add_option("--trials", trials);
    tomo->add_option("--min-rate", min_rate);

    std::size_t pairs = 20;
    Index rank = 2;
    int restarts = 16;
    auto* dist = app.add_subcommand("distances", "metric sandwich on random channel pairs");
    add_common(dist);
    add_dims(dist);
    dist->add_option("--rank", rank)->check(CLI::PositiveNumber);
    dist->add_option("--pairs", pairs);
    dist->add_option("--restarts", restarts)->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    Report rep;
    try {
        json cfg;
        if (verify->parsed()) {
            rep = run_verify(common);
            rep.subcommand = "verify";
        } else if (moments->parsed()) {
            cfg = {{"kind", kind}, {"regime", regime}, {"d1", dims.d1}, {"d2", dims.d2}, {"r", dims.r}, {"eps", eps},
                   {"samples", samples}, {"variant", variant}, {"d", wd}, {"quadruples", quadruples}};
            rep = run_moments(common, kind, regime, dims, eps, samples, variant, wd, quadruples);
            rep.subcommand = "moments";
        } else if (local->parsed()) {
            cfg = {{"n", n}, {"d1", dims.d1}, {"d2", dims.d2}, {"r", dims.r}, {"testers", testers},
                   {"channels", channels}, {"samples", samples}, {"outcomes", outcomes}};
            rep = run_localtest(common, n, {dims.d1, dims.d2, dims.r}, testers, channels, samples, outcomes);
            rep.subcommand = "localtest";
        } else if (packing->parsed()) {
            cfg = {{"regime", regime}, {"d1", dims.d1}, {"d2", dims.d2}, {"r", dims.r}, {"eps", eps},
                   {"count", count}, {"metric", metric}};
            rep = run_packing(common, regime, dims, eps, count, metric);
            rep.subcommand = "packing-net";
        } else if (tomo->parsed()) {
            cfg = {{"mode", mode}, {"d1", dims.d1}, {"d2", dims.d2}, {"r", dims.r}, {"eps", eps},
                   {"trials", trials}, {"min_rate", min_rate}};
            rep = run_tomography(common, mode, dims.d1, dims.d2, dims.r, eps, trials, min_rate);
            rep.subcommand = "tomography";
        } else {
            cfg = {{"d1", dims.d1}, {"d2", dims.d2}, {"rank", rank}, {"pairs", pairs}, {"restarts", restarts}};
            rep = run_distances(common, dims.d1, dims.d2, rank, pairs, restarts);
            rep.subcommand = "distances";
        }
        cfg["seed"] = common.seed;
        cfg["format"] = common.format;
        rep.config = cfg;
        rep.seed = common.seed;
    } catch (const BudgetError& e) {
        std::cerr << "budget: " << e.what() << "\n";
        return 3;
    } catch (const ctl::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        std::cerr << app.help();
        return 2;
    }

    const std::string text = render(rep, common.format);
    if (common.out.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(common.out, std::ios::binary);
        if (!f) {
            std::cerr << "cannot write " << common.out << "\n";
            return 2;
        }
        f << text;
    }
    return rep.all_pass() ? 0 : 1;
}
