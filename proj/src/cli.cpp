#include "patlim/cli.hpp"

#include "patlim/circuits.hpp"
#include "patlim/combinat.hpp"
#include "patlim/limits.hpp"
#include "patlim/moments.hpp"
#include "patlim/montecarlo.hpp"

#include <CLI11.hpp>
#include <boost/crc.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

extern char** environ;

namespace patlim::cli {

using nlohmann::json;

const char* version() { return "patlim 0.1.0"; }

std::uint32_t crc32_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string data = ss.str();
    boost::crc_32_type crc;
    crc.process_bytes(data.data(), data.size());
    return crc.checksum();
}

namespace {

struct Context {
    std::vector<std::string> argv;
    std::string command;
    json config = json::object();
    json seeds = json::object();
    std::vector<std::string> outputs;
    std::string manifest_path;
    std::optional<std::string> manifest_override;
};

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

// Splits on commas at parenthesis depth zero.
std::vector<std::string> split_top(const std::string& s) {
    std::vector<std::string> parts;
    int depth = 0;
    std::string cur;
    for (char ch : s) {
        if (ch == '(') ++depth;
        if (ch == ')') --depth;
        if (ch == ',' && depth == 0) {
            parts.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty() || !parts.empty()) parts.push_back(trim(cur));
    return parts;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> v;
    for (const auto& part : split_top(s)) {
        if (part.empty()) continue;
        std::size_t pos = 0;
        int x = std::stoi(part, &pos);
        if (pos != part.size()) throw std::invalid_argument("not an integer: " + part);
        v.push_back(x);
    }
    return v;
}

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> v;
    for (const auto& part : split_top(s)) {
        if (part.empty()) continue;
        if (part.find('/') != std::string::npos) {
            v.push_back(to_double(parse_rational(part)));
            continue;
        }
        std::size_t pos = 0;
        double x = std::stod(part, &pos);
        if (pos != part.size()) throw std::invalid_argument("not a number: " + part);
        v.push_back(x);
    }
    return v;
}

LinkSpec parse_link(const std::string& text) {
    const std::string t = trim(text);
    if (!t.empty() && t[0] == '{') return LinkSpec::from_json(json::parse(t));
    auto open = t.find('(');
    if (open == std::string::npos) return LinkSpec::named(t);
    if (t.back() != ')') throw std::invalid_argument("malformed link: " + t);
    const std::string head = t.substr(0, open);
    auto args = split_top(t.substr(open + 1, t.size() - open - 2));
    auto need = [&](std::size_t n) {
        if (args.size() != n) throw std::invalid_argument("link " + head + " takes " + std::to_string(n) + " arguments");
    };
    if (head == "generalized_toeplitz" || head == "generalized_hankel") {
        need(2);
        auto a = std::stoll(args[0]), b = std::stoll(args[1]);
        return head == "generalized_toeplitz" ? LinkSpec::generalized_toeplitz(a, b) : LinkSpec::generalized_hankel(a, b);
    }
    if (head == "block") {
        need(3);
        return LinkSpec::block(parse_link(args[0]), parse_link(args[1]), std::stoi(args[2]));
    }
    if (head == "checkerboard") {
        need(2);
        return LinkSpec::checkerboard(parse_link(args[0]), std::stoi(args[1]));
    }
    throw std::invalid_argument("unknown link: " + t);
}

MaskSpec parse_mask(const std::string& text) {
    const std::string t = trim(text);
    if (!t.empty() && t[0] == '{') return MaskSpec::from_json(json::parse(t));
    return MaskSpec::named(t);
}

std::string num(double v) { return fmt::format("{:.17g}", v); }

void write_file(Context& ctx, const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::invalid_argument("cannot write output path: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    if (!out) throw std::invalid_argument("cannot write output path: " + path);
    ctx.outputs.push_back(path);
}

// Writes to the file when given, else to the stream.
void emit(Context& ctx, const std::string& path, const std::string& content, std::ostream& out) {
    if (path.empty()) out << content;
    else write_file(ctx, path, content);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json environment_overrides() {
    json env = json::object();
    for (char** e = environ; e && *e; ++e) {
        std::string kv = *e;
        if (kv.rfind("PATLIM_", 0) != 0) continue;
        auto eq = kv.find('=');
        env[kv.substr(0, eq)] = eq == std::string::npos ? "" : kv.substr(eq + 1);
    }
    return env;
}

std::string utc_now() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

struct Common {
    std::string out;
    std::string manifest;
    std::uint64_t seed = 1;
    std::uint64_t budget = 1000000000ULL;
    int threads = 1;
};

void add_common(CLI::App* c, Common& o, bool with_seed) {
    c->add_option("--out", o.out, "output path (stdout when omitted)");
    c->add_option("--manifest", o.manifest, "manifest path (default: <out>.manifest.json)");
    c->add_option("--budget-nodes", o.budget, "search budget in nodes")->envname("PATLIM_BUDGET_NODES");
    c->add_option("--threads", o.threads, "worker threads; computation is single-threaded")
        ->envname("PATLIM_THREADS")
        ->check(CLI::PositiveNumber);
    if (with_seed) c->add_option("--seed", o.seed, "random seed")->envname("PATLIM_SEED");
}

// ---- commands -------------------------------------------------------------

struct EnumerateArgs {
    Common c;
    int p = 0;
    int k = 1;
    std::string cls = "all";
};

void cmd_enumerate(Context& ctx, const EnumerateArgs& a, std::ostream& out) {
    if (a.p < 1 || a.k < 1) throw std::invalid_argument("--p and --k must be positive");
    std::vector<std::string> lines;
    if (a.cls == "all") {
        for_each_sentence(std::vector<int>(static_cast<std::size_t>(a.k), a.p), [&](const Sentence& s) { lines.push_back(s.str()); });
    } else if (a.cls == "p2" || a.cls == "p24") {
        if (a.k != 2) throw std::invalid_argument("class " + a.cls + " needs --k 2");
        for (const auto& s : a.cls == "p2" ? enumerate_P2(a.p, a.p) : enumerate_P24(a.p, a.p)) lines.push_back(s.str());
    } else if (a.cls == "sp") {
        for (const auto& s : enumerate_special_partitions(a.p, a.k)) lines.push_back(s.str());
    } else {
        throw std::invalid_argument("unknown class: " + a.cls);
    }
    std::string body;
    for (const auto& l : lines) body += l + "\n";
    ctx.config = {{"p", a.p}, {"k", a.k}, {"class", a.cls}};
    emit(ctx, a.c.out, body, out);
}

struct CountArgs {
    Common c;
    std::string link, mask = "full", sentence, variant = "exact";
    int N = 0;
    bool unmasked = false;
    bool all = false;
};

void cmd_count(Context& ctx, const CountArgs& a, std::ostream& out) {
    LinkSpec link = parse_link(a.link);
    MaskSpec mask = parse_mask(a.mask);
    Sentence w = Sentence::parse(a.sentence);
    if (!w.is_canonical()) throw std::invalid_argument("sentence is not canonical: " + w.str() + " (canonical form " + w.canonical().str() + ")");
    if (a.N < 1) throw std::invalid_argument("--N must be positive");
    CountOptions opts;
    opts.budget_nodes = a.c.budget;
    Variant v = parse_variant(a.variant);
    ctx.config = {{"link", link.to_json()}, {"mask", mask.to_json()}, {"sentence", w.str()}, {"N", a.N},
                  {"variant", a.variant}, {"masked", !a.unmasked}, {"budget_nodes", a.c.budget}};
    CircuitCountRecord r = a.all ? full_circuit_record(link, mask, w, a.N, v, opts)
                                 : count_circuits(link, mask, w, a.N, v, !a.unmasked, opts);
    json j = {{"sentence", w.str()}, {"N", a.N}, {"variant", a.variant}, {"masked", a.all || !a.unmasked},
              {"value", r.value.str()}, {"normalized", r.normalized}};
    if (r.normalized_exact) j["normalized_exact"] = format_rational(*r.normalized_exact);
    if (r.raw_exact) j["raw_exact"] = r.raw_exact->str();
    if (r.raw_star) j["raw_star"] = r.raw_star->str();
    if (r.masked) j["masked_exact"] = r.masked->str();
    if (r.masked_star) j["masked_star"] = r.masked_star->str();
    emit(ctx, a.c.out, dump(j), out);
}

struct ThetaArgs {
    Common c;
    std::string link, mask = "full", classes = "p2,p24", method = "both", variant = "exact", grid;
    int p = 2;
    int log2_points = 14, shifts = 16;
};

void cmd_theta(Context& ctx, const ThetaArgs& a, std::ostream& out) {
    LinkSpec link = parse_link(a.link);
    MaskSpec mask = parse_mask(a.mask);
    Variant v = parse_variant(a.variant);
    if (a.method != "integral" && a.method != "extrapolation" && a.method != "both")
        throw std::invalid_argument("--method must be integral, extrapolation or both");
    std::vector<Sentence> ws;
    for (const auto& cls : split_top(a.classes)) {
        if (cls == "p2") for (auto& s : enumerate_P2(a.p, a.p)) ws.push_back(s);
        else if (cls == "p24") for (auto& s : enumerate_P24(a.p, a.p)) ws.push_back(s);
        else throw std::invalid_argument("unknown class: " + cls);
    }
    IntegrationSpec spec;
    spec.log2_points = a.log2_points;
    spec.shifts = a.shifts;
    spec.seed = a.c.seed;
    ThetaOptions topt;
    topt.integration = spec;
    topt.count.budget_nodes = a.c.budget;
    if (!a.grid.empty()) topt.N_grid = parse_int_list(a.grid);
    ctx.config = {{"link", link.to_json()}, {"mask", mask.to_json()}, {"p", a.p}, {"classes", a.classes},
                  {"method", a.method}, {"variant", a.variant}, {"grid", a.grid}, {"log2_points", a.log2_points},
                  {"shifts", a.shifts}};
    ctx.seeds["integration"] = a.c.seed;
    std::string body = "sentence,method,value,error,branches\n";
    for (const auto& w : ws) {
        if (a.method != "extrapolation") {
            auto kind = integral_kind_for(link);
            if (!kind) throw std::invalid_argument("no integral construction for link " + link.name());
            if (!mask.limit_region()) throw std::invalid_argument("mask has no limit region");
            ThetaEstimate e = theta_integral(w, *kind, *mask.limit_region(), spec, v);
            body += fmt::format("\"{}\",integral,{},{},{}\n", w.str(), num(e.value), num(e.error), e.branch_count);
        }
        if (a.method != "integral") {
            topt.method = v == Variant::exact ? ThetaMethod::extrapolation_exact : ThetaMethod::extrapolation_star;
            if (v == Variant::star) {
                ExtrapolationOptions eo;
                eo.variant = Variant::star;
                eo.count = topt.count;
                std::vector<int> grid = topt.N_grid.empty() ? std::vector<int>{32, 64, 128, 256} : topt.N_grid;
                ThetaEstimate e = theta_extrapolate(link, mask, w, grid, eo);
                body += fmt::format("\"{}\",extrapolation,{},{},\n", w.str(), num(e.value), num(e.error));
            } else {
                ThetaTerm t = theta_term(link, mask, w, topt);
                body += fmt::format("\"{}\",extrapolation,{},{},\n", w.str(), num(t.value), num(t.error));
            }
        }
    }
    emit(ctx, a.c.out, body, out);
}

struct VarianceArgs {
    Common c;
    std::string link, mask = "full", method = "auto", grid, moments;
    int p = 2;
    double kappa = 3.0;
    int k_max = 4;
};

void cmd_variance(Context& ctx, const VarianceArgs& a, std::ostream& out) {
    LinkSpec link = parse_link(a.link);
    MaskSpec mask = parse_mask(a.mask);
    ThetaOptions topt;
    topt.method = parse_theta_method(a.method);
    topt.integration.seed = a.c.seed;
    topt.count.budget_nodes = a.c.budget;
    if (!a.grid.empty()) topt.N_grid = parse_int_list(a.grid);
    ctx.config = {{"link", link.to_json()}, {"mask", mask.to_json()}, {"p", a.p}, {"kappa", a.kappa},
                  {"method", a.method}, {"grid", a.grid}, {"k_max", a.k_max}, {"moments", a.moments}};
    ctx.seeds["integration"] = a.c.seed;
    json j;
    if (a.p % 2 == 0) {
        MomentReport r = sigma_p_squared(link, mask, a.p, a.kappa, topt);
        j = r.to_json();
        json wick = json::object();
        for (const auto& [k, b] : wick_moments(r.sigma2, a.k_max)) wick[std::to_string(k)] = b;
        j["wick_moments"] = wick;
    } else {
        std::vector<double> m = a.moments.empty() ? standard_normal_moments(a.p * a.k_max) : parse_double_list(a.moments);
        MomentReport r = odd_moment_limits(link, mask, a.p, a.k_max, m, topt);
        j = r.to_json();
        j["note"] = "moments only; convergence in distribution is not asserted";
    }
    emit(ctx, a.c.out, dump(j), out);
}

struct WitnessArgs {
    Common c;
    std::string link, mask = "full", witness = "full_image", grid = "64,128,256";
    double floor = 0.05;
};

void cmd_check_gaussian(Context& ctx, const WitnessArgs& a, std::ostream& out) {
    LinkSpec link = parse_link(a.link);
    MaskSpec mask = parse_mask(a.mask);
    std::vector<int> grid = parse_int_list(a.grid);
    ctx.config = {{"link", link.to_json()}, {"mask", mask.to_json()}, {"witness", a.witness}, {"grid", grid}, {"floor", a.floor}};
    GaussianWitness g = verify_gaussian_conditions(link, mask, a.witness, grid, a.floor);
    json j = g.to_json();
    AssumptionBReport b = verify_assumption_B(link, grid);
    if (b.B) {
        j["B"] = *b.B;
        j["lower_bound_c1_c2p_over_B"] = json::object();
        for (int p : {2, 4, 6}) j["lower_bound_c1_c2p_over_B"][std::to_string(p)] = g.c1 * std::pow(g.c2, p) / *b.B;
    }
    emit(ctx, a.c.out, dump(j), out);
}

struct EnsembleArgs {
    Common c;
    std::string config_path, link = "symmetric_circulant", mask = "full", dist = "std_normal", method = "auto", grid = "0,0.25,0.5,0.75,1";
    int N = 512, p = 2, R = 4000;
    bool seed_given = false;
};

EnsembleConfig make_config(const EnsembleArgs& a, CLI::App* sub) {
    EnsembleConfig cfg;
    if (!a.config_path.empty()) {
        std::ifstream in(a.config_path);
        if (!in) throw std::invalid_argument("cannot read config " + a.config_path);
        json j = json::parse(in);
        cfg = EnsembleConfig::from_json(j);
    } else {
        cfg.link = parse_link(a.link);
        cfg.mask = parse_mask(a.mask);
        cfg.N = a.N;
        cfg.p = a.p;
        cfg.R = a.R;
        cfg.distribution = Distribution::named(a.dist);
        cfg.method = parse_trace_method(a.method);
        cfg.seed = a.c.seed;
    }
    if (!a.config_path.empty() && sub->count("--seed")) cfg.seed = a.c.seed;
    cfg.validate();
    return cfg;
}

json batch_summary(const std::vector<double>& v) {
    auto m = empirical_moments(v, {1, 2, 3, 4});
    json j;
    for (const auto& [k, e] : m) j["moments"][std::to_string(k)] = {{"value", e.value}, {"standard_error", e.standard_error}};
    auto sh = shape_moments(v);
    j["skewness"] = {{"value", sh.skewness}, {"standard_error", sh.skewness_se}};
    j["excess_kurtosis"] = {{"value", sh.excess_kurtosis}, {"standard_error", sh.excess_kurtosis_se}};
    if (m[2].value > 0) j["ks_distance_normal"] = ks_distance_normal(v, std::sqrt(m[2].value));
    return j;
}

void cmd_simulate(Context& ctx, const EnsembleArgs& a, CLI::App* sub, std::ostream& out) {
    EnsembleConfig cfg = make_config(a, sub);
    ctx.config = cfg.to_json();
    ctx.seeds["ensemble"] = cfg.seed;
    SampleBatch b = sample_eta(cfg);
    std::string body = "replicate,eta\n";
    for (std::size_t r = 0; r < b.values.size(); ++r) body += fmt::format("{},{}\n", r, num(b.values[r]));
    emit(ctx, a.c.out, body, out);
    if (!a.c.out.empty()) {
        json s = batch_summary(b.values);
        s["config"] = cfg.to_json();
        s["seed"] = cfg.seed;
        s["trace_mean"] = b.trace_mean;
        write_file(ctx, a.c.out + ".json", dump(s));
    }
}

void cmd_process(Context& ctx, const EnsembleArgs& a, CLI::App* sub, std::ostream& out) {
    EnsembleConfig cfg = make_config(a, sub);
    std::vector<double> grid = parse_double_list(a.grid);
    ctx.config = cfg.to_json();
    ctx.config["grid"] = grid;
    ctx.seeds["process"] = cfg.seed;
    ProcessBatch b = sample_process(cfg, grid);
    std::string body = "replicate,t,kappa\n";
    for (Eigen::Index r = 0; r < b.paths.rows(); ++r)
        for (std::size_t g = 0; g < grid.size(); ++g)
            body += fmt::format("{},{},{}\n", r, num(grid[g]), num(b.paths(r, static_cast<Eigen::Index>(g))));
    emit(ctx, a.c.out, body, out);
    if (!a.c.out.empty()) {
        json s;
        s["config"] = ctx.config;
        s["seed"] = cfg.seed;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            std::vector<double> col(b.paths.col(static_cast<Eigen::Index>(g)).data(),
                                    b.paths.col(static_cast<Eigen::Index>(g)).data() + b.paths.rows());
            double var = 0.0;
            for (double x : col) var += x * x;
            s["variance"][num(grid[g])] = var / (col.size() - 1.0);
        }
        write_file(ctx, a.c.out + ".json", dump(s));
    }
}

struct ReportArgs {
    Common c;
    std::string link = "symmetric_circulant", mask = "full", dist = "std_normal", method = "auto";
    int p = 2, N = 512, R = 4000;
};

void cmd_report(Context& ctx, const ReportArgs& a, std::ostream& out) {
    EnsembleConfig cfg;
    cfg.link = parse_link(a.link);
    cfg.mask = parse_mask(a.mask);
    cfg.N = a.N;
    cfg.p = a.p;
    cfg.R = a.R;
    cfg.seed = a.c.seed;
    cfg.distribution = Distribution::named(a.dist);
    cfg.validate();
    const double kappa = cfg.distribution.kappa();
    ThetaOptions topt;
    topt.method = parse_theta_method(a.method);
    topt.integration.seed = a.c.seed;
    topt.count.budget_nodes = a.c.budget;
    ctx.config = cfg.to_json();
    ctx.config["theta_method"] = a.method;
    ctx.seeds["ensemble"] = cfg.seed;
    ctx.seeds["integration"] = a.c.seed;
    json j;
    j["config"] = cfg.to_json();
    SampleBatch b = sample_eta(cfg);
    json mc = batch_summary(b.values);
    j["monte_carlo"] = mc;
    auto m = empirical_moments(b.values, {2, 3, 4});
    json verdicts;
    if (a.p % 2 == 0) {
        MomentReport r = sigma_p_squared(cfg.link, cfg.mask, a.p, kappa, topt);
        j["theory"] = r.to_json();
        auto wick = wick_moments(r.sigma2, 2);
        json wj = json::object();
        for (const auto& [k, v] : wick) wj[std::to_string(k)] = v;
        j["wick_moments"] = wj;
        auto sh = shape_moments(b.values);
        double ks = m[2].value > 0 ? ks_distance_normal(b.values, std::sqrt(r.sigma2 > 0 ? r.sigma2 : m[2].value)) : 1.0;
        verdicts["variance_within_3se"] = std::abs(m[2].value - r.sigma2) <= 3.0 * m[2].standard_error;
        verdicts["third_moment_within_4se"] = std::abs(m[3].value - wick[3]) <= 4.0 * m[3].standard_error;
        verdicts["fourth_moment_within_4se"] = std::abs(m[4].value - wick[4]) <= 4.0 * m[4].standard_error;
        verdicts["skewness_within_4se"] = std::abs(sh.skewness) <= 4.0 * sh.skewness_se;
        verdicts["excess_kurtosis_within_4se"] = std::abs(sh.excess_kurtosis) <= 4.0 * sh.excess_kurtosis_se;
        verdicts["ks_le_0.035"] = ks <= 0.035;
        j["ks_distance_to_limit"] = ks;
    } else {
        MomentReport r = odd_moment_limits(cfg.link, cfg.mask, a.p, 2, standard_normal_moments(2 * a.p), topt);
        j["theory"] = r.to_json();
        verdicts["second_moment_within_3se"] = std::abs(m[2].value - r.odd_moments[2]) <= 3.0 * m[2].standard_error;
    }
    bool all = true;
    for (auto& [k, v] : verdicts.items()) all = all && v.get<bool>();
    verdicts["all"] = all;
    j["verdicts"] = verdicts;
    emit(ctx, a.c.out, dump(j), out);
}

// ---- driver ---------------------------------------------------------------

void write_manifest(Context& ctx, double seconds, const std::string& started) {
    std::string path = ctx.manifest_override ? *ctx.manifest_override : ctx.manifest_path;
    if (path.empty() && !ctx.outputs.empty()) path = ctx.outputs.front() + ".manifest.json";
    if (path.empty()) return;
    json outs = json::array();
    for (const auto& o : ctx.outputs) {
        std::ifstream in(o, std::ios::binary | std::ios::ate);
        outs.push_back({{"path", o}, {"crc32", fmt::format("{:08x}", crc32_file(o))}, {"bytes", static_cast<long long>(in.tellg())}});
    }
    json m = {{"tool", "patlim"},
              {"version", version()},
              {"command", ctx.command},
              {"argv", ctx.argv},
              {"environment", environment_overrides()},
              {"config", ctx.config},
              {"seeds", ctx.seeds},
              {"started_utc", started},
              {"wall_clock_seconds", seconds},
              {"outputs", outs}};
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::invalid_argument("cannot write manifest: " + path);
    f << m.dump(2) << "\n";
}

int run_internal(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
                 std::optional<std::string> manifest_override);

int cmd_rerun(const std::string& manifest_path, std::ostream& out, std::ostream& err) {
    std::ifstream in(manifest_path);
    if (!in) throw std::invalid_argument("cannot read manifest " + manifest_path);
    json m = json::parse(in);
    std::vector<std::string> argv = m.at("argv").get<std::vector<std::string>>();
    std::map<std::string, std::string> expected;
    for (const auto& o : m.at("outputs")) expected[o.at("path").get<std::string>()] = o.at("crc32").get<std::string>();
    // Restore the recorded PATLIM_ environment exactly.
    std::vector<std::pair<std::string, std::optional<std::string>>> saved;
    json cur = environment_overrides();
    for (auto& [k, v] : cur.items()) {
        saved.emplace_back(k, v.get<std::string>());
        unsetenv(k.c_str());
    }
    for (auto& [k, v] : m.value("environment", json::object()).items()) {
        if (!cur.contains(k)) saved.emplace_back(k, std::nullopt);
        setenv(k.c_str(), v.get<std::string>().c_str(), 1);
    }
    std::ostringstream sink;
    int code = run_internal(argv, sink, err, manifest_path + ".rerun.json");
    for (auto& [k, v] : saved) {
        if (v) setenv(k.c_str(), v->c_str(), 1);
        else unsetenv(k.c_str());
    }
    if (code != kExitOk) return code;
    bool same = true;
    for (const auto& [path, crc] : expected) {
        std::string now = fmt::format("{:08x}", crc32_file(path));
        out << path << " " << crc << " " << now << " " << (now == crc ? "identical" : "DIFFERENT") << "\n";
        same = same && now == crc;
    }
    out << (same ? "rerun identical\n" : "rerun differs\n");
    return same ? kExitOk : kExitFailure;
}

int run_internal(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
                 std::optional<std::string> manifest_override) {
    CLI::App app{"Patterned random matrix toolkit: circuit counts, limit constants, Monte Carlo checks", "patlim"};
    app.set_version_flag("--version", version());
    app.require_subcommand(1);

    Context ctx;
    ctx.argv = args;
    ctx.manifest_override = std::move(manifest_override);

    EnumerateArgs ea;
    auto* se = app.add_subcommand("enumerate", "list canonical sentences");
    add_common(se, ea.c, false);
    se->add_option("--p", ea.p, "word length")->required();
    se->add_option("--k", ea.k, "number of words");
    se->add_option("--class", ea.cls, "all | p2 | p24 | sp");

    CountArgs ca;
    auto* sc = app.add_subcommand("count", "count circuits of a sentence");
    add_common(sc, ca.c, false);
    sc->add_option("--link", ca.link, "link function")->required();
    sc->add_option("--mask", ca.mask, "mask");
    sc->add_option("--sentence", ca.sentence, "canonical sentence, e.g. ab,ab")->required();
    sc->add_option("--N", ca.N, "matrix dimension")->required();
    sc->add_option("--variant", ca.variant, "exact | star");
    sc->add_flag("--unmasked", ca.unmasked, "ignore the mask");
    sc->add_flag("--all", ca.all, "report raw and masked counts of both variants");

    ThetaArgs ta;
    auto* st = app.add_subcommand("theta", "limit constants theta(W)");
    add_common(st, ta.c, true);
    st->add_option("--link", ta.link, "link function")->required();
    st->add_option("--mask", ta.mask, "mask");
    st->add_option("--p", ta.p, "word length");
    st->add_option("--class", ta.classes, "comma list of p2, p24");
    st->add_option("--method", ta.method, "integral | extrapolation | both");
    st->add_option("--variant", ta.variant, "exact | star");
    st->add_option("--n", ta.grid, "extrapolation grid, e.g. 32,64,128");
    st->add_option("--log2-points", ta.log2_points, "Sobol points per shift (log2)");
    st->add_option("--shifts", ta.shifts, "random shifts");

    VarianceArgs va;
    auto* sv = app.add_subcommand("variance", "sigma_p^2 (even p) or limiting moments (odd p)");
    add_common(sv, va.c, true);
    sv->add_option("--link", va.link, "link function")->required();
    sv->add_option("--mask", va.mask, "mask");
    sv->add_option("--p", va.p, "power");
    sv->add_option("--kappa", va.kappa, "input fourth moment");
    sv->add_option("--method", va.method, "auto | integral | extrapolation_exact | extrapolation_star");
    sv->add_option("--n", va.grid, "extrapolation grid");
    sv->add_option("--k-max", va.k_max, "highest moment order (odd p) or Wick order / 2");
    sv->add_option("--moments", va.moments, "input moments m_0,m_1,... (odd p)");

    WitnessArgs wa;
    auto* sg = app.add_subcommand("check-gaussian", "verify Gaussianity witness sets");
    add_common(sg, wa.c, false);
    sg->add_option("--link", wa.link, "link function")->required();
    sg->add_option("--mask", wa.mask, "mask");
    sg->add_option("--witness", wa.witness, "toeplitz_half | hankel_band | full_image");
    sg->add_option("--n", wa.grid, "N grid");
    sg->add_option("--floor", wa.floor, "positive floor for c1 and c2");

    EnsembleArgs sa;
    auto* ss = app.add_subcommand("simulate", "sample eta_p");
    EnsembleArgs pa;
    auto* sp = app.add_subcommand("process", "sample kappa_p(t) paths");
    for (auto [sub, args] : {std::pair{ss, &sa}, std::pair{sp, &pa}}) {
        add_common(sub, args->c, true);
        sub->add_option("--config", args->config_path, "JSON ensemble config");
        sub->add_option("--link", args->link, "link function");
        sub->add_option("--mask", args->mask, "mask");
        sub->add_option("--N", args->N, "matrix dimension");
        sub->add_option("--p", args->p, "power");
        sub->add_option("--R", args->R, "replications");
        sub->add_option("--dist", args->dist, "std_normal | rademacher | centered_uniform");
        sub->add_option("--trace-method", args->method, "auto | eigen | power");
    }
    sp->add_option("--grid", pa.grid, "time grid starting at 0");

    ReportArgs ra;
    auto* sr = app.add_subcommand("report", "theory and Monte Carlo comparison in one JSON");
    add_common(sr, ra.c, true);
    sr->add_option("--link", ra.link, "link function");
    sr->add_option("--mask", ra.mask, "mask");
    sr->add_option("--p", ra.p, "power");
    sr->add_option("--N", ra.N, "matrix dimension");
    sr->add_option("--R", ra.R, "replications");
    sr->add_option("--dist", ra.dist, "input distribution");
    sr->add_option("--method", ra.method, "theta route");

    std::string rerun_manifest;
    auto* sx = app.add_subcommand("rerun", "re-execute a manifest and compare output checksums");
    sx->add_option("--manifest", rerun_manifest, "manifest path")->required();

    std::vector<const char*> cargv{"patlim"};
    for (const auto& s : args) cargv.push_back(s.c_str());
    try {
        app.parse(static_cast<int>(cargv.size()), cargv.data());
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    const auto t0 = std::chrono::steady_clock::now();
    const std::string started = utc_now();
    try {
        CLI::App* sub = app.get_subcommands().front();
        ctx.command = sub->get_name();
        if (sub == sx) return cmd_rerun(rerun_manifest, out, err);
        Common* common = nullptr;
        if (sub == se) common = &ea.c, cmd_enumerate(ctx, ea, out);
        else if (sub == sc) common = &ca.c, cmd_count(ctx, ca, out);
        else if (sub == st) common = &ta.c, cmd_theta(ctx, ta, out);
        else if (sub == sv) common = &va.c, cmd_variance(ctx, va, out);
        else if (sub == sg) common = &wa.c, cmd_check_gaussian(ctx, wa, out);
        else if (sub == ss) common = &sa.c, cmd_simulate(ctx, sa, ss, out);
        else if (sub == sp) common = &pa.c, cmd_process(ctx, pa, sp, out);
        else if (sub == sr) common = &ra.c, cmd_report(ctx, ra, out);
        ctx.config["threads"] = common->threads;
        ctx.manifest_path = common->manifest;
        write_manifest(ctx, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), started);
        return kExitOk;
    } catch (const BudgetExceeded& e) {
        err << "budget exhausted: " << e.what() << "\n";
        return kExitBudget;
    } catch (const std::length_error& e) {
        err << "budget exhausted: " << e.what() << "\n";
        return kExitBudget;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::out_of_range& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const json::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "failure: " << e.what() << "\n";
        return kExitFailure;
    }
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    return run_internal(args, out, err, std::nullopt);
}

}  // namespace patlim::cli
