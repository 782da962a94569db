#pragma once

// Batch front end: subcommands binding the experiment pipelines, key=value
// configuration, and deterministic artifact emission.  Every run creates
// <out>/<experiment>-<confighash>/ holding config.json (the resolved
// configuration plus the only timestamp), report.json, and per-experiment
// CSV / JSONL data files.  Reports are byte-reproducible for a fixed
// configuration and seed.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <deque>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "twistlab/badness.hpp"
#include "twistlab/ktv.hpp"
#include "twistlab/kurzweil.hpp"
#include "twistlab/metric.hpp"
#include "twistlab/psi.hpp"
#include "twistlab/realnum.hpp"
#include "twistlab/torusgeo.hpp"

namespace twistlab {
namespace cli {

using njson = nlohmann::ordered_json;

// ---- small parsers ---------------------------------------------------------

// Rational literal: "a/b", decimal "0.3", or plain integer.
inline Rat parse_rat(const std::string& s) {
    if (s.empty()) throw invalid_parameter("empty rational literal");
    auto slash = s.find('/');
    if (slash != std::string::npos)
        return Rat(BigInt(s.substr(0, slash)), BigInt(s.substr(slash + 1)));
    auto dot = s.find('.');
    if (dot == std::string::npos) return Rat(BigInt(s));
    std::string whole = s.substr(0, dot), frac = s.substr(dot + 1);
    bool neg = !whole.empty() && whole[0] == '-';
    if (whole.empty() || whole == "-") whole += "0";
    BigInt scale = pow_big(BigInt(10), unsigned(frac.size()));
    BigInt num = BigInt(whole) * scale;
    BigInt fpart = frac.empty() ? BigInt(0) : BigInt(frac);
    num += neg ? -fpart : fpart;
    return Rat(num, scale);
}

// A pair of real-number descriptors separated by a comma; the split point is
// the second tag marker, since cf lists contain commas of their own.
inline std::pair<RealSource, RealSource> parse_pair(const std::string& s) {
    std::size_t cut = std::string::npos;
    for (const char* tag : {",rational:", ",quad:", ",cf:", ",dec:"}) {
        auto pos = s.find(tag, 1);
        if (pos != std::string::npos && pos < cut) cut = pos;
    }
    if (cut == std::string::npos)
        throw invalid_parameter("expected a pair of real descriptors: " + s);
    return {RealSource::parse(s.substr(0, cut)), RealSource::parse(s.substr(cut + 1))};
}

// Approximating-function descriptor: "pow:C=<rat>,s=<rat>", "const:C=<rat>",
// "logh:C=<rat>".
inline PsiPtr parse_psi(const std::string& s) {
    auto colon = s.find(':');
    if (colon == std::string::npos) throw invalid_parameter("bad psi descriptor: " + s);
    std::string tag = s.substr(0, colon), body = s.substr(colon + 1);
    auto field = [&](const std::string& key) -> std::string {
        auto pos = body.find(key + "=");
        if (pos != std::string::npos && (pos == 0 || body[pos - 1] == ',')) {
            auto end = body.find(',', pos);
            return body.substr(pos + key.size() + 1,
                               end == std::string::npos ? end : end - pos - key.size() - 1);
        }
        throw invalid_parameter("psi descriptor missing field " + key + ": " + s);
    };
    if (tag == "pow") return make_psi(ApproxFunction::power(parse_rat(field("C")), parse_rat(field("s"))));
    if (tag == "const")
        return make_psi(ApproxFunction::constant(
            body.find('=') == std::string::npos ? parse_rat(body) : parse_rat(field("C"))));
    if (tag == "logh") return make_psi(ApproxFunction::log_harmonic(parse_rat(field("C"))));
    throw invalid_parameter("unknown psi family: " + tag);
}

// ---- json / artifact helpers ----------------------------------------------

inline njson rat_json(const Rat& r) {
    return njson{{"fraction", rat_string(r)}, {"decimal", decimal_string(r, 18)}};
}

inline njson cert_json(const Cert& c) {
    return njson{{"lo", decimal_string(c.lo(), 18)},
                 {"hi", decimal_string(c.hi(), 18)},
                 {"exact", c.exact()}};
}

inline njson psi_json(const ApproxFunction& psi) {
    njson out;
    out["note"] = psi.note();
    out["series"] = divergence_name(psi.divergence());
    if (auto* c = std::get_if<ApproxFunction::Constant>(&psi.kind()))
        out["C"] = rat_string(c->c);
    else if (auto* p = std::get_if<ApproxFunction::Power>(&psi.kind())) {
        out["C"] = rat_string(p->C);
        out["s"] = rat_string(p->s);
    } else if (auto* lh = std::get_if<ApproxFunction::LogHarmonic>(&psi.kind()))
        out["C"] = rat_string(lh->C);
    return out;
}

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string iso_timestamp() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

inline void write_text(const std::filesystem::path& p, const std::string& body) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write artifact: " + p.string());
    os << body;
}

struct ArtifactSink {
    std::filesystem::path dir;

    // Creates <out>/<experiment>-<hash>/ and drops config.json there.  The
    // hash covers the resolved configuration, so identical configs land in
    // the same directory and overwrite their previous artifacts.
    ArtifactSink(const std::string& out, const std::string& experiment, njson config) {
        char hex[17];
        std::snprintf(hex, sizeof hex, "%08llx",
                      (unsigned long long)(fnv1a(config.dump()) & 0xffffffffULL));
        dir = std::filesystem::path(out) / (experiment + "-" + hex);
        std::filesystem::create_directories(dir);
        config["timestamp"] = iso_timestamp();
        write_text(dir / "config.json", config.dump(2) + "\n");
    }

    void json(const std::string& name, const njson& j) const {
        write_text(dir / name, j.dump(2) + "\n");
    }
    void text(const std::string& name, const std::string& body) const {
        write_text(dir / name, body);
    }
};

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---- shared option plumbing ------------------------------------------------

// Carries a nonzero command exit code out of a CLI11 callback.
struct exit_code {
    int code;
};
inline void throw_exit(int code) {
    if (code) throw exit_code{code};
}

struct CommonOpts {
    std::string out = "out";
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    unsigned bits = 96;
};

// Per-subcommand option registry backing the flat key=value configuration
// file.  Every option is carried as a string; the config file fills in
// whatever the command line left untouched, and unknown keys are rejected.
class SubOpts {
public:
    explicit SubOpts(CLI::App* cmd) : cmd_(cmd) {
        cmd_->add_option("--config", config_path_, "key=value configuration file");
        add("out", "out", "artifact output directory");
        add("threads", std::to_string(std::max(1u, std::thread::hardware_concurrency())),
            "parallelism cap");
        add("bits", "96", "precision budget in bits");
    }

    void add(const std::string& name, std::string def, const std::string& help) {
        store_.push_back(std::move(def));
        CLI::Option* opt = cmd_->add_option("--" + name, store_.back(), help);
        opt->capture_default_str();
        vars_[name] = {&store_.back(), opt};
    }

    // Overlays the config file (command-line flags win), then hands back.
    void resolve() {
        if (config_path_.empty()) return;
        std::ifstream is(config_path_);
        if (!is) throw invalid_parameter("cannot read config file: " + config_path_);
        std::string line;
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r");
            auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        while (std::getline(is, line)) {
            line = trim(line);
            if (line.empty() || line[0] == '#' || line[0] == ';') continue;
            auto eq = line.find('=');
            if (eq == std::string::npos)
                throw invalid_parameter("config line is not key=value: " + line);
            std::string key = trim(line.substr(0, eq));
            std::string val = trim(line.substr(eq + 1));
            if (val.size() >= 2 && (val.front() == '"' || val.front() == '\'') &&
                val.back() == val.front())
                val = val.substr(1, val.size() - 2);
            auto it = vars_.find(key);
            if (it == vars_.end()) throw invalid_parameter("unknown config key: " + key);
            if (it->second.second->count() == 0) *it->second.first = val;
        }
    }

    const std::string& get(const std::string& name) const { return *vars_.at(name).first; }

    const std::string& require(const std::string& name) const {
        const std::string& v = get(name);
        if (v.empty()) throw invalid_parameter("--" + name + " is required");
        return v;
    }

    std::uint64_t get_u64(const std::string& name) const {
        try {
            std::size_t used = 0;
            std::uint64_t v = std::stoull(get(name), &used);
            if (used != get(name).size()) throw std::invalid_argument("trailing junk");
            return v;
        } catch (const std::exception&) {
            throw invalid_parameter("--" + name + " must be a non-negative integer, got: " +
                                    get(name));
        }
    }
    unsigned get_u32(const std::string& name) const {
        return static_cast<unsigned>(get_u64(name));
    }

    CommonOpts common() const {
        CommonOpts com;
        com.out = get("out");
        com.threads = std::max<unsigned>(1, get_u32("threads"));
        com.bits = std::max<unsigned>(32, get_u32("bits"));
        return com;
    }

private:
    CLI::App* cmd_;
    std::string config_path_;
    std::deque<std::string> store_;
    std::map<std::string, std::pair<std::string*, CLI::Option*>> vars_;
};

// Badness constant: either a rational literal or "from-profile:Q=<n>", which
// runs the certified scan on the spot and takes its lower bound.
inline Rat resolve_c(const std::string& spec, const RealSource& x1, const RealSource& x2,
                     const Weights& w, unsigned threads) {
    const std::string tag = "from-profile:Q=";
    if (spec.rfind(tag, 0) != 0) return parse_rat(spec);
    BigInt Q(spec.substr(tag.size()));
    BadnessProfile prof = profile(x1, x2, w, Q, threads);
    if (prof.rational_degenerate)
        throw invalid_parameter("profiled point is rational-degenerate; badness constant is 0");
    return prof.c_lower;
}

// ---- subcommands -----------------------------------------------------------

inline int cmd_profile(const std::string& x, const std::string& i, const std::string& j,
                       std::uint64_t Q, const CommonOpts& com) {
    auto [x1, x2] = parse_pair(x);
    Weights w(parse_rat(i), parse_rat(j));
    BadnessProfile prof = profile(x1, x2, w, BigInt(Q), com.threads);

    njson config{{"experiment", "profile"}, {"x", x}, {"i", i}, {"j", j},
                 {"Q", Q},                  {"threads", com.threads}};
    ArtifactSink sink(com.out, "profile", config);

    njson rep;
    rep["experiment"] = "profile";
    rep["x1"] = x1.serialize();
    rep["x2"] = x2.serialize();
    rep["weights"] = njson{{"i", rat_string(w.i)}, {"j", rat_string(w.j)}};
    rep["Q"] = Q;
    rep["rational_degenerate"] = prof.rational_degenerate;
    rep["c_lower"] = rat_json(prof.c_lower);
    rep["c_upper"] = rat_json(prof.c_upper);
    rep["argmin"] = prof.argmin.str();
    rep["record_count"] = prof.records.size();
    sink.json("report.json", rep);

    std::ostringstream csv;
    csv << "q,v_lo,v_hi\n";
    for (const auto& r : prof.records)
        csv << r.q << "," << decimal_string(r.v.lo(), 18) << "," << decimal_string(r.v.hi(), 18)
            << "\n";
    sink.text("records.csv", csv.str());

    std::cout << "profile: argmin q=" << prof.argmin << "  c in ["
              << decimal_string(prof.c_lower, 8) << ", " << decimal_string(prof.c_upper, 8)
              << "]  records=" << prof.records.size() << "\n"
              << "artifacts: " << sink.dir.string() << "\n";
    return 0;
}

inline int cmd_adversary(const std::string& source, const std::string& x, const std::string& i,
                         const std::string& j, unsigned K, unsigned growth, unsigned terms,
                         std::uint64_t Q, const CommonOpts& com) {
    Weights w(parse_rat(i), parse_rat(j));
    RealSource x1 = RealSource::rational(Rat(0)), x2 = x1;
    WitnessSequence wit;
    if (source == "engineered") {
        EngineeredInstance inst = engineered_instance(w, K);
        x1 = inst.x1;
        x2 = inst.x2;
        wit = inst.witness;
    } else if (source == "liouville") {
        LiouvillePair lp = liouville_vector(growth, terms);
        x1 = lp.x1;
        x2 = lp.x2;
        wit = witness_from_liouville(lp, w);
    } else if (source == "scan") {
        auto pr = parse_pair(x);
        x1 = pr.first;
        x2 = pr.second;
        wit = extract_witness(x1, x2, w, BigInt(Q));
    } else {
        throw invalid_parameter("adversary source must be engineered | liouville | scan");
    }

    AdversaryRun run = run_adversary(x1, x2, w, wit, K, com.bits);

    njson config{{"experiment", "adversary"},
                 {"source", source},
                 {"x", x},
                 {"i", i},
                 {"j", j},
                 {"K", K},
                 {"growth", growth},
                 {"terms", terms},
                 {"Q", Q},
                 {"bits", com.bits}};
    ArtifactSink sink(com.out, "adversary", config);

    njson rep;
    rep["experiment"] = "adversary";
    rep["x1"] = x1.serialize();
    rep["x2"] = x2.serialize();
    rep["weights"] = njson{{"i", rat_string(w.i)}, {"j", rat_string(w.j)}};
    rep["K"] = K;
    njson jw = njson::array();
    for (const auto& e : wit.entries)
        jw.push_back(njson{{"q", e.q.str()}, {"m", e.m.str()}, {"n", e.n.str()},
                           {"c", rat_string(e.c())}});
    rep["witness"] = jw;
    rep["bound"] = cert_json(run.bound);
    rep["sum_S"] = cert_json(run.sum_S);
    rep["bound_ok"] = run.bound_ok;
    rep["bound_margin"] = decimal_string(run.bound_margin, 18);
    rep["all_covered"] = run.all_covered;
    sink.json("report.json", rep);

    std::ostringstream csv;
    csv << "k,r_count,s_count,mu_R_lo,mu_R_hi,mu_S_lo,mu_S_hi,covered,min_margin\n";
    for (const auto& b : run.blocks)
        csv << b.k + 1 << "," << b.r_count << "," << b.s_count << ","
            << decimal_string(b.mu_R.lo(), 18) << "," << decimal_string(b.mu_R.hi(), 18) << ","
            << decimal_string(b.mu_S.lo(), 18) << "," << decimal_string(b.mu_S.hi(), 18) << ","
            << (b.cover.covered ? 1 : 0) << "," << decimal_string(b.cover.min_margin, 18) << "\n";
    sink.text("blocks.csv", csv.str());

    std::cout << "adversary: K=" << K << "  sum_S<=" << decimal_string(run.sum_S.hi(), 8)
              << "  bound>=" << decimal_string(run.bound.lo(), 8)
              << "  bound_ok=" << run.bound_ok << "  all_covered=" << run.all_covered << "\n"
              << "artifacts: " << sink.dir.string() << "\n";
    return run.bound_ok && run.all_covered ? 0 : 4;
}

inline int cmd_density(const std::string& x, const std::string& i, const std::string& j,
                       std::uint64_t k, unsigned t0, unsigned T, const std::string& C,
                       const std::string& c_spec, const CommonOpts& com) {
    auto [x1, x2] = parse_pair(x);
    Weights w(parse_rat(i), parse_rat(j));
    Rat c = resolve_c(c_spec, x1, x2, w, com.threads);
    PsiPtr base = make_psi(ApproxFunction::power(parse_rat(C), Rat(1)));
    DensityRun run = run_density(x1, x2, w, base, BigInt(k), t0, T, c, com.bits);

    njson config{{"experiment", "density"},
                 {"x", x},
                 {"i", i},
                 {"j", j},
                 {"k", k},
                 {"t0", t0},
                 {"T", T},
                 {"C", C},
                 {"c", c_spec},
                 {"bits", com.bits}};
    ArtifactSink sink(com.out, "density", config);

    bool all_ok = true;
    for (const auto& lv : run.levels)
        all_ok = all_ok && lv.count_ok && lv.l_ok && lv.diff_ok && lv.disjoint_ok;

    njson rep;
    rep["experiment"] = "density";
    rep["x1"] = x1.serialize();
    rep["x2"] = x2.serialize();
    rep["weights"] = njson{{"i", rat_string(w.i)}, {"j", rat_string(w.j)}};
    rep["k"] = k;
    rep["t0"] = t0;
    rep["T"] = T;
    rep["c"] = rat_json(run.c);
    rep["threshold"] = cert_json(run.threshold);
    rep["levels_checked"] = run.levels.size();
    rep["all_levels_ok"] = all_ok;
    if (run.precondition_lost_at)
        rep["precondition_lost_at"] = *run.precondition_lost_at;
    else
        rep["precondition_lost_at"] = nullptr;
    sink.json("report.json", rep);

    std::ostringstream csv;
    csv << "t,j_total,hits_union,l_count,count_bound,l_floor,mu_Rt_lo,mu_Rt_hi,mu_Rt1_lo,"
           "mu_Rt1_hi,sum_L_lo,sum_L_hi,count_ok,l_ok,diff_ok,diff_strong,disjoint_ok\n";
    for (const auto& lv : run.levels)
        csv << lv.t << "," << lv.j_total << "," << lv.hits_union << "," << lv.l_count << ","
            << decimal_string(lv.count_bound, 6) << "," << decimal_string(lv.l_floor, 6) << ","
            << decimal_string(lv.mu_Rt.lo(), 18) << "," << decimal_string(lv.mu_Rt.hi(), 18)
            << "," << decimal_string(lv.mu_Rt1.lo(), 18) << ","
            << decimal_string(lv.mu_Rt1.hi(), 18) << "," << decimal_string(lv.sum_L_areas.lo(), 18)
            << "," << decimal_string(lv.sum_L_areas.hi(), 18) << "," << lv.count_ok << ","
            << lv.l_ok << "," << lv.diff_ok << "," << lv.diff_strong << "," << lv.disjoint_ok
            << "\n";
    sink.text("levels.csv", csv.str());

    std::cout << "density: k=" << k << "  levels=" << run.levels.size() << "  all_ok=" << all_ok
              << "  precondition_lost_at=";
    if (run.precondition_lost_at)
        std::cout << *run.precondition_lost_at;
    else
        std::cout << "-";
    std::cout << "\nartifacts: " << sink.dir.string() << "\n";
    return all_ok ? 0 : 4;
}

inline int cmd_cantor(const std::string& x, const std::string& i, const std::string& j,
                      std::uint64_t k, unsigned depth, const std::string& c_spec,
                      std::size_t points, const CommonOpts& com) {
    auto [x1, x2] = parse_pair(x);
    Weights w(parse_rat(i), parse_rat(j));
    Rat c = resolve_c(c_spec, x1, x2, w, com.threads);
    KtvParams params(BigInt(k), w, c, depth, com.bits);
    CantorTree tree = build_tree(x1, x2, params);
    DimensionReport dim = box_dimension(tree);
    std::vector<DeepPoint> deep = extract_points(tree, points, x1, x2, com.bits);

    njson config{{"experiment", "cantor"}, {"x", x},         {"i", i},
                 {"j", j},                 {"k", k},         {"depth", depth},
                 {"c", c_spec},            {"points", points}, {"bits", com.bits}};
    ArtifactSink sink(com.out, "cantor", config);

    njson rep;
    rep["experiment"] = "cantor";
    rep["x1"] = x1.serialize();
    rep["x2"] = x2.serialize();
    rep["weights"] = njson{{"i", rat_string(w.i)}, {"j", rat_string(w.j)}};
    rep["k"] = k;
    rep["depth"] = depth;
    rep["c"] = rat_json(c);
    rep["theta"] = cert_json(params.theta);
    rep["children_per_node"] = params.children_x * params.children_y;
    rep["min_survivors"] = tree.min_survivors;
    njson alive = njson::array();
    for (const auto& lv : tree.alive) alive.push_back(lv.size());
    rep["alive_per_level"] = alive;
    njson jd;
    jd["slope"] = fmt_double(dim.slope);
    jd["residual_rms"] = fmt_double(dim.residual_rms);
    jd["analytic_floor"] = fmt_double(dim.analytic_floor);
    njson jc = njson::array();
    for (std::size_t m = 0; m < dim.counts.size(); ++m)
        jc.push_back(njson{{"log_inv_delta", fmt_double(dim.log_inv_delta[m])},
                           {"count", dim.counts[m]}});
    jd["scales"] = jc;
    rep["dimension"] = jd;
    njson jp = njson::array();
    for (const auto& p : deep)
        jp.push_back(njson{{"gx", rat_string(p.gx)},
                           {"gy", rat_string(p.gy)},
                           {"cert_lo", fmt_double(p.cert_lo)},
                           {"argmin_q", p.argmin_q},
                           {"cert_at_argmin", cert_json(p.cert_at_argmin)},
                           {"scan_limit", p.scan_limit}});
    rep["deep_points"] = jp;
    bool ok = tree.min_survivors * 32 >= k && dim.slope >= dim.analytic_floor;
    for (const auto& p : deep) ok = ok && p.cert_lo > 0;
    std::size_t nodes_emitted = 0;
    for (const auto& level : tree.levels) nodes_emitted += level.size();
    rep["nodes_emitted"] = nodes_emitted;
    rep["ok"] = ok;
    sink.json("report.json", rep);

    std::ostringstream tj;
    for (const auto& level : tree.levels)
        for (const auto& n : level) {
            njson line{{"level", n.level},
                       {"parent", n.parent},
                       {"cx", rat_string(n.cx)},
                       {"cy", rat_string(n.cy)}};
            if (n.pruned_by)
                line["pruned_by"] = *n.pruned_by;
            else
                line["pruned_by"] = nullptr;
            tj << line.dump() << "\n";
        }
    sink.text("tree.jsonl", tj.str());

    std::cout << "cantor: k=" << k << " depth=" << depth
              << "  min_survivors=" << tree.min_survivors << "  slope=" << dim.slope
              << "  floor=" << dim.analytic_floor << "  ok=" << ok << "\n"
              << "artifacts: " << sink.dir.string() << "\n";
    return ok ? 0 : 4;
}

inline int cmd_metric(const std::string& family, const std::string& psi_spec, std::size_t N,
                      std::uint64_t Q, std::uint64_t seed, const std::string& i,
                      const std::string& j, std::uint64_t tail_q0, const CommonOpts& com) {
    PsiPtr psi = parse_psi(psi_spec);
    RegionFamily fam = family == "interval" ? RegionFamily::interval(psi)
                       : family == "sup_norm"
                           ? RegionFamily::sup_norm(Weights(parse_rat(i), parse_rat(j)), psi)
                       : family == "multiplicative"
                           ? RegionFamily::multiplicative(psi)
                           : throw invalid_parameter(
                                 "family must be interval | sup_norm | multiplicative");
    McRun run = run_mc(fam, N, Q, seed, com.threads, tail_q0, com.bits);

    njson config{{"experiment", "metric"},
                 {"family", family},
                 {"psi", psi_spec},
                 {"N", N},
                 {"Q", Q},
                 {"seed", seed},
                 {"i", i},
                 {"j", j},
                 {"tail_q0", tail_q0},
                 {"bits", com.bits}};
    ArtifactSink sink(com.out, "metric", config);

    njson rep;
    rep["experiment"] = "metric";
    rep["family"] = fam.shape_name();
    rep["d"] = fam.d;
    rep["psi"] = psi_json(*psi);
    rep["N"] = N;
    rep["Q"] = Q;
    rep["seed"] = seed;
    rep["rng"] = run.rng;
    rep["E_analytic"] = cert_json(run.expectation);
    rep["mean"] = fmt_double(run.mean);
    rep["second_moment"] = fmt_double(run.second_moment);
    rep["std_err"] = fmt_double(run.std_err);
    rep["expectation_ok"] = run.expectation_ok;
    njson pz = njson::array();
    bool pz_ok = true;
    for (const auto& row : run.pz) {
        pz.push_back(njson{{"eps", rat_string(row.eps)},
                           {"floor", fmt_double(row.floor_bound)},
                           {"empirical", fmt_double(row.empirical)},
                           {"sigma", fmt_double(row.sigma)},
                           {"ok", row.ok}});
        pz_ok = pz_ok && row.ok;
    }
    rep["pz_table"] = pz;
    if (tail_q0) {
        rep["tail_q0"] = tail_q0;
        rep["tail_sum"] = cert_json(run.tail_sum);
        rep["tail_fraction"] = fmt_double(run.tail_fraction);
        rep["tail_ok"] = run.tail_ok;
    }
    rep["verdict"] = run.expectation_ok && pz_ok && run.tail_ok;
    sink.json("report.json", rep);

    // histogram of the hit counts; deterministic and compact
    std::map<std::uint32_t, std::size_t> hist;
    for (std::uint32_t c : run.counts) ++hist[c];
    std::ostringstream csv;
    csv << "hits,samples\n";
    for (const auto& [v, n] : hist) csv << v << "," << n << "\n";
    sink.text("counts.csv", csv.str());

    std::cout << "metric: family=" << fam.shape_name() << "  E="
              << decimal_string(run.expectation.v, 8) << "  mean=" << run.mean
              << "  expectation_ok=" << run.expectation_ok << "  pz_ok=" << pz_ok << "\n"
              << "artifacts: " << sink.dir.string() << "\n";
    return run.expectation_ok && pz_ok && run.tail_ok ? 0 : 4;
}

// ---- entry point -----------------------------------------------------------

inline int run_cli(int argc, const char* const* argv) {
    CLI::App app{"twistlab: computational laboratory for twisted Diophantine approximation"};
    app.require_subcommand(1);

    auto* profile = app.add_subcommand("profile", "certified weighted badness scan");
    SubOpts po(profile);
    po.add("x", "", "pair of real descriptors");
    po.add("i", "1/2", "first weight");
    po.add("j", "", "second weight");
    po.add("Q", "1000", "scan cutoff");
    profile->callback([&] {
        po.resolve();
        throw_exit(cmd_profile(po.require("x"), po.get("i"), po.require("j"), po.get_u64("Q"),
                               po.common()));
    });

    auto* adversary = app.add_subcommand("adversary", "witness blocks, measures, covering");
    SubOpts ao(adversary);
    ao.add("source", "engineered", "engineered | liouville | scan");
    ao.add("x", "", "pair of real descriptors (source=scan)");
    ao.add("i", "1/2", "first weight");
    ao.add("j", "1/2", "second weight");
    ao.add("K", "3", "number of blocks");
    ao.add("growth", "3", "liouville growth exponent");
    ao.add("terms", "4", "liouville term count");
    ao.add("Q", "1000", "witness scan cutoff (source=scan)");
    adversary->callback([&] {
        ao.resolve();
        if (ao.get("source") == "scan") ao.require("x");
        throw_exit(cmd_adversary(ao.get("source"), ao.get("x"), ao.get("i"), ao.get("j"),
                                 ao.get_u32("K"), ao.get_u32("growth"), ao.get_u32("terms"),
                                 ao.get_u64("Q"), ao.common()));
    });

    auto* density = app.add_subcommand("density", "level-by-level resonant mass accumulation");
    SubOpts dopt(density);
    dopt.add("x", "", "pair of real descriptors");
    dopt.add("i", "1/2", "first weight");
    dopt.add("j", "1/2", "second weight");
    dopt.add("k", "8", "block base (> 4)");
    dopt.add("t0", "1", "first level");
    dopt.add("T", "4", "last level");
    dopt.add("C", "1/100000", "base function constant, psi(r) = C/r");
    dopt.add("c", "1/100", "badness constant or from-profile:Q=<n>");
    density->callback([&] {
        dopt.resolve();
        throw_exit(cmd_density(dopt.require("x"), dopt.get("i"), dopt.get("j"),
                               dopt.get_u64("k"), dopt.get_u32("t0"), dopt.get_u32("T"),
                               dopt.get("C"), dopt.get("c"), dopt.common()));
    });

    auto* cantor = app.add_subcommand("cantor", "nested-rectangle construction and dimension");
    SubOpts ko(cantor);
    ko.add("x", "", "pair of real descriptors");
    ko.add("i", "1/2", "first weight");
    ko.add("j", "1/2", "second weight");
    ko.add("k", "256", "subdivision base");
    ko.add("depth", "3", "tree depth");
    ko.add("c", "from-profile:Q=100000", "badness constant or from-profile:Q=<n>");
    ko.add("points", "3", "deep points to certify");
    cantor->callback([&] {
        ko.resolve();
        throw_exit(cmd_cantor(ko.require("x"), ko.get("i"), ko.get("j"), ko.get_u64("k"),
                              ko.get_u32("depth"), ko.get("c"), ko.get_u64("points"),
                              ko.common()));
    });

    auto* metric = app.add_subcommand("metric", "doubly-metric Monte-Carlo verification");
    SubOpts mo(metric);
    mo.add("family", "interval", "interval | sup_norm | multiplicative");
    mo.add("psi", "pow:C=1/4,s=1", "approximating function descriptor");
    mo.add("N", "100000", "sample count");
    mo.add("Q", "1000", "index cutoff");
    mo.add("seed", "7", "master RNG seed");
    mo.add("tail-q0", "0", "tail check start index (0 = off)");
    SubOpts* msup = &mo;
    msup->add("i", "1/2", "first weight (sup_norm)");
    msup->add("j", "1/2", "second weight (sup_norm)");
    metric->callback([&] {
        mo.resolve();
        throw_exit(cmd_metric(mo.get("family"), mo.get("psi"), mo.get_u64("N"), mo.get_u64("Q"),
                              mo.get_u64("seed"), mo.get("i"), mo.get("j"),
                              mo.get_u64("tail-q0"), mo.common()));
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const exit_code& e) {
        return e.code;
    } catch (const badness_violation& e) {
        std::cerr << "badness violation: " << e.what() << "\n";
        return 5;
    } catch (const insufficient_precision& e) {
        std::cerr << "precision error: " << e.what() << "\n";
        return 3;
    } catch (const invalid_parameter& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return 4;
    }
    return 0;
}

}  // namespace cli
}  // namespace twistlab
