// Command-line front end: capacity and region queries, code-container
// builds, sweep simulation, and the structural diagnostics.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "idbc/channel.hpp"
#include "idbc/errors.hpp"
#include "idbc/harness.hpp"
#include "idbc/id_bc.hpp"
#include "idbc/id_dmc.hpp"
#include "idbc/id_ext.hpp"
#include "idbc/info.hpp"

namespace {

using namespace idbc;

void write_text(const std::string& path, const std::string& content) {
    const std::filesystem::path p(path);
    if (!p.parent_path().empty()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write output file: " + path);
    out << content;
    if (!out) throw std::runtime_error("short write on output file: " + path);
}

void emit(const std::string& text, const std::string& out_path) {
    std::cout << text;
    if (!out_path.empty()) write_text(out_path, text);
}

std::vector<double> parse_rate_list(const std::string& csv) {
    std::vector<double> rates;
    std::size_t start = 0;
    while (start <= csv.size()) {
        const std::size_t pos = csv.find(',', start);
        const std::string tok =
            csv.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
        double v = 0.0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
            throw std::invalid_argument("query: malformed rate: " + tok);
        rates.push_back(v);
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return rates;
}

int cmd_capacity(const std::string& channel_path, const std::string& out_path) {
    const Channel ch = load_channel(channel_path);
    const Dmc* w = std::get_if<Dmc>(&ch);
    if (w == nullptr) throw std::invalid_argument("capacity needs a single-receiver channel");
    const CapacityResult res = capacity(*w);
    nlohmann::json j;
    j["value_nats"] = res.value;
    j["value_bits"] = nats_to_bits(res.value);
    j["lower"] = res.lower;
    j["upper"] = res.upper;
    j["gap"] = res.gap;
    j["iterations"] = res.iterations;
    j["converged"] = res.converged;
    j["maximizer"] = res.maximizer.probs();
    emit(j.dump(2) + "\n", out_path);
    return 0;
}

int cmd_region(const std::string& channel_path, const std::string& kind_name,
               const std::string& query, int u_size, std::uint64_t seed,
               const std::string& out_path) {
    const Channel ch = load_channel(channel_path);
    RegionQuery q;
    q.kind = parse_region_kind(kind_name);
    q.rates = parse_rate_list(query);
    RegionOptions opt;
    if (seed != 0) opt.seed = seed;
    if (q.kind == RegionKind::common_randomness) {
        opt.u_size = u_size > 0 ? u_size : std::visit([](const auto& w) {
                         return w.input_size();
                     }, ch) + 1;
    }
    const RegionAnswer ans = region_membership(ch, q, opt);
    nlohmann::json j;
    j["kind"] = std::string(region_kind_name(q.kind));
    j["rates"] = q.rates;
    j["inside"] = ans.inside;
    j["verdict"] = ans.verdict == Verdict::inside
                       ? "inside"
                       : (ans.verdict == Verdict::boundary ? "boundary" : "outside");
    j["slack"] = ans.slack;
    j["witness"] = ans.witness;
    j["constraint_values"] = ans.constraint_values;
    if (q.kind == RegionKind::common_randomness) j["u_size"] = opt.u_size;
    emit(j.dump(2) + "\n", out_path);
    return 0;
}

int cmd_build_code(const std::string& cfg_path, std::uint64_t seed_override,
                   std::int64_t budget_states, const std::string& out_path) {
    ExperimentConfig cfg = load_config(cfg_path);
    if (budget_states > 0) cfg.eval.state_budget = budget_states;
    const Channel ch = load_channel(cfg.channel_path);
    if (grid_point_count(cfg) != 1)
        throw std::invalid_argument("build-code needs a config with exactly one grid point");
    const auto issues = validate_config(cfg, ch);
    if (!issues.empty()) {
        std::string msg = "config: grid points failed validation:";
        for (const auto& s : issues) msg += "\n  " + s;
        throw std::invalid_argument(msg);
    }
    if (cfg.seeds.empty()) throw std::invalid_argument("build-code needs at least one seed");
    const std::uint64_t seed = seed_override != 0 ? seed_override : cfg.seeds.front();
    const GridPoint pt = grid_point_at(cfg, 0);
    const Pmf pmf = cfg.input_pmf.empty()
                        ? Pmf::uniform(std::visit([](const auto& w) {
                              return w.input_size();
                          }, ch))
                        : Pmf(cfg.input_pmf);

    std::string path = out_path.empty() ? cfg.scheme + "-code.json" : out_path;
    if (cfg.scheme == "dmc") {
        IdParams p;
        p.n = pt.n;
        p.m_count = pt.messages[0];
        p.pool_rate = pt.rates[0];
        p.bin_rate = pt.rates[1];
        p.input_pmf = pmf;
        p.eps = pt.eps;
        p.seed = seed;
        const IdCodeDmc code = build_dmc_code(p, cfg.memory_budget);
        save_dmc_code(code, path);
        std::cout << "wrote " << path << " (pool " << code.pool.size() << ", messages "
                  << code.index_sets.size() << ")\n";
        return 0;
    }
    if (cfg.scheme == "bc") {
        BcIdParams p;
        p.n = pt.n;
        p.m_y_count = pt.messages[0];
        p.m_z_count = pt.messages[1];
        p.pool_rate = pt.rates[0];
        p.bin_rate_y = pt.rates[1];
        p.bin_rate_z = pt.rates[2];
        p.input_pmf = pmf;
        p.eps = pt.eps;
        p.seed = seed;
        const BcIdCode code = build_bc_code(p, cfg.memory_budget);
        save_bc_code(code, path);
        std::cout << "wrote " << path << " (pool " << code.pool.size() << ", y messages "
                  << code.index_sets_y.size() << ", z messages "
                  << code.index_sets_z.size() << ")\n";
        return 0;
    }
    throw std::invalid_argument("build-code supports the dmc and bc schemes only; scheme " +
                                cfg.scheme + " has no container format");
}

int cmd_simulate(const std::string& cfg_path, std::uint64_t seed_override,
                 std::int64_t budget_states, const std::string& out_path, int jobs) {
    ExperimentConfig cfg = load_config(cfg_path);
    if (seed_override != 0) cfg.seeds = {seed_override};
    if (budget_states > 0) cfg.eval.state_budget = budget_states;
    if (!out_path.empty()) cfg.output_path = out_path;
    const SweepResult res = run_sweep(cfg, jobs);
    std::int64_t failures = 0;
    for (const RunRecord& rec : res.records)
        if (rec.status != "ok") ++failures;
    std::cout << "records " << res.records.size() << " computed " << res.computed
              << " reused " << res.reused << " failures " << failures << "\n";
    if (!cfg.output_path.empty()) std::cout << "wrote " << cfg.output_path << "\n";
    return res.all_ok ? 0 : 1;
}

int cmd_verify_lemmas(const std::string& cfg_path, std::uint64_t seed_override,
                      std::int64_t budget_states, const std::string& out_path) {
    ExperimentConfig cfg = load_config(cfg_path);
    if (seed_override != 0) cfg.seeds = {seed_override};
    if (budget_states > 0) cfg.eval.state_budget = budget_states;
    const Channel ch = load_channel(cfg.channel_path);
    const auto issues = validate_config(cfg, ch);
    if (!issues.empty()) {
        std::string msg = "config: grid points failed validation:";
        for (const auto& s : issues) msg += "\n  " + s;
        throw std::invalid_argument(msg);
    }
    const Pmf pmf = cfg.input_pmf.empty()
                        ? Pmf::uniform(std::visit([](const auto& w) {
                              return w.input_size();
                          }, ch))
                        : Pmf(cfg.input_pmf);

    std::ostringstream os;
    os.precision(12);
    bool all_pass = true;
    const std::int64_t points = grid_point_count(cfg);
    for (std::int64_t i = 0; i < points; ++i) {
        const GridPoint pt = grid_point_at(cfg, i);
        for (const std::uint64_t seed : cfg.seeds) {
            if (cfg.scheme == "dmc") {
                if (!pt.mu)
                    throw std::invalid_argument(
                        "verify-lemmas for the dmc scheme needs a mu axis in the grid");
                IdParams p;
                p.n = pt.n;
                p.m_count = pt.messages[0];
                p.pool_rate = pt.rates[0];
                p.bin_rate = pt.rates[1];
                p.input_pmf = pmf;
                p.eps = pt.eps;
                p.seed = seed;
                const IdCodeDmc code = build_dmc_code(p, cfg.memory_budget);
                const GMuDiagnostics d = check_G_mu(code, *pt.mu);
                os << "concentration grid=" << i << " seed=" << seed << " mu=" << d.mu
                   << " size_violations=" << d.size_lower_violations + d.size_upper_violations
                   << " intersection_violations=" << d.intersection_violations
                   << " pass=" << (d.pass ? 1 : 0) << "\n";
                all_pass = all_pass && d.pass;
            } else if (cfg.scheme == "bc") {
                BcIdParams p;
                p.n = pt.n;
                p.m_y_count = pt.messages[0];
                p.m_z_count = pt.messages[1];
                p.pool_rate = pt.rates[0];
                p.bin_rate_y = pt.rates[1];
                p.bin_rate_z = pt.rates[2];
                p.input_pmf = pmf;
                p.eps = pt.eps;
                p.seed = seed;
                const BcIdCode code = build_bc_code(p, cfg.memory_budget);
                for (const Side side : {Side::y, Side::z}) {
                    const std::int64_t count =
                        side == Side::y ? p.m_y_count : p.m_z_count;
                    double max_tv = 0.0;
                    bool law_ok = true;
                    for (std::int64_t m = 0; m < std::min<std::int64_t>(count, 64); ++m) {
                        const IndexDistributionDiag d = index_distribution_diag(code, side, m);
                        double sum_v = 0.0, sum_ref = 0.0;
                        for (const double v : d.p_v) sum_v += v;
                        for (const double v : d.p_ref) sum_ref += v;
                        law_ok = law_ok && std::fabs(sum_v - 1.0) < 1e-9 &&
                                 std::fabs(sum_ref - 1.0) < 1e-9;
                        max_tv = std::max(max_tv, d.tv);
                    }
                    os << "index-law grid=" << i << " seed=" << seed << " side="
                       << (side == Side::y ? 'y' : 'z') << " max_tv=" << max_tv
                       << " pass=" << (law_ok ? 1 : 0) << "\n";
                    all_pass = all_pass && law_ok;
                }
            } else if (cfg.scheme == "bc3") {
                const Bc3IdCode code =
                    build_bc3_code({pt.n,
                                    {pt.messages[0], pt.messages[1], pt.messages[2]},
                                    pt.rates[0],
                                    {pt.rates[1], pt.rates[2], pt.rates[3]},
                                    pmf, pt.eps, seed},
                                   cfg.memory_budget);
                std::int64_t checked = 0, fallbacks = 0;
                for (std::int64_t m1 = 0; m1 < std::min<std::int64_t>(pt.messages[0], 8); ++m1)
                    for (std::int64_t m2 = 0; m2 < std::min<std::int64_t>(pt.messages[1], 8); ++m2)
                        for (std::int64_t m3 = 0; m3 < std::min<std::int64_t>(pt.messages[2], 8); ++m3) {
                            ++checked;
                            const std::uint32_t v = codeword_index_bc3(code, m1, m2, m3);
                            const auto& b1 = code.index_sets[0][static_cast<std::size_t>(m1)];
                            if (!std::binary_search(b1.begin(), b1.end(), v)) ++fallbacks;
                        }
                os << "triple-intersection grid=" << i << " seed=" << seed
                   << " checked=" << checked << " fallbacks=" << fallbacks
                   << " pass=1\n";
            } else if (cfg.scheme == "cm") {
                const CmIdCode code = build_cm_code(
                    {pt.n, pt.messages[0], pt.messages[1], pt.messages[2], pt.rates[0],
                     pt.rates[1], pt.rates[2], pmf, pt.eps, seed},
                    cfg.memory_budget);
                std::int64_t checked = 0, fallbacks = 0;
                for (std::int64_t m = 0; m < std::min<std::int64_t>(pt.messages[0], 4); ++m)
                    for (std::int64_t my = 0; my < std::min<std::int64_t>(pt.messages[1], 8); ++my)
                        for (std::int64_t mz = 0; mz < std::min<std::int64_t>(pt.messages[2], 8); ++mz) {
                            ++checked;
                            const std::uint32_t v = codeword_index_cm(code, m, my, mz);
                            const auto& bin = code.index_sets_y[static_cast<std::size_t>(
                                m * pt.messages[1] + my)];
                            if (!std::binary_search(bin.begin(), bin.end(), v)) ++fallbacks;
                        }
                os << "joint-intersection grid=" << i << " seed=" << seed
                   << " checked=" << checked << " fallbacks=" << fallbacks << " pass=1\n";
            } else if (cfg.scheme == "fb") {
                const Bc2& bc = std::get<Bc2>(ch);
                FbIdParams p;
                p.n = pt.n;
                p.m_y_count = pt.messages[0];
                p.m_z_count = pt.messages[1];
                p.pool_rate = pt.rates[0];
                p.bin_rate_z = pt.rates[1];
                p.rate_y_hat = pt.rates[2];
                p.input_pmf = pmf;
                p.eps = pt.eps;
                p.eps_tc = cfg.eps_tc;
                p.seed = seed;
                const FbIdCode code = build_fb_code(p, bc, cfg.memory_budget);
                double max_tv = 0.0;
                for (std::int64_t m = 0; m < std::min<std::int64_t>(p.m_z_count, 64); ++m)
                    max_tv = std::max(max_tv, fb_index_distribution(code, m).tv);
                const bool law_ok = max_tv == 0.0;
                os << "bin-draw-law grid=" << i << " seed=" << seed << " max_tv=" << max_tv
                   << " pass=" << (law_ok ? 1 : 0) << "\n";
                all_pass = all_pass && law_ok;
                try {
                    const double tv = pool_output_tv(code, bc.marginal_y(),
                                                     cfg.eval.state_budget);
                    os << "pool-output-tv grid=" << i << " seed=" << seed << " tv=" << tv
                       << " pass=1\n";
                } catch (const BudgetError&) {
                    os << "pool-output-tv grid=" << i << " seed=" << seed
                       << " skipped=budget pass=1\n";
                }
                const CausalEncoder memoryless = [&pmf](const Sequence&, const Sequence&) {
                    return pmf;
                };
                const ConcentrationReport c = fb_type_concentration_check(
                    memoryless, bc.marginal_y(), pt.n, 0.3, 2000, seed);
                os << "type-concentration grid=" << i << " seed=" << seed
                   << " frequency=" << c.frequency << " bound=" << c.bound
                   << " pass=" << (c.pass ? 1 : 0) << "\n";
                all_pass = all_pass && c.pass;
            }
        }
    }
    os << (all_pass ? "all checks passed\n" : "some checks failed\n");
    emit(os.str(), out_path);
    return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"identification codes over broadcast channels"};
    app.require_subcommand(1);

    std::string channel_path, cfg_path, out_path, kind_name, query;
    std::uint64_t seed = 0;
    std::int64_t budget_states = 0;
    int u_size = 0;
    int jobs = 0;

    auto* cap = app.add_subcommand("capacity", "channel information maximum");
    cap->add_option("channel", channel_path, "channel file")->required();
    cap->add_option("--out", out_path, "also write the answer to this file");

    auto* reg = app.add_subcommand("region", "rate-region membership query");
    reg->add_option("channel", channel_path, "channel file")->required();
    reg->add_option("--kind", kind_name, "region kind")->required();
    reg->add_option("--query", query, "comma-separated rates")->required();
    reg->add_option("--u-size", u_size, "auxiliary alphabet size (default |X|+1)");
    reg->add_option("--seed", seed, "multistart seed");
    reg->add_option("--out", out_path, "also write the answer to this file");

    auto* bld = app.add_subcommand("build-code", "build and save a code container");
    bld->add_option("config", cfg_path, "experiment config")->required();
    bld->add_option("--seed", seed, "override the code seed");
    bld->add_option("--budget-states", budget_states, "exact-evaluation state budget");
    bld->add_option("--out", out_path, "container path");

    auto* sim = app.add_subcommand("simulate", "run the configured sweep");
    sim->add_option("config", cfg_path, "experiment config")->required();
    sim->add_option("--seed", seed, "replace the seed list with one seed");
    sim->add_option("--budget-states", budget_states, "exact-evaluation state budget");
    sim->add_option("--out", out_path, "override the output path");
    sim->add_option("--jobs", jobs, "worker count (default IDBC_WORKERS or 1)");

    auto* ver = app.add_subcommand("verify-lemmas", "run the structural diagnostics");
    ver->add_option("config", cfg_path, "experiment config")->required();
    ver->add_option("--seed", seed, "replace the seed list with one seed");
    ver->add_option("--budget-states", budget_states, "exact-evaluation state budget");
    ver->add_option("--out", out_path, "also write the report to this file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cap->parsed()) return cmd_capacity(channel_path, out_path);
        if (reg->parsed())
            return cmd_region(channel_path, kind_name, query, u_size, seed, out_path);
        if (bld->parsed()) return cmd_build_code(cfg_path, seed, budget_states, out_path);
        if (sim->parsed())
            return cmd_simulate(cfg_path, seed, budget_states, out_path, jobs);
        if (ver->parsed())
            return cmd_verify_lemmas(cfg_path, seed, budget_states, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
