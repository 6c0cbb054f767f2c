#include "idbc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "idbc/errors.hpp"
#include "idbc/id_bc.hpp"
#include "idbc/id_ext.hpp"

namespace idbc {

namespace {

namespace fs = std::filesystem;

void require_cfg(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument("config: " + msg);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string resolve_path(const std::string& raw, const std::string& base_dir) {
    if (raw.empty() || base_dir.empty()) return raw;
    fs::path p(raw);
    if (p.is_absolute()) return raw;
    return (fs::path(base_dir) / p).lexically_normal().string();
}

// Tuple arities per scheme: rates, then messages.
std::pair<std::size_t, std::size_t> scheme_arity(const std::string& scheme) {
    if (scheme == "dmc") return {2, 1};
    if (scheme == "bc") return {3, 2};
    if (scheme == "bc3") return {4, 3};
    if (scheme == "cm") return {3, 3};
    if (scheme == "fb") return {3, 2};
    throw std::invalid_argument("config: unknown scheme: " + scheme);
}

Pmf input_law(const ExperimentConfig& cfg, int input_size) {
    if (cfg.input_pmf.empty()) return Pmf::uniform(input_size);
    return Pmf(cfg.input_pmf);
}

IdParams dmc_params(const GridPoint& pt, const Pmf& pmf, std::uint64_t seed) {
    IdParams p;
    p.n = pt.n;
    p.m_count = pt.messages[0];
    p.pool_rate = pt.rates[0];
    p.bin_rate = pt.rates[1];
    p.input_pmf = pmf;
    p.eps = pt.eps;
    p.seed = seed;
    return p;
}

BcIdParams bc_params(const GridPoint& pt, const Pmf& pmf, std::uint64_t seed) {
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
    return p;
}

Bc3IdParams bc3_params(const GridPoint& pt, const Pmf& pmf, std::uint64_t seed) {
    Bc3IdParams p;
    p.n = pt.n;
    p.m_counts = {pt.messages[0], pt.messages[1], pt.messages[2]};
    p.pool_rate = pt.rates[0];
    p.bin_rates = {pt.rates[1], pt.rates[2], pt.rates[3]};
    p.input_pmf = pmf;
    p.eps = pt.eps;
    p.seed = seed;
    return p;
}

CmIdParams cm_params(const GridPoint& pt, const Pmf& pmf, std::uint64_t seed) {
    CmIdParams p;
    p.n = pt.n;
    p.m_count = pt.messages[0];
    p.m_y_count = pt.messages[1];
    p.m_z_count = pt.messages[2];
    p.pool_rate = pt.rates[0];
    p.bin_rate_y = pt.rates[1];
    p.bin_rate_z = pt.rates[2];
    p.input_pmf = pmf;
    p.eps = pt.eps;
    p.seed = seed;
    return p;
}

FbIdParams fb_params(const ExperimentConfig& cfg, const GridPoint& pt, const Pmf& pmf,
                     std::uint64_t seed) {
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
    return p;
}

std::string sanitize_field(std::string s) {
    for (char& c : s) {
        if (c == ',') c = ';';
        if (c == '\n' || c == '\r') c = ' ';
    }
    return s;
}

std::string num_to_csv(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::string opt_to_csv(const std::optional<double>& v) {
    return v ? num_to_csv(*v) : std::string();
}

std::optional<double> parse_opt(const std::string& s) {
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::runtime_error("sweep output: malformed number: " + s);
    return v;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

nlohmann::json canonical_config_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["scheme"] = cfg.scheme;
    j["grid"] = {{"n", cfg.grid.n},
                 {"rates", cfg.grid.rates},
                 {"messages", cfg.grid.messages},
                 {"eps", cfg.grid.eps},
                 {"mu", cfg.grid.mu}};
    j["seeds"] = cfg.seeds;
    j["eval"] = {{"mode", cfg.eval.mode == EvalMode::exact ? "exact" : "monte-carlo"},
                 {"trials", cfg.eval.trials},
                 {"state_budget", cfg.eval.state_budget},
                 {"pair_cap", cfg.eval.pair_cap},
                 {"pair_sample", cfg.eval.pair_sample},
                 {"z", cfg.eval.z}};
    j["criterion"] = cfg.criterion;
    j["input_pmf"] = cfg.input_pmf;
    j["eps_tc"] = cfg.eps_tc;
    j["memory_budget"] = cfg.memory_budget;
    return j;
}

std::string combine_methods(std::initializer_list<const ErrorReport*> reports) {
    std::string out;
    for (const ErrorReport* r : reports) {
        if (!out.empty() && out != r->method) {
            out += "|" + r->method;
        } else if (out.empty()) {
            out = r->method;
        }
    }
    return out;
}

RunRecord compute_record(const ExperimentConfig& cfg, const Channel& ch,
                         const std::string& hash, const GridPoint& pt,
                         std::uint64_t seed) {
    RunRecord rec;
    rec.config_hash = hash;
    rec.scheme = cfg.scheme;
    rec.grid_index = pt.index;
    rec.seed = seed;
    rec.n = pt.n;
    const auto started = std::chrono::steady_clock::now();
    try {
        const Pmf pmf = input_law(cfg, std::visit([](const auto& w) {
                            return w.input_size();
                        }, ch));
        if (cfg.scheme == "dmc") {
            const Dmc& w = std::get<Dmc>(ch);
            const IdCodeDmc code =
                build_dmc_code(dmc_params(pt, pmf, seed), cfg.memory_budget);
            const ErrorReport rep = error_report_dmc(code, w, cfg.eval);
            rec.y_max_missed = rep.max_missed;
            rec.y_max_wrong = rep.max_wrong;
            rec.detail = rep.method;
            if (pt.mu) rec.gmu_pass = check_G_mu(code, *pt.mu).pass;
        } else if (cfg.scheme == "bc") {
            const Bc2& bc = std::get<Bc2>(ch);
            const BcIdCode code =
                build_bc_code(bc_params(pt, pmf, seed), cfg.memory_budget);
            const BcSideReports rep = cfg.criterion == "max"
                                          ? max_error_report_bc(code, bc, cfg.eval)
                                          : avg_error_report_bc(code, bc, cfg.eval);
            rec.y_max_missed = rep.y.max_missed;
            rec.y_max_wrong = rep.y.max_wrong;
            rec.z_max_missed = rep.z.max_missed;
            rec.z_max_wrong = rep.z.max_wrong;
            rec.detail = combine_methods({&rep.y, &rep.z});
        } else if (cfg.scheme == "bc3") {
            const Bc3& bc = std::get<Bc3>(ch);
            const Bc3IdCode code =
                build_bc3_code(bc3_params(pt, pmf, seed), cfg.memory_budget);
            const Bc3Reports rep = evaluate_bc3(code, bc, cfg.eval);
            rec.y_max_missed = rep.receiver[0].max_missed;
            rec.y_max_wrong = rep.receiver[0].max_wrong;
            rec.z_max_missed = rep.receiver[1].max_missed;
            rec.z_max_wrong = rep.receiver[1].max_wrong;
            rec.w_max_missed = rep.receiver[2].max_missed;
            rec.w_max_wrong = rep.receiver[2].max_wrong;
            rec.detail =
                combine_methods({&rep.receiver[0], &rep.receiver[1], &rep.receiver[2]});
        } else if (cfg.scheme == "cm") {
            const Bc2& bc = std::get<Bc2>(ch);
            const CmIdCode code =
                build_cm_code(cm_params(pt, pmf, seed), cfg.memory_budget);
            const BcSideReports rep = evaluate_cm(code, bc, cfg.eval);
            rec.y_max_missed = rep.y.max_missed;
            rec.y_max_wrong = rep.y.max_wrong;
            rec.z_max_missed = rep.z.max_missed;
            rec.z_max_wrong = rep.z.max_wrong;
            rec.detail = combine_methods({&rep.y, &rep.z});
        } else if (cfg.scheme == "fb") {
            const Bc2& bc = std::get<Bc2>(ch);
            const FbIdCode code =
                build_fb_code(fb_params(cfg, pt, pmf, seed), bc, cfg.memory_budget);
            const BcSideReports rep = evaluate_fb(code, bc, cfg.eval);
            rec.y_max_missed = rep.y.max_missed;
            rec.y_max_wrong = rep.y.max_wrong;
            rec.z_max_missed = rep.z.max_missed;
            rec.z_max_wrong = rep.z.max_wrong;
            rec.detail = combine_methods({&rep.y, &rep.z});
        } else {
            throw std::invalid_argument("config: unknown scheme: " + cfg.scheme);
        }
    } catch (const BudgetError& e) {
        rec.status = "budget";
        rec.detail = e.what();
    } catch (const std::exception& e) {
        rec.status = "error";
        rec.detail = e.what();
    }
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
            .count();
    return rec;
}

int resolve_jobs(int jobs) {
    if (jobs > 0) return jobs;
    if (const char* env = std::getenv("IDBC_WORKERS")) {
        int v = 0;
        const auto res = std::from_chars(env, env + std::string_view(env).size(), v);
        if (res.ec == std::errc() && v >= 1) return v;
    }
    return 1;
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& base_dir) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("config: not valid JSON: ") + e.what());
    }
    ExperimentConfig cfg;
    try {
        cfg.channel_path = resolve_path(j.at("channel").get<std::string>(), base_dir);
        cfg.scheme = j.at("scheme").get<std::string>();
        const auto& g = j.at("grid");
        cfg.grid.n = g.at("n").get<std::vector<int>>();
        cfg.grid.rates = g.at("rates").get<std::vector<std::vector<double>>>();
        cfg.grid.messages =
            g.at("messages").get<std::vector<std::vector<std::int64_t>>>();
        cfg.grid.eps = g.at("eps").get<std::vector<double>>();
        if (g.contains("mu")) cfg.grid.mu = g.at("mu").get<std::vector<double>>();
        cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        if (j.contains("eval")) {
            const auto& e = j.at("eval");
            if (e.contains("mode")) {
                const std::string mode = e.at("mode").get<std::string>();
                if (mode == "exact") cfg.eval.mode = EvalMode::exact;
                else if (mode == "monte-carlo") cfg.eval.mode = EvalMode::monte_carlo;
                else throw std::invalid_argument("config: unknown eval mode: " + mode);
            }
            if (e.contains("trials")) cfg.eval.trials = e.at("trials").get<std::uint64_t>();
            if (e.contains("state_budget"))
                cfg.eval.state_budget = e.at("state_budget").get<std::int64_t>();
            if (e.contains("pair_cap")) cfg.eval.pair_cap = e.at("pair_cap").get<std::int64_t>();
            if (e.contains("pair_sample"))
                cfg.eval.pair_sample = e.at("pair_sample").get<std::int64_t>();
            if (e.contains("z")) cfg.eval.z = e.at("z").get<double>();
        }
        if (j.contains("criterion")) cfg.criterion = j.at("criterion").get<std::string>();
        if (j.contains("input_pmf"))
            cfg.input_pmf = j.at("input_pmf").get<std::vector<double>>();
        if (j.contains("eps_tc")) cfg.eps_tc = j.at("eps_tc").get<double>();
        if (j.contains("memory_budget"))
            cfg.memory_budget = j.at("memory_budget").get<std::int64_t>();
        if (j.contains("output"))
            cfg.output_path = resolve_path(j.at("output").get<std::string>(), base_dir);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }

    const auto [rate_arity, msg_arity] = scheme_arity(cfg.scheme);
    for (const auto& r : cfg.grid.rates)
        require_cfg(r.size() == rate_arity,
                    "rate tuples for scheme " + cfg.scheme + " must have " +
                        std::to_string(rate_arity) + " entries");
    for (const auto& m : cfg.grid.messages)
        require_cfg(m.size() == msg_arity,
                    "message tuples for scheme " + cfg.scheme + " must have " +
                        std::to_string(msg_arity) + " entries");
    require_cfg(cfg.grid.mu.empty() || cfg.scheme == "dmc",
                "the mu axis applies only to the dmc scheme");
    require_cfg(cfg.criterion == "avg" || cfg.criterion == "max",
                "criterion must be avg or max");
    std::vector<std::uint64_t> sorted_seeds = cfg.seeds;
    std::sort(sorted_seeds.begin(), sorted_seeds.end());
    require_cfg(std::adjacent_find(sorted_seeds.begin(), sorted_seeds.end()) ==
                    sorted_seeds.end(),
                "seeds must be distinct");
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    const std::string base = fs::path(path).parent_path().string();
    return parse_config_text(read_file(path), base);
}

std::string config_hash(const ExperimentConfig& cfg) {
    const std::string canon = canonical_config_json(cfg).dump();
    const std::string channel_bytes = read_file(cfg.channel_path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    h = fnv1a(h, canon.data(), canon.size());
    h = fnv1a(h, channel_bytes.data(), channel_bytes.size());
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

std::int64_t grid_point_count(const ExperimentConfig& cfg) {
    const std::int64_t mu = cfg.grid.mu.empty()
                                ? 1
                                : static_cast<std::int64_t>(cfg.grid.mu.size());
    return static_cast<std::int64_t>(cfg.grid.n.size()) *
           static_cast<std::int64_t>(cfg.grid.rates.size()) *
           static_cast<std::int64_t>(cfg.grid.messages.size()) *
           static_cast<std::int64_t>(cfg.grid.eps.size()) * mu;
}

GridPoint grid_point_at(const ExperimentConfig& cfg, std::int64_t index) {
    require_cfg(index >= 0 && index < grid_point_count(cfg),
                "grid index out of range");
    const std::int64_t mu_size =
        cfg.grid.mu.empty() ? 1 : static_cast<std::int64_t>(cfg.grid.mu.size());
    GridPoint pt;
    pt.index = index;
    std::int64_t rest = index;
    const std::int64_t i_mu = rest % mu_size;
    rest /= mu_size;
    const std::int64_t i_eps = rest % static_cast<std::int64_t>(cfg.grid.eps.size());
    rest /= static_cast<std::int64_t>(cfg.grid.eps.size());
    const std::int64_t i_msg = rest % static_cast<std::int64_t>(cfg.grid.messages.size());
    rest /= static_cast<std::int64_t>(cfg.grid.messages.size());
    const std::int64_t i_rate = rest % static_cast<std::int64_t>(cfg.grid.rates.size());
    rest /= static_cast<std::int64_t>(cfg.grid.rates.size());
    pt.n = cfg.grid.n[static_cast<std::size_t>(rest)];
    pt.rates = cfg.grid.rates[static_cast<std::size_t>(i_rate)];
    pt.messages = cfg.grid.messages[static_cast<std::size_t>(i_msg)];
    pt.eps = cfg.grid.eps[static_cast<std::size_t>(i_eps)];
    if (!cfg.grid.mu.empty()) pt.mu = cfg.grid.mu[static_cast<std::size_t>(i_mu)];
    return pt;
}

std::vector<std::string> validate_config(const ExperimentConfig& cfg, const Channel& ch) {
    const auto [rate_arity, msg_arity] = scheme_arity(cfg.scheme);
    (void)rate_arity;
    (void)msg_arity;
    const std::string kind = channel_kind(ch);
    if (cfg.scheme == "dmc")
        require_cfg(kind == "dmc", "scheme dmc needs a single-receiver channel");
    else if (cfg.scheme == "bc3")
        require_cfg(kind == "bc3", "scheme bc3 needs a three-receiver channel");
    else
        require_cfg(kind == "bc2",
                    "scheme " + cfg.scheme + " needs a two-receiver channel");

    std::vector<std::string> issues;
    const std::int64_t points = grid_point_count(cfg);
    const Pmf pmf = input_law(cfg, std::visit([](const auto& w) {
                        return w.input_size();
                    }, ch));
    for (std::int64_t i = 0; i < points; ++i) {
        const GridPoint pt = grid_point_at(cfg, i);
        std::vector<std::string> flags;
        if (cfg.scheme == "dmc")
            flags = validate_dmc_params(dmc_params(pt, pmf, 0), std::get<Dmc>(ch));
        else if (cfg.scheme == "bc")
            flags = validate_bc_params(bc_params(pt, pmf, 0), std::get<Bc2>(ch));
        else if (cfg.scheme == "bc3")
            flags = validate_bc3_params(bc3_params(pt, pmf, 0), std::get<Bc3>(ch));
        else if (cfg.scheme == "cm")
            flags = validate_cm_params(cm_params(pt, pmf, 0), std::get<Bc2>(ch));
        else
            flags = validate_fb_params(fb_params(cfg, pt, pmf, 0), std::get<Bc2>(ch));
        for (const std::string& f : flags)
            issues.push_back("grid point " + std::to_string(i) + ": " + f);
    }
    return issues;
}

std::string run_record_csv_header() {
    return "config_hash,scheme,grid_index,seed,n,status,detail,"
           "y_max_missed,y_max_wrong,z_max_missed,z_max_wrong,"
           "w_max_missed,w_max_wrong,gmu_pass";
}

std::string run_record_to_csv(const RunRecord& rec) {
    std::ostringstream os;
    os << sanitize_field(rec.config_hash) << ',' << sanitize_field(rec.scheme) << ','
       << rec.grid_index << ',' << rec.seed << ',' << rec.n << ','
       << sanitize_field(rec.status) << ',' << sanitize_field(rec.detail) << ','
       << opt_to_csv(rec.y_max_missed) << ',' << opt_to_csv(rec.y_max_wrong) << ','
       << opt_to_csv(rec.z_max_missed) << ',' << opt_to_csv(rec.z_max_wrong) << ','
       << opt_to_csv(rec.w_max_missed) << ',' << opt_to_csv(rec.w_max_wrong) << ',';
    if (rec.gmu_pass) os << (*rec.gmu_pass ? '1' : '0');
    return os.str();
}

namespace {

std::optional<RunRecord> parse_record_csv(const std::string& line) {
    const std::vector<std::string> f = split_csv(line);
    if (f.size() != 14) return std::nullopt;
    try {
        RunRecord rec;
        rec.config_hash = f[0];
        rec.scheme = f[1];
        rec.grid_index = std::stoll(f[2]);
        rec.seed = std::stoull(f[3]);
        rec.n = std::stoi(f[4]);
        rec.status = f[5];
        rec.detail = f[6];
        rec.y_max_missed = parse_opt(f[7]);
        rec.y_max_wrong = parse_opt(f[8]);
        rec.z_max_missed = parse_opt(f[9]);
        rec.z_max_wrong = parse_opt(f[10]);
        rec.w_max_missed = parse_opt(f[11]);
        rec.w_max_wrong = parse_opt(f[12]);
        if (!f[13].empty()) rec.gmu_pass = f[13] == "1";
        return rec;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

}  // namespace

SweepResult run_sweep(const ExperimentConfig& cfg, int jobs) {
    const Channel ch = load_channel(cfg.channel_path);
    const std::vector<std::string> issues = validate_config(cfg, ch);
    if (!issues.empty()) {
        std::string msg = "config: grid points failed validation:";
        for (const std::string& s : issues) msg += "\n  " + s;
        throw std::invalid_argument(msg);
    }
    const std::string hash = config_hash(cfg);
    const std::int64_t points = grid_point_count(cfg);

    SweepResult result;
    result.records.resize(static_cast<std::size_t>(points) * cfg.seeds.size());

    // Restore finished records from a previous run of the same config.
    std::map<std::pair<std::int64_t, std::uint64_t>, RunRecord> done;
    if (!cfg.output_path.empty() && fs::exists(cfg.output_path)) {
        std::ifstream in(cfg.output_path);
        std::string line;
        if (in && std::getline(in, line) && line == run_record_csv_header()) {
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                const auto rec = parse_record_csv(line);
                if (rec && rec->config_hash == hash)
                    done.emplace(std::make_pair(rec->grid_index, rec->seed), *rec);
            }
        }
    }

    std::vector<std::size_t> pending;
    for (std::int64_t i = 0; i < points; ++i) {
        for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
            const std::size_t slot =
                static_cast<std::size_t>(i) * cfg.seeds.size() + s;
            const auto it = done.find({i, cfg.seeds[s]});
            if (it != done.end()) {
                result.records[slot] = it->second;
                ++result.reused;
            } else {
                pending.push_back(slot);
            }
        }
    }

    const auto run_slot = [&](std::size_t slot) {
        const std::int64_t i = static_cast<std::int64_t>(slot / cfg.seeds.size());
        const std::uint64_t seed = cfg.seeds[slot % cfg.seeds.size()];
        result.records[slot] = compute_record(cfg, ch, hash, grid_point_at(cfg, i), seed);
    };

    const int workers =
        std::min<int>(resolve_jobs(jobs), static_cast<int>(std::max<std::size_t>(
                                              pending.size(), 1)));
    if (workers <= 1) {
        for (const std::size_t slot : pending) run_slot(slot);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(workers));
        for (int t = 0; t < workers; ++t)
            threads.emplace_back([&]() {
                while (true) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= pending.size()) break;
                    run_slot(pending[i]);
                }
            });
        for (std::thread& t : threads) t.join();
    }
    result.computed = static_cast<std::int64_t>(pending.size());
    for (const RunRecord& rec : result.records)
        if (rec.status != "ok") result.all_ok = false;

    if (!cfg.output_path.empty()) {
        const fs::path out(cfg.output_path);
        if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
        std::ofstream os(cfg.output_path, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write sweep output: " + cfg.output_path);
        os << run_record_csv_header() << '\n';
        for (const RunRecord& rec : result.records) os << run_record_to_csv(rec) << '\n';
        if (!os) throw std::runtime_error("short write on sweep output: " + cfg.output_path);

        nlohmann::json meta;
        meta["format"] = "idbc-sweep-meta";
        meta["version"] = 1;
        meta["config_hash"] = hash;
        meta["config"] = canonical_config_json(cfg);
        const std::string meta_path = cfg.output_path + ".meta.json";
        std::ofstream ms(meta_path, std::ios::binary);
        if (!ms) throw std::runtime_error("cannot write sweep metadata: " + meta_path);
        ms << meta.dump(2) << '\n';
        if (!ms) throw std::runtime_error("short write on sweep metadata: " + meta_path);
    }
    return result;
}

namespace {

struct QuantityAccessor {
    const char* name;
    std::optional<double> RunRecord::* field;
};

constexpr QuantityAccessor k_quantities[] = {
    {"y_max_missed", &RunRecord::y_max_missed},
    {"y_max_wrong", &RunRecord::y_max_wrong},
    {"z_max_missed", &RunRecord::z_max_missed},
    {"z_max_wrong", &RunRecord::z_max_wrong},
    {"w_max_missed", &RunRecord::w_max_missed},
    {"w_max_wrong", &RunRecord::w_max_wrong},
};

double median_of_sorted(const std::vector<double>& v) {
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

Summary summarize(const ExperimentConfig& cfg, const std::vector<RunRecord>& records) {
    Summary out;
    std::map<std::int64_t, std::vector<const RunRecord*>> by_point;
    for (const RunRecord& r : records) by_point[r.grid_index].push_back(&r);

    // group index = position within the non-n axes (n is the outermost axis).
    const std::int64_t mu_size =
        cfg.grid.mu.empty() ? 1 : static_cast<std::int64_t>(cfg.grid.mu.size());
    const std::int64_t inner = static_cast<std::int64_t>(cfg.grid.rates.size()) *
                               static_cast<std::int64_t>(cfg.grid.messages.size()) *
                               static_cast<std::int64_t>(cfg.grid.eps.size()) * mu_size;

    // (group, quantity) -> list of (n, median)
    std::map<std::pair<std::int64_t, std::string>, std::vector<std::pair<int, double>>>
        trend;

    for (const auto& [idx, recs] : by_point) {
        PointSummary ps;
        ps.grid_index = idx;
        ps.n = recs.front()->n;
        for (const RunRecord* r : recs)
            if (r->status != "ok") ++ps.failed;
        out.failed_records += ps.failed;

        for (const QuantityAccessor& q : k_quantities) {
            std::vector<double> vals;
            for (const RunRecord* r : recs)
                if (r->status == "ok" && (r->*q.field)) vals.push_back(*(r->*q.field));
            if (vals.empty()) continue;
            std::sort(vals.begin(), vals.end());
            QuantityStats st;
            st.quantity = q.name;
            st.count = static_cast<std::int64_t>(vals.size());
            st.median = median_of_sorted(vals);
            const double cnt = static_cast<double>(vals.size());
            const double mid = (cnt - 1.0) / 2.0;
            const double spread = 0.98 * std::sqrt(cnt);
            const auto lo = static_cast<std::size_t>(
                std::clamp(std::floor(mid - spread), 0.0, cnt - 1.0));
            const auto hi = static_cast<std::size_t>(
                std::clamp(std::ceil(mid + spread), 0.0, cnt - 1.0));
            st.ci_low = vals[lo];
            st.ci_high = vals[hi];
            ps.stats.push_back(st);
            if (inner > 0)
                trend[{idx % inner, q.name}].emplace_back(ps.n, st.median);
        }
        out.points.push_back(std::move(ps));
    }

    for (auto& [key, pts] : trend) {
        std::vector<std::pair<int, double>> usable;
        for (const auto& [n, med] : pts)
            if (med > 0.0 && med < 0.5) usable.emplace_back(n, std::log(med));
        if (usable.size() < 2) continue;
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        for (const auto& [n, ln_med] : usable) {
            const double x = static_cast<double>(n);
            sx += x;
            sy += ln_med;
            sxx += x * x;
            sxy += x * ln_med;
        }
        const double cnt = static_cast<double>(usable.size());
        const double denom = cnt * sxx - sx * sx;
        if (denom == 0.0) continue;
        SlopeFit fit;
        fit.group = key.first;
        fit.quantity = key.second;
        fit.slope = (cnt * sxy - sx * sy) / denom;
        fit.intercept = (sy - fit.slope * sx) / cnt;
        fit.points_used = static_cast<std::int64_t>(usable.size());
        out.slopes.push_back(fit);
    }
    return out;
}

}  // namespace idbc
