#include "toaloha/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "toaloha/analysis.hpp"
#include "toaloha/detail/parallel.hpp"
#include "toaloha/fcfs.hpp"

namespace toaloha::harness {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const char* const kNumericKeys[] = {
    "K",         "alpha",     "T",          "n",         "p",         "lambda",    "load",
    "q",         "theta",     "kappa",      "horizon",   "warmup",    "sample_every",
    "beta_N",    "beta_a",    "beta_b",     "beta_TA",   "beta_IA",   "beta_exact",
    "step_base", "step_size", "step_period", "step_peak",
};
const char* const kTextKeys[] = {"id", "policy", "traffic", "increment"};

bool is_numeric_key(const std::string& k)
{
    return std::find(std::begin(kNumericKeys), std::end(kNumericKeys), k) != std::end(kNumericKeys);
}
bool is_text_key(const std::string& k)
{
    return std::find(std::begin(kTextKeys), std::end(kTextKeys), k) != std::end(kTextKeys);
}

std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string at_line(int line) { return "line " + std::to_string(line) + ": "; }

double parse_double(const std::string& text, const std::string& where)
{
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v))
        throw ConfigError(where + "'" + text + "' is not a number");
    return v;
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, sep))
        out.push_back(trim(tok));
    return out;
}

std::string format_value(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

// Expands "a:step:b", "x, y, z" or a single value.
std::vector<std::string> expand_values(const std::string& key, const std::string& value, int line)
{
    const std::string where = at_line(line) + "key '" + key + "': ";
    if (is_numeric_key(key) && value.find(':') != std::string::npos) {
        const auto parts = split(value, ':');
        if (parts.size() != 3)
            throw ConfigError(where + "range must be start:step:stop");
        const double a = parse_double(parts[0], where);
        const double step = parse_double(parts[1], where);
        const double b = parse_double(parts[2], where);
        if (!(step > 0.0) || b < a)
            throw ConfigError(where + "range needs step > 0 and stop >= start");
        const auto count = static_cast<std::int64_t>(std::floor((b - a) / step + 1e-9)) + 1;
        if (count > 100000)
            throw ConfigError(where + "range expands to more than 100000 values");
        std::vector<std::string> out;
        for (std::int64_t i = 0; i < count; ++i)
            out.push_back(format_value(a + static_cast<double>(i) * step));
        return out;
    }
    auto out = split(value, ',');
    for (const auto& v : out) {
        if (v.empty())
            throw ConfigError(where + "empty list element");
        if (is_numeric_key(key))
            parse_double(v, where);
    }
    if (out.size() > 1 && key != "policy" && !is_numeric_key(key))
        throw ConfigError(where + "only numeric keys and policy accept lists");
    return out;
}

struct Section {
    int line = 0;
    std::vector<std::pair<std::string, int>> order; // key, line
    std::map<std::string, std::vector<std::string>> values;
};

class Point {
public:
    Point(const Section& sec, std::map<std::string, std::string> kv) : sec_(sec), kv_(std::move(kv)) {}

    bool has(const std::string& k) const { return kv_.count(k) != 0; }

    std::string text(const std::string& k, const std::string& fallback) const
    {
        const auto it = kv_.find(k);
        return it == kv_.end() ? fallback : it->second;
    }

    double num(const std::string& k, double fallback) const
    {
        const auto it = kv_.find(k);
        return it == kv_.end() ? fallback : parse_double(it->second, where(k));
    }

    std::int64_t integer(const std::string& k, std::int64_t fallback) const
    {
        const double v = num(k, static_cast<double>(fallback));
        if (v != std::floor(v) || std::abs(v) > 9.0e15)
            throw ConfigError(where(k) + "expected an integer");
        return static_cast<std::int64_t>(v);
    }

    std::string where(const std::string& k) const
    {
        for (const auto& [key, line] : sec_.order)
            if (key == k)
                return at_line(line) + "key '" + k + "': ";
        return at_line(sec_.line) + "key '" + k + "': ";
    }

private:
    const Section& sec_;
    std::map<std::string, std::string> kv_;
};

template <class Fn>
auto with_key(const Point& pt, const std::string& key, Fn&& fn)
{
    try {
        return fn();
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        if (msg.rfind("line ", 0) == 0)
            throw;
        throw ConfigError(pt.where(key) + msg);
    }
}

CollisionIncrement parse_increment(const Point& pt)
{
    const auto v = pt.text("increment", "derived");
    if (v == "derived")
        return CollisionIncrement::Derived;
    if (v == "printed")
        return CollisionIncrement::AsPrinted;
    throw ConfigError(pt.where("increment") + "expected derived or printed");
}

ScenarioSpec build_point(const Section& sec, const Point& pt, std::int64_t index)
{
    ScenarioSpec spec;
    spec.index = index;
    spec.line = sec.line;
    spec.label = pt.text("id", "scenario" + std::to_string(sec.line));

    const std::string policy = pt.text("policy", "fixed");
    spec.fcfs = policy == "fcfs";
    const int K = spec.fcfs ? 1 : static_cast<int>(pt.integer("K", 1));
    const double alpha = spec.fcfs ? 0.0 : pt.num("alpha", 0.0);
    const double T = pt.num("T", 1.0);

    Scenario& sc = spec.scenario;
    sc.cfg = with_key(pt, pt.has("alpha") ? "alpha" : "K", [&] { return derive_slot_params(K, alpha, T); });

    const double theta = pt.num("theta", 0.99);
    const double kappa = pt.num("kappa", 0.0);
    if (policy == "fixed" || spec.fcfs)
        sc.policy = FixedP{pt.num("p", 0.1)};
    else if (policy == "bayes_p")
        sc.policy = BayesP{theta, kappa, parse_increment(pt)};
    else if (policy == "bayes_window")
        sc.policy = BayesWindow{theta, kappa, parse_increment(pt)};
    else if (policy == "genie")
        sc.policy = Genie{};
    else
        throw ConfigError(pt.where("policy") + "unknown policy '" + policy +
                          "' (fixed, bayes_p, bayes_window, genie, fcfs)");
    with_key(pt, "policy", [&] {
        validate(sc.policy);
        return 0;
    });

    const std::string traffic = pt.text("traffic", "saturated");
    if (traffic == "saturated") {
        sc.traffic = traffic::Saturated{pt.integer("n", 10)};
    } else if (traffic == "poisson") {
        double lambda = pt.num("lambda", 0.0);
        if (pt.has("load")) {
            if (pt.has("lambda"))
                throw ConfigError(pt.where("load") + "give either lambda or load, not both");
            spec.load = pt.num("load", 0.0);
            const double capacity =
                spec.fcfs ? kFcfsCapacity : sc.cfg.gamma * analysis::optimal_kappa(sc.cfg.K).tau_star;
            lambda = *spec.load * capacity;
        }
        sc.traffic = traffic::Poisson{lambda};
    } else if (traffic == "stepped") {
        traffic::SteppedLambda s;
        s.base = pt.num("step_base", s.base);
        s.step = pt.num("step_size", s.step);
        s.period_slots = pt.integer("step_period", s.period_slots);
        s.peak = pt.num("step_peak", s.peak);
        sc.traffic = s;
    } else if (traffic == "beta") {
        traffic::BetaActivation b;
        b.N = pt.integer("beta_N", b.N);
        b.a = pt.num("beta_a", b.a);
        b.b = pt.num("beta_b", b.b);
        b.T_A = pt.num("beta_TA", b.T_A);
        b.I_A = pt.integer("beta_IA", b.I_A);
        b.exact_count = pt.integer("beta_exact", 0) != 0;
        sc.traffic = b;
    } else {
        throw ConfigError(pt.where("traffic") + "unknown traffic '" + traffic +
                          "' (saturated, poisson, stepped, beta)");
    }
    with_key(pt, "traffic", [&] {
        traffic::validate(sc.traffic);
        return 0;
    });
    if (spec.fcfs && traffic == "saturated")
        throw ConfigError(pt.where("traffic") + "fcfs needs arrival timestamps, not saturated traffic");

    sc.horizon = pt.integer("horizon", 100000);
    sc.warmup = pt.integer("warmup", 1000);
    sc.q = pt.num("q", 0.0);
    sc.sample_every = pt.integer("sample_every", 100);
    if (sc.horizon < 1)
        throw ConfigError(pt.where("horizon") + "must be >= 1");
    if (sc.warmup < 0 || sc.warmup >= sc.horizon)
        throw ConfigError(pt.where("warmup") + "must satisfy 0 <= warmup < horizon");
    if (!(sc.q >= 0.0 && sc.q <= 1.0))
        throw ConfigError(pt.where("q") + "must lie in [0, 1]");
    if (sc.sample_every < 1)
        throw ConfigError(pt.where("sample_every") + "must be >= 1");
    return spec;
}

void expand_section(const Section& sec, ExperimentSpec& spec)
{
    std::vector<std::string> keys;
    for (const auto& [k, line] : sec.order)
        keys.push_back(k);
    std::vector<std::size_t> pos(keys.size(), 0);
    while (true) {
        std::map<std::string, std::string> kv;
        for (std::size_t i = 0; i < keys.size(); ++i)
            kv[keys[i]] = sec.values.at(keys[i])[pos[i]];
        const Point pt(sec, std::move(kv));
        spec.scenarios.push_back(build_point(sec, pt, static_cast<std::int64_t>(spec.scenarios.size())));

        // Odometer: the last key varies fastest.
        bool done = true;
        for (std::size_t i = keys.size(); i-- > 0;) {
            if (++pos[i] < sec.values.at(keys[i]).size()) {
                done = false;
                break;
            }
            pos[i] = 0;
        }
        if (done)
            return;
    }
}

double predicted_capacity(const ScenarioSpec& pt)
{
    const auto& sc = pt.scenario;
    if (pt.fcfs)
        return kFcfsCapacity;
    if (std::holds_alternative<FixedP>(sc.policy))
        return kNaN; // unstable for any fixed p
    const auto best = analysis::max_throughput_poisson(sc.q, sc.cfg);
    return best.value;
}

} // namespace

ExperimentSpec parse_spec(std::string_view text)
{
    ExperimentSpec spec;
    std::vector<Section> sections;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        auto hash = raw.find('#');
        std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty())
            continue;
        if (s.front() == '[') {
            if (s != "[scenario]")
                throw ConfigError(at_line(line) + "unknown section '" + s + "'");
            sections.push_back({});
            sections.back().line = line;
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError(at_line(line) + "expected key = value");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError(at_line(line) + "expected key = value");

        if (sections.empty()) {
            const std::string where = at_line(line) + "key '" + key + "': ";
            if (key == "seed") {
                std::uint64_t v = 0;
                const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
                if (ec != std::errc() || ptr != value.data() + value.size())
                    throw ConfigError(where + "expected an unsigned integer");
                spec.base_seed = v;
            } else if (key == "replications") {
                const double v = parse_double(value, where);
                if (v < 1 || v != std::floor(v) || v > 1e6)
                    throw ConfigError(where + "must be a positive integer");
                spec.replications = static_cast<int>(v);
            } else if (key == "output") {
                spec.output = value;
            } else if (key == "threads") {
                const double v = parse_double(value, where);
                if (v < 0 || v != std::floor(v) || v > 1024)
                    throw ConfigError(where + "must be an integer in [0, 1024]");
                spec.threads = static_cast<unsigned>(v);
            } else {
                throw ConfigError(where + "unknown global key");
            }
            continue;
        }

        auto& sec = sections.back();
        if (!is_numeric_key(key) && !is_text_key(key))
            throw ConfigError(at_line(line) + "unknown key '" + key + "'");
        if (sec.values.count(key) != 0)
            throw ConfigError(at_line(line) + "duplicate key '" + key + "'");
        sec.order.emplace_back(key, line);
        sec.values[key] = expand_values(key, value, line);
    }
    for (const auto& sec : sections)
        expand_section(sec, spec);
    return spec;
}

ExperimentSpec load_spec(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_spec(ss.str());
}

std::uint64_t point_seed(std::uint64_t base_seed, std::int64_t index, int replication)
{
    return base_seed ^ (static_cast<std::uint64_t>(index) | (static_cast<std::uint64_t>(replication) << 32));
}

ResultRow run_point(const ScenarioSpec& point, std::uint64_t seed, int replication)
{
    ResultRow row;
    Scenario sc = point.scenario;
    sc.seed = seed;
    row.scenario_id = point.index;
    row.replication = replication;
    row.seed = seed;
    row.label = point.label;
    row.policy = point.fcfs ? "fcfs" : policy_name(sc.policy);
    row.traffic = traffic::traffic_name(sc.traffic);
    row.K = sc.cfg.K;
    row.alpha = sc.cfg.alpha;
    row.q = sc.q;
    row.lambda = kNaN;
    row.n = kNaN;
    row.p = kNaN;
    row.kappa = kNaN;
    row.avg_delay = row.avg_backlog = row.mean_monitoring = kNaN;
    row.predicted_throughput = row.predicted_delay = kNaN;

    try {
        if (const auto* s = std::get_if<traffic::Saturated>(&sc.traffic))
            row.n = static_cast<double>(s->n);
        if (const auto* p = std::get_if<traffic::Poisson>(&sc.traffic))
            row.lambda = p->lambda;
        if (const auto* f = std::get_if<FixedP>(&sc.policy); f != nullptr && !point.fcfs)
            row.p = f->p;
        if (const auto* b = std::get_if<BayesP>(&sc.policy))
            row.kappa = b->kappa > 0.0 ? b->kappa : analysis::optimal_kappa(sc.cfg.K).kappa;
        if (const auto* b = std::get_if<BayesWindow>(&sc.policy))
            row.kappa = b->kappa > 0.0 ? b->kappa : analysis::optimal_kappa(sc.cfg.K).kappa;

        // Closed-form predictions where one exists.
        if (!std::isnan(row.n)) {
            const auto n = static_cast<std::int64_t>(row.n);
            double p = row.p;
            if (std::holds_alternative<Genie>(sc.policy))
                p = analysis::optimal_p_for_n(n, sc.cfg);
            if (!std::isnan(p)) {
                row.predicted_throughput = analysis::throughput_with_misdetection(
                    analysis::PopulationMode::Finite, n, p, sc.q, sc.cfg);
                if (row.predicted_throughput > 0.0)
                    row.predicted_delay = row.n / row.predicted_throughput;
            }
        } else if (!std::isnan(row.lambda)) {
            const double cap = predicted_capacity(point);
            if (!std::isnan(cap) && row.lambda < cap)
                row.predicted_throughput = row.lambda;
        }

        const MetricsRecord m = point.fcfs ? simulate_fcfs(sc) : simulate(sc);
        row.slots = m.slots_elapsed;
        row.throughput = m.throughput;
        row.avg_delay = m.avg_delay;
        row.avg_backlog = m.avg_backlog;
        row.mean_monitoring = m.mean_monitoring;
        row.service_completion_slot = m.service_completion_slot;
    } catch (const std::exception& e) {
        row.error = e.what();
    }
    return row;
}

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec)
{
    const auto reps = static_cast<std::size_t>(spec.replications);
    const auto total = spec.scenarios.size() * reps;
    return detail::parallel_map<ResultRow>(total, spec.threads, [&](std::size_t i) {
        const auto& point = spec.scenarios[i / reps];
        const int rep = static_cast<int>(i % reps);
        return run_point(point, point_seed(spec.base_seed, point.index, rep), rep);
    });
}

std::string csv_number(double x)
{
    if (std::isnan(x))
        return {};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

std::string csv_header()
{
    return "scenario_id,replication,seed,label,policy,traffic,K,alpha,q,lambda,n,p,kappa,slots,throughput,"
           "avg_delay,avg_backlog,mean_monitoring,service_completion_slot,predicted_throughput,"
           "predicted_delay,error";
}

namespace {

std::string csv_text(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

} // namespace

std::string csv_row(const ResultRow& r)
{
    std::ostringstream os;
    os << r.scenario_id << ',' << r.replication << ',' << r.seed << ',' << csv_text(r.label) << ','
       << r.policy << ',' << r.traffic << ',' << r.K << ',' << csv_number(r.alpha) << ',' << csv_number(r.q)
       << ',' << csv_number(r.lambda) << ',' << csv_number(r.n) << ',' << csv_number(r.p) << ','
       << csv_number(r.kappa) << ',' << r.slots << ',' << csv_number(r.throughput) << ','
       << csv_number(r.avg_delay) << ',' << csv_number(r.avg_backlog) << ',' << csv_number(r.mean_monitoring)
       << ',';
    if (r.service_completion_slot)
        os << *r.service_completion_slot;
    os << ',' << csv_number(r.predicted_throughput) << ',' << csv_number(r.predicted_delay) << ','
       << csv_text(r.error);
    return os.str();
}

void write_csv(std::ostream& os, const std::vector<ResultRow>& rows)
{
    os << csv_header() << '\n';
    for (const auto& r : rows)
        os << csv_row(r) << '\n';
}

} // namespace toaloha::harness
