#include "thermoflow/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>

#include "thermoflow/galerkin.hpp"

namespace thermoflow {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::optional<double> to_double(std::string_view s) {
    double x = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return x;
}

std::optional<long> to_long(std::string_view s) {
    long x = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return x;
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i)
        if (i == s.size() || s[i] == sep) {
            out.push_back(trim(s.substr(start, i - start)));
            start = i + 1;
        }
    return out;
}

class ExpressionParser {
public:
    ExpressionParser(std::string_view text, int dim) : s_(text), dim_(dim) {}

    Expression::Term next_term(bool& is_constant) {
        Expression::Term term;
        bool any = false;
        is_constant = true;
        while (true) {
            skip_space();
            if (peek_word("sin") || peek_word("cos")) {
                term.factors.push_back(factor());
                is_constant = false;
            } else if (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.') {
                term.coefficient *= number();
            } else if (peek_pi()) {
                consume_pi();
                term.coefficient *= std::numbers::pi;
            } else {
                fail(any ? "expected a number or sin/cos factor after '*'" : "expected a term");
            }
            any = true;
            skip_space();
            if (peek() == '*') {
                ++pos_;
                continue;
            }
            // Juxtaposition such as "0.5cos(...)" multiplies as well.
            if (peek_word("sin") || peek_word("cos")) continue;
            return term;
        }
    }

    void parse(double& constant, std::vector<Expression::Term>& terms) {
        skip_space();
        if (done()) fail("empty expression");
        double sign = 1;
        if (peek() == '+' || peek() == '-') sign = s_[pos_++] == '-' ? -1 : 1;
        while (true) {
            bool is_constant = false;
            Expression::Term t = next_term(is_constant);
            t.coefficient *= sign;
            if (is_constant)
                constant += t.coefficient;
            else
                terms.push_back(std::move(t));
            skip_space();
            if (done()) return;
            const char c = s_[pos_++];
            if (c != '+' && c != '-') fail(std::string("unexpected character '") + c + "'");
            sign = c == '-' ? -1 : 1;
        }
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw InvalidInput("expression '" + std::string(s_) + "': " + what + " at offset " + std::to_string(pos_));
    }

    bool done() const { return pos_ >= s_.size(); }
    char peek() const { return done() ? '\0' : s_[pos_]; }
    void skip_space() {
        while (!done() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool peek_word(std::string_view w) const { return s_.substr(pos_, w.size()) == w; }
    bool peek_pi() const { return peek_word("pi") || peek_word("\xCF\x80"); }
    void consume_pi() { pos_ += 2; }  // "pi" and the UTF-8 encoding of the Greek letter are both two bytes

    double number() {
        const char* first = s_.data() + pos_;
        double x = 0;
        const auto [ptr, ec] = std::from_chars(first, s_.data() + s_.size(), x);
        if (ec != std::errc()) fail("malformed number");
        pos_ += static_cast<std::size_t>(ptr - first);
        return x;
    }

    // sin( [k] [*] pi [*] var )
    Expression::Factor factor() {
        Expression::Factor f;
        f.is_sin = peek_word("sin");
        pos_ += 3;
        skip_space();
        if (peek() != '(') fail("expected '(' after sin/cos");
        ++pos_;
        skip_space();
        f.k = 1;
        if (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.') {
            f.k = number();
            skip_space();
            if (peek() == '*') ++pos_;
            skip_space();
        }
        if (!peek_pi()) fail("sin/cos argument must have the form k*pi*x");
        consume_pi();
        skip_space();
        if (peek() == '*') ++pos_;
        skip_space();
        const char v = peek();
        if (v != 'x' && v != 'y' && v != 'z') fail("expected variable x, y or z");
        f.axis = v - 'x';
        if (f.axis >= dim_) fail(std::string("variable ") + v + " is not available in " + std::to_string(dim_) + "D");
        ++pos_;
        skip_space();
        if (peek() != ')') fail("expected ')'");
        ++pos_;
        return f;
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    int dim_;
};

const std::map<std::string, std::map<std::string, std::string>>& presets() {
    static const std::map<std::string, std::map<std::string, std::string>> p = {
        {"reference1d",
         {{"dim", "1"},
          {"n_points", "257"},
          {"lengths", "1"},
          {"mu", "1"},
          {"dt", "0.001"},
          {"t_end", "200"},
          {"record_every", "10"},
          {"u0", "0"},
          {"v0", "0.2*sin(pi*x)"},
          {"theta0", "1 + 0.3*cos(pi*x)"}}},
        {"decoupled",
         {{"dim", "1"},
          {"n_points", "257"},
          {"lengths", "1"},
          {"mu", "0"},
          {"dt", "0.001"},
          {"t_end", "200"},
          {"record_every", "10"},
          {"u0", "0"},
          {"v0", "0.2*sin(pi*x)"},
          {"theta0", "1 + 0.3*cos(pi*x)"}}},
        {"equilibrium",
         {{"dim", "1"}, {"n_points", "33"}, {"t_end", "1"}, {"u0", "0"}, {"v0", "0"}, {"theta0", "1"}}},
    };
    return p;
}

const std::map<std::string, std::string>& base_defaults() {
    static const std::map<std::string, std::string> d = {
        {"dim", "1"},           {"n_points", "65"},   {"lengths", "1"},         {"mu", "1"},
        {"dt", "0.001"},        {"t_end", "1"},       {"heat_form", "theta"},   {"galerkin_modes", "none"},
        {"record_every", "1"},  {"solver_tol", "1e-10"}, {"u0", "0"},           {"v0", "0"},
        {"theta0", "1"},        {"seed", "0"},        {"snapshot_every", "0"},  {"coupling_passes", "2"},
    };
    return d;
}

struct EntryTable {
    std::map<std::string, ConfigEntry> map;

    const ConfigEntry& at(const std::string& key) const { return map.at(key); }
    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        const auto& e = at(key);
        throw ParseError(key + " = " + e.value + ": " + what, e.line);
    }

    double real(const std::string& key) const {
        const auto v = to_double(at(key).value);
        if (!v || !std::isfinite(*v)) fail(key, "expected a real number");
        return *v;
    }
    long integer(const std::string& key) const {
        const auto v = to_long(at(key).value);
        if (!v) fail(key, "expected an integer");
        return *v;
    }
    template <typename T, typename Conv>
    std::array<T, 3> per_axis(const std::string& key, int dim, Conv conv, T pad) const {
        const auto parts = split(at(key).value, ',');
        if (parts.size() != 1 && static_cast<int>(parts.size()) != dim)
            fail(key, "expected 1 or " + std::to_string(dim) + " comma-separated values");
        std::array<T, 3> out{pad, pad, pad};
        for (int a = 0; a < dim; ++a) {
            const auto v = conv(parts[parts.size() == 1 ? 0 : static_cast<std::size_t>(a)]);
            if (!v) fail(key, "expected numeric values");
            out[static_cast<std::size_t>(a)] = static_cast<T>(*v);
        }
        return out;
    }
};

ScalarField<double> sample_expression(const Grid<double>& g, const Expression& e, BoundaryTag tag) {
    return ScalarField<double>::sample(g, [&](const std::array<double, 3>& x) { return e(x); }, tag);
}

VectorField<double> vector_initial(const EntryTable& t, const std::string& key, const Grid<double>& g) {
    const auto& entry = t.at(key);
    const auto parts = split(entry.value, ';');
    std::vector<Expression> exprs;
    try {
        for (const auto& p : parts) exprs.push_back(Expression::parse(p, g.dim()));
    } catch (const InvalidInput& e) {
        t.fail(key, e.what());
    }
    if (exprs.size() == 1 && exprs[0].is_zero()) return VectorField<double>::zeros(g);
    if (static_cast<int>(exprs.size()) != g.dim())
        t.fail(key, "expected " + std::to_string(g.dim()) + " ';'-separated components");
    std::vector<ScalarField<double>> comps;
    for (int c = 0; c < g.dim(); ++c) {
        const Expression& e = exprs[static_cast<std::size_t>(c)];
        Vector<double> v(g.size());
        double scale = 1e-300;
        for (Index p = 0; p < g.size(); ++p) {
            v[p] = e(g.position(p));
            scale = std::max(scale, std::abs(v[p]));
        }
        for (Index p = 0; p < g.size(); ++p)
            if (g.on_boundary(p) && std::abs(v[p]) > 1e-12 * std::max(1.0, scale)) {
                const auto x = g.position(p);
                std::ostringstream msg;
                msg << "component " << c << " is " << v[p] << " at boundary point (" << x[0] << ", " << x[1] << ", "
                    << x[2] << "); u0 and v0 must vanish on the boundary";
                t.fail(key, msg.str());
            }
        ScalarField<double> f(g, std::move(v), BoundaryTag::DirichletZero);
        f.enforce_boundary();
        comps.push_back(std::move(f));
    }
    return VectorField<double>(std::move(comps));
}

std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

Expression Expression::parse(std::string_view text, int dim) {
    Expression e;
    ExpressionParser(text, dim).parse(e.constant_, e.terms_);
    return e;
}

double Expression::operator()(const std::array<double, 3>& x) const {
    double sum = constant_;
    for (const auto& t : terms_) {
        double v = t.coefficient;
        for (const auto& f : t.factors) {
            const double arg = f.k * std::numbers::pi * x[static_cast<std::size_t>(f.axis)];
            v *= f.is_sin ? std::sin(arg) : std::cos(arg);
        }
        sum += v;
    }
    return sum;
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "dim",          "n_points", "lengths", "mu", "dt", "t_end", "heat_form", "galerkin_modes", "record_every",
        "solver_tol",   "preset",   "u0",      "v0", "theta0", "seed", "snapshot_every", "coupling_passes"};
    return keys;
}

RunConfig parse_config(std::string_view text, const ConfigOverrides& overrides) {
    std::map<std::string, ConfigEntry> given;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    const auto& keys = config_keys();
    auto known = [&](const std::string& k) { return std::find(keys.begin(), keys.end(), k) != keys.end(); };
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (!known(key)) throw ParseError("unknown key '" + key + "'", line_no);
        if (value.empty()) throw ParseError("missing value for '" + key + "'", line_no);
        if (given.count(key)) throw ParseError("duplicate key '" + key + "'", line_no);
        given[key] = ConfigEntry{key, value, line_no};
    }
    for (const auto& [k, v] : overrides) {
        if (!known(k)) throw ParseError("unknown key '" + k + "'", 0);
        given[k] = ConfigEntry{k, v, 0};
    }

    EntryTable t;
    for (const auto& [k, v] : base_defaults()) t.map[k] = ConfigEntry{k, v, 0};
    std::string preset;
    if (auto it = given.find("preset"); it != given.end()) {
        preset = lowercase(it->second.value);
        const auto p = presets().find(preset);
        if (p == presets().end())
            throw ParseError("preset = " + it->second.value + ": expected reference1d, equilibrium or decoupled",
                             it->second.line);
        for (const auto& [k, v] : p->second) t.map[k] = ConfigEntry{k, v, it->second.line};
    }
    for (const auto& [k, e] : given)
        if (k != "preset") t.map[k] = e;

    const long dim = t.integer("dim");
    if (dim < 1 || dim > 3) t.fail("dim", "must be 1, 2 or 3");
    const int d = static_cast<int>(dim);
    const auto points = t.per_axis<Index>("n_points", d, to_long, Index(1));
    const auto lengths = t.per_axis<double>("lengths", d, to_double, 1.0);
    for (int a = 0; a < d; ++a) {
        if (points[static_cast<std::size_t>(a)] < 3) t.fail("n_points", "each axis needs at least 3 points");
        if (!(lengths[static_cast<std::size_t>(a)] > 0)) t.fail("lengths", "lengths must be positive");
    }
    const Grid<double> grid(d, points, lengths);

    SimConfig sim;
    sim.mu = t.real("mu");
    sim.dt = t.real("dt");
    if (!(sim.dt > 0)) t.fail("dt", "must be positive");
    sim.t_end = t.real("t_end");
    if (!(sim.t_end >= 0)) t.fail("t_end", "must be >= 0");
    const std::string form = lowercase(t.at("heat_form").value);
    if (form == "theta" || form == "thetaform")
        sim.heat_form = HeatForm::ThetaForm;
    else if (form == "tau" || form == "tauform")
        sim.heat_form = HeatForm::TauForm;
    else
        t.fail("heat_form", "expected theta or tau");
    const std::string modes = lowercase(t.at("galerkin_modes").value);
    if (modes == "full") {
        sim.galerkin_modes = grid.interior_size();
    } else if (modes != "none") {
        const long n = t.integer("galerkin_modes");
        if (n < 1 || n > grid.interior_size())
            t.fail("galerkin_modes", "must lie in [1, " + std::to_string(grid.interior_size()) + "]");
        sim.galerkin_modes = n;
    }
    sim.record_every = t.integer("record_every");
    if (sim.record_every < 1) t.fail("record_every", "must be >= 1");
    sim.solver.rel_tolerance = t.real("solver_tol");
    if (!(sim.solver.rel_tolerance > 0) || sim.solver.rel_tolerance > 1e-4) t.fail("solver_tol", "must lie in (0, 1e-4]");
    const long passes = t.integer("coupling_passes");
    if (passes < 1 || passes > 8) t.fail("coupling_passes", "must lie in [1, 8]");
    sim.coupling_passes = static_cast<int>(passes);

    const long seed = t.integer("seed");
    if (seed < 0) t.fail("seed", "must be >= 0");
    const long snap = t.integer("snapshot_every");
    if (snap < 0) t.fail("snapshot_every", "must be >= 0");

    Expression theta_expr;
    try {
        theta_expr = Expression::parse(t.at("theta0").value, d);
    } catch (const InvalidInput& e) {
        t.fail("theta0", e.what());
    }
    ScalarField<double> theta = sample_expression(grid, theta_expr, BoundaryTag::NeumannZero);
    {
        Index p;
        const double lo = theta.values.minCoeff(&p);
        if (!(lo > 0)) {
            const auto x = grid.position(p);
            std::ostringstream msg;
            msg << "theta0 must be strictly positive; value " << lo << " at (" << x[0] << ", " << x[1] << ", " << x[2]
                << ")";
            t.fail("theta0", msg.str());
        }
    }
    VectorField<double> u = vector_initial(t, "u0", grid);
    VectorField<double> v = vector_initial(t, "v0", grid);

    RunConfig out{grid, State<double>{0.0, std::move(u), std::move(v), std::move(theta)}, sim,
                  static_cast<std::uint64_t>(seed), snap, preset, {}};
    for (const auto& [k, e] : t.map) out.entries.push_back(e);
    if (!preset.empty()) out.entries.push_back(ConfigEntry{"preset", preset, given.at("preset").line});
    std::sort(out.entries.begin(), out.entries.end(),
              [](const ConfigEntry& a, const ConfigEntry& b) { return a.key < b.key; });
    return out;
}

RunConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config(buf.str(), overrides);
    } catch (Error& e) {
        e.add_context(path.string());
        throw;
    }
}

RunConfig reference_config(const ConfigOverrides& overrides) {
    return parse_config("preset = reference1d\n", overrides);
}

std::string render_config(const RunConfig& cfg) {
    std::string s;
    for (const auto& e : cfg.entries)
        if (e.key != "preset") s += e.key + " = " + e.value + "\n";
    return s;
}

}  // namespace thermoflow
