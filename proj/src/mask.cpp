#include "patlim/mask.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace patlim {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    return out;
}

// Argument of "name(arg)" or nullopt when the prefix does not match.
std::optional<std::string> call_arg(const std::string& text, const std::string& name) {
    if (text.rfind(name + "(", 0) != 0 || text.back() != ')') return std::nullopt;
    return text.substr(name.size() + 1, text.size() - name.size() - 2);
}

// Integer form A*i + B*j <= C*N of a half-plane evaluated at (i/N, j/N).
struct IntHalfPlane {
    BigInt A, B, C;
};

IntHalfPlane to_integer(const HalfPlane& h) {
    using boost::multiprecision::denominator;
    using boost::multiprecision::numerator;
    BigInt da = denominator(h.a), db = denominator(h.b), dc = denominator(h.c);
    BigInt l = boost::multiprecision::lcm(da, boost::multiprecision::lcm(db, dc));
    return {numerator(h.a) * (l / da), numerator(h.b) * (l / db), numerator(h.c) * (l / dc)};
}

}  // namespace

bool LimitRegion::contains(double x, double y) const {
    if (empty) return false;
    if (x < 0.0 || x > 1.0 || y < 0.0 || y > 1.0) return false;
    for (const auto& h : constraints)
        if (to_double(h.a) * x + to_double(h.b) * y > to_double(h.c)) return false;
    return true;
}

bool LimitRegion::contains(const Rational& x, const Rational& y) const {
    if (empty) return false;
    if (x < 0 || x > 1 || y < 0 || y > 1) return false;
    for (const auto& h : constraints)
        if (h.a * x + h.b * y > h.c) return false;
    return true;
}

LimitRegion LimitRegion::unit_square() {
    LimitRegion r;
    r.text = "unit_square";
    return r;
}

LimitRegion LimitRegion::none() {
    LimitRegion r;
    r.empty = true;
    r.text = "empty";
    return r;
}

LimitRegion LimitRegion::abs_diff_le(const Rational& c) {
    LimitRegion r;
    r.constraints.push_back({1, -1, c});
    r.constraints.push_back({-1, 1, c});
    r.text = "abs_diff_le(" + format_rational(c) + ")";
    return r;
}

LimitRegion LimitRegion::anti_diag_le(const Rational& c) {
    LimitRegion r;
    r.constraints.push_back({1, 1, 1 + c});
    r.constraints.push_back({-1, -1, c - 1});
    r.text = "anti_diag_le(" + format_rational(c) + ")";
    return r;
}

LimitRegion LimitRegion::parse(const std::string& raw) {
    const std::string text = trim(raw);
    if (text == "unit_square" || text == "full") return unit_square();
    if (text == "empty") return none();
    if (auto arg = call_arg(text, "abs_diff_le")) return abs_diff_le(parse_rational(trim(*arg)));
    if (auto arg = call_arg(text, "anti_diag_le")) return anti_diag_le(parse_rational(trim(*arg)));
    if (auto arg = call_arg(text, "halfplanes")) {
        LimitRegion r;
        std::string canon;
        for (const auto& part : split(*arg, ';')) {
            auto f = split(part, ',');
            if (f.size() != 3) throw std::invalid_argument("half-plane needs three coefficients: " + part);
            HalfPlane h{parse_rational(f[0]), parse_rational(f[1]), parse_rational(f[2])};
            if (!canon.empty()) canon += ";";
            canon += format_rational(h.a) + "," + format_rational(h.b) + "," + format_rational(h.c);
            r.constraints.push_back(h);
        }
        r.text = "halfplanes(" + canon + ")";
        return r;
    }
    throw std::invalid_argument("unsupported limit region (only linear inequalities are accepted): " + text);
}

MaskSpec MaskSpec::full() {
    MaskSpec m(MaskKind::full);
    m.limit_ = LimitRegion::unit_square();
    return m;
}

MaskSpec MaskSpec::hollow() {
    MaskSpec m(MaskKind::hollow);
    m.limit_ = LimitRegion::unit_square();
    return m;
}

MaskSpec MaskSpec::band(const Rational& c, std::int64_t a) {
    if (c < 0) throw std::invalid_argument("band coefficient must be nonnegative");
    MaskSpec m(MaskKind::band);
    m.c_ = c;
    m.a_ = a;
    m.limit_ = LimitRegion::abs_diff_le(c);
    return m;
}

MaskSpec MaskSpec::antiband(const Rational& c, std::int64_t a) {
    if (c < 0) throw std::invalid_argument("antiband coefficient must be nonnegative");
    MaskSpec m(MaskKind::antiband);
    m.c_ = c;
    m.a_ = a;
    m.limit_ = LimitRegion::anti_diag_le(c);
    return m;
}

MaskSpec MaskSpec::custom(std::vector<std::vector<bool>> table) {
    const std::size_t n = table.size();
    if (n == 0) throw std::invalid_argument("custom mask table is empty");
    for (const auto& row : table)
        if (row.size() != n) throw std::invalid_argument("custom mask table is not square");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (table[i][j] != table[j][i]) throw std::invalid_argument("custom mask table is not symmetric");
    MaskSpec m(MaskKind::custom);
    m.table_ = std::make_shared<const std::vector<std::vector<bool>>>(std::move(table));
    return m;
}

MaskSpec MaskSpec::with_limit(LimitRegion region) const {
    MaskSpec m = *this;
    m.limit_ = std::move(region);
    return m;
}

std::string MaskSpec::name() const {
    switch (kind_) {
        case MaskKind::full: return "full";
        case MaskKind::hollow: return "hollow";
        case MaskKind::band: return "band(" + format_rational(c_) + "," + std::to_string(a_) + ")";
        case MaskKind::antiband: return "antiband(" + format_rational(c_) + "," + std::to_string(a_) + ")";
        case MaskKind::custom: return "custom";
    }
    return "unknown";
}

std::int64_t MaskSpec::bandwidth(int N) const { return floor_times(c_, N) + a_; }

bool MaskSpec::contains(int i, int j, int N) const {
    if (N < 1 || i < 1 || i > N || j < 1 || j > N) throw std::out_of_range("mask index out of range");
    switch (kind_) {
        case MaskKind::full: return true;
        case MaskKind::hollow: return i != j;
        case MaskKind::band: return std::abs(i - j) <= bandwidth(N);
        case MaskKind::antiband: {
            std::int64_t b = bandwidth(N);
            std::int64_t s = i + j;
            return s >= N + 1 - b && s <= N + 1 + b;
        }
        case MaskKind::custom:
            if (static_cast<std::size_t>(N) != table_->size())
                throw std::invalid_argument("custom mask defined for N=" + std::to_string(table_->size()) + " only");
            return (*table_)[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)];
    }
    return false;
}

nlohmann::json MaskSpec::to_json() const {
    nlohmann::json j;
    switch (kind_) {
        case MaskKind::full: j["kind"] = "full"; break;
        case MaskKind::hollow: j["kind"] = "hollow"; break;
        case MaskKind::band:
        case MaskKind::antiband:
            j["kind"] = kind_ == MaskKind::band ? "band" : "antiband";
            j["c"] = format_rational(c_);
            j["a"] = a_;
            break;
        case MaskKind::custom:
            j["kind"] = "custom";
            j["table"] = *table_;
            break;
    }
    if (limit_) j["limit"] = limit_->text;
    return j;
}

MaskSpec MaskSpec::from_json(const nlohmann::json& j) {
    if (j.is_string()) return named(j.get<std::string>());
    const std::string kind = j.at("kind").get<std::string>();
    auto rational_field = [&](const char* key) {
        const auto& v = j.at(key);
        return v.is_string() ? parse_rational(v.get<std::string>()) : Rational(v.get<std::int64_t>());
    };
    MaskSpec m = MaskSpec::full();
    if (kind == "full") m = full();
    else if (kind == "hollow") m = hollow();
    else if (kind == "band") m = band(rational_field("c"), j.value("a", std::int64_t{0}));
    else if (kind == "antiband") m = antiband(rational_field("c"), j.value("a", std::int64_t{0}));
    else if (kind == "custom") m = custom(j.at("table").get<std::vector<std::vector<bool>>>());
    else throw std::invalid_argument("unknown mask kind: " + kind);
    if (j.contains("limit")) {
        if (j.at("limit").is_null()) m.limit_.reset();
        else m.limit_ = LimitRegion::parse(j.at("limit").get<std::string>());
    }
    return m;
}

MaskSpec MaskSpec::named(const std::string& name) {
    if (name == "full") return full();
    if (name == "hollow") return hollow();
    if (auto arg = call_arg(name, "band")) {
        auto f = split(*arg, ',');
        return band(parse_rational(f.at(0)), f.size() > 1 ? std::stoll(f[1]) : 0);
    }
    if (auto arg = call_arg(name, "antiband")) {
        auto f = split(*arg, ',');
        return antiband(parse_rational(f.at(0)), f.size() > 1 ? std::stoll(f[1]) : 0);
    }
    throw std::invalid_argument("unknown mask: " + name);
}

bool mask_contains(const MaskSpec& mask, int i, int j, int N) { return mask.contains(i, j, N); }

Rational assumption_V_distance(const MaskSpec& mask, int N) {
    if (!mask.limit_region()) throw std::invalid_argument("mask has no limit region");
    const LimitRegion& lim = *mask.limit_region();
    std::vector<IntHalfPlane> hp;
    for (const auto& h : lim.constraints) hp.push_back(to_integer(h));
    std::int64_t mismatch = 0;
    for (int i = 1; i <= N; ++i)
        for (int j = 1; j <= N; ++j) {
            bool in_limit = !lim.empty;
            for (std::size_t k = 0; in_limit && k < hp.size(); ++k)
                if (hp[k].A * i + hp[k].B * j > hp[k].C * N) in_limit = false;
            if (in_limit != mask.contains(i, j, N)) ++mismatch;
        }
    return Rational(mismatch, static_cast<std::int64_t>(N) * N);
}

std::vector<std::uint8_t> mask_table(const MaskSpec& mask, int N) {
    std::vector<std::uint8_t> t(static_cast<std::size_t>(N) * N);
    for (int i = 1; i <= N; ++i)
        for (int j = 1; j <= N; ++j)
            t[static_cast<std::size_t>(i - 1) * N + (j - 1)] = mask.contains(i, j, N) ? 1 : 0;
    return t;
}

}  // namespace patlim
