#pragma once

#include "patlim/rational.hpp"

#include <json.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace patlim {

// Closed half-plane a*x + b*y <= c in the unit square coordinates.
struct HalfPlane {
    Rational a, b, c;
};

// A limit region Delta in [0,1]^2 given by finitely many linear inequalities.
struct LimitRegion {
    bool empty = false;
    std::vector<HalfPlane> constraints;
    std::string text;  // canonical textual form

    bool contains(double x, double y) const;
    bool contains(const Rational& x, const Rational& y) const;

    static LimitRegion unit_square();
    static LimitRegion none();
    // |x - y| <= c
    static LimitRegion abs_diff_le(const Rational& c);
    // |x + y - 1| <= c
    static LimitRegion anti_diag_le(const Rational& c);
    // "unit_square", "empty", "abs_diff_le(1/2)", "anti_diag_le(1/4)",
    // "halfplanes(a,b,c;a,b,c;...)"
    static LimitRegion parse(const std::string& text);
};

enum class MaskKind { full, hollow, band, antiband, custom };

class MaskSpec {
public:
    static MaskSpec full();
    static MaskSpec hollow();
    // Bandwidth b_N = floor(c*N) + a; band keeps |i-j| <= b_N.
    static MaskSpec band(const Rational& c, std::int64_t a);
    // Keeps N+1-b_N <= i+j <= N+1+b_N.
    static MaskSpec antiband(const Rational& c, std::int64_t a);
    // table[i-1][j-1] for a single fixed N.
    static MaskSpec custom(std::vector<std::vector<bool>> table);

    MaskSpec with_limit(LimitRegion region) const;

    MaskKind kind() const { return kind_; }
    std::string name() const;
    const std::optional<LimitRegion>& limit_region() const { return limit_; }
    std::int64_t bandwidth(int N) const;
    const Rational& c() const { return c_; }
    std::int64_t a() const { return a_; }

    bool contains(int i, int j, int N) const;

    nlohmann::json to_json() const;
    static MaskSpec from_json(const nlohmann::json& j);
    static MaskSpec named(const std::string& name);

private:
    explicit MaskSpec(MaskKind k) : kind_(k) {}
    MaskKind kind_;
    Rational c_ = 0;
    std::int64_t a_ = 0;
    std::shared_ptr<const std::vector<std::vector<bool>>> table_;
    std::optional<LimitRegion> limit_;
};

bool mask_contains(const MaskSpec& mask, int i, int j, int N);

// (#grid points (i/N, j/N) where Delta_N and the limit region disagree) / N^2.
Rational assumption_V_distance(const MaskSpec& mask, int N);

// Materialized N x N membership (row-major, 0-based).
std::vector<std::uint8_t> mask_table(const MaskSpec& mask, int N);

}  // namespace patlim
