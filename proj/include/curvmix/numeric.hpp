#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

namespace curvmix {

// Exact arithmetic scalar used throughout rational mode.
using Rat = mpq_class;

// =============================================================================
// Errors
// =============================================================================

struct ChainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct RowSumError : ChainError { using ChainError::ChainError; };
struct NegativeEntryError : ChainError { using ChainError::ChainError; };
struct ReducibleError : ChainError { using ChainError::ChainError; };
struct NumericalFailure : ChainError { using ChainError::ChainError; };
struct OverflowError : ChainError { using ChainError::ChainError; };
struct TooLargeError : ChainError { using ChainError::ChainError; };
struct SizeError : ChainError { using ChainError::ChainError; };
struct NotReversibleError : ChainError { using ChainError::ChainError; };
struct NotCenteredError : ChainError { using ChainError::ChainError; };
struct NotGeneratingError : ChainError { using ChainError::ChainError; };
struct SolverStall : ChainError { using ChainError::ChainError; };
struct HypothesisError : ChainError { using ChainError::ChainError; };
struct ParseError : ChainError { using ChainError::ChainError; };

// =============================================================================
// Rational helpers
// =============================================================================

inline Rat rat_of(long num, long den = 1) {
    Rat r(num, den);
    r.canonicalize();
    return r;
}

// Parses "p/q" or a plain integer string.
inline Rat parse_ratio(const std::string& s) {
    Rat r;
    if (mpq_set_str(r.get_mpq_t(), s.c_str(), 10) != 0)
        throw ParseError("not a rational: '" + s + "'");
    if (r.get_den() == 0) throw ParseError("zero denominator: '" + s + "'");
    r.canonicalize();
    return r;
}

inline std::string ratio_string(const Rat& r) { return r.get_str(); }

// Decimal rendering to a fixed number of significant digits, locale-free.
inline std::string decimal_string(double v, int digits = 12) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os.precision(digits);
    os << v;
    return os.str();
}

inline std::string decimal_string(const Rat& r, int digits = 12) {
    return decimal_string(r.get_d(), digits);
}

inline size_t denominator_bits(const Rat& r) {
    return mpz_sizeinbase(r.get_den().get_mpz_t(), 2);
}

template <typename T>
T pow_int(const T& base, long e) {
    T acc(1), b(base);
    for (; e > 0; e >>= 1) {
        if (e & 1) acc *= b;
        if (e > 1) b *= b;
    }
    return acc;
}

// =============================================================================
// Mode-dependent comparison policy
// =============================================================================
//
// Exact mode compares rationals exactly. Float mode uses the report slack rule:
// a holds below b when a <= b + 1e-9 * max(1, |b|).

template <typename T>
struct NumTraits;

template <>
struct NumTraits<Rat> {
    static constexpr bool exact = true;
    static constexpr const char* mode_name = "exact";
    static double to_double(const Rat& v) { return v.get_d(); }
    static bool le(const Rat& a, const Rat& b) { return a <= b; }
    static bool eq(const Rat& a, const Rat& b) { return a == b; }
    static bool is_zero(const Rat& a) { return sgn(a) == 0; }
    static Rat row_sum_target_tol() { return Rat(0); }
};

template <>
struct NumTraits<double> {
    static constexpr bool exact = false;
    static constexpr const char* mode_name = "float";
    static double to_double(double v) { return v; }
    static bool le(double a, double b) {
        return a <= b + 1e-9 * std::max(1.0, std::abs(b));
    }
    static bool eq(double a, double b) {
        return std::abs(a - b) <= 1e-9 * std::max(1.0, std::max(std::abs(a), std::abs(b)));
    }
    static bool is_zero(double a) { return a == 0.0; }
    static double row_sum_target_tol() { return 1e-12; }
};

// A value carried into reports: always has a double rendering, and the exact
// rational when the computation stayed exact.
struct Value {
    std::optional<Rat> exact;
    double approx = 0.0;

    Value() = default;
    Value(const Rat& r) : exact(r), approx(r.get_d()) {}
    Value(double d) : approx(d) {}

    bool is_exact() const { return exact.has_value(); }
    static Value of_int(long v) { return Value(rat_of(v)); }
};

inline Value operator-(const Value& a, const Value& b) {
    if (a.is_exact() && b.is_exact()) return Value(Rat(*a.exact - *b.exact));
    return Value(a.approx - b.approx);
}

// pass rule: slack >= 0 exactly, or >= -1e-9*max(1,|rhs|) when float entered.
inline bool dominates(const Value& lhs, const Value& rhs) {
    if (lhs.is_exact() && rhs.is_exact()) return *lhs.exact <= *rhs.exact;
    return lhs.approx <= rhs.approx + 1e-9 * std::max(1.0, std::abs(rhs.approx));
}

}  // namespace curvmix
