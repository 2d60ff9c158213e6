// Arbitrary-precision rationals over boost cpp_int, always reduced,
// denominator > 0. String form is "n" or "n/d" (ASCII, no whitespace).
#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace trapaudit {

using Int = boost::multiprecision::cpp_int;

struct TrapError : std::runtime_error {
    const char* tag;
    TrapError(const char* t, const std::string& msg) : std::runtime_error(msg), tag(t) {}
};

struct ParseError : TrapError {
    explicit ParseError(const std::string& msg) : TrapError("ParseError", msg) {}
};

inline Int gcd(Int a, Int b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
        Int t = a % b;
        a = b;
        b = t;
    }
    return a;
}

// floor of sqrt for n >= 0
inline Int isqrt(const Int& n) {
    if (n < 0) throw std::domain_error("isqrt of negative");
    return boost::multiprecision::sqrt(n);
}

inline bool is_perfect_square(const Int& n, Int* root = nullptr) {
    if (n < 0) return false;
    Int r = isqrt(n);
    if (r * r != n) return false;
    if (root) *root = r;
    return true;
}

class Rational {
  public:
    Rational() : num_(0), den_(1) {}
    Rational(long long n) : num_(n), den_(1) {}   // NOLINT: implicit by design
    Rational(const Int& n) : num_(n), den_(1) {}  // NOLINT
    Rational(Int n, Int d) : num_(std::move(n)), den_(std::move(d)) { normalize(); }

    static Rational parse(std::string_view s) {
        auto bad = [&] { throw ParseError("bad rational: \"" + std::string(s) + "\""); };
        if (s.empty()) bad();
        auto slash = s.find('/');
        std::string_view ns = s.substr(0, slash);
        std::string_view ds = slash == std::string_view::npos ? std::string_view("1") : s.substr(slash + 1);
        auto check = [&](std::string_view t) {
            if (t.empty()) bad();
            size_t i = (t[0] == '-' || t[0] == '+') ? 1 : 0;
            if (i == t.size()) bad();
            for (; i < t.size(); ++i)
                if (t[i] < '0' || t[i] > '9') bad();
        };
        check(ns);
        check(ds);
        Rational r;
        r.num_ = Int(std::string(ns));
        r.den_ = Int(std::string(ds));
        if (r.den_ == 0) throw ParseError("zero denominator: \"" + std::string(s) + "\"");
        r.normalize();
        return r;
    }

    const Int& num() const { return num_; }
    const Int& den() const { return den_; }

    bool is_zero() const { return num_ == 0; }
    bool is_integer() const { return den_ == 1; }
    bool is_negative() const { return num_ < 0; }
    int sign() const { return num_ < 0 ? -1 : (num_ > 0 ? 1 : 0); }

    // positive denominator of the reduced fraction
    Int denominator_N() const { return den_; }

    Rational operator-() const {
        Rational r(*this);
        r.num_ = -r.num_;
        return r;
    }

    friend Rational operator+(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return Rational(a.num_ * b.num_, a.den_ * b.den_);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0) throw TrapError("DivisionByZero", "rational division by zero");
        return Rational(a.num_ * b.den_, a.den_ * b.num_);
    }
    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }
    Rational& operator/=(const Rational& o) { return *this = *this / o; }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
    friend bool operator<(const Rational& a, const Rational& b) {
        return a.num_ * b.den_ < b.num_ * a.den_;
    }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
    friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
    friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

    std::string str() const {
        std::string s = num_.str();
        if (den_ != 1) s += "/" + den_.str();
        return s;
    }

    template <typename F>
    F to_float() const {
        // scale so the quotient keeps ~2 guard digits beyond the target mantissa
        const int target = 96;
        long nb = static_cast<long>(boost::multiprecision::msb(num_ == 0 ? Int(1) : boost::multiprecision::abs(num_))) + 1;
        long db = static_cast<long>(boost::multiprecision::msb(den_)) + 1;
        long shift = target - (nb - db);
        Int n = num_, d = den_;
        if (shift > 0)
            n <<= static_cast<unsigned>(shift);
        else if (shift < 0)
            d <<= static_cast<unsigned>(-shift);
        Int q = n / d;
        F v = q.convert_to<F>();
        return std::ldexp(v, static_cast<int>(-shift));
    }
    double to_double() const { return to_float<double>(); }

  private:
    Int num_, den_;

    void normalize() {
        if (den_ == 0) throw TrapError("DivisionByZero", "zero denominator");
        if (den_ < 0) {
            den_ = -den_;
            num_ = -num_;
        }
        if (num_ == 0) {
            den_ = 1;
            return;
        }
        Int g = gcd(num_, den_);
        if (g > 1) {
            num_ /= g;
            den_ /= g;
        }
    }
};

inline Rational abs(const Rational& r) { return r.is_negative() ? -r : r; }

// rational approximation of sqrt(r), r >= 0, relative error <= 2^(1-bits)
inline Rational sqrt_approx(const Rational& r, unsigned bits) {
    if (r.is_negative()) throw std::domain_error("sqrt_approx of negative");
    if (r.is_zero()) return Rational(0);
    // sqrt(p/q) = sqrt(p*q)/q; scale p*q by 4^g and take the integer root
    unsigned g = bits + 8;
    Int pq = r.num() * r.den();
    Int scaled = pq << (2 * g);
    Int root = isqrt(scaled);
    return Rational(root, r.den() << g);
}

}  // namespace trapaudit
