// Exact scalar layer: square-root classification, quadratic-field elements
// a + b*sqrt(d), and the rational-cosine independence predicate.
#pragma once

#include <trapaudit/rational.hpp>

#include <complex>
#include <optional>
#include <string>
#include <utility>

namespace trapaudit {

struct DivisionByZeroNorm : TrapError {
    DivisionByZeroNorm() : TrapError("DivisionByZeroNorm", "inverse of zero-norm quadratic element") {}
};
struct RadicandMismatch : TrapError {
    RadicandMismatch() : TrapError("RadicandMismatch", "mixed radicands in quadratic arithmetic") {}
};
struct NegativeRadicandEmbedding : TrapError {
    NegativeRadicandEmbedding()
        : TrapError("NegativeRadicandEmbedding", "real embedding requested for negative radicand") {}
};
struct PreconditionViolation : TrapError {
    explicit PreconditionViolation(const std::string& m) : TrapError("PreconditionViolation", m) {}
};

// --------------------------------------------------------------------------
// SqrtClass: exact classification of sqrt(r) for rational r.
// --------------------------------------------------------------------------

enum class SqrtKind { RationalValue, IrrationalReal, Imaginary };

struct SqrtClass {
    SqrtKind kind;
    Rational radicand;        // the input r
    Rational value;           // the nonnegative root, when kind == RationalValue

    bool is_rational() const { return kind == SqrtKind::RationalValue; }
    bool is_real() const { return kind != SqrtKind::Imaginary; }

    std::string str() const {
        switch (kind) {
            case SqrtKind::RationalValue: return value.str();
            case SqrtKind::IrrationalReal: return "sqrt(" + radicand.str() + ")";
            default: return "sqrt(" + radicand.str() + ")";
        }
    }
};

// RationalValue iff reduced r >= 0 with square numerator and denominator;
// Imaginary iff r < 0; IrrationalReal otherwise. Root is the nonnegative branch.
inline SqrtClass sqrt_classify(const Rational& r) {
    if (r.is_negative()) return {SqrtKind::Imaginary, r, Rational(0)};
    Int rn, rd;
    if (is_perfect_square(r.num(), &rn) && is_perfect_square(r.den(), &rd))
        return {SqrtKind::RationalValue, r, Rational(rn, rd)};
    return {SqrtKind::IrrationalReal, r, Rational(0)};
}

inline Int denominator_N(const Rational& r) { return r.denominator_N(); }

// {1, cos(pi r1), cos(pi r2)} linearly independent over Q, decided by the
// denominator criterion N(r1) >= 4, N(r2) >= 4, (N(r1),N(r2)) != (5,5).
// Duplicate arguments are trivially dependent; other integer sums/differences
// violate the hypothesis and throw.
inline bool berger_independent(const Rational& r1, const Rational& r2) {
    if (r1 == r2) return false;
    if ((r1 + r2).is_integer() || (r1 - r2).is_integer())
        throw PreconditionViolation("berger_independent: r1 +/- r2 is an integer");
    Int n1 = denominator_N(r1), n2 = denominator_N(r2);
    if (n1 < 4 || n2 < 4) return false;
    if (n1 == 5 && n2 == 5) return false;
    return true;
}

// --------------------------------------------------------------------------
// QuadExt: x + y*sqrt(d).  d is canonicalized to an integer radicand; perfect
// squares collapse to pure rationals (d = 0, y = 0).  Values with y == 0 are
// compatible with any radicand.
// --------------------------------------------------------------------------

class QuadExt {
  public:
    QuadExt() : x_(0), y_(0), d_(0) {}
    QuadExt(Rational r) : x_(std::move(r)), y_(0), d_(0) {}  // NOLINT
    QuadExt(long long n) : x_(n), y_(0), d_(0) {}            // NOLINT
    QuadExt(Rational a, Rational b, Rational rad) : x_(std::move(a)), y_(std::move(b)), d_(std::move(rad)) {
        canonicalize();
    }

    const Rational& rat() const { return x_; }
    const Rational& irr() const { return y_; }
    const Rational& radicand() const { return d_; }

    bool is_rational() const { return y_.is_zero(); }
    bool is_zero() const { return x_.is_zero() && y_.is_zero(); }

    // x^2 - d y^2; zero only for the zero element once d is nonsquare
    Rational norm() const { return x_ * x_ - d_ * y_ * y_; }

    QuadExt operator-() const { return raw(-x_, -y_, d_); }

    friend QuadExt operator+(const QuadExt& a, const QuadExt& b) {
        Rational d = merged(a, b);
        return raw(a.x_ + b.x_, a.y_ + b.y_, d);
    }
    friend QuadExt operator-(const QuadExt& a, const QuadExt& b) {
        Rational d = merged(a, b);
        return raw(a.x_ - b.x_, a.y_ - b.y_, d);
    }
    friend QuadExt operator*(const QuadExt& a, const QuadExt& b) {
        Rational d = merged(a, b);
        return raw(a.x_ * b.x_ + d * a.y_ * b.y_, a.x_ * b.y_ + a.y_ * b.x_, d);
    }
    QuadExt inverse() const {
        Rational n = norm();
        if (n.is_zero()) throw DivisionByZeroNorm();
        return raw(x_ / n, -y_ / n, d_);
    }
    friend QuadExt operator/(const QuadExt& a, const QuadExt& b) {
        Rational d = merged(a, b);  // validates compatibility before inverting
        (void)d;
        return a * b.inverse();
    }
    QuadExt& operator+=(const QuadExt& o) { return *this = *this + o; }
    QuadExt& operator-=(const QuadExt& o) { return *this = *this - o; }
    QuadExt& operator*=(const QuadExt& o) { return *this = *this * o; }
    QuadExt& operator/=(const QuadExt& o) { return *this = *this / o; }

    friend bool operator==(const QuadExt& a, const QuadExt& b) {
        if (a.x_ != b.x_ || a.y_ != b.y_) return false;
        return a.y_.is_zero() || a.d_ == b.d_;
    }
    friend bool operator!=(const QuadExt& a, const QuadExt& b) { return !(a == b); }

    std::string str() const {
        if (y_.is_zero()) return x_.str();
        std::string s = x_.str();
        s += y_.is_negative() ? "-" : "+";
        s += abs(y_).str() + "*sqrt(" + d_.str() + ")";
        return s;
    }

    static QuadExt parse(std::string_view s) {
        auto pos = s.find("*sqrt(");
        if (pos == std::string_view::npos) return QuadExt(Rational::parse(s));
        if (s.back() != ')') throw ParseError("bad quadratic element: \"" + std::string(s) + "\"");
        std::string_view dstr = s.substr(pos + 6, s.size() - pos - 7);
        // split the a part from the signed b part (sign not inside an exponent here)
        std::string_view head = s.substr(0, pos);
        size_t split = head.find_last_of("+-");
        if (split == std::string_view::npos || split == 0)
            throw ParseError("bad quadratic element: \"" + std::string(s) + "\"");
        Rational a = Rational::parse(head.substr(0, split));
        Rational b = Rational::parse(head.substr(split + 1));
        if (head[split] == '-') b = -b;
        return QuadExt(a, b, Rational::parse(dstr));
    }

    // correctly rounded real embedding (positive branch of sqrt d)
    long double to_float(unsigned precision_bits = 64) const {
        if (precision_bits < 53) precision_bits = 53;
        if (is_rational()) return x_.to_float<long double>();
        if (d_.is_negative()) throw NegativeRadicandEmbedding();
        Rational approx = x_ + y_ * sqrt_approx(d_, precision_bits + 8);
        return approx.to_float<long double>();
    }

    std::complex<long double> to_complex(unsigned precision_bits = 64) const {
        if (is_rational() || !d_.is_negative()) return {to_float(precision_bits), 0.0L};
        Rational imag = y_ * sqrt_approx(-d_, precision_bits + 8);
        return {x_.to_float<long double>(), imag.to_float<long double>()};
    }

  private:
    Rational x_, y_, d_;

    static QuadExt raw(Rational a, Rational b, Rational d) {
        QuadExt q;
        q.x_ = std::move(a);
        q.y_ = std::move(b);
        q.d_ = std::move(d);
        q.canonicalize();
        return q;
    }

    static Rational merged(const QuadExt& a, const QuadExt& b) {
        if (a.y_.is_zero()) return b.d_;
        if (b.y_.is_zero()) return a.d_;
        if (a.d_ != b.d_) throw RadicandMismatch();
        return a.d_;
    }

    void canonicalize() {
        if (y_.is_zero() || d_.is_zero()) {
            y_ = Rational(0);
            d_ = Rational(0);
            return;
        }
        // integer radicand: sqrt(p/q) = sqrt(p q)/q
        if (!d_.is_integer()) {
            y_ = y_ / Rational(d_.den());
            d_ = Rational(d_.num() * d_.den());
        }
        SqrtClass c = sqrt_classify(d_);
        if (c.kind == SqrtKind::RationalValue) {
            x_ = x_ + y_ * c.value;
            y_ = Rational(0);
            d_ = Rational(0);
            return;
        }
        // pull small square factors out of the radicand
        Int n = d_.num();
        Int scale = 1;
        for (Int p : {Int(2), Int(3), Int(5), Int(7), Int(11), Int(13)}) {
            Int pp = p * p;
            while (n % pp == 0) {
                n /= pp;
                scale *= p;
            }
        }
        if (scale > 1) {
            y_ = y_ * Rational(scale);
            d_ = Rational(n);
        }
    }
};

inline QuadExt operator+(const Rational& a, const QuadExt& b) { return QuadExt(a) + b; }
inline QuadExt operator*(const Rational& a, const QuadExt& b) { return QuadExt(a) * b; }

// value equality across representations: a + b sqrt(d) == a' + b' sqrt(d')
// even when the radicands share a square ratio beyond the canonical reduction
inline bool same_value(const QuadExt& u, const QuadExt& v) {
    if (u.is_rational() || v.is_rational()) return u == v;
    if (u.rat() != v.rat()) return false;
    if (u.irr().sign() != v.irr().sign()) return false;
    return u.irr() * u.irr() * u.radicand() == v.irr() * v.irr() * v.radicand();
}

enum class QuadOp { Add, Sub, Mul, Div };

inline QuadExt quad_arith(const QuadExt& x, const QuadExt& y, QuadOp op) {
    switch (op) {
        case QuadOp::Add: return x + y;
        case QuadOp::Sub: return x - y;
        case QuadOp::Mul: return x * y;
        default: return x / y;
    }
}

// cos(pi r) is rational iff N(r) in {1,2,3}; value table after reducing r mod 2
inline std::optional<Rational> rational_cos_pi(const Rational& r) {
    Int n = r.denominator_N();
    if (n > 3) return std::nullopt;
    // t = r mod 2 with 0 <= t < 2
    Rational half = r / Rational(2);
    Int fl = half.num() / half.den();
    if (half.is_negative() && !half.is_integer()) fl -= 1;
    Rational t = r - Rational(2) * Rational(fl);
    if (n == 1) return t.is_zero() ? Rational(1) : Rational(-1);  // t in {0,1}
    if (n == 2) return Rational(0);                               // t in {1/2, 3/2}
    // n == 3: {1/3,5/3} -> 1/2 ; {2/3,4/3} -> -1/2
    if (t == Rational(1, 3) || t == Rational(5, 3)) return Rational(1, 2);
    return Rational(-1, 2);
}

}  // namespace trapaudit
