#include "blp/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>

namespace blp {

namespace {

class Parser {
public:
    explicit Parser(const std::string& s) : s_(s) {}

    double parse() {
        const double v = expression();
        skip_ws();
        if (pos_ != s_.size()) fail("trailing characters");
        return v;
    }

private:
    [[noreturn]] void fail(const std::string& why) const {
        throw std::invalid_argument("expression '" + s_ + "': " + why);
    }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
            ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    double expression() {
        double v = term();
        for (;;) {
            if (eat('+'))
                v += term();
            else if (eat('-'))
                v -= term();
            else
                return v;
        }
    }

    double term() {
        double v = factor();
        for (;;) {
            if (eat('*'))
                v *= factor();
            else if (eat('/'))
                v /= factor();
            else
                return v;
        }
    }

    double factor() {
        const double base = unary();
        if (eat('^')) return std::pow(base, factor());  // right-associative
        return base;
    }

    double unary() {
        if (eat('-')) return -unary();
        if (eat('+')) return unary();
        return primary();
    }

    double primary() {
        skip_ws();
        if (pos_ >= s_.size()) fail("unexpected end");
        if (eat('(')) {
            const double v = expression();
            if (!eat(')')) fail("missing ')'");
            return v;
        }
        const char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) return name();
        fail(std::string("unexpected character '") + c + "'");
    }

    double number() {
        const char* start = s_.c_str() + pos_;
        char* end = nullptr;
        const double v = std::strtod(start, &end);
        if (end == start) fail("malformed number");
        pos_ += static_cast<std::size_t>(end - start);
        return v;
    }

    double name() {
        std::size_t start = pos_;
        while (pos_ < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
            ++pos_;
        const std::string id = s_.substr(start, pos_ - start);
        if (id == "pi") return 3.14159265358979323846;
        if (id == "e") return 2.71828182845904523536;
        if (id == "inf") return std::numeric_limits<double>::infinity();
        if (!eat('(')) fail("unknown name '" + id + "'");
        const double arg = expression();
        if (!eat(')')) fail("missing ')' after " + id);
        if (id == "ln" || id == "log") return std::log(arg);
        if (id == "exp") return std::exp(arg);
        if (id == "sqrt") return std::sqrt(arg);
        fail("unknown function '" + id + "'");
    }

    const std::string& s_;
    std::size_t pos_ = 0;
};

}  // namespace

double eval_expression(const std::string& text) { return Parser(text).parse(); }

}  // namespace blp
