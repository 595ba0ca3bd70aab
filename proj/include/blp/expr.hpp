#pragma once

#include <string>

namespace blp {

// Evaluates the numeric expressions scenario files may use for exact
// constants: decimal literals, + - * / ^, parentheses, unary minus, the
// functions ln/log/exp/sqrt, and the constants pi, e, inf.
// Throws std::invalid_argument on malformed input.
double eval_expression(const std::string& text);

}  // namespace blp
