#ifndef SOURIR_TEXT_H
#define SOURIR_TEXT_H

#include "sourir/ir.h"

#include <stdexcept>
#include <string>
#include <vector>

namespace sourir {

class ParseError : public std::runtime_error {
  public:
    ParseError(int line, int col, const std::string& msg)
        : std::runtime_error(std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
          line(line), col(col) {}
    int line;
    int col;
};

// Line-oriented concrete syntax:
//   func F(x, y)
//     version V
//       L: var x = e | drop x | x <- e | array x[e] | array x = [e, ...]
//          x[e] <- e | branch e L1 L2 | goto L | print e | read x
//          call x = e(e, ...) | return e | stop
//          assume e, ... else F.V.L [x = e, ...] (, F.V.L ret x [x = e, ...])*
// Unlabeled instructions get synthesized labels _0, _1, ... in stream order.
// `#` starts a comment; indentation is not significant.
Program parse(const std::string& text);

// Canonical rendering; parse(print(p)) is structurally equal to p.
std::string print(const Program& p);

std::string print(const Instr& i);
std::string print(const Expr& e);
std::string print(const Lit& l);

// One expression on its own (pipeline arguments, tests).
Expr parseExprText(const std::string& text);

// Comma/newline separated literal list for `read` scripts.
std::vector<Lit> parseInputs(const std::string& text);
std::string printInputs(const std::vector<Lit>& inputs);

} // namespace sourir

#endif
