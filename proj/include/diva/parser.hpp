#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "diva/ast.hpp"
#include "diva/lexer.hpp"

namespace diva {

// Predicate telling the parser which identifiers are operator names and
// therefore not assignable.
using ReservedPredicate = std::function<bool(std::string_view)>;

// Throws Error(Parse) with the position of the offending token.
WorkflowAst parse_workflow(const std::vector<Token>& tokens,
                           const ReservedPredicate& is_operator = {});

// tokenize + parse_workflow.
WorkflowAst parse_source(std::string_view source, const ReservedPredicate& is_operator = {});

// Decodes the body of a string literal lexeme (including its quotes).
std::string unescape_string(std::string_view lexeme);
std::string escape_string(std::string_view text);

}  // namespace diva
