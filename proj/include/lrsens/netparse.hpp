#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "lrsens/error.hpp"
#include "lrsens/model.hpp"

namespace lrsens {

/// Syntax or semantic error in a .rxn document, with a 1-based location.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }
  const std::string& message() const { return message_; }

 private:
  std::string message_;
  std::size_t line_, column_;
};

struct ModelDocument {
  ReactionNetwork network;
  State initial_state;
  /// Declared observables, or the species identity when none are declared.
  ObservableSet observables;

  friend bool operator==(const ModelDocument&, const ModelDocument&) = default;
};

/// Parses the .rxn format described in docs/format.md.
ModelDocument parse_model(std::string_view text);

/// Canonical text; parse_model(serialize_model(doc)) == doc.
std::string serialize_model(const ModelDocument& document);
std::string serialize_model(const ReactionNetwork& network,
                            const State& initial_state);

}  // namespace lrsens
