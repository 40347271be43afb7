#pragma once

#include <compare>
#include <string>
#include <tuple>

#include "loom/common.hpp"

namespace loom {

// Reference to a virtual actor instance. The type name rides along so
// capability checks (which component may host this actor) are local.
struct ActorRef {
  std::string type;
  std::string name;

  friend bool operator==(const ActorRef&, const ActorRef&) = default;
  friend auto operator<=>(const ActorRef& a, const ActorRef& b) {
    return std::tie(a.type, a.name) <=> std::tie(b.type, b.name);
  }

  std::string str() const { return type + "/" + name; }

  static ActorRef make(std::string type, std::string name) {
    if (!valid_identifier(type) || !valid_identifier(name)) {
      throw ShapeError("actor reference needs non-empty identifiers, got '" +
                       type + "/" + name + "'");
    }
    return ActorRef{std::move(type), std::move(name)};
  }

  static ActorRef parse(const std::string& text) {
    auto slash = text.find('/');
    if (slash == std::string::npos) {
      throw ParseError("actor reference must be type/name, got '" + text + "'");
    }
    return make(text.substr(0, slash), text.substr(slash + 1));
  }
};

}  // namespace loom
