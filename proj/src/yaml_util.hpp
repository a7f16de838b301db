#pragma once

#include <string>

#include <yaml-cpp/yaml.h>

#include "appnet/error.hpp"

namespace appnet::detail {

[[noreturn]] inline void fail_at(const YAML::Node& node, const std::string& what) {
    throw DataError(what, node.Mark().line >= 0 ? static_cast<std::size_t>(node.Mark().line) + 1 : 0);
}

template <class T>
T scalar(const YAML::Node& node, const std::string& key) {
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        fail_at(node, "invalid value for '" + key + "'");
    }
}

inline YAML::Node load_yaml(std::istream& in) {
    try {
        return YAML::Load(in);
    } catch (const YAML::ParserException& e) {
        throw DataError(e.msg, static_cast<std::size_t>(e.mark.line) + 1);
    }
}

}  // namespace appnet::detail
