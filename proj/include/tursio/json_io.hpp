#pragma once

// nlohmann::json bindings for the value and context-graph types.

#include "json.hpp"
#include "tursio/context_model.hpp"
#include "tursio/value.hpp"

namespace tursio {

using json = nlohmann::json;

json value_to_json(const Value& v);
Value value_from_json(const json& j);

void to_json(json& j, const ColumnRef& r);
void from_json(const json& j, ColumnRef& r);
void to_json(json& j, const Annotation& a);
void from_json(const json& j, Annotation& a);
void to_json(json& j, const JoinEdge& e);
void from_json(const json& j, JoinEdge& e);
void to_json(json& j, const TableNode& t);
void from_json(const json& j, TableNode& t);

AnnotationKind annotation_kind_from_string(std::string_view s);

}  // namespace tursio
