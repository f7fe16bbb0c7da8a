#pragma once

// JSON forms of the core data types. SourceLocs are "fn:block:idx" strings;
// byte buffers are lowercase hex.

#include "wildfire/fuzz.hpp"
#include "wildfire/summarize.hpp"

#include "json.hpp"

namespace wildfire::jsonio {

using nlohmann::json;

std::string hex(const ByteStream& bytes);

json to_json(const StackTrace& st);
StackTrace trace_from_json(const json& j);

json to_json(const ArgValue& v);
ArgValue arg_from_json(const json& j);
json to_json(const ArgTuple& t);
ArgTuple args_from_json(const json& j);

json to_json(const CrashReport& c);
CrashReport crash_from_json(const json& j);

json to_json(const FunctionSummary& s);
FunctionSummary summary_from_json(const json& j);
json to_json(const std::vector<FunctionSummary>& s);
std::vector<FunctionSummary> summaries_from_json(const json& j);

/// Stats, status, corpus and crash inputs (hex) of one fuzzing campaign.
json to_json(const FuzzResult& r);

}  // namespace wildfire::jsonio
