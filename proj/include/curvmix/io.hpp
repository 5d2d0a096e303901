#pragma once

#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "curvmix/chain.hpp"
#include "curvmix/numeric.hpp"
#include "curvmix/transport.hpp"

namespace curvmix {

using Json = nlohmann::ordered_json;
using AnyChain = std::variant<Chain<Rat>, Chain<double>>;

// Chain file format:
//   { "n": int, "mode": "exact"|"float", "rows": [[entry,...],...] }
// with exact entries as "p/q" strings and float entries as numbers.
// Dense, row-major. Optional "labels": [string,...].
AnyChain read_chain_json(const std::string& text);
AnyChain read_chain_file(const std::string& path);
Json chain_json(const Chain<Rat>& chain);
Json chain_json(const Chain<double>& chain);
void write_text_file(const std::string& path, const std::string& text);

// report value: exact ratio (when available) plus a 12-digit decimal
Json value_json(const Value& v);

// dense coupling export with "p/q" entries and the transport cost, for audit
Json coupling_json(const Coupling<Rat>& coupling);

inline int chain_size(const AnyChain& chain) {
    return std::visit([](const auto& c) { return c.size(); }, chain);
}

}  // namespace curvmix
