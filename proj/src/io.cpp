#include "curvmix/io.hpp"

#include <fstream>
#include <sstream>

namespace curvmix {

namespace {

std::vector<std::string> read_labels(const Json& doc, int n) {
    std::vector<std::string> labels;
    if (doc.contains("labels")) {
        if (!doc["labels"].is_array() || static_cast<int>(doc["labels"].size()) != n)
            throw ParseError("labels must be an array of n strings");
        for (const auto& l : doc["labels"]) labels.push_back(l.get<std::string>());
    }
    return labels;
}

}  // namespace

AnyChain read_chain_json(const std::string& text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("n") || !doc.contains("mode") ||
        !doc.contains("rows"))
        throw ParseError("chain file needs fields n, mode, rows");
    if (!doc["n"].is_number_integer()) throw ParseError("n must be an integer");
    const int n = doc["n"].get<int>();
    if (n < 1) throw ParseError("n must be positive");
    const std::string mode = doc["mode"].get<std::string>();
    if (!doc["rows"].is_array() || static_cast<int>(doc["rows"].size()) != n)
        throw ParseError("rows must be an n-element array");

    if (mode == "exact") {
        Mat<Rat> P(n, n, Rat(0));
        for (int i = 0; i < n; ++i) {
            const auto& row = doc["rows"][i];
            if (!row.is_array() || static_cast<int>(row.size()) != n)
                throw ParseError("row " + std::to_string(i) + " must have n entries");
            for (int j = 0; j < n; ++j) {
                if (!row[j].is_string())
                    throw ParseError("exact mode entries must be \"p/q\" strings");
                P(i, j) = parse_ratio(row[j].get<std::string>());
            }
        }
        return Chain<Rat>::build(std::move(P), read_labels(doc, n));
    }
    if (mode == "float") {
        Mat<double> P(n, n, 0.0);
        for (int i = 0; i < n; ++i) {
            const auto& row = doc["rows"][i];
            if (!row.is_array() || static_cast<int>(row.size()) != n)
                throw ParseError("row " + std::to_string(i) + " must have n entries");
            for (int j = 0; j < n; ++j) {
                if (!row[j].is_number())
                    throw ParseError("float mode entries must be numbers");
                P(i, j) = row[j].get<double>();
            }
        }
        return Chain<double>::build(std::move(P), read_labels(doc, n));
    }
    throw ParseError("mode must be \"exact\" or \"float\"");
}

AnyChain read_chain_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return read_chain_json(buf.str());
}

Json chain_json(const Chain<Rat>& chain) {
    Json doc;
    doc["n"] = chain.size();
    doc["mode"] = "exact";
    Json rows = Json::array();
    for (int i = 0; i < chain.size(); ++i) {
        Json row = Json::array();
        for (int j = 0; j < chain.size(); ++j) row.push_back(ratio_string(chain.at(i, j)));
        rows.push_back(std::move(row));
    }
    doc["rows"] = std::move(rows);
    if (!chain.labels().empty()) doc["labels"] = chain.labels();
    return doc;
}

Json chain_json(const Chain<double>& chain) {
    Json doc;
    doc["n"] = chain.size();
    doc["mode"] = "float";
    Json rows = Json::array();
    for (int i = 0; i < chain.size(); ++i) {
        Json row = Json::array();
        for (int j = 0; j < chain.size(); ++j) row.push_back(chain.at(i, j));
        rows.push_back(std::move(row));
    }
    doc["rows"] = std::move(rows);
    if (!chain.labels().empty()) doc["labels"] = chain.labels();
    return doc;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << text;
}

Json value_json(const Value& v) {
    Json j;
    j["ratio"] = v.is_exact() ? Json(ratio_string(*v.exact)) : Json(nullptr);
    j["decimal"] = decimal_string(v.approx, 12);
    return j;
}

Json coupling_json(const Coupling<Rat>& coupling) {
    Json doc;
    const int n = coupling.chi.rows();
    doc["n"] = n;
    Json rows = Json::array();
    for (int i = 0; i < n; ++i) {
        Json row = Json::array();
        for (int j = 0; j < n; ++j) row.push_back(ratio_string(coupling.chi(i, j)));
        rows.push_back(std::move(row));
    }
    doc["chi"] = std::move(rows);
    doc["cost"] = value_json(Value(coupling.cost));
    return doc;
}

}  // namespace curvmix
