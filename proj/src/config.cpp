#include "koop/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "koop/errors.hpp"

namespace koop {

using nlohmann::json;

namespace {

HarmonicFunction harmonic_from_json(const json& j, const std::string& what) {
    if (!j.is_object()) throw ConfigError(what + ": expected an object with const/cos_amp/sin_amp/freq");
    for (const auto& [key, value] : j.items()) {
        if (key != "const" && key != "cos_amp" && key != "sin_amp" && key != "freq") {
            throw ConfigError(what + ": unknown field '" + key + "'");
        }
        if (!value.is_number()) throw ConfigError(what + "." + key + ": expected a number");
    }
    HarmonicFunction f;
    f.constant = j.value("const", 0.0);
    f.cos_amp = j.value("cos_amp", 0.0);
    f.sin_amp = j.value("sin_amp", 0.0);
    f.freq = j.value("freq", 0.0);
    return f;
}

json harmonic_to_json(const HarmonicFunction& f) {
    return json{{"const", f.constant}, {"cos_amp", f.cos_amp}, {"sin_amp", f.sin_amp}, {"freq", f.freq}};
}

Matrix matrix_from_json(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) throw ConfigError(what + ": expected a non-empty array of rows");
    const std::size_t rows = j.size();
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    if (cols == 0) throw ConfigError(what + ": rows must be non-empty arrays");
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols) {
            throw ConfigError(what + ": row " + std::to_string(r) + " has inconsistent length");
        }
        for (std::size_t c = 0; c < cols; ++c) {
            if (!j[r][c].is_number()) {
                throw ConfigError(what + "[" + std::to_string(r) + "][" + std::to_string(c) +
                                  "]: expected a number");
            }
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
        }
    }
    return m;
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c).real());
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string require_type(const json& j) {
    if (!j.is_object()) throw ConfigError("system description must be a JSON object");
    if (!j.contains("type") || !j["type"].is_string()) {
        throw ConfigError("system description needs a string 'type' field");
    }
    return j["type"].get<std::string>();
}

}  // namespace

SystemSpec system_from_json(const json& j) {
    const std::string type = require_type(j);
    if (type == "catalog") {
        if (!j.contains("name") || !j["name"].is_string()) {
            throw ConfigError("catalog system needs a string 'name' field");
        }
        std::map<std::string, double> overrides;
        if (j.contains("overrides")) {
            if (!j["overrides"].is_object()) throw ConfigError("'overrides' must be an object");
            for (const auto& [key, value] : j["overrides"].items()) {
                if (!value.is_number()) throw ConfigError("override '" + key + "' must be a number");
                overrides[key] = value.get<double>();
            }
        }
        return catalog(j["name"].get<std::string>(), overrides);
    }
    if (type == "hybrid") {
        if (!j.contains("switch_times") || !j["switch_times"].is_array() || j["switch_times"].empty()) {
            throw ConfigError("hybrid system needs a non-empty 'switch_times' array");
        }
        if (!j.contains("matrices") || !j["matrices"].is_array() ||
            j["matrices"].size() != j["switch_times"].size()) {
            throw ConfigError("hybrid system needs one matrix per switch time");
        }
        HybridSystem hy;
        for (const auto& t : j["switch_times"]) {
            if (!t.is_number()) throw ConfigError("switch_times entries must be numbers");
            hy.switch_times.push_back(t.get<double>());
        }
        for (std::size_t l = 1; l < hy.switch_times.size(); ++l) {
            if (hy.switch_times[l] <= hy.switch_times[l - 1]) {
                throw ConfigError("switch_times must be strictly increasing");
            }
        }
        const int n = static_cast<int>(j["matrices"][0].size());
        for (std::size_t l = 0; l < j["matrices"].size(); ++l) {
            Matrix m = matrix_from_json(j["matrices"][l], "matrices[" + std::to_string(l) + "]");
            if (m.rows() != n || m.cols() != n) {
                throw ConfigError("matrices[" + std::to_string(l) + "] must be " + std::to_string(n) +
                                  "x" + std::to_string(n));
            }
            hy.matrices.push_back(std::move(m));
        }
        SystemSpec spec;
        spec.variant = std::move(hy);
        spec.name = "hybrid";
        return spec;
    }
    if (type == "spiral") {
        SpiralBlock sp;
        sp.sigma = j.contains("sigma") ? harmonic_from_json(j["sigma"], "sigma") : HarmonicFunction{};
        sp.omega = j.contains("omega") ? harmonic_from_json(j["omega"], "omega") : HarmonicFunction{};
        SystemSpec spec;
        spec.variant = sp;
        spec.name = "spiral";
        spec.default_x0 = RealVector::Constant(2, 1.0);
        return spec;
    }
    throw ConfigError("unknown system type '" + type + "' (expected catalog, hybrid, or spiral)");
}

json canonical_system_json(const json& j) {
    const std::string type = require_type(j);
    system_from_json(j);  // full validation first
    if (type == "catalog") {
        json out{{"type", "catalog"}, {"name", j["name"]}};
        out["overrides"] = j.value("overrides", json::object());
        return out;
    }
    if (type == "hybrid") {
        json out{{"type", "hybrid"}, {"switch_times", j["switch_times"]}};
        json mats = json::array();
        for (std::size_t l = 0; l < j["matrices"].size(); ++l) {
            mats.push_back(matrix_to_json(matrix_from_json(j["matrices"][l], "matrices")));
        }
        out["matrices"] = std::move(mats);
        return out;
    }
    json out{{"type", "spiral"}};
    out["sigma"] = harmonic_to_json(j.contains("sigma") ? harmonic_from_json(j["sigma"], "sigma")
                                                        : HarmonicFunction{});
    out["omega"] = harmonic_to_json(j.contains("omega") ? harmonic_from_json(j["omega"], "omega")
                                                        : HarmonicFunction{});
    return out;
}

json system_json_from_argument(const std::string& arg) {
    if (arg.empty()) throw ConfigError("--system argument is empty");
    if (arg.front() == '{') {
        try {
            return json::parse(arg);
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("inline system JSON: ") + e.what());
        }
    }
    if (std::filesystem::exists(arg)) {
        std::ifstream in(arg);
        if (!in) throw IoError("cannot open system file '" + arg + "'");
        try {
            json j;
            in >> j;
            return j;
        } catch (const json::parse_error& e) {
            throw ConfigError(arg + ": " + e.what());
        }
    }
    // Bare catalog name shorthand.
    return json{{"type", "catalog"}, {"name", arg}};
}

SystemSpec system_from_argument(const std::string& arg) {
    return system_from_json(system_json_from_argument(arg));
}

RealVector parse_x0(const std::string& text) {
    std::vector<double> vals;
    std::istringstream ss(text);
    std::string field;
    while (std::getline(ss, field, ',')) {
        try {
            std::size_t pos = 0;
            vals.push_back(std::stod(field, &pos));
            if (pos != field.size()) throw std::invalid_argument(field);
        } catch (const std::exception&) {
            throw ConfigError("--x0: not a number: '" + field + "'");
        }
    }
    if (vals.empty()) throw ConfigError("--x0: no components given");
    RealVector x0(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) x0[static_cast<Eigen::Index>(i)] = vals[i];
    return x0;
}

ObservableMap parse_pairings(const std::string& text) {
    ObservableMap map;
    std::size_t pos = 0;
    while (pos < text.size()) {
        if (text[pos] == ',' || text[pos] == ';' || text[pos] == ' ') {
            ++pos;
            continue;
        }
        if (text[pos] != '(') throw ConfigError("--pairs: expected '(' at position " + std::to_string(pos));
        const std::size_t close = text.find(')', pos);
        if (close == std::string::npos) throw ConfigError("--pairs: unbalanced parenthesis");
        const std::string body = text.substr(pos + 1, close - pos - 1);
        const std::size_t comma = body.find(',');
        if (comma == std::string::npos) throw ConfigError("--pairs: pair '(" + body + ")' needs two indices");
        try {
            const int i = std::stoi(body.substr(0, comma));
            const int j = std::stoi(body.substr(comma + 1));
            map.pairings.emplace_back(i, j);
        } catch (const std::exception&) {
            throw ConfigError("--pairs: bad indices in '(" + body + ")'");
        }
        pos = close + 1;
    }
    if (map.pairings.empty()) throw ConfigError("--pairs: no pairs given");
    return map;
}

}  // namespace koop
