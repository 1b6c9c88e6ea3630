#pragma once

// Model-spec JSON ingestion and canonical serialization, history files, and
// JSON encodings of reports.
//
// General spec:  { "m": 2, "F": Op, "V": Op }
//                Op = { "A0": [[..]], "delayed": [ { "tau": t, "A": [[..]] } ] }
// Tick spec:     { "tick": { "b": .., "r": [4], "d": [4], "tau": [2],
//                            "N_cap": .., "h": .. } }

#include "r0fde/delay_op.hpp"
#include "r0fde/errors.hpp"
#include "r0fde/linalg.hpp"
#include "r0fde/r0_engine.hpp"
#include "r0fde/tick_model.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace r0fde::io {

using nlohmann::json;

struct ModelSpec {
    std::optional<tick::TickParams> tick;
    std::optional<NextGenModel> general;

    NextGenModel model() const { return tick ? tick::linearize(*tick) : *general; }
    std::size_t dim() const { return tick ? tick::kStages : general->dim(); }
};

namespace detail {

    [[noreturn]] inline void schema_error(const std::string& path, const std::string& msg)
    {
        throw Error(ErrorCode::Schema, path + ": " + msg);
    }

    inline double number_at(const json& j, const std::string& path)
    {
        if (!j.is_number()) {
            schema_error(path, "expected a number");
        }
        const double v = j.get<double>();
        if (!std::isfinite(v)) {
            schema_error(path, "number is not finite");
        }
        return v;
    }

    inline const json& field(const json& obj, const char* key, const std::string& path)
    {
        if (!obj.is_object()) {
            schema_error(path, "expected an object");
        }
        const auto it = obj.find(key);
        if (it == obj.end()) {
            schema_error(path, std::string("missing field \"") + key + "\"");
        }
        return *it;
    }

    inline void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                               const std::string& path)
    {
        for (const auto& [key, value] : obj.items()) {
            bool ok = false;
            for (const char* k : known) {
                ok = ok || key == k;
            }
            if (!ok) {
                schema_error(path, "unknown field \"" + key + "\"");
            }
        }
    }

    inline DenseMatrix matrix_at(const json& j, std::size_t m, const std::string& path)
    {
        if (!j.is_array() || j.size() != m) {
            schema_error(path, "expected " + std::to_string(m) + " rows");
        }
        DenseMatrix out(m);
        for (std::size_t i = 0; i < m; ++i) {
            const auto& row = j[i];
            const std::string rpath = path + "[" + std::to_string(i) + "]";
            if (!row.is_array() || row.size() != m) {
                schema_error(rpath, "expected " + std::to_string(m) + " columns");
            }
            for (std::size_t k = 0; k < m; ++k) {
                out(i, k) = number_at(row[k], rpath + "[" + std::to_string(k) + "]");
            }
        }
        return out;
    }

    inline DelayLinearOperator operator_at(const json& j, std::size_t m, const std::string& path)
    {
        if (!j.is_object()) {
            schema_error(path, "expected an object");
        }
        reject_unknown(j, {"A0", "delayed"}, path);
        DenseMatrix a0 = matrix_at(field(j, "A0", path), m, path + ".A0");
        std::vector<DelayTerm> terms;
        if (const auto it = j.find("delayed"); it != j.end()) {
            if (!it->is_array()) {
                schema_error(path + ".delayed", "expected an array");
            }
            for (std::size_t k = 0; k < it->size(); ++k) {
                const std::string tpath = path + ".delayed[" + std::to_string(k) + "]";
                const auto& t = (*it)[k];
                if (!t.is_object()) {
                    schema_error(tpath, "expected an object");
                }
                reject_unknown(t, {"tau", "A"}, tpath);
                const double tau = number_at(field(t, "tau", tpath), tpath + ".tau");
                if (!(tau > 0.0)) {
                    schema_error(tpath + ".tau", "delay must be > 0");
                }
                terms.push_back({tau, matrix_at(field(t, "A", tpath), m, tpath + ".A")});
            }
        }
        return DelayLinearOperator(std::move(a0), std::move(terms));
    }

    inline tick::TickParams tick_at(const json& j, const std::string& path)
    {
        if (!j.is_object()) {
            schema_error(path, "expected an object");
        }
        reject_unknown(j, {"b", "r", "d", "tau", "N_cap", "h"}, path);
        tick::TickParams p;
        auto array_of = [&](const char* key, std::size_t len) {
            const auto& a = field(j, key, path);
            const std::string apath = path + "." + key;
            if (!a.is_array() || a.size() != len) {
                schema_error(apath, "expected an array of " + std::to_string(len) + " numbers");
            }
            std::vector<double> out;
            for (std::size_t i = 0; i < len; ++i) {
                out.push_back(number_at(a[i], apath + "[" + std::to_string(i) + "]"));
            }
            return out;
        };
        p.b = number_at(field(j, "b", path), path + ".b");
        const auto r = array_of("r", 4);
        const auto d = array_of("d", 4);
        std::copy(r.begin(), r.end(), p.r.begin());
        std::copy(d.begin(), d.end(), p.d.begin());
        const auto tau = array_of("tau", 2);
        p.tau1 = tau[0];
        p.tau2 = tau[1];
        p.n_cap = number_at(field(j, "N_cap", path), path + ".N_cap");
        p.h = number_at(field(j, "h", path), path + ".h");
        try {
            p.require_valid();
        } catch (const Error& e) {
            schema_error(path, e.what());
        }
        return p;
    }

    inline std::string fmt(double v)
    {
        char buf[40];
        // -0 prints as 0 so canonical text is a fixed point of parse.
        std::snprintf(buf, sizeof buf, "%.17g", v == 0.0 ? 0.0 : v);
        return buf;
    }

    inline void write_matrix(std::ostringstream& os, const DenseMatrix& a)
    {
        os << '[';
        for (std::size_t i = 0; i < a.dim(); ++i) {
            os << (i ? ", [" : "[");
            for (std::size_t k = 0; k < a.dim(); ++k) {
                os << (k ? ", " : "") << fmt(a(i, k));
            }
            os << ']';
        }
        os << ']';
    }

    inline void write_operator(std::ostringstream& os, const DelayLinearOperator& op,
                               const std::string& indent)
    {
        os << "{\n" << indent << "  \"A0\": ";
        write_matrix(os, op.instantaneous());
        os << ",\n" << indent << "  \"delayed\": [";
        const auto& terms = op.terms();
        for (std::size_t k = 0; k < terms.size(); ++k) {
            os << (k ? "," : "") << '\n' << indent << "    {\"A\": ";
            write_matrix(os, terms[k].matrix);
            os << ", \"tau\": " << fmt(terms[k].tau) << '}';
        }
        if (!terms.empty()) {
            os << '\n' << indent << "  ";
        }
        os << "]\n" << indent << '}';
    }

} // namespace detail

inline ModelSpec parse_model_spec(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Schema, std::string("malformed JSON: ") + e.what());
    }
    ModelSpec spec;
    if (!doc.is_object()) {
        detail::schema_error("$", "expected an object");
    }
    if (doc.contains("tick")) {
        detail::reject_unknown(doc, {"tick"}, "$");
        spec.tick = detail::tick_at(doc["tick"], "$.tick");
        return spec;
    }
    detail::reject_unknown(doc, {"m", "F", "V"}, "$");
    const auto& mj = detail::field(doc, "m", "$");
    if (!mj.is_number_integer() || mj.get<long long>() < 1) {
        detail::schema_error("$.m", "expected a positive integer");
    }
    const auto m = static_cast<std::size_t>(mj.get<long long>());
    auto f = detail::operator_at(detail::field(doc, "F", "$"), m, "$.F");
    auto v = detail::operator_at(detail::field(doc, "V", "$"), m, "$.V");
    spec.general.emplace(std::move(f), std::move(v));
    return spec;
}

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::Schema, "cannot open " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline ModelSpec load_model_spec(const std::string& path) { return parse_model_spec(read_file(path)); }

/// Canonical text: sorted keys, %.17g numbers, fixed layout, trailing newline.
inline std::string to_canonical_json(const ModelSpec& spec)
{
    using detail::fmt;
    std::ostringstream os;
    if (spec.tick) {
        const auto& p = *spec.tick;
        os << "{\n  \"tick\": {\n";
        os << "    \"N_cap\": " << fmt(p.n_cap) << ",\n";
        os << "    \"b\": " << fmt(p.b) << ",\n";
        os << "    \"d\": [" << fmt(p.d[0]) << ", " << fmt(p.d[1]) << ", " << fmt(p.d[2]) << ", "
           << fmt(p.d[3]) << "],\n";
        os << "    \"h\": " << fmt(p.h) << ",\n";
        os << "    \"r\": [" << fmt(p.r[0]) << ", " << fmt(p.r[1]) << ", " << fmt(p.r[2]) << ", "
           << fmt(p.r[3]) << "],\n";
        os << "    \"tau\": [" << fmt(p.tau1) << ", " << fmt(p.tau2) << "]\n";
        os << "  }\n}\n";
        return os.str();
    }
    const auto& model = *spec.general;
    os << "{\n  \"F\": ";
    detail::write_operator(os, model.F(), "  ");
    os << ",\n  \"V\": ";
    detail::write_operator(os, model.V(), "  ");
    os << ",\n  \"m\": " << model.dim() << "\n}\n";
    return os.str();
}

inline ModelSpec general_spec(NextGenModel model)
{
    ModelSpec s;
    s.general.emplace(std::move(model));
    return s;
}

inline ModelSpec tick_spec(const tick::TickParams& p)
{
    ModelSpec s;
    s.tick = p;
    return s;
}

/// History file: { "tau": t, "values": [[u_1..u_m] x (n+1)] } sampled on the
/// uniform grid from -tau to 0.
inline HistorySegment parse_history(const std::string& text, std::size_t m)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Schema, std::string("malformed JSON: ") + e.what());
    }
    detail::reject_unknown(doc, {"tau", "values"}, "$");
    const double tau = detail::number_at(detail::field(doc, "tau", "$"), "$.tau");
    const auto& vals = detail::field(doc, "values", "$");
    if (!vals.is_array() || vals.empty()) {
        detail::schema_error("$.values", "expected a non-empty array of samples");
    }
    const std::size_t n = vals.size() - 1;
    if (tau > 0.0 && n < 1) {
        detail::schema_error("$.values", "need at least two samples when tau > 0");
    }
    HistorySegment out(m, tau, n);
    for (std::size_t j = 0; j < vals.size(); ++j) {
        const std::string path = "$.values[" + std::to_string(j) + "]";
        if (!vals[j].is_array() || vals[j].size() != m) {
            detail::schema_error(path, "expected " + std::to_string(m) + " components");
        }
        for (std::size_t i = 0; i < m; ++i) {
            out.sample(j)[i] = detail::number_at(vals[j][i], path + "[" + std::to_string(i) + "]");
        }
    }
    return out;
}

inline json to_json(const R0Report& rep)
{
    json j;
    j["r0_direct"] = rep.r0_direct;
    j["lambda_star"] = rep.lambda_star ? json(*rep.lambda_star) : json(nullptr);
    j["r0_bisection"] = rep.r0_bisection ? json(*rep.r0_bisection) : json(nullptr);
    j["t0"] = rep.t0;
    j["n"] = rep.n;
    j["regime"] = to_string(rep.regime);
    json c;
    c["a1_positive"] = rep.a1_ok;
    c["a2_cooperative"] = rep.a2_cooperative_ok;
    c["a2_stable"] = rep.a2_stable_ok;
    c["sign_r0_matches_lambda_star"] =
        rep.sign_consistent ? json(*rep.sign_consistent) : json(nullptr);
    c["bisection_matches_direct"] =
        rep.bisection_consistent ? json(*rep.bisection_consistent) : json(nullptr);
    c["all"] = rep.consistent();
    j["consistency"] = c;
    return j;
}

inline json to_json(const SignEquivalenceReport& rep)
{
    return json{{"s_L", rep.s_L}, {"s_hat", rep.s_hat}, {"consistent", rep.consistent}};
}

inline json to_json(const tick::TickState& u)
{
    return json{{"L", u[0]}, {"N", u[1]}, {"A_q", u[2]}, {"A_f", u[3]}};
}

} // namespace r0fde::io
