#ifndef AGESHS_MODEL_IO_HPP
#define AGESHS_MODEL_IO_HPP

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "model.hpp"

namespace ageshs {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                                const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) throw ParseError("unknown key \"" + key + "\" in " + where);
    }
}

} // namespace detail

inline nlohmann::json render_model(const ShsModel& model) {
    nlohmann::json j;
    j["dimension"] = model.n;
    j["states"] = model.num_states;
    if (!model.state_labels.empty()) j["labels"] = model.state_labels;
    j["drift"] = nlohmann::json::array();
    for (const auto& b : model.drift) {
        std::vector<int> row(b.begin(), b.end());
        j["drift"].push_back(row);
    }
    j["transitions"] = nlohmann::json::array();
    for (const auto& t : model.transitions) {
        nlohmann::json jt;
        jt["source"] = t.source;
        jt["target"] = t.target;
        jt["rate"] = nlohmann::json::array();
        for (const auto& [m, a] : t.rate.terms)
            jt["rate"].push_back({{"exponents", m}, {"coefficient", a}});
        if (t.reset.kind == ResetMap::Kind::LinearBinary) {
            nlohmann::json rows = nlohmann::json::array();
            for (const auto& r : t.reset.matrix) rows.push_back(std::vector<int>(r.begin(), r.end()));
            jt["reset"] = {{"matrix", rows}};
        } else {
            jt["reset"] = {{"constant", t.reset.constant}};
        }
        j["transitions"].push_back(std::move(jt));
    }
    if (!model.support_hints.empty()) {
        j["support_hints"] = nlohmann::json::array();
        for (std::size_t q = 0; q < model.support_hints.size(); ++q) {
            const auto& h = model.support_hints[q];
            nlohmann::json jh;
            jh["state"] = q;
            jh["zero"] = h.zero_components;
            nlohmann::json less = nlohmann::json::array();
            for (auto [a, b] : h.strict_less) less.push_back({a, b});
            jh["less"] = std::move(less);
            j["support_hints"].push_back(std::move(jh));
        }
    }
    return j;
}

inline ShsModel parse_model(const nlohmann::json& j) {
    using detail::reject_unknown_keys;
    if (!j.is_object()) throw ParseError("model config must be an object");
    reject_unknown_keys(j, {"dimension", "states", "labels", "drift", "transitions", "support_hints"},
                        "model config");

    ShsModel model;
    model.n = j.at("dimension").get<int>();
    model.num_states = j.at("states").get<int>();
    if (j.contains("labels")) model.state_labels = j["labels"].get<std::vector<std::string>>();
    for (const auto& row : j.at("drift")) {
        std::vector<int> r = row.get<std::vector<int>>();
        model.drift.emplace_back(r.begin(), r.end());
    }
    for (const auto& jt : j.at("transitions")) {
        reject_unknown_keys(jt, {"source", "target", "rate", "reset"}, "transition");
        Transition t;
        t.source = jt.at("source").get<int>();
        t.target = jt.at("target").get<int>();
        for (const auto& term : jt.at("rate")) {
            reject_unknown_keys(term, {"exponents", "coefficient"}, "rate term");
            t.rate.add_term(term.at("exponents").get<Exponents>(),
                            term.at("coefficient").get<double>());
        }
        const auto& jr = jt.at("reset");
        if (jr.contains("matrix")) {
            reject_unknown_keys(jr, {"matrix"}, "reset");
            std::vector<std::vector<std::uint8_t>> rows;
            for (const auto& r : jr["matrix"]) {
                std::vector<int> ri = r.get<std::vector<int>>();
                rows.emplace_back(ri.begin(), ri.end());
            }
            t.reset = ResetMap::linear_binary(std::move(rows));
        } else if (jr.contains("constant")) {
            reject_unknown_keys(jr, {"constant"}, "reset");
            t.reset = ResetMap::to_constant(jr["constant"].get<std::vector<double>>());
        } else {
            throw ParseError("reset needs \"matrix\" or \"constant\"");
        }
        model.transitions.push_back(std::move(t));
    }
    if (j.contains("support_hints")) {
        model.support_hints.assign(model.num_states, SupportHint{});
        for (const auto& jh : j["support_hints"]) {
            reject_unknown_keys(jh, {"state", "zero", "less"}, "support hint");
            int q = jh.at("state").get<int>();
            if (q < 0 || q >= model.num_states) throw ParseError("support hint state out of range");
            SupportHint h;
            h.zero_components = jh.at("zero").get<std::vector<int>>();
            for (const auto& pair : jh.at("less"))
                h.strict_less.emplace_back(pair.at(0).get<int>(), pair.at(1).get<int>());
            model.support_hints[q] = std::move(h);
        }
    }
    return model;
}

inline ShsModel load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open model file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("invalid JSON in " + path + ": " + e.what());
    }
    return parse_model(j);
}

inline void save_model_file(const ShsModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write model file: " + path);
    out << render_model(model).dump(2) << "\n";
}

} // namespace ageshs

#endif
