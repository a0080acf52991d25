#include <cmath>
#include <string>

#include <json.hpp>

#include "momlin/case.hpp"
#include "momlin/errors.hpp"

namespace momlin {
namespace detail {

using nlohmann::json;

namespace {

double num(const json& j, const char* key, double fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    if (!it->is_number())
        throw ParseError(std::string("case JSON: field '") + key + "' must be a number");
    return it->get<double>();
}

double req(const json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number())
        throw ParseError("case JSON: " + where + " missing numeric field '" + key + "'");
    return it->get<double>();
}

} // namespace

NetworkCase parse_json_case(const std::string& source) {
    json j;
    try {
        j = json::parse(source);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("case JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("case JSON: top level must be an object");

    NetworkCase c;
    if (j.contains("name") && j["name"].is_string()) c.name = j["name"].get<std::string>();
    c.base_mva = num(j, "base_mva", 100.0);

    if (!j.contains("buses") || !j["buses"].is_array())
        throw ParseError("case JSON: missing 'buses' array");
    for (const auto& jb : j["buses"]) {
        Bus b;
        b.id = static_cast<int>(req(jb, "id", "bus"));
        b.vmin = req(jb, "vmin", "bus");
        b.vmax = req(jb, "vmax", "bus");
        b.p_nominal = num(jb, "p_nominal", 0.0);
        b.q_nominal = num(jb, "q_nominal", 0.0);
        b.gs = num(jb, "gs", 0.0);
        b.bs = num(jb, "bs", 0.0);
        b.is_slack = jb.value("slack", false);
        c.buses.push_back(b);
    }

    for (const auto& jb : j.value("branches", json::array())) {
        Branch br;
        br.from = static_cast<int>(req(jb, "from", "branch"));
        br.to = static_cast<int>(req(jb, "to", "branch"));
        br.g = req(jb, "g", "branch");
        br.b = req(jb, "b", "branch");
        br.g_sh = num(jb, "g_sh", 0.0);
        br.b_sh = num(jb, "b_sh", 0.0);
        br.tau = num(jb, "tau", 1.0);
        br.theta = num(jb, "theta", 0.0);
        br.s_max = num(jb, "s_max", unlimited);
        c.branches.push_back(br);
    }

    for (const auto& jg : j.value("generators", json::array())) {
        Generator g;
        g.bus = static_cast<int>(req(jg, "bus", "generator"));
        g.pmin = req(jg, "pmin", "generator");
        g.pmax = req(jg, "pmax", "generator");
        g.qmin = req(jg, "qmin", "generator");
        g.qmax = req(jg, "qmax", "generator");
        if (jg.contains("cost")) {
            if (!jg["cost"].is_array())
                throw ParseError("case JSON: generator 'cost' must be an array");
            for (const auto& v : jg["cost"]) {
                if (!v.is_number())
                    throw ParseError("case JSON: generator cost entries must be numbers");
                g.cost.push_back(v.get<double>());
            }
            if (g.cost.size() > 3)
                throw ValidationError("generator cost degree exceeds 2");
        }
        c.generators.push_back(g);
    }

    return c;
}

} // namespace detail

std::string serialize_case_json(const NetworkCase& c) {
    using nlohmann::json;
    json j;
    j["name"] = c.name;
    j["base_mva"] = c.base_mva;

    j["buses"] = json::array();
    for (const auto& b : c.buses) {
        json jb{{"id", b.id},       {"vmin", b.vmin},
                {"vmax", b.vmax},   {"p_nominal", b.p_nominal},
                {"q_nominal", b.q_nominal}};
        if (b.gs != 0.0) jb["gs"] = b.gs;
        if (b.bs != 0.0) jb["bs"] = b.bs;
        if (b.is_slack) jb["slack"] = true;
        j["buses"].push_back(std::move(jb));
    }

    j["branches"] = json::array();
    for (const auto& br : c.branches) {
        json jb{{"from", br.from}, {"to", br.to},   {"g", br.g},
                {"b", br.b},       {"g_sh", br.g_sh}, {"b_sh", br.b_sh},
                {"tau", br.tau},   {"theta", br.theta}};
        if (std::isfinite(br.s_max)) jb["s_max"] = br.s_max;
        j["branches"].push_back(std::move(jb));
    }

    j["generators"] = json::array();
    for (const auto& g : c.generators) {
        j["generators"].push_back(json{{"bus", g.bus},
                                       {"pmin", g.pmin},
                                       {"pmax", g.pmax},
                                       {"qmin", g.qmin},
                                       {"qmax", g.qmax},
                                       {"cost", g.cost}});
    }

    return j.dump(2) + "\n";
}

} // namespace momlin
