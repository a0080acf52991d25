#include <cctype>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "momlin/case.hpp"
#include "momlin/errors.hpp"

namespace momlin {
namespace detail {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Matrix {
    std::vector<std::vector<double>> rows;
};

// Strip a trailing MATLAB comment (% ...) from a line.
std::string strip_comment(const std::string& line) {
    auto pos = line.find('%');
    return pos == std::string::npos ? line : line.substr(0, pos);
}

bool parse_row(const std::string& text, std::vector<double>& out) {
    out.clear();
    std::istringstream ss(text);
    std::string tok;
    while (ss >> tok) {
        if (tok == ";" || tok.empty()) continue;
        // trailing semicolons/commas stuck to a number
        while (!tok.empty() && (tok.back() == ';' || tok.back() == ','))
            tok.pop_back();
        if (tok.empty()) continue;
        std::size_t used = 0;
        double v;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            return false;
        }
        if (used != tok.size()) return false;
        out.push_back(v);
    }
    return true;
}

} // namespace

NetworkCase parse_matpower(const std::string& source) {
    std::map<std::string, Matrix> mats;
    double base_mva = 0.0;
    bool have_base = false;
    std::string name;

    std::istringstream in(source);
    std::string line;
    int lineno = 0;
    std::string open_matrix; // name of matrix currently being read

    while (std::getline(in, line)) {
        ++lineno;
        std::string body = strip_comment(line);
        // trim
        auto first = body.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        auto last = body.find_last_not_of(" \t\r");
        body = body.substr(first, last - first + 1);
        if (body.empty()) continue;

        if (!open_matrix.empty()) {
            bool closes = false;
            auto close = body.find(']');
            if (close != std::string::npos) {
                closes = true;
                body = body.substr(0, close);
            }
            std::vector<double> row;
            if (!parse_row(body, row))
                throw ParseError("line " + std::to_string(lineno) +
                                 ": malformed matrix row in mpc." + open_matrix);
            if (!row.empty()) mats[open_matrix].rows.push_back(std::move(row));
            if (closes) open_matrix.clear();
            continue;
        }

        if (body.rfind("function", 0) == 0) {
            auto eq = body.find('=');
            if (eq != std::string::npos) {
                std::istringstream ns(body.substr(eq + 1));
                ns >> name;
            }
            continue;
        }
        if (body.rfind("mpc.", 0) != 0) continue;

        auto eq = body.find('=');
        if (eq == std::string::npos)
            throw ParseError("line " + std::to_string(lineno) + ": expected '='");
        std::string key = body.substr(4, eq - 4);
        auto kend = key.find_last_not_of(" \t");
        key = key.substr(0, kend + 1);
        std::string rhs = body.substr(eq + 1);

        if (key == "version") continue;
        if (key == "baseMVA") {
            std::istringstream vs(rhs);
            if (!(vs >> base_mva))
                throw ParseError("line " + std::to_string(lineno) + ": bad baseMVA");
            have_base = true;
            continue;
        }

        auto open = rhs.find('[');
        if (open == std::string::npos) continue; // unknown scalar field: ignore
        std::string tail = rhs.substr(open + 1);
        auto close = tail.find(']');
        bool closes = close != std::string::npos;
        if (closes) tail = tail.substr(0, close);
        // rows may be separated by ';' on one line
        std::string seg;
        std::istringstream segs(tail);
        Matrix& m = mats[key];
        while (std::getline(segs, seg, ';')) {
            std::vector<double> row;
            if (!parse_row(seg, row))
                throw ParseError("line " + std::to_string(lineno) +
                                 ": malformed matrix row in mpc." + key);
            if (!row.empty()) m.rows.push_back(std::move(row));
        }
        if (!closes) open_matrix = key;
    }

    if (!have_base) throw ParseError("missing mpc.baseMVA");
    for (const char* req : {"bus", "gen", "branch", "gencost"})
        if (!mats.count(req)) throw ParseError(std::string("missing mpc.") + req);

    NetworkCase c;
    c.name = name;
    c.base_mva = base_mva;

    // bus: BUS_I TYPE PD QD GS BS AREA VM VA BASEKV ZONE VMAX VMIN
    for (const auto& row : mats["bus"].rows) {
        if (row.size() < 13) throw ParseError("mpc.bus row has fewer than 13 columns");
        Bus b;
        b.id = static_cast<int>(row[0]);
        b.is_slack = static_cast<int>(row[1]) == 3;
        b.p_nominal = row[2] / base_mva;
        b.q_nominal = row[3] / base_mva;
        b.gs = row[4] / base_mva;
        b.bs = row[5] / base_mva;
        b.vmax = row[11];
        b.vmin = row[12];
        c.buses.push_back(b);
    }

    // gen: BUS PG QG QMAX QMIN VG MBASE STATUS PMAX PMIN ...
    std::vector<std::size_t> live_gen_rows;
    for (std::size_t gi = 0; gi < mats["gen"].rows.size(); ++gi) {
        const auto& row = mats["gen"].rows[gi];
        if (row.size() < 10) throw ParseError("mpc.gen row has fewer than 10 columns");
        if (row[7] <= 0) continue; // out of service
        Generator g;
        g.bus = static_cast<int>(row[0]);
        g.qmax = row[3] / base_mva;
        g.qmin = row[4] / base_mva;
        g.pmax = row[8] / base_mva;
        g.pmin = row[9] / base_mva;
        c.generators.push_back(g);
        live_gen_rows.push_back(gi);
    }

    // branch: F T R X B RATEA RATEB RATEC TAP SHIFT STATUS ...
    for (const auto& row : mats["branch"].rows) {
        if (row.size() < 11) throw ParseError("mpc.branch row has fewer than 11 columns");
        if (row[10] <= 0) continue; // out of service
        Branch br;
        br.from = static_cast<int>(row[0]);
        br.to = static_cast<int>(row[1]);
        const double r = row[2], x = row[3];
        const double den = r * r + x * x;
        if (den <= 0.0) throw ParseError("branch with zero impedance unsupported");
        br.g = r / den;
        br.b = -x / den;
        br.g_sh = 0.0;
        br.b_sh = row[4];
        br.s_max = row[5] > 0.0 ? row[5] / base_mva : unlimited;
        br.tau = row[8] > 0.0 ? row[8] : 1.0;
        br.theta = row[9] * kPi / 180.0;
        c.branches.push_back(br);
    }

    // gencost: MODEL STARTUP SHUTDOWN NCOST c_{n-1} ... c_0 (descending powers)
    const auto& gc = mats["gencost"].rows;
    for (std::size_t k = 0; k < c.generators.size(); ++k) {
        if (live_gen_rows[k] >= gc.size())
            throw ParseError("mpc.gencost has fewer rows than mpc.gen");
        const auto& row = gc[live_gen_rows[k]];
        if (row.size() < 4) throw ParseError("mpc.gencost row has fewer than 4 columns");
        if (static_cast<int>(row[0]) != 2)
            throw ValidationError("only polynomial generator costs are supported");
        const int ncost = static_cast<int>(row[3]);
        if (row.size() < static_cast<std::size_t>(4 + ncost))
            throw ParseError("mpc.gencost row shorter than its NCOST");
        std::vector<double> desc(row.begin() + 4, row.begin() + 4 + ncost);
        // reject genuine degree > 2; leading zero padding is tolerated
        while (desc.size() > 3 && desc.front() == 0.0) desc.erase(desc.begin());
        if (desc.size() > 3)
            throw ValidationError("generator cost degree exceeds 2");
        auto& cost = c.generators[k].cost;
        cost.assign(desc.rbegin(), desc.rend()); // ascending powers, MW units
        // convert to per-unit power argument: P_MW = base * P_pu
        double scale = 1.0;
        for (auto& coef : cost) {
            coef *= scale;
            scale *= base_mva;
        }
    }

    return c;
}

} // namespace detail
} // namespace momlin
