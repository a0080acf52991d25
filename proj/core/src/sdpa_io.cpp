#include "momlin/sdpa_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "momlin/errors.hpp"

namespace momlin {

namespace {

std::string fmt(double v) {
    std::array<char, 40> buf;
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc()) {
        std::snprintf(buf.data(), buf.size(), "%.17g", v);
        return std::string(buf.data());
    }
    return std::string(buf.data(), ptr);
}

// entry key: (matno, block, i, j), all 1-indexed except matno (0 = F0)
using EntryKey = std::tuple<int, int, int, int>;

void add_entry(std::map<EntryKey, double>& entries, int matno, int blk, int i, int j,
               double v) {
    if (v == 0.0) return;
    if (i > j) std::swap(i, j);
    entries[{matno, blk, i, j}] += v;
}

std::vector<double> numbers_on_line(const std::string& line) {
    std::string clean = line;
    for (char& c : clean)
        if (c == ',' || c == '{' || c == '}' || c == '(' || c == ')') c = ' ';
    std::vector<double> vals;
    std::istringstream iss(clean);
    double v;
    while (iss >> v) vals.push_back(v);
    return vals;
}

} // namespace

void export_sdpa(const ConicProblem& problem, std::ostream& os) {
    if (!problem.soc.empty())
        throw ValidationError(
            "second-order cone blocks have no SDPA encoding; convert with soc_to_psd");
    const int m = problem.num_vars;
    if (m <= 0) throw ValidationError("cannot export a problem with no variables");

    const int npsd = static_cast<int>(problem.psd.size());
    const int nn = static_cast<int>(problem.nonneg.size());
    const int ne = static_cast<int>(problem.equalities.size());
    const int ndiag = nn + 2 * ne;
    const int nblock = npsd + (ndiag > 0 ? 1 : 0);
    if (nblock == 0) throw ValidationError("cannot export a problem with no cone blocks");

    std::map<EntryKey, double> entries;
    for (int b = 0; b < npsd; ++b) {
        const PsdBlock& blk = problem.psd[b];
        if (blk.dim <= 0) throw ValidationError("PSD block with nonpositive dimension");
        for (const auto& t : blk.constant) add_entry(entries, 0, b + 1, t.row + 1, t.col + 1, -t.value);
        for (const auto& e : blk.entries) {
            if (e.var < 0 || e.var >= m) throw ValidationError("PSD entry references unknown variable");
            add_entry(entries, e.var + 1, b + 1, e.row + 1, e.col + 1, e.coef);
        }
    }
    const int dblk = npsd + 1;
    auto add_scalar = [&](const ScalarRow& row, int pos, double sign) {
        add_entry(entries, 0, dblk, pos, pos, -sign * row.constant);
        for (const auto& t : row.terms) {
            if (t.var < 0 || t.var >= m) throw ValidationError("scalar row references unknown variable");
            add_entry(entries, t.var + 1, dblk, pos, pos, sign * t.coef);
        }
    };
    for (int r = 0; r < nn; ++r) add_scalar(problem.nonneg[r], r + 1, 1.0);
    for (int e = 0; e < ne; ++e) {
        add_scalar(problem.equalities[e], nn + 2 * e + 1, 1.0);
        add_scalar(problem.equalities[e], nn + 2 * e + 2, -1.0);
    }

    if (problem.objective_constant != 0.0)
        os << "*offset " << fmt(problem.objective_constant) << "\n";
    os << m << "\n" << nblock << "\n";
    for (int b = 0; b < npsd; ++b) os << (b ? " " : "") << problem.psd[b].dim;
    if (ndiag > 0) os << (npsd ? " " : "") << -ndiag;
    os << "\n";
    std::vector<double> c(m, 0.0);
    for (const auto& t : problem.objective) {
        if (t.var < 0 || t.var >= m) throw ValidationError("objective references unknown variable");
        c[t.var] += t.coef;
    }
    for (int i = 0; i < m; ++i) os << (i ? " " : "") << fmt(c[i]);
    os << "\n";
    for (const auto& [key, val] : entries) {
        if (val == 0.0) continue;
        os << std::get<0>(key) << " " << std::get<1>(key) << " " << std::get<2>(key)
           << " " << std::get<3>(key) << " " << fmt(val) << "\n";
    }
}

void export_sdpa(const ConicProblem& problem, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ParseError("cannot open for writing: " + path);
    export_sdpa(problem, os);
    if (!os) throw ParseError("failed while writing: " + path);
}

ConicProblem import_sdpa(std::istream& is) {
    ConicProblem p;
    std::string line;
    int stage = 0; // 0:mdim 1:nblock 2:blockstruct 3:c 4:entries
    int m = 0, nblock = 0;
    std::vector<int> bstruct;
    std::vector<double> c;
    // per diagonal block: position -> accumulated scalar row
    struct DiagRow {
        std::map<int, double> coef;
        double constant = 0.0;
    };
    std::vector<std::vector<DiagRow>> diag_rows; // indexed like bstruct
    std::vector<PsdBlock*> psd_of_block;
    int lineno = 0;
    auto fail = [&](const std::string& msg) -> ParseError {
        return ParseError("sdpa line " + std::to_string(lineno) + ": " + msg);
    };

    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '*' || line[0] == '"') {
            std::istringstream iss(line.substr(1));
            std::string tag;
            double v;
            if (iss >> tag >> v && tag == "offset") p.objective_constant = v;
            continue;
        }
        const std::vector<double> vals = numbers_on_line(line);
        if (vals.empty()) continue;
        switch (stage) {
        case 0:
            m = static_cast<int>(vals[0]);
            if (m <= 0) throw fail("mDIM must be positive");
            p.num_vars = m;
            stage = 1;
            break;
        case 1:
            nblock = static_cast<int>(vals[0]);
            if (nblock <= 0) throw fail("nBlock must be positive");
            stage = 2;
            break;
        case 2:
            for (double v : vals) bstruct.push_back(static_cast<int>(v));
            if (static_cast<int>(bstruct.size()) > nblock) throw fail("too many block sizes");
            if (static_cast<int>(bstruct.size()) == nblock) {
                diag_rows.resize(nblock);
                psd_of_block.assign(nblock, nullptr);
                for (int b = 0; b < nblock; ++b) {
                    if (bstruct[b] == 0) throw fail("zero block size");
                    if (bstruct[b] > 0) {
                        p.psd.emplace_back();
                        p.psd.back().dim = bstruct[b];
                    } else {
                        diag_rows[b].resize(-bstruct[b]);
                    }
                }
                // second pass to bind pointers (vector now stable)
                int pi = 0;
                for (int b = 0; b < nblock; ++b)
                    if (bstruct[b] > 0) psd_of_block[b] = &p.psd[pi++];
                stage = 3;
            }
            break;
        case 3:
            for (double v : vals) c.push_back(v);
            if (static_cast<int>(c.size()) > m) throw fail("too many objective entries");
            if (static_cast<int>(c.size()) == m) {
                for (int i = 0; i < m; ++i)
                    if (c[i] != 0.0) p.objective.push_back({i, c[i]});
                stage = 4;
            }
            break;
        case 4: {
            if (vals.size() != 5) throw fail("expected: matno block i j value");
            const int matno = static_cast<int>(vals[0]);
            const int blk = static_cast<int>(vals[1]) - 1;
            int i = static_cast<int>(vals[2]) - 1;
            int j = static_cast<int>(vals[3]) - 1;
            const double v = vals[4];
            if (matno < 0 || matno > m) throw fail("matrix index out of range");
            if (blk < 0 || blk >= nblock) throw fail("block index out of range");
            if (i > j) std::swap(i, j);
            if (bstruct[blk] > 0) {
                if (j >= bstruct[blk]) throw fail("entry outside block");
                PsdBlock& pb = *psd_of_block[blk];
                if (matno == 0)
                    pb.constant.push_back({i, j, -v});
                else
                    pb.entries.push_back({matno - 1, i, j, v});
            } else {
                if (i != j) throw fail("off-diagonal entry in diagonal block");
                if (j >= -bstruct[blk]) throw fail("entry outside block");
                DiagRow& r = diag_rows[blk][i];
                if (matno == 0)
                    r.constant += -v;
                else
                    r.coef[matno - 1] += v;
            }
            break;
        }
        }
    }
    if (stage != 4) throw ParseError("sdpa file ended before the entry section");

    // rebuild scalar rows; adjacent exact +/- pairs fuse into equalities
    for (int b = 0; b < nblock; ++b) {
        if (bstruct[b] > 0) continue;
        const auto& rows = diag_rows[b];
        auto to_scalar = [](const DiagRow& r) {
            ScalarRow s;
            s.constant = r.constant;
            for (const auto& [var, cf] : r.coef)
                if (cf != 0.0) s.terms.push_back({var, cf});
            return s;
        };
        auto negates = [](const DiagRow& a, const DiagRow& b2) {
            if (a.constant != -b2.constant) return false;
            if (a.coef.size() != b2.coef.size()) return false;
            auto ia = a.coef.begin();
            for (auto ib = b2.coef.begin(); ib != b2.coef.end(); ++ia, ++ib)
                if (ia->first != ib->first || ia->second != -ib->second) return false;
            return true;
        };
        for (std::size_t r = 0; r < rows.size();) {
            const bool nonempty = !rows[r].coef.empty() || rows[r].constant != 0.0;
            if (nonempty && r + 1 < rows.size() && negates(rows[r], rows[r + 1])) {
                p.equalities.push_back(to_scalar(rows[r]));
                r += 2;
            } else {
                p.nonneg.push_back(to_scalar(rows[r]));
                r += 1;
            }
        }
    }
    return p;
}

ConicProblem import_sdpa_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("cannot open: " + path);
    return import_sdpa(is);
}

PsdBlock soc_to_psd(const SocBlock& soc) {
    const int d = static_cast<int>(soc.rows.size());
    if (d < 1) throw ValidationError("empty second-order cone block");
    PsdBlock out;
    out.dim = d;
    std::map<std::pair<int, int>, double> cacc;
    std::map<std::tuple<int, int, int>, double> eacc;
    auto place = [&](const ScalarRow& row, int i, int j) {
        if (row.constant != 0.0) cacc[{i, j}] += row.constant;
        for (const auto& t : row.terms) eacc[{t.var, i, j}] += t.coef;
    };
    // diagonal carries t, first row/column carries u
    for (int i = 0; i < d; ++i) place(soc.rows[0], i, i);
    for (int j = 1; j < d; ++j) place(soc.rows[j], 0, j);
    for (const auto& [rc, v] : cacc)
        if (v != 0.0) out.constant.push_back({rc.first, rc.second, v});
    for (const auto& [key, v] : eacc)
        if (v != 0.0)
            out.entries.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), v});
    return out;
}

} // namespace momlin
