#include "momlin/monomial.hpp"

#include <algorithm>
#include <stdexcept>

namespace momlin {

Monomial::Monomial(std::vector<Term> terms) : terms_(std::move(terms)) {
    std::sort(terms_.begin(), terms_.end());
    // merge duplicates, drop zero powers
    std::vector<Term> merged;
    merged.reserve(terms_.size());
    for (const auto& t : terms_) {
        if (t.second == 0) continue;
        if (t.second < 0) throw std::invalid_argument("monomial power must be nonnegative");
        if (!merged.empty() && merged.back().first == t.first)
            merged.back().second += t.second;
        else
            merged.push_back(t);
    }
    terms_ = std::move(merged);
}

Monomial Monomial::var(int id, int power) {
    if (power == 0) return Monomial{};
    return Monomial{{{id, power}}};
}

int Monomial::degree() const {
    int d = 0;
    for (const auto& t : terms_) d += t.second;
    return d;
}

int Monomial::degree_in(const std::vector<int>& vars) const {
    int d = 0;
    for (const auto& t : terms_)
        if (std::find(vars.begin(), vars.end(), t.first) != vars.end()) d += t.second;
    return d;
}

int Monomial::power_of(int id) const {
    for (const auto& t : terms_)
        if (t.first == id) return t.second;
    return 0;
}

Monomial Monomial::times(const Monomial& other) const {
    std::vector<Term> out;
    out.reserve(terms_.size() + other.terms_.size());
    auto a = terms_.begin(), b = other.terms_.begin();
    while (a != terms_.end() && b != other.terms_.end()) {
        if (a->first < b->first) out.push_back(*a++);
        else if (b->first < a->first) out.push_back(*b++);
        else { out.emplace_back(a->first, a->second + b->second); ++a; ++b; }
    }
    out.insert(out.end(), a, terms_.end());
    out.insert(out.end(), b, other.terms_.end());
    Monomial m;
    m.terms_ = std::move(out);
    return m;
}

bool Monomial::operator<(const Monomial& other) const {
    int da = degree(), db = other.degree();
    if (da != db) return da < db;
    // Same degree: the monomial with more weight on smaller variable ids
    // comes first (1, x0, x1, x0^2, x0*x1, x1^2, ...).
    auto a = terms_.begin(), b = other.terms_.begin();
    while (a != terms_.end() && b != other.terms_.end()) {
        if (a->first != b->first) return a->first < b->first;
        if (a->second != b->second) return a->second > b->second;
        ++a; ++b;
    }
    return false; // identical
}

std::size_t Monomial::hash() const {
    std::size_t h = 0x9e3779b97f4a7c15ull;
    for (const auto& t : terms_) {
        h ^= std::hash<long long>()((static_cast<long long>(t.first) << 20) | t.second)
             + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return h;
}

std::string Monomial::str(const std::function<std::string(int)>& name) const {
    if (terms_.empty()) return "1";
    std::string s;
    for (const auto& t : terms_) {
        if (!s.empty()) s += "*";
        s += name ? name(t.first) : ("x" + std::to_string(t.first));
        if (t.second > 1) s += "^" + std::to_string(t.second);
    }
    return s;
}

std::vector<Monomial> monomial_basis(const std::vector<int>& variables, int k) {
    std::vector<int> vars = variables;
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());

    std::vector<Monomial> out;
    out.push_back(Monomial::one());
    if (k <= 0 || vars.empty()) return out;

    // Extend degree by degree: monomials of degree d are built by multiplying
    // degree d-1 monomials by variables >= their largest variable id.
    std::vector<std::vector<Monomial::Term>> prev = {{}};
    for (int d = 1; d <= k; ++d) {
        std::vector<std::vector<Monomial::Term>> cur;
        for (const auto& base : prev) {
            std::size_t start = 0;
            if (!base.empty()) {
                // smallest allowed variable = last variable in the base
                int last = base.back().first;
                start = static_cast<std::size_t>(
                    std::lower_bound(vars.begin(), vars.end(), last) - vars.begin());
            }
            for (std::size_t vi = start; vi < vars.size(); ++vi) {
                auto t = base;
                if (!t.empty() && t.back().first == vars[vi]) t.back().second += 1;
                else t.emplace_back(vars[vi], 1);
                cur.push_back(std::move(t));
            }
        }
        for (auto& t : cur) {
            Monomial m;
            std::vector<Monomial::Term> copy = t;
            m = Monomial(std::move(copy));
            out.push_back(std::move(m));
        }
        prev = std::move(cur);
    }
    // Builder already emits each degree block; sort within blocks for the
    // documented graded-lex order.
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace momlin
