#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace momlin {

// Sparse monomial over integer variable ids: product of var^power terms.
// Terms are kept sorted by variable id with strictly positive powers, so the
// representation is canonical and usable as a hash-map key.
class Monomial {
public:
    using Term = std::pair<int, int>; // (variable id, power > 0)

    Monomial() = default;
    explicit Monomial(std::vector<Term> terms);

    static Monomial one() { return Monomial{}; }
    static Monomial var(int id, int power = 1);

    const std::vector<Term>& terms() const { return terms_; }
    int degree() const;
    int degree_in(const std::vector<int>& vars) const;
    bool is_one() const { return terms_.empty(); }
    int power_of(int id) const;

    Monomial times(const Monomial& other) const;

    bool operator==(const Monomial& other) const { return terms_ == other.terms_; }
    bool operator!=(const Monomial& other) const { return !(*this == other); }
    // Graded lexicographic: lower degree first, then lexicographic on
    // exponent vectors (higher power on the smallest variable id first).
    bool operator<(const Monomial& other) const;

    std::size_t hash() const;
    std::string str(const std::function<std::string(int)>& name = nullptr) const;

private:
    std::vector<Term> terms_;
};

struct MonomialHash {
    std::size_t operator()(const Monomial& m) const { return m.hash(); }
};

// All monomials of degree <= k in the given variables, in graded-lex order
// starting from the constant monomial. `variables` need not be contiguous.
std::vector<Monomial> monomial_basis(const std::vector<int>& variables, int k);

} // namespace momlin
