#include "momlin/conic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "momlin/errors.hpp"
#include "momlin/presolve.hpp"

extern "C" {
void dpotrf_(const char* uplo, const int* n, double* a, const int* lda, int* info);
void dsytrf_(const char* uplo, const int* n, double* a, const int* lda, int* ipiv,
             double* work, const int* lwork, int* info);
void dsytrs_(const char* uplo, const int* n, const int* nrhs, const double* a,
             const int* lda, const int* ipiv, double* b, const int* ldb, int* info);
void dgesdd_(const char* jobz, const int* m, const int* n, double* a, const int* lda,
             double* s, double* u, const int* ldu, double* vt, const int* ldvt,
             double* work, const int* lwork, int* iwork, int* info);
void dsyevr_(const char* jobz, const char* range, const char* uplo, const int* n,
             double* a, const int* lda, const double* vl, const double* vu,
             const int* il, const int* iu, const double* abstol, int* m, double* w,
             double* z, const int* ldz, int* isuppz, double* work, const int* lwork,
             int* iwork, const int* liwork, int* info);
}

namespace momlin {

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::near_optimal: return "near-optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::unbounded: return "unbounded";
        case SolveStatus::iteration_limit: return "iteration-limit";
        case SolveStatus::numerical_failure: return "numerical-failure";
    }
    return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---- LAPACK helpers -------------------------------------------------------

// Cholesky with escalating diagonal shifts; returns the lower factor.
bool chol_lower(Eigen::MatrixXd M, Eigen::MatrixXd& L) {
    const int n = static_cast<int>(M.rows());
    if (n == 0) {
        L.resize(0, 0);
        return true;
    }
    double shift = 0.0;
    const double base = std::max(1e-300, 1e-14 * M.diagonal().cwiseAbs().maxCoeff());
    for (int attempt = 0; attempt < 30; ++attempt) {
        Eigen::MatrixXd A = M;
        if (shift > 0.0) A.diagonal().array() += shift;
        int info = 0;
        dpotrf_("L", &n, A.data(), &n, &info);
        if (info == 0) {
            L = A.triangularView<Eigen::Lower>();
            return true;
        }
        shift = shift == 0.0 ? base : shift * 32.0;
    }
    return false;
}

double sym_eig_min(const Eigen::MatrixXd& M) {
    const int n = static_cast<int>(M.rows());
    if (n == 0) return kInf;
    Eigen::MatrixXd A = M;
    const char jobz = 'N', range = 'I', uplo = 'L';
    const double vl = 0, vu = 0, abstol = 0;
    const int il = 1, iu = 1;
    int found = 0, info = 0;
    Eigen::VectorXd w(n);
    std::vector<int> isuppz(2);
    int lwork = -1, liwork = -1;
    double wq;
    int iwq;
    dsyevr_(&jobz, &range, &uplo, &n, A.data(), &n, &vl, &vu, &il, &iu, &abstol,
            &found, w.data(), nullptr, &n, isuppz.data(), &wq, &lwork, &iwq, &liwork,
            &info);
    lwork = static_cast<int>(wq);
    liwork = iwq;
    std::vector<double> work(lwork);
    std::vector<int> iwork(liwork);
    dsyevr_(&jobz, &range, &uplo, &n, A.data(), &n, &vl, &vu, &il, &iu, &abstol,
            &found, w.data(), nullptr, &n, isuppz.data(), work.data(), &lwork,
            iwork.data(), &liwork, &info);
    if (info != 0) throw SolverError("eigenvalue computation failed");
    return w[0];
}

void svd_full(const Eigen::MatrixXd& M, Eigen::MatrixXd& U, Eigen::VectorXd& sig,
              Eigen::MatrixXd& V) {
    const int n = static_cast<int>(M.rows());
    Eigen::MatrixXd A = M;
    U.resize(n, n);
    V.resize(n, n);
    sig.resize(n);
    Eigen::MatrixXd VT(n, n);
    int info = 0, lwork = -1;
    std::vector<int> iwork(8 * n);
    double wq;
    dgesdd_("A", &n, &n, A.data(), &n, sig.data(), U.data(), &n, VT.data(), &n, &wq,
            &lwork, iwork.data(), &info);
    lwork = static_cast<int>(wq);
    std::vector<double> work(lwork);
    dgesdd_("A", &n, &n, A.data(), &n, sig.data(), U.data(), &n, VT.data(), &n,
            work.data(), &lwork, iwork.data(), &info);
    if (info != 0) throw SolverError("SVD failed in NT scaling");
    V = VT.transpose();
}

// Bunch-Kaufman factorization of the (regularized) KKT matrix, in place.
class KktFactor {
public:
    void resize(int n) {
        n_ = n;
        buf_.resize(n, n);
        ipiv_.resize(n);
    }
    Eigen::MatrixXd& matrix() { return buf_; }
    bool factorize() {
        if (n_ == 0) return true;
        int info = 0, lwork = -1;
        double wq;
        dsytrf_("L", &n_, buf_.data(), &n_, ipiv_.data(), &wq, &lwork, &info);
        lwork = static_cast<int>(wq);
        work_.resize(std::max(1, lwork));
        dsytrf_("L", &n_, buf_.data(), &n_, ipiv_.data(), work_.data(), &lwork, &info);
        return info == 0;
    }
    void solve(Eigen::VectorXd& b) const {
        if (n_ == 0) return;
        const int one = 1;
        int info = 0;
        dsytrs_("L", &n_, &one, buf_.data(), &n_, ipiv_.data(), b.data(), &n_, &info);
        if (info != 0) throw SolverError("KKT back-substitution failed");
    }

private:
    int n_ = 0;
    Eigen::MatrixXd buf_;
    std::vector<int> ipiv_;
    std::vector<double> work_;
};

// ---- per-cone workspaces --------------------------------------------------

struct PsdW {
    int d = 0;
    std::vector<PsdEntry> entries; // sorted by var
    std::vector<int> vars;         // distinct global ids
    std::vector<std::pair<int, int>> range;
    Eigen::MatrixXd C;

    Eigen::MatrixXd S, Z;
    Eigen::MatrixXd Ri, RiT; // R^{-1} and its transpose (R^{-T})
    Eigen::MatrixXd Wi;      // W^{-1}
    Eigen::VectorXd lam;
    Eigen::MatrixXd rcone, U, T;
    Eigen::MatrixXd dS, dZ, dSt, dZt;

    void init(const PsdBlock& b) {
        d = b.dim;
        entries = b.entries;
        std::stable_sort(entries.begin(), entries.end(),
                         [](const PsdEntry& x, const PsdEntry& y) { return x.var < y.var; });
        for (std::size_t i = 0; i < entries.size();) {
            std::size_t j = i;
            while (j < entries.size() && entries[j].var == entries[i].var) ++j;
            vars.push_back(entries[i].var);
            range.emplace_back(static_cast<int>(i), static_cast<int>(j));
            i = j;
        }
        C = Eigen::MatrixXd::Zero(d, d);
        for (const auto& t : b.constant) {
            C(t.row, t.col) = t.value;
            C(t.col, t.row) = t.value;
        }
        S = Z = Eigen::MatrixXd::Zero(d, d);
    }

    Eigen::MatrixXd apply_A(const Eigen::VectorXd& v) const {
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(d, d);
        for (const auto& e : entries) {
            M(e.row, e.col) += e.coef * v[e.var];
            if (e.row != e.col) M(e.col, e.row) += e.coef * v[e.var];
        }
        return M;
    }

    void add_Astar(const Eigen::MatrixXd& M, Eigen::VectorXd& out) const {
        for (const auto& e : entries)
            out[e.var] += e.coef * (e.row == e.col ? M(e.row, e.col)
                                                   : M(e.row, e.col) + M(e.col, e.row));
    }

    // identity scaling (used by the initialization solves)
    void identity_scaling() {
        Wi = Eigen::MatrixXd::Identity(d, d);
        Ri = RiT = Eigen::MatrixXd::Identity(d, d);
        lam = Eigen::VectorXd::Ones(d);
    }

    bool nt_scale() {
        Eigen::MatrixXd Ls, Lz;
        if (!chol_lower(S, Ls) || !chol_lower(Z, Lz)) return false;
        Eigen::MatrixXd U_, V_;
        Eigen::VectorXd sig;
        svd_full(Lz.transpose() * Ls, U_, sig, V_);
        for (int i = 0; i < d; ++i) sig[i] = std::max(sig[i], 1e-150);
        lam = sig;
        const Eigen::VectorXd si = sig.cwiseSqrt().cwiseInverse();
        // R^{-1} = Sig^{-1/2} U' Lz'
        Ri = si.asDiagonal() * U_.transpose() * Lz.transpose();
        RiT = Ri.transpose();
        Wi = RiT * Ri;
        return true;
    }

    void add_H(Eigen::MatrixXd& H) const {
        const int nb = static_cast<int>(vars.size());
        for (int bi = 0; bi < nb; ++bi) {
            for (int bk = bi; bk < nb; ++bk) {
                double acc = 0.0;
                for (int ie = range[bi].first; ie < range[bi].second; ++ie) {
                    const auto& E1 = entries[ie];
                    const double* wa = Wi.col(E1.row).data();
                    const double* wb = Wi.col(E1.col).data();
                    for (int ke = range[bk].first; ke < range[bk].second; ++ke) {
                        const auto& E2 = entries[ke];
                        double t = wa[E2.row] * wb[E2.col] + wa[E2.col] * wb[E2.row];
                        double f = E1.coef * E2.coef;
                        if (E1.row != E1.col && E2.row != E2.col) f *= 2.0;
                        else if (E1.row == E1.col && E2.row == E2.col) f *= 0.5;
                        acc += f * t;
                    }
                }
                H(vars[bi], vars[bk]) += acc;
                if (bi != bk) H(vars[bk], vars[bi]) += acc;
            }
        }
    }

    double step_bound(const Eigen::MatrixXd& D) const {
        // largest a with diag(lam) + a*D psd
        const Eigen::VectorXd ls = lam.cwiseSqrt().cwiseInverse();
        const double m = sym_eig_min(ls.asDiagonal() * D * ls.asDiagonal());
        return m >= 0.0 ? kInf : 1.0 / (-m);
    }
};

struct SocW {
    int q = 0;
    std::vector<int> vars;
    Eigen::MatrixXd A; // q x vars
    Eigen::VectorXd C;

    Eigen::VectorXd s, z, lam;
    double eta = 1.0;
    Eigen::VectorXd wbar, vj;
    Eigen::VectorXd rcone, U, T;
    Eigen::VectorXd dS, dZ, dSt, dZt;

    static Eigen::VectorXd jmul(const Eigen::VectorXd& x) {
        Eigen::VectorXd y = -x;
        y[0] = x[0];
        return y;
    }
    static double jnorm2(const Eigen::VectorXd& x) {
        return x[0] * x[0] - x.tail(x.size() - 1).squaredNorm();
    }

    void init(const SocBlock& b) {
        q = static_cast<int>(b.rows.size());
        std::vector<int> vs;
        for (const auto& r : b.rows)
            for (const auto& t : r.terms) vs.push_back(t.var);
        std::sort(vs.begin(), vs.end());
        vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
        vars = vs;
        A = Eigen::MatrixXd::Zero(q, static_cast<int>(vars.size()));
        C.resize(q);
        for (int i = 0; i < q; ++i) {
            C[i] = b.rows[i].constant;
            for (const auto& t : b.rows[i].terms) {
                const int j = static_cast<int>(
                    std::lower_bound(vars.begin(), vars.end(), t.var) - vars.begin());
                A(i, j) += t.coef;
            }
        }
        s = z = Eigen::VectorXd::Zero(q);
    }

    Eigen::VectorXd local(const Eigen::VectorXd& v) const {
        Eigen::VectorXd out(vars.size());
        for (std::size_t j = 0; j < vars.size(); ++j) out[j] = v[vars[j]];
        return out;
    }
    Eigen::VectorXd apply_A(const Eigen::VectorXd& v) const { return A * local(v); }
    void add_Astar(const Eigen::VectorXd& u, Eigen::VectorXd& out) const {
        const Eigen::VectorXd loc = A.transpose() * u;
        for (std::size_t j = 0; j < vars.size(); ++j) out[vars[j]] += loc[j];
    }

    void identity_scaling() {
        eta = 1.0;
        wbar = Eigen::VectorXd::Zero(q);
        wbar[0] = 1.0;
        vj = wbar;
        lam = Eigen::VectorXd::Ones(q); // unused placeholder in identity mode
    }

    Eigen::VectorXd Wmul(const Eigen::VectorXd& x) const {
        return eta * (2.0 * wbar * wbar.dot(x) - jmul(x));
    }
    Eigen::VectorXd Wimul(const Eigen::VectorXd& x) const {
        return (2.0 * vj * vj.dot(x) - jmul(x)) / eta;
    }

    bool nt_scale() {
        const double ns2 = jnorm2(s), nz2 = jnorm2(z);
        if (!(ns2 > 0.0) || !(nz2 > 0.0) || s[0] <= 0.0 || z[0] <= 0.0) return false;
        const double ns = std::sqrt(ns2), nz = std::sqrt(nz2);
        const Eigen::VectorXd sb = s / ns, zb = z / nz;
        const double gamma = std::sqrt((1.0 + sb.dot(zb)) / 2.0);
        // hyperbolic Householder point: W = eta*(2*wbar*wbar' - J) satisfies
        // W z = W^{-1} s only with the shifted unit vector (w + e)/sqrt(2(1+w0))
        Eigen::VectorXd w = (sb + jmul(zb)) / (2.0 * gamma);
        w[0] += 1.0;
        wbar = w / std::sqrt(2.0 * w[0]);
        vj = jmul(wbar);
        eta = std::sqrt(ns / nz);
        lam = Wmul(z);
        return true;
    }

    void add_H(Eigen::MatrixXd& H) const {
        Eigen::MatrixXd WA(q, A.cols());
        for (int j = 0; j < A.cols(); ++j) WA.col(j) = Wimul(A.col(j));
        const Eigen::MatrixXd local = WA.transpose() * WA;
        for (std::size_t a = 0; a < vars.size(); ++a)
            for (std::size_t b = 0; b < vars.size(); ++b)
                H(vars[a], vars[b]) += local(a, b);
    }

    static Eigen::VectorXd arw_solve(const Eigen::VectorXd& l, const Eigen::VectorXd& r) {
        const int q = static_cast<int>(l.size());
        const double det = jnorm2(l);
        Eigen::VectorXd t(q);
        const double r1l1 = l.tail(q - 1).dot(r.tail(q - 1));
        t[0] = (l[0] * r[0] - r1l1) / det;
        t.tail(q - 1) = (r.tail(q - 1) - t[0] * l.tail(q - 1)) / l[0];
        return t;
    }
    static Eigen::VectorXd jprod(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        const int q = static_cast<int>(a.size());
        Eigen::VectorXd p(q);
        p[0] = a.dot(b);
        p.tail(q - 1) = a[0] * b.tail(q - 1) + b[0] * a.tail(q - 1);
        return p;
    }

    double step_bound(const Eigen::VectorXd& D) const {
        // bisection on membership of lam + a*D (feasible set is an interval)
        auto inside = [&](double a) {
            const Eigen::VectorXd u = lam + a * D;
            return u[0] > 0.0 && jnorm2(u) > 0.0;
        };
        if (inside(4.0)) return kInf;
        double lo = 0.0, hi = 4.0;
        for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (lo + hi);
            (inside(mid) ? lo : hi) = mid;
        }
        return lo;
    }
};

struct NonnegW {
    std::vector<ScalarRow> rows;
    Eigen::VectorXd s, z, w, lam;
    Eigen::VectorXd rcone, U, T;
    Eigen::VectorXd dS, dZ, dSt, dZt;
    int q = 0;

    void init(const std::vector<ScalarRow>& r) {
        rows = r;
        q = static_cast<int>(rows.size());
        s = z = Eigen::VectorXd::Zero(q);
    }
    Eigen::VectorXd apply_A(const Eigen::VectorXd& v) const {
        Eigen::VectorXd out(q);
        for (int i = 0; i < q; ++i) {
            double acc = 0.0;
            for (const auto& t : rows[i].terms) acc += t.coef * v[t.var];
            out[i] = acc;
        }
        return out;
    }
    void add_Astar(const Eigen::VectorXd& u, Eigen::VectorXd& out) const {
        for (int i = 0; i < q; ++i)
            for (const auto& t : rows[i].terms) out[t.var] += t.coef * u[i];
    }
    Eigen::VectorXd constants() const {
        Eigen::VectorXd c(q);
        for (int i = 0; i < q; ++i) c[i] = rows[i].constant;
        return c;
    }
    void identity_scaling() {
        w = lam = Eigen::VectorXd::Ones(q);
    }
    bool nt_scale() {
        if (q == 0) return true;
        if (s.minCoeff() <= 0.0 || z.minCoeff() <= 0.0) return false;
        w = (s.array() / z.array()).sqrt();
        lam = (s.array() * z.array()).sqrt();
        return true;
    }
    void add_H(Eigen::MatrixXd& H) const {
        for (int i = 0; i < q; ++i) {
            const double wi2 = 1.0 / (w[i] * w[i]);
            for (const auto& ta : rows[i].terms)
                for (const auto& tb : rows[i].terms)
                    H(ta.var, tb.var) += ta.coef * tb.coef * wi2;
        }
    }
    double step_bound(const Eigen::VectorXd& D) const {
        double a = kInf;
        for (int i = 0; i < q; ++i)
            if (D[i] < 0.0) a = std::min(a, lam[i] / (-D[i]));
        return a;
    }
};

// ---- the interior-point method --------------------------------------------

class Ipm {
public:
    Ipm(const ConicProblem& p, const SolverSettings& st) : P(p), st_(st) {
        n = p.num_vars;
        c = Eigen::VectorXd::Zero(n);
        for (const auto& t : p.objective) c[t.var] += t.coef;
        obj_scale_ = std::max(1.0, c.cwiseAbs().maxCoeff());
        c /= obj_scale_;

        m = static_cast<int>(p.equalities.size());
        eq_rows_.reserve(m);
        dvec.resize(m);
        eq_scale_.resize(m);
        for (int i = 0; i < m; ++i) {
            ScalarRow r = p.equalities[i];
            double s = std::abs(r.constant);
            for (const auto& t : r.terms) s = std::max(s, std::abs(t.coef));
            if (s <= 0.0) s = 1.0;
            for (auto& t : r.terms) t.coef /= s;
            r.constant /= s;
            eq_scale_[i] = s;
            dvec[i] = -r.constant;
            eq_rows_.push_back(std::move(r));
        }

        for (const auto& b : p.psd) {
            psd_.emplace_back();
            psd_.back().init(b);
        }
        for (const auto& b : p.soc) {
            if (b.rows.size() < 2)
                throw ValidationError("second-order cone block needs at least 2 rows");
            soc_.emplace_back();
            soc_.back().init(b);
        }
        nn_.init(p.nonneg);

        nu = nn_.q + static_cast<int>(soc_.size());
        for (const auto& b : psd_) nu += b.d;
        if (nu == 0) throw ValidationError("conic problem has no cone blocks");

        double cmax = 0.0;
        for (const auto& b : psd_) cmax = std::max(cmax, b.C.cwiseAbs().maxCoeff());
        for (const auto& b : soc_)
            cmax = std::max(cmax, b.C.size() ? b.C.cwiseAbs().maxCoeff() : 0.0);
        if (nn_.q) cmax = std::max(cmax, nn_.constants().cwiseAbs().maxCoeff());
        if (m) cmax = std::max(cmax, dvec.cwiseAbs().maxCoeff());
        den_p_ = 1.0 + cmax;

        H.resize(n, n);
        fac_.resize(n + m);
    }

    SolveResult run();

private:
    const ConicProblem& P;
    SolverSettings st_;
    int n = 0, m = 0, nu = 0;
    double obj_scale_ = 1.0, den_p_ = 1.0;
    Eigen::VectorXd c, dvec;
    std::vector<ScalarRow> eq_rows_;
    std::vector<double> eq_scale_;
    std::vector<PsdW> psd_;
    std::vector<SocW> soc_;
    NonnegW nn_;

    Eigen::VectorXd v, leq; // primal iterate, equality duals
    Eigen::MatrixXd H;
    KktFactor fac_;
    double reg_ = 0.0;

    Eigen::VectorXd applyE(const Eigen::VectorXd& x) const {
        Eigen::VectorXd out(m);
        for (int i = 0; i < m; ++i) {
            double acc = 0.0;
            for (const auto& t : eq_rows_[i].terms) acc += t.coef * x[t.var];
            out[i] = acc;
        }
        return out;
    }
    Eigen::VectorXd applyEt(const Eigen::VectorXd& y) const {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < m; ++i)
            for (const auto& t : eq_rows_[i].terms) out[t.var] += t.coef * y[i];
        return out;
    }
    Eigen::VectorXd astarZ() const {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
        for (const auto& b : psd_) b.add_Astar(b.Z, out);
        for (const auto& b : soc_) b.add_Astar(b.z, out);
        nn_.add_Astar(nn_.z, out);
        return out;
    }

    void build_H() {
        H.setZero();
        for (const auto& b : psd_) b.add_H(H);
        for (const auto& b : soc_) b.add_H(H);
        nn_.add_H(H);
    }

    bool factorize() {
        auto& K = fac_.matrix();
        K.setZero();
        K.topLeftCorner(n, n) = H;
        K.topLeftCorner(n, n).diagonal().array() += reg_;
        for (int i = 0; i < m; ++i)
            for (const auto& t : eq_rows_[i].terms) {
                K(t.var, n + i) = t.coef;
                K(n + i, t.var) = t.coef;
            }
        for (int i = 0; i < m; ++i) K(n + i, n + i) = -std::max(reg_, 1e-12);
        return fac_.factorize();
    }

    // Solve [H E'; E 0] [dv; dl~] = [b1; b2] with refinement; dl = -dl~.
    void kkt_solve(const Eigen::VectorXd& b1, const Eigen::VectorXd& b2,
                   Eigen::VectorXd& dv, Eigen::VectorXd& dlt) const {
        Eigen::VectorXd rhs(n + m);
        rhs.head(n) = b1;
        if (m) rhs.tail(m) = b2;
        Eigen::VectorXd u = rhs;
        fac_.solve(u);
        for (int pass = 0; pass < st_.refine_steps; ++pass) {
            Eigen::VectorXd res(n + m);
            const Eigen::VectorXd uv = u.head(n), ul = u.tail(m);
            res.head(n) = b1 - (H.selfadjointView<Eigen::Lower>() * uv) - applyEt(ul);
            res.tail(m) = b2 - applyE(uv);
            fac_.solve(res);
            u += res;
        }
        dv = u.head(n);
        dlt = u.tail(m);
    }

    double gap() const {
        double g = 0.0;
        for (const auto& b : psd_) g += (b.S.array() * b.Z.array()).sum();
        for (const auto& b : soc_) g += b.s.dot(b.z);
        g += nn_.s.dot(nn_.z);
        return g;
    }
    double primal_obj() const { return c.dot(v); }
    double dual_obj() const {
        double g = m ? dvec.dot(leq) : 0.0;
        for (const auto& b : psd_) g -= (b.C.array() * b.Z.array()).sum();
        for (const auto& b : soc_) g -= b.C.dot(b.z);
        if (nn_.q) g -= nn_.constants().dot(nn_.z);
        return g;
    }

    void compute_rcone() {
        for (auto& b : psd_) b.rcone = b.S - b.C - b.apply_A(v);
        for (auto& b : soc_) b.rcone = b.s - b.C - b.apply_A(v);
        if (nn_.q) nn_.rcone = nn_.s - nn_.constants() - nn_.apply_A(v);
        else nn_.rcone.resize(0);
    }

    double cone_res_inf() const {
        double r = 0.0;
        for (const auto& b : psd_) r = std::max(r, b.rcone.cwiseAbs().maxCoeff());
        for (const auto& b : soc_) r = std::max(r, b.rcone.cwiseAbs().maxCoeff());
        if (nn_.q) r = std::max(r, nn_.rcone.cwiseAbs().maxCoeff());
        return r;
    }

    // shift all cone iterates into the interior (initialization)
    void interior_shift(bool primal) {
        double mmin = kInf;
        for (auto& b : psd_) mmin = std::min(mmin, sym_eig_min(primal ? b.S : b.Z));
        for (auto& b : soc_) {
            const Eigen::VectorXd& u = primal ? b.s : b.z;
            mmin = std::min(mmin, u[0] - u.tail(b.q - 1).norm());
        }
        if (nn_.q) mmin = std::min(mmin, (primal ? nn_.s : nn_.z).minCoeff());
        if (mmin > 1e-6) return;
        const double shift = 1.0 + std::max(0.0, -mmin);
        for (auto& b : psd_) (primal ? b.S : b.Z).diagonal().array() += shift;
        for (auto& b : soc_) (primal ? b.s : b.z)[0] += shift;
        if (nn_.q) (primal ? nn_.s : nn_.z).array() += shift;
    }

    bool primal_infeasibility_certificate() const {
        // lam, Z with E'lam + A*Z ~ 0, d'lam - <C,Z> > 0
        const double xi = dual_obj();
        if (!(xi > 0.0)) return false;
        Eigen::VectorXd resid = astarZ();
        if (m) resid += applyEt(leq);
        double znorm = 0.0;
        for (const auto& b : psd_) znorm = std::max(znorm, b.Z.cwiseAbs().maxCoeff());
        for (const auto& b : soc_) znorm = std::max(znorm, b.z.cwiseAbs().maxCoeff());
        if (nn_.q) znorm = std::max(znorm, nn_.z.cwiseAbs().maxCoeff());
        if (m && leq.size()) znorm = std::max(znorm, leq.cwiseAbs().maxCoeff());
        if (znorm < 1e3) return false; // duals must diverge for a Farkas ray
        return resid.cwiseAbs().maxCoeff() <= 1e-9 * xi;
    }

    bool dual_infeasibility_certificate() const {
        // v with Ev ~ 0, A(v) in the cone, c'v < 0
        const double cv = c.dot(v);
        if (!(cv < 0.0)) return false;
        const double scale = -cv;
        const double vnorm = v.cwiseAbs().maxCoeff();
        if (vnorm < 1e3) return false;
        if (m && applyE(v).cwiseAbs().maxCoeff() > 1e-9 * scale) return false;
        for (const auto& b : psd_) {
            const Eigen::MatrixXd Av = b.apply_A(v);
            if (sym_eig_min(Av) < -1e-9 * scale) return false;
        }
        for (const auto& b : soc_) {
            const Eigen::VectorXd Av = b.apply_A(v);
            if (Av[0] - Av.tail(b.q - 1).norm() < -1e-9 * scale) return false;
        }
        if (nn_.q) {
            const Eigen::VectorXd Av = nn_.apply_A(v);
            if (Av.minCoeff() < -1e-9 * scale) return false;
        }
        return true;
    }

    SolveResult finish(SolveStatus status, double pres, double dres, double rgap,
                       int iters, double seconds) {
        SolveResult out;
        out.status = status;
        out.x = v;
        out.objective = primal_obj() * obj_scale_ + P.objective_constant;
        out.dual_objective = dual_obj() * obj_scale_ + P.objective_constant;
        out.eq_duals.resize(m);
        for (int i = 0; i < m; ++i) out.eq_duals[i] = leq[i] * obj_scale_ / eq_scale_[i];
        out.stats.iterations = iters;
        out.stats.primal_res = pres;
        out.stats.dual_res = dres;
        out.stats.rel_gap = rgap;
        out.stats.solve_seconds = seconds;
        return out;
    }
};

SolveResult Ipm::run() {
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&]() {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    reg_ = st_.static_reg;
    v = Eigen::VectorXd::Zero(n);
    leq = Eigen::VectorXd::Zero(m);

    // least-squares initialization with identity scaling
    for (auto& b : psd_) b.identity_scaling();
    for (auto& b : soc_) b.identity_scaling();
    nn_.identity_scaling();
    build_H();
    if (!factorize()) {
        reg_ = std::max(1e-8, reg_ * 1e3);
        if (!factorize()) throw SolverError("initial KKT factorization failed");
    }
    {
        // primal: min ||C + A v|| s.t. Ev = d
        Eigen::VectorXd b1 = Eigen::VectorXd::Zero(n);
        for (const auto& b : psd_) b.add_Astar(b.C, b1);
        for (const auto& b : soc_) b.add_Astar(b.C, b1);
        if (nn_.q) nn_.add_Astar(nn_.constants(), b1);
        b1 = -b1;
        Eigen::VectorXd dv, dl;
        kkt_solve(b1, dvec, dv, dl);
        v = dv;
        for (auto& b : psd_) b.S = b.C + b.apply_A(v);
        for (auto& b : soc_) b.s = b.C + b.apply_A(v);
        if (nn_.q) nn_.s = nn_.constants() + nn_.apply_A(v);
        interior_shift(true);

        // dual: min ||Z|| s.t. E'lam + A*Z = c  ->  Z = A(w)
        Eigen::VectorXd w, lam0;
        kkt_solve(c, Eigen::VectorXd::Zero(m), w, lam0);
        leq = lam0; // sign: H w + E' lam0 = c matches E'lam + A*A(w) = c
        for (auto& b : psd_) b.Z = b.apply_A(w);
        for (auto& b : soc_) b.z = b.apply_A(w);
        if (nn_.q) nn_.z = nn_.apply_A(w);
        interior_shift(false);
    }

    double best_score = kInf;
    SolveResult best;
    int stall = 0, no_improve = 0;
    bool hit_limit = false;
    double pres = kInf, dres = kInf, rgap = kInf;

    for (int iter = 0; iter <= st_.max_iter; ++iter) {
        // residuals
        compute_rcone();
        const Eigen::VectorXd rd = c - (m ? applyEt(leq) : Eigen::VectorXd::Zero(n)) - astarZ();
        const Eigen::VectorXd rp = m ? Eigen::VectorXd(applyE(v) - dvec) : Eigen::VectorXd();
        const double g = gap();
        const double mu = g / nu;
        const double pobj = primal_obj(), dobj = dual_obj();

        pres = cone_res_inf();
        if (m) pres = std::max(pres, rp.cwiseAbs().maxCoeff());
        pres /= den_p_;
        dres = rd.cwiseAbs().maxCoeff() / (1.0 + c.cwiseAbs().maxCoeff());
        rgap = std::abs(pobj - dobj) / std::max(1.0, std::abs(pobj));

        const double score = std::max({pres, dres, rgap});
        if (score < best_score) {
            best_score = score;
            best = finish(SolveStatus::optimal, pres, dres, rgap, iter, elapsed());
            no_improve = 0;
        } else if (++no_improve >= 8 && best.stats.primal_res <= st_.tol_feas_loose &&
                   best.stats.dual_res <= st_.tol_feas_loose &&
                   best.stats.rel_gap <= st_.tol_gap_loose) {
            break; // stuck at the numerical floor with an acceptable iterate in hand
        }
        if (st_.verbose)
            std::fprintf(stderr, "iter %3d  pobj % .6e  dobj % .6e  gap %.2e  pres %.2e  dres %.2e\n",
                         iter, pobj * obj_scale_, dobj * obj_scale_, g, pres, dres);

        if (pres <= st_.tol_feas && dres <= st_.tol_feas && rgap <= st_.tol_gap)
            return finish(SolveStatus::optimal, pres, dres, rgap, iter, elapsed());
        if (primal_infeasibility_certificate())
            return finish(SolveStatus::infeasible, pres, dres, rgap, iter, elapsed());
        if (dual_infeasibility_certificate())
            return finish(SolveStatus::unbounded, pres, dres, rgap, iter, elapsed());
        if (iter == st_.max_iter) {
            hit_limit = true;
            break;
        }

        // NT scalings
        bool ok = true;
        for (auto& b : psd_) ok = ok && b.nt_scale();
        for (auto& b : soc_) ok = ok && b.nt_scale();
        ok = ok && nn_.nt_scale();
        if (!ok) break;

        build_H();
        bool fact = factorize();
        while (!fact && reg_ < 1e-4) {
            reg_ = std::max(reg_ * 100.0, 1e-10);
            fact = factorize();
        }
        if (!fact) break;

        // predictor (affine) direction
        Eigen::VectorXd b1 = Eigen::VectorXd::Zero(n);
        for (auto& b : psd_) {
            b.U = -b.Z + b.Wi * b.rcone * b.Wi;
            b.add_Astar(b.U, b1);
        }
        for (auto& b : soc_) {
            b.U = -b.z + b.Wimul(b.Wimul(b.rcone));
            b.add_Astar(b.U, b1);
        }
        if (nn_.q) {
            nn_.U = -nn_.z + (nn_.rcone.array() / (nn_.w.array() * nn_.w.array())).matrix();
            nn_.add_Astar(nn_.U, b1);
        }
        b1 = -(rd - b1); // A*U - rd
        Eigen::VectorXd dv, dlt;
        kkt_solve(b1, m ? Eigen::VectorXd(-rp) : Eigen::VectorXd(), dv, dlt);

        double amax = kInf;
        for (auto& b : psd_) {
            b.dS = b.apply_A(dv) - b.rcone;
            // U absorbs the cone residual, so the recovery subtracts A(dv) = dS + rcone
            b.dZ = b.U - b.Wi * (b.dS + b.rcone) * b.Wi;
            b.dSt = b.Ri * b.dS * b.RiT;
            // scaled dual direction from the Lyapunov identity: dZt = T - dSt,
            // with the affine T = -diag(lam)
            b.dZt = -b.dSt;
            b.dZt.diagonal() -= b.lam;
            amax = std::min({amax, b.step_bound(b.dSt), b.step_bound(b.dZt)});
        }
        for (auto& b : soc_) {
            b.dS = b.apply_A(dv) - b.rcone;
            b.dZ = b.U - b.Wimul(b.Wimul(b.dS + b.rcone));
            b.dSt = b.Wimul(b.dS);
            b.dZt = b.Wmul(b.dZ);
            amax = std::min({amax, b.step_bound(b.dSt), b.step_bound(b.dZt)});
        }
        if (nn_.q) {
            nn_.dS = nn_.apply_A(dv) - nn_.rcone;
            nn_.dZ = nn_.U -
                     ((nn_.dS + nn_.rcone).array() / (nn_.w.array() * nn_.w.array())).matrix();
            nn_.dSt = (nn_.dS.array() / nn_.w.array()).matrix();
            nn_.dZt = (nn_.dZ.array() * nn_.w.array()).matrix();
            amax = std::min({amax, nn_.step_bound(nn_.dSt), nn_.step_bound(nn_.dZt)});
        }
        const double a_aff = std::min(1.0, amax);

        // mu after the affine step, in scaled space
        double g_aff = 0.0;
        for (auto& b : psd_) {
            const Eigen::MatrixXd Sa = Eigen::MatrixXd(b.lam.asDiagonal()) + a_aff * b.dSt;
            const Eigen::MatrixXd Za = Eigen::MatrixXd(b.lam.asDiagonal()) + a_aff * b.dZt;
            g_aff += (Sa.array() * Za.array()).sum();
        }
        for (auto& b : soc_)
            g_aff += (b.lam + a_aff * b.dSt).dot(b.lam + a_aff * b.dZt);
        if (nn_.q)
            g_aff += (nn_.lam + a_aff * nn_.dSt).dot(nn_.lam + a_aff * nn_.dZt);
        const double sigma = std::min(1.0, std::pow(std::max(0.0, g_aff / g), 3.0));

        // corrector (combined) direction
        const double smu = sigma * mu;
        b1.setZero();
        for (auto& b : psd_) {
            Eigen::MatrixXd rhs = -0.5 * (b.dSt * b.dZt + b.dZt * b.dSt);
            rhs.diagonal().array() += smu;
            rhs -= Eigen::MatrixXd(b.lam.asDiagonal()) * Eigen::MatrixXd(b.lam.asDiagonal());
            b.T.resize(b.d, b.d);
            for (int i = 0; i < b.d; ++i)
                for (int j = 0; j < b.d; ++j)
                    b.T(i, j) = 2.0 * rhs(i, j) / (b.lam[i] + b.lam[j]);
            b.U = b.RiT * b.T * b.Ri + b.Wi * b.rcone * b.Wi;
            b.add_Astar(b.U, b1);
        }
        for (auto& b : soc_) {
            Eigen::VectorXd rhs = -SocW::jprod(b.dSt, b.dZt) - SocW::jprod(b.lam, b.lam);
            rhs[0] += smu;
            b.T = SocW::arw_solve(b.lam, rhs);
            b.U = b.Wimul(b.T) + b.Wimul(b.Wimul(b.rcone));
            b.add_Astar(b.U, b1);
        }
        if (nn_.q) {
            const Eigen::ArrayXd rhs =
                smu - nn_.lam.array() * nn_.lam.array() - nn_.dSt.array() * nn_.dZt.array();
            nn_.T = (rhs / nn_.lam.array()).matrix();
            nn_.U = (nn_.T.array() / nn_.w.array() +
                     nn_.rcone.array() / (nn_.w.array() * nn_.w.array()))
                        .matrix();
            nn_.add_Astar(nn_.U, b1);
        }
        b1 = -(rd - b1);
        kkt_solve(b1, m ? Eigen::VectorXd(-rp) : Eigen::VectorXd(), dv, dlt);

        amax = kInf;
        for (auto& b : psd_) {
            b.dS = b.apply_A(dv) - b.rcone;
            b.dZ = b.U - b.Wi * (b.dS + b.rcone) * b.Wi;
            b.dSt = b.Ri * b.dS * b.RiT;
            b.dZt = b.T - b.dSt;
            amax = std::min({amax, b.step_bound(b.dSt), b.step_bound(b.dZt)});
        }
        for (auto& b : soc_) {
            b.dS = b.apply_A(dv) - b.rcone;
            b.dZ = b.U - b.Wimul(b.Wimul(b.dS + b.rcone));
            b.dSt = b.Wimul(b.dS);
            b.dZt = b.Wmul(b.dZ);
            amax = std::min({amax, b.step_bound(b.dSt), b.step_bound(b.dZt)});
        }
        if (nn_.q) {
            nn_.dS = nn_.apply_A(dv) - nn_.rcone;
            nn_.dZ = nn_.U -
                     ((nn_.dS + nn_.rcone).array() / (nn_.w.array() * nn_.w.array())).matrix();
            nn_.dSt = (nn_.dS.array() / nn_.w.array()).matrix();
            nn_.dZt = (nn_.dZ.array() * nn_.w.array()).matrix();
            amax = std::min({amax, nn_.step_bound(nn_.dSt), nn_.step_bound(nn_.dZt)});
        }
        const double alpha = std::min(1.0, 0.99 * amax);
        if (alpha < 1e-8) {
            if (++stall >= 2) break;
        } else {
            stall = 0;
        }

        v += alpha * dv;
        leq += alpha * (-dlt);
        for (auto& b : psd_) {
            b.S += alpha * b.dS;
            b.Z += alpha * b.dZ;
        }
        for (auto& b : soc_) {
            b.s += alpha * b.dS;
            b.z += alpha * b.dZ;
        }
        if (nn_.q) {
            nn_.s += alpha * nn_.dS;
            nn_.z += alpha * nn_.dZ;
        }
    }

    // no tight convergence: classify the best iterate seen
    best.stats.solve_seconds = elapsed();
    const bool loose = best.stats.primal_res <= st_.tol_feas_loose &&
                       best.stats.dual_res <= st_.tol_feas_loose &&
                       best.stats.rel_gap <= st_.tol_gap_loose;
    if (loose) {
        best.status = SolveStatus::near_optimal;
        return best;
    }
    best.status = hit_limit ? SolveStatus::iteration_limit : SolveStatus::numerical_failure;
    return best;
}

} // namespace

SolveResult solve(const ConicProblem& problem, const SolverSettings& settings) {
    if (problem.num_vars <= 0) throw ValidationError("conic problem has no variables");

    if (settings.presolve_equalities && !problem.equalities.empty()) {
        const auto t0 = std::chrono::steady_clock::now();
        EqElimination elim = eliminate_equalities(problem);
        if (elim.infeasible) {
            SolveResult r;
            r.status = SolveStatus::infeasible;
            r.x = Eigen::VectorXd::Zero(problem.num_vars);
            return r;
        }
        if (elim.reduced.num_vars == 0) {
            // fully determined system; nothing left to optimize
            SolveResult r;
            r.x = recover_primal(elim, Eigen::VectorXd());
            double obj = problem.objective_constant;
            for (const auto& t : problem.objective) obj += t.coef * r.x[t.var];
            r.objective = r.dual_objective = obj;
            r.status = SolveStatus::optimal;
            for (const auto& row : elim.reduced.nonneg)
                if (row.constant < -settings.tol_feas_loose)
                    r.status = SolveStatus::infeasible;
            r.stats.solve_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            return r;
        }
        SolverSettings inner = settings;
        inner.presolve_equalities = false;
        SolveResult r = solve(elim.reduced, inner);
        if (r.x.size() == elim.reduced.num_vars) {
            r.x = recover_primal(elim, r.x);
            double obj = problem.objective_constant;
            for (const auto& t : problem.objective) obj += t.coef * r.x[t.var];
            r.objective = obj;
        }
        r.eq_duals.resize(0);
        r.stats.solve_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return r;
    }

    Ipm ipm(problem, settings);
    return ipm.run();
}

} // namespace momlin
