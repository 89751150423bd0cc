#pragma once

// Newton-Raphson AC power flow in polar form, with optional PV->PQ
// switching at generator reactive limits, branch flow evaluation and
// thermal/voltage limit checks.

#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "laasim/admittance.hpp"
#include "laasim/network.hpp"

namespace laasim {

struct SolveOptions {
    double tol = 1e-8;  // pu infinity-norm power mismatch
    int max_iter = 30;
    bool flat_start = true;
    bool enforce_q_limits = true;
    int max_q_switch_rounds = 8;
};

struct PowerFlowSolution {
    std::vector<double> v_mag;                       // pu
    std::vector<double> v_ang;                       // radians
    std::vector<double> p_from, q_from, p_to, q_to;  // MW / MVAr per branch
    double slack_p_mw = 0.0;
    double slack_q_mvar = 0.0;
    bool converged = false;
    int iterations = 0;
    double max_mismatch = std::numeric_limits<double>::infinity();
    std::vector<int> pv_to_pq;  // buses switched at a Q limit

    double total_loss_mw(const Network& net) const {
        double s = 0.0;
        for (size_t k = 0; k < net.branches.size(); ++k)
            if (net.branches[k].in_service()) s += p_from[k] + p_to[k];
        return s;
    }
};

struct StructuralError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

struct BusModel {
    std::vector<double> p_sched;  // pu net injection
    std::vector<double> q_sched;
    std::vector<double> v_set;
    std::vector<double> q_min, q_max;  // aggregated MVAr bounds per bus
    std::vector<char> has_gen;
};

inline BusModel make_bus_model(const Network& net) {
    const size_t n = net.buses.size();
    BusModel m;
    m.p_sched.assign(n, 0.0);
    m.q_sched.assign(n, 0.0);
    m.v_set.assign(n, 1.0);
    m.q_min.assign(n, 0.0);
    m.q_max.assign(n, 0.0);
    m.has_gen.assign(n, 0);
    for (const auto& g : net.generators) {
        if (!g.in_service) continue;
        m.p_sched[g.bus] += g.p_mw;
        m.q_sched[g.bus] += g.q_mvar;
        m.q_min[g.bus] += g.q_min_mvar;
        m.q_max[g.bus] += g.q_max_mvar;
        m.has_gen[g.bus] = 1;
        m.v_set[g.bus] = g.v_setpoint;
    }
    for (size_t i = 0; i < n; ++i) {
        m.p_sched[i] = (m.p_sched[i] - net.buses[i].p_load_mw) / net.base_mva;
        m.q_sched[i] = (m.q_sched[i] - net.buses[i].q_load_mvar) / net.base_mva;
        if (!m.has_gen[i]) m.v_set[i] = net.buses[i].v_setpoint;
    }
    return m;
}

// dS/dVa and dS/dVm of the complex injections at state V (standard polar
// derivation via diagonal matrices).
inline void injection_jacobian(const Eigen::MatrixXcd& Y,
                               const Eigen::VectorXcd& V,
                               const Eigen::VectorXd& vm,
                               Eigen::MatrixXcd& dS_dVa,
                               Eigen::MatrixXcd& dS_dVm) {
    const Eigen::Index n = V.size();
    Eigen::VectorXcd Ibus = Y * V;
    Eigen::MatrixXcd diagV = V.asDiagonal();
    dS_dVa = Complex{0.0, 1.0} * diagV *
             (Ibus.asDiagonal().toDenseMatrix() - Y * diagV).conjugate();
    Eigen::VectorXcd Vnorm(n);
    for (Eigen::Index i = 0; i < n; ++i) Vnorm(i) = V(i) / vm(i);
    dS_dVm = diagV * (Y * Vnorm.asDiagonal()).conjugate() +
             Ibus.conjugate().asDiagonal().toDenseMatrix() *
                 Vnorm.asDiagonal().toDenseMatrix();
}

}  // namespace detail

/// Complex branch flows (from-end, to-end) in MVA at the given voltages.
inline std::pair<Complex, Complex> branch_flow(const Network& net,
                                               const Branch& br,
                                               const std::vector<Complex>& V) {
    const Complex ys = 1.0 / Complex{br.r, br.x};
    const Complex ych{0.0, br.b_charging / 2.0};
    const double shift = br.shift_deg * std::numbers::pi / 180.0;
    const Complex tap = br.tap * std::exp(Complex{0.0, shift});
    const Complex vf = V[br.from_bus];
    const Complex vt = V[br.to_bus];
    const Complex i_from =
        (ys + ych) / (br.tap * br.tap) * vf - ys / std::conj(tap) * vt;
    const Complex i_to = -ys / tap * vf + (ys + ych) * vt;
    return {vf * std::conj(i_from) * net.base_mva,
            vt * std::conj(i_to) * net.base_mva};
}

inline PowerFlowSolution solve_ac(const Network& net,
                                  const SolveOptions& opts = {}) {
    const int n = net.n_bus();
    if (n < 1) throw StructuralError("empty network");
    if (net.slack_bus() < 0) throw StructuralError("no slack bus");

    const Eigen::MatrixXcd Y = build_admittance(net).dense();
    auto m = detail::make_bus_model(net);

    std::vector<BusKind> kind(n);
    for (int i = 0; i < n; ++i) kind[i] = net.buses[i].kind;

    Eigen::VectorXd vm(n), va(n);
    for (int i = 0; i < n; ++i) {
        vm(i) = kind[i] == BusKind::PQ ? 1.0 : m.v_set[i];
        va(i) = 0.0;
    }
    if (!opts.flat_start) {
        for (int i = 0; i < n; ++i) vm(i) = net.buses[i].v_setpoint;
    }

    PowerFlowSolution sol;
    Eigen::VectorXcd V(n);
    double max_mis = std::numeric_limits<double>::infinity();
    int iterations = 0;

    for (int qround = 0; qround <= opts.max_q_switch_rounds; ++qround) {
        std::vector<int> pvpq, pq;
        for (int i = 0; i < n; ++i)
            if (kind[i] == BusKind::PV) pvpq.push_back(i);
        for (int i = 0; i < n; ++i)
            if (kind[i] == BusKind::PQ) {
                pvpq.push_back(i);
                pq.push_back(i);
            }
        const int npvpq = static_cast<int>(pvpq.size());
        const int npq = static_cast<int>(pq.size());

        bool converged = false;
        for (int it = 0; it <= opts.max_iter; ++it) {
            for (int i = 0; i < n; ++i) V(i) = std::polar(vm(i), va(i));
            Eigen::VectorXcd S = V.cwiseProduct((Y * V).conjugate());

            max_mis = 0.0;
            Eigen::VectorXd mis(npvpq + npq);
            for (int k = 0; k < npvpq; ++k) {
                mis(k) = m.p_sched[pvpq[k]] - S(pvpq[k]).real();
                max_mis = std::max(max_mis, std::abs(mis(k)));
            }
            for (int k = 0; k < npq; ++k) {
                mis(npvpq + k) = m.q_sched[pq[k]] - S(pq[k]).imag();
                max_mis = std::max(max_mis, std::abs(mis(npvpq + k)));
            }
            iterations = it;
            if (max_mis < opts.tol) {
                converged = true;
                break;
            }
            if (it == opts.max_iter) break;

            Eigen::MatrixXcd dS_dVa, dS_dVm;
            detail::injection_jacobian(Y, V, vm, dS_dVa, dS_dVm);

            Eigen::MatrixXd J(npvpq + npq, npvpq + npq);
            for (int a = 0; a < npvpq; ++a)
                for (int b = 0; b < npvpq; ++b)
                    J(a, b) = dS_dVa(pvpq[a], pvpq[b]).real();
            for (int a = 0; a < npvpq; ++a)
                for (int b = 0; b < npq; ++b)
                    J(a, npvpq + b) = dS_dVm(pvpq[a], pq[b]).real();
            for (int a = 0; a < npq; ++a)
                for (int b = 0; b < npvpq; ++b)
                    J(npvpq + a, b) = dS_dVa(pq[a], pvpq[b]).imag();
            for (int a = 0; a < npq; ++a)
                for (int b = 0; b < npq; ++b)
                    J(npvpq + a, npvpq + b) = dS_dVm(pq[a], pq[b]).imag();

            Eigen::VectorXd dx = J.partialPivLu().solve(mis);
            if (!dx.allFinite()) break;
            for (int k = 0; k < npvpq; ++k) va(pvpq[k]) += dx(k);
            for (int k = 0; k < npq; ++k) vm(pq[k]) += dx(npvpq + k);
        }

        if (!converged || !opts.enforce_q_limits) {
            sol.converged = converged;
            break;
        }

        // PV buses past a reactive limit become PQ pinned at that limit
        bool switched = false;
        for (int i = 0; i < n; ++i) V(i) = std::polar(vm(i), va(i));
        Eigen::VectorXcd S = V.cwiseProduct((Y * V).conjugate());
        for (int i = 0; i < n; ++i) {
            if (kind[i] != BusKind::PV) continue;
            const double q_gen =
                S(i).imag() * net.base_mva + net.buses[i].q_load_mvar;
            if (q_gen > m.q_max[i] + 1e-7) {
                kind[i] = BusKind::PQ;
                m.q_sched[i] =
                    (m.q_max[i] - net.buses[i].q_load_mvar) / net.base_mva;
                sol.pv_to_pq.push_back(i);
                switched = true;
            } else if (q_gen < m.q_min[i] - 1e-7) {
                kind[i] = BusKind::PQ;
                m.q_sched[i] =
                    (m.q_min[i] - net.buses[i].q_load_mvar) / net.base_mva;
                sol.pv_to_pq.push_back(i);
                switched = true;
            }
        }
        if (!switched) {
            sol.converged = true;
            break;
        }
        // re-enter the NR loop from the current state
    }

    sol.iterations = iterations;
    sol.max_mismatch = max_mis;
    sol.v_mag.resize(n);
    sol.v_ang.resize(n);
    std::vector<Complex> Vv(n);
    for (int i = 0; i < n; ++i) {
        sol.v_mag[i] = vm(i);
        sol.v_ang[i] = va(i);
        Vv[i] = std::polar(vm(i), va(i));
    }
    const size_t nl = net.branches.size();
    sol.p_from.assign(nl, 0.0);
    sol.q_from.assign(nl, 0.0);
    sol.p_to.assign(nl, 0.0);
    sol.q_to.assign(nl, 0.0);
    for (size_t k = 0; k < nl; ++k) {
        if (!net.branches[k].in_service()) continue;
        auto [sf, st] = branch_flow(net, net.branches[k], Vv);
        sol.p_from[k] = sf.real();
        sol.q_from[k] = sf.imag();
        sol.p_to[k] = st.real();
        sol.q_to[k] = st.imag();
    }
    const int sb = net.slack_bus();
    for (int i = 0; i < n; ++i) V(i) = std::polar(vm(i), va(i));
    Eigen::VectorXcd Sfin = V.cwiseProduct((Y * V).conjugate());
    sol.slack_p_mw = Sfin(sb).real() * net.base_mva + net.buses[sb].p_load_mw;
    sol.slack_q_mvar =
        Sfin(sb).imag() * net.base_mva + net.buses[sb].q_load_mvar;
    return sol;
}

struct ViolationReport {
    std::vector<std::pair<int, double>> overloaded_branches;  // id, loading
    std::vector<std::pair<int, double>> undervoltage_buses;   // id, pu
    std::vector<std::pair<int, double>> overvoltage_buses;
    std::pair<int, double> min_voltage{-1, 0.0};
};

/// Thermal and voltage screening. A branch is overloaded iff
/// max(|S_from|,|S_to|) strictly exceeds rate_mva (when positive) or its
/// MW flow exceeds an entry of extra_mw_limits. Voltages violate strictly
/// outside [v_min, v_max].
inline ViolationReport check_limits(
    const Network& net, const PowerFlowSolution& sol,
    const std::map<int, double>& extra_mw_limits = {}) {
    ViolationReport rep;
    for (size_t k = 0; k < net.branches.size(); ++k) {
        const auto& br = net.branches[k];
        if (!br.in_service()) continue;
        const double s = std::max(std::hypot(sol.p_from[k], sol.q_from[k]),
                                  std::hypot(sol.p_to[k], sol.q_to[k]));
        bool over = false;
        double loading = 0.0;
        if (br.rate_mva > 0.0 && s > br.rate_mva) {
            over = true;
            loading = s / br.rate_mva;
        }
        auto it = extra_mw_limits.find(static_cast<int>(k));
        if (it != extra_mw_limits.end()) {
            const double p =
                std::max(std::abs(sol.p_from[k]), std::abs(sol.p_to[k]));
            if (p > it->second) {
                over = true;
                loading = std::max(loading, p / it->second);
            }
        }
        if (over)
            rep.overloaded_branches.emplace_back(static_cast<int>(k), loading);
    }
    double vmin = std::numeric_limits<double>::infinity();
    for (const auto& b : net.buses) {
        const double v = sol.v_mag[b.id];
        if (v < b.v_min) rep.undervoltage_buses.emplace_back(b.id, v);
        if (v > b.v_max) rep.overvoltage_buses.emplace_back(b.id, v);
        if (v < vmin) {
            vmin = v;
            rep.min_voltage = {b.id, v};
        }
    }
    return rep;
}

/// Max relative deviation between the analytic Jacobian and central finite
/// differences of the mismatch equations at the given state (flat start by
/// default). Numerical self-test of the solver.
inline double jacobian_check(const Network& net,
                             const std::vector<double>* vm0 = nullptr,
                             const std::vector<double>* va0 = nullptr,
                             double step = 1e-6) {
    const int n = net.n_bus();
    const Eigen::MatrixXcd Y = build_admittance(net).dense();
    auto m = detail::make_bus_model(net);

    std::vector<int> pvpq, pq;
    for (int i = 0; i < n; ++i)
        if (net.buses[i].kind == BusKind::PV) pvpq.push_back(i);
    for (int i = 0; i < n; ++i)
        if (net.buses[i].kind == BusKind::PQ) {
            pvpq.push_back(i);
            pq.push_back(i);
        }
    const int npvpq = static_cast<int>(pvpq.size());
    const int npq = static_cast<int>(pq.size());
    const int dim = npvpq + npq;

    Eigen::VectorXd vm(n), va(n);
    for (int i = 0; i < n; ++i) {
        vm(i) = vm0 ? (*vm0)[i]
                    : (net.buses[i].kind == BusKind::PQ ? 1.0 : m.v_set[i]);
        va(i) = va0 ? (*va0)[i] : 0.0;
    }

    auto mismatch = [&](const Eigen::VectorXd& vmx, const Eigen::VectorXd& vax) {
        Eigen::VectorXcd V(n);
        for (int i = 0; i < n; ++i) V(i) = std::polar(vmx(i), vax(i));
        Eigen::VectorXcd S = V.cwiseProduct((Y * V).conjugate());
        Eigen::VectorXd f(dim);
        for (int k = 0; k < npvpq; ++k)
            f(k) = m.p_sched[pvpq[k]] - S(pvpq[k]).real();
        for (int k = 0; k < npq; ++k)
            f(npvpq + k) = m.q_sched[pq[k]] - S(pq[k]).imag();
        return f;
    };

    Eigen::VectorXcd V(n);
    for (int i = 0; i < n; ++i) V(i) = std::polar(vm(i), va(i));
    Eigen::MatrixXcd dS_dVa, dS_dVm;
    detail::injection_jacobian(Y, V, vm, dS_dVa, dS_dVm);

    Eigen::MatrixXd Ja(dim, dim);
    for (int a = 0; a < npvpq; ++a)
        for (int b = 0; b < npvpq; ++b)
            Ja(a, b) = -dS_dVa(pvpq[a], pvpq[b]).real();
    for (int a = 0; a < npvpq; ++a)
        for (int b = 0; b < npq; ++b)
            Ja(a, npvpq + b) = -dS_dVm(pvpq[a], pq[b]).real();
    for (int a = 0; a < npq; ++a)
        for (int b = 0; b < npvpq; ++b)
            Ja(npvpq + a, b) = -dS_dVa(pq[a], pvpq[b]).imag();
    for (int a = 0; a < npq; ++a)
        for (int b = 0; b < npq; ++b)
            Ja(npvpq + a, npvpq + b) = -dS_dVm(pq[a], pq[b]).imag();

    double max_rel = 0.0;
    for (int col = 0; col < dim; ++col) {
        Eigen::VectorXd vmp = vm, vmm = vm, vap = va, vam = va;
        if (col < npvpq) {
            vap(pvpq[col]) += step;
            vam(pvpq[col]) -= step;
        } else {
            vmp(pq[col - npvpq]) += step;
            vmm(pq[col - npvpq]) -= step;
        }
        Eigen::VectorXd dcol =
            (mismatch(vmp, vap) - mismatch(vmm, vam)) / (2.0 * step);
        for (int row = 0; row < dim; ++row) {
            const double a = Ja(row, col), fd = dcol(row);
            const double denom = std::max({std::abs(a), std::abs(fd), 1.0});
            max_rel = std::max(max_rel, std::abs(a - fd) / denom);
        }
    }
    return max_rel;
}

}  // namespace laasim
