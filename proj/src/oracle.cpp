#include "oscar/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <type_traits>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "oscar/errors.hpp"
#include "oscar/ode.hpp"

namespace oscar {

namespace {

constexpr cdouble I{0.0, 1.0};

using Dense = Eigen::MatrixXcd;
using Sparse = Eigen::SparseMatrix<cdouble>;

Dense annihilation(int d) {
    Dense a = Dense::Zero(d, d);
    for (int k = 1; k < d; ++k) a(k - 1, k) = std::sqrt(double(k));
    return a;
}

Dense number_op(int d) {
    Dense n = Dense::Zero(d, d);
    for (int k = 0; k < d; ++k) n(k, k) = double(k);
    return n;
}

Dense spin_z() { return (Dense(2, 2) << 1.0, 0.0, 0.0, -1.0).finished(); }
Dense spin_x() { return (Dense(2, 2) << 0.0, 1.0, 1.0, 0.0).finished(); }

// Spin (x) cantilever Hamiltonian without the field coupling.
Dense block_hamiltonian(const DimensionlessParams& d, int d_c, HamiltonianKind kind) {
    const Dense a = annihilation(d_c);
    const Dense x = a + a.adjoint();
    const Dense n = number_op(d_c);
    const Dense I2 = Dense::Identity(2, 2);
    const Dense Ic = Dense::Identity(d_c, d_c);
    Dense H = Eigen::kroneckerProduct(I2, n).eval();
    H += d.epsilon * Eigen::kroneckerProduct(spin_z(), Ic).eval();
    if (kind == HamiltonianKind::effective) {
        H += d.chi * Eigen::kroneckerProduct(spin_z(), n).eval();
    } else {
        H -= std::sqrt(2.0) * d.eta * Eigen::kroneckerProduct(spin_x(), x).eval();
    }
    return H;
}

void require_finite(const DimensionlessParams& d) {
    for (double v : {d.epsilon, d.eta, d.kappa, d.gamma, d.chi, d.N_th}) {
        if (!std::isfinite(v)) throw ValidationError("oracle", "parameters must be finite");
    }
    if (d.gamma < 0.0) throw ValidationError("oracle", "gamma must be >= 0");
    if (d.N_th < -0.5) throw ValidationError("oracle", "N_th must be >= -1/2");
}

}  // namespace

void TruncatedSpace::validate() const {
    if (d_c < 2 || d_r < 2) {
        throw DimensionError("oracle", fmt::format("cutoffs must be >= 2 (got d_c={}, d_r={})", d_c, d_r));
    }
}

std::string_view to_string(HamiltonianKind k) noexcept {
    return k == HamiltonianKind::effective ? "effective" : "pre_adiabatic";
}

DensityMatrix::DensityMatrix(TruncatedSpace space, Blocks blocks, double t)
    : space_(space), blocks_(std::move(blocks)), t_(t) {
    space_.validate();
    const int D = space_.block_dim();
    if (blocks_.rows() != D || blocks_.cols() != D * space_.d_r * space_.d_r) {
        throw DimensionError("oracle", fmt::format("block matrix is {}x{}, expected {}x{}", blocks_.rows(),
                                                   blocks_.cols(), D, D * space_.d_r * space_.d_r));
    }
}

Eigen::MatrixXcd DensityMatrix::block(int n, int m) const {
    const int D = space_.block_dim();
    return blocks_.middleCols(space_.block_offset(n, m), D);
}

Eigen::MatrixXcd DensityMatrix::to_dense() const {
    const int D = space_.block_dim();
    Dense full(space_.dim(), space_.dim());
    for (int n = 0; n < space_.d_r; ++n) {
        for (int m = 0; m < space_.d_r; ++m) full.block(n * D, m * D, D, D) = block(n, m);
    }
    return full;
}

DensityMatrix DensityMatrix::from_dense(TruncatedSpace space, const Eigen::MatrixXcd& full, double t) {
    space.validate();
    const int D = space.block_dim();
    if (full.rows() != space.dim() || full.cols() != space.dim()) {
        throw DimensionError("oracle", "dense matrix does not match the truncated space");
    }
    Blocks b(D, D * space.d_r * space.d_r);
    for (int n = 0; n < space.d_r; ++n) {
        for (int m = 0; m < space.d_r; ++m) b.middleCols(space.block_offset(n, m), D) = full.block(n * D, m * D, D, D);
    }
    return DensityMatrix(space, std::move(b), t);
}

cdouble DensityMatrix::trace() const {
    cdouble tr = 0.0;
    for (int n = 0; n < space_.d_r; ++n) tr += blocks_.middleCols(space_.block_offset(n, n), space_.block_dim()).trace();
    return tr;
}

double DensityMatrix::hermiticity_error() const {
    double err = 0.0;
    for (int n = 0; n < space_.d_r; ++n) {
        for (int m = n; m < space_.d_r; ++m) {
            err = std::max(err, (block(n, m) - block(m, n).adjoint()).cwiseAbs().maxCoeff());
        }
    }
    return err;
}

double DensityMatrix::min_eigenvalue() const {
    const Dense full = to_dense();
    const Dense herm = 0.5 * (full + full.adjoint());
    Eigen::SelfAdjointEigenSolver<Dense> es(herm, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double DensityMatrix::cantilever_leakage() const {
    double pop = 0.0;
    const int dc = space_.d_c;
    for (int n = 0; n < space_.d_r; ++n) {
        const int off = space_.block_offset(n, n);
        for (int s = 0; s < 2; ++s) {
            for (int k = dc - 2; k < dc; ++k) pop += blocks_(s * dc + k, off + s * dc + k).real();
        }
    }
    return pop;
}

double DensityMatrix::spin_z() const {
    double sz = 0.0;
    const int dc = space_.d_c;
    for (int n = 0; n < space_.d_r; ++n) {
        const int off = space_.block_offset(n, n);
        for (int k = 0; k < dc; ++k) sz += blocks_(k, off + k).real() - blocks_(dc + k, off + dc + k).real();
    }
    return sz;
}

cdouble DensityMatrix::cantilever_mean() const {
    // Tr(a R) = sum_k sqrt(k) R(k, k-1) within each spin sector.
    cdouble mean = 0.0;
    const int dc = space_.d_c;
    for (int n = 0; n < space_.d_r; ++n) {
        const int off = space_.block_offset(n, n);
        for (int s = 0; s < 2; ++s) {
            for (int k = 1; k < dc; ++k) mean += std::sqrt(double(k)) * blocks_(s * dc + k, off + s * dc + k - 1);
        }
    }
    return mean;
}

std::vector<cdouble> DensityMatrix::field_matrix(std::optional<Branch> branch) const {
    const int dr = space_.d_r, dc = space_.d_c;
    std::vector<cdouble> out(std::size_t(dr) * dr, 0.0);
    for (int n = 0; n < dr; ++n) {
        for (int m = 0; m < dr; ++m) {
            const int off = space_.block_offset(n, m);
            cdouble tr = 0.0;
            for (int s = 0; s < 2; ++s) {
                if (branch && (s == 0) != (*branch == Branch::e)) continue;
                for (int k = 0; k < dc; ++k) tr += blocks_(s * dc + k, off + s * dc + k);
            }
            out[std::size_t(n) * dr + m] = tr;
        }
    }
    return out;
}

InitialDensity initial_density(const DimensionlessParams& d, const SystemState& state, TruncatedSpace space) {
    space.validate();
    state.validate();
    require_finite(d);
    const int dc = space.d_c, dr = space.d_r, D = space.block_dim();

    // Field amplitudes.
    std::vector<cdouble> c(static_cast<std::size_t>(dr));
    double field_norm = 0.0;
    for (int n = 0; n < dr; ++n) {
        const cdouble beta = state.beta;
        cdouble amp = std::exp(-0.5 * std::norm(beta) - 0.5 * std::lgamma(n + 1.0));
        if (n > 0) amp *= std::pow(beta, n);
        c[std::size_t(n)] = amp;
        field_norm += std::norm(amp);
    }
    for (auto& z : c) z /= std::sqrt(field_norm);

    // Displaced thermal cantilever, built with headroom then cut to d_c.
    const double nbar = d.thermal_energy();
    const int big = dc + 40 + int(std::ceil(4.0 * std::norm(state.alpha) + 20.0 * nbar));
    Dense rho_th = Dense::Zero(big, big);
    for (int k = 0; k < big; ++k) rho_th(k, k) = std::pow(nbar / (1.0 + nbar), k) / (1.0 + nbar);
    const Dense a = annihilation(big);
    const Dense gen = state.alpha * a.adjoint() - std::conj(state.alpha) * a;
    const Dense disp = gen.exp();
    const Dense rho_big = disp * rho_th * disp.adjoint();
    Dense rho_c = rho_big.topLeftCorner(dc, dc);
    const double kept = rho_c.trace().real();
    rho_c /= kept;
    rho_c = 0.5 * (rho_c + rho_c.adjoint()).eval();

    Eigen::Vector2cd psi(std::sqrt(state.w_e), std::sqrt(state.w_g));
    const Dense spin = psi * psi.adjoint();
    const Dense sc = Eigen::kroneckerProduct(spin, rho_c).eval();

    Blocks b(D, D * dr * dr);
    for (int n = 0; n < dr; ++n) {
        for (int m = 0; m < dr; ++m) {
            b.middleCols(space.block_offset(n, m), D) = (c[std::size_t(n)] * std::conj(c[std::size_t(m)])) * sc;
        }
    }
    return {DensityMatrix(space, std::move(b), 0.0), std::max(0.0, 1.0 - field_norm), std::max(0.0, 1.0 - kept)};
}

Liouvillian::Liouvillian(const DimensionlessParams& d, TruncatedSpace space, HamiltonianKind kind)
    : params_(d), space_(space), kind_(kind) {
    space_.validate();
    require_finite(d);
    const int dc = space_.d_c, D = space_.block_dim();
    sqrt_k_.resize(dc - 1);
    for (int k = 1; k < dc; ++k) sqrt_k_[k - 1] = std::sqrt(double(k));
    h_.resize(D);
    for (int s = 0; s < 2; ++s) {
        const double sz = s == 0 ? 1.0 : -1.0;
        for (int k = 0; k < dc; ++k) {
            h_[s * dc + k] = k + d.epsilon * sz + (kind == HamiltonianKind::effective ? d.chi * k * sz : 0.0);
        }
    }
    if (kind == HamiltonianKind::pre_adiabatic) flip_ = -std::sqrt(2.0) * d.eta;
}

Eigen::MatrixXcd Liouvillian::block_hamiltonian() const { return oscar::block_hamiltonian(params_, space_.d_c, kind_); }

namespace {

// i c z for real c, without a general complex product.
inline cdouble mul_i(double c, cdouble z) { return {-c * z.imag(), c * z.real()}; }

}  // namespace

// Two fused stencil passes over each pair of spin sectors. With K = N + 1/2,
// g = gamma and the cantilever indices (k, l) of the sub-block:
//   Z = (g/4){p, R} + (g K/2)[x, R]
//   out = -i[H_diag, R] + i kappa (n x R - m R x) - [x, Z] (- i f [S_x x, R])
void Liouvillian::apply_block(int n, int m, const Eigen::Ref<const Eigen::MatrixXcd>& R,
                              Eigen::Ref<Eigen::MatrixXcd> out) const {
    const int dc = space_.d_c, D = space_.block_dim();
    const double g4 = params_.gamma / 4.0;
    const double gK2 = params_.gamma * params_.thermal_energy() / 2.0;
    const double kn = params_.kappa * n, km = params_.kappa * m;
    const double up = g4 + gK2, dn = gK2 - g4;
    const Eigen::VectorXd& sq = sqrt_k_;
    auto s = [&](int k) { return k > 0 ? sq[k - 1] : 0.0; };  // sqrt(k), k < d_c

    thread_local Dense Z;
    thread_local Eigen::VectorXcd zero;
    Z.resize(D, D);
    zero.setZero(dc);
    const cdouble* Rd = R.data();
    const Eigen::Index rs = R.outerStride();
    auto ptr = [&](int r, int c) { return Rd + c * rs + r; };

    // Row stencils peel the first and last k so the interior loop is branch-free.
    auto rows = [dc](auto&& body) {
        body(0, std::false_type{}, std::bool_constant<true>{});
        for (int k = 1; k + 1 < dc; ++k) body(k, std::true_type{}, std::true_type{});
        body(dc - 1, std::true_type{}, std::false_type{});
    };

    for (int c0 = 0; c0 < D; c0 += dc) {
        for (int r0 = 0; r0 < D; r0 += dc) {
            for (int l = 0; l < dc; ++l) {
                const double sl = s(l), sl1 = l + 1 < dc ? s(l + 1) : 0.0;
                const cdouble* Rl = ptr(r0, c0 + l);
                const cdouble* Rlm = l > 0 ? ptr(r0, c0 + l - 1) : zero.data();
                const cdouble* Rlp = l + 1 < dc ? ptr(r0, c0 + l + 1) : zero.data();
                cdouble* Zl = &Z(r0, c0 + l);
                rows([&](int k, auto lo, auto hi) {
                    cdouble z = -(sl * dn) * Rlm[k] - (sl1 * up) * Rlp[k];
                    if constexpr (decltype(hi)::value) z += (s(k + 1) * up) * Rl[k + 1];
                    if constexpr (decltype(lo)::value) z += (s(k) * dn) * Rl[k - 1];
                    Zl[k] = z;
                });
            }
        }
    }

    for (int c0 = 0; c0 < D; c0 += dc) {
        for (int r0 = 0; r0 < D; r0 += dc) {
            for (int l = 0; l < dc; ++l) {
                const double sl = s(l), sl1 = l + 1 < dc ? s(l + 1) : 0.0;
                const cdouble* Rl = ptr(r0, c0 + l);
                const cdouble* Rlm = l > 0 ? ptr(r0, c0 + l - 1) : zero.data();
                const cdouble* Rlp = l + 1 < dc ? ptr(r0, c0 + l + 1) : zero.data();
                const cdouble* Zl = &Z(r0, c0 + l);
                const cdouble* Zlm = l > 0 ? &Z(r0, c0 + l - 1) : zero.data();
                const cdouble* Zlp = l + 1 < dc ? &Z(r0, c0 + l + 1) : zero.data();
                const double hj = h_[c0 + l];
                const double* hi_row = h_.data() + r0;
                cdouble* Ol = &out(r0, c0 + l);
                rows([&](int k, auto lo, auto hi) {
                    cdouble xr = 0.0, xz = 0.0;  // (x R)(k,l), (x Z)(k,l)
                    if constexpr (decltype(lo)::value) {
                        xr += s(k) * Rl[k - 1];
                        xz += s(k) * Zl[k - 1];
                    }
                    if constexpr (decltype(hi)::value) {
                        xr += s(k + 1) * Rl[k + 1];
                        xz += s(k + 1) * Zl[k + 1];
                    }
                    const cdouble rx = sl * Rlm[k] + sl1 * Rlp[k];  // (R x)(k,l)
                    const cdouble zx = sl * Zlm[k] + sl1 * Zlp[k];  // (Z x)(k,l)
                    Ol[k] = mul_i(hj - hi_row[k], Rl[k]) + mul_i(kn, xr) - mul_i(km, rx) - xz + zx;
                });
            }
        }
    }

    if (flip_ != 0.0) {
        // -i f [S_x x, R]: S_x moves x R to the other row sector and R x to the
        // other column sector.
        for (int c0 = 0; c0 < D; c0 += dc) {
            for (int r0 = 0; r0 < D; r0 += dc) {
                const int rb = D - dc - r0, cb = D - dc - c0;  // opposite sectors
                for (int l = 0; l < dc; ++l) {
                    const cdouble* Ro = ptr(rb, c0 + l);  // rows from the other sector
                    for (int k = 0; k < dc; ++k) {
                        cdouble xr = 0.0;
                        if (k > 0) xr += s(k) * Ro[k - 1];
                        if (k + 1 < dc) xr += s(k + 1) * Ro[k + 1];
                        cdouble rx = 0.0;
                        if (l > 0) rx += s(l) * R(r0 + k, cb + l - 1);
                        if (l + 1 < dc) rx += s(l + 1) * R(r0 + k, cb + l + 1);
                        out(r0 + k, c0 + l) += mul_i(-flip_, xr - rx);
                    }
                }
            }
        }
    }
}

void Liouvillian::apply(const Blocks& rho, Blocks& out) const {
    const int D = space_.block_dim();
    out.resize(rho.rows(), rho.cols());
    for (int n = 0; n < space_.d_r; ++n) {
        for (int m = 0; m < space_.d_r; ++m) {
            const int off = space_.block_offset(n, m);
            apply_block(n, m, rho.middleCols(off, D), out.middleCols(off, D));
        }
    }
}

Liouvillian build_generator(const DimensionlessParams& d, TruncatedSpace space, HamiltonianKind kind) {
    return Liouvillian(d, space, kind);
}

Diagnostics diagnose(const DensityMatrix& rho, const OracleOptions& opts) {
    Diagnostics g;
    g.t = rho.t();
    g.trace_error = std::abs(rho.trace() - 1.0);
    g.hermiticity_error = rho.hermiticity_error();
    g.min_eigenvalue = opts.track_min_eigenvalue ? rho.min_eigenvalue() : std::numeric_limits<double>::quiet_NaN();
    g.below_floor = opts.track_min_eigenvalue && g.min_eigenvalue < opts.eigenvalue_floor;
    g.leakage = rho.cantilever_leakage();
    g.spin_z = rho.spin_z();
    g.cantilever_mean = rho.cantilever_mean();
    return g;
}

Trajectory integrate(const DensityMatrix& rho0, const Liouvillian& L, const std::vector<double>& times,
                     const OracleOptions& opts) {
    if (!std::is_sorted(times.begin(), times.end()) || (!times.empty() && times.front() < rho0.t())) {
        throw ValidationError("oracle", "output times must be ascending and not before the initial time");
    }
    const TruncatedSpace sp = rho0.space();
    if (sp.d_c != L.space().d_c || sp.d_r != L.space().d_r) {
        throw DimensionError("oracle", "density matrix and generator use different truncations");
    }
    Trajectory traj;
    auto check = [&](const DensityMatrix& rho) {
        auto diag = diagnose(rho, opts);
        if (diag.leakage > opts.leakage_limit) {
            throw LeakageError("oracle", fmt::format("cantilever top-level population {:.3g} above {:.0e} at t = {}",
                                                     diag.leakage, opts.leakage_limit, rho.t()));
        }
        return diag;
    };
    check(rho0);

    // Blocks never couple, so each conjugate pair (n, m), (m, n) is integrated
    // on its own: the working set stays in cache, and sharing one step
    // sequence inside a pair keeps the result Hermitian to rounding.
    const int D = sp.block_dim();
    std::vector<Blocks> out(times.size(), Blocks(D, rho0.blocks().cols()));
    for (int n = 0; n < sp.d_r; ++n) {
        for (int m = n; m < sp.d_r; ++m) {
            const int off_nm = sp.block_offset(n, m), off_mn = sp.block_offset(m, n);
            const int width = n == m ? D : 2 * D;
            auto rhs = [&L, n, m, D, width](double, const Dense& y, Dense& f) {
                f.resize(D, width);
                L.apply_block(n, m, y.leftCols(D), f.leftCols(D));
                if (width > D) L.apply_block(m, n, y.rightCols(D), f.rightCols(D));
            };
            Dense y(D, width);
            y.leftCols(D) = rho0.blocks().middleCols(off_nm, D);
            if (width > D) y.rightCols(D) = rho0.blocks().middleCols(off_mn, D);
            // The pair evolves linearly on its own, so atol is taken relative to
            // its initial size; a bare atol lets tiny high-photon blocks take
            // steps beyond the stability limit.
            const double scale = y.cwiseAbs().maxCoeff();
            if (scale == 0.0) {
                for (auto& o : out) {
                    o.middleCols(off_nm, D).setZero();
                    o.middleCols(off_mn, D).setZero();
                }
                continue;
            }
            const ode::Tolerance tol{opts.rtol, opts.atol * scale};
            double t = rho0.t();
            auto run = [&](auto& stepper) {
                for (std::size_t i = 0; i < times.size(); ++i) {
                    stepper.advance(rhs, y, t, times[i]);
                    t = times[i];
                    out[i].middleCols(off_nm, D) = y.leftCols(D);
                    if (width > D) out[i].middleCols(off_mn, D) = y.rightCols(D);
                }
                traj.steps += stepper.stats().accepted + stepper.stats().rejected;
                traj.rhs_evals += stepper.stats().rhs_evals;
            };
            if (opts.scheme == Scheme::dp5) {
                ode::DormandPrince5<Dense> stepper(tol);
                run(stepper);
            } else {
                ode::DormandPrince853<Dense> stepper(tol);
                run(stepper);
            }
        }
    }
    for (std::size_t i = 0; i < times.size(); ++i) {
        DensityMatrix rho(sp, std::move(out[i]), times[i]);
        traj.diagnostics.push_back(check(rho));
        traj.states.push_back(std::move(rho));
    }
    return traj;
}

PhaseDistribution phase_from_density(const DensityMatrix& rho, int grid_size) {
    auto dist = assemble_phase(rho.field_matrix(), rho.space().d_r - 1, grid_size);
    dist.meta.time = Time::unscaled(rho.t());
    // tau needs gamma, which the density matrix does not carry.
    dist.tau = std::numeric_limits<double>::quiet_NaN();
    return dist;
}

Eigen::MatrixXcd dense_superoperator(const DimensionlessParams& d, TruncatedSpace space, HamiltonianKind kind) {
    space.validate();
    require_finite(d);
    const int dc = space.d_c, dr = space.d_r;
    const Dense Ir = Dense::Identity(dr, dr), I2 = Dense::Identity(2, 2), Ic = Dense::Identity(dc, dc);
    const Dense ac = annihilation(dc);
    const Dense nr = number_op(dr);
    const Dense xc = ac + ac.adjoint();
    const Dense pc = ac - ac.adjoint();
    auto full = [&](const Dense& field, const Dense& spin, const Dense& cant) -> Dense {
        return Eigen::kroneckerProduct(field, Dense(Eigen::kroneckerProduct(spin, cant))).eval();
    };
    const Dense nc = number_op(dc);
    Dense H = full(Ir, I2, nc) + d.epsilon * full(Ir, spin_z(), Ic) - d.kappa * full(nr, I2, xc);
    if (kind == HamiltonianKind::effective) {
        H += d.chi * full(Ir, spin_z(), nc);
    } else {
        H -= std::sqrt(2.0) * d.eta * full(Ir, spin_x(), xc);
    }
    const Dense x = full(Ir, I2, xc);
    const Dense p = full(Ir, I2, pc);
    const int n = space.dim();
    const Dense Id = Dense::Identity(n, n);
    // vec(A X B) = (B^T (x) A) vec(X)
    auto left = [&](const Dense& A) -> Dense { return Eigen::kroneckerProduct(Id, A).eval(); };
    auto right = [&](const Dense& B) -> Dense { return Eigen::kroneckerProduct(Dense(B.transpose()), Id).eval(); };
    const Dense comm_x = left(x) - right(x);
    const Dense Zop = (d.gamma / 4.0) * (left(p) + right(p)) + (d.gamma * d.thermal_energy() / 2.0) * comm_x;
    return -I * (left(H) - right(H)) - comm_x * Zop;
}

DensityMatrix evolve_dense(const DensityMatrix& rho0, const Eigen::MatrixXcd& superop, double t) {
    const Dense full = rho0.to_dense();
    const int n = int(full.rows());
    if (superop.rows() != n * n) throw DimensionError("oracle", "superoperator does not match the density matrix");
    const Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(full.data(), n * n);
    const Dense prop = (superop * (t - rho0.t())).exp();
    const Eigen::VectorXcd w = prop * v;
    return DensityMatrix::from_dense(rho0.space(), Eigen::Map<const Dense>(w.data(), n, n), t);
}

DiscrepancyReport validate_adiabatic(const DimensionlessParams& d, const SystemState& state, TruncatedSpace space,
                                     const std::vector<double>& times, const OracleOptions& opts, int grid_size) {
    DiscrepancyReport r;
    r.epsilon = d.epsilon;
    r.eta = d.eta;
    r.chi = compute_chi(d.epsilon, d.eta);
    r.times = times;
    r.regime_ok = d.epsilon >= 2.0 * (1.0 + std::abs(d.eta));
    if (!r.regime_ok) {
        r.note = fmt::format("regime violation: epsilon = {:.4g} is not >> 1 + eta = {:.4g}", d.epsilon,
                             1.0 + std::abs(d.eta));
    }
    DimensionlessParams eff = d;
    eff.chi = r.chi;
    const auto init = initial_density(d, state, space);
    const auto t_eff = integrate(init.rho, Liouvillian(eff, space, HamiltonianKind::effective), times, opts);
    const auto t_pre = integrate(init.rho, Liouvillian(d, space, HamiltonianKind::pre_adiabatic), times, opts);
    for (std::size_t i = 0; i < times.size(); ++i) {
        const auto pe = phase_from_density(t_eff.states[i], grid_size);
        const auto pp = phase_from_density(t_pre.states[i], grid_size);
        for (std::size_t j = 0; j < pe.raw.size(); ++j) {
            r.phase_linf = std::max(r.phase_linf, std::abs(pe.raw[j] - pp.raw[j]));
        }
        r.spin_z_linf = std::max(r.spin_z_linf, std::abs(t_eff.diagnostics[i].spin_z - t_pre.diagnostics[i].spin_z));
    }
    return r;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          const std::vector<std::pair<int, int>>& elements) {
    os << "t,trace_error,hermiticity_error,min_eigenvalue,leakage,spin_z,a_re,a_im";
    for (auto [n, m] : elements) os << fmt::format(",theta_{}_{}_re,theta_{}_{}_im", n, m, n, m);
    os << '\n';
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        const auto& g = traj.diagnostics[i];
        os << fmt::format("{:.12g},{:.12g},{:.12g},{:.12g},{:.12g},{:.12g},{:.12g},{:.12g}", g.t, g.trace_error,
                          g.hermiticity_error, g.min_eigenvalue, g.leakage, g.spin_z, g.cantilever_mean.real(),
                          g.cantilever_mean.imag());
        const auto field = traj.states[i].field_matrix();
        const int dr = traj.states[i].space().d_r;
        for (auto [n, m] : elements) {
            const cdouble z = (n < dr && m < dr) ? field[std::size_t(n) * dr + m] : cdouble(0.0);
            os << fmt::format(",{:.12g},{:.12g}", z.real(), z.imag());
        }
        os << '\n';
    }
}

}  // namespace oscar
