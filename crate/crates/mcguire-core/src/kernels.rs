//! Thermodynamic-limit kernel functions.
//!
//! For fixed (x, t) and rapidity λ the Green's function integrand is
//! built from three scalar functions on the Fermi interval [−k_F, k_F]:
//!
//! ```text
//!     g(x,t;λ)  = (1/2π) ∫ e^{−iτ(k)} / (1 + 4(k−λ)²/c²) dk ,
//!     e(q|λ)    = (1/π) PV∫ e^{−iτ(k)} / ((k−q)(1+4(k−λ)²/c²)) dk
//!                 + 2(q−λ) e^{−iτ(q)} / (c · (1+4(q−λ)²/c²)) ,
//! ```
//!
//! and the kernel pair they generate,
//!
//! ```text
//!     𝒱(q,q') = [e₊(q)e₋(q') − e₋(q)e₊(q')] / (π(q−q')) ,
//!     ℛ(q,q') = e₊(q) e₊(q') / 2π ,
//! ```
//!
//! with e₋(q) = e^{iτ(q)/2} and e₊ = e₋·e. The Lorentzian factors are
//! split by partial fractions into the pole primitives of [`oscquad`],
//! so each λ costs two complex-pole evaluations (at λ ± ic/2, done once
//! per context) plus one PV evaluation per grid momentum.
//!
//! The same shapes survive the c → ∞ limit with λ = −(c/2)cot θ held
//! through the substitution angle θ; those variants drop the Lorentzian
//! entirely and are used both as the strong-coupling reference and as a
//! cross-check on the finite-c path.

use crate::oscquad::{
    emitau, gauss_fresnel, pole_integral, tau, PoleIntegralRequest, PoleVariant,
};
use crate::C64;
use std::f64::consts::PI;

/// λ(θ) = −(c/2) cot θ, the compactifying map from θ ∈ (0, π) to the
/// rapidity line. Used at every coupling, not just c → ∞, so the finite-
/// and infinite-c integrators share one coordinate.
pub fn lambda_of_theta(theta: f64, c: f64) -> f64 {
    -(c / 2.0) / theta.tan()
}

/// Relative diagonal crossover: below this |q−q'| (in units of k_F) the
/// difference quotient in 𝒱 loses ~8 digits to cancellation and the
/// analytic diagonal rule takes over.
pub const DELTA_DIAG: f64 = 1e-4;

/// Everything fixed for one (x, t, λ) evaluation of the kernels.
///
/// Construction performs the two λ-pole integrals shared by every
/// momentum; the per-q calls then cost one PV primitive each.
#[derive(Debug, Clone)]
pub struct KernelContext {
    pub x: f64,
    pub t: f64,
    pub lambda: f64,
    pub c: f64,
    /// ∫e^{−iτ}/(k − (λ+ic/2)) dk, empty at t = 0 (closed forms used).
    ipole_plus: C64,
    /// Same at the conjugate pole λ − ic/2.
    ipole_minus: C64,
}

impl KernelContext {
    pub fn new(lambda: f64, x: f64, t: f64, c: f64) -> Self {
        let (ipole_plus, ipole_minus) = if t == 0.0 {
            (C64::new(0.0, 0.0), C64::new(0.0, 0.0))
        } else {
            let zp = C64::new(lambda, 0.5 * c);
            let zm = C64::new(lambda, -0.5 * c);
            let ip = pole_integral(&PoleIntegralRequest {
                a: zp,
                x,
                t,
                variant: PoleVariant::ComplexPole,
            })
            .expect("λ ± ic/2 is off the real axis for c > 0");
            let im = pole_integral(&PoleIntegralRequest {
                a: zm,
                x,
                t,
                variant: PoleVariant::ComplexPole,
            })
            .expect("λ ± ic/2 is off the real axis for c > 0");
            (ip, im)
        };
        Self { x, t, lambda, c, ipole_plus, ipole_minus }
    }

    /// g(x,t;λ); at t = 0 the closed form (c/4)e^{ixλ − c|x|/2}.
    pub fn g(&self) -> C64 {
        let (x, t, lam, c) = (self.x, self.t, self.lambda, self.c);
        if t == 0.0 {
            let mag = (c / 4.0) * (-c * x.abs() / 2.0).exp();
            return mag * C64::new(0.0, x * lam).exp();
        }
        let quarter_c_over_i = C64::new(0.0, -0.25 * c);
        (1.0 / (2.0 * PI)) * quarter_c_over_i * (self.ipole_plus - self.ipole_minus)
    }

    fn pv(&self, q: f64, variant: PoleVariant) -> C64 {
        pole_integral(&PoleIntegralRequest {
            a: C64::new(q, 0.0),
            x: self.x,
            t: self.t,
            variant,
        })
        .expect("grid momenta are real")
    }

    /// e(q|λ); at t = 0 the closed form c(e^{iqx} − e^{ixλ−c|x|/2}) /
    /// (2q − 2λ − ic·sgn x), identically 0 at x = 0.
    pub fn e(&self, q: f64) -> C64 {
        self.e_parts(q, false).0
    }

    /// ∂_q e(q|λ), assembled analytically (never finite differences).
    pub fn de(&self, q: f64) -> C64 {
        self.e_parts(q, true).1
    }

    /// Both e(q|λ) and ∂_q e(q|λ), sharing the PV primitive they have in
    /// common; this is what the Nyström assembly calls per node.
    pub fn e_and_de(&self, q: f64) -> (C64, C64) {
        self.e_parts(q, true)
    }

    fn e_parts(&self, q: f64, with_deriv: bool) -> (C64, C64) {
        let (x, t, lam, c) = (self.x, self.t, self.lambda, self.c);
        if t == 0.0 {
            if x == 0.0 {
                return (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
            }
            let sx = if x > 0.0 { 1.0 } else { -1.0 };
            let big_e = (-c * x.abs() / 2.0).exp() * C64::new(0.0, x * lam).exp();
            let eiqx = C64::new(0.0, q * x).exp();
            let den = C64::new(2.0 * q - 2.0 * lam, -c * sx);
            let e_val = c * (eiqx - big_e) / den;
            let de_val = if with_deriv {
                c * (C64::i() * x * eiqx) / den - 2.0 * c * (eiqx - big_e) / (den * den)
            } else {
                C64::new(0.0, 0.0)
            };
            return (e_val, de_val);
        }
        let uq = 1.0 + 4.0 * (q - lam).powi(2) / (c * c);
        let zp_den = C64::new(lam - q, 0.5 * c);
        let zm_den = C64::new(lam - q, -0.5 * c);
        let quarter_c_over_i = C64::new(0.0, -0.25 * c);
        let ipv = self.pv(q, PoleVariant::PrincipalValue);
        let emit = emitau(C64::new(q, 0.0), x, t);
        let e_val = (1.0 / PI)
            * (ipv / uq
                + quarter_c_over_i * (self.ipole_plus / zp_den - self.ipole_minus / zm_den))
            + 2.0 * (q - lam) * emit / (c * uq);
        if !with_deriv {
            return (e_val, C64::new(0.0, 0.0));
        }
        let ipv_d = self.pv(q, PoleVariant::PrincipalValueDerivative);
        let dup = 8.0 * (q - lam) / (c * c);
        let taup = 2.0 * t * q - x;
        let val = (1.0 / PI)
            * (ipv_d / uq - ipv * dup / (uq * uq)
                + quarter_c_over_i
                    * (self.ipole_plus / (zp_den * zp_den)
                        - self.ipole_minus / (zm_den * zm_den)));
        let dpsi = (2.0 / c)
            * (emit / uq + (q - lam) * C64::new(0.0, -taup) * emit / uq
                - (q - lam) * emit * dup / (uq * uq));
        (e_val, val + dpsi)
    }

    /// 𝒱(q,q') with the analytic diagonal rule inside |q−q'| < δ·k_F
    /// (pass the physical k_F the grid lives on).
    pub fn kernel_v(&self, q: f64, qp: f64, k_f: f64) -> C64 {
        if (q - qp).abs() < DELTA_DIAG * k_f {
            let qm = 0.5 * (q + qp);
            let (_, de) = self.e_and_de(qm);
            let eminus = C64::new(0.0, 0.5 * tau(qm, self.x, self.t)).exp();
            return eminus * eminus * de / PI;
        }
        let (eq, eqp) = (self.e(q), self.e(qp));
        let ph = C64::new(
            0.0,
            0.5 * (tau(q, self.x, self.t) + tau(qp, self.x, self.t)),
        )
        .exp();
        ph * (eq - eqp) / (PI * (q - qp))
    }

    /// ℛ(q,q') = e₊(q)e₊(q')/2π.
    pub fn kernel_r(&self, q: f64, qp: f64) -> C64 {
        self.e_plus(q) * self.e_plus(qp) / (2.0 * PI)
    }

    /// e₊(q) = e^{iτ(q)/2} e(q|λ).
    pub fn e_plus(&self, q: f64) -> C64 {
        C64::new(0.0, 0.5 * tau(q, self.x, self.t)).exp() * self.e(q)
    }
}

/// Infinite-coupling kernel context at fixed substitution angle θ.
#[derive(Debug, Clone, Copy)]
pub struct InfiniteCContext {
    pub x: f64,
    pub t: f64,
    pub theta: f64,
}

impl InfiniteCContext {
    pub fn new(theta: f64, x: f64, t: f64) -> Self {
        Self { x, t, theta }
    }

    /// g_∞ = (1/2π)∫e^{−iτ(k)}dk, independent of θ. t ≠ 0 required.
    pub fn g_inf(&self) -> C64 {
        gauss_fresnel(self.x, self.t).expect("equal-time handled before kernels") / (2.0 * PI)
    }

    /// e_∞(q|θ) = (sin²θ/π)·PV∫e^{−iτ}/(k−q) + sinθ cosθ e^{−iτ(q)}.
    pub fn e_inf(&self, q: f64) -> C64 {
        self.e_parts_inf(q, false).0
    }

    pub fn e_and_de_inf(&self, q: f64) -> (C64, C64) {
        self.e_parts_inf(q, true)
    }

    fn e_parts_inf(&self, q: f64, with_deriv: bool) -> (C64, C64) {
        let (x, t, th) = (self.x, self.t, self.theta);
        let s2 = th.sin().powi(2);
        let sc = th.sin() * th.cos();
        let emit = emitau(C64::new(q, 0.0), x, t);
        let pv = pole_integral(&PoleIntegralRequest {
            a: C64::new(q, 0.0),
            x,
            t,
            variant: PoleVariant::PrincipalValue,
        })
        .expect("grid momenta are real");
        let e_val = (s2 / PI) * pv + sc * emit;
        if !with_deriv {
            return (e_val, C64::new(0.0, 0.0));
        }
        let pv_d = pole_integral(&PoleIntegralRequest {
            a: C64::new(q, 0.0),
            x,
            t,
            variant: PoleVariant::PrincipalValueDerivative,
        })
        .expect("grid momenta are real");
        let de_val = (s2 / PI) * pv_d + sc * C64::new(0.0, -(2.0 * t * q - x)) * emit;
        (e_val, de_val)
    }
}
