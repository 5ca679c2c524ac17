//! Bethe equations for one spin-down impurity among N spin-up fermions
//! on a ring of length L.
//!
//! In the (N+1, 1) sector every eigenstate is labeled by N+1 distinct
//! integers n_j and a branch index m. For a given auxiliary rapidity λ
//! the momenta are k_j = (2/L) z_{n_j}(λ), where z_n(λ) is the unique
//! solution of
//!
//! ```text
//!     z = πn + arccot(a z − 2λ/c),        a = 4/(L c),
//! ```
//!
//! with arccot taking values in [0, π]. The physical values Λ_m of λ are
//! then quantized by Σ_j α_j(Λ_m) = −πm with α_j = −arccot(2(k_j−λ)/c),
//! m = 1..N; the branch m = 0 is the λ = −∞ limit in which the k_j drop
//! onto the free lattice 2πn_j/L.
//!
//! The module also provides the entire function f(z,λ) whose zeros are
//! exactly the z_n(λ), its logarithmic derivative g = f'/f (which closes
//! the lattice sums Σ_n (z−z_n)^{−1} in closed form), and the two
//! summation identities used for the regularized finite-volume kernels.

use crate::params::CoreError;
use crate::C64;
use std::f64::consts::PI;

/// arccot with range [0, π]: arccot(+∞) = 0, arccot(0) = π/2, arccot(−∞) = π.
///
/// The branch matters: every phase and quantization condition below is
/// stated for this convention, and the off-by-π ambiguity of the naive
/// atan(1/x) would silently shuffle states between branches.
pub fn arccot(v: f64) -> f64 {
    PI / 2.0 - v.atan()
}

/// Solve z = πn + arccot(a z − 2λ/c) for the unique root in (πn, πn+π).
///
/// Bisection narrows the bracket to ~1e−3, then Newton finishes; the map
/// is globally monotone in z so the bracket is safe and Newton converges
/// quadratically from inside it.
pub fn solve_z(n: i64, lambda: f64, box_len: f64, c: f64) -> f64 {
    let a = 4.0 / (box_len * c);
    let nf = n as f64;
    let shift = |z: f64| a * z - 2.0 * lambda / c;
    let f = |z: f64| z - PI * nf - arccot(shift(z));
    let mut zlo = PI * nf;
    let mut zhi = PI * (nf + 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (zlo + zhi);
        if f(mid) > 0.0 {
            zhi = mid;
        } else {
            zlo = mid;
        }
        if zhi - zlo < 1e-3 {
            break;
        }
    }
    let mut z = 0.5 * (zlo + zhi);
    for _ in 0..60 {
        let v = shift(z);
        let fp = 1.0 + a / (1.0 + v * v);
        let dz = f(z) / fp;
        z -= dz;
        if dz.abs() < 1e-14 {
            break;
        }
    }
    z.clamp(PI * nf + f64::MIN_POSITIVE, PI * (nf + 1.0))
}

/// ∂z_n/∂λ = (2/c) / (1 + a + (a z − 2λ/c)²), evaluated at a solved z.
pub fn dz_dlambda(z: f64, lambda: f64, box_len: f64, c: f64) -> f64 {
    let a = 4.0 / (box_len * c);
    let v = a * z - 2.0 * lambda / c;
    (2.0 / c) / (1.0 + a + v * v)
}

/// Momenta k_j = (2/L) z_{n_j}(λ) for a label set at fixed λ.
pub fn momenta_of_lambda(
    n_labels: &[i64],
    lambda: f64,
    box_len: f64,
    c: f64,
) -> Result<Vec<f64>, CoreError> {
    check_labels(n_labels)?;
    Ok(n_labels
        .iter()
        .map(|&n| 2.0 * solve_z(n, lambda, box_len, c) / box_len)
        .collect())
}

fn check_labels(n_labels: &[i64]) -> Result<(), CoreError> {
    let mut sorted = n_labels.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != n_labels.len() {
        return Err(CoreError::InvalidParams(
            "impurity labels must be distinct".into(),
        ));
    }
    Ok(())
}

/// Phase α(k, λ) = −arccot(2(k−λ)/c) ∈ (−π, 0).
pub fn alpha(k: f64, lambda: f64, c: f64) -> f64 {
    -arccot(2.0 * (k - lambda) / c)
}

/// Σ_j α_j(λ) over a label set; strictly decreasing in λ from 0⁻ to −(N+1)π.
pub fn sum_alpha(n_labels: &[i64], lambda: f64, box_len: f64, c: f64) -> f64 {
    n_labels
        .iter()
        .map(|&n| {
            let k = 2.0 * solve_z(n, lambda, box_len, c) / box_len;
            alpha(k, lambda, c)
        })
        .sum()
}

/// Find the finite rapidity root Λ_m of Σ_j α_j(λ) + πm = 0 for m in 1..=N.
///
/// The sum is strictly monotone, so the root is bracketed by scanning
/// outward from the momentum window (the physical root tracks the k's,
/// but nothing in the equations bounds how far it strays, hence the
/// geometric expansion).
pub fn find_lambda_root(
    n_labels: &[i64],
    m: usize,
    box_len: f64,
    c: f64,
) -> Result<f64, CoreError> {
    let n_state = n_labels.len();
    if m == 0 || m >= n_state {
        return Err(CoreError::InvalidParams(format!(
            "finite branch index m must lie in 1..={}, got {m}",
            n_state - 1
        )));
    }
    let target = |lam: f64| sum_alpha(n_labels, lam, box_len, c) + PI * m as f64;
    let kmin = 2.0 * PI * (*n_labels.iter().min().unwrap() as f64) / box_len;
    let kmax = 2.0 * PI * (*n_labels.iter().max().unwrap() as f64) / box_len;
    let mut lo = kmin - 10.0 * c;
    let mut hi = kmax + 10.0 * c;
    let mut step = 10.0 * c;
    let mut guard = 0;
    while target(lo) <= 0.0 {
        lo -= step;
        step *= 2.0;
        guard += 1;
        if guard > 80 {
            return Err(CoreError::NonConvergence {
                context: format!("bracketing Λ_{m} below: reached λ={lo:.3e}"),
                history: vec![lo],
            });
        }
    }
    step = 10.0 * c;
    while target(hi) >= 0.0 {
        hi += step;
        step *= 2.0;
        guard += 1;
        if guard > 160 {
            return Err(CoreError::NonConvergence {
                context: format!("bracketing Λ_{m} above: reached λ={hi:.3e}"),
                history: vec![hi],
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if target(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * mid.abs().max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Auxiliary rapidity, with the m = 0 branch kept as a genuine −∞ tag.
///
/// Representing the sentinel by a large float would poison every
/// downstream formula with catastrophic cancellation; the limit values
/// (α_j = 0, u_j = ∞, free momenta) instead get dedicated branches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lambda {
    MinusInfinity,
    Finite(f64),
}

impl Lambda {
    pub fn is_finite(self) -> bool {
        matches!(self, Lambda::Finite(_))
    }

    /// The finite value, panicking on the sentinel (callers branch first).
    pub fn value(self) -> f64 {
        match self {
            Lambda::Finite(v) => v,
            Lambda::MinusInfinity => panic!("λ = −∞ sentinel has no finite value"),
        }
    }
}

/// One solved Bethe eigenstate of the (N+1, 1) sector.
#[derive(Debug, Clone)]
pub struct ImpurityState {
    pub n_labels: Vec<i64>,
    /// Branch index in 0..=N; m = 0 is the λ = −∞ sentinel.
    pub m: usize,
    pub lambda: Lambda,
    /// Momenta k_j, one per label.
    pub k: Vec<f64>,
    /// Phases α_j ∈ (−π, 0); exactly 0 on the sentinel branch.
    pub alpha: Vec<f64>,
    /// Weights u_j = 1/sin²α_j + a; +∞ on the sentinel branch.
    pub u: Vec<f64>,
    pub box_len: f64,
    pub c: f64,
}

impl ImpurityState {
    /// Solve the branch-m state for a label set (m = 0 gives the sentinel).
    pub fn solve(n_labels: &[i64], m: usize, box_len: f64, c: f64) -> Result<Self, CoreError> {
        check_labels(n_labels)?;
        if m >= n_labels.len() {
            return Err(CoreError::InvalidParams(format!(
                "branch index m={m} out of range for {} labels",
                n_labels.len()
            )));
        }
        let a = 4.0 / (box_len * c);
        if m == 0 {
            let k: Vec<f64> = n_labels
                .iter()
                .map(|&n| 2.0 * PI * n as f64 / box_len)
                .collect();
            return Ok(Self {
                n_labels: n_labels.to_vec(),
                m,
                lambda: Lambda::MinusInfinity,
                alpha: vec![0.0; k.len()],
                u: vec![f64::INFINITY; k.len()],
                k,
                box_len,
                c,
            });
        }
        let lam = find_lambda_root(n_labels, m, box_len, c)?;
        let k: Vec<f64> = n_labels
            .iter()
            .map(|&n| 2.0 * solve_z(n, lam, box_len, c) / box_len)
            .collect();
        let alpha_v: Vec<f64> = k.iter().map(|&kj| alpha(kj, lam, c)).collect();
        let u: Vec<f64> = alpha_v.iter().map(|&al| 1.0 / al.sin().powi(2) + a).collect();
        Ok(Self {
            n_labels: n_labels.to_vec(),
            m,
            lambda: Lambda::Finite(lam),
            k,
            alpha: alpha_v,
            u,
            box_len,
            c,
        })
    }

    /// All N+1 branches (sentinel first) for one label set.
    pub fn solve_all_branches(
        n_labels: &[i64],
        box_len: f64,
        c: f64,
    ) -> Result<Vec<Self>, CoreError> {
        (0..n_labels.len())
            .map(|m| Self::solve(n_labels, m, box_len, c))
            .collect()
    }

    /// 1/u_j with the sentinel limit 1/∞ = 0 made explicit.
    pub fn inv_u(&self) -> Vec<f64> {
        self.u
            .iter()
            .map(|&u| if u.is_finite() { 1.0 / u } else { 0.0 })
            .collect()
    }

    /// Total momentum P = Σ_j k_j; equals (2π/L)(Σ n_j + m) on shell.
    pub fn total_momentum(&self) -> f64 {
        self.k.iter().sum()
    }

    /// Max residual of cot(k L/2) = 2(k−λ)/c over the state's momenta.
    pub fn bethe_residual(&self) -> f64 {
        match self.lambda {
            Lambda::MinusInfinity => self
                .k
                .iter()
                .zip(&self.n_labels)
                .map(|(&k, &n)| (k - 2.0 * PI * n as f64 / self.box_len).abs())
                .fold(0.0, f64::max),
            Lambda::Finite(lam) => self
                .k
                .iter()
                .map(|&k| {
                    let z = k * self.box_len / 2.0;
                    (1.0 / z.tan() - 2.0 * (k - lam) / self.c).abs()
                })
                .fold(0.0, f64::max),
        }
    }
}

/// The entire function f(z, λ) = cos z − (a z − 2λ/c) sin z whose zeros
/// are exactly the Bethe roots z_n(λ).
pub fn entire_f(z: C64, lambda: f64, box_len: f64, c: f64) -> C64 {
    let a = 4.0 / (box_len * c);
    let v = z * a - 2.0 * lambda / c;
    z.cos() - v * z.sin()
}

/// g(z, λ) = ∂_z f / f = −[(1+a) sin z + v cos z] / (cos z − v sin z),
/// the closed form of the lattice sum Σ_n (z − z_n)^{−1}.
pub fn log_derivative_g(z: C64, lambda: f64, box_len: f64, c: f64) -> C64 {
    let a = 4.0 / (box_len * c);
    let v = z * a - 2.0 * lambda / c;
    let (s, co) = (z.sin(), z.cos());
    -((s * (1.0 + a)) + v * co) / (co - v * s)
}

/// ∂_z g(z, λ) = −[1 + 2a + v² + a² sin²z] / f², the closed form of
/// −Σ_n (z − z_n)^{−2}.
pub fn log_derivative_g_dz(z: C64, lambda: f64, box_len: f64, c: f64) -> C64 {
    let a = 4.0 / (box_len * c);
    let v = z * a - 2.0 * lambda / c;
    let (s, co) = (z.sin(), z.cos());
    let f = co - v * s;
    -(v * v + (1.0 + 2.0 * a) + s * s * (a * a)) / (f * f)
}

/// cot(πm + D) − 1/D, stable for small detuning D from a lattice point.
fn cot_minus_pole(d: f64) -> f64 {
    if d.abs() < 0.1 {
        let d2 = d * d;
        -d * (1.0 / 3.0 + d2 * (1.0 / 45.0 + d2 * (2.0 / 945.0 + d2 / 4725.0)))
    } else {
        1.0 / d.tan() - 1.0 / d
    }
}

/// 1/sin²(πm + D) − 1/D², stable for small D.
fn csc2_minus_pole(d: f64) -> f64 {
    if d.abs() < 0.1 {
        let d2 = d * d;
        1.0 / 3.0 + d2 * (1.0 / 15.0 + d2 * (2.0 / 189.0 + d2 / 675.0))
    } else {
        1.0 / d.sin().powi(2) - 1.0 / (d * d)
    }
}

/// Truncated lattice sums Σ_{|n|≤cutoff} (z−z_n)^{−1} and (z−z_n)^{−2}
/// with the 1/cutoff truncation tail removed analytically.
///
/// Each term has its free-lattice asymptote h_n subtracted (h_n = 1/(z−πn)
/// for n ≥ 0 and 1/(z−π(n+1)) for n < 0, matching where z_n actually
/// accumulates on each side), and the full h-sum is restored in closed
/// form as cot z + 1/z. Near a lattice point z ≈ πm̃ the singular h terms
/// are grouped with the cot/csc² pole through Laurent series so the
/// combination stays finite even exactly on the lattice.
pub fn lattice_sums_z(z: f64, lambda: f64, box_len: f64, c: f64, cutoff: i64) -> (f64, f64) {
    let mt = (z / PI).round() as i64;
    let sing_lo = if mt <= 0 { Some(mt - 1) } else { None };
    let sing_hi = if mt >= 0 { Some(mt) } else { None };
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for n in -cutoff..=cutoff {
        let zn = solve_z(n, lambda, box_len, c);
        let d = z - zn;
        s1 += 1.0 / d;
        s2 += 1.0 / (d * d);
        if Some(n) == sing_lo || Some(n) == sing_hi {
            continue;
        }
        let h = if n >= 0 {
            1.0 / (z - PI * n as f64)
        } else {
            1.0 / (z - PI * (n + 1) as f64)
        };
        s1 -= h;
        s2 -= h * h;
    }
    let d = z - PI * mt as f64;
    if mt != 0 {
        s1 += cot_minus_pole(d) + 1.0 / z;
        s2 += csc2_minus_pole(d) + 1.0 / (z * z);
    } else {
        // Here 1/z and the subtracted pole 1/D coincide and cancel exactly.
        s1 += cot_minus_pole(d);
        s2 += csc2_minus_pole(d);
    }
    (s1, s2)
}

/// Closed-form lattice sums at a free-sector momentum q = 2πm̃/L:
/// (2/L) Σ_k (k−q)^{−1} = 2(q−λ)/c and (4/L²) Σ_k (k−q)^{−2} =
/// 1 + 2a + 4(q−λ)²/c².
pub fn appendix_sums(q: f64, lambda: f64, box_len: f64, c: f64) -> Result<(f64, f64), CoreError> {
    let mt = q * box_len / (2.0 * PI);
    if (mt - mt.round()).abs() > 1e-9 {
        return Err(CoreError::Domain(format!(
            "q={q} is not a free-lattice momentum 2πm/L for L={box_len}"
        )));
    }
    let a = 4.0 / (box_len * c);
    let w = 2.0 * (q - lambda) / c;
    Ok((w, 1.0 + 2.0 * a + w * w))
}

/// The truncated counterparts of [`appendix_sums`], summed over
/// |n| ≤ cutoff with the analytic tail restored; converges to the closed
/// forms as the cutoff grows (the residual tail is O(cutoff⁻²)).
pub fn appendix_sums_truncated(
    q: f64,
    lambda: f64,
    box_len: f64,
    c: f64,
    cutoff: i64,
) -> (f64, f64) {
    let z = q * box_len / 2.0;
    let (s1, s2) = lattice_sums_z(z, lambda, box_len, c, cutoff);
    // k−q = (2/L)(z_n − z) turns the z-sums into the k-space forms.
    (-s1, s2)
}
