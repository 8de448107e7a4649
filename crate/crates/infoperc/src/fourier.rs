//! The generalized update rule for heat-bath Glauber dynamics.
//!
//! The heat-bath plus-probability `f(x) = (tanh(x)+1)/2` applied at
//! `x = beta * sum of neighbor spins` is expanded as a power series; since
//! spins are +-1 each power collapses to a multilinear form, giving per-size
//! coefficients `C_k`. These are folded into subset probabilities `p_{k,r}`
//! for each degree `r`, so that an update can expose only a random subset `A`
//! of the neighbors and apply a symmetric monotone function `Phi_A` whose
//! average over `A` reproduces the heat-bath law exactly (up to series
//! truncation). Sparse subsets make backward update histories subcritical.

use crate::error::{Error, Result};
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

/// Hard cap on the series truncation order; beyond this the alternating
/// tangent-number terms no longer gain anything at f64 precision.
pub const L_MAX_CAP: usize = 60;

/// Per-degree Fourier machinery defining the generalized update rule.
#[derive(Debug, Clone)]
pub struct RuleTable {
    pub beta: f64,
    pub d: usize,
    pub epsilon: f64,
    pub tol: f64,
    pub l_max: usize,
    /// Series coefficients `B_0..B_{l_max}` of `f(x) = (tanh(x)+1)/2`.
    pub b_coeffs: Vec<f64>,
    /// Upper bound on the full `sum |B_l|` (partial sum plus tail bound).
    pub b_sum: f64,
    /// `D_0 = 4 * b_sum`, the constant in the subset-probability bounds.
    pub d0: f64,
    rules: Vec<DegreeRule>,
}

/// Rule data for one vertex degree.
#[derive(Debug, Clone)]
pub struct DegreeRule {
    pub r: usize,
    /// `C_k` for k = 1..=r (index 0 unused).
    pub c: Vec<f64>,
    /// `sign(C_k)`, +1 when `C_k = 0`.
    pub sign: Vec<i8>,
    /// `p_{k,r}` for k = 0..=r.
    pub p: Vec<f64>,
    /// Cumulative `P(|A| <= k) = sum_{j<=k} binom(r,j) p_{j,r}`.
    size_cdf: Vec<f64>,
    /// Series truncation slack `B (beta r)^{l_max+1} / (1 - beta r)`.
    pub tail_bound: f64,
}

/// Tangent numbers T_1..T_m (1, 2, 16, 272, ...), exact.
fn tangent_numbers(m: usize) -> Vec<BigUint> {
    let mut t: Vec<BigUint> = Vec::with_capacity(m + 1);
    t.push(BigUint::zero()); // unused slot 0
    if m == 0 {
        return t;
    }
    t.push(BigUint::one());
    for k in 2..=m {
        let prev = t[k - 1].clone();
        t.push(prev * BigUint::from(k - 1));
    }
    for k in 2..=m {
        for j in k..=m {
            let a = t[j - 1].clone() * BigUint::from(j - k);
            let b = t[j].clone() * BigUint::from(j - k + 2);
            t[j] = a + b;
        }
    }
    t
}

/// Series coefficients `B_0..B_{l_max}` of `(tanh(x)+1)/2`, computed from
/// exact tangent numbers. `B_0 = B_1 = 1/2`, even terms vanish.
pub fn series_coeffs(l_max: usize) -> Result<Vec<f64>> {
    if l_max < 1 {
        return Err(Error::Parameter("series_coeffs needs l_max >= 1".into()));
    }
    if l_max > L_MAX_CAP {
        return Err(Error::Parameter(format!(
            "series truncation order {l_max} exceeds cap {L_MAX_CAP}"
        )));
    }
    let m = l_max.div_ceil(2);
    let tangents = tangent_numbers(m);
    let mut coeffs = vec![0.0; l_max + 1];
    coeffs[0] = 0.5;
    let mut factorial = 1.0f64;
    let mut ell = 1usize;
    for (n, tn) in tangents.iter().enumerate().skip(1) {
        // ell = 2n - 1
        while ell < 2 * n - 1 {
            ell += 1;
            factorial *= ell as f64;
        }
        if ell > l_max {
            break;
        }
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        coeffs[ell] = sign * tn.to_f64().expect("tangent number fits f64") / (2.0 * factorial);
    }
    Ok(coeffs)
}

/// Upper bound on `sum_{l > l_max} |B_l|`. The tail of the tangent series is
/// controlled by `|B_l| <= 1.1 (2/pi)^{l+1}` for odd `l >= 3`.
fn series_tail_bound(l_max: usize) -> f64 {
    let q = 2.0 / std::f64::consts::PI;
    1.1 * q.powi(l_max as i32 + 2) / (1.0 - q)
}

/// Upper bound on the full series constant `B = sum_l |B_l|` (about 1.2787).
pub fn b_constant() -> f64 {
    let coeffs = series_coeffs(L_MAX_CAP).expect("cap is valid");
    coeffs.iter().map(|b| b.abs()).sum::<f64>() + series_tail_bound(L_MAX_CAP)
}

/// The constant `D_0 = 4B` appearing in the subset-probability bounds and in
/// the dominating branching process.
pub fn d0_constant() -> f64 {
    4.0 * b_constant()
}

/// Multilinear expansion coefficients: `(sum_{i<=r} s_i)^l = sum_k c_{l,k} e_k`
/// where `e_k` is the sum of all degree-`k` products of the spins and spins
/// square to one. Returns `c_{l,k}` for `k = 0..=min(l,r)`, exact.
///
/// Satisfies `sum_k binom(r,k) c_{l,k} = r^l` (all-ones evaluation) and
/// `c_{l,k} <= r^l / binom(r,k)`.
pub fn symmetric_expansion(l: usize, r: usize) -> Result<Vec<BigUint>> {
    if r == 0 {
        return Err(Error::Parameter("symmetric_expansion needs r >= 1".into()));
    }
    let width = l.min(r);
    let mut cur = vec![BigUint::zero(); width + 1];
    cur[0] = BigUint::one();
    for _ in 0..l {
        let mut next = vec![BigUint::zero(); width + 1];
        for (k, slot) in next.iter_mut().enumerate() {
            // multiply by e_1: e_{k-1} e_1 contributes k e_k, e_{k+1} e_1
            // contributes (r-k) e_k
            let mut acc = BigUint::zero();
            if k >= 1 {
                acc += cur[k - 1].clone() * BigUint::from(k);
            }
            if k + 1 <= width {
                acc += cur[k + 1].clone() * BigUint::from(r - k);
            }
            *slot = acc;
        }
        cur = next;
    }
    Ok(cur)
}

fn binom(r: usize, k: usize) -> f64 {
    if k > r {
        return 0.0;
    }
    let k = k.min(r - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (r - i) as f64 / (i + 1) as f64;
    }
    acc
}

fn binom_big(r: usize, k: usize) -> BigUint {
    if k > r {
        return BigUint::zero();
    }
    let mut acc = BigUint::one();
    for i in 0..k.min(r - k) {
        acc = acc * BigUint::from(r - i) / BigUint::from(i + 1);
    }
    acc
}

/// Build the rule table for all degrees `r <= d` at inverse temperature
/// `beta`, requiring `p_{0,r} >= 1 - epsilon` and truncating the series so
/// the tail is below `tol`.
pub fn build_rule_table(beta: f64, d: usize, epsilon: f64, tol: f64) -> Result<RuleTable> {
    if beta <= 0.0 {
        return Err(Error::Parameter(
            "generalized rule requires beta > 0 (at beta = 0 use the plain rule)".into(),
        ));
    }
    if d == 0 {
        return Err(Error::Parameter("rule table needs d >= 1".into()));
    }
    if !(0.0 < epsilon && epsilon < 1.0) {
        return Err(Error::Parameter(format!("epsilon={epsilon} outside (0,1)")));
    }
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tol={tol} must be positive")));
    }
    let bd = beta * d as f64;
    if bd >= 0.5 {
        return Err(Error::BetaTooLarge {
            r: d,
            msg: format!("beta*d = {bd} >= 1/2, series bounds do not apply"),
        });
    }

    // Smallest l_max whose geometric tail bound clears tol, clamped to the cap.
    let mut b_sum_probe = 1.3; // rough over-estimate, refined below
    let mut l_max = 5usize;
    while l_max < L_MAX_CAP && b_sum_probe * bd.powi(l_max as i32 + 1) / (1.0 - bd) >= tol {
        l_max += 1;
    }
    let b_coeffs = series_coeffs(l_max)?;
    b_sum_probe = b_coeffs.iter().map(|b| b.abs()).sum::<f64>() + series_tail_bound(l_max);
    let b_sum = b_sum_probe;
    let d0 = 4.0 * b_sum;

    let mut rules = Vec::with_capacity(d);
    for r in 1..=d {
        let br = beta * (r as f64);
        let tail_bound = b_sum * br.powi(l_max as i32 + 1) / (1.0 - br);

        // c triangle for this degree, exact, then C_k = sum_l B_l beta^l c_{l,k}.
        let mut c = vec![0.0f64; r + 1];
        let mut beta_pow = 1.0f64;
        for l in 0..=l_max {
            if l >= 1 {
                beta_pow *= beta;
            }
            if b_coeffs[l] == 0.0 || l == 0 {
                continue;
            }
            let row = symmetric_expansion(l, r)?;
            // all-ones identity: sum_k binom(r,k) c_{l,k} = r^l
            let check: BigUint = row
                .iter()
                .enumerate()
                .map(|(k, v)| v * binom_big(r, k))
                .sum();
            debug_assert_eq!(check, BigUint::from(r).pow(l as u32));
            for (k, v) in row.iter().enumerate().skip(1) {
                c[k] += b_coeffs[l] * beta_pow * v.to_f64().expect("c fits f64");
            }
        }

        let sign: Vec<i8> = c
            .iter()
            .map(|&x| if x < 0.0 { -1 } else { 1 })
            .collect();

        let mut p = vec![0.0f64; r + 1];
        for k in 2..=r {
            p[k] = 2.0 * c[k].abs() * (k as f64 + 1.0);
        }
        let off_center: f64 = (2..=r).map(|k| binom(r - 1, k - 1) * c[k].abs()).sum();
        p[1] = 2.0 * (c[1] - off_center);
        let used: f64 = (1..=r).map(|k| binom(r, k) * p[k]).sum();
        p[0] = 1.0 - used;

        if p[1] <= 0.0 {
            return Err(Error::BetaTooLarge {
                r,
                msg: format!("p_{{1,{r}}} = {} <= 0", p[1]),
            });
        }
        for (k, &pk) in p.iter().enumerate() {
            if !(0.0..=1.0).contains(&pk) {
                return Err(Error::BetaTooLarge {
                    r,
                    msg: format!("p_{{{k},{r}}} = {pk} outside [0,1]"),
                });
            }
            let bound = d0 * (2.0 * br).powi(k as i32);
            if binom(r, k) * pk > bound * (1.0 + 1e-12) {
                return Err(Error::BetaTooLarge {
                    r,
                    msg: format!(
                        "binom(r,k) p_{{{k},{r}}} = {} exceeds D0 (2 beta r)^k = {bound}",
                        binom(r, k) * pk
                    ),
                });
            }
        }
        if p[0] < 1.0 - epsilon {
            return Err(Error::BetaTooLarge {
                r,
                msg: format!("p_{{0,{r}}} = {} < 1 - epsilon = {}", p[0], 1.0 - epsilon),
            });
        }

        let mut size_cdf = vec![0.0f64; r + 1];
        let mut acc = 0.0;
        for k in 0..=r {
            acc += binom(r, k) * p[k];
            size_cdf[k] = acc;
        }
        debug_assert!((size_cdf[r] - 1.0).abs() < 1e-12);

        rules.push(DegreeRule {
            r,
            c,
            sign,
            p,
            size_cdf,
            tail_bound,
        });
    }

    Ok(RuleTable {
        beta,
        d,
        epsilon,
        tol,
        l_max,
        b_coeffs,
        b_sum,
        d0,
        rules,
    })
}

impl RuleTable {
    /// Rule data for degree `r` (1-based, `r <= d`).
    pub fn degree_rule(&self, r: usize) -> Result<&DegreeRule> {
        if r == 0 || r > self.d {
            return Err(Error::Parameter(format!(
                "rule table covers degrees 1..={}, asked for {r}",
                self.d
            )));
        }
        Ok(&self.rules[r - 1])
    }

    /// Draw an update support: first the size `k` with probability
    /// `binom(r,k) p_{k,r}`, then a uniform `k`-subset of the `r` local
    /// neighbor slots. Returned indices are sorted.
    pub fn sample_update_support<R: Rng>(&self, r: usize, rng: &mut R) -> Result<Vec<u8>> {
        let rule = self.degree_rule(r)?;
        let x: f64 = rng.gen();
        let mut k = rule.size_cdf.partition_point(|&c| c <= x);
        if k > r {
            k = r;
        }
        if k == 0 {
            return Ok(Vec::new());
        }
        let mut slots: Vec<u8> = (0..r as u8).collect();
        for i in 0..k {
            let j = rng.gen_range(i..r);
            slots.swap(i, j);
        }
        let mut subset = slots[..k].to_vec();
        subset.sort_unstable();
        Ok(subset)
    }

    /// Plus-probability of the symmetric update function on the exposed
    /// spins, using this table's stored sign for the subset size.
    pub fn plus_probability(&self, r: usize, spins: &[i8]) -> Result<f64> {
        let rule = self.degree_rule(r)?;
        let k = spins.len();
        let sign = if k >= 2 { rule.sign[k] } else { 1 };
        phi_eval(k, spins, sign)
    }
}

/// The symmetric monotone update function applied to the exposed subset:
/// `1/2` for the empty set, `(1+s_i)/2` for singletons, and
/// `1/2 + [sum s_i + sign * prod s_i] / (2(|A|+1))` for larger subsets.
/// Always in `[0,1]`, permutation symmetric, nondecreasing in each spin.
pub fn phi_eval(subset_size: usize, spins: &[i8], sign_c: i8) -> Result<f64> {
    if subset_size != spins.len() {
        return Err(Error::Shape(format!(
            "subset size {subset_size} but {} spins supplied",
            spins.len()
        )));
    }
    if spins.iter().any(|&s| s != 1 && s != -1) {
        return Err(Error::Shape("spins must be +-1".into()));
    }
    match subset_size {
        0 => Ok(0.5),
        1 => Ok(0.5 + 0.5 * spins[0] as f64),
        k => {
            let sum: i32 = spins.iter().map(|&s| s as i32).sum();
            let prod: i32 = spins.iter().map(|&s| s as i32).product();
            let s = sign_c as i32;
            Ok(0.5 + (sum + s * prod) as f64 / (2.0 * (k as f64 + 1.0)))
        }
    }
}

/// Heat-bath plus-probability `f(x) = e^x / (e^x + e^{-x})`.
pub fn heat_bath_plus(x: f64) -> f64 {
    0.5 * (x.tanh() + 1.0)
}

/// Maximum over all `2^r` spin inputs of the deviation between the expected
/// update function `E_A[Phi_A(sigma_A)]` and the heat-bath probability
/// `f(beta * sum sigma_i)`. Exact enumeration grouped by subset size;
/// by symmetry only the number of plus spins matters.
pub fn coupling_identity_check(table: &RuleTable, r: usize) -> Result<f64> {
    if r > 20 {
        return Err(Error::Size(format!("2^{r} inputs not enumerable")));
    }
    let rule = table.degree_rule(r)?;
    let mut max_dev = 0.0f64;
    for m in 0..=r {
        // m plus spins, r - m minus spins
        let mut expect = 0.0f64;
        for k in 0..=r {
            if rule.p[k] == 0.0 {
                continue;
            }
            for j in 0..=k.min(m) {
                if k - j > r - m {
                    continue;
                }
                let count = binom(m, j) * binom(r - m, k - j);
                if count == 0.0 {
                    continue;
                }
                let phi = match k {
                    0 => 0.5,
                    1 => {
                        if j == 1 {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    _ => {
                        let sum = 2.0 * j as f64 - k as f64;
                        let prod = if (k - j) % 2 == 0 { 1.0 } else { -1.0 };
                        0.5 + (sum + rule.sign[k] as f64 * prod) / (2.0 * (k as f64 + 1.0))
                    }
                };
                expect += rule.p[k] * count * phi;
            }
        }
        let s = 2.0 * m as f64 - r as f64;
        let dev = (expect - heat_bath_plus(table.beta * s)).abs();
        max_dev = max_dev.max(dev);
    }
    Ok(max_dev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn tangent_numbers_known_values() {
        let t = tangent_numbers(8);
        let expected: [u64; 8] = [1, 2, 16, 272, 7936, 353792, 22368256, 1903757312];
        for (n, &e) in expected.iter().enumerate() {
            assert_eq!(t[n + 1], BigUint::from(e));
        }
    }

    #[test]
    fn series_coeffs_low_order() {
        let b = series_coeffs(7).unwrap();
        assert_abs_diff_eq!(b[0], 0.5);
        assert_abs_diff_eq!(b[1], 0.5);
        assert_abs_diff_eq!(b[2], 0.0);
        assert_abs_diff_eq!(b[3], -1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b[4], 0.0);
        assert_abs_diff_eq!(b[5], 1.0 / 15.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b[7], -17.0 / 630.0, epsilon = 1e-15);
        assert!(series_coeffs(L_MAX_CAP + 1).is_err());
        assert!(series_coeffs(0).is_err());
    }

    #[test]
    fn series_coeffs_match_tanh_numerically() {
        // f(x) at several x reconstructed from the truncated series.
        let b = series_coeffs(40).unwrap();
        for &x in &[0.05, 0.1, 0.3] {
            let mut acc = 0.0;
            let mut xp = 1.0;
            for &c in &b {
                acc += c * xp;
                xp *= x;
            }
            assert_abs_diff_eq!(acc, heat_bath_plus(x), epsilon = 1e-14);
        }
    }

    #[test]
    fn symmetric_expansion_small_cases() {
        // (s1 + s2)^2 = 2 + 2 s1 s2
        let row = symmetric_expansion(2, 2).unwrap();
        assert_eq!(row[0], BigUint::from(2u32));
        assert_eq!(row[1], BigUint::zero());
        assert_eq!(row[2], BigUint::from(2u32));
        // l = 1: c_{1,1} = 1
        let row = symmetric_expansion(1, 5).unwrap();
        assert_eq!(row[0], BigUint::zero());
        assert_eq!(row[1], BigUint::one());
    }

    #[test]
    fn symmetric_expansion_all_ones_identity_and_bound() {
        for r in 1..=6usize {
            for l in 0..=12usize {
                let row = symmetric_expansion(l, r).unwrap();
                let total: BigUint = row
                    .iter()
                    .enumerate()
                    .map(|(k, v)| v * binom_big(r, k))
                    .sum();
                assert_eq!(total, BigUint::from(r).pow(l as u32));
                for (k, v) in row.iter().enumerate() {
                    assert!(v * binom_big(r, k) <= BigUint::from(r).pow(l as u32));
                }
            }
        }
    }

    #[test]
    fn rule_table_probability_bounds() {
        let beta = 0.01;
        let table = build_rule_table(beta, 4, 0.25, 1e-14).unwrap();
        for r in 1..=4 {
            let rule = table.degree_rule(r).unwrap();
            assert!(rule.p[1] >= beta / 8.0, "p_1 lower bound at r={r}");
            assert!(rule.p[1] <= 4.0 * table.b_sum * beta, "p_1 upper bound at r={r}");
            let sum: f64 = (0..=r).map(|k| binom(r, k) * rule.p[k]).sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
        }
        // C_1 > beta / 4 at r = 3
        let rule = table.degree_rule(3).unwrap();
        assert!(rule.c[1] > beta / 4.0);
    }

    #[test]
    fn rule_table_rejects_bad_parameters() {
        assert!(build_rule_table(0.0, 4, 0.25, 1e-14).is_err());
        assert!(build_rule_table(0.2, 4, 0.25, 1e-14).is_err()); // beta*d = 0.8
        assert!(build_rule_table(0.01, 4, 0.0, 1e-14).is_err());
    }

    #[test]
    fn phi_eval_spec_values() {
        assert_abs_diff_eq!(phi_eval(0, &[], 1).unwrap(), 0.5);
        assert_abs_diff_eq!(phi_eval(1, &[1], 1).unwrap(), 1.0);
        assert_abs_diff_eq!(phi_eval(1, &[-1], 1).unwrap(), 0.0);
        assert_abs_diff_eq!(phi_eval(2, &[1, 1], 1).unwrap(), 1.0);
        assert!(phi_eval(0, &[1], 1).is_err());
        assert!(phi_eval(1, &[2], 1).is_err());
    }

    #[test]
    fn phi_eval_is_symmetric_monotone_in_unit_interval() {
        for k in 2..=6usize {
            for sign in [-1i8, 1] {
                for mask in 0..(1u32 << k) {
                    let spins: Vec<i8> =
                        (0..k).map(|i| if mask >> i & 1 == 1 { 1 } else { -1 }).collect();
                    let v = phi_eval(k, &spins, sign).unwrap();
                    assert!((0.0..=1.0).contains(&v));
                    // symmetry: value depends only on the plus count
                    let mut sorted = spins.clone();
                    sorted.sort_unstable();
                    assert_abs_diff_eq!(v, phi_eval(k, &sorted, sign).unwrap());
                    // monotone: flipping any minus up cannot decrease
                    for i in 0..k {
                        if spins[i] == -1 {
                            let mut up = spins.clone();
                            up[i] = 1;
                            assert!(phi_eval(k, &up, sign).unwrap() >= v - 1e-15);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn coupling_identity_exact_cases() {
        let table = build_rule_table(0.05, 3, 0.25, 1e-14).unwrap();
        // balanced input: both sides exactly 1/2 by oddness
        let rule = table.degree_rule(2).unwrap();
        let mut expect = 0.0;
        for k in 0..=2 {
            for j in 0..=k {
                let count = binom(1, j) * binom(1, k - j);
                let phi = match k {
                    0 => 0.5,
                    1 => j as f64,
                    _ => {
                        let sum = 2.0 * j as f64 - k as f64;
                        let prod = if (k - j) % 2 == 0 { 1.0 } else { -1.0 };
                        0.5 + (sum + rule.sign[k] as f64 * prod) / (2.0 * (k as f64 + 1.0))
                    }
                };
                expect += rule.p[k] * count * phi;
            }
        }
        assert_abs_diff_eq!(expect, 0.5, epsilon = 1e-15);

        assert!(coupling_identity_check(&table, 3).unwrap() < 1e-10);
        let t5 = build_rule_table(0.02, 5, 0.25, 1e-14).unwrap();
        assert!(coupling_identity_check(&t5, 5).unwrap() < 1e-10);
    }

    #[test]
    fn coupling_deviation_shrinks_with_tol() {
        let loose = build_rule_table(0.04, 4, 0.25, 1e-6).unwrap();
        let tight = build_rule_table(0.04, 4, 0.25, 1e-14).unwrap();
        let dev_loose = coupling_identity_check(&loose, 4).unwrap();
        let dev_tight = coupling_identity_check(&tight, 4).unwrap();
        assert!(dev_tight <= dev_loose + 1e-15);
    }

    #[test]
    fn support_sampler_matches_table() {
        let table = build_rule_table(0.03, 3, 0.25, 1e-14).unwrap();
        let rule = table.degree_rule(3).unwrap();
        let mut rng = crate::rng::stream(9, &[1]);
        let n = 1_000_000usize;
        let mut count_empty = 0usize;
        let mut size_sum = 0usize;
        for _ in 0..n {
            let s = table.sample_update_support(3, &mut rng).unwrap();
            if s.is_empty() {
                count_empty += 1;
            }
            size_sum += s.len();
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            assert!(s.iter().all(|&i| i < 3));
        }
        let p0 = rule.p[0];
        let se = (p0 * (1.0 - p0) / n as f64).sqrt();
        assert!((count_empty as f64 / n as f64 - p0).abs() < 4.0 * se);
        let mean_size: f64 = (0..=3).map(|k| k as f64 * binom(3, k) * rule.p[k]).sum();
        let emp = size_sum as f64 / n as f64;
        assert!((emp - mean_size).abs() < 4.0 * (mean_size / n as f64).sqrt().max(1e-5));
    }

    #[test]
    fn support_sampler_degree_one() {
        let table = build_rule_table(0.05, 1, 0.25, 1e-14).unwrap();
        let rule = table.degree_rule(1).unwrap();
        let mut rng = crate::rng::stream(11, &[2]);
        let n = 200_000usize;
        let mut ones = 0usize;
        for _ in 0..n {
            let s = table.sample_update_support(1, &mut rng).unwrap();
            match s.len() {
                0 => {}
                1 => {
                    assert_eq!(s[0], 0);
                    ones += 1;
                }
                _ => panic!("impossible support size"),
            }
        }
        let p1 = rule.p[1];
        let se = (p1 * (1.0 - p1) / n as f64).sqrt();
        assert!((ones as f64 / n as f64 - p1).abs() < 4.0 * se);
    }
}
