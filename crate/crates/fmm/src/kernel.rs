//! Symmetric pair kernels.
//!
//! One evaluation per unordered pair (P, Q), P being the side with the lower
//! global cell index so both owners reproduce identical rounding. The force on
//! P is returned as a vector; Q receives its exact negation, so linear
//! momentum cancels term by term. Torque cancellation is arranged between the
//! two gradient carriers: every multipole pair also deposits the
//! monopole-sourced Hessian into the receiving Taylor set (the tidal field's
//! spin torque on that side's mass distribution), and the force vector carries
//! the matching quadrupole-coupling tangential component (3G/r^5) S R with
//! S = m_Q Q_P + m_P Q_Q, whose orbital torque is its exact opposite. The
//! radial force component is free of that constraint and takes the full
//! order-p radial projection of the mutual energy gradient.

use crate::derivs;
use crate::index::{find, leq, order_of, sub, MIDX, NCOEF};
use crate::types::CellMoments;

pub struct PairTerms {
    /// Force on P; Q receives the negation.
    pub force_p: [f64; 3],
    /// Potential increment for P's Taylor slot 0.
    pub l0_p: f64,
    /// Potential increment for Q's Taylor slot 0.
    pub l0_q: f64,
    /// Order-2 Taylor increments (slots 4..10) for P and Q: the other side's
    /// monopole Hessian, already divided by the multi-index factorials.
    pub hess_p: [f64; 6],
    pub hess_q: [f64; 6],
}

/// Point Newtonian kernel for two monopole cells. Leaf cells have no
/// children, so no Hessian content is needed.
#[inline]
pub fn mono_mono(p: &CellMoments, q: &CellMoments, gconst: f64) -> PairTerms {
    let r = [
        p.com[0] - q.com[0],
        p.com[1] - q.com[1],
        p.com[2] - q.com[2],
    ];
    let r2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
    let rinv = 1.0 / r2.sqrt();
    let pot = -gconst * rinv;
    let f = pot * rinv * rinv * p.mass() * q.mass();
    PairTerms {
        force_p: [f * r[0], f * r[1], f * r[2]],
        l0_p: q.mass() * pot,
        l0_q: p.mass() * pot,
        hess_p: [0.0; 6],
        hess_q: [0.0; 6],
    }
}

/// Unpack the symmetric second-moment tensor from scaled moments.
#[inline]
fn quad_tensor(m: &CellMoments) -> [[f64; 3]; 3] {
    let xx = 2.0 * m.mom[find([2, 0, 0])];
    let xy = m.mom[find([1, 1, 0])];
    let xz = m.mom[find([1, 0, 1])];
    let yy = 2.0 * m.mom[find([0, 2, 0])];
    let yz = m.mom[find([0, 1, 1])];
    let zz = 2.0 * m.mom[find([0, 0, 2])];
    [[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]]
}

/// Order-p mutual Taylor kernel; valid for multipole-multipole and
/// multipole-monopole pairs (a monopole side simply has zero higher moments).
pub fn multi_kernel(p: &CellMoments, q: &CellMoments, pord: usize, gconst: f64) -> PairTerms {
    let r = [
        p.com[0] - q.com[0],
        p.com[1] - q.com[1],
        p.com[2] - q.com[2],
    ];
    let r2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
    let d = derivs::tensor(r, gconst);

    let nc = crate::index::ncoef(pord);

    // Radial directional derivative of every tensor entry through order p.
    let mut rd = [0.0; NCOEF];
    for (i, v) in rd.iter_mut().enumerate().take(nc) {
        *v = r[0] * d[crate::index::bump(i, 0)]
            + r[1] * d[crate::index::bump(i, 1)]
            + r[2] * d[crate::index::bump(i, 2)];
    }

    let mut l0_p = 0.0;
    let mut l0_q = 0.0;
    let mut w = 0.0;
    for a in 0..nc {
        let ma = p.mom[a];
        let orda = order_of(a);
        // Potential felt by Q from P's moments (D^a g at -R gives (-1)^|a|).
        if ma != 0.0 {
            l0_q += ma * d[a];
        }
        for b in 0..nc {
            let mb = q.mom[b];
            if mb == 0.0 {
                continue;
            }
            let ordb = order_of(b);
            if orda + ordb > pord {
                continue;
            }
            let sign = if ordb % 2 == 0 { 1.0 } else { -1.0 };
            if a == 0 {
                l0_p += sign * mb * d[b];
            }
            if ma != 0.0 {
                let ab = find([
                    MIDX[a][0] + MIDX[b][0],
                    MIDX[a][1] + MIDX[b][1],
                    MIDX[a][2] + MIDX[b][2],
                ]);
                w += sign * ma * mb * rd[ab];
            }
        }
    }

    // Tangential quadrupole coupling, torque-matched to the Hessian deposits.
    let qp = quad_tensor(p);
    let qq = quad_tensor(q);
    let mp = p.mass();
    let mq = q.mass();
    let mut sr = [0.0; 3];
    for i in 0..3 {
        for j in 0..3 {
            sr[i] += (mq * qp[i][j] + mp * qq[i][j]) * r[j];
        }
    }
    let rsr = r[0] * sr[0] + r[1] * sr[1] + r[2] * sr[2];
    let r5 = r2 * r2 * r2.sqrt();
    let ft = 3.0 * gconst / r5;
    let radial = -w / r2 - ft * rsr / r2;
    let force_p = [
        radial * r[0] + ft * sr[0],
        radial * r[1] + ft * sr[1],
        radial * r[2] + ft * sr[2],
    ];

    let mut hess_p = [0.0; 6];
    let mut hess_q = [0.0; 6];
    for (slot, idx) in (4..10).enumerate() {
        let dk = d[idx] / crate::index::FACT[idx];
        hess_p[slot] = mq * dk;
        hess_q[slot] = mp * dk;
    }

    PairTerms {
        force_p,
        l0_p,
        l0_q,
        hess_p,
        hess_q,
    }
}

/// Scaled-moment translation: moments about X become moments about X - t
/// (the new center), M'_k = sum_{j<=k} M_j t^{k-j} / (k-j)!.
pub fn m2m_shift(mom: &[f64; NCOEF], t: [f64; 3], pord: usize) -> [f64; NCOEF] {
    let nc = crate::index::ncoef(pord);
    let tp = crate::index::powers(t);
    let mut out = [0.0; NCOEF];
    for k in 0..nc {
        let mk = MIDX[k];
        let mut acc = 0.0;
        for j in 0..=k {
            if leq(MIDX[j], mk) && mom[j] != 0.0 {
                let dm = sub(mk, MIDX[j]);
                let di = find(dm);
                acc += mom[j] * tp[di] / crate::index::FACT[di];
            }
        }
        out[k] = acc;
    }
    out
}

/// Taylor recentering: coefficients about X become coefficients about X + t,
/// L'_j = sum_{k>=j} C(k,j) L_k t^{k-j}.
pub fn l2l_shift(taylor: &[f64; NCOEF], t: [f64; 3], pord: usize) -> [f64; NCOEF] {
    let nc = crate::index::ncoef(pord);
    let tp = crate::index::powers(t);
    let mut out = [0.0; NCOEF];
    for j in 0..nc {
        let mj = MIDX[j];
        let mut acc = 0.0;
        for k in j..nc {
            if leq(mj, MIDX[k]) && taylor[k] != 0.0 {
                let dm = sub(MIDX[k], mj);
                acc += crate::index::binom3(MIDX[k], mj) * taylor[k] * tp[find(dm)];
            }
        }
        out[j] = acc;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mono_matches_newton() {
        let p = CellMoments::point(2.0, [1.0, 0.0, 0.0]);
        let q = CellMoments::point(3.0, [-1.0, 0.0, 0.0]);
        let t = mono_mono(&p, &q, 1.0);
        // |F| = G m1 m2 / r^2 = 6/4, directed from P toward Q.
        assert!((t.force_p[0] - (-1.5)).abs() < 1e-14);
        assert!((t.l0_p - (3.0 * -0.5)).abs() < 1e-14);
        assert!((t.l0_q - (2.0 * -0.5)).abs() < 1e-14);
    }

    #[test]
    fn multi_kernel_reduces_to_newton_for_points() {
        let p = CellMoments::point(2.0, [0.3, -0.2, 0.9]);
        let q = CellMoments::point(0.7, [-1.1, 0.5, 0.0]);
        let a = mono_mono(&p, &q, 1.0);
        let b = multi_kernel(&p, &q, 3, 1.0);
        for c in 0..3 {
            assert!((a.force_p[c] - b.force_p[c]).abs() < 1e-14 * a.force_p[c].abs().max(1e-3));
        }
        assert!((a.l0_p - b.l0_p).abs() < 1e-14);
        assert!((a.l0_q - b.l0_q).abs() < 1e-14);
    }

    #[test]
    fn multi_kernel_approaches_direct_sum_of_clusters() {
        // Two 2-point clusters far apart: the order-3 mutual energy gradient
        // along R should be close to the true radial force.
        let eps = 0.3;
        let pa1 = [eps, 0.0, 0.0];
        let pa2 = [-eps, 0.0, 0.0];
        let pb1 = [10.0, eps, 0.0];
        let pb2 = [10.0, -eps, 0.0];
        let m = 1.0;

        // Build multipole cells about their centers of mass.
        let mut build = |x1: [f64; 3], x2: [f64; 3]| {
            let com = [
                0.5 * (x1[0] + x2[0]),
                0.5 * (x1[1] + x2[1]),
                0.5 * (x1[2] + x2[2]),
            ];
            let mut mom = [0.0; NCOEF];
            for x in [x1, x2] {
                let u = [x[0] - com[0], x[1] - com[1], x[2] - com[2]];
                let tp = crate::index::powers(u);
                for k in 0..NCOEF {
                    mom[k] += m * tp[k] / crate::index::FACT[k];
                }
            }
            CellMoments { com, mom }
        };
        let a = build(pa1, pa2);
        let b = build(pb1, pb2);
        assert!(a.mom[1].abs() < 1e-15 && a.mom[2].abs() < 1e-15);

        let t = multi_kernel(&a, &b, 3, 1.0);
        // Exact x force on cluster A by direct summation.
        let mut fx = 0.0;
        for xa in [pa1, pa2] {
            for xb in [pb1, pb2] {
                let d = [xa[0] - xb[0], xa[1] - xb[1], xa[2] - xb[2]];
                let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                fx += -m * m * d[0] / (r2 * r2.sqrt());
            }
        }
        // Truncation error at order 3 is O((eps/R)^4); monopole-only would be
        // off by ~1.3e-3 relative, so this bound proves the quadrupole term.
        assert!(
            (t.force_p[0] - fx).abs() < 1e-4 * fx.abs(),
            "{} vs {fx}",
            t.force_p[0]
        );
    }

    #[test]
    fn m2m_shift_preserves_mass_and_builds_quadrupole() {
        let mom = CellMoments::point(2.0, [0.0; 3]).mom;
        let shifted = m2m_shift(&mom, [0.5, 0.0, 0.0], 3);
        assert_eq!(shifted[0], 2.0);
        // Dipole x slot picks up m*t.
        assert!((shifted[find([1, 0, 0])] - 1.0).abs() < 1e-15);
        // Quadrupole xx slot picks up m*t^2/2.
        assert!((shifted[find([2, 0, 0])] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn l2l_shift_linear_term_feeds_constant() {
        let mut t = [0.0; NCOEF];
        t[find([1, 0, 0])] = 2.0; // phi = 2x
        let s = l2l_shift(&t, [0.25, 0.0, 0.0], 3);
        assert!((s[0] - 0.5).abs() < 1e-15);
        assert!((s[find([1, 0, 0])] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn l2l_shift_constant_unchanged() {
        let mut t = [0.0; NCOEF];
        t[0] = -3.0;
        let s = l2l_shift(&t, [0.1, -0.2, 0.7], 3);
        assert_eq!(s[0], -3.0);
        for v in &s[1..] {
            assert_eq!(*v, 0.0);
        }
    }

    #[test]
    fn l2l_composition_matches_single_shift() {
        // Shifting by t then u equals shifting by t+u for polynomial data.
        let mut t = [0.0; NCOEF];
        for (i, v) in t.iter_mut().enumerate() {
            *v = (i as f64 * 0.37).sin();
        }
        let a = l2l_shift(&l2l_shift(&t, [0.1, 0.2, -0.3], 3), [0.05, -0.1, 0.2], 3);
        let b = l2l_shift(&t, [0.15000000000000002, 0.1, -0.09999999999999998], 3);
        for k in 0..NCOEF {
            assert!((a[k] - b[k]).abs() < 1e-12 * a[k].abs().max(1.0));
        }
    }
}
