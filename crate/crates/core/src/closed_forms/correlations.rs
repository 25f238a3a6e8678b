use alloc::vec::Vec;

use super::Segment;
use crate::error::{bail_param, Result};
use crate::exact::{absorption_distribution, single_particle_absorption};
use crate::lattice::{GraphSpec, SiteSet};
use crate::scalar::{lift, lower, pow, Exact, Scalar};

/// Points `x_1 < ... < x_n` and whether the moment is centered.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRequest {
    pub points: SiteSet,
    pub centered: bool,
}

fn check_density(rho: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rho) {
        bail_param!("density {rho} outside [0,1]");
    }
    Ok(())
}

fn check_points(seg: &Segment, points: &SiteSet) -> Result<()> {
    if points.is_empty() {
        bail_param!("need at least one point");
    }
    seg.check_sites(points)
}

/// `E[eta(x)] = rho_L + (rho_R - rho_L) h(x) / h(N)` on the segment.
pub fn density_profile_segment(seg: &Segment, rho_left: f64, rho_right: f64, x: usize) -> Result<f64> {
    check_density(rho_left)?;
    check_density(rho_right)?;
    if x == 0 || x >= seg.big_n {
        bail_param!("site {x} outside the bulk 1..={}", seg.big_n - 1);
    }
    Ok(rho_left + (rho_right - rho_left) * seg.h::<f64>(x) / seg.h::<f64>(seg.big_n))
}

/// Density at `x` on any graph, through the single-walker absorption law.
pub fn density_profile(g: &GraphSpec, x: usize) -> Result<f64> {
    if g.is_homogeneous_segment() {
        if let Ok(seg) = Segment::from_graph(g) {
            return density_profile_segment(&seg, g.rho_left, g.rho_right, x);
        }
    }
    let p = single_particle_absorption(g, x)?;
    Ok(g.rho_left + (g.rho_right - g.rho_left) * p)
}

/// Centered pair correlation of `eta(x)` and `eta(y)`, `x < y`.
pub fn two_point_correlation(seg: &Segment, rho_left: f64, rho_right: f64, x: usize, y: usize) -> Result<f64> {
    check_density(rho_left)?;
    check_density(rho_right)?;
    if !(1 <= x && x < y && y < seg.big_n) {
        bail_param!("need 1 <= x < y <= {}, got x={x}, y={y}", seg.big_n - 1);
    }
    let (il, ir) = (1.0 / seg.omega_left, 1.0 / seg.omega_right);
    let n = seg.big_n as f64;
    let hn = il + ir + n - 2.0;
    let gap = rho_right - rho_left;
    Ok(-gap * gap * (il + x as f64 - 1.0) * (ir + n - 1.0 - y as f64) / (hn * hn * (hn - 1.0)))
}

fn subsequence(xs: &[usize], mask: u64) -> Vec<usize> {
    (0..xs.len()).filter(|j| mask >> j & 1 == 1).map(|j| xs[j]).collect()
}

fn psi_in<S: Scalar>(seg: &Segment, xs: &[usize], flip_odd: bool) -> S {
    let n = xs.len();
    let hn: S = seg.h(seg.big_n);
    let mut total = S::zero();
    for mask in 0u64..1 << n {
        let chosen = subsequence(xs, mask);
        let mut term: S = seg.product(&chosen);
        for (r, &x) in xs.iter().enumerate() {
            if mask >> r & 1 == 0 {
                term = term * (seg.h::<S>(x) / hn.clone());
            }
        }
        let j = chosen.len();
        let negative = if flip_odd { j % 2 == 1 } else { (n - j) % 2 == 1 };
        total = if negative { total - term } else { total + term };
    }
    total
}

/// `psi(x_1..x_n)`: signed sum over subsequences `S` of
/// `P_S(all at N) * prod_{r not in S} h(x_r)/h(N)`, with sign
/// `(-1)^{n - |S|}`.
pub fn psi(seg: &Segment, points: &SiteSet) -> Result<f64> {
    check_points(seg, points)?;
    Ok(if seg.exact() {
        lower(&psi_in::<Exact>(seg, points.sites(), false))
    } else {
        psi_in::<f64>(seg, points.sites(), false)
    })
}

/// The same sum with sign `(-1)^{|S|}`. It agrees with [`psi`] for even `n`
/// and has the opposite sign for odd `n`.
pub fn psi_signed_as_printed(seg: &Segment, points: &SiteSet) -> Result<f64> {
    check_points(seg, points)?;
    Ok(psi_in::<f64>(seg, points.sites(), true))
}

fn non_centered_in<S: Scalar>(seg: &Segment, rho_left: f64, rho_right: f64, xs: &[usize]) -> S {
    let rl: S = lift(rho_left);
    let gap: S = lift::<S>(rho_right) - rl.clone();
    let n = xs.len();
    let mut total = S::zero();
    for mask in 0u64..1 << n {
        let chosen = subsequence(xs, mask);
        let j = chosen.len();
        total = total + pow(&rl, n - j) * pow(&gap, j) * seg.product::<S>(&chosen);
    }
    total
}

/// Centered or plain `n`-point moment on the segment.
pub fn n_point_correlation(seg: &Segment, rho_left: f64, rho_right: f64, req: &CorrelationRequest) -> Result<f64> {
    check_density(rho_left)?;
    check_density(rho_right)?;
    check_points(seg, &req.points)?;
    let xs = req.points.sites();
    let n = xs.len();
    Ok(match (req.centered, seg.exact()) {
        (true, true) => {
            let gap: Exact = lift::<Exact>(rho_right) - lift::<Exact>(rho_left);
            lower(&(pow(&gap, n) * psi_in::<Exact>(seg, xs, false)))
        }
        (true, false) => pow(&(rho_right - rho_left), n) * psi_in::<f64>(seg, xs, false),
        (false, true) => lower(&non_centered_in::<Exact>(seg, rho_left, rho_right, xs)),
        (false, false) => non_centered_in::<f64>(seg, rho_left, rho_right, xs),
    })
}

/// Moments on an arbitrary graph from the exact dual level laws:
/// `E[prod eta(x_i)] = sum_l rho_R^l rho_L^{n-l} P(xi_inf(N) = l)`.
pub fn n_point_correlation_graph(g: &GraphSpec, req: &CorrelationRequest) -> Result<f64> {
    if req.points.is_empty() {
        bail_param!("need at least one point");
    }
    let plain = |s: &SiteSet| -> Result<f64> {
        let t = absorption_distribution(g, s)?;
        let n = s.len();
        Ok(t.probs.iter().enumerate().map(|(l, p)| pow(&g.rho_right, l) * pow(&g.rho_left, n - l) * p).sum())
    };
    if !req.centered {
        return plain(&req.points);
    }
    let xs = req.points.sites();
    let means = xs
        .iter()
        .map(|&x| plain(&SiteSet::from_mask(1 << (x - 1))))
        .collect::<Result<Vec<f64>>>()?;
    let mut total = 0.0;
    for mask in 0u64..1 << xs.len() {
        let chosen = SiteSet::from_mask(subsequence(xs, mask).iter().fold(0, |m, &x| m | 1 << (x - 1)));
        let mut term = if chosen.is_empty() { 1.0 } else { plain(&chosen)? };
        for (r, m) in means.iter().enumerate() {
            if mask >> r & 1 == 0 {
                term *= -m;
            }
        }
        total += term;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::homogeneous_segment;

    fn req(v: &[usize], n: usize, centered: bool) -> CorrelationRequest {
        CorrelationRequest { points: SiteSet::new(v.to_vec(), n).unwrap(), centered }
    }

    #[test]
    fn linear_profile() {
        let s = Segment::unit(4).unwrap();
        for (x, v) in [(1, 0.35), (2, 0.5), (3, 0.65)] {
            assert!((density_profile_segment(&s, 0.2, 0.8, x).unwrap() - v).abs() < 1e-15);
        }
        assert_eq!(density_profile_segment(&s, 0.0, 1.0, 2).unwrap(), 0.5);
    }

    #[test]
    fn two_point_value() {
        let s = Segment::unit(3).unwrap();
        assert!((two_point_correlation(&s, 0.2, 0.8, 1, 2).unwrap() + 0.02).abs() < 1e-15);
        assert_eq!(two_point_correlation(&s, 0.4, 0.4, 1, 2).unwrap(), 0.0);
        assert!(two_point_correlation(&s, 0.2, 0.8, 2, 2).is_err());
    }

    #[test]
    fn centered_pair_matches_two_point() {
        let s = Segment::new(6, 0.5, 3.0).unwrap();
        for x in 1..5 {
            for y in x + 1..6 {
                let a = n_point_correlation(&s, 0.1, 0.7, &req(&[x, y], 5, true)).unwrap();
                let b = two_point_correlation(&s, 0.1, 0.7, x, y).unwrap();
                assert!((a - b).abs() < 1e-15, "{x},{y}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn one_point_plain_is_density() {
        let s = Segment::new(5, 2.0, 0.5).unwrap();
        let a = n_point_correlation(&s, 0.3, 0.9, &req(&[2], 4, false)).unwrap();
        assert!((a - density_profile_segment(&s, 0.3, 0.9, 2).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn formulas_match_dual_route() {
        let g = homogeneous_segment(4, 1.5, 0.5, 0.2, 0.8).unwrap();
        let s = Segment::from_graph(&g).unwrap();
        for centered in [false, true] {
            for pts in [&[1usize, 2, 3][..], &[2, 4], &[1, 3, 4]] {
                let r = req(pts, 4, centered);
                let a = n_point_correlation(&s, 0.2, 0.8, &r).unwrap();
                let b = n_point_correlation_graph(&g, &r).unwrap();
                assert!((a - b).abs() < 1e-12, "{pts:?} centered={centered}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn printed_sign_differs_for_odd_orders() {
        let s = Segment::unit(5).unwrap();
        let p = SiteSet::new(alloc::vec![1, 2, 4], 4).unwrap();
        let a = psi(&s, &p).unwrap();
        let b = psi_signed_as_printed(&s, &p).unwrap();
        assert!(a.abs() > 1e-6);
        assert!((a + b).abs() < 1e-15);
    }
}
