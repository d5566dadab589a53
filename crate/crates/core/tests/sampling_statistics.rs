use giplab_core::numerics::{norm2, normal_cdf, normal_pdf};
use giplab_core::random::band_sample;
use giplab_core::stats::{ks_pvalue, ks_statistic};
use giplab_core::{solve_lp, BSpec, Instance, RngHandle};
use rayon::prelude::*;

#[test]
fn fractional_columns_are_rarely_long() {
    let (m, n) = (3, 1000);
    let limit = 4.0 * (n as f64).ln().sqrt() + (m as f64).sqrt();
    let hits: usize = (0..500u64)
        .into_par_iter()
        .map(|seed| {
            let inst = Instance::generate(m, n, BSpec::Zeros, &mut RngHandle::new(seed, 0)).unwrap();
            let sol = solve_lp(&inst).unwrap();
            let longest = sol.s.iter().map(|&i| norm2(&inst.column(i))).fold(0.0, f64::max);
            usize::from(longest >= limit)
        })
        .sum();
    assert!(hits as f64 / 500.0 <= 0.01, "{hits} of 500 instances");
}

#[test]
fn gaussian_rhs_passes_validation() {
    let ok = (0..1000u64)
        .filter(|&seed| {
            Instance::generate(3, 100, BSpec::Gaussian, &mut RngHandle::new(seed, 0))
                .unwrap()
                .validate_b()
        })
        .count();
    assert!(ok as f64 / 1000.0 >= 0.999, "{ok} of 1000");
}

/// CDF of `L U + s' N` for `U` uniform on `[0, 1]` and `N` standard normal.
fn uniform_plus_normal_cdf(y: f64, l: f64, sd: f64) -> f64 {
    let g = |z: f64| z * normal_cdf(z) + normal_pdf(z);
    sd / l * (g(y / sd) - g((y - l) / sd))
}

#[test]
fn accepted_y_follows_the_band_law() {
    // Given Z = z, Y is N(omega z / s^2, 1 / s^2); with z uniform on [0, nu]
    // that is a uniform of width nu omega / s^2 plus independent noise.
    for (cell, &(omega, nu)) in [(1.0, 0.1), (1.0, 0.5), (3.0, 0.5)].iter().enumerate() {
        let s2: f64 = 1.0 + omega * omega;
        let (l, sd) = (nu * omega / s2, 1.0 / s2.sqrt());
        let mut rng = RngHandle::new(77, cell as u64);
        let ys: Vec<f64> = (0..200_000)
            .map(|_| band_sample(omega, nu, &mut rng).unwrap())
            .filter(|d| d.accepted)
            .map(|d| d.y)
            .collect();
        let d = ks_statistic(&ys, |y| uniform_plus_normal_cdf(y, l, sd));
        let p = ks_pvalue(d, ys.len());
        assert!(p >= 0.001, "omega {omega}, nu {nu}: D = {d}, p = {p}");
    }
}

#[test]
fn accepted_y_is_standard_normal_without_tilt() {
    let mut rng = RngHandle::new(78, 0);
    let ys: Vec<f64> = (0..200_000)
        .map(|_| band_sample(0.0, 0.3, &mut rng).unwrap())
        .filter(|d| d.accepted)
        .map(|d| d.y)
        .collect();
    let d = ks_statistic(&ys, normal_cdf);
    assert!(ks_pvalue(d, ys.len()) >= 0.001);
}
