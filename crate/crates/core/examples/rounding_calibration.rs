//! Success rate and certified gap of the rounding pipeline across a range of
//! discrepancy tolerances.
//!
//! Usage: `rounding_calibration [n] [k] [seeds] [theta ...]`

use giplab_core::lp::solve_lp;
use giplab_core::rounding::{gap_chain_check, round_pipeline, RoundingParams};
use giplab_core::stats::median;
use giplab_core::{BSpec, Error, Instance, RngHandle};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().and_then(|v| v.parse().ok()).unwrap_or(400);
    let k: usize = args.get(1).and_then(|v| v.parse().ok()).unwrap_or(12);
    let seeds: u64 = args.get(2).and_then(|v| v.parse().ok()).unwrap_or(50);
    let thetas: Vec<f64> = if args.len() > 3 {
        args[3..].iter().map(|v| v.parse().expect("theta")).collect()
    } else {
        vec![0.01, 0.02, 0.05, 0.1, 0.2]
    };
    let m = 2;
    let lps: Vec<(Instance, _)> = (0..seeds)
        .map(|s| {
            let inst = Instance::generate(m, n, BSpec::Zeros, &mut RngHandle::new(s, 0)).unwrap();
            let lp = solve_lp(&inst).unwrap();
            (inst, lp)
        })
        .collect();
    println!("theta,success,pool_too_small,median_cert_gap,median_zt,chain_ok");
    for theta in thetas {
        let mut params = RoundingParams::with_k(m, n, k);
        params.theta = Some(theta);
        let (mut ok, mut small, mut chain) = (0, 0, true);
        let (mut gaps, mut zt) = (Vec::new(), Vec::new());
        for (s, (inst, lp)) in lps.iter().enumerate() {
            match round_pipeline(inst, lp, &params, &mut RngHandle::new(s as u64, 1)) {
                Ok(c) => {
                    zt.push(c.diagnostics.get("z_t").copied().unwrap_or(f64::NAN));
                    if c.feasible {
                        ok += 1;
                        gaps.push(c.certified_gap);
                        chain &= gap_chain_check(&c, inst, lp);
                    }
                }
                Err(Error::PoolTooSmall { available, .. }) => {
                    small += 1;
                    zt.push(available as f64);
                }
                Err(e) => panic!("{e}"),
            }
        }
        println!(
            "{theta},{},{small},{},{},{chain}",
            ok as f64 / seeds as f64,
            median(&gaps),
            median(&zt)
        );
    }
}
