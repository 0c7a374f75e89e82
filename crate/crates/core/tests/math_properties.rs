use std::f64::consts::PI;

use proptest::prelude::*;
use qlwe_core::zq_math::{
    center_mod, crt_combine, dft_amplitude, fold_table, gcd, rho_s, solve_mod, IntTable, ZMatrix,
};
use qlwe_core::Complex64;

fn table() -> impl Strategy<Value = IntTable> {
    (-40i64..40, prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..40)).prop_map(|(start, v)| {
        IntTable::new(start, v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
    })
}

proptest! {
    #[test]
    fn parseval(f in table(), q in 2u64..48) {
        let folded: f64 = fold_table(&f, q, 0).iter().map(|v| v.norm_sqr()).sum();
        let spectrum: f64 = dft_amplitude(&f, q).unwrap().iter().map(|v| v.norm_sqr()).sum();
        prop_assert!((spectrum - folded).abs() <= 1e-10 * folded.max(1e-300));
    }

    #[test]
    fn poisson_summation(s in prop::sample::select(vec![0.5, 1.0, 2.0, 3.0]), ratio in 2.0f64..6.0, c in 0.0f64..1.0) {
        let r = ratio * s;
        let reach = (12.0 * r / s).ceil() as i64;
        let lhs: f64 = (-reach..=reach).map(|k| rho_s(r, k as f64 * s + c)).sum();
        let dual = (12.0 * s / r).ceil() as i64 + 1;
        let rhs: f64 = (-dual..=dual)
            .map(|k| {
                let y = k as f64 / s;
                rho_s(1.0 / r, y) * (2.0 * PI * c * y).cos()
            })
            .sum::<f64>()
            * r
            / s;
        prop_assert!((lhs - rhs).abs() <= 1e-8 * lhs);
    }

    #[test]
    fn crt_inverts_reduction(a in 2u64..60, b in 2u64..60, c in 1u64..40, seed in any::<u64>()) {
        prop_assume!(gcd(a, b) == 1 && gcd(a, c) == 1 && gcd(b, c) == 1);
        let q = a * b * c;
        let x = seed % q;
        let residues: Vec<(u64, u64)> = [a, b, c].iter().map(|&m| (x % m, m)).collect();
        prop_assert_eq!(crt_combine(&residues).unwrap(), (x, q));
    }

    #[test]
    fn centered_representatives(x in any::<i64>(), q in 1u64..100_000) {
        let c = center_mod(x as i128, q);
        prop_assert!(2 * c as i128 > -(q as i128) && 2 * c as i128 <= q as i128);
        prop_assert_eq!((x as i128 - c as i128).rem_euclid(q as i128), 0);
    }

    #[test]
    fn solve_mod_solutions_satisfy_system(
        entries in prop::collection::vec(-50i64..50, 9),
        s in prop::collection::vec(-50i64..50, 3),
        q in prop::sample::select(vec![7u64, 12, 25, 30, 49, 97]),
    ) {
        let m = ZMatrix::from_rows(&entries.chunks(3).map(|r| r.to_vec()).collect::<Vec<_>>());
        let y = m.mul_mod(&s, q);
        if let Some(found) = solve_mod(&m, &y, q) {
            prop_assert_eq!(m.mul_mod(&found, q), y);
        }
    }
}

/// Relative mass of `ρ_r` on `Z^n` outside the ball of radius `t·r·√n`.
fn outside_mass(n: usize, r: f64, t: f64) -> f64 {
    let reach = (t * r * (n as f64).sqrt() + 8.0 * r).ceil() as i64;
    let radius2 = (t * r).powi(2) * n as f64;
    let axis: Vec<i64> = (-reach..=reach).collect();
    let mut total = 0.0;
    let mut outside = 0.0;
    let mut idx = vec![0usize; n];
    loop {
        let p: Vec<f64> = idx.iter().map(|&i| axis[i] as f64).collect();
        let w: f64 = p.iter().map(|&x| rho_s(r, x)).product();
        total += w;
        if p.iter().map(|x| x * x).sum::<f64>() > radius2 {
            outside += w;
        }
        let mut k = 0;
        while k < n {
            idx[k] += 1;
            if idx[k] < axis.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
    }
    outside / total
}

#[test]
fn banaszczyk_tail_decays_within_bound() {
    for n in 1..=3 {
        for r in [1.0, 2.5, 4.0] {
            let mut previous = f64::INFINITY;
            for t in [1.0, 1.5, 2.0] {
                let mass = outside_mass(n, r, t);
                let bound = (t * (2.0 * PI * std::f64::consts::E).sqrt() * (-PI * t * t).exp()).powi(n as i32);
                assert!(mass <= bound, "n={n} r={r} t={t}: {mass} > {bound}");
                assert!(mass <= previous);
                previous = mass;
            }
        }
    }
}
