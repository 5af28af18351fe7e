//! Acceptance suite: one test per criterion, each printing a single
//! `[acceptance]` line with the verdict and the worst residual.

use std::process::Command;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sixvertex::cli::{positive_params, random_params, NORMALIZATION_TOL};
use sixvertex::monodromy::{contract_Z, contract_column_Z, contract_psi1, contract_psi2, verify_action_identities, ActionIdentity};
use sixvertex::partition::{izergin_Z, tsuchiya_Z};
use sixvertex::scalar::{c, rel_err};
use sixvertex::type_one::{psi1_det_form, psi1_double_sum, psi1_homogeneous, psi1_shift_ladder, richardson};
use sixvertex::type_two::psi2;
use sixvertex::vertex::yang_baxter_residual;

struct Worst {
    value: f64,
    at: String,
}

impl Worst {
    fn new() -> Self {
        Self { value: 0.0, at: String::new() }
    }

    fn see(&mut self, r: f64, at: impl FnOnce() -> String) {
        if r.is_nan() || r > self.value {
            self.value = r;
            self.at = at();
        }
    }
}

/// Prints the criterion line; each entry is `(label, worst residual, tolerance)`.
fn report(k: usize, name: &str, worst: &[(&str, &Worst, f64)]) -> bool {
    let pass = worst.iter().all(|(_, w, tol)| w.value < *tol);
    let parts: Vec<String> = worst
        .iter()
        .map(|(label, w, tol)| format!("{label} {:.3e} < {tol:e}? {} at {}", w.value, w.value < *tol, w.at))
        .collect();
    println!("[acceptance] #{k} {name}: {} ({})", if pass { "PASS" } else { "FAIL" }, parts.join("; "));
    pass
}

fn rel(a: C64, b: C64) -> f64 {
    if a == b {
        0.0
    } else {
        rel_err(a, b)
    }
}

#[test]
fn criterion_1_yang_baxter() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut w = Worst::new();
    for d in 0..100 {
        let (a, b) = (rng.gen_range(0.1..1.0), rng.gen_range(0.1..1.0));
        let r = yang_baxter_residual(c(a), c(b), c(0.5)).unwrap();
        w.see(r, || format!("draw {d} (λ={a:.4}, μ={b:.4})"));
    }
    assert!(report(1, "Yang-Baxter, 100 draws", &[("max residual", &w, 1e-12)]));
}

#[test]
fn criterion_2_action_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut w = Worst::new();
    for n in 2..=4 {
        for d in 0..20 {
            let p = random_params(&mut rng, n);
            for which in ActionIdentity::ALL {
                for i in 1..n {
                    let r = verify_action_identities(&p, which, i).unwrap();
                    w.see(r, || format!("{} N={n} i={i} draw {d}", which.name()));
                }
            }
        }
    }
    assert!(report(2, "action identities, N=2..4, 20 draws", &[("max residual", &w, 1e-9)]));
}

#[test]
fn criterion_3_partition_function() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let (mut wz, mut wi) = (Worst::new(), Worst::new());
    for n in 1..=4 {
        for d in 0..20 {
            let p = random_params(&mut rng, n);
            let r = rel(tsuchiya_Z(&p).unwrap(), contract_Z(&p).unwrap());
            wz.see(r, || format!("N={n} draw {d}"));
            if n <= 3 {
                let a = izergin_Z(&p.lambdas, &p.nus, p.eta).unwrap();
                let b = contract_column_Z(&p.lambdas, &p.nus, p.eta).unwrap();
                wi.see(rel(a, b), || format!("N={n} draw {d}"));
            }
        }
    }
    let entries = [("reflecting Z, N=1..4", &wz, 1e-9), ("Izergin Z, N=1..3", &wi, 1e-10)];
    assert!(report(3, "partition functions vs oracles, 20 draws", &entries));
}

#[test]
fn criterion_4_type_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let (mut wo, mut wd) = (Worst::new(), Worst::new());
    for n in 2..=4 {
        for d in 0..10 {
            let p = random_params(&mut rng, n);
            let z = contract_Z(&p).unwrap();
            let base = p.lambdas[0];
            let shifts: Vec<C64> = p.lambdas.iter().map(|&x| x - base).collect();
            for m in 1..n {
                for l in (m + 1)..=n {
                    let f = psi1_double_sum(&p, m, l).unwrap();
                    let o = contract_psi1(&p, m, l).unwrap() / z;
                    wo.see(rel(f, o), || format!("N={n} M={m} L={l} draw {d}"));
                    let det = psi1_det_form(base, &shifts, &p.nus, p.eta, p.zeta_plus, m, l).unwrap();
                    wd.see(rel(det, f), || format!("N={n} M={m} L={l} draw {d}"));
                }
            }
        }
    }
    let entries = [("double sum vs oracle", &wo, 1e-8), ("determinant form vs double sum", &wd, 1e-10)];
    assert!(report(4, "Type I, N=2..4, all M<L, 10 draws", &entries));
}

#[test]
fn criterion_5_type_one_homogeneous() {
    // δ ∈ {1e−2, 5e−3, 2.5e−3}, three-level Richardson, at λ = 0.3, ν = 0.45.
    let (lam, nu, eta, z) = (c(0.3), c(0.45), c(0.5), c(0.8));
    let mut per_n = Vec::new();
    for n in 2..=3 {
        let mut w = Worst::new();
        for m in 1..n {
            for l in (m + 1)..=n {
                let h = psi1_homogeneous(lam, nu, eta, z, n, m, l).unwrap();
                let ladder = psi1_shift_ladder(lam, nu, eta, z, n, m, l, 1e-2, 3).unwrap();
                w.see(rel(h, richardson(&ladder)), || format!("M={m} L={l}"));
            }
        }
        per_n.push(w);
    }
    let entries = [("N=2", &per_n[0], 1e-6), ("N=3", &per_n[1], 1e-6)];
    assert!(report(5, "Type I homogeneous vs 3-level Richardson", &entries));
}

#[test]
fn criterion_6_type_two() {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut w = Worst::new();
    for n in 2..=4 {
        for d in 0..10 {
            let p = random_params(&mut rng, n);
            let z = contract_Z(&p).unwrap();
            for m in 1..n {
                for l in 1..=n {
                    let f = psi2(&p, m, l).unwrap();
                    let o = contract_psi2(&p, m, l).unwrap() / z;
                    let r = if o.norm() == 0.0 { f.norm() } else { rel(f, o) };
                    w.see(r, || format!("N={n} M={m} L={l} draw {d}"));
                }
            }
        }
    }
    assert!(report(6, "Type II (corrected prefactor) vs oracle, N=2..4, 10 draws", &[("max rel err", &w, 1e-8)]));
}

#[test]
fn criterion_7_normalization_report() {
    let mut lines = Vec::new();
    for n in 2..=3 {
        let p = positive_params(n);
        let z = contract_Z(&p).unwrap();
        let mut s1 = c(0.0);
        for m in 1..n {
            for l in (m + 1)..=n {
                s1 += contract_psi1(&p, m, l).unwrap() / z;
            }
        }
        let mut s2 = c(0.0);
        for m in 1..n {
            for l in 1..=n {
                s2 += contract_psi2(&p, m, l).unwrap() / z;
            }
        }
        for (name, s) in [("sum Psi1", s1), ("sum Psi2", s2)] {
            let one = (s - 1.0).norm() < NORMALIZATION_TOL;
            lines.push(format!(
                "N={n} {name} = {:.12} {:+.12}i ({} 1 within {NORMALIZATION_TOL:e})",
                s.re,
                s.im,
                if one { "equals" } else { "does not equal" }
            ));
        }
    }
    println!("[acceptance] #7 normalization report (soft): REPORTED; {}", lines.join("; "));
}

fn run_binary(extra: &[&str], threads: &str) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_sixvertex"))
        .args(extra)
        .args(["--threads", threads, "--no-timing"])
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{extra:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).expect("utf-8 output")
}

#[test]
fn criterion_8_determinism() {
    let params = ["--lambda", "0.23,0.41,0.67,0.89", "--nu", "0.31,0.52,0.74,0.95", "--eta", "0.5", "--zeta-plus", "0.8"];
    let mut runs: Vec<Vec<&str>> = vec![vec!["--mode", "verify", "--seed", "7", "--draws", "5"]];
    for sweep in ["typeI", "typeII"] {
        let mut v = vec!["--mode", "sweep", "--sweep", sweep, "--method", "both"];
        v.extend(params);
        runs.push(v);
    }
    let mut mismatches = Vec::new();
    for args in &runs {
        let reference = run_binary(args, "1");
        for threads in ["1", "8", "8"] {
            if run_binary(args, threads) != reference {
                mismatches.push(format!("{} with --threads {threads}", args[1]));
            }
        }
    }
    let pass = mismatches.is_empty();
    println!(
        "[acceptance] #8 determinism, --threads 1 vs 8: {} ({} configurations; mismatches: {:?})",
        if pass { "PASS" } else { "FAIL" },
        runs.len(),
        mismatches
    );
    assert!(pass);
}
