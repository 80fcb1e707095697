//! Acceptance suite. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! exits non-zero if any criterion fails.
//!
//! Pass criterion numbers as arguments to run a subset:
//! `cargo test -p beamlp-core --test acceptance -- 2 3 8`.

use std::process::ExitCode;
use std::time::Instant;

use beamlp::beams::GaussianBeam;
use beamlp::construction::Construction;
use beamlp::gram::{
    density_condition, density_lhs, gershgorin, gram_entry, theoretical_r, DENSITY_THRESHOLD,
};
use beamlp::linalg::{inv_sqrt_eigen, inv_sqrt_series, matrix_inf_norm, HermitianMatrix};
use beamlp::localize::{beam_localization, ortho_localizations, tube_grid};
use beamlp::ortho::{
    average_bound_check, check_orthonormality, default_grid_degree, f_bounds_check,
    verify_corollary_scaling, verify_lp_lower_bounds, LpOptions,
};
use beamlp::quad::{inner_product, integral_identity_check, SphereGrid};
use beamlp::sphere::{canonical_frame, UnitVec};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<(bool, String), String>;

struct Suite {
    selected: Vec<u32>,
    failures: u32,
    ran: u32,
}

impl Suite {
    fn run(&mut self, id: u32, name: &str, budget_s: f64, body: impl FnOnce() -> Check) {
        if !self.selected.is_empty() && !self.selected.contains(&id) {
            return;
        }
        self.ran += 1;
        let start = Instant::now();
        let outcome = body();
        let secs = start.elapsed().as_secs_f64();
        let in_budget = secs <= budget_s;
        let (ok, detail) = match outcome {
            Ok((ok, d)) => (ok && in_budget, d),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            self.failures += 1;
        }
        let tag = if ok { "PASS" } else { "FAIL" };
        let budget = if in_budget { "" } else { " over budget" };
        println!("[{tag}] {id:>2} {name}: {detail} [{secs:.1} s / {budget_s:.0} s{budget}]");
    }
}

fn random_beam(k: u32, rng: &mut ChaCha8Rng) -> GaussianBeam<f64> {
    let pole = loop {
        let v: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 > 1e-4 && n2 <= 1.0 {
            break UnitVec::from_array(v).expect("nonzero");
        }
    };
    let alpha = rng.gen_range(0.0..std::f64::consts::TAU);
    GaussianBeam::new(k, canonical_frame(&pole).rotated_in_plane(alpha))
}

fn gram_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for k in [8u32, 16, 32, 64] {
        let grid = SphereGrid::<f64>::exact(2 * k as usize).map_err(|e| e.to_string())?;
        for _ in 0..20 {
            let (b1, b2) = (random_beam(k, &mut rng), random_beam(k, &mut rng));
            let z = gram_entry(&b1, &b2).map_err(|e| e.to_string())?;
            let q = inner_product(&b1, &b2, &grid);
            worst = worst.max((z - q).norm());
        }
    }
    Ok((worst <= 1e-9, format!("max |closed form - quadrature| = {worst:.2e} (tol 1e-9, 80 pairs)")))
}

fn density_constant() -> Check {
    let lhs: f64 = density_lhs(1.0 / 400.0);
    let at_400 = density_condition(1.0 / 400.0).map_err(|e| e.to_string())?;
    let at_half = density_condition(0.5).map_err(|e| e.to_string())?;
    let ok = at_400 && (0.0390..=0.0400).contains(&lhs) && lhs <= DENSITY_THRESHOLD && !at_half;
    Ok((
        ok,
        format!("lhs(1/400) = {lhs:.5} <= 1/25: {at_400}; condition(1/2) = {at_half}"),
    ))
}

fn r_decomposition() -> Check {
    let lo = theoretical_r::<f64>(1.0 / 400.0, 400).map_err(|e| e.to_string())?;
    let hi = theoretical_r::<f64>(1.0 / 400.0, 4000).map_err(|e| e.to_string())?;
    let near = hi.near_groups();
    let ok = (0.0390..=0.0400).contains(&near) && hi.group_iii < 1e-10 && lo.group_iii > 1.0;
    Ok((
        ok,
        format!(
            "group I+II = {near:.5}; group III = {:.2e} at k=4000, {:.3e} at k=400",
            hi.group_iii, lo.group_iii
        ),
    ))
}

struct MidRun {
    detail: String,
    ok: bool,
    average: Option<(f64, f64)>,
}

fn mid_construction() -> Result<MidRun, String> {
    let (k, density) = (512u32, 0.02);
    let c = Construction::<f64>::for_density(density, k, 0).map_err(|e| e.to_string())?;
    let m = c.m();
    let r = c.gram.r_emp;
    let dominant = c.gershgorin.dominant && r < 0.05;
    let fef = c.ortho.fef_residual;
    let orth = check_orthonormality(&c.ortho, None).map_err(|e| e.to_string())?;
    let orth_err = orth.max_diag_error.max(orth.max_off_diag);
    let grid = SphereGrid::exact(default_grid_degree(k, &[4.0])).map_err(|e| e.to_string())?;
    let rep = verify_lp_lower_bounds(&c.ortho, &[4.0], &grid, &LpOptions::default())
        .map_err(|e| e.to_string())?
        .remove(0);
    let headline = rep.rows.iter().all(|r| r.headline_ok);
    let chain = rep.rows.iter().all(|r| r.chain_ok);
    let avg = average_bound_check(&rep, density);
    let ok = m == 20 && dominant && fef <= 1e-10 && orth_err <= 1e-9 && headline && chain;
    Ok(MidRun {
        detail: format!(
            "m={m}, r_emp={r:.2e}, |FEF-I|={fef:.1e}, |<u,u>-I|={orth_err:.1e}, \
             min |u_i|_4/|Q|_4={:.4}, chain {chain}",
            rep.min_ratio
        ),
        ok,
        average: Some((avg.average, avg.bound)),
    })
}

fn paper_construction() -> Check {
    let (k, density) = (2000u32, 1.0 / 400.0);
    let c = Construction::<f64>::for_density(density, k, 0).map_err(|e| e.to_string())?;
    let near = theoretical_r::<f64>(density, k).map_err(|e| e.to_string())?.near_groups();
    let r = c.gram.r_emp;
    let fb = f_bounds_check(&c.ortho, r);
    let ps = [3.0, 4.0, 5.0, 6.0];
    let grid = SphereGrid::exact(default_grid_degree(k, &ps)).map_err(|e| e.to_string())?;
    let opts = LpOptions {
        rel_tol: 1e-6,
        max_doublings: 2,
        ..LpOptions::default()
    };
    let reps = verify_lp_lower_bounds(&c.ortho, &ps, &grid, &opts).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    let mut norms_ok = true;
    for rep in &reps {
        let change = rep
            .rows
            .iter()
            .filter_map(|r| r.rel_change)
            .fold(0.0f64, f64::max);
        norms_ok &= rep.pass;
        parts.push(format!("p={} ratio>={:.4} dchg={change:.1e}", rep.p, rep.min_ratio));
    }
    let ok = c.m() == 10
        && r <= near
        && c.separation.pass
        && c.gershgorin.dominant
        && c.gershgorin.eig_check
        && fb.pass
        && fb.strong_applicable
        && norms_ok;
    Ok((
        ok,
        format!(
            "m={}, r_emp={r:.2e} <= {near:.4}, d_min={:.3} sep {}, F bounds {}; {}",
            c.m(),
            c.separation.d_min,
            c.separation.pass,
            fb.pass,
            parts.join("; ")
        ),
    ))
}

fn scaling_slopes() -> Check {
    let ks = [64u32, 128, 256, 512, 1024];
    let ps = [4.0, 6.0, f64::INFINITY];
    let mut mins = vec![Vec::new(); ps.len()];
    for &k in &ks {
        let c = Construction::<f64>::for_density(0.02, k, 0).map_err(|e| e.to_string())?;
        let grid = SphereGrid::exact(default_grid_degree(k, &ps)).map_err(|e| e.to_string())?;
        let reps = verify_lp_lower_bounds(&c.ortho, &ps, &grid, &LpOptions::default())
            .map_err(|e| e.to_string())?;
        for (slot, rep) in mins.iter_mut().zip(&reps) {
            slot.push(rep.min_norm_u());
        }
    }
    let expected = [0.125, 1.0 / 6.0, 0.25];
    let mut ok = true;
    let mut parts = Vec::new();
    for ((p, vals), want) in ps.iter().zip(&mins).zip(expected) {
        let rep = verify_corollary_scaling(*p, &ks, vals, 0.02).map_err(|e| e.to_string())?;
        ok &= rep.pass && (rep.expected - want).abs() < 1e-12;
        parts.push(format!("p={p}: slope {:.4} (want {want:.4})", rep.fit.slope));
    }
    Ok((ok, parts.join("; ")))
}

fn localization() -> Check {
    let (k, density) = (2000u32, 1.0 / 400.0);
    let c = Construction::<f64>::for_density(density, k, 0).map_err(|e| e.to_string())?;
    let grid = tube_grid(k, 1.0, 16).map_err(|e| e.to_string())?;
    let reps = ortho_localizations(&c.ortho, 1.0, &grid).map_err(|e| e.to_string())?;
    let min_in = reps.iter().map(|r| r.mass_in).fold(f64::INFINITY, f64::min);
    let in_ok = reps.iter().all(|r| r.mass_in >= 0.125 && !r.under_resolved);

    let beam = GaussianBeam::new(k, canonical_frame(&UnitVec::new(0.2, -0.5, 0.8).expect("nonzero")));
    let fine = tube_grid(k, 0.5, 32).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for cc in [0.5, 1.0, 1.5, 2.0] {
        let b = beam_localization(&beam, cc, &fine).map_err(|e| e.to_string())?;
        worst = worst.max((b.mass_in - libm::erf(cc)).abs());
    }
    Ok((
        in_ok && worst <= 0.02,
        format!("min mass_in(u_i) = {min_in:.4} (>= 1/8); max |mass_in(Q) - erf(c)| = {worst:.2e} (tol 0.02)"),
    ))
}

fn integral_identity() -> Check {
    let worst = (0..=200u32)
        .map(|k| (integral_identity_check::<f64>(k) - 2.0 / (f64::from(k) + 1.0)).abs())
        .fold(0.0f64, f64::max);
    Ok((worst <= 1e-12, format!("max error {worst:.2e} over k = 0..200 (tol 1e-12)")))
}

fn linear_algebra() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (mut worst_f, mut worst_g) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let n = rng.gen_range(1..=24);
        let mut b = HermitianMatrix::<f64>::zeros(n);
        for i in 0..n {
            b[(i, i)] = Complex::new(rng.gen_range(-1.0..1.0), 0.0);
            for j in (i + 1)..n {
                let z = Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                b[(i, j)] = z;
                b[(j, i)] = z.conj();
            }
        }
        let norm = matrix_inf_norm(&b);
        let target = rng.gen_range(0.01..=0.5);
        let mut e = HermitianMatrix::identity(n);
        e.add_scaled(&b, target / norm);
        let fe = inv_sqrt_eigen(&e).map_err(|e| e.to_string())?;
        let (fs, _) = inv_sqrt_series(&e, 1e-13).map_err(|e| e.to_string())?;
        worst_f = worst_f.max(fe.max_abs_diff(&fs));
        worst_g = worst_g.max(gershgorin(&e, 1e-10).max_excess);
    }
    Ok((
        worst_f <= 1e-8 && worst_g <= 1e-10,
        format!("max |F_eig - F_series| = {worst_f:.2e} (tol 1e-8); max disc excess = {worst_g:.1e} (tol 1e-10)"),
    ))
}

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut suite = Suite {
        selected,
        failures: 0,
        ran: 0,
    };
    suite.run(1, "gram oracle equivalence", 30.0, gram_oracle);
    suite.run(2, "density constant", 1.0, density_constant);
    suite.run(3, "theoretical r decomposition", 1.0, r_decomposition);
    let mut mid: Option<Result<MidRun, String>> = None;
    suite.run(4, "construction k=512 D=0.02", 300.0, || {
        let run = mid_construction();
        let out = match &run {
            Ok(r) => Ok((r.ok, r.detail.clone())),
            Err(e) => Err(e.clone()),
        };
        mid = Some(run);
        out
    });
    suite.run(5, "construction k=2000 D=1/400", 900.0, paper_construction);
    suite.run(6, "scaling slopes k=64..1024 D=0.02", 1800.0, scaling_slopes);
    suite.run(7, "localization k=2000 D=1/400", 600.0, localization);
    suite.run(8, "integral identity", 5.0, integral_identity);
    suite.run(9, "linear-algebra invariants", 60.0, linear_algebra);
    suite.run(10, "basis-average bound (run of 4)", 300.0, || {
        let run = match mid.take() {
            Some(r) => r,
            None => mid_construction(),
        };
        let (avg, bound) = run?.average.ok_or("no p=4 norms")?;
        Ok((avg >= bound, format!("average {avg:.4e} >= (D/3)|Q|_4 = {bound:.4e}")))
    });
    println!(
        "acceptance: {} of {} criteria passed",
        suite.ran - suite.failures,
        suite.ran
    );
    if suite.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
