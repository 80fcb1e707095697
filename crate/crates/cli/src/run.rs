//! Subcommand pipelines. Each returns a filled [`RunReport`].

use std::time::Instant;

use beamlp::beams::GaussianBeam;
use beamlp::construction::Construction;
use beamlp::gram::{
    density_condition, density_lhs, gershgorin, gram_entry, theoretical_r, ADMISSIBLE_R,
    DENSITY_THRESHOLD, GERSHGORIN_TOL,
};
use beamlp::linalg::{inv_sqrt_eigen, inv_sqrt_series, seeded_perturbed_identity};
use beamlp::localize::{beam_localization, ortho_localizations, tube_grid, NODES_PER_WIDTH};
use beamlp::ortho::{
    average_bound_check, check_orthonormality, f_bounds_check, verify_corollary_scaling,
    verify_lp_lower_bounds, LpBoundReport, LpOptions, OrthoSet,
};
use beamlp::quad::{inner_product, integral_identity_check, SphereGrid};
use beamlp::sphere::{random_frames, PoleSet};

use crate::config::{fmt_p, ExperimentConfig};
use crate::error::CliError;
use crate::report::*;

/// FEF residual accepted for a construction.
pub const FEF_TOL: f64 = 1e-10;
/// Allowed gap between a beam's tube mass and `erf(c)`.
pub const PROFILE_TOL: f64 = 0.02;
/// Slack on the localization inequalities (quadrature rounding).
pub const MASS_SLACK: f64 = 1e-9;

struct Clock {
    on: bool,
    last: Instant,
    stages: Vec<Timing>,
}

impl Clock {
    fn new(on: bool) -> Self {
        Self {
            on,
            last: Instant::now(),
            stages: Vec::new(),
        }
    }

    fn lap(&mut self, stage: &str) {
        if self.on {
            let now = Instant::now();
            self.stages.push(Timing {
                stage: stage.to_string(),
                seconds: (now - self.last).as_secs_f64(),
            });
            self.last = now;
        }
    }

    fn finish(self) -> Option<Vec<Timing>> {
        self.on.then_some(self.stages)
    }
}

fn pole_set(cfg: &ExperimentConfig, k: u32) -> Result<PoleSet<f64>, CliError> {
    let ps = if let Some(path) = &cfg.poles {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        PoleSet::from_text(&text)?
    } else if let Some(m) = cfg.m {
        beamlp::sphere::generate_poles(m, cfg.seed)
    } else if let Some(d) = cfg.density {
        let ps = PoleSet::for_density(d, k, cfg.seed)?;
        if ps.m() == 0 {
            return Err(CliError::Usage(format!(
                "density {d} gives an empty family at k = {k}"
            )));
        }
        ps
    } else {
        return Err(CliError::Usage("give --density or --m".into()));
    };
    if let Some(path) = &cfg.poles_out {
        std::fs::write(path, ps.to_text()).map_err(|e| CliError::io(path, e))?;
    }
    Ok(ps)
}

fn construct(cfg: &ExperimentConfig, k: u32) -> Result<Construction<f64>, CliError> {
    let ps = pole_set(cfg, k)?;
    Ok(Construction::from_poles_with_tol(k, ps, cfg.tol.series)?)
}

fn finite_or_none(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn pole_stats(c: &Construction<f64>, checks: &mut Vec<Check>) -> PoleStats {
    let s = &c.separation;
    if !s.degenerate {
        checks.push(Check::ge("poles.d_min_lower", s.d_min, s.lower));
        checks.push(Check::le("poles.d_min_upper", s.d_min, s.upper));
    }
    PoleStats {
        m: c.m(),
        seed: c.poles.seed,
        d_min: finite_or_none(s.d_min),
        lower: s.lower,
        upper: finite_or_none(s.upper),
        pass: s.pass,
    }
}

fn gram_stats(c: &Construction<f64>, checks: &mut Vec<Check>) -> GramStats {
    let g = &c.gershgorin;
    checks.push(Check::lt("gram.r_emp", c.gram.r_emp, 1.0));
    checks.push(Check::le("gram.eigen_containment", g.max_excess, g.tolerance));
    GramStats {
        k: c.k,
        r_emp: c.gram.r_emp,
        dominant: g.dominant,
        interval: [g.interval.0, g.interval.1],
        min_eigenvalue: g.eigenvalues.first().copied().unwrap_or(1.0),
        max_eigenvalue: g.eigenvalues.last().copied().unwrap_or(1.0),
        max_excess: g.max_excess,
        eig_tol: g.tolerance,
        eig_check: g.eig_check,
    }
}

fn f_stats(os: &OrthoSet<f64>, cfg: &ExperimentConfig, checks: &mut Vec<Check>) -> FStats {
    let fb = f_bounds_check(os, os.r_emp);
    checks.push(Check::le("f.fef_residual", os.fef_residual, FEF_TOL));
    if let Some(s) = &os.series {
        checks.push(Check::le("f.series_agreement", s.diff, 10.0 * s.tol));
    }
    checks.push(Check::le("f.h_norm", os.h_norm, 6.0 * os.r_emp + fb.slack));
    let max_row_sum = os.f_row_sums.iter().copied().fold(0.0, f64::max);
    if fb.strong_applicable {
        checks.push(Check::ge("f.diag_min", os.f_diag_range.0, 0.75 - fb.slack));
        checks.push(Check::le("f.diag_max", os.f_diag_range.1, 1.25 + fb.slack));
        checks.push(Check::le("f.max_row_sum", max_row_sum, 0.25 + fb.slack));
    }
    FStats {
        diag_min: os.f_diag_range.0,
        diag_max: os.f_diag_range.1,
        h_norm: os.h_norm,
        max_row_sum,
        fef_residual: os.fef_residual,
        series_terms: os.series.map(|s| s.terms),
        series_diff: os.series.map(|s| s.diff),
        series_tol: cfg.tol.series,
        strong_applicable: fb.strong_applicable,
        bounds_pass: fb.pass,
    }
}

fn ortho_stats(os: &OrthoSet<f64>, cfg: &ExperimentConfig, checks: &mut Vec<Check>) -> Result<OrthoStats, CliError> {
    let r = check_orthonormality(os, None)?;
    let err = r.max_diag_error.max(r.max_off_diag);
    checks.push(Check::le("orthonormality.max_error", err, cfg.tol.orthonormality));
    Ok(OrthoStats {
        max_diag_error: r.max_diag_error,
        max_off_diag: r.max_off_diag,
        tol: cfg.tol.orthonormality,
        n_phi: r.n_phi,
        n_theta: r.n_theta,
        pass: err <= cfg.tol.orthonormality,
    })
}

fn lp_options(cfg: &ExperimentConfig) -> LpOptions<f64> {
    LpOptions {
        rel_tol: cfg.tol.doubling,
        max_doublings: cfg.tol.max_doublings,
        ..LpOptions::default()
    }
}

fn norm_reports(os: &OrthoSet<f64>, cfg: &ExperimentConfig) -> Result<Vec<LpBoundReport<f64>>, CliError> {
    let grid = SphereGrid::exact(cfg.grid_degree(os.k))?;
    Ok(verify_lp_lower_bounds(os, &cfg.p, &grid, &lp_options(cfg))?)
}

fn norm_table(rep: &LpBoundReport<f64>, cfg: &ExperimentConfig, checks: &mut Vec<Check>) -> NormTable {
    let p = fmt_p(rep.p);
    let chain_margin = rep
        .rows
        .iter()
        .map(|r| (r.norm_u - r.chain_lower) / rep.baseline)
        .fold(f64::INFINITY, f64::min);
    checks.push(Check::ge(format!("norms.p={p}.chain_margin"), chain_margin, -rep.chain_slack));
    if rep.p.is_finite() {
        let change = rep
            .rows
            .iter()
            .map(|r| if r.converged { r.rel_change.unwrap_or(0.0) } else { f64::INFINITY })
            .fold(0.0, f64::max);
        checks.push(Check::le(format!("norms.p={p}.doubling_change"), change, cfg.tol.doubling));
    }
    if rep.theorem_range {
        checks.push(Check::ge(format!("norms.p={p}.min_ratio"), rep.min_ratio, 0.5));
    }
    NormTable {
        p,
        baseline: rep.baseline,
        half_baseline: 0.5 * rep.baseline,
        theorem_range: rep.theorem_range,
        min_ratio: rep.min_ratio,
        margin: rep.min_ratio / 0.5,
        n_phi: rep.n_phi,
        n_theta: rep.n_theta,
        pass: rep.pass,
        rows: rep
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| NormRow {
                i,
                norm_u: r.norm_u,
                norm_q: r.norm_q,
                ratio: r.ratio,
                chain_lower: r.chain_lower,
                chain_ok: r.chain_ok,
                headline_ok: r.headline_ok,
                converged: r.converged,
                rel_change: r.rel_change,
            })
            .collect(),
    }
}

fn localization_rows(
    os: &OrthoSet<f64>,
    cfg: &ExperimentConfig,
    checks: &mut Vec<Check>,
) -> Result<Vec<LocRow>, CliError> {
    let c_min = cfg.c.iter().copied().fold(f64::INFINITY, f64::min);
    let grid = tube_grid(os.k, c_min, NODES_PER_WIDTH)?;
    let mut rows = Vec::new();
    for &c in &cfg.c {
        let reps = ortho_localizations(os, c, &grid)?;
        if reps.iter().all(|r| r.floor_applicable) {
            let min_in = reps.iter().map(|r| r.mass_in).fold(f64::INFINITY, f64::min);
            checks.push(Check::ge(format!("localization.c={c}.min_mass_in"), min_in, reps[0].bound_in));
        }
        let out_gap = reps.iter().map(|r| r.mass_out - r.bound_out_l2).fold(f64::NEG_INFINITY, f64::max);
        checks.push(Check::le(format!("localization.c={c}.mass_out_excess"), out_gap, MASS_SLACK));
        let shift_gap = reps.iter().map(|r| r.in_shift - r.in_shift_bound).fold(f64::NEG_INFINITY, f64::max);
        checks.push(Check::le(format!("localization.c={c}.mass_in_shift_excess"), shift_gap, MASS_SLACK));
        rows.extend(reps.iter().map(|r| LocRow {
            c,
            i: r.i,
            w: r.w,
            mass_in: r.mass_in,
            mass_out: r.mass_out,
            beam_mass_in: r.beam_mass_in,
            beam_mass_out: r.beam_mass_out,
            bound_in: r.bound_in,
            bound_out: r.bound_out,
            bound_out_l2: r.bound_out_l2,
            in_shift: r.in_shift,
            in_shift_bound: r.in_shift_bound,
            floor_applicable: r.floor_applicable,
            under_resolved: r.under_resolved,
            pass: r.pass(),
        }));
    }
    Ok(rows)
}

fn theory_stats(density: f64, k: u32, r_emp: f64, checks: &mut Vec<Check>) -> Result<TheoryStats, CliError> {
    let t = theoretical_r(density, k)?;
    if t.group_iii < ADMISSIBLE_R {
        checks.push(Check::le("theory.r_emp", r_emp, t.r_theory));
    }
    Ok(TheoryStats {
        density,
        k,
        c0: t.c0,
        group_i: t.group_i,
        group_ii: t.group_ii,
        group_iii: t.group_iii,
        r_theory: t.r_theory,
        admissible: t.admissible,
    })
}

/// Full pipeline for one degree.
pub fn run_construct(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let k = cfg.require_k()?;
    cfg.require_sizing()?;
    let mut clock = Clock::new(cfg.timings);
    let mut rep = RunReport::new("construct", cfg);
    let c = construct(cfg, k)?;
    clock.lap("construction");
    let mut checks = Vec::new();
    rep.poles = Some(pole_stats(&c, &mut checks));
    rep.gram = Some(gram_stats(&c, &mut checks));
    rep.f = Some(f_stats(&c.ortho, cfg, &mut checks));
    rep.orthonormality = Some(ortho_stats(&c.ortho, cfg, &mut checks)?);
    clock.lap("orthonormality");
    let reps = norm_reports(&c.ortho, cfg)?;
    for r in &reps {
        rep.norms.push(norm_table(r, cfg, &mut checks));
    }
    if let Some(d) = cfg.density.filter(|_| cfg.poles.is_none()) {
        for r in reps.iter().filter(|r| r.theorem_range) {
            let a = average_bound_check(r, d);
            let p = fmt_p(r.p);
            checks.push(Check::ge(format!("average.p={p}"), a.average, a.bound));
            rep.average.push(AverageStats {
                p,
                density: d,
                average: a.average,
                bound: a.bound,
                pass: a.pass,
            });
        }
    }
    clock.lap("norms");
    if k > 0 {
        rep.localization = localization_rows(&c.ortho, cfg, &mut checks)?;
        clock.lap("localization");
        if let Some(d) = cfg.density {
            rep.theory = Some(theory_stats(d, k, c.gram.r_emp, &mut checks)?);
        }
    }
    rep.checks = checks;
    rep.timings = clock.finish();
    rep.settle();
    Ok(rep)
}

/// Growth exponents of `min_i ‖u_i‖_p` over a list of degrees.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    if cfg.k_list.len() < 3 {
        return Err(CliError::Usage("a sweep needs --k-list with at least three degrees".into()));
    }
    if cfg.poles.is_some() {
        return Err(CliError::Usage("--poles cannot be combined with a sweep".into()));
    }
    cfg.require_sizing()?;
    let mut clock = Clock::new(cfg.timings);
    let mut rep = RunReport::new("sweep", cfg);
    let mut ks = cfg.k_list.clone();
    ks.sort_unstable();
    ks.dedup();
    for &k in &ks {
        let c = construct(cfg, k)?;
        let reps = norm_reports(&c.ortho, cfg)?;
        rep.sweep.push(SweepPoint {
            k,
            m: c.m(),
            r_emp: c.gram.r_emp,
            min_norms: reps.iter().map(|r| r.min_norm_u()).collect(),
        });
        clock.lap(&format!("k={k}"));
    }
    for (pi, &p) in cfg.p.iter().enumerate() {
        if p < 2.0 {
            continue;
        }
        let vals: Vec<f64> = rep.sweep.iter().map(|s| s.min_norms[pi]).collect();
        let s = verify_corollary_scaling(p, &ks, &vals, cfg.tol.slope)?;
        let name = fmt_p(p);
        rep.checks.push(Check::le(
            format!("slope.p={name}.deviation"),
            (s.fit.slope - s.expected).abs(),
            s.tolerance,
        ));
        rep.slopes.push(SlopeRow {
            p: name,
            slope: s.fit.slope,
            intercept: s.fit.intercept,
            expected: s.expected,
            tol: s.tolerance,
            max_residual: s.fit.residuals.iter().fold(0.0f64, |m, r| m.max(r.abs())),
            pass: s.pass,
        });
    }
    rep.timings = clock.finish();
    rep.settle();
    Ok(rep)
}

/// Oracle cross-checks that need no large grids.
pub fn run_verify(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let mut clock = Clock::new(cfg.timings);
    let mut rep = RunReport::new("verify", cfg);
    let checks = &mut rep.checks;

    let mut worst = 0.0f64;
    for (n, k) in [8u32, 16, 32].into_iter().enumerate() {
        let grid = SphereGrid::<f64>::exact(2 * k as usize)?;
        let frames = random_frames::<f64>(20, cfg.seed.wrapping_add(n as u64));
        for pair in frames.chunks(2) {
            let (a, b) = (GaussianBeam::new(k, pair[0]), GaussianBeam::new(k, pair[1]));
            worst = worst.max((gram_entry(&a, &b)? - inner_product(&a, &b, &grid)).norm());
        }
    }
    checks.push(Check::le("gram_vs_quadrature", worst, 1e-9));
    clock.lap("gram_vs_quadrature");

    let (mut f_diff, mut excess) = (0.0f64, 0.0f64);
    for s in 0..20u64 {
        let n = 2 + (s as usize * 7) % 19;
        let norm = 0.05 + 0.45 * (s as f64) / 19.0;
        let e = seeded_perturbed_identity::<f64>(n, norm, cfg.seed.wrapping_add(s));
        let fe = inv_sqrt_eigen(&e)?;
        let (fs, _) = inv_sqrt_series(&e, 1e-13)?;
        f_diff = f_diff.max(fe.max_abs_diff(&fs));
        excess = excess.max(gershgorin(&e, GERSHGORIN_TOL).max_excess);
    }
    checks.push(Check::le("eigen_vs_series", f_diff, 1e-8));
    checks.push(Check::le("gershgorin_containment", excess, GERSHGORIN_TOL));
    clock.lap("linear_algebra");

    let identity_err = (0..=200u32)
        .map(|k| (integral_identity_check::<f64>(k) - 2.0 / (f64::from(k) + 1.0)).abs())
        .fold(0.0f64, f64::max);
    checks.push(Check::le("integral_identity", identity_err, 1e-12));
    let at_99 = integral_identity_check::<f64>(99);
    checks.push(Check::le("integral_identity.k=99", (at_99 - 0.02).abs(), 1e-12));

    let lhs = density_lhs(1.0 / 400.0);
    let holds = density_condition(1.0 / 400.0)?;
    checks.push(Check::le("density_condition.lhs", lhs, DENSITY_THRESHOLD));
    checks.push(Check::ge("density_condition.holds", f64::from(u8::from(holds)), 1.0));

    let small = Construction::<f64>::new(32, 8, cfg.seed)?;
    let orth = check_orthonormality(&small.ortho, None)?;
    checks.push(Check::le(
        "orthonormality.k=32.m=8",
        orth.max_diag_error.max(orth.max_off_diag),
        cfg.tol.orthonormality,
    ));
    clock.lap("pipeline");
    rep.timings = clock.finish();
    rep.settle();
    Ok(rep)
}

/// Which matrix the `gram` subcommand exports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum MatrixKind {
    Gram,
    F,
}

/// Gram matrix (or `F`) of a construction with its certificate.
pub fn run_gram(cfg: &ExperimentConfig, which: MatrixKind) -> Result<(RunReport, String), CliError> {
    let k = cfg.require_k()?;
    cfg.require_sizing()?;
    let mut clock = Clock::new(cfg.timings);
    let mut rep = RunReport::new("gram", cfg);
    let c = construct(cfg, k)?;
    clock.lap("construction");
    let mut checks = Vec::new();
    rep.poles = Some(pole_stats(&c, &mut checks));
    rep.gram = Some(gram_stats(&c, &mut checks));
    rep.f = Some(f_stats(&c.ortho, cfg, &mut checks));
    let (name, mat) = match which {
        MatrixKind::Gram => ("gram", &c.gram.e),
        MatrixKind::F => ("f", &c.ortho.f),
    };
    rep.matrix = Some(MatrixDump {
        which: name.to_string(),
        order: mat.order(),
        entries: mat.as_slice().iter().map(|z| [z.re, z.im]).collect(),
    });
    rep.checks = checks;
    rep.timings = clock.finish();
    rep.settle();
    Ok((rep, mat.to_text()))
}

/// Tube masses of the family and the beam profile against `erf(c)`.
pub fn run_localize(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let k = cfg.require_k()?;
    cfg.require_sizing()?;
    if k == 0 {
        return Err(CliError::Usage("localization needs k >= 1".into()));
    }
    let mut clock = Clock::new(cfg.timings);
    let mut rep = RunReport::new("localize", cfg);
    let c = construct(cfg, k)?;
    clock.lap("construction");
    let mut checks = Vec::new();
    rep.gram = Some(gram_stats(&c, &mut checks));
    rep.localization = localization_rows(&c.ortho, cfg, &mut checks)?;
    clock.lap("localization");
    let c_min = cfg.c.iter().copied().fold(f64::INFINITY, f64::min);
    let fine = tube_grid(k, c_min, 2 * NODES_PER_WIDTH)?;
    let beam = c.beams()[0];
    for &cc in &cfg.c {
        let b = beam_localization(&beam, cc, &fine)?;
        let erf = libm::erf(cc);
        let diff = (b.mass_in - erf).abs();
        checks.push(Check::le(format!("beam_profile.c={cc}"), diff, PROFILE_TOL));
        rep.beam_profile.push(ProfileRow {
            c: cc,
            w: b.w,
            mass_in: b.mass_in,
            erf,
            diff,
        });
    }
    clock.lap("beam_profile");
    rep.checks = checks;
    rep.timings = clock.finish();
    rep.settle();
    Ok(rep)
}
